//! SIC achievable rates and the max-min objective.
//!
//! Hop 0 is a broadcast hop: relay `m` sees the source row `φ` through
//! `h_m`, and message `n` is decoded treating every message with power
//! `φ_i ≤ φ_n` (`i ≠ n`) as interference. Hop `b ≥ 1` is a multiple-access
//! hop whose coherent per-message gain at receiver `l` is
//! `g_{l,n} = |Σ_m h_{m,l} p_{m,n}|²`; interference is every `g_{l,i} ≤ g_{l,n}`.
//! Ties count as interference on both sides.
//!
//! A message must be decodable by every relay of hops `0..B-1` and by every
//! end user `l` that decodes it on the way to its own message, i.e. whenever
//! `g_{l,n} ≥ g_{l,l}` at the last hop.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_complex::Complex64;

use crate::model::HopChannel;
use crate::real::Real;
use crate::{ChannelRealization, Matrix, NoiseProfile};

/// `log₂(1 + signal / (interference + σ²))`.
fn sic_rate<T: Real>(signal: T, interference: T, noise_var: f64) -> T {
    let denom = interference + noise_var;
    if denom.value() <= 0.0 {
        // noiseless and interference-free
        return T::constant(if signal.value() > 0.0 { f64::INFINITY } else { 0.0 });
    }
    (signal / denom).ln_1p() * (1.0 / LN_2)
}

/// Rates of the broadcast hop, `M_1 × N` row-major.
pub(crate) fn broadcast_rates<T: Real>(first_hop: &[Complex64], phi: &[T], noise_var: f64) -> Vec<T> {
    let n_msgs = phi.len();
    let mut out = Vec::with_capacity(first_hop.len() * n_msgs);
    for h in first_hop {
        let h2 = h.norm_sqr();
        for n in 0..n_msgs {
            out.push(broadcast_rate(h2, phi, noise_var, n));
        }
    }
    out
}

fn broadcast_rate<T: Real>(h2: f64, phi: &[T], noise_var: f64, n: usize) -> T {
    let own = phi[n].value();
    let mut interference = T::zero();
    for (i, p) in phi.iter().enumerate() {
        if i != n && p.value() <= own {
            interference = interference + p.clone().square();
        }
    }
    sic_rate(phi[n].clone().square() * h2, interference * h2, noise_var)
}

/// Coherent gains `receivers × N` of a multiple-access hop fed by `block`
/// (`transmitters × N` row-major).
pub(crate) fn hop_gains<T: Real>(hop: &HopChannel, block: &[T], n_msgs: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(hop.receivers() * n_msgs);
    for l in 0..hop.receivers() {
        for q in 0..n_msgs {
            let (re, im) = coherent_sum(hop, block, n_msgs, l, q);
            out.push(re.square() + im.square());
        }
    }
    out
}

/// Real and imaginary parts of `Σ_m h_{m,l} p_{m,q}`.
pub(crate) fn coherent_sum<T: Real>(hop: &HopChannel, block: &[T], n_msgs: usize, l: usize, q: usize) -> (T, T) {
    let mut re = T::zero();
    let mut im = T::zero();
    for m in 0..hop.transmitters() {
        let h = hop.get(m, l);
        let p = &block[m * n_msgs + q];
        re = re + p.clone() * h.re;
        im = im + p.clone() * h.im;
    }
    (re, im)
}

/// Rates `receivers × N` from a gain table.
pub(crate) fn mac_rates<T: Real>(gains: &[T], n_msgs: usize, noise_var: f64) -> Vec<T> {
    let mut out = Vec::with_capacity(gains.len());
    for row in gains.chunks(n_msgs) {
        for n in 0..n_msgs {
            out.push(mac_rate(row, noise_var, n));
        }
    }
    out
}

fn mac_rate<T: Real>(gain_row: &[T], noise_var: f64, n: usize) -> T {
    let own = gain_row[n].value();
    let mut interference = T::zero();
    for (i, g) in gain_row.iter().enumerate() {
        if i != n && g.value() <= own {
            interference = interference + g.clone();
        }
    }
    sic_rate(gain_row[n].clone(), interference, noise_var)
}

/// Row offset of the block transmitting on `hop` in the stacked matrix.
pub(crate) fn block_offset(h: &ChannelRealization, hop: usize, rows: usize) -> usize {
    if hop == 0 {
        rows - 1
    } else {
        (0..hop - 1).map(|b| hop_receivers(h, b)).sum()
    }
}

pub(crate) fn hop_receivers(h: &ChannelRealization, hop: usize) -> usize {
    if hop == 0 {
        h.first_hop().len()
    } else {
        h.hop(hop).receivers()
    }
}

pub(crate) fn stacked_rows(h: &ChannelRealization) -> usize {
    1 + (0..h.num_hops() - 1).map(|b| hop_receivers(h, b)).sum::<usize>()
}

/// The rate constraint a message is limited by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Relay `node` receiving on `hop` (`hop < B - 1`).
    Relay { hop: usize, node: usize },
    /// End user `node` at the last hop.
    EndUser { node: usize },
}

/// Every rate and gain of one `(h, P)` pair.
#[derive(Debug, Clone)]
pub(crate) struct RateTable<T> {
    pub n_msgs: usize,
    /// Per hop, `receivers × N` rates.
    pub rates: Vec<Vec<T>>,
    /// Per hop, `receivers × N` gains; empty for the broadcast hop.
    pub gains: Vec<Vec<T>>,
}

impl<T: Real> RateTable<T> {
    pub fn new(h: &ChannelRealization, p: &[T], noise: &NoiseProfile) -> Self {
        let n_msgs = h.messages();
        let rows = p.len() / n_msgs;
        debug_assert_eq!(rows, stacked_rows(h));
        let phi = &p[(rows - 1) * n_msgs..];
        let mut rates = Vec::with_capacity(h.num_hops());
        let mut gains = Vec::with_capacity(h.num_hops());
        rates.push(broadcast_rates(h.first_hop(), phi, noise.hop_var(0)));
        gains.push(Vec::new());
        for b in 1..h.num_hops() {
            let hop = h.hop(b);
            let off = block_offset(h, b, rows) * n_msgs;
            let block = &p[off..off + hop.transmitters() * n_msgs];
            let g = hop_gains(hop, block, n_msgs);
            rates.push(mac_rates(&g, n_msgs, noise.hop_var(b)));
            gains.push(g);
        }
        RateTable { n_msgs, rates, gains }
    }

    fn rate(&self, hop: usize, node: usize, n: usize) -> &T {
        &self.rates[hop][node * self.n_msgs + n]
    }

    /// Whether end user `l` has to decode message `n`.
    pub fn in_decode_set(&self, l: usize, n: usize) -> bool {
        let g = &self.gains[self.rates.len() - 1];
        g[l * self.n_msgs + n].value() >= g[l * self.n_msgs + l].value()
    }

    /// Lowest relay constraint `(hop, node)` of message `n`, scanning hops
    /// then nodes in order.
    fn relay_min(&self, n: usize) -> Option<(Constraint, f64)> {
        let mut best: Option<(Constraint, f64)> = None;
        for hop in 0..self.rates.len() - 1 {
            for node in 0..self.rates[hop].len() / self.n_msgs {
                let v = self.rate(hop, node, n).value();
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((Constraint::Relay { hop, node }, v));
                }
            }
        }
        best
    }

    fn user_min(&self, n: usize) -> (Constraint, f64) {
        let last = self.rates.len() - 1;
        let mut best = (Constraint::EndUser { node: n }, self.rate(last, n, n).value());
        for l in 0..self.rates[last].len() / self.n_msgs {
            if self.in_decode_set(l, n) {
                let v = self.rate(last, l, n).value();
                if v < best.1 || (v == best.1 && l < node_of(best.0)) {
                    best = (Constraint::EndUser { node: l }, v);
                }
            }
        }
        best
    }

    /// The constraint that sets `R_n`: the relay branch when its minimum is
    /// strictly below the end-user minimum, otherwise the end-user branch.
    pub fn binding(&self, n: usize) -> Constraint {
        let user = self.user_min(n);
        match self.relay_min(n) {
            Some((c, v)) if v < user.1 => c,
            _ => user.0,
        }
    }

    pub fn constraint_rate(&self, c: Constraint, n: usize) -> T {
        match c {
            Constraint::Relay { hop, node } => self.rate(hop, node, n).clone(),
            Constraint::EndUser { node } => self.rate(self.rates.len() - 1, node, n).clone(),
        }
    }

    pub fn message_rate(&self, n: usize) -> T {
        self.constraint_rate(self.binding(n), n)
    }

    /// `(min_n R_n, n*)`, lowest index on ties.
    pub fn min_rate(&self) -> (T, usize) {
        let mut best = (self.message_rate(0), 0);
        for n in 1..self.n_msgs {
            let r = self.message_rate(n);
            if r.value() < best.0.value() {
                best = (r, n);
            }
        }
        best
    }

    /// Rate values of every constraint message `n` is subject to.
    pub fn constraint_values(&self, n: usize) -> Vec<(Constraint, f64)> {
        let mut out = Vec::new();
        let last = self.rates.len() - 1;
        for hop in 0..last {
            for node in 0..self.rates[hop].len() / self.n_msgs {
                out.push((Constraint::Relay { hop, node }, self.rate(hop, node, n).value()));
            }
        }
        for l in 0..self.rates[last].len() / self.n_msgs {
            if self.in_decode_set(l, n) {
                out.push((Constraint::EndUser { node: l }, self.rate(last, l, n).value()));
            }
        }
        out
    }
}

fn node_of(c: Constraint) -> usize {
    match c {
        Constraint::Relay { node, .. } | Constraint::EndUser { node } => node,
    }
}

/// Per-message minimum over the constraints of a single hop, given only the
/// power block feeding that hop. `R_n` is the minimum of these across hops.
pub(crate) fn hop_message_mins(
    h: &ChannelRealization,
    hop: usize,
    block: &[f64],
    noise: &NoiseProfile,
    n_msgs: usize,
) -> Vec<f64> {
    let last = h.num_hops() - 1;
    if hop == 0 {
        let r = broadcast_rates(h.first_hop(), block, noise.hop_var(0));
        return (0..n_msgs).map(|n| r.chunks(n_msgs).map(|row| row[n]).fold(f64::INFINITY, f64::min)).collect();
    }
    let g = hop_gains(h.hop(hop), block, n_msgs);
    let r = mac_rates(&g, n_msgs, noise.hop_var(hop));
    (0..n_msgs)
        .map(|n| {
            r.chunks(n_msgs)
                .zip(g.chunks(n_msgs))
                .enumerate()
                .filter(|(l, (_, grow))| hop != last || grow[n] >= grow[*l])
                .map(|(_, (row, _))| row[n])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// All rates for one channel and power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `M_1 × N`, bits per channel use.
    pub first_hop_rates: Matrix,
    /// Multiple-access hops `1..B`, each `M_b × N`.
    pub later_hop_rates: Vec<Matrix>,
    /// Coherent gains of hops `1..B`, each `M_b × N`.
    pub gains: Vec<Matrix>,
    pub message_rates: Vec<f64>,
    pub min_rate: f64,
    pub argmin: usize,
}

fn check_shape(h: &ChannelRealization, p: &Matrix) {
    assert_eq!(p.cols(), h.messages(), "power matrix columns must equal the message count");
    assert_eq!(p.rows(), stacked_rows(h), "power matrix rows must equal the transmitting devices");
}

pub fn rate_report(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile) -> RateReport {
    check_shape(h, p);
    let t = RateTable::new(h, p.as_slice(), noise);
    let n = t.n_msgs;
    let to_matrix = |v: &Vec<f64>| Matrix::from_vec(v.len() / n, n, v.clone()).expect("table shape");
    let message_rates: Vec<f64> = (0..n).map(|i| t.message_rate(i)).collect();
    let (min_rate, argmin) = t.min_rate();
    RateReport {
        first_hop_rates: to_matrix(&t.rates[0]),
        later_hop_rates: t.rates[1..].iter().map(to_matrix).collect(),
        gains: t.gains[1..].iter().map(to_matrix).collect(),
        message_rates,
        min_rate,
        argmin,
    }
}

/// Rate of message `n` at relay `m` of the broadcast hop.
pub fn first_hop_rate(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile, m: usize, n: usize) -> f64 {
    check_shape(h, p);
    let phi = p.row(p.rows() - 1);
    broadcast_rate(h.first_hop()[m].norm_sqr(), phi, noise.hop_var(0), n)
}

/// `g_{l,n}` at multiple-access hop `hop >= 1`.
pub fn gain(h: &ChannelRealization, p: &Matrix, hop: usize, l: usize, n: usize) -> f64 {
    check_shape(h, p);
    let nm = p.cols();
    let off = block_offset(h, hop, p.rows()) * nm;
    let hc = h.hop(hop);
    let (re, im) = coherent_sum(hc, &p.as_slice()[off..off + hc.transmitters() * nm], nm, l, n);
    re * re + im * im
}

/// Rate of message `n` at receiver `l` of multiple-access hop `hop >= 1`.
pub fn later_hop_rate(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile, hop: usize, l: usize, n: usize) -> f64 {
    let row: Vec<f64> = (0..p.cols()).map(|q| gain(h, p, hop, l, q)).collect();
    mac_rate(&row, noise.hop_var(hop), n)
}

pub fn message_rate(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile, n: usize) -> f64 {
    check_shape(h, p);
    RateTable::new(h, p.as_slice(), noise).message_rate(n)
}

pub fn message_rates(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile) -> Vec<f64> {
    check_shape(h, p);
    let t = RateTable::new(h, p.as_slice(), noise);
    (0..t.n_msgs).map(|n| t.message_rate(n)).collect()
}

/// `(min_n R_n, n*)` with ties broken to the lowest message index.
pub fn min_rate(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile) -> (f64, usize) {
    check_shape(h, p);
    RateTable::new(h, p.as_slice(), noise).min_rate()
}

/// Generic min-rate over a row-major slice (used by the differentiated
/// pipeline).
pub fn min_rate_of<T: Real>(h: &ChannelRealization, p: &[T], noise: &NoiseProfile) -> T {
    RateTable::new(h, p, noise).min_rate().0
}
