//! Pilot transmission and LMMSE channel estimation.
//!
//! Every transmitter of a hop sends its own orthonormal pilot of length
//! `T`. Receivers project on each pilot and shrink by
//! `σ_h² / (σ_h² + σ_b²)`, which is the LMMSE estimate for a
//! `CN(0, σ_h²)` link observed in `CN(0, σ_b²)` noise.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::model::complex_gaussian;
use crate::{ChannelRealization, HopChannel, NoiseProfile, Topology};

/// Channel estimates share the layout of true channels.
pub type CsiEstimate = ChannelRealization;

/// Orthonormal pilot sequences, one per transmitter of each hop.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    pub length: usize,
    /// `pilots[b][m]` is the length-`T` sequence of transmitter `m` at hop `b`.
    pub pilots: Vec<Vec<Vec<Complex64>>>,
}

/// Standard basis pilots with `T` equal to the largest transmitter count.
pub fn make_pilots(topology: &Topology) -> PilotSet {
    let length = (0..topology.num_hops()).map(|b| topology.transmitters(b)).max().unwrap_or(1);
    let pilots = (0..topology.num_hops())
        .map(|b| {
            (0..topology.transmitters(b))
                .map(|m| {
                    let mut u = vec![Complex64::new(0.0, 0.0); length];
                    u[m] = Complex64::new(1.0, 0.0);
                    u
                })
                .collect()
        })
        .collect();
    PilotSet { length, pilots }
}

fn inner(u: &[Complex64], y: &[Complex64]) -> Complex64 {
    u.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Received pilot observations for one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pub topology: Topology,
    pub pilots: PilotSet,
    /// `received[b][i]` is the length-`T` observation of receiver `i` at hop `b`.
    pub received: Vec<Vec<Vec<Complex64>>>,
    pub block_index: u64,
}

impl PilotBlock {
    pub fn pilot_length(&self) -> usize {
        self.pilots.length
    }
}

pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    pilots: &PilotSet,
    rng: &mut R,
) -> PilotBlock {
    let topology = h.topology();
    let t_len = pilots.length;
    let mut received = Vec::with_capacity(h.num_hops());
    let u0 = &pilots.pilots[0][0];
    let var0 = noise.hop_var(0);
    received.push(
        h.first_hop().iter().map(|&hm| (0..t_len).map(|t| hm * u0[t] + noise_draw(rng, var0)).collect()).collect(),
    );
    for b in 1..h.num_hops() {
        let hop = h.hop(b);
        let var = noise.hop_var(b);
        received.push(
            (0..hop.receivers())
                .map(|i| {
                    (0..t_len)
                        .map(|t| {
                            let s: Complex64 =
                                (0..hop.transmitters()).map(|m| hop.get(m, i) * pilots.pilots[b][m][t]).sum();
                            s + noise_draw(rng, var)
                        })
                        .collect()
                })
                .collect(),
        );
    }
    PilotBlock { topology, pilots: pilots.clone(), received, block_index: h.block_index() }
}

fn noise_draw<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    if var > 0.0 {
        complex_gaussian(rng, var)
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub fn lmmse_estimate(block: &PilotBlock, noise: &NoiseProfile, channel_var: f64) -> CsiEstimate {
    let shrink = |b: usize| channel_var / (channel_var + noise.hop_var(b));
    let u0 = &block.pilots.pilots[0][0];
    let first: Vec<Complex64> = block.received[0].iter().map(|y| inner(u0, y) * shrink(0)).collect();
    let mut later = Vec::with_capacity(block.topology.num_hops() - 1);
    for b in 1..block.topology.num_hops() {
        let tx = block.topology.transmitters(b);
        let rx = block.topology.hop_size(b);
        let mut coeffs = Vec::with_capacity(tx * rx);
        for m in 0..tx {
            for i in 0..rx {
                coeffs.push(inner(&block.pilots.pilots[b][m], &block.received[b][i]) * shrink(b));
            }
        }
        later.push(HopChannel::new(tx, rx, coeffs).expect("shape from topology"));
    }
    ChannelRealization::new(&block.topology, first, later, block.block_index).expect("estimate of a valid block")
}

/// Pilot round trip: simulate reception of `h` and return its LMMSE estimate.
pub fn estimate_channel<R: Rng + ?Sized>(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    channel_var: f64,
    rng: &mut R,
) -> CsiEstimate {
    let pilots = make_pilots(&h.topology());
    lmmse_estimate(&simulate_pilot_rx(h, noise, &pilots, rng), noise, channel_var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_channel;
    use crate::seed;

    fn top(s: &str) -> Topology {
        Topology::parse(s).unwrap()
    }

    #[test]
    fn pilot_lengths_and_orthonormality() {
        assert_eq!(make_pilots(&top("1x2x2")).length, 2);
        assert_eq!(make_pilots(&top("1x3x3")).length, 3);
        let p = make_pilots(&top("1x4x2x3"));
        assert_eq!(p.length, 4);
        for hop in &p.pilots {
            for (a, u) in hop.iter().enumerate() {
                for (b, v) in hop.iter().enumerate() {
                    let d = inner(u, v) - Complex64::new(if a == b { 1.0 } else { 0.0 }, 0.0);
                    assert!(d.norm_sqr() < 1e-24);
                }
            }
        }
    }

    #[test]
    fn noiseless_estimate_is_exact() {
        let t = top("1x3x3");
        let h = sample_channel(&t, 1.0, &mut seed::stream(1, &[])).unwrap();
        let noise = NoiseProfile::noiseless(2, 1.0).unwrap();
        let est = estimate_channel(&h, &noise, 1.0, &mut seed::stream(2, &[]));
        assert_eq!(est, h);
    }

    #[test]
    fn hand_evaluated_estimate() {
        let t = top("1x1x1");
        let pilots = make_pilots(&t);
        let y = vec![Complex64::new(2.0, 0.0)];
        let block = PilotBlock { topology: t, pilots, received: vec![vec![y.clone()], vec![y]], block_index: 0 };
        let noise = NoiseProfile::new(vec![1.0, 1.0], 1.0).unwrap();
        let est = lmmse_estimate(&block, &noise, 1.0);
        assert_eq!(est.first_hop()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn reproducible_given_seed() {
        let t = top("1x2x2");
        let h = sample_channel(&t, 1.0, &mut seed::stream(3, &[])).unwrap();
        let noise = NoiseProfile::uniform_db(2, 0.0, 1.0).unwrap();
        let a = estimate_channel(&h, &noise, 1.0, &mut seed::stream(4, &[]));
        let b = estimate_channel(&h, &noise, 1.0, &mut seed::stream(4, &[]));
        assert_eq!(a, b);
        assert_ne!(a, h);
    }

    #[test]
    fn received_noise_variance() {
        let t = top("1x2x2");
        let h = ChannelRealization::zeros(&t);
        let noise = NoiseProfile::new(vec![0.5, 2.0], 1.0).unwrap();
        let pilots = make_pilots(&t);
        let mut rng = seed::stream(5, &[]);
        let (mut acc, mut n) = ([0.0; 2], [0usize; 2]);
        for _ in 0..100_000 {
            let block = simulate_pilot_rx(&h, &noise, &pilots, &mut rng);
            for (b, hop) in block.received.iter().enumerate() {
                for y in hop.iter().flatten() {
                    acc[b] += y.norm_sqr();
                    n[b] += 1;
                }
            }
        }
        for b in 0..2 {
            let v = acc[b] / n[b] as f64;
            assert!((v / noise.hop_var(b) - 1.0).abs() < 0.02, "hop {b}: {v}");
        }
    }

    #[test]
    fn shrinkage_never_grows_the_projection() {
        let t = top("1x2x2");
        let noise = NoiseProfile::uniform_db(2, 3.0, 1.0).unwrap();
        let pilots = make_pilots(&t);
        let mut rng = seed::stream(6, &[]);
        for _ in 0..100 {
            let h = sample_channel(&t, 1.0, &mut rng).unwrap();
            let block = simulate_pilot_rx(&h, &noise, &pilots, &mut rng);
            let est = lmmse_estimate(&block, &noise, 1.0);
            for (y, e) in block.received[0].iter().zip(est.first_hop()) {
                assert!(e.norm_sqr() <= inner(&pilots.pilots[0][0], y).norm_sqr());
            }
        }
    }
}
