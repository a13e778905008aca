//! Exact gradient of `min_n R_n` with respect to the stacked power matrix.
//!
//! The objective is a minimum of minima, so its gradient is the gradient of
//! the single binding rate: the worst message `n*`, then the constraint that
//! sets `R_{n*}`. Only the block feeding that constraint's hop is nonzero.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::rates::{block_offset, Constraint, RateTable};
use crate::real::Real;
use crate::{ChannelRealization, Matrix, NoiseProfile};

/// `∂/∂P min_n R_n` together with the branch it was taken on.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradient {
    pub values: Matrix,
    pub active_message: usize,
    pub active_constraint: Constraint,
}

/// Gradient over a row-major slice; returns `(∂, n*, binding constraint)`.
pub(crate) fn gradient_of<T: Real>(
    h: &ChannelRealization,
    p: &[T],
    noise: &NoiseProfile,
) -> (Vec<T>, usize, Constraint) {
    let table = RateTable::new(h, p, noise);
    let (_, n_star) = table.min_rate();
    let binding = table.binding(n_star);
    let grad = constraint_gradient(h, p, noise, &table, binding, n_star);
    (grad, n_star, binding)
}

fn constraint_gradient<T: Real>(
    h: &ChannelRealization,
    p: &[T],
    noise: &NoiseProfile,
    table: &RateTable<T>,
    binding: Constraint,
    n: usize,
) -> Vec<T> {
    let n_msgs = table.n_msgs;
    let rows = p.len() / n_msgs;
    let mut grad = vec![T::zero(); p.len()];
    let last = h.num_hops() - 1;
    let (hop, node) = match binding {
        Constraint::Relay { hop, node } => (hop, node),
        Constraint::EndUser { node } => (last, node),
    };
    let inv_ln2 = 1.0 / LN_2;
    if hop == 0 {
        let off = (rows - 1) * n_msgs;
        let phi = &p[off..];
        let h2 = h.first_hop()[node].norm_sqr();
        let own = phi[n].value();
        let interferers: Vec<usize> = (0..n_msgs).filter(|&i| i != n && phi[i].value() <= own).collect();
        let mut s = T::zero();
        for &i in &interferers {
            s = s + phi[i].clone().square();
        }
        let s = s * h2 + noise.hop_var(0);
        if s.value() <= 0.0 {
            return grad;
        }
        let total = s.clone() + phi[n].clone().square() * h2;
        // ∂R/∂φ_n = 2|h|²φ_n / (S + |h|²φ_n²) / ln2
        grad[off + n] = phi[n].clone() * (2.0 * h2 * inv_ln2) / total.clone();
        // ∂R/∂φ_q = 2|h|²φ_q (1/(S+s) − 1/S) / ln2 for interferers
        let diff = T::constant(1.0) / total - T::constant(1.0) / s;
        for &q in &interferers {
            grad[off + q] = phi[q].clone() * (2.0 * h2 * inv_ln2) * diff.clone();
        }
        return grad;
    }

    let hc = h.hop(hop);
    let off = block_offset(h, hop, rows) * n_msgs;
    let block = &p[off..off + hc.transmitters() * n_msgs];
    let g = &table.gains[hop][node * n_msgs..(node + 1) * n_msgs];
    let own = g[n].value();
    let interferers: Vec<usize> = (0..n_msgs).filter(|&i| i != n && g[i].value() <= own).collect();
    let mut s = T::zero();
    for &i in &interferers {
        s = s + g[i].clone();
    }
    let s = s + noise.hop_var(hop);
    if s.value() <= 0.0 {
        return grad;
    }
    let total = s.clone() + g[n].clone();
    let c_self = T::constant(inv_ln2) / total.clone();
    let c_int = (T::constant(1.0) / total - T::constant(1.0) / s) * inv_ln2;
    let mut coef: Vec<(usize, T)> = vec![(n, c_self)];
    coef.extend(interferers.iter().map(|&q| (q, c_int.clone())));
    for (q, c) in coef {
        let (re, im) = crate::rates::coherent_sum(hc, block, n_msgs, node, q);
        // ∂g_q/∂p_{s,q} = 2 Re(conj(h_s) A_q)
        for s_tx in 0..hc.transmitters() {
            let hs = hc.get(s_tx, node);
            let dg = (re.clone() * hs.re + im.clone() * hs.im) * 2.0;
            grad[off + s_tx * n_msgs + q] = c.clone() * dg;
        }
    }
    grad
}

pub fn objective_gradient(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile) -> ObjectiveGradient {
    let (values, active_message, active_constraint) = gradient_of(h, p.as_slice(), noise);
    ObjectiveGradient {
        values: Matrix::from_vec(p.rows(), p.cols(), values).expect("gradient shape"),
        active_message,
        active_constraint,
    }
}

/// Central differences of `min_rate` on the raw coordinates of `p`.
pub fn finite_difference_gradient(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile, step: f64) -> Matrix {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut out = Matrix::zeros(p.rows(), p.cols());
    let mut x = p.clone();
    for i in 0..p.as_slice().len() {
        let x0 = p.as_slice()[i];
        x.as_mut_slice()[i] = x0 + step;
        let up = crate::rates::min_rate(h, &x, noise).0;
        x.as_mut_slice()[i] = x0 - step;
        let down = crate::rates::min_rate(h, &x, noise).0;
        x.as_mut_slice()[i] = x0;
        out.as_mut_slice()[i] = (up - down) / (2.0 * step);
    }
    out
}

/// Distance of `(h, p)` from the nearest non-smooth or degenerate point:
/// the smallest gap between competing message rates, between the binding
/// constraint and any other constraint on `n*`, between any two source
/// powers, between any two gains seen by one receiver, and from any
/// coefficient to zero. Finite differences agree with
/// [`objective_gradient`] only when this is well above the stencil width.
pub fn tie_margin(h: &ChannelRealization, p: &Matrix, noise: &NoiseProfile) -> f64 {
    let t = RateTable::new(h, p.as_slice(), noise);
    let n_msgs = t.n_msgs;
    let mut margin = f64::INFINITY;
    let (best, n_star) = t.min_rate();
    for n in (0..n_msgs).filter(|&n| n != n_star) {
        margin = margin.min(t.message_rate(n) - best);
    }
    let binding = t.binding(n_star);
    for (c, v) in t.constraint_values(n_star) {
        if c != binding {
            margin = margin.min((v - best).abs());
        }
    }
    let pairwise = |row: &[f64]| {
        let mut m = f64::INFINITY;
        for i in 0..row.len() {
            for j in i + 1..row.len() {
                m = m.min((row[i] - row[j]).abs());
            }
        }
        m
    };
    margin = margin.min(pairwise(p.row(p.rows() - 1)));
    margin = margin.min(p.as_slice().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min));
    for g in &t.gains[1..] {
        for row in g.chunks(n_msgs) {
            margin = margin.min(pairwise(row));
        }
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_channel;
    use crate::power::{random_init, uniform_init};
    use crate::{seed, Topology};
    use num_complex::Complex64;

    #[test]
    fn single_link_derivative() {
        let top = Topology::new(vec![1, 1]).unwrap();
        let links = [Complex64::new(1.0, 0.0), Complex64::new(5.0, 0.0)];
        let h = ChannelRealization::from_links(&top, &links, 0).unwrap();
        let noise = NoiseProfile::new(vec![1.0, 1.0], 1.0).unwrap();
        let p = uniform_init(&top);
        let g = objective_gradient(&h, &p, &noise);
        assert_eq!(g.active_constraint, Constraint::Relay { hop: 0, node: 0 });
        assert!((g.values.get(1, 0) - 1.0 / LN_2).abs() < 1e-15);
        assert_eq!(g.values.get(0, 0), 0.0);
    }

    #[test]
    fn zero_channel_has_zero_gradient() {
        let top = Topology::new(vec![2, 2]).unwrap();
        let h = ChannelRealization::zeros(&top);
        let noise = NoiseProfile::uniform_db(2, 0.0, 1.0).unwrap();
        let g = objective_gradient(&h, &uniform_init(&top), &noise);
        assert!(g.values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_finite_differences_on_random_points() {
        let noise = NoiseProfile::uniform_db(2, 0.0, 1.0).unwrap();
        let top = Topology::new(vec![2, 2]).unwrap();
        let mut checked = 0;
        for s in 0..60 {
            let mut rng = seed::stream(s, &[11]);
            let h = sample_channel(&top, 1.0, &mut rng).unwrap();
            let p = random_init(&top, &mut rng);
            if tie_margin(&h, &p, &noise) < 1e-3 {
                continue;
            }
            checked += 1;
            let a = objective_gradient(&h, &p, &noise).values;
            let f = finite_difference_gradient(&h, &p, &noise, 1e-6);
            for (x, y) in a.as_slice().iter().zip(f.as_slice()) {
                let rel = (x - y).abs() / x.abs().max(y.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {s}: {x} vs {y}");
            }
        }
        assert!(checked > 30);
    }

    #[test]
    fn central_difference_error_shrinks_quadratically() {
        let noise = NoiseProfile::uniform_db(2, 0.0, 1.0).unwrap();
        let top = Topology::new(vec![2, 2]).unwrap();
        let mut rng = seed::stream(0, &[12]);
        let (h, p) = loop {
            let h = sample_channel(&top, 1.0, &mut rng).unwrap();
            let p = random_init(&top, &mut rng);
            if tie_margin(&h, &p, &noise) > 0.05 {
                break (h, p);
            }
        };
        let a = objective_gradient(&h, &p, &noise).values;
        let err = |step| {
            let f = finite_difference_gradient(&h, &p, &noise, step);
            a.as_slice().iter().zip(f.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e2 < e1 / 3.0 && e2 > e1 / 5.0, "{e1} {e2}");
    }
}
