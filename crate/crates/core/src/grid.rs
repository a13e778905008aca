//! Exhaustive grid reference for tiny networks.
//!
//! With two messages every feasible row is `(a, √(1−a²))`, so a grid over
//! `a ∈ [0, 1]` per row covers the feasible set with one variable per row.
//! The objective separates by hop: the broadcast constraints depend only on
//! the source row and hop `b >= 1` only on the block feeding it. Each block
//! is therefore tabulated once and the product grid only combines tables.

use alloc::vec;
use alloc::vec::Vec;

use crate::rates::{hop_message_mins, min_rate};
use crate::{ChannelRealization, Error, Matrix, NoiseProfile, PowerMatrix, Result};

/// Largest number of grid points a search may visit.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_min_rate: f64,
    pub best_matrix: PowerMatrix,
    pub resolution: f64,
    pub evaluations: u64,
}

/// Grid values of the first coefficient: `0, r, 2r, …` up to 1.
pub fn grid_points(resolution: f64) -> Vec<f64> {
    let inv = 1.0 / resolution;
    let count = libm::floor(inv + 1e-9) as usize;
    let steps = libm::round(inv);
    // exact division keeps nested grids nested
    let exact = (inv - steps).abs() < 1e-9;
    (0..=count).map(|i| if exact { i as f64 / steps } else { (i as f64 * resolution).min(1.0) }).collect()
}

fn unit_rows(points: &[f64], n_msgs: usize) -> Vec<Vec<f64>> {
    if n_msgs == 1 {
        return vec![vec![1.0]];
    }
    points.iter().map(|&a| vec![a, libm::sqrt((1.0 - a * a).max(0.0))]).collect()
}

fn check_messages(h: &ChannelRealization) -> Result<()> {
    match h.messages() {
        1 | 2 => Ok(()),
        n => Err(Error::Capability(alloc::format!(
            "grid search parameterizes rows of at most 2 messages, topology has {n}"
        ))),
    }
}

/// Best allocation on a grid of the given resolution.
pub fn grid_capacity(h: &ChannelRealization, noise: &NoiseProfile, resolution: f64) -> Result<GridResult> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Config("grid resolution must lie in (0, 1]".into()));
    }
    check_messages(h)?;
    let rows = h.topology().stacked_rows();
    let candidates = unit_rows(&grid_points(resolution), h.messages());
    let per_row = vec![candidates; rows];
    let (best_matrix, evaluations) = search(h, noise, &per_row)?;
    Ok(finish(h, noise, best_matrix, resolution, evaluations))
}

/// Coarse grid followed by a fine grid in a `±coarse` window around the
/// coarse optimum of every row. Not exhaustive.
pub fn grid_capacity_refined(
    h: &ChannelRealization,
    noise: &NoiseProfile,
    coarse: f64,
    fine: f64,
) -> Result<GridResult> {
    if !(fine > 0.0 && fine <= coarse) {
        return Err(Error::Config("fine resolution must lie in (0, coarse]".into()));
    }
    let first = grid_capacity(h, noise, coarse)?;
    if h.messages() == 1 {
        return Ok(first);
    }
    let fine_points = grid_points(fine);
    let per_row: Vec<Vec<Vec<f64>>> = (0..first.best_matrix.rows())
        .map(|r| {
            let a = first.best_matrix.get(r, 0);
            let local: Vec<f64> = fine_points.iter().copied().filter(|&x| (x - a).abs() <= coarse + 1e-12).collect();
            unit_rows(&local, 2)
        })
        .collect();
    let (m, evals) = search(h, noise, &per_row)?;
    let refined = finish(h, noise, m, fine, evals + first.evaluations);
    Ok(if refined.best_min_rate >= first.best_min_rate {
        refined
    } else {
        GridResult { evaluations: refined.evaluations, ..first }
    })
}

fn finish(h: &ChannelRealization, noise: &NoiseProfile, m: Matrix, resolution: f64, evaluations: u64) -> GridResult {
    let best_matrix = PowerMatrix::new(m).expect("grid rows are feasible");
    let best_min_rate = min_rate(h, &best_matrix, noise).0;
    GridResult { best_min_rate, best_matrix, resolution, evaluations }
}

/// Mixed-radix decode, first digit most significant.
fn digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (d, &r) in out.iter_mut().zip(radices).rev() {
        *d = index % r;
        index /= r;
    }
    out
}

/// Exhaustive search over per-row candidate lists. Ties keep the lowest
/// lexicographic index in stacked row order.
fn search(h: &ChannelRealization, noise: &NoiseProfile, per_row: &[Vec<Vec<f64>>]) -> Result<(Matrix, u64)> {
    let top = h.topology();
    let n_msgs = h.messages();
    let total: u128 = per_row.iter().map(|c| c.len() as u128).product();
    if total > MAX_GRID_POINTS {
        return Err(Error::Capability(alloc::format!("grid of {total} points exceeds the limit of {MAX_GRID_POINTS}")));
    }
    // blocks in stacked row order: hops 1..B, then the source row (hop 0)
    let hops: Vec<usize> = (1..top.num_hops()).chain([0]).collect();
    let mut row_ranges = Vec::with_capacity(hops.len());
    let mut tables: Vec<Vec<f64>> = Vec::with_capacity(hops.len());
    let mut sizes = Vec::with_capacity(hops.len());
    for &b in &hops {
        let start = top.block_offset(b);
        let range = start..start + top.transmitters(b);
        let radices: Vec<usize> = per_row[range.clone()].iter().map(Vec::len).collect();
        let combos: usize = radices.iter().product();
        let mut table = Vec::with_capacity(combos * n_msgs);
        let mut block = vec![0.0; range.len() * n_msgs];
        for c in 0..combos {
            for (i, d) in digits(c, &radices).into_iter().enumerate() {
                block[i * n_msgs..(i + 1) * n_msgs].copy_from_slice(&per_row[range.start + i][d]);
            }
            table.extend(hop_message_mins(h, b, &block, noise, n_msgs));
        }
        row_ranges.push(range);
        tables.push(table);
        sizes.push(combos);
    }

    let mut counter = vec![0usize; hops.len()];
    let mut best = (f64::NEG_INFINITY, counter.clone());
    let mut mins = vec![f64::INFINITY; n_msgs];
    loop {
        mins.iter_mut().for_each(|m| *m = f64::INFINITY);
        for (t, &c) in tables.iter().zip(&counter) {
            for (m, &v) in mins.iter_mut().zip(&t[c * n_msgs..(c + 1) * n_msgs]) {
                *m = m.min(v);
            }
        }
        let value = mins.iter().copied().fold(f64::INFINITY, f64::min);
        if value > best.0 {
            best = (value, counter.clone());
        }
        if !advance(&mut counter, &sizes) {
            break;
        }
    }

    let mut m = Matrix::zeros(top.stacked_rows(), n_msgs);
    for (range, &c) in row_ranges.iter().zip(&best.1) {
        let radices: Vec<usize> = per_row[range.clone()].iter().map(Vec::len).collect();
        for (j, d) in digits(c, &radices).into_iter().enumerate() {
            for (col, &v) in per_row[range.start + j][d].iter().enumerate() {
                m.set(range.start + j, col, v);
            }
        }
    }
    Ok((m, total as u64))
}

/// Odometer increment, last digit fastest; false once it wraps around.
fn advance(counter: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..counter.len()).rev() {
        counter[i] += 1;
        if counter[i] < sizes[i] {
            return true;
        }
        counter[i] = 0;
    }
    false
}
