//! Superposition-coding coefficients and their feasible set.
//!
//! A feasible power matrix has entries in `[0, 1]` and unit Euclidean norm
//! on every row (one row per transmitting device). Projection is the cheap
//! row-wise map `x ↦ x⁺ / ‖x⁺‖` rather than the exact Euclidean projection.

use core::ops::Deref;

use rand::Rng;

use crate::real::Real;
use crate::{Error, Matrix, Result, Topology};

/// Tolerance on row norms used by the feasibility predicate.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A power matrix known to lie in the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix(Matrix);

impl PowerMatrix {
    /// Wraps `m` after checking feasibility.
    pub fn new(m: Matrix) -> Result<Self> {
        if !is_feasible(&m) {
            return Err(Error::Config("matrix is not feasible".into()));
        }
        Ok(PowerMatrix(m))
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    /// The transmitter (source) row.
    pub fn source_row(&self) -> &[f64] {
        self.0.row(self.0.rows() - 1)
    }
}

impl Deref for PowerMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl AsRef<Matrix> for PowerMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

fn row_is_feasible<T: Real>(row: &[T]) -> bool {
    let in_range = row.iter().all(|v| (0.0..=1.0).contains(&v.value()));
    let norm = libm::sqrt(row.iter().map(|v| v.value() * v.value()).sum::<f64>());
    in_range && (norm - 1.0).abs() <= FEASIBILITY_TOL
}

/// All entries in `[0, 1]` and every row norm within [`FEASIBILITY_TOL`] of 1.
pub fn is_feasible(p: &Matrix) -> bool {
    p.rows() > 0 && p.cols() > 0 && (0..p.rows()).all(|r| row_is_feasible(p.row(r)))
}

/// Projects one row in place. Rows that are already feasible are left
/// untouched, which makes projection the identity on the feasible set. A row
/// with no positive entry maps to the uniform row.
pub fn project_row<T: Real>(row: &mut [T]) {
    if row_is_feasible(row) {
        return;
    }
    let mut norm2 = T::zero();
    let mut any_positive = false;
    for x in row.iter_mut() {
        if x.value() > 0.0 {
            any_positive = true;
            norm2 = norm2 + x.clone().square();
        } else {
            *x = T::zero();
        }
    }
    if !any_positive {
        let u = 1.0 / libm::sqrt(row.len() as f64);
        row.iter_mut().for_each(|x| *x = T::constant(u));
        return;
    }
    let norm = norm2.sqrt();
    for x in row.iter_mut() {
        if x.value() > 0.0 {
            let y = x.clone() / norm.clone();
            // x / sqrt(x²) can round to 1 + ulp
            *x = if y.value() > 1.0 { T::constant(1.0) } else { y };
        }
    }
}

/// Row-major projection of `values` with `cols` columns.
pub fn project_slice<T: Real>(values: &mut [T], cols: usize) {
    for row in values.chunks_mut(cols) {
        project_row(row);
    }
}

pub fn project(raw: &Matrix) -> Result<PowerMatrix> {
    if !raw.is_finite() {
        return Err(Error::NonFinite("matrix to project"));
    }
    if raw.rows() == 0 || raw.cols() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut m = raw.clone();
    let cols = m.cols();
    project_slice(m.as_mut_slice(), cols);
    Ok(PowerMatrix(m))
}

/// Equal power on every message: all entries `1/√N`.
pub fn uniform_init(topology: &Topology) -> PowerMatrix {
    let n = topology.end_users();
    PowerMatrix(Matrix::filled(topology.stacked_rows(), n, 1.0 / libm::sqrt(n as f64)))
}

/// I.i.d. `Uniform(0,1)` entries pushed through [`project`].
pub fn random_init<R: Rng + ?Sized>(topology: &Topology, rng: &mut R) -> PowerMatrix {
    let (rows, cols) = (topology.stacked_rows(), topology.end_users());
    let data = (0..rows * cols).map(|_| rng.random::<f64>()).collect();
    let m = Matrix::from_vec(rows, cols, data).expect("shape from topology");
    project(&m).expect("finite uniform draws")
}
