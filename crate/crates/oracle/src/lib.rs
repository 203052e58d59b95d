//! Dense reference computations.
//!
//! Nothing here is used by the fitting path. Basis values come from the
//! Cox–de Boor recursion over an explicit knot vector, and linear algebra goes
//! through full matrices with SVD and symmetric eigendecomposition, so the
//! results are independent of the sparse fixed-stride implementation they
//! are compared against.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Largest `rows * cols` a dense system may have.
pub const MAX_DENSE_ENTRIES: usize = 1_000_000;

/// Singular values below this fraction of the largest are treated as zero.
pub const SVD_CUTOFF: f64 = 1e-10;

#[derive(Error, Debug, PartialEq)]
pub enum OracleError {
    #[error("dense system of {rows}x{cols} exceeds the {MAX_DENSE_ENTRIES}-entry guard")]
    TooLarge { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// One axis of a uniform cubic basis: `num_basis` functions on
/// `[min, max]` with three extra knots past each end.
#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub num_basis: usize,
}

impl Axis {
    pub fn knots(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.num_basis - 3) as f64;
        (0..self.num_basis + 4)
            .map(|k| self.min + (k as f64 - 3.0) * h)
            .collect()
    }

    /// Values of all `num_basis` functions at `x`.
    pub fn all_values(&self, x: f64) -> Vec<f64> {
        let knots = self.knots();
        (0..self.num_basis)
            .map(|i| cox_de_boor(&knots, i, 3, x))
            .collect()
    }
}

/// `N_{i,p}(x)` by the Cox–de Boor recursion on half-open knot spans.
pub fn cox_de_boor(knots: &[f64], i: usize, p: usize, x: f64) -> f64 {
    if p == 0 {
        return if knots[i] <= x && x < knots[i + 1] {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let left = knots[i + p] - knots[i];
    if left > 0.0 {
        v += (x - knots[i]) / left * cox_de_boor(knots, i, p - 1, x);
    }
    let right = knots[i + p + 1] - knots[i + 1];
    if right > 0.0 {
        v += (knots[i + p + 1] - x) / right * cox_de_boor(knots, i + 1, p - 1, x);
    }
    v
}

/// Full lexicographic row of tensor-product values at `point` (last axis
/// fastest), including every zero.
pub fn dense_row(axes: &[Axis], point: &[f64]) -> Vec<f64> {
    let per_axis: Vec<Vec<f64>> = axes
        .iter()
        .zip(point)
        .map(|(a, &x)| a.all_values(x))
        .collect();
    let mut row = vec![1.0];
    for values in &per_axis {
        row = row
            .iter()
            .flat_map(|&r| values.iter().map(move |&v| r * v))
            .collect();
    }
    row
}

/// `Σ C B(point)` over every coefficient.
pub fn full_sum(axes: &[Axis], coeffs: &[f64], point: &[f64]) -> f64 {
    dense_row(axes, point)
        .iter()
        .zip(coeffs)
        .map(|(b, c)| b * c)
        .sum()
}

/// A dense matrix `B` and right-hand side `b`.
#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

impl DenseSystem {
    pub fn new(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self, OracleError> {
        let (rows, cols) = matrix.shape();
        if rows.saturating_mul(cols) > MAX_DENSE_ENTRIES {
            return Err(OracleError::TooLarge { rows, cols });
        }
        if rhs.len() != rows {
            return Err(OracleError::Shape(format!(
                "rhs has {} entries for {rows} rows",
                rhs.len()
            )));
        }
        Ok(Self { matrix, rhs })
    }

    /// Collocation system over sample points.
    pub fn collocation(
        axes: &[Axis],
        points: &[Vec<f64>],
        rhs: &[f64],
    ) -> Result<Self, OracleError> {
        let cols: usize = axes.iter().map(|a| a.num_basis).product();
        if points.len().saturating_mul(cols) > MAX_DENSE_ENTRIES {
            return Err(OracleError::TooLarge {
                rows: points.len(),
                cols,
            });
        }
        let mut m = DMatrix::zeros(points.len(), cols);
        for (r, p) in points.iter().enumerate() {
            for (c, v) in dense_row(axes, p).into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Self::new(m, DVector::from_column_slice(rhs))
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.matrix.transpose() * &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Moore–Penrose pseudoinverse by SVD with a relative singular-value cutoff.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = SVD_CUTOFF * smax;
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let inv =
        DMatrix::from_diagonal(
            &svd.singular_values
                .map(|s| if s > cutoff { 1.0 / s } else { 0.0 }),
        );
    vt.transpose() * inv * u.transpose()
}

/// Minimum-norm least-squares solution `(BᵀB)⁺ Bᵀ b`.
pub fn pinv_solution(sys: &DenseSystem) -> DVector<f64> {
    pinv(&sys.gram()) * (sys.matrix.transpose() * &sys.rhs)
}

/// Limit from a nonzero start: `(BᵀB)⁺Bᵀb + (I − (BᵀB)⁺BᵀB) C⁰`.
pub fn limit_from(sys: &DenseSystem, initial: &DVector<f64>) -> DVector<f64> {
    let g = sys.gram();
    let gp = pinv(&g);
    let n = g.nrows();
    &gp * (sys.matrix.transpose() * &sys.rhs) + (DMatrix::identity(n, n) - &gp * &g) * initial
}

pub fn eigenvalues(sys: &DenseSystem) -> DVector<f64> {
    SymmetricEigen::new(sys.gram()).eigenvalues
}

/// Largest eigenvalue of `BᵀB`.
pub fn lambda_max(sys: &DenseSystem) -> f64 {
    eigenvalues(sys).max().max(0.0)
}

/// `max_i Σ_j |(BᵀB)_ij|`.
pub fn gram_inf_norm(sys: &DenseSystem) -> f64 {
    let g = sys.gram();
    g.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Numerical rank with the same relative cutoff as [`pinv`].
pub fn rank(m: &DMatrix<f64>) -> usize {
    let s = m.clone().svd(false, false).singular_values;
    let cutoff = SVD_CUTOFF * s.max();
    s.iter().filter(|&&v| v > cutoff).count()
}

/// Orthonormal basis of the null space of `B`, one vector per column.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    // pad to square so the SVD yields a full V
    let mut padded = DMatrix::zeros(rows.max(cols), cols);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested Vᵀ");
    let cutoff = SVD_CUTOFF * svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &vt.row(i).transpose());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let sys = DenseSystem::new(
            DMatrix::identity(4, 4),
            DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]),
        )
        .unwrap();
        assert!((pinv_solution(&sys) - &sys.rhs).amax() < 1e-14);
        assert!((lambda_max(&sys) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaled_identity_eigenvalue() {
        let sys = DenseSystem::new(DMatrix::identity(3, 3) * 2.0, DVector::zeros(3)).unwrap();
        assert!((lambda_max(&sys) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn zero_column_gets_zero() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0, 3.0, 0.0, 1.0]);
        let sys = DenseSystem::new(m, DVector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert!(pinv_solution(&sys)[1].abs() < 1e-14);
        assert_eq!(null_space(&sys.matrix).ncols(), 1);
    }

    #[test]
    fn size_guard() {
        let err = DenseSystem::new(DMatrix::zeros(1001, 1000), DVector::zeros(1001)).unwrap_err();
        assert_eq!(
            err,
            OracleError::TooLarge {
                rows: 1001,
                cols: 1000
            }
        );
    }

    #[test]
    fn cox_de_boor_partition_of_unity() {
        let a = Axis {
            min: -1.0,
            max: 2.0,
            num_basis: 9,
        };
        for k in 0..=50 {
            let x = -1.0 + 3.0 * k as f64 / 50.0;
            let s: f64 = a.all_values(x).iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "{x}: {s}");
        }
    }
}
