//! Sparse collocation matrix of tensor-product basis values at sample points.
//!
//! Rows are stored with a fixed width (16 entries in 2D, 64 in 3D). A
//! column-compressed copy is built once at assembly so that the transpose
//! product gathers per coefficient in ascending row order. That order is the
//! same as a sequential row scatter, so results do not depend on the number
//! of worker threads.

use rayon::prelude::*;

use crate::bspline::TensorBasis;
use crate::error::{Error, Result};
use crate::offsets::AugmentedSamples;

/// Rows handed to one rayon task.
const ROWS_PER_TASK: usize = 256;

#[derive(Clone, Debug)]
pub struct CollocationMatrix {
    rows: usize,
    cols: usize,
    width: usize,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    col_ptr: Vec<usize>,
    t_rows: Vec<u32>,
    t_vals: Vec<f64>,
}

impl CollocationMatrix {
    /// Row `r` holds the tensor-product basis values at sample `r`.
    pub fn assemble(basis: &TensorBasis, samples: &AugmentedSamples) -> Result<Self> {
        if samples.dim() != basis.dim() {
            return Err(Error::Shape(format!(
                "{}-dimensional samples against a {}-dimensional basis",
                samples.dim(),
                basis.dim()
            )));
        }
        if samples.is_empty() {
            return Err(Error::Input("no samples to assemble".into()));
        }
        let rows = samples.len();
        let width = basis.stencil_width();
        let cols = basis.num_coeffs();
        if cols > u32::MAX as usize {
            return Err(Error::Input(format!(
                "{cols} coefficients exceed the index range"
            )));
        }
        let mut col_idx = vec![0u32; rows * width];
        let mut values = vec![0.0f64; rows * width];
        col_idx
            .par_chunks_mut(width)
            .zip(values.par_chunks_mut(width))
            .enumerate()
            .with_min_len(ROWS_PER_TASK)
            .try_for_each(|(k, (c, v))| basis.row_entries(samples.position(k), c, v))?;

        let (col_ptr, t_rows, t_vals) = transpose(rows, cols, width, &col_idx, &values);
        Ok(Self {
            rows,
            cols,
            width,
            col_idx,
            values,
            col_ptr,
            t_rows,
            t_vals,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Stored entries per row.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Column indices (ascending) and values of row `k`.
    pub fn row(&self, k: usize) -> (&[u32], &[f64]) {
        let r = k * self.width..(k + 1) * self.width;
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Writes `B c` into `out`.
    pub fn apply_into(&self, c: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("coefficient vector", c.len(), self.cols)?;
        check_len("output vector", out.len(), self.rows)?;
        let w = self.width;
        out.par_iter_mut()
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each(|(k, o)| {
                let cols = &self.col_idx[k * w..(k + 1) * w];
                let vals = &self.values[k * w..(k + 1) * w];
                *o = cols
                    .iter()
                    .zip(vals)
                    .map(|(&j, &v)| v * c[j as usize])
                    .sum();
            });
        Ok(())
    }

    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(c, &mut out)?;
        Ok(out)
    }

    /// Writes `Bᵀ r` into `out`.
    pub fn apply_transpose_into(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("sample vector", r.len(), self.rows)?;
        check_len("output vector", out.len(), self.cols)?;
        out.par_iter_mut()
            .with_min_len(ROWS_PER_TASK)
            .enumerate()
            .for_each(|(i, o)| {
                let span = self.col_ptr[i]..self.col_ptr[i + 1];
                let mut acc = 0.0;
                for (&k, &v) in self.t_rows[span.clone()].iter().zip(&self.t_vals[span]) {
                    acc += v * r[k as usize];
                }
                *o = acc;
            });
        Ok(())
    }

    pub fn apply_transpose(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.cols];
        self.apply_transpose_into(r, &mut out)?;
        Ok(out)
    }

    /// `‖BᵀB‖∞ = max_i Σ_k B_ki Σ_j B_kj`, computed without forming `BᵀB`.
    pub fn gram_inf_norm(&self) -> f64 {
        let row_sums: Vec<f64> = self
            .values
            .chunks_exact(self.width)
            .map(|v| v.iter().sum())
            .collect();
        (0..self.cols)
            .into_par_iter()
            .with_min_len(ROWS_PER_TASK)
            .map(|i| {
                let span = self.col_ptr[i]..self.col_ptr[i + 1];
                self.t_rows[span.clone()]
                    .iter()
                    .zip(&self.t_vals[span])
                    .map(|(&k, &v)| v * row_sums[k as usize])
                    .sum::<f64>()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Step weight `2 / ‖BᵀB‖∞`, which lies below `2 / λmax(BᵀB)`.
    pub fn mu_practical(&self) -> Result<f64> {
        let norm = self.gram_inf_norm();
        if norm > 0.0 && norm.is_finite() {
            Ok(2.0 / norm)
        } else {
            Err(Error::Numeric(format!(
                "collocation matrix has gram norm {norm}; no step weight exists"
            )))
        }
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{what} has length {got}, expected {want}"
        )))
    }
}

/// Counting-sort transpose; row order within each column is ascending.
fn transpose(
    rows: usize,
    cols: usize,
    width: usize,
    col_idx: &[u32],
    values: &[f64],
) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut col_ptr = vec![0usize; cols + 1];
    for &j in col_idx {
        col_ptr[j as usize + 1] += 1;
    }
    for i in 0..cols {
        col_ptr[i + 1] += col_ptr[i];
    }
    let mut next = col_ptr.clone();
    let mut t_rows = vec![0u32; col_idx.len()];
    let mut t_vals = vec![0.0; col_idx.len()];
    for k in 0..rows {
        for s in k * width..(k + 1) * width {
            let j = col_idx[s] as usize;
            t_rows[next[j]] = k as u32;
            t_vals[next[j]] = values[s];
            next[j] += 1;
        }
    }
    (col_ptr, t_rows, t_vals)
}
