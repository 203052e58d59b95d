//! Uniform cubic B-spline bases and their tensor products.
//!
//! Every axis carries `num_basis` cubic basis functions over a uniform,
//! unclamped knot sequence. The knots extend three spacings past each end of
//! the domain so that every point of `[domain_min, domain_max]` is covered by
//! exactly four nonzero basis functions.

use crate::error::{Error, Result};
use crate::offsets::OrientedPointCloud;

/// Polynomial degree of every basis function.
pub const DEGREE: usize = 3;

/// Nonzero basis functions per axis at any domain point.
pub const SUPPORT: usize = DEGREE + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnotAxis {
    domain_min: f64,
    domain_max: f64,
    num_basis: usize,
}

impl KnotAxis {
    pub fn new(domain_min: f64, domain_max: f64, num_basis: usize) -> Result<Self> {
        if !(domain_min.is_finite() && domain_max.is_finite()) || domain_max <= domain_min {
            return Err(Error::Input(format!(
                "axis domain [{domain_min}, {domain_max}] must be finite with max > min"
            )));
        }
        if num_basis < SUPPORT {
            return Err(Error::Input(format!(
                "an axis needs at least {SUPPORT} basis functions, got {num_basis}"
            )));
        }
        Ok(Self {
            domain_min,
            domain_max,
            num_basis,
        })
    }

    pub fn domain_min(&self) -> f64 {
        self.domain_min
    }

    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    /// Knot spacing inside the domain.
    pub fn spacing(&self) -> f64 {
        (self.domain_max - self.domain_min) / (self.num_basis - DEGREE) as f64
    }

    /// Knot `k` of the full sequence, `0 <= k < num_basis + 4`. Knot 3 is
    /// `domain_min` and knot `num_basis` is `domain_max`.
    pub fn knot(&self, k: usize) -> f64 {
        self.domain_min + (k as f64 - DEGREE as f64) * self.spacing()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.domain_min && x <= self.domain_max
    }

    /// Index of the first nonzero basis function at `x` and the four nonzero
    /// values, which are nonnegative and sum to one.
    pub fn eval(&self, x: f64) -> Result<(usize, [f64; SUPPORT])> {
        self.eval_on_axis(0, x)
    }

    pub(crate) fn eval_on_axis(&self, axis: usize, x: f64) -> Result<(usize, [f64; SUPPORT])> {
        if !self.contains(x) {
            return Err(Error::Domain {
                axis,
                value: x,
                min: self.domain_min,
                max: self.domain_max,
            });
        }
        let intervals = self.num_basis - DEGREE;
        let u = (x - self.domain_min) / (self.domain_max - self.domain_min) * intervals as f64;
        let span = (u.floor() as usize).min(intervals - 1);
        let t = (u - span as f64).clamp(0.0, 1.0);
        Ok((span, uniform_cubic(t)))
    }
}

/// The four uniform cubic B-spline blending values at local parameter `t`.
#[inline]
pub fn uniform_cubic(t: f64) -> [f64; SUPPORT] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

/// Per-axis nonzero basis values at one point.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    pub dim: usize,
    pub first: [usize; 3],
    pub values: [[f64; SUPPORT]; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorBasis {
    axes: Vec<KnotAxis>,
}

impl TensorBasis {
    pub fn new(axes: Vec<KnotAxis>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::Input(format!(
                "a tensor basis has 2 or 3 axes, got {}",
                axes.len()
            )));
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[KnotAxis] {
        &self.axes
    }

    /// Total number of coefficients.
    pub fn num_coeffs(&self) -> usize {
        self.axes.iter().map(KnotAxis::num_basis).product()
    }

    /// Nonzero tensor-product terms at any domain point (16 or 64).
    pub fn stencil_width(&self) -> usize {
        SUPPORT.pow(self.dim() as u32)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.axes.iter().map(KnotAxis::domain_min).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.axes.iter().map(KnotAxis::domain_max).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.axes.iter().zip(point).all(|(a, &x)| a.contains(x))
    }

    /// Lexicographic column of the coefficient with per-axis indices `idx`;
    /// the last axis varies fastest.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, a)| acc * a.num_basis() + i)
    }

    pub fn stencil(&self, point: &[f64]) -> Result<Stencil> {
        if point.len() != self.dim() {
            return Err(Error::Shape(format!(
                "point has {} coordinates, basis is {}-dimensional",
                point.len(),
                self.dim()
            )));
        }
        let mut st = Stencil {
            dim: self.dim(),
            first: [0; 3],
            values: [[0.0; SUPPORT]; 3],
        };
        for (d, (axis, &x)) in self.axes.iter().zip(point).enumerate() {
            let (first, values) = axis.eval_on_axis(d, x)?;
            st.first[d] = first;
            st.values[d] = values;
        }
        Ok(st)
    }

    /// Writes the column indices and tensor-product values touched at `point`
    /// into the first `stencil_width()` slots of `cols` and `vals`, in
    /// increasing column order.
    pub fn row_entries(&self, point: &[f64], cols: &mut [u32], vals: &mut [f64]) -> Result<()> {
        let st = self.stencil(point)?;
        let n: Vec<usize> = self.axes.iter().map(KnotAxis::num_basis).collect();
        let mut slot = 0;
        match self.dim() {
            2 => {
                for a in 0..SUPPORT {
                    let row = (st.first[0] + a) * n[1];
                    for b in 0..SUPPORT {
                        cols[slot] = (row + st.first[1] + b) as u32;
                        vals[slot] = st.values[0][a] * st.values[1][b];
                        slot += 1;
                    }
                }
            }
            _ => {
                for a in 0..SUPPORT {
                    for b in 0..SUPPORT {
                        let row = ((st.first[0] + a) * n[1] + st.first[1] + b) * n[2];
                        let ab = st.values[0][a] * st.values[1][b];
                        for c in 0..SUPPORT {
                            cols[slot] = (row + st.first[2] + c) as u32;
                            vals[slot] = ab * st.values[2][c];
                            slot += 1;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates `f(point) = sum of coefficient * tensor basis value`.
    pub fn eval(&self, coeffs: &[f64], point: &[f64]) -> Result<f64> {
        if coeffs.len() != self.num_coeffs() {
            return Err(Error::Shape(format!(
                "{} coefficients given, basis has {}",
                coeffs.len(),
                self.num_coeffs()
            )));
        }
        let mut cols = [0u32; 64];
        let mut vals = [0.0f64; 64];
        self.row_entries(point, &mut cols, &mut vals)?;
        let w = self.stencil_width();
        Ok(cols[..w]
            .iter()
            .zip(&vals[..w])
            .map(|(&c, &v)| coeffs[c as usize] * v)
            .sum())
    }
}

/// Fitted control coefficients together with the basis they weight.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientGrid {
    basis: TensorBasis,
    values: Vec<f64>,
}

impl CoefficientGrid {
    pub fn new(basis: TensorBasis, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.num_coeffs() {
            return Err(Error::Shape(format!(
                "{} coefficients given, basis has {}",
                values.len(),
                basis.num_coeffs()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("coefficient {i} is not finite")));
        }
        Ok(Self { basis, values })
    }

    pub fn zeros(basis: TensorBasis) -> Self {
        let values = vec![0.0; basis.num_coeffs()];
        Self { basis, values }
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.basis.eval(&self.values, point)
    }
}

/// Default padding, as a fraction of the per-axis extent.
pub const DEFAULT_PADDING: f64 = 0.1;

/// Builds a basis whose domain is the bounding box of `cloud`, grown by
/// `padding_fraction` times the extent on each side. An axis with zero extent
/// is grown by `padding_fraction` times the largest extent instead.
pub fn domain_from_cloud(
    cloud: &OrientedPointCloud,
    padding_fraction: f64,
    grid: &[usize],
) -> Result<TensorBasis> {
    if cloud.is_empty() {
        return Err(Error::Input("point cloud is empty".into()));
    }
    if !(padding_fraction >= 0.0 && padding_fraction.is_finite()) {
        return Err(Error::Input(format!(
            "padding fraction must be finite and nonnegative, got {padding_fraction}"
        )));
    }
    let dim = cloud.dim();
    if grid.len() != dim {
        return Err(Error::Shape(format!(
            "grid has {} axes, cloud is {dim}-dimensional",
            grid.len()
        )));
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in cloud.points() {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let largest = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(0.0f64, f64::max);
    if largest <= 0.0 {
        return Err(Error::Input(
            "all points coincide; the bounding box has no extent".into(),
        ));
    }
    let axes = (0..dim)
        .map(|d| {
            let extent = hi[d] - lo[d];
            let pad = if extent > 0.0 {
                padding_fraction * extent
            } else {
                padding_fraction * largest
            };
            KnotAxis::new(lo[d] - pad, hi[d] + pad, grid[d])
        })
        .collect::<Result<Vec<_>>>()?;
    TensorBasis::new(axes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midpoint_values() {
        let axis = KnotAxis::new(0.0, 1.0, 6).unwrap();
        let h = axis.spacing();
        let (first, v) = axis.eval(1.5 * h).unwrap();
        assert_eq!(first, 1);
        let expected = [1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0];
        for (a, b) in v.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn knot_values() {
        let axis = KnotAxis::new(-1.0, 2.0, 7).unwrap();
        let (first, v) = axis.eval(axis.knot(5)).unwrap();
        assert_eq!(first, 2);
        let expected = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0, 0.0];
        for (a, b) in v.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn domain_ends_are_covered() {
        let axis = KnotAxis::new(0.0, 1.0, 5).unwrap();
        let (first, v) = axis.eval(1.0).unwrap();
        assert_eq!(first, 1);
        assert_abs_diff_eq!(v[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[3], 1.0 / 6.0, epsilon = 1e-15);
        let (first, _) = axis.eval(0.0).unwrap();
        assert_eq!(first, 0);
    }

    #[test]
    fn outside_domain_names_axis() {
        let basis = TensorBasis::new(vec![
            KnotAxis::new(0.0, 1.0, 4).unwrap(),
            KnotAxis::new(0.0, 1.0, 4).unwrap(),
        ])
        .unwrap();
        match basis.stencil(&[0.5, 1.5]) {
            Err(Error::Domain { axis, value, .. }) => {
                assert_eq!(axis, 1);
                assert_eq!(value, 1.5);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(KnotAxis::new(1.0, 1.0, 8).is_err());
        assert!(KnotAxis::new(0.0, 1.0, 3).is_err());
        assert!(TensorBasis::new(vec![KnotAxis::new(0.0, 1.0, 4).unwrap()]).is_err());
    }

    #[test]
    fn constant_coefficients_reproduce_constant() {
        let basis = TensorBasis::new(vec![
            KnotAxis::new(-1.0, 1.0, 9).unwrap(),
            KnotAxis::new(0.0, 3.0, 5).unwrap(),
            KnotAxis::new(2.0, 2.5, 4).unwrap(),
        ])
        .unwrap();
        let coeffs = vec![-2.75; basis.num_coeffs()];
        let f = basis.eval(&coeffs, &[0.3, 2.9, 2.1]).unwrap();
        assert_abs_diff_eq!(f, -2.75, epsilon = 1e-12);
        let zero = CoefficientGrid::zeros(basis);
        assert_eq!(zero.eval(&[0.3, 2.9, 2.1]).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let basis = TensorBasis::new(vec![
            KnotAxis::new(0.0, 1.0, 6).unwrap(),
            KnotAxis::new(0.0, 1.0, 6).unwrap(),
        ])
        .unwrap();
        assert!(matches!(
            basis.eval(&[0.0; 35], &[0.5, 0.5]),
            Err(Error::Shape(_))
        ));
        assert!(CoefficientGrid::new(basis, vec![0.0; 37]).is_err());
    }

    #[test]
    fn lexicographic_index() {
        let basis = TensorBasis::new(vec![
            KnotAxis::new(0.0, 1.0, 5).unwrap(),
            KnotAxis::new(0.0, 1.0, 6).unwrap(),
            KnotAxis::new(0.0, 1.0, 7).unwrap(),
        ])
        .unwrap();
        assert_eq!(basis.linear_index(&[2, 3, 4]), (2 * 6 + 3) * 7 + 4);
    }

    fn cloud(points: &[[f64; 2]]) -> OrientedPointCloud {
        let normals = vec![[1.0, 0.0]; points.len()];
        OrientedPointCloud::new(
            2,
            points.iter().flatten().copied().collect(),
            normals.iter().flatten().copied().collect(),
        )
        .unwrap()
    }

    #[test]
    fn padded_unit_square() {
        let c = cloud(&[[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]]);
        let basis = domain_from_cloud(&c, 0.1, &[30, 30]).unwrap();
        for axis in basis.axes() {
            assert_abs_diff_eq!(axis.domain_min(), -0.1, epsilon = 1e-15);
            assert_abs_diff_eq!(axis.domain_max(), 1.1, epsilon = 1e-15);
            assert_eq!(axis.num_basis(), 30);
        }
    }

    #[test]
    fn degenerate_axis_uses_largest_extent() {
        let c = cloud(&[[0.0, 2.0], [4.0, 2.0]]);
        let basis = domain_from_cloud(&c, 0.1, &[8, 8]).unwrap();
        let y = basis.axes()[1];
        assert_abs_diff_eq!(y.domain_min(), 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(y.domain_max(), 2.4, epsilon = 1e-12);
    }

    #[test]
    fn coincident_points_rejected() {
        let c = cloud(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            domain_from_cloud(&c, 0.1, &[8, 8]),
            Err(Error::Input(_))
        ));
        let c = cloud(&[[0.0, 0.0], [1.0, 1.0]]);
        assert!(domain_from_cloud(&c, 0.1, &[8, 3]).is_err());
        assert!(domain_from_cloud(&c, -0.1, &[8, 8]).is_err());
    }
}
