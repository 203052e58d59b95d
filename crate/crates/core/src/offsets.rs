//! Oriented point clouds and the auxiliary offset samples that pin the
//! implicit field away from the trivial zero solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bspline::TensorBasis;
use crate::error::{Error, Result};

/// Data points in 2D or 3D with one unit normal per point.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientedPointCloud {
    dim: usize,
    points: Vec<f64>,
    normals: Vec<f64>,
}

impl OrientedPointCloud {
    /// Builds a cloud from flat coordinate buffers, normalizing every normal.
    pub fn new(dim: usize, points: Vec<f64>, mut normals: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Input(format!(
                "point dimension must be 2 or 3, got {dim}"
            )));
        }
        if points.len() != normals.len() || !points.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!(
                "{} point coordinates and {} normal coordinates for dimension {dim}",
                points.len(),
                normals.len()
            )));
        }
        if points.is_empty() {
            return Err(Error::Input("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("point {} is not finite", i / dim)));
        }
        for (index, n) in normals.chunks_exact_mut(dim).enumerate() {
            let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::ZeroNormal { index });
            }
            n.iter_mut().for_each(|v| *v /= len);
        }
        Ok(Self {
            dim,
            points,
            normals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.normals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn normals(&self) -> std::slice::ChunksExact<'_, f64> {
        self.normals.chunks_exact(self.dim)
    }

    /// Length of the bounding-box diagonal.
    pub fn bbox_diagonal(&self) -> f64 {
        (0..self.dim)
            .map(|d| {
                let (lo, hi) = self
                    .points()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                        (l.min(p[d]), h.max(p[d]))
                    });
                (hi - lo) * (hi - lo)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Which sides of the data receive offset samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetSides {
    OutsideOnly,
    InsideOnly,
    TwoSided,
}

/// Parameters for generating offset samples along the normals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffsetScheme {
    /// Offset distance in world units.
    pub sigma: f64,
    /// Target field magnitude at offset samples.
    pub epsilon: f64,
    pub sides: OffsetSides,
    /// Half-width of the uniform perturbation applied to each offset target.
    pub value_noise: f64,
}

pub const DEFAULT_EPSILON: f64 = 0.5;

/// Default offset distance as a fraction of the bounding-box diagonal.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.01;

impl OffsetScheme {
    /// Two-sided scheme with `epsilon = 0.5` and `sigma` set to 1% of the
    /// cloud's bounding-box diagonal.
    pub fn default_for(cloud: &OrientedPointCloud) -> Self {
        Self {
            sigma: DEFAULT_SIGMA_FRACTION * cloud.bbox_diagonal(),
            epsilon: DEFAULT_EPSILON,
            sides: OffsetSides::TwoSided,
            value_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Input(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Input(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.value_noise >= 0.0 && self.value_noise < self.epsilon) {
            return Err(Error::Input(format!(
                "value noise must lie in [0, epsilon = {}), got {}",
                self.epsilon, self.value_noise
            )));
        }
        Ok(())
    }
}

/// Surface samples (target 0) followed by offset samples (target ±epsilon).
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSamples {
    dim: usize,
    positions: Vec<f64>,
    targets: Vec<f64>,
    n_surface: usize,
}

impl AugmentedSamples {
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        targets: Vec<f64>,
        n_surface: usize,
    ) -> Result<Self> {
        if positions.len() != targets.len() * dim || n_surface > targets.len() {
            return Err(Error::Shape(format!(
                "{} coordinates, {} targets, {n_surface} surface samples in dimension {dim}",
                positions.len(),
                targets.len()
            )));
        }
        Ok(Self {
            dim,
            positions,
            targets,
            n_surface,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_surface(&self) -> usize {
        self.n_surface
    }

    pub fn n_offset(&self) -> usize {
        self.targets.len() - self.n_surface
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn positions(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// The right-hand side `b` of the fitting system.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// Places the data points (target 0) and their offsets along the normals.
///
/// Outside offsets `p + sigma n` come before inside offsets `p - sigma n`;
/// each offset target is `±epsilon` plus a uniform draw from
/// `[-value_noise, value_noise]` taken from a generator seeded with `seed`.
pub fn augment(
    cloud: &OrientedPointCloud,
    scheme: &OffsetScheme,
    basis: &TensorBasis,
    seed: u64,
) -> Result<AugmentedSamples> {
    scheme.validate()?;
    if basis.dim() != cloud.dim() {
        return Err(Error::Shape(format!(
            "{}-dimensional cloud against a {}-dimensional basis",
            cloud.dim(),
            basis.dim()
        )));
    }
    let dim = cloud.dim();
    let n = cloud.len();
    let signs: &[f64] = match scheme.sides {
        OffsetSides::OutsideOnly => &[1.0],
        OffsetSides::InsideOnly => &[-1.0],
        OffsetSides::TwoSided => &[1.0, -1.0],
    };
    let total = n * (1 + signs.len());
    let mut positions = Vec::with_capacity(total * dim);
    let mut targets = Vec::with_capacity(total);
    for p in cloud.points() {
        positions.extend_from_slice(p);
        targets.push(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = [0.0; 3];
    for &sign in signs {
        for (p, nrm) in cloud.points().zip(cloud.normals()) {
            for d in 0..dim {
                q[d] = p[d] + sign * scheme.sigma * nrm[d];
            }
            if !basis.contains(&q[..dim]) {
                return Err(Error::OffsetOutsideDomain {
                    index: targets.len(),
                    position: q[..dim].to_vec(),
                });
            }
            let noise = if scheme.value_noise > 0.0 {
                rng.gen_range(-scheme.value_noise..=scheme.value_noise)
            } else {
                0.0
            };
            positions.extend_from_slice(&q[..dim]);
            targets.push(sign * scheme.epsilon + noise);
        }
    }
    AugmentedSamples::new(dim, positions, targets, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::KnotAxis;

    fn square_basis(lo: f64, hi: f64) -> TensorBasis {
        TensorBasis::new(vec![KnotAxis::new(lo, hi, 8).unwrap(); 2]).unwrap()
    }

    fn single() -> OrientedPointCloud {
        OrientedPointCloud::new(2, vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn outside_only_single_point() {
        let scheme = OffsetScheme {
            sigma: 0.1,
            epsilon: 0.5,
            sides: OffsetSides::OutsideOnly,
            value_noise: 0.0,
        };
        let s = augment(&single(), &scheme, &square_basis(-1.0, 1.0), 0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.position(0), &[0.0, 0.0]);
        assert_eq!(s.position(1), &[0.1, 0.0]);
        assert_eq!(s.targets(), &[0.0, 0.5]);
        assert_eq!((s.n_surface(), s.n_offset()), (1, 1));
    }

    #[test]
    fn two_sided_adds_inside_offset() {
        let scheme = OffsetScheme {
            sigma: 0.1,
            epsilon: 0.5,
            sides: OffsetSides::TwoSided,
            value_noise: 0.0,
        };
        let s = augment(&single(), &scheme, &square_basis(-1.0, 1.0), 0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.position(2), &[-0.1, 0.0]);
        assert_eq!(s.targets()[2], -0.5);
    }

    #[test]
    fn inside_only() {
        let scheme = OffsetScheme {
            sigma: 0.1,
            epsilon: 0.5,
            sides: OffsetSides::InsideOnly,
            value_noise: 0.0,
        };
        let s = augment(&single(), &scheme, &square_basis(-1.0, 1.0), 0).unwrap();
        assert_eq!(s.targets(), &[0.0, -0.5]);
    }

    #[test]
    fn offset_leaving_domain_is_reported() {
        let scheme = OffsetScheme {
            sigma: 0.1,
            epsilon: 0.5,
            sides: OffsetSides::TwoSided,
            value_noise: 0.0,
        };
        let err = augment(&single(), &scheme, &square_basis(-0.05, 1.0), 0).unwrap_err();
        assert!(
            matches!(err, Error::OffsetOutsideDomain { index: 2, .. }),
            "{err}"
        );
    }

    #[test]
    fn scheme_validation() {
        let mut s = OffsetScheme {
            sigma: 0.1,
            epsilon: 0.5,
            sides: OffsetSides::TwoSided,
            value_noise: 0.5,
        };
        assert!(s.validate().is_err());
        s.value_noise = 0.49;
        assert!(s.validate().is_ok());
        s.sigma = 0.0;
        assert!(s.validate().is_err());
        s.sigma = 0.1;
        s.epsilon = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn normals_are_normalized_and_validated() {
        let c = OrientedPointCloud::new(3, vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 2.0]).unwrap();
        assert_eq!(c.normal(0), &[0.0, 0.0, 1.0]);
        let err = OrientedPointCloud::new(2, vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(err, Err(Error::ZeroNormal { index: 1 })));
        assert!(matches!(
            OrientedPointCloud::new(2, vec![], vec![]),
            Err(Error::Input(_))
        ));
    }
}
