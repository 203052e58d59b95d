//! Analytic oriented point clouds for experiments that need no external data.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::offsets::OrientedPointCloud;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Circle {
        radius: f64,
    },
    /// Polar curve `r(θ) = 1 + 0.3 cos(5θ)`.
    Flower,
    Sphere {
        radius: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    /// `sin x cos y + sin y cos z + sin z cos x = 0` inside `[-half_extent, half_extent]³`.
    Gyroid {
        half_extent: f64,
    },
}

impl Shape {
    pub fn dim(&self) -> usize {
        match self {
            Shape::Circle { .. } | Shape::Flower => 2,
            _ => 3,
        }
    }
}

/// Removes every point whose direction from the origin lies within
/// `width / 2` radians of `axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub axis: Vec<f64>,
    pub width: f64,
}

/// Keeps only a `keep` fraction (drawn at random) of the points on the
/// positive side of `axis`.
#[derive(Clone, Debug, PartialEq)]
pub struct Thinning {
    pub axis: Vec<f64>,
    pub keep: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub count: usize,
    pub seed: u64,
    pub gap: Option<Gap>,
    pub thinning: Option<Thinning>,
    /// Standard deviation of Gaussian jitter added to positions.
    pub jitter: f64,
}

impl SynthOptions {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            seed: 0,
            gap: None,
            thinning: None,
            jitter: 0.0,
        }
    }
}

pub fn generate(shape: Shape, opts: &SynthOptions) -> Result<OrientedPointCloud> {
    if opts.count == 0 {
        return Err(Error::Input("point count must be positive".into()));
    }
    if !(opts.jitter >= 0.0 && opts.jitter.is_finite()) {
        return Err(Error::Input(format!(
            "jitter must be nonnegative, got {}",
            opts.jitter
        )));
    }
    let dim = shape.dim();
    for axis in [
        opts.gap.as_ref().map(|g| &g.axis),
        opts.thinning.as_ref().map(|t| &t.axis),
    ]
    .into_iter()
    .flatten()
    {
        if axis.len() != dim || norm(axis) == 0.0 {
            return Err(Error::Input(format!(
                "direction {axis:?} must be a nonzero {dim}-vector"
            )));
        }
    }
    if let Some(t) = &opts.thinning {
        if !(0.0..=1.0).contains(&t.keep) {
            return Err(Error::Input(format!(
                "keep fraction must lie in [0, 1], got {}",
                t.keep
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut points, normals) = match shape {
        Shape::Circle { radius } => {
            positive("radius", radius)?;
            polar(opts.count, |_| (radius, 0.0))
        }
        Shape::Flower => polar(opts.count, |t| {
            (1.0 + 0.3 * (5.0 * t).cos(), -1.5 * (5.0 * t).sin())
        }),
        Shape::Sphere { radius } => {
            positive("radius", radius)?;
            fibonacci_sphere(opts.count, radius)
        }
        Shape::Torus { major, minor } => {
            positive("minor radius", minor)?;
            if major <= minor {
                return Err(Error::Input(format!(
                    "major radius {major} must exceed minor radius {minor}"
                )));
            }
            torus(opts.count, major, minor, &mut rng)
        }
        Shape::Gyroid { half_extent } => {
            positive("half extent", half_extent)?;
            gyroid(opts.count, half_extent, &mut rng)
        }
    };

    if opts.jitter > 0.0 {
        let normal = Normal::new(0.0, opts.jitter).expect("finite deviation");
        points
            .iter_mut()
            .for_each(|v| *v += normal.sample(&mut rng));
    }

    let keep: Vec<bool> = points
        .chunks_exact(dim)
        .map(|p| {
            let in_gap = opts.gap.as_ref().is_some_and(|g| {
                let n = norm(p);
                n > 0.0
                    && (dot(p, &g.axis) / (n * norm(&g.axis)))
                        .clamp(-1.0, 1.0)
                        .acos()
                        < 0.5 * g.width
            });
            let thinned = opts
                .thinning
                .as_ref()
                .is_some_and(|t| dot(p, &t.axis) > 0.0 && rng.gen::<f64>() >= t.keep);
            !in_gap && !thinned
        })
        .collect();
    let filter = |v: Vec<f64>| -> Vec<f64> {
        v.chunks_exact(dim)
            .zip(&keep)
            .filter(|(_, &k)| k)
            .flat_map(|(c, _)| c.iter().copied())
            .collect()
    };
    let (points, normals) = (filter(points), filter(normals));
    if points.is_empty() {
        return Err(Error::Input("every generated point was removed".into()));
    }
    OrientedPointCloud::new(dim, points, normals)
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} must be positive, got {v}")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Evenly spaced samples of a polar curve given `θ ↦ (r, dr/dθ)`, with
/// outward normals.
fn polar(count: usize, curve: impl Fn(f64) -> (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let mut points = Vec::with_capacity(2 * count);
    let mut normals = Vec::with_capacity(2 * count);
    for i in 0..count {
        let t = TAU * i as f64 / count as f64;
        let (r, dr) = curve(t);
        let (s, c) = t.sin_cos();
        points.extend([r * c, r * s]);
        let tangent = [dr * c - r * s, dr * s + r * c];
        let len = norm(&tangent);
        normals.extend([tangent[1] / len, -tangent[0] / len]);
    }
    (points, normals)
}

fn fibonacci_sphere(count: usize, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let golden = PI * (3.0 - 5.0f64.sqrt());
    let mut points = Vec::with_capacity(3 * count);
    let mut normals = Vec::with_capacity(3 * count);
    for i in 0..count {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
        let rho = (1.0 - z * z).sqrt();
        let (s, c) = (golden * i as f64).sin_cos();
        let n = [rho * c, rho * s, z];
        normals.extend(n);
        points.extend(n.map(|v| radius * v));
    }
    (points, normals)
}

/// Area-uniform samples by rejection on the tube angle.
fn torus(count: usize, major: f64, minor: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut points = Vec::with_capacity(3 * count);
    let mut normals = Vec::with_capacity(3 * count);
    while points.len() < 3 * count {
        let u = rng.gen::<f64>() * TAU;
        let v = rng.gen::<f64>() * TAU;
        if rng.gen::<f64>() * (major + minor) > major + minor * v.cos() {
            continue;
        }
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        let n = [cv * cu, cv * su, sv];
        points.extend([
            (major + minor * cv) * cu,
            (major + minor * cv) * su,
            minor * sv,
        ]);
        normals.extend(n);
    }
    (points, normals)
}

fn gyroid_field(p: &[f64; 3]) -> (f64, [f64; 3]) {
    let (sx, cx) = p[0].sin_cos();
    let (sy, cy) = p[1].sin_cos();
    let (sz, cz) = p[2].sin_cos();
    let f = sx * cy + sy * cz + sz * cx;
    let g = [cx * cy - sz * sx, -sx * sy + cy * cz, -sy * sz + cz * cx];
    (f, g)
}

/// Random box points pulled onto the surface by Newton steps along the
/// gradient.
fn gyroid(count: usize, half: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let mut points = Vec::with_capacity(3 * count);
    let mut normals = Vec::with_capacity(3 * count);
    while points.len() < 3 * count {
        let mut p = [0.0; 3].map(|_: f64| rng.gen_range(-half..half));
        let mut ok = false;
        for _ in 0..50 {
            let (f, g) = gyroid_field(&p);
            let gg = g.iter().map(|v| v * v).sum::<f64>();
            if gg < 1e-12 {
                break;
            }
            if f.abs() < 1e-13 {
                ok = true;
                break;
            }
            for d in 0..3 {
                p[d] -= f * g[d] / gg;
            }
        }
        if !ok || p.iter().any(|v| v.abs() > half) {
            continue;
        }
        let (_, g) = gyroid_field(&p);
        let len = norm(&g);
        points.extend(p);
        normals.extend(g.map(|v| v / len));
    }
    (points, normals)
}
