#![allow(dead_code)]

use ipia::{AugmentedSamples, CollocationMatrix, KnotAxis, TensorBasis};
use ipia_oracle::{Axis, DenseSystem};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A small random collocation problem with its sparse and dense forms.
pub struct Instance {
    pub basis: TensorBasis,
    pub axes: Vec<Axis>,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub matrix: CollocationMatrix,
    pub dense: DenseSystem,
}

impl Instance {
    pub fn targets_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.targets)
    }
}

pub fn build(axes: Vec<Axis>, points: Vec<Vec<f64>>, targets: Vec<f64>) -> Instance {
    let basis = TensorBasis::new(
        axes.iter()
            .map(|a| KnotAxis::new(a.min, a.max, a.num_basis).unwrap())
            .collect(),
    )
    .unwrap();
    let dim = axes.len();
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let samples = AugmentedSamples::new(dim, flat, targets.clone(), points.len()).unwrap();
    let matrix = CollocationMatrix::assemble(&basis, &samples).unwrap();
    let dense = DenseSystem::collocation(&axes, &points, &targets).unwrap();
    Instance {
        basis,
        axes,
        points,
        targets,
        matrix,
        dense,
    }
}

/// Random domain per axis, random sample points inside it, random targets.
/// Points keep a distance of `separation` knot spacings from each other;
/// placement gives up after a fixed number of rejections, so the row count
/// can fall short of the drawn target.
pub fn random_instance(seed: u64, dim: usize, max_grid: usize, rows: (usize, usize)) -> Instance {
    separated_instance(seed, dim, max_grid, rows, 0.0)
}

pub fn separated_instance(
    seed: u64,
    dim: usize,
    max_grid: usize,
    rows: (usize, usize),
    separation: f64,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes: Vec<Axis> = (0..dim)
        .map(|_| {
            let min = rng.gen_range(-2.0..1.0);
            let width = rng.gen_range(0.5..3.0);
            Axis {
                min,
                max: min + width,
                num_basis: rng.gen_range(4..=max_grid),
            }
        })
        .collect();
    let n = rng.gen_range(rows.0..=rows.1);
    let spacing: Vec<f64> = axes
        .iter()
        .map(|a| (a.max - a.min) / (a.num_basis - 3) as f64)
        .collect();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n && attempts < 10_000 {
        attempts += 1;
        let p: Vec<f64> = axes.iter().map(|a| rng.gen_range(a.min..=a.max)).collect();
        let clear = points.iter().all(|q| {
            let d2: f64 = p
                .iter()
                .zip(q)
                .zip(&spacing)
                .map(|((x, y), h)| ((x - y) / h).powi(2))
                .sum();
            d2 >= separation * separation
        });
        if clear {
            points.push(p);
        }
    }
    let targets = (0..points.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    build(axes, points, targets)
}

/// Smallest nonzero eigenvalue of `BᵀB` relative to the largest, with zero
/// decided by the pseudoinverse cutoff.
pub fn spectral_gap(inst: &Instance) -> f64 {
    let ev = ipia_oracle::eigenvalues(&inst.dense);
    let max = ev.max();
    ev.iter()
        .filter(|&&v| v > ipia_oracle::SVD_CUTOFF * max)
        .fold(f64::INFINITY, |m, &v| m.min(v))
        / max
}
