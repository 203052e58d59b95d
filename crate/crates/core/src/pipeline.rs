//! End-to-end fitting: domain, offsets, assembly, iteration, extraction.

use std::time::{Duration, Instant};

use crate::bspline::{domain_from_cloud, CoefficientGrid, TensorBasis, DEFAULT_PADDING};
use crate::colloc::CollocationMatrix;
use crate::error::{Error, Result};
use crate::levelset::{self, LevelSetMesh};
use crate::offsets::{augment, AugmentedSamples, OffsetScheme, OrientedPointCloud};
use crate::solver::{ipia_solve, max_error_at_data, Ipia, SolveReport, SolverConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    /// Basis functions per axis.
    pub grid: Vec<usize>,
    pub padding: f64,
    /// `None` selects [`OffsetScheme::default_for`] the cloud.
    pub scheme: Option<OffsetScheme>,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(grid: Vec<usize>) -> Self {
        Self {
            grid,
            padding: DEFAULT_PADDING,
            scheme: None,
            solver: SolverConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PrepareTimings {
    pub domain: Duration,
    pub augment: Duration,
    pub assembly: Duration,
}

/// Everything needed to iterate: the basis, the samples with their targets,
/// and the collocation matrix.
#[derive(Clone, Debug)]
pub struct FitProblem {
    pub cloud: OrientedPointCloud,
    pub basis: TensorBasis,
    pub scheme: OffsetScheme,
    pub samples: AugmentedSamples,
    pub matrix: CollocationMatrix,
    pub timings: PrepareTimings,
}

impl FitProblem {
    pub fn prepare(cloud: &OrientedPointCloud, config: &FitConfig) -> Result<Self> {
        let t = Instant::now();
        let basis = domain_from_cloud(cloud, config.padding, &config.grid)?;
        let domain = t.elapsed();

        let t = Instant::now();
        let scheme = config
            .scheme
            .unwrap_or_else(|| OffsetScheme::default_for(cloud));
        let samples = augment(cloud, &scheme, &basis, config.seed)?;
        let augment_time = t.elapsed();

        let t = Instant::now();
        let matrix = CollocationMatrix::assemble(&basis, &samples)?;
        let assembly = t.elapsed();

        Ok(Self {
            cloud: cloud.clone(),
            basis,
            scheme,
            samples,
            matrix,
            timings: PrepareTimings {
                domain,
                augment: augment_time,
                assembly,
            },
        })
    }

    /// Iterates from zero and records the worst data-point error.
    pub fn solve(&self, config: &SolverConfig) -> Result<(CoefficientGrid, SolveReport)> {
        let (values, mut report) = ipia_solve(&self.matrix, self.samples.targets(), config, None)?;
        report.max_abs_at_data = Some(max_error_at_data(&self.basis, &values, &self.cloud)?);
        Ok((CoefficientGrid::new(self.basis.clone(), values)?, report))
    }

    /// Iteration state from zero coefficients, for callers that inspect
    /// intermediate fits.
    pub fn iterate(&self, mu: Option<f64>) -> Result<Ipia<'_>> {
        let mu = match mu {
            Some(mu) => mu,
            None => self.matrix.mu_practical()?,
        };
        Ipia::new(&self.matrix, self.samples.targets(), mu, None)
    }

    pub fn max_error(&self, coeffs: &[f64]) -> Result<f64> {
        max_error_at_data(&self.basis, coeffs, &self.cloud)
    }
}

/// Samples the fitted field and extracts its zero set; 2D saddle cells are
/// resolved by evaluating the spline at the cell center.
pub fn extract_level_set(
    grid: &CoefficientGrid,
    resolution: Option<&[usize]>,
) -> Result<LevelSetMesh> {
    let default = levelset::default_resolution(grid.basis());
    let resolution = resolution.unwrap_or(&default);
    let field = levelset::sample_field(grid.basis(), grid.values(), resolution)?;
    let center = |p: &[f64]| grid.eval(p).unwrap_or(0.0);
    levelset::extract(&field, Some(&center))
}

/// A finished fit with per-stage wall times.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub problem: FitProblem,
    pub coeffs: CoefficientGrid,
    pub report: SolveReport,
    pub mesh: LevelSetMesh,
    pub solve_time: Duration,
    pub extraction_time: Duration,
}

pub fn reconstruct(
    cloud: &OrientedPointCloud,
    config: &FitConfig,
    extraction: Option<&[usize]>,
) -> Result<Reconstruction> {
    if config.grid.len() != cloud.dim() {
        return Err(Error::Input(format!(
            "grid has {} axes but the cloud is {}-dimensional",
            config.grid.len(),
            cloud.dim()
        )));
    }
    let problem = FitProblem::prepare(cloud, config)?;
    let t = Instant::now();
    let (coeffs, report) = problem.solve(&config.solver)?;
    let solve_time = t.elapsed();
    let t = Instant::now();
    let mesh = extract_level_set(&coeffs, extraction)?;
    let extraction_time = t.elapsed();
    Ok(Reconstruction {
        problem,
        coeffs,
        report,
        mesh,
        solve_time,
        extraction_time,
    })
}
