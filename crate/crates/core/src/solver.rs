//! Progressive-iterative approximation for implicit fits.
//!
//! Each step moves every coefficient by the weighted sum of the residuals at
//! the samples its basis function touches:
//!
//! ```text
//! C ← C + μ Bᵀ (b − B C)
//! ```
//!
//! Started from zero with `0 < μ < 2/λmax(BᵀB)`, the iterates converge to the
//! minimum-norm least-squares solution `(BᵀB)⁺ Bᵀ b`.

use crate::bspline::TensorBasis;
use crate::colloc::CollocationMatrix;
use crate::error::{Error, Result};
use crate::offsets::OrientedPointCloud;

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-7;

/// The objective may grow by at most this factor over its initial value
/// before the run is declared divergent.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Step weight; `None` selects [`CollocationMatrix::mu_practical`].
    pub mu: Option<f64>,
    pub max_iters: usize,
    /// Threshold on the ∞-norm of the coefficient update.
    pub tol: f64,
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: None,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Input(format!("mu must be positive, got {mu}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Input("max_iters must be positive".into()));
        }
        if self.tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Input(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations_run: usize,
    pub mu_used: f64,
    pub stop_reason: StopReason,
    /// `‖b − B C⁽ᵅ⁾‖²` at the start of every step, when recorded.
    pub objective_history: Option<Vec<f64>>,
    /// Objective at the returned coefficients.
    pub final_objective: f64,
    pub final_update_norm: f64,
    /// Worst `|f|` over the original data points; filled in by callers that
    /// know which rows are data points.
    pub max_abs_at_data: Option<f64>,
}

/// Outcome of a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    /// Objective at the coefficients the step started from.
    pub objective: f64,
    pub update_norm: f64,
}

/// Iteration state over a borrowed system; drives [`ipia_solve`] and lets
/// callers observe intermediate iterates.
pub struct Ipia<'a> {
    matrix: &'a CollocationMatrix,
    targets: &'a [f64],
    mu: f64,
    coeffs: Vec<f64>,
    residual: Vec<f64>,
    gradient: Vec<f64>,
    iterations: usize,
    initial_objective: Option<f64>,
}

impl<'a> Ipia<'a> {
    pub fn new(
        matrix: &'a CollocationMatrix,
        targets: &'a [f64],
        mu: f64,
        initial: Option<Vec<f64>>,
    ) -> Result<Self> {
        if targets.len() != matrix.rows() {
            return Err(Error::Shape(format!(
                "target vector has length {}, matrix has {} rows",
                targets.len(),
                matrix.rows()
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Input(format!("mu must be positive, got {mu}")));
        }
        let coeffs = initial.unwrap_or_else(|| vec![0.0; matrix.cols()]);
        if coeffs.len() != matrix.cols() {
            return Err(Error::Shape(format!(
                "initial coefficients have length {}, matrix has {} columns",
                coeffs.len(),
                matrix.cols()
            )));
        }
        Ok(Self {
            matrix,
            targets,
            mu,
            coeffs,
            residual: vec![0.0; matrix.rows()],
            gradient: vec![0.0; matrix.cols()],
            iterations: 0,
            initial_objective: None,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// `‖b − B C‖²` at the current coefficients.
    pub fn objective(&mut self) -> f64 {
        self.update_residual();
        self.residual.iter().map(|r| r * r).sum()
    }

    fn update_residual(&mut self) {
        self.matrix
            .apply_into(&self.coeffs, &mut self.residual)
            .expect("lengths fixed at construction");
        for (r, &b) in self.residual.iter_mut().zip(self.targets) {
            *r = b - *r;
        }
    }

    /// Performs one update. Fails if the iterate stops being finite or the
    /// objective exceeds [`DIVERGENCE_FACTOR`] times its starting value.
    pub fn step(&mut self) -> Result<Step> {
        let objective = self.objective();
        let initial = *self.initial_objective.get_or_insert(objective);
        if !objective.is_finite() || objective > DIVERGENCE_FACTOR * initial {
            return Err(Error::Divergence {
                iteration: self.iterations,
                mu: self.mu,
                objective,
            });
        }
        self.matrix
            .apply_transpose_into(&self.residual, &mut self.gradient)
            .expect("lengths fixed at construction");
        let mut update_norm = 0.0f64;
        for (c, &g) in self.coeffs.iter_mut().zip(&self.gradient) {
            let delta = self.mu * g;
            *c += delta;
            update_norm = update_norm.max(delta.abs());
        }
        self.iterations += 1;
        if !update_norm.is_finite() {
            return Err(Error::Divergence {
                iteration: self.iterations,
                mu: self.mu,
                objective,
            });
        }
        Ok(Step {
            objective,
            update_norm,
        })
    }
}

/// Runs the iteration until the update ∞-norm drops to `config.tol` or
/// `config.max_iters` steps have been taken. `initial` defaults to zero.
pub fn ipia_solve(
    matrix: &CollocationMatrix,
    targets: &[f64],
    config: &SolverConfig,
    initial: Option<Vec<f64>>,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let mu = match config.mu {
        Some(mu) => mu,
        None => matrix.mu_practical()?,
    };
    let mut state = Ipia::new(matrix, targets, mu, initial)?;
    let mut history = config.record_history.then(Vec::new);
    let mut stop_reason = StopReason::MaxIters;
    let mut final_update_norm = f64::INFINITY;
    while state.iterations() < config.max_iters {
        let step = state.step()?;
        if let Some(h) = history.as_mut() {
            h.push(step.objective);
        }
        final_update_norm = step.update_norm;
        if step.update_norm <= config.tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    let final_objective = state.objective();
    let report = SolveReport {
        iterations_run: state.iterations(),
        mu_used: mu,
        stop_reason,
        objective_history: history,
        final_objective,
        final_update_norm,
        max_abs_at_data: None,
    };
    Ok((state.into_coeffs(), report))
}

/// One update `C + μ Bᵀ(b − B C)`; returns the new coefficients, the update
/// ∞-norm, and `‖b − B C‖²` at the incoming `C`.
pub fn residual_step(
    matrix: &CollocationMatrix,
    targets: &[f64],
    coeffs: &[f64],
    mu: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let mut residual = matrix.apply(coeffs)?;
    if targets.len() != residual.len() {
        return Err(Error::Shape(format!(
            "target vector has length {}, matrix has {} rows",
            targets.len(),
            residual.len()
        )));
    }
    for (r, &b) in residual.iter_mut().zip(targets) {
        *r = b - *r;
    }
    let objective = residual.iter().map(|r| r * r).sum();
    let gradient = matrix.apply_transpose(&residual)?;
    let mut update_norm = 0.0f64;
    let next = coeffs
        .iter()
        .zip(&gradient)
        .map(|(&c, &g)| {
            update_norm = update_norm.max((mu * g).abs());
            c + mu * g
        })
        .collect();
    Ok((next, update_norm, objective))
}

/// Worst algebraic distance `max_i |f(p_i)|` over the data points.
pub fn max_error_at_data(
    basis: &TensorBasis,
    coeffs: &[f64],
    cloud: &OrientedPointCloud,
) -> Result<f64> {
    cloud.points().try_fold(0.0f64, |worst, p| {
        Ok(worst.max(basis.eval(coeffs, p)?.abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::KnotAxis;
    use crate::offsets::AugmentedSamples;

    fn system() -> (TensorBasis, CollocationMatrix) {
        let basis = TensorBasis::new(vec![KnotAxis::new(0.0, 1.0, 6).unwrap(); 2]).unwrap();
        let pts = [[0.1, 0.2], [0.8, 0.3], [0.45, 0.9], [0.6, 0.6]];
        let s = AugmentedSamples::new(2, pts.iter().flatten().copied().collect(), vec![0.0; 4], 4)
            .unwrap();
        let b = CollocationMatrix::assemble(&basis, &s).unwrap();
        (basis, b)
    }

    #[test]
    fn zero_targets_converge_immediately() {
        let (_, b) = system();
        let (c, report) = ipia_solve(&b, &[0.0; 4], &SolverConfig::default(), None).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert_eq!(report.iterations_run, 1);
        assert_eq!(report.stop_reason, StopReason::Converged);
        assert_eq!(report.final_objective, 0.0);
    }

    #[test]
    fn first_step_from_zero_is_scaled_gradient() {
        let (_, b) = system();
        let t = [0.3, -0.2, 0.5, 0.1];
        let mu = b.mu_practical().unwrap();
        let (next, norm, obj) = residual_step(&b, &t, &[0.0; 36], mu).unwrap();
        let g = b.apply_transpose(&t).unwrap();
        for (n, g) in next.iter().zip(&g) {
            assert_eq!(*n, mu * g);
        }
        assert_eq!(norm, g.iter().fold(0.0f64, |m, v| m.max((mu * v).abs())));
        assert!((obj - t.iter().map(|v| v * v).sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn max_iters_stop() {
        let (_, b) = system();
        let cfg = SolverConfig {
            max_iters: 3,
            record_history: true,
            ..Default::default()
        };
        let (_, report) = ipia_solve(&b, &[1.0, 0.0, -1.0, 0.5], &cfg, None).unwrap();
        assert_eq!(report.stop_reason, StopReason::MaxIters);
        assert_eq!(report.iterations_run, 3);
        assert_eq!(report.objective_history.unwrap().len(), 3);
    }

    #[test]
    fn bad_config() {
        let (_, b) = system();
        let cfg = SolverConfig {
            mu: Some(-1.0),
            ..Default::default()
        };
        assert!(ipia_solve(&b, &[0.0; 4], &cfg, None).is_err());
        assert!(matches!(
            ipia_solve(&b, &[0.0; 3], &SolverConfig::default(), None),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            ipia_solve(&b, &[0.0; 4], &SolverConfig::default(), Some(vec![0.0; 5])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn huge_mu_diverges() {
        let (_, b) = system();
        let cfg = SolverConfig {
            mu: Some(50.0),
            max_iters: 10_000,
            ..Default::default()
        };
        let err = ipia_solve(&b, &[1.0, 0.0, -1.0, 0.5], &cfg, None).unwrap_err();
        assert!(matches!(err, Error::Divergence { mu, .. } if mu == 50.0));
    }

    #[test]
    fn zero_coefficients_have_zero_error() {
        let (basis, _) = system();
        let cloud = OrientedPointCloud::new(2, vec![0.2, 0.3], vec![0.0, 1.0]).unwrap();
        assert_eq!(max_error_at_data(&basis, &[0.0; 36], &cloud).unwrap(), 0.0);
    }
}
