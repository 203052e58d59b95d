//! Implicit B-spline reconstruction of curves and surfaces from oriented
//! point clouds.
//!
//! A cloud of points with normals is turned into a scalar field
//! `f = Σ C B(x)` over a uniform cubic tensor-product basis. Offset samples
//! along the normals receive the values `±ε`, data points receive `0`, and
//! the coefficients are found by progressive-iterative approximation: each
//! step feeds the residuals at the samples back into the coefficients they
//! touch. Started from zero, the iteration converges to the minimum-norm
//! least-squares fit, which keeps the field free of spurious zero sheets far
//! from the data. The zero level set is then extracted by marching squares
//! or marching cubes.

pub mod bspline;
pub mod colloc;
pub mod error;
pub mod io;
pub mod levelset;
pub mod offsets;
pub mod pipeline;
pub mod solver;
pub mod synth;

pub use bspline::{domain_from_cloud, CoefficientGrid, KnotAxis, TensorBasis};
pub use colloc::CollocationMatrix;
pub use error::{Error, Result};
pub use levelset::{CurveSet, LevelSetMesh, Polyline, SampleGrid, TriangleMesh};
pub use offsets::{augment, AugmentedSamples, OffsetScheme, OffsetSides, OrientedPointCloud};
pub use pipeline::{extract_level_set, reconstruct, FitConfig, FitProblem, Reconstruction};
pub use solver::{
    ipia_solve, max_error_at_data, residual_step, Ipia, SolveReport, SolverConfig, StopReason,
};
