use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ipia::OffsetSides;

#[derive(Parser, Debug)]
#[command(
    name = "ipia",
    version,
    about = "Implicit B-spline reconstruction from oriented point clouds"
)]
pub struct Cli {
    /// Worker threads for assembly, products and sampling (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write an analytic oriented point cloud.
    Synth(SynthArgs),
    /// Fit a field to a cloud and extract its zero level set.
    Reconstruct(ReconstructArgs),
    /// Extract the level set at selected iteration counts.
    Snapshots(SnapshotArgs),
    /// Refit under a sweep of offset-value noise levels.
    Robustness(RobustnessArgs),
    /// Report per-stage wall times.
    Bench(BenchArgs),
}

/// `30`, `30x30`, or `30x30x30`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dims(pub Vec<usize>);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let dims = s
            .split(['x', 'X'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("'{p}' in '{s}' is not a positive integer"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if dims.is_empty() || dims.len() > 3 || dims.contains(&0) {
            return Err(format!(
                "expected N, NxN or NxNxN with positive N, got '{s}'"
            ));
        }
        Ok(Dims(dims))
    }
}

impl Dims {
    /// Expands a single count to every axis.
    pub fn for_dim(&self, dim: usize) -> Result<Vec<usize>, String> {
        match self.0.len() {
            1 => Ok(vec![self.0[0]; dim]),
            n if n == dim => Ok(self.0.clone()),
            n => Err(format!("{n} sizes given for a {dim}-dimensional cloud")),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SidesArg {
    Outside,
    Inside,
    Both,
}

impl From<SidesArg> for OffsetSides {
    fn from(s: SidesArg) -> Self {
        match s {
            SidesArg::Outside => OffsetSides::OutsideOnly,
            SidesArg::Inside => OffsetSides::InsideOnly,
            SidesArg::Both => OffsetSides::TwoSided,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// Oriented cloud (.xyzn / .xyz rows of `x y nx ny` or `x y z nx ny nz`, or ASCII .ply).
    #[arg(long)]
    pub input: PathBuf,

    /// Basis functions per axis.
    #[arg(long, default_value = "30")]
    pub grid: Dims,

    /// Offset distance; defaults to 1% of the bounding-box diagonal.
    #[arg(long)]
    pub sigma: Option<f64>,

    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value = "both")]
    pub sides: SidesArg,

    /// Half-width of the uniform noise added to offset targets.
    #[arg(long, default_value_t = 0.0)]
    pub value_noise: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fraction of each axis extent added on both sides of the domain.
    #[arg(long, default_value_t = 0.1)]
    pub padding: f64,

    /// Step weight; defaults to 2 / ‖BᵀB‖∞.
    #[arg(long)]
    pub mu: Option<f64>,

    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,

    /// Stop once the largest coefficient update is at most this.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,

    /// Sampling lattice for extraction; defaults to 4 nodes per basis function.
    #[arg(long)]
    pub extract_res: Option<Dims>,

    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ShapeArg {
    Circle,
    Flower,
    Sphere,
    Torus,
    Gyroid,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub shape: ShapeArg,

    #[arg(long, default_value_t = 200)]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Circle or sphere radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,

    #[arg(long, default_value_t = 0.5)]
    pub major: f64,

    #[arg(long, default_value_t = 0.2)]
    pub minor: f64,

    /// Gyroid box half-width.
    #[arg(long, default_value_t = 3.0)]
    pub half_extent: f64,

    /// Drop points within WIDTH/2 degrees of a direction: `WIDTH@X,Y[,Z]`.
    #[arg(long)]
    pub gap: Option<String>,

    /// Keep a fraction of the points on the positive side of a direction: `KEEP@X,Y[,Z]`.
    #[arg(long)]
    pub thin: Option<String>,

    /// Standard deviation of Gaussian position noise.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,

    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Extracted level set (.svg or .poly for curves, .obj for surfaces).
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Fitted coefficient grid.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SnapshotArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Ascending iteration counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub iters: Vec<usize>,

    /// File name pattern; `name.svg` becomes `name_iter5.svg` and so on.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Offset-value noise levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.05,0.1")]
    pub noise: Vec<f64>,

    /// File name pattern; `name.svg` becomes `name_noise0.svg` and so on.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub fit: FitArgs,
}
