use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use ipia::io::{read_cloud, write_cloud, write_coeffs, write_mesh};
use ipia::synth::{generate, Gap, Shape, SynthOptions, Thinning};
use ipia::{
    extract_level_set, CoefficientGrid, FitConfig, FitProblem, LevelSetMesh, OffsetScheme,
    OffsetSides, OrientedPointCloud, SolveReport, SolverConfig,
};

use crate::args::{
    BenchArgs, FitArgs, ReconstructArgs, RobustnessArgs, ShapeArg, SnapshotArgs, SynthArgs,
};
use crate::report::Report;

/// Rejected command-line input that clap cannot check on its own.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Usage(pub String);

/// Tags an error with the pipeline stage it came from.
pub trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T>;
}

impl<T, E> Stage<T> for std::result::Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn stage(self, name: &'static str) -> Result<T> {
        self.map_err(|e| e.into().context(name))
    }
}

/// Objective rises above this absolute slack count as monotonicity failures.
pub const MONOTONE_SLACK: f64 = 1e-12;

fn load(args: &FitArgs) -> Result<OrientedPointCloud> {
    read_cloud(&args.input, None).stage("read")
}

fn fit_config(args: &FitArgs, cloud: &OrientedPointCloud, value_noise: f64) -> Result<FitConfig> {
    let grid = args
        .grid
        .for_dim(cloud.dim())
        .map_err(Usage)
        .stage("config")?;
    let sigma = args
        .sigma
        .unwrap_or_else(|| OffsetScheme::default_for(cloud).sigma);
    let scheme = OffsetScheme {
        sigma,
        epsilon: args.epsilon,
        sides: args.sides.into(),
        value_noise,
    };
    scheme.validate().stage("config")?;
    let solver = SolverConfig {
        mu: args.mu,
        max_iters: args.max_iters,
        tol: args.tol,
        record_history: true,
    };
    solver.validate().stage("config")?;
    if !(args.padding >= 0.0 && args.padding.is_finite()) {
        return Err(Usage(format!(
            "padding must be nonnegative, got {}",
            args.padding
        )))
        .stage("config");
    }
    Ok(FitConfig {
        grid,
        padding: args.padding,
        scheme: Some(scheme),
        solver,
        seed: args.seed,
    })
}

fn extraction_res(args: &FitArgs, dim: usize) -> Result<Option<Vec<usize>>> {
    args.extract_res
        .as_ref()
        .map(|d| d.for_dim(dim).map_err(Usage))
        .transpose()
        .stage("config")
}

fn emit(report: &Report, path: Option<&Path>) -> Result<()> {
    let text = report.render();
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("{}", p.display()))
            .stage("write"),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `dir/name.ext` with `suffix` appended to the file stem.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn describe_inputs(
    r: &mut Report,
    args: &FitArgs,
    cloud: &OrientedPointCloud,
    problem: &FitProblem,
) {
    let grid: Vec<String> = problem
        .basis
        .axes()
        .iter()
        .map(|a| a.num_basis().to_string())
        .collect();
    r.put("input", args.input.display());
    r.put("dimension", cloud.dim());
    r.put("points", cloud.len());
    r.put("grid", grid.join("x"));
    r.put("lower", join(&problem.basis.lower()));
    r.put("upper", join(&problem.basis.upper()));
    r.put("samples", problem.samples.len());
    r.put("sigma", problem.scheme.sigma);
    r.put("epsilon", problem.scheme.epsilon);
    let sides = match problem.scheme.sides {
        OffsetSides::OutsideOnly => "outside",
        OffsetSides::InsideOnly => "inside",
        OffsetSides::TwoSided => "both",
    };
    r.put("sides", sides);
    r.put("value_noise", problem.scheme.value_noise);
    r.put("seed", args.seed);
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

/// Largest increase between consecutive recorded objectives, including the
/// final one.
pub fn max_rise(report: &SolveReport) -> f64 {
    let mut values = report.objective_history.clone().unwrap_or_default();
    values.push(report.final_objective);
    values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn describe_solve(r: &mut Report, prefix: &str, s: &SolveReport) {
    let rise = max_rise(s);
    r.put(format!("{prefix}mu"), s.mu_used);
    r.put(format!("{prefix}iterations"), s.iterations_run);
    r.put(format!("{prefix}stop_reason"), s.stop_reason.as_str());
    r.put(format!("{prefix}final_objective"), s.final_objective);
    r.put(format!("{prefix}final_update_norm"), s.final_update_norm);
    if let Some(e) = s.max_abs_at_data {
        r.put(format!("{prefix}max_error"), e);
    }
    r.put(format!("{prefix}objective_max_rise"), rise);
    r.put(
        format!("{prefix}objective_monotone"),
        rise <= MONOTONE_SLACK,
    );
}

fn describe_mesh(r: &mut Report, prefix: &str, mesh: &LevelSetMesh) {
    match mesh {
        LevelSetMesh::Curves(c) => {
            r.put(format!("{prefix}polylines"), c.polylines.len());
            r.put(
                format!("{prefix}closed_polylines"),
                c.polylines.iter().filter(|p| p.closed).count(),
            );
            r.put(
                format!("{prefix}curve_vertices"),
                c.polylines.iter().map(|p| p.points.len()).sum::<usize>(),
            );
        }
        LevelSetMesh::Surface(m) => {
            r.put(format!("{prefix}vertices"), m.vertices.len());
            r.put(format!("{prefix}triangles"), m.triangles.len());
            r.put(format!("{prefix}watertight"), m.is_watertight());
            r.put(
                format!("{prefix}euler_characteristic"),
                m.euler_characteristic(),
            );
        }
    }
}

fn parse_direction(arg: &str, what: &str) -> Result<(f64, Vec<f64>)> {
    let (value, axis) = arg
        .split_once('@')
        .ok_or_else(|| Usage(format!("{what} expects VALUE@X,Y[,Z], got '{arg}'")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| Usage(format!("'{value}' in {what} is not a number")))?;
    let axis = axis
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Usage(format!("'{t}' in {what} is not a number")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((value, axis))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let shape = match args.shape {
        ShapeArg::Circle => Shape::Circle {
            radius: args.radius,
        },
        ShapeArg::Flower => Shape::Flower,
        ShapeArg::Sphere => Shape::Sphere {
            radius: args.radius,
        },
        ShapeArg::Torus => Shape::Torus {
            major: args.major,
            minor: args.minor,
        },
        ShapeArg::Gyroid => Shape::Gyroid {
            half_extent: args.half_extent,
        },
    };
    let mut opts = SynthOptions::new(args.count);
    opts.seed = args.seed;
    opts.jitter = args.jitter;
    if let Some(g) = &args.gap {
        let (degrees, axis) = parse_direction(g, "--gap").stage("config")?;
        opts.gap = Some(Gap {
            axis,
            width: degrees.to_radians(),
        });
    }
    if let Some(t) = &args.thin {
        let (keep, axis) = parse_direction(t, "--thin").stage("config")?;
        opts.thinning = Some(Thinning { axis, keep });
    }
    let cloud = generate(shape, &opts).stage("synth")?;
    write_cloud(&cloud, &args.output).stage("write")
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let start = Instant::now();
    let fit = &args.fit;
    let cloud = load(fit)?;
    let read_time = start.elapsed();
    let config = fit_config(fit, &cloud, fit.value_noise)?;
    let res = extraction_res(fit, cloud.dim())?;

    let problem = FitProblem::prepare(&cloud, &config).stage("prepare")?;
    let t = Instant::now();
    let (coeffs, solve) = problem.solve(&config.solver).stage("solve")?;
    let solve_time = t.elapsed();
    let t = Instant::now();
    let mesh = extract_level_set(&coeffs, res.as_deref()).stage("extract")?;
    let extract_time = t.elapsed();

    let t = Instant::now();
    if let Some(out) = &args.output {
        write_mesh(&mesh, out).stage("write")?;
    }
    if let Some(out) = &args.coeffs {
        write_coeffs(&coeffs, out).stage("write")?;
    }
    let write_time = t.elapsed();

    let mut r = Report::new("reconstruct");
    describe_inputs(&mut r, fit, &cloud, &problem);
    describe_solve(&mut r, "", &solve);
    describe_mesh(&mut r, "", &mesh);
    if let Some(out) = &args.output {
        r.put("mesh_file", out.display());
    }
    if let Some(out) = &args.coeffs {
        r.put("coeffs_file", out.display());
    }
    stage_times(
        &mut r,
        read_time,
        &problem,
        solve_time,
        extract_time,
        Some(write_time),
    );
    r.time("total", start.elapsed());
    emit(&r, fit.report.as_deref())
}

fn stage_times(
    r: &mut Report,
    read: Duration,
    problem: &FitProblem,
    solve: Duration,
    extract: Duration,
    write: Option<Duration>,
) {
    r.put_timing("threads", rayon::current_num_threads());
    r.time("read", read);
    r.time("domain", problem.timings.domain);
    r.time("augment", problem.timings.augment);
    r.time("assembly", problem.timings.assembly);
    r.time("solve", solve);
    r.time("extraction", extract);
    if let Some(w) = write {
        r.time("write", w);
    }
}

pub fn snapshots(args: &SnapshotArgs) -> Result<()> {
    if args.iters.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Usage(format!(
            "--iters must be strictly ascending, got {:?}",
            args.iters
        ))
        .into());
    }
    let start = Instant::now();
    let fit = &args.fit;
    let cloud = load(fit)?;
    let config = fit_config(fit, &cloud, fit.value_noise)?;
    let res = extraction_res(fit, cloud.dim())?;
    let problem = FitProblem::prepare(&cloud, &config).stage("prepare")?;
    let mut state = problem.iterate(config.solver.mu).stage("solve")?;

    let mut r = Report::new("snapshots");
    describe_inputs(&mut r, fit, &cloud, &problem);
    r.put("mu", state.mu());
    r.put(
        "snapshots",
        args.iters
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );

    let mut previous = f64::INFINITY;
    let mut monotone = true;
    for &k in &args.iters {
        while state.iterations() < k {
            let step = state.step().stage("solve")?;
            monotone &= step.objective <= previous + MONOTONE_SLACK;
            previous = step.objective;
        }
        let objective = state.objective();
        monotone &= objective <= previous + MONOTONE_SLACK;
        previous = objective;
        let coeffs = CoefficientGrid::new(problem.basis.clone(), state.coeffs().to_vec())
            .stage("extract")?;
        let mesh = extract_level_set(&coeffs, res.as_deref()).stage("extract")?;
        let prefix = format!("iter{k}.");
        r.put(format!("{prefix}objective"), objective);
        r.put(
            format!("{prefix}max_error"),
            problem.max_error(state.coeffs()).stage("solve")?,
        );
        describe_mesh(&mut r, &prefix, &mesh);
        if let Some(out) = &args.output {
            let path = suffixed(out, &format!("iter{k}"));
            write_mesh(&mesh, &path).stage("write")?;
            r.put(format!("{prefix}file"), path.display());
        }
    }
    r.put("objective_monotone", monotone);
    r.put_timing("threads", rayon::current_num_threads());
    r.time("assembly", problem.timings.assembly);
    r.time("total", start.elapsed());
    emit(&r, fit.report.as_deref())
}

pub fn robustness(args: &RobustnessArgs) -> Result<()> {
    if args.noise.is_empty() {
        return Err(Usage("--noise needs at least one level".into()).into());
    }
    let start = Instant::now();
    let fit = &args.fit;
    let cloud = load(fit)?;
    let configs = args
        .noise
        .iter()
        .map(|&level| fit_config(fit, &cloud, level))
        .collect::<Result<Vec<_>>>()?;
    let res = extraction_res(fit, cloud.dim())?;

    let mut r = Report::new("robustness");
    r.put("input", fit.input.display());
    r.put("points", cloud.len());
    r.put("levels", args.noise.len());
    let mut baseline = None;
    for (i, (config, &level)) in configs.iter().zip(&args.noise).enumerate() {
        let problem = FitProblem::prepare(&cloud, config).stage("prepare")?;
        let (coeffs, solve) = problem.solve(&config.solver).stage("solve")?;
        let mesh = extract_level_set(&coeffs, res.as_deref()).stage("extract")?;
        let prefix = format!("level{i}.");
        r.put(format!("{prefix}noise"), level);
        describe_solve(&mut r, &prefix, &solve);
        describe_mesh(&mut r, &prefix, &mesh);
        let err = solve.max_abs_at_data.unwrap_or(f64::NAN);
        let base = *baseline.get_or_insert(err);
        r.put(format!("{prefix}error_ratio"), err / base);
        if let Some(out) = &args.output {
            let path = suffixed(out, &format!("noise{i}"));
            write_mesh(&mesh, &path).stage("write")?;
            r.put(format!("{prefix}file"), path.display());
        }
    }
    r.put_timing("threads", rayon::current_num_threads());
    r.time("total", start.elapsed());
    emit(&r, fit.report.as_deref())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let start = Instant::now();
    let fit = &args.fit;
    let cloud = load(fit)?;
    let read_time = start.elapsed();
    let config = fit_config(fit, &cloud, fit.value_noise)?;
    let res = extraction_res(fit, cloud.dim())?;
    let problem = FitProblem::prepare(&cloud, &config).stage("prepare")?;
    let t = Instant::now();
    let (coeffs, solve) = problem.solve(&config.solver).stage("solve")?;
    let solve_time = t.elapsed();
    let t = Instant::now();
    let mesh = extract_level_set(&coeffs, res.as_deref()).stage("extract")?;
    let extract_time = t.elapsed();
    let total = start.elapsed();

    let mut r = Report::new("bench");
    describe_inputs(&mut r, fit, &cloud, &problem);
    describe_solve(&mut r, "", &solve);
    describe_mesh(&mut r, "", &mesh);
    stage_times(&mut r, read_time, &problem, solve_time, extract_time, None);
    r.time("total", total);
    let fraction =
        problem.timings.assembly.as_secs_f64() / total.as_secs_f64().max(f64::MIN_POSITIVE);
    r.put_timing("assembly_fraction", format!("{fraction:.6}"));
    let per_iter = solve_time.as_secs_f64() / solve.iterations_run.max(1) as f64;
    r.put_timing("seconds_per_iteration", format!("{per_iter:.9}"));
    emit(&r, fit.report.as_deref())
}
