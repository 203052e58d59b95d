//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Clouds cross the boundary as flat `[x, y, nx, ny, ...]` arrays and curves
//! as `[closed, count, x0, y0, x1, y1, ...]` records laid end to end.

use ipia::synth::{generate, Gap, Shape, SynthOptions};
use ipia::{
    extract_level_set, residual_step, CoefficientGrid, FitConfig, FitProblem, LevelSetMesh,
    OffsetScheme, OffsetSides, OrientedPointCloud,
};
use wasm_bindgen::prelude::*;

/// Points on an analytic curve, optionally with an angular gap of
/// `gap_degrees` centred on direction `gap_angle` (degrees).
pub fn synth_cloud(
    shape: &str,
    count: usize,
    gap_degrees: f64,
    gap_angle: f64,
    seed: u64,
) -> ipia::Result<Vec<f64>> {
    let shape = match shape {
        "circle" => Shape::Circle { radius: 1.0 },
        "flower" => Shape::Flower,
        other => return Err(ipia::Error::Input(format!("unknown shape '{other}'"))),
    };
    let mut opts = SynthOptions::new(count);
    opts.seed = seed;
    if gap_degrees > 0.0 {
        let a = gap_angle.to_radians();
        opts.gap = Some(Gap {
            axis: vec![a.cos(), a.sin()],
            width: gap_degrees.to_radians(),
        });
    }
    Ok(interleave(&generate(shape, &opts)?))
}

/// Resamples a closed freehand stroke to `count` points at equal arc length.
/// Normals point away from the enclosed region whichever way it was drawn.
pub fn stroke_to_cloud(xy: &[f64], count: usize) -> ipia::Result<Vec<f64>> {
    let pts: Vec<[f64; 2]> = xy.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    if pts.len() < 3 || count < 3 {
        return Err(ipia::Error::Input(
            "a stroke needs at least three points".into(),
        ));
    }
    let n = pts.len();
    let seg = |i: usize| {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        (b[0] - a[0]).hypot(b[1] - a[1])
    };
    let total: f64 = (0..n).map(seg).sum();
    if total <= 0.0 {
        return Err(ipia::Error::Input("stroke has zero length".into()));
    }
    let area: f64 = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum();
    let turn = if area >= 0.0 { 1.0 } else { -1.0 };

    let mut out = Vec::with_capacity(4 * count);
    let (mut i, mut start) = (0, 0.0);
    for k in 0..count {
        let s = total * k as f64 / count as f64;
        while start + seg(i) < s {
            start += seg(i);
            i += 1;
        }
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let len = seg(i);
        let t = if len > 0.0 { (s - start) / len } else { 0.0 };
        let (tx, ty) = (
            (b[0] - a[0]) / len.max(f64::MIN_POSITIVE),
            (b[1] - a[1]) / len.max(f64::MIN_POSITIVE),
        );
        out.extend([
            a[0] + t * (b[0] - a[0]),
            a[1] + t * (b[1] - a[1]),
            turn * ty,
            -turn * tx,
        ]);
    }
    Ok(out)
}

fn interleave(cloud: &OrientedPointCloud) -> Vec<f64> {
    cloud
        .points()
        .zip(cloud.normals())
        .flat_map(|(p, n)| [p[0], p[1], n[0], n[1]])
        .collect()
}

fn to_cloud(flat: &[f64]) -> ipia::Result<OrientedPointCloud> {
    if flat.is_empty() || !flat.len().is_multiple_of(4) {
        return Err(ipia::Error::Input(format!(
            "expected x y nx ny groups, got {} values",
            flat.len()
        )));
    }
    let (mut points, mut normals) = (Vec::new(), Vec::new());
    for r in flat.chunks_exact(4) {
        points.extend([r[0], r[1]]);
        normals.extend([r[2], r[3]]);
    }
    OrientedPointCloud::new(2, points, normals)
}

/// A fit in progress: the assembled system plus the current coefficients.
#[wasm_bindgen]
pub struct Session {
    problem: FitProblem,
    coeffs: Vec<f64>,
    mu: f64,
    iterations: usize,
    objective: f64,
}

impl Session {
    /// `sigma <= 0` selects 1% of the bounding-box diagonal.
    pub fn create(
        cloud: &[f64],
        grid: usize,
        sigma: f64,
        noise: f64,
        seed: u64,
    ) -> ipia::Result<Self> {
        let cloud = to_cloud(cloud)?;
        let mut scheme = OffsetScheme::default_for(&cloud);
        if sigma > 0.0 {
            scheme.sigma = sigma;
        }
        scheme.sides = OffsetSides::TwoSided;
        scheme.value_noise = noise;
        let mut config = FitConfig::new(vec![grid, grid]);
        config.scheme = Some(scheme);
        config.seed = seed;
        let problem = FitProblem::prepare(&cloud, &config)?;
        let mu = problem.matrix.mu_practical()?;
        let coeffs = vec![0.0; problem.matrix.cols()];
        let objective = problem.samples.targets().iter().map(|b| b * b).sum();
        Ok(Self {
            problem,
            coeffs,
            mu,
            iterations: 0,
            objective,
        })
    }

    pub fn advance(&mut self, steps: usize) -> ipia::Result<f64> {
        let targets = self.problem.samples.targets();
        for _ in 0..steps {
            let (next, _, _) = residual_step(&self.problem.matrix, targets, &self.coeffs, self.mu)?;
            self.coeffs = next;
            self.iterations += 1;
        }
        let fitted = self.problem.matrix.apply(&self.coeffs)?;
        self.objective = targets
            .iter()
            .zip(&fitted)
            .map(|(b, f)| (b - f).powi(2))
            .sum();
        Ok(self.objective)
    }

    pub fn zero_set(&self, resolution: usize) -> ipia::Result<Vec<f64>> {
        let grid = CoefficientGrid::new(self.problem.basis.clone(), self.coeffs.clone())?;
        let mut out = Vec::new();
        if let LevelSetMesh::Curves(set) =
            extract_level_set(&grid, Some(&[resolution, resolution]))?
        {
            for line in &set.polylines {
                out.extend([f64::from(u8::from(line.closed)), line.points.len() as f64]);
                out.extend(line.points.iter().flatten());
            }
        }
        Ok(out)
    }

    pub fn sample_field(&self, resolution: usize) -> ipia::Result<Vec<f64>> {
        let field = ipia::levelset::sample_field(
            &self.problem.basis,
            &self.coeffs,
            &[resolution, resolution],
        )?;
        Ok(field.values().to_vec())
    }
}

fn js(e: ipia::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = synthCloud)]
pub fn synth_cloud_js(
    shape: &str,
    count: usize,
    gap_degrees: f64,
    gap_angle: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    synth_cloud(shape, count, gap_degrees, gap_angle, u64::from(seed)).map_err(js)
}

#[wasm_bindgen(js_name = strokeToCloud)]
pub fn stroke_to_cloud_js(xy: &[f64], count: usize) -> Result<Vec<f64>, JsError> {
    stroke_to_cloud(xy, count).map_err(js)
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(
        cloud: &[f64],
        grid: usize,
        sigma: f64,
        noise: f64,
        seed: u32,
    ) -> Result<Session, JsError> {
        Self::create(cloud, grid, sigma, noise, u64::from(seed)).map_err(js)
    }

    /// Runs `steps` more iterations and returns the objective.
    pub fn step(&mut self, steps: usize) -> Result<f64, JsError> {
        self.advance(steps).map_err(js)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[wasm_bindgen(js_name = maxError)]
    pub fn max_error(&self) -> Result<f64, JsError> {
        self.problem.max_error(&self.coeffs).map_err(js)
    }

    /// `[xmin, ymin, xmax, ymax]` of the spline domain.
    pub fn bounds(&self) -> Vec<f64> {
        let (lo, hi) = (self.problem.basis.lower(), self.problem.basis.upper());
        vec![lo[0], lo[1], hi[0], hi[1]]
    }

    /// Offset sample positions and targets as `[x, y, target, ...]`.
    pub fn offsets(&self) -> Vec<f64> {
        let s = &self.problem.samples;
        (s.n_surface()..s.len())
            .flat_map(|k| {
                let p = s.position(k);
                [p[0], p[1], s.targets()[k]]
            })
            .collect()
    }

    pub fn curves(&self, resolution: usize) -> Result<Vec<f64>, JsError> {
        self.zero_set(resolution).map_err(js)
    }

    /// Field values on a `resolution` x `resolution` lattice over the
    /// domain; node `(i, j)` sits at `i * resolution + j` with `i` along x.
    pub fn field(&self, resolution: usize) -> Result<Vec<f64>, JsError> {
        self.sample_field(resolution).map_err(js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(flat: &[f64]) -> Vec<(bool, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < flat.len() {
            let n = flat[i + 1] as usize;
            out.push((flat[i] == 1.0, n));
            i += 2 + 2 * n;
        }
        out
    }

    #[test]
    fn stroke_normals_point_outward_for_both_windings() {
        let square = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let reversed = [0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        for stroke in [&square[..], &reversed[..]] {
            let cloud = stroke_to_cloud(stroke, 40).unwrap();
            assert_eq!(cloud.len(), 160);
            for r in cloud.chunks_exact(4) {
                let (dx, dy) = (r[0] - 0.5, r[1] - 0.5);
                assert!(dx * r[2] + dy * r[3] > 0.0, "{r:?}");
            }
        }
    }

    #[test]
    fn stroke_rejects_degenerate_input() {
        assert!(stroke_to_cloud(&[0.0, 0.0, 1.0, 1.0], 10).is_err());
        assert!(stroke_to_cloud(&[0.0; 8], 10).is_err());
    }

    #[test]
    fn circle_session_converges_to_one_loop() {
        let cloud = synth_cloud("circle", 120, 0.0, 0.0, 1).unwrap();
        let mut s = Session::create(&cloud, 16, 0.05, 0.0, 1).unwrap();
        let first = s.advance(1).unwrap();
        let later = s.advance(100).unwrap();
        assert!(later < first);
        assert_eq!(s.iterations, 101);
        let loops = records(&s.zero_set(64).unwrap());
        assert_eq!(loops.len(), 1);
        assert!(loops[0].0 && loops[0].1 > 20);
        assert_eq!(s.sample_field(20).unwrap().len(), 400);
    }

    #[test]
    fn gap_removes_points() {
        let full = synth_cloud("flower", 100, 0.0, 0.0, 0).unwrap();
        let holed = synth_cloud("flower", 100, 90.0, 45.0, 0).unwrap();
        assert_eq!(full.len(), 400);
        assert!(holed.len() < full.len());
        assert!(synth_cloud("square", 10, 0.0, 0.0, 0).is_err());
    }
}
