//! Zero level-set extraction: marching squares for curves, marching cubes
//! for surfaces.
//!
//! A node counts as inside when its value is negative. A connected patch of
//! nodes where the field vanishes identically (no data reaches the
//! coefficients there) carries no sign of its own; it takes the side held by
//! the majority of the nonzero nodes bordering it, outside on a tie. Vertices
//! are placed at the linear zero crossing of each grid edge whose endpoints
//! fall on different sides, and are shared between neighboring cells through
//! a key derived from the edge.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::bspline::TensorBasis;
use crate::error::{Error, Result};

/// Evaluates the field at a cell center to split ambiguous 2D cells.
pub type CenterValue<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Field values on a uniform lattice spanning an axis-aligned box. Node
/// `(i, j[, k])` is stored at `(i * ny + j) * nz + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    resolution: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
}

impl SampleGrid {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let dim = resolution.len();
        if !(2..=3).contains(&dim) || lower.len() != dim || upper.len() != dim {
            return Err(Error::Shape(format!(
                "sample grid needs matching 2D or 3D extents, got {dim} resolutions, {} lower, {} upper",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(r) = resolution.iter().find(|&&r| r < 2) {
            return Err(Error::Input(format!(
                "grid resolution must be at least 2, got {r}"
            )));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| u.partial_cmp(l) != Some(Ordering::Greater))
        {
            return Err(Error::Input("grid box must have positive extent".into()));
        }
        let count: usize = resolution.iter().product();
        if values.len() != count {
            return Err(Error::Shape(format!(
                "{} values for {count} grid nodes",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "sample grid contains non-finite values".into(),
            ));
        }
        Ok(Self {
            resolution,
            lower,
            upper,
            values,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let count: usize = resolution.iter().product();
        let mut grid = Self::new(lower, upper, resolution, vec![0.0; count])?;
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .with_min_len(1024)
            .map(|n| {
                let mut p = [0.0; 3];
                grid.node_position(n, &mut p);
                f(&p[..grid.dim()])
            })
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "sampled field contains non-finite values".into(),
            ));
        }
        grid.values = values;
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    /// Coordinate of lattice index `i` along `axis`; the last node is exactly
    /// the upper bound.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolution[axis] - 1;
        if i >= n {
            return self.upper[axis];
        }
        let t = i as f64 / n as f64;
        (self.lower[axis] + t * (self.upper[axis] - self.lower[axis]))
            .clamp(self.lower[axis], self.upper[axis])
    }

    pub fn node_position(&self, node: usize, out: &mut [f64; 3]) {
        let mut rest = node;
        for axis in (0..self.dim()).rev() {
            let i = rest % self.resolution[axis];
            rest /= self.resolution[axis];
            out[axis] = self.coord(axis, i);
        }
    }

    fn index(&self, idx: [usize; 3]) -> usize {
        match self.dim() {
            2 => idx[0] * self.resolution[1] + idx[1],
            _ => (idx[0] * self.resolution[1] + idx[1]) * self.resolution[2] + idx[2],
        }
    }
}

/// Lattice resolution used when none is given: four nodes per control
/// coefficient along each axis.
pub fn default_resolution(basis: &TensorBasis) -> Vec<usize> {
    basis.axes().iter().map(|a| 4 * a.num_basis()).collect()
}

/// Evaluates the fitted field on a uniform lattice over the basis domain.
pub fn sample_field(
    basis: &TensorBasis,
    coeffs: &[f64],
    resolution: &[usize],
) -> Result<SampleGrid> {
    if coeffs.len() != basis.num_coeffs() {
        return Err(Error::Shape(format!(
            "{} coefficients given, basis has {}",
            coeffs.len(),
            basis.num_coeffs()
        )));
    }
    if resolution.len() != basis.dim() {
        return Err(Error::Shape(format!(
            "{} resolutions for a {}-dimensional basis",
            resolution.len(),
            basis.dim()
        )));
    }
    SampleGrid::from_fn(basis.lower(), basis.upper(), resolution.to_vec(), |p| {
        basis.eval(coeffs, p).unwrap_or(f64::NAN)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    /// Closed polylines connect the last point back to the first; the first
    /// point is not repeated.
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let open: f64 = self.points.windows(2).map(|w| dist2(w[0], w[1])).sum();
        match (self.closed, self.points.first(), self.points.last()) {
            (true, Some(&a), Some(&b)) => open + dist2(a, b),
            _ => open,
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Extracted zero set of a 2D field, with the box it was sampled over.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSet {
    pub polylines: Vec<Polyline>,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise when seen from the side where the field is positive.
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Undirected edges with the number of triangles using each.
    pub fn edge_counts(&self) -> HashMap<(u32, u32), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.triangles.is_empty() && self.edge_counts().values().all(|&c| c == 2)
    }

    /// `V − E + F` over the referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                triangle_area(
                    self.vertices[t[0] as usize],
                    self.vertices[t[1] as usize],
                    self.vertices[t[2] as usize],
                )
            })
            .sum()
    }

    pub fn triangle_normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i as usize]);
        cross(sub(b, a), sub(c, a))
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub enum LevelSetMesh {
    Curves(CurveSet),
    Surface(TriangleMesh),
}

impl LevelSetMesh {
    pub fn is_empty(&self) -> bool {
        match self {
            LevelSetMesh::Curves(c) => c.polylines.is_empty(),
            LevelSetMesh::Surface(m) => m.triangles.is_empty(),
        }
    }
}

#[inline]
fn inside(v: f64) -> bool {
    v < 0.0
}

/// Side of every node; see the module notes for identically-zero patches.
fn node_sides(grid: &SampleGrid) -> Vec<bool> {
    let values = &grid.values;
    let mut side: Vec<bool> = values.iter().map(|&v| inside(v)).collect();
    let res = &grid.resolution;
    let dim = grid.dim();
    let mut strides = vec![1usize; dim];
    for a in (0..dim - 1).rev() {
        strides[a] = strides[a + 1] * res[a + 1];
    }
    let coord = |n: usize, a: usize| (n / strides[a]) % res[a];
    let mut seen = vec![false; values.len()];
    let mut patch = Vec::new();
    let mut stack = Vec::new();
    for start in 0..values.len() {
        if values[start] != 0.0 || seen[start] {
            continue;
        }
        patch.clear();
        let (mut neg, mut pos) = (0usize, 0usize);
        seen[start] = true;
        stack.push(start);
        while let Some(n) = stack.pop() {
            patch.push(n);
            for a in 0..dim {
                let c = coord(n, a);
                let lower = (c > 0).then(|| n - strides[a]);
                let upper = (c + 1 < res[a]).then(|| n + strides[a]);
                for m in [lower, upper].into_iter().flatten() {
                    let v = values[m];
                    if v == 0.0 {
                        if !seen[m] {
                            seen[m] = true;
                            stack.push(m);
                        }
                    } else if v < 0.0 {
                        neg += 1;
                    } else {
                        pos += 1;
                    }
                }
            }
        }
        let patch_side = neg > pos;
        for &n in &patch {
            side[n] = patch_side;
        }
    }
    side
}

/// Zero crossing parameter along an edge from `a` to `b` whose endpoint
/// values have different sides.
#[inline]
fn crossing(va: f64, vb: f64) -> f64 {
    va / (va - vb)
}

/// Interpolated vertex on the lattice edge from `node` one step along
/// `axis`, keyed so that neighbors share it. Crossings that land exactly on
/// a node are keyed by the node.
struct EdgeVertex {
    key: u64,
    t: f64,
}

fn edge_vertex(grid: &SampleGrid, node: usize, axis: usize, stride: usize) -> EdgeVertex {
    let slots = grid.dim() as u64 + 1;
    let (va, vb) = (grid.values[node], grid.values[node + stride]);
    let t = crossing(va, vb);
    let key = if t == 0.0 {
        node as u64 * slots + grid.dim() as u64
    } else if t == 1.0 {
        (node + stride) as u64 * slots + grid.dim() as u64
    } else {
        node as u64 * slots + axis as u64
    };
    EdgeVertex { key, t }
}

/// Marching squares over a 2D grid. Saddle cells are split according to the
/// sign of `center` at the cell midpoint, or of the corner mean when no
/// evaluator is given.
pub fn extract_curve(grid: &SampleGrid, center: Option<CenterValue<'_>>) -> Result<CurveSet> {
    if grid.dim() != 2 {
        return Err(Error::Shape(format!(
            "marching squares needs a 2D grid, got {}D",
            grid.dim()
        )));
    }
    let (nx, ny) = (grid.resolution[0], grid.resolution[1]);
    let side = node_sides(grid);
    let mut positions: HashMap<u64, [f64; 2]> = HashMap::new();
    let mut segments: Vec<(u64, u64)> = Vec::new();

    // Corners counter-clockwise; each side is (start corner, end corner,
    // offset of the lattice node owning the edge, axis).
    const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];
    const SIDES: [(usize, usize, (usize, usize), usize); 4] = [
        (0, 1, (0, 0), 0),
        (1, 2, (1, 0), 1),
        (2, 3, (0, 1), 0),
        (3, 0, (0, 0), 1),
    ];

    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let nodes = CORNERS.map(|(dx, dy)| grid.index([i + dx, j + dy, 0]));
            let v = nodes.map(|n| grid.values[n]);
            let ins = nodes.map(|n| side[n]);
            let mask = ins
                .iter()
                .enumerate()
                .fold(0u8, |m, (c, &x)| m | ((x as u8) << c));
            if mask == 0 || mask == 0b1111 {
                continue;
            }
            // (key, leaves inside) in counter-clockwise order
            let mut cuts: Vec<(u64, bool)> = Vec::with_capacity(4);
            for &(a, b, (ox, oy), axis) in &SIDES {
                if ins[a] == ins[b] {
                    continue;
                }
                let node = grid.index([i + ox, j + oy, 0]);
                let stride = if axis == 0 { ny } else { 1 };
                let ev = edge_vertex(grid, node, axis, stride);
                positions.entry(ev.key).or_insert_with(|| {
                    let (x0, y0) = (grid.coord(0, i + ox), grid.coord(1, j + oy));
                    if axis == 0 {
                        let x1 = grid.coord(0, i + ox + 1);
                        [x0 + ev.t * (x1 - x0), y0]
                    } else {
                        let y1 = grid.coord(1, j + oy + 1);
                        [x0, y0 + ev.t * (y1 - y0)]
                    }
                });
                cuts.push((ev.key, ins[a]));
            }
            let connect_inside = cuts.len() == 4 && {
                let mid = [
                    0.5 * (grid.coord(0, i) + grid.coord(0, i + 1)),
                    0.5 * (grid.coord(1, j) + grid.coord(1, j + 1)),
                ];
                let c = match center {
                    Some(f) => f(&mid),
                    None => 0.25 * v.iter().sum::<f64>(),
                };
                inside(c)
            };
            let n = cuts.len();
            for (p, &(key, leaves)) in cuts.iter().enumerate() {
                if !leaves {
                    continue;
                }
                // Inside stays on the left when walking from an exit
                // crossing to an entry crossing.
                let q = if connect_inside {
                    (p + 1) % n
                } else {
                    (p + n - 1) % n
                };
                if key != cuts[q].0 {
                    segments.push((key, cuts[q].0));
                }
            }
        }
    }

    let polylines = chain(&segments)
        .into_iter()
        .map(|(keys, closed)| Polyline {
            points: keys.iter().map(|k| positions[k]).collect(),
            closed,
        })
        .collect();
    Ok(CurveSet {
        polylines,
        lower: [grid.lower[0], grid.lower[1]],
        upper: [grid.upper[0], grid.upper[1]],
    })
}

/// Links directed segments into maximal chains, open chains first, in
/// segment order.
fn chain(segments: &[(u64, u64)]) -> Vec<(Vec<u64>, bool)> {
    let mut outgoing: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut has_incoming: HashMap<u64, usize> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        outgoing.entry(a).or_default().push(s);
        *has_incoming.entry(b).or_insert(0) += 1;
    }
    for list in outgoing.values_mut() {
        list.reverse();
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();
    let walk = |start_seg: usize, used: &mut Vec<bool>, outgoing: &mut HashMap<u64, Vec<usize>>| {
        let start = segments[start_seg].0;
        let mut keys = vec![start];
        let mut seg = Some(start_seg);
        while let Some(s) = seg {
            used[s] = true;
            if let Some(list) = outgoing.get_mut(&segments[s].0) {
                list.retain(|&x| x != s);
            }
            let end = segments[s].1;
            if end == start {
                return (keys, true);
            }
            keys.push(end);
            seg = outgoing.get(&end).and_then(|l| l.last().copied());
        }
        (keys, false)
    };
    for s in 0..segments.len() {
        if !used[s] && !has_incoming.contains_key(&segments[s].0) {
            chains.push(walk(s, &mut used, &mut outgoing));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            chains.push(walk(s, &mut used, &mut outgoing));
        }
    }
    chains
}

const CUBE_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Cube edges as (lower corner, upper corner, axis).
const CUBE_EDGES: [(usize, usize, usize); 12] = [
    (0, 1, 0),
    (1, 2, 1),
    (3, 2, 0),
    (0, 3, 1),
    (4, 5, 0),
    (5, 6, 1),
    (7, 6, 0),
    (4, 7, 1),
    (0, 4, 2),
    (1, 5, 2),
    (2, 6, 2),
    (3, 7, 2),
];

/// Faces with corners counter-clockwise as seen from outside the cube.
const CUBE_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [3, 7, 6, 2],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

fn cube_edge(a: usize, b: usize) -> usize {
    CUBE_EDGES
        .iter()
        .position(|&(p, q, _)| (p, q) == (a, b) || (p, q) == (b, a))
        .expect("adjacent corners share an edge")
}

/// Triangles (as cube-edge triples) for each of the 256 inside/outside
/// corner patterns. On faces with two diagonal inside corners the inside
/// corners are kept apart; the rule depends only on the face's own corner
/// signs, so neighboring cubes agree and the mesh has no cracks.
fn case_table() -> &'static [Vec<[u8; 3]>; 256] {
    static TABLE: OnceLock<[Vec<[u8; 3]>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(build_case))
}

fn build_case(mask: usize) -> Vec<[u8; 3]> {
    let ins = |c: usize| mask & (1 << c) != 0;
    let mut next = [usize::MAX; 12];
    for face in &CUBE_FACES {
        let mut cuts: Vec<(usize, bool)> = Vec::with_capacity(4);
        for s in 0..4 {
            let (a, b) = (face[s], face[(s + 1) % 4]);
            if ins(a) != ins(b) {
                cuts.push((cube_edge(a, b), ins(a)));
            }
        }
        let n = cuts.len();
        for (p, &(edge, leaves)) in cuts.iter().enumerate() {
            if leaves {
                next[edge] = cuts[(p + n - 1) % n].0;
            }
        }
    }
    let mut seen = [false; 12];
    let mut tris = Vec::new();
    for start in 0..12 {
        if next[start] == usize::MAX || seen[start] {
            continue;
        }
        let mut loop_edges = Vec::new();
        let mut e = start;
        while !seen[e] {
            seen[e] = true;
            loop_edges.push(e);
            e = next[e];
        }
        // The loop winds around the inside corners; emit it reversed so that
        // triangle normals face the positive side.
        for w in 1..loop_edges.len() - 1 {
            tris.push([
                loop_edges[0] as u8,
                loop_edges[w + 1] as u8,
                loop_edges[w] as u8,
            ]);
        }
    }
    tris
}

/// Marching cubes over a 3D grid.
pub fn extract_surface(grid: &SampleGrid) -> Result<TriangleMesh> {
    if grid.dim() != 3 {
        return Err(Error::Shape(format!(
            "marching cubes needs a 3D grid, got {}D",
            grid.dim()
        )));
    }
    let table = case_table();
    let [nx, ny, nz] = [grid.resolution[0], grid.resolution[1], grid.resolution[2]];
    let strides = [ny * nz, nz, 1];
    let min_spacing = (0..3)
        .map(|a| grid.spacing(a))
        .fold(f64::INFINITY, f64::min);
    let min_area = 1e-12 * min_spacing * min_spacing;
    let side = node_sides(grid);

    let mut mesh = TriangleMesh::default();
    let mut index_of: HashMap<u64, u32> = HashMap::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            for k in 0..nz - 1 {
                let base = grid.index([i, j, k]);
                let mut mask = 0usize;
                for (c, off) in CUBE_CORNERS.iter().enumerate() {
                    let node =
                        base + off[0] * strides[0] + off[1] * strides[1] + off[2] * strides[2];
                    if side[node] {
                        mask |= 1 << c;
                    }
                }
                let tris = &table[mask];
                if tris.is_empty() {
                    continue;
                }
                let mut local = [u32::MAX; 12];
                for tri in tris {
                    let mut idx = [0u32; 3];
                    for (slot, &e) in tri.iter().enumerate() {
                        let e = e as usize;
                        if local[e] == u32::MAX {
                            let (a, _, axis) = CUBE_EDGES[e];
                            let off = CUBE_CORNERS[a];
                            let node = base
                                + off[0] * strides[0]
                                + off[1] * strides[1]
                                + off[2] * strides[2];
                            let ev = edge_vertex(grid, node, axis, strides[axis]);
                            local[e] = *index_of.entry(ev.key).or_insert_with(|| {
                                let mut p = [0.0; 3];
                                for d in 0..3 {
                                    let lo = grid.coord(d, [i, j, k][d] + off[d]);
                                    p[d] = if d == axis {
                                        let hi = grid.coord(d, [i, j, k][d] + off[d] + 1);
                                        lo + ev.t * (hi - lo)
                                    } else {
                                        lo
                                    };
                                }
                                mesh.vertices.push(p);
                                (mesh.vertices.len() - 1) as u32
                            });
                        }
                        idx[slot] = local[e];
                    }
                    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                        continue;
                    }
                    let [a, b, c] = idx.map(|v| mesh.vertices[v as usize]);
                    if triangle_area(a, b, c) <= min_area {
                        continue;
                    }
                    mesh.triangles.push(idx);
                }
            }
        }
    }
    Ok(mesh)
}

/// Extracts the zero set of `grid`, dispatching on its dimension.
pub fn extract(grid: &SampleGrid, center: Option<CenterValue<'_>>) -> Result<LevelSetMesh> {
    match grid.dim() {
        2 => extract_curve(grid, center).map(LevelSetMesh::Curves),
        _ => extract_surface(grid).map(LevelSetMesh::Surface),
    }
}
