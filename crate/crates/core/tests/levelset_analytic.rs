use std::f64::consts::PI;

use ipia::levelset::{extract_curve, extract_surface, sample_field, SampleGrid};
use ipia::{KnotAxis, TensorBasis};

fn radius(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn circle_polyline_stays_near_the_radius() {
    let grid = SampleGrid::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![128, 128], |p| {
        p[0] * p[0] + p[1] * p[1] - 0.25
    })
    .unwrap();
    let h = grid.spacing(0);
    let curves = extract_curve(&grid, None).unwrap();
    assert_eq!(curves.polylines.len(), 1);
    let line = &curves.polylines[0];
    assert!(line.closed);
    assert!(line
        .points
        .iter()
        .all(|p| (radius(p) - 0.5).abs() <= 2.0 * h));
    assert!((line.length() - PI).abs() <= 0.05 * PI);
}

#[test]
fn empty_field_gives_no_curves() {
    let grid = SampleGrid::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![10, 10], |_| 1.0).unwrap();
    assert!(extract_curve(&grid, None).unwrap().polylines.is_empty());
}

#[test]
fn horizontal_line_is_one_open_polyline() {
    let grid = SampleGrid::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![17, 17], |p| {
        p[1] - 0.03
    })
    .unwrap();
    let curves = extract_curve(&grid, None).unwrap();
    assert_eq!(curves.polylines.len(), 1);
    let line = &curves.polylines[0];
    assert!(!line.closed);
    assert!(line.points.iter().all(|p| (p[1] - 0.03).abs() < 1e-10));
    assert!((line.length() - 2.0).abs() < 1e-10);
}

#[test]
fn sphere_mesh_is_closed_and_accurate() {
    let grid = SampleGrid::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![64; 3], |p| {
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 0.25
    })
    .unwrap();
    let h = grid.spacing(0);
    let mesh = extract_surface(&grid).unwrap();
    assert!(mesh.is_watertight());
    assert_eq!(mesh.euler_characteristic(), 2);
    assert!(mesh
        .vertices
        .iter()
        .all(|v| (radius(v) - 0.5).abs() <= 2.0 * h));
    assert!((mesh.area() - PI).abs() <= 0.05 * PI);
    for t in 0..mesh.triangles.len() {
        let n = mesh.triangle_normal(t);
        let c = mesh.triangles[t].map(|i| mesh.vertices[i as usize]);
        let centroid: Vec<f64> = (0..3)
            .map(|k| (c[0][k] + c[1][k] + c[2][k]) / 3.0)
            .collect();
        assert!(n.iter().zip(&centroid).map(|(a, b)| a * b).sum::<f64>() > 0.0);
    }
}

#[test]
fn torus_mesh_has_genus_one() {
    let grid = SampleGrid::from_fn(
        vec![-0.8, -0.8, -0.3],
        vec![0.8, 0.8, 0.3],
        vec![64, 64, 24],
        |p| {
            let q = (p[0] * p[0] + p[1] * p[1]).sqrt() - 0.5;
            q * q + p[2] * p[2] - 0.04
        },
    )
    .unwrap();
    let mesh = extract_surface(&grid).unwrap();
    assert!(mesh.is_watertight());
    assert_eq!(mesh.euler_characteristic(), 0);
}

#[test]
fn negative_field_gives_an_empty_mesh() {
    let grid = SampleGrid::from_fn(vec![0.0; 3], vec![1.0; 3], vec![6; 3], |_| -2.0).unwrap();
    assert!(extract_surface(&grid).unwrap().triangles.is_empty());
}

#[test]
fn vertices_sit_on_linear_crossings_of_straddling_edges() {
    let f = |p: &[f64]| (3.0 * p[0]).sin() + p[1] * p[1] - 0.3 * p[2];
    let grid = SampleGrid::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![13; 3], f).unwrap();
    let mesh = extract_surface(&grid).unwrap();
    let h: Vec<f64> = (0..3).map(|a| grid.spacing(a)).collect();
    for v in &mesh.vertices {
        // a vertex lies on a lattice edge: at least two coordinates are on
        // lattice planes
        let on_plane: Vec<bool> = (0..3)
            .map(|a| {
                let s = (v[a] + 1.0) / h[a];
                (s - s.round()).abs() < 1e-9
            })
            .collect();
        assert!(on_plane.iter().filter(|&&b| b).count() >= 2);
        let axis = on_plane.iter().position(|&b| !b);
        let Some(axis) = axis else { continue };
        let mut lo = *v;
        let mut hi = *v;
        let s = ((v[axis] + 1.0) / h[axis]).floor();
        lo[axis] = -1.0 + s * h[axis];
        hi[axis] = -1.0 + (s + 1.0) * h[axis];
        for k in 0..3 {
            if k != axis {
                lo[k] = -1.0 + ((v[k] + 1.0) / h[k]).round() * h[k];
                hi[k] = lo[k];
            }
        }
        let (fa, fb) = (f(&lo), f(&hi));
        assert!(fa * fb <= 0.0);
        let t = fa / (fa - fb);
        assert!((lo[axis] + t * (hi[axis] - lo[axis]) - v[axis]).abs() < 1e-12);
    }
}

#[test]
fn sampled_field_matches_direct_evaluation() {
    let basis = TensorBasis::new(vec![
        KnotAxis::new(-1.0, 1.0, 7).unwrap(),
        KnotAxis::new(0.0, 2.0, 6).unwrap(),
    ])
    .unwrap();
    let coeffs: Vec<f64> = (0..basis.num_coeffs())
        .map(|i| ((i * 37) % 11) as f64 - 5.0)
        .collect();
    let grid = sample_field(&basis, &coeffs, &[9, 13]).unwrap();
    let mut p = [0.0; 3];
    for node in 0..grid.values().len() {
        grid.node_position(node, &mut p);
        assert!((grid.values()[node] - basis.eval(&coeffs, &p[..2]).unwrap()).abs() < 1e-12);
    }
    let zeros = sample_field(&basis, &vec![0.0; basis.num_coeffs()], &[4, 4]).unwrap();
    assert!(zeros.values().iter().all(|&v| v == 0.0));
}
