use ipia::levelset::{extract_curve, extract_surface, SampleGrid};
use ipia::{
    augment, residual_step, AugmentedSamples, CoefficientGrid, CollocationMatrix, Ipia, KnotAxis,
    OffsetScheme, OffsetSides, OrientedPointCloud, TensorBasis,
};
use proptest::prelude::*;

fn basis_2d(nx: usize, ny: usize) -> TensorBasis {
    TensorBasis::new(vec![
        KnotAxis::new(-1.0, 1.0, nx).unwrap(),
        KnotAxis::new(0.0, 3.0, ny).unwrap(),
    ])
    .unwrap()
}

fn unit(v: f64) -> impl Strategy<Value = f64> {
    (0.0..=1.0f64).prop_map(move |t| t * v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_values_sum_to_one(n in 4usize..20, x in unit(1.0)) {
        let axis = KnotAxis::new(-0.5, 0.5, n).unwrap();
        let (_, v) = axis.eval(-0.5 + x).unwrap();
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        prop_assert!(v.iter().all(|&b| b >= 0.0));
    }

    #[test]
    fn constant_coefficients_give_a_constant_field(
        nx in 4usize..10, ny in 4usize..10, c in -5.0..5.0f64, x in unit(2.0), y in unit(3.0)
    ) {
        let basis = basis_2d(nx, ny);
        let grid = CoefficientGrid::new(basis.clone(), vec![c; basis.num_coeffs()]).unwrap();
        prop_assert!((grid.eval(&[x - 1.0, y]).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn greville_coefficients_reproduce_linear_fields(
        nx in 4usize..10, ny in 4usize..10, a in -2.0..2.0f64, b in -2.0..2.0f64, d in -2.0..2.0f64,
        x in unit(2.0), y in unit(3.0)
    ) {
        let basis = basis_2d(nx, ny);
        let axes = basis.axes();
        // a cubic B-spline reproduces x when its coefficients sit at the
        // knot averages, which for uniform knots are the middle knots
        let mut coeffs = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let gx = axes[0].knot(i + 2);
                let gy = axes[1].knot(j + 2);
                coeffs.push(a * gx + b * gy + d);
            }
        }
        let grid = CoefficientGrid::new(basis, coeffs).unwrap();
        let (px, py) = (x - 1.0, y);
        prop_assert!((grid.eval(&[px, py]).unwrap() - (a * px + b * py + d)).abs() < 1e-10);
    }

    #[test]
    fn transpose_is_the_adjoint(
        seed in any::<u64>(), nx in 4usize..9, ny in 4usize..9, rows in 1usize..60
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let basis = basis_2d(nx, ny);
        let pos: Vec<f64> = (0..rows).flat_map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..=3.0)]).collect();
        let samples = AugmentedSamples::new(2, pos, vec![0.0; rows], rows).unwrap();
        let m = CollocationMatrix::assemble(&basis, &samples).unwrap();
        let c: Vec<f64> = (0..m.cols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs: f64 = m.apply(&c).unwrap().iter().zip(&r).map(|(a, b)| a * b).sum();
        let rhs: f64 = m.apply_transpose(&r).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        // every row of a partition of unity sums to one
        for k in 0..rows {
            prop_assert!((m.row(k).1.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn offsets_sit_sigma_away_with_matching_signs(
        seed in any::<u64>(), n in 1usize..40, sigma in 0.001..0.1f64, noise in unit(0.4),
        sides in prop_oneof![Just(OffsetSides::OutsideOnly), Just(OffsetSides::InsideOnly), Just(OffsetSides::TwoSided)]
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let normals: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let Ok(cloud) = OrientedPointCloud::new(2, points, normals) else { return Ok(()) };
        let basis = TensorBasis::new(vec![KnotAxis::new(-1.0, 1.0, 8).unwrap(), KnotAxis::new(-1.0, 1.0, 8).unwrap()]).unwrap();
        let scheme = OffsetScheme { sigma, epsilon: 0.5, sides, value_noise: noise };
        let s = augment(&cloud, &scheme, &basis, seed).unwrap();
        let per_side = if sides == OffsetSides::TwoSided { 2 } else { 1 };
        prop_assert_eq!(s.len(), n * (1 + per_side));
        prop_assert_eq!(s.n_surface(), n);
        for k in n..s.len() {
            let src = cloud.point(k % n);
            let p = s.position(k);
            let d = ((p[0] - src[0]).powi(2) + (p[1] - src[1]).powi(2)).sqrt();
            prop_assert!((d - sigma).abs() < 1e-12);
            let outside = match sides {
                OffsetSides::OutsideOnly => true,
                OffsetSides::InsideOnly => false,
                OffsetSides::TwoSided => k < 2 * n,
            };
            let t = s.targets()[k];
            prop_assert_eq!(t > 0.0, outside);
            prop_assert!((t.abs() - 0.5).abs() <= noise + 1e-15);
        }
        prop_assert!(s.targets()[..n].iter().all(|&t| t == 0.0));
        let again = augment(&cloud, &scheme, &basis, seed).unwrap();
        prop_assert_eq!(again, s);
    }

    #[test]
    fn residual_step_matches_the_iterator(seed in any::<u64>(), rows in 1usize..50) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let basis = basis_2d(6, 7);
        let pos: Vec<f64> = (0..rows).flat_map(|_| [rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..=3.0)]).collect();
        let targets: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let samples = AugmentedSamples::new(2, pos, targets.clone(), rows).unwrap();
        let m = CollocationMatrix::assemble(&basis, &samples).unwrap();
        let mu = m.mu_practical().unwrap();
        let mut state = Ipia::new(&m, &targets, mu, None).unwrap();
        let mut c = vec![0.0; m.cols()];
        for _ in 0..5 {
            let step = state.step().unwrap();
            let (next, update, objective) = residual_step(&m, &targets, &c, mu).unwrap();
            prop_assert_eq!(step.objective, objective);
            prop_assert_eq!(step.update_norm, update);
            prop_assert_eq!(state.coeffs(), &next[..]);
            c = next;
        }
    }

    #[test]
    fn affine_curves_are_exact(a in -1.0..1.0f64, b in -1.0..1.0f64, d in -0.5..0.5f64, res in 3usize..30) {
        prop_assume!(a.abs() + b.abs() > 0.1);
        let f = move |p: &[f64]| a * p[0] + b * p[1] + d;
        let grid = SampleGrid::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![res, res], f).unwrap();
        for line in extract_curve(&grid, None).unwrap().polylines {
            for p in line.points {
                prop_assert!(f(&p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn affine_surfaces_are_exact(a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64, res in 3usize..12) {
        prop_assume!(a.abs() + b.abs() + c.abs() > 0.1);
        let f = move |p: &[f64]| a * p[0] + b * p[1] + c * p[2] + 0.1;
        let grid = SampleGrid::from_fn(vec![-1.0; 3], vec![1.0; 3], vec![res; 3], f).unwrap();
        let mesh = extract_surface(&grid).unwrap();
        for v in &mesh.vertices {
            prop_assert!(f(v).abs() < 1e-10);
        }
        for t in 0..mesh.triangles.len() {
            let n = mesh.triangle_normal(t);
            prop_assert!(n[0] * a + n[1] * b + n[2] * c > 0.0);
        }
    }
}
