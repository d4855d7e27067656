use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use wavrom::fem::{build_cube_mesh, DofKind, FullOrderModel};
use wavrom::harness::archive::Archive;
use wavrom::harness::config::ExperimentConfig;
use wavrom::helmholtz::{HelmholtzModel, HelmholtzProblem};
use wavrom::pod::{assemble_snapshots, pod, PodOptions, SnapshotMatrix, SvdMethod, Truncation};
use wavrom::rom::ReducedSystem;
use wavrom::sampling::{halton, latin_hypercube};
use wavrom::surrogate::Mlp;
use wavrom::transform::{coefficient, DecayFamily, DecaySpec, Deformation, ParamPoint};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn decay_spec() -> impl Strategy<Value = DecaySpec> {
    let algebraic = (1.01f64..5.0, 0.001f64..0.5, 1usize..30)
        .prop_map(|(r, theta, dim)| DecaySpec::new(DecayFamily::Algebraic { r, theta }, dim).unwrap());
    let matern = (0.1f64..3.0, 0.02f64..1.0, 0.001f64..0.5, 1usize..30)
        .prop_map(|(nu, l, theta, dim)| DecaySpec::new(DecayFamily::Matern { nu, l, theta }, dim).unwrap());
    prop_oneof![algebraic, matern]
}

fn spec_and_point() -> impl Strategy<Value = (DecaySpec, ParamPoint)> {
    decay_spec().prop_flat_map(|spec| {
        let dim = spec.dim();
        (Just(spec), prop::collection::vec(-1.0f64..=1.0, dim).prop_map(|v| ParamPoint::new(v).unwrap()))
    })
}

fn unit_cube_point() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0]
}

proptest! {
    #[test]
    fn jacobian_is_volume_preserving_and_consistent((spec, y) in spec_and_point(), x in unit_cube_point()) {
        let map = Deformation::new(spec).unwrap().at(&y).unwrap();
        let jac = map.jacobian(&x);
        prop_assert!((jac.det - 1.0).abs() <= 1e-14);
        // dT^T dT^{-T} = (dT^{-1} dT)^T
        for i in 0..3 {
            for j in 0..3 {
                let entry: f64 = (0..3).map(|k| jac.dt[k][i] * jac.inv_transpose[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((entry - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences((spec, y) in spec_and_point(), x in unit_cube_point()) {
        let map = Deformation::new(spec).unwrap().at(&y).unwrap();
        let jac = map.jacobian(&x);
        let h = 1e-6;
        for j in 0..3 {
            let (mut p, mut m) = (x, x);
            p[j] += h;
            m[j] -= h;
            let (tp, tm) = (map.map_point(&p), map.map_point(&m));
            for i in 0..3 {
                let fd = (tp[i] - tm[i]) / (2.0 * h);
                let scale = jac.dt[i][j].abs().max(1.0);
                prop_assert!((fd - jac.dt[i][j]).abs() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn inverse_map_and_fixed_planes((spec, y) in spec_and_point(), x in unit_cube_point(), plane in prop::sample::select(vec![-1.0, 0.0, 1.0])) {
        let map = Deformation::new(spec).unwrap().at(&y).unwrap();
        let back = map.pull_point(&map.map_point(&x));
        for k in 0..3 {
            prop_assert!((back[k] - x[k]).abs() <= 1e-14);
        }
        let on_plane = [plane, x[1], x[2]];
        let image = map.map_point(&on_plane);
        for k in 0..3 {
            prop_assert!((image[k] - on_plane[k]).abs() <= 1e-15);
        }
    }

    #[test]
    fn coefficients_decrease_strictly(spec in decay_spec()) {
        for j in 1..spec.dim() {
            prop_assert!(coefficient(j + 1, &spec).unwrap() < coefficient(j, &spec).unwrap());
        }
    }

    #[test]
    fn halton_skip_consistency(n in 1usize..40, dim in 1usize..12, skip in 0u64..50) {
        let shifted = halton(n, dim, skip);
        let long = halton(n + skip as usize, dim, 0);
        for i in 0..n {
            prop_assert_eq!(&shifted.points[i], &long.points[skip as usize + i]);
        }
        prop_assert!(shifted.points.iter().all(|p| p.as_slice().iter().all(|v| (-1.0..=1.0).contains(v))));
    }

    #[test]
    fn latin_hypercube_is_stratified(n in 1usize..60, dim in 1usize..8, seed in any::<u64>()) {
        let set = latin_hypercube(n, dim, seed).unwrap();
        for d in 0..dim {
            let mut strata: Vec<usize> = set
                .points
                .iter()
                .map(|p| (((p.as_slice()[d] + 1.0) / 2.0 * n as f64).floor() as usize).min(n - 1))
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn archive_round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>(), hash in any::<[u8; 32]>()) {
        let mut rng = wavrom::sampling::SplitMix64::new(seed);
        let real = DMatrix::from_fn(rows, cols, |_, _| f64::from_bits(rng.next_u64() >> 2));
        let complex = DMatrix::from_fn(cols, rows, |_, _| c(rng.uniform(-1e3, 1e3), rng.uniform(-1.0, 1.0)));
        let mut a = Archive::new(hash);
        a.insert("r", real.clone());
        a.insert("c", complex.clone());
        let bytes = a.to_bytes();
        let b = Archive::from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(b.to_bytes(), bytes);
        prop_assert_eq!(b.hash, hash);
        let back = b.real("r").unwrap();
        prop_assert!(back.iter().zip(real.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(b.complex("c").unwrap(), &complex);
    }

    #[test]
    fn network_output_is_bounded(seed in any::<u64>(), width in 1usize..10, x in prop::collection::vec(-100.0f64..100.0, 3)) {
        let net = Mlp::random(vec![3, width, width, 2], seed).unwrap();
        let (w, b) = net.layer(2);
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let out = net.forward(&x).unwrap();
        prop_assert_eq!(&out, &net.forward(&x).unwrap());
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= wn * (width as f64).sqrt() + bn + 1e-12);
    }
}

fn random_snapshots(n: usize, ns: usize, seed: u64) -> SnapshotMatrix {
    let mut rng = wavrom::sampling::SplitMix64::new(seed);
    SnapshotMatrix {
        data: DMatrix::from_fn(n, ns, |_, _| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))),
        params: halton(ns, 1, 0),
        kind: DofKind::NodalH1,
        fingerprint: [0; 32],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pod_bases_are_orthonormal_and_nested(n in 4usize..30, ns in 2usize..12, seed in any::<u64>(), gram in any::<bool>()) {
        let snaps = random_snapshots(n, ns, seed);
        let method = if gram { SvdMethod::Gram } else { SvdMethod::Direct };
        let full = pod(&snaps, &PodOptions { centered: true, truncation: Truncation::Full, method }).unwrap();
        prop_assert!(full.orthonormality_defect() <= 1e-10);
        for l in 0..=full.num_modes() {
            let direct = pod(&snaps, &PodOptions { centered: true, truncation: Truncation::Rank(l), method }).unwrap();
            prop_assert_eq!(&direct.basis, &full.truncated(l).unwrap().basis);
        }
        let uncentered = pod(&snaps, &PodOptions { centered: false, truncation: Truncation::Full, method }).unwrap();
        prop_assert!(uncentered.orthonormality_defect() <= 1e-10);
        prop_assert!(uncentered.singular_values[0] >= full.singular_values[0] * (1.0 - 1e-12));
    }

    #[test]
    fn config_json_round_trip(epochs in 1usize..5000, lr in 1e-6f64..1e-1, test in 1usize..100, seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::desk_helmholtz("out");
        cfg.nn.train.epochs = epochs;
        cfg.nn.train.learning_rate = lr;
        cfg.sampling.test = test;
        cfg.sampling.test_seed = seed;
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

fn small_helmholtz(n: usize) -> HelmholtzModel {
    let spec = DecaySpec::algebraic(2.0, 0.1, 3).unwrap();
    HelmholtzModel::new(HelmholtzProblem::new(1.5, n, spec)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_row_sums_give_the_volume(n in 1usize..5) {
        let model = small_helmholtz(n);
        let ops = model.assemble_operators(&ParamPoint::zeros(3)).unwrap();
        let ones = vec![c(1.0, 0.0); model.num_dofs()];
        let total: Complex64 = ops.mass.mul_vec(&ones).iter().sum();
        prop_assert!((total.re - 8.0).abs() <= 1e-10 && total.im == 0.0);
        prop_assert_eq!(build_cube_mesh(n).unwrap().vertices.len(), model.num_dofs());
    }

    #[test]
    fn helmholtz_form_has_nonpositive_imaginary_part(y in prop::collection::vec(-1.0f64..=1.0, 3), seed in any::<u64>()) {
        let model = small_helmholtz(2);
        let y = ParamPoint::new(y).unwrap();
        let system = model.assemble(&y).unwrap();
        let again = model.assemble(&y).unwrap();
        let bits = |m: &wavrom::fem::ComplexSparseMatrix| -> Vec<(usize, usize, u64, u64)> {
            m.triplets().map(|(i, j, z)| (i, j, z.re.to_bits(), z.im.to_bits())).collect()
        };
        prop_assert_eq!(bits(&system.matrix), bits(&again.matrix));
        let mut rng = wavrom::sampling::SplitMix64::new(seed);
        let v: Vec<Complex64> = (0..model.num_dofs()).map(|_| c(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect();
        let form = system.matrix.quadratic_form(&v);
        prop_assert!(form.im <= 1e-12 * form.norm());
    }

    #[test]
    fn galerkin_solutions_are_orthogonal_to_the_residual(y in prop::collection::vec(-1.0f64..=1.0, 3), l in 0usize..6) {
        let model = small_helmholtz(2);
        let snaps = assemble_snapshots(&model, &halton(10, 3, 0), [0; 32]).unwrap();
        let basis = pod(&snaps, &PodOptions { truncation: Truncation::Rank(6), ..PodOptions::default() }).unwrap();
        let sub = basis.truncated(l).unwrap();
        let system = model.assemble(&ParamPoint::new(y).unwrap()).unwrap();
        let coeffs = ReducedSystem::new(&system, &basis).unwrap().solve(l).unwrap();
        let u = sub.reconstruct(&coeffs).unwrap();
        let au = system.matrix.mul_vec(&u.values);
        let r = DVector::from_iterator(au.len(), system.rhs.values.iter().zip(&au).map(|(b, a)| b - a));
        prop_assert!(sub.basis.ad_mul(&r).norm() <= 1e-10 * system.rhs.norm());
    }
}

#[test]
fn tail_energy_orders_with_algebraic_rate() {
    // r = 1 is excluded by the decay validation (r > 1), so 1.5 stands in
    let params = halton(128, 10, 0);
    let tails: Vec<f64> = [3.0, 2.0, 1.5]
        .iter()
        .map(|&r| {
            let spec = DecaySpec::algebraic(r, 0.1, 10).unwrap();
            let model = HelmholtzModel::new(HelmholtzProblem::new(1.0, 4, spec)).unwrap();
            let snaps = assemble_snapshots(&model, &params, [0; 32]).unwrap();
            let basis = pod(&snaps, &PodOptions { truncation: Truncation::Rank(10), ..PodOptions::default() }).unwrap();
            basis.tail_energy() / basis.total_energy()
        })
        .collect();
    assert!(tails[0] < tails[1] && tails[1] < tails[2], "{tails:?}");
}
