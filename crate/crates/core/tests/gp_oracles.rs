mod common;

use common::*;
use gpsim_core::gp::{
    assemble_covariance, fit_with_report, kernel_matrix, lml_gradient_parts, lml_parts,
    log_marginal_likelihood, Hyperparams, OptimizerConfig, RestartStatus, SharedObjective,
};
use gpsim_core::TimeCourse;
use nalgebra::{DVector, SymmetricEigen};
use proptest::prelude::*;

#[test]
fn kernel_at_root_two_lengthscales() {
    for (l, f) in [(0.3, 1.0), (2.0, 0.5), (0.01, 3.0)] {
        let h = hp(l, f, 0.1);
        let k = kernel_matrix(&[0.0], &[l * 2f64.sqrt()], &h).unwrap();
        let expected = f * f * (-1f64).exp();
        assert!((k[(0, 0)] - expected).abs() <= 1e-15 * expected);
    }
}

#[test]
fn two_point_noisy_covariance() {
    let b = assemble_covariance(&[0.0, 1.0], &hp(1.0, 1.0, 0.5)).unwrap();
    let off = (-0.5f64).exp();
    let ky = b.noisy();
    assert!((ky[(0, 0)] - 1.25).abs() < 1e-15);
    assert!((ky[(1, 1)] - 1.25).abs() < 1e-15);
    assert!((ky[(0, 1)] - off).abs() < 1e-15);
    assert_eq!(ky[(0, 1)], ky[(1, 0)]);
}

#[test]
fn logdet_matches_eigenvalue_sum() {
    let mut r = rng(11);
    for _ in 0..20 {
        let times = random_grid(&mut r, 5);
        let h = hp(
            0.05 + 0.9 * rand::Rng::random::<f64>(&mut r),
            0.2 + 2.0 * rand::Rng::random::<f64>(&mut r),
            0.01 + 0.5 * rand::Rng::random::<f64>(&mut r),
        );
        let b = assemble_covariance(&times, &h).unwrap();
        let eig = SymmetricEigen::new(noisy(&times, &h));
        let oracle: f64 = eig.eigenvalues.iter().map(|v| v.ln()).sum();
        assert!(
            (b.logdet() - oracle).abs() < 1e-8,
            "{} vs {oracle}",
            b.logdet()
        );
    }
}

#[test]
fn lml_matches_dense_inverse() {
    let mut r = rng(12);
    for _ in 0..20 {
        let times = random_grid(&mut r, 4);
        let values = normals(&mut r, 4);
        let h = hp(0.4, 1.3, 0.2);
        let ky = noisy(&times, &h);
        let inv = ky.clone().try_inverse().unwrap();
        let y = DVector::from_vec(values.clone());
        let oracle = -0.5
            * ((y.transpose() * &inv * &y)[(0, 0)]
                + ky.determinant().ln()
                + 4.0 * (2.0 * std::f64::consts::PI).ln());
        let got = lml_parts(&times, &values, &h).unwrap();
        assert!(
            (got - oracle).abs() < 1e-10 * oracle.abs().max(1.0),
            "{got} vs {oracle}"
        );
    }
}

#[test]
fn lml_scalar_limit() {
    let tc = course("a", vec![0.0], vec![2.0]);
    let got = log_marginal_likelihood(&tc, &hp(1.0, 1.0, 1e-8)).unwrap();
    let expected = -2.0 - 0.5 * (2.0 * std::f64::consts::PI).ln();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn cholesky_never_fails_at_noise_floor() {
    let mut r = rng(13);
    for _ in 0..50 {
        let mut times = random_grid(&mut r, 15);
        // Near-duplicate times make K numerically singular.
        times[7] = times[6] + 1e-12;
        let h = hp(0.5, 1.0, 1e-6);
        assert!(assemble_covariance(&times, &h).is_ok());
    }
}

#[test]
fn objective_counts_one_factorization_per_grid() {
    let mut r = rng(14);
    let grid = random_grid(&mut r, 15);
    let other = random_grid(&mut r, 9);
    let mut data: Vec<TimeCourse> = (0..40)
        .map(|i| course(&format!("a{i}"), grid.clone(), normals(&mut r, 15)))
        .collect();
    data.extend((0..10).map(|i| course(&format!("b{i}"), other.clone(), normals(&mut r, 9))));
    let obj = SharedObjective::new(&data).unwrap();
    let (_, stats) = obj.value(&hp(0.3, 1.0, 0.1)).unwrap();
    assert_eq!(stats.factorizations, 2);
    assert_eq!(stats.solves, 50);
    let (_, _, stats) = obj.value_and_gradient(&hp(0.3, 1.0, 0.1)).unwrap();
    assert_eq!(stats.factorizations, 2);
    assert_eq!(stats.solves, 50);
}

#[test]
fn every_restart_improves_on_its_start() {
    let mut r = rng(15);
    let times: Vec<f64> = (0..15).map(|k| k as f64 / 14.0).collect();
    let truth = hp(0.2, 1.0, 0.1);
    let data: Vec<TimeCourse> = (0..30)
        .map(|i| {
            course(
                &format!("s{i}"),
                times.clone(),
                gp_draw(&mut r, &times, &truth),
            )
        })
        .collect();
    let (model, report) = fit_with_report(&data, &OptimizerConfig::default()).unwrap();
    for tr in &report.restarts {
        assert!(tr.objective >= tr.initial_objective);
        assert!(tr.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(model.objective() >= tr.objective);
    }
    assert_eq!(model.cached_grids(), 1);
}

/// Median over seeds of hyperparameters recovered from GP-prior draws.
#[test]
fn recovers_generating_hyperparameters() {
    let truth = hp(0.2, 1.0, 0.1);
    let times: Vec<f64> = (0..15).map(|k| k as f64 / 14.0).collect();
    let mut ls = Vec::new();
    let mut ns = Vec::new();
    for seed in 0..5 {
        let mut r = rng(100 + seed);
        let data: Vec<TimeCourse> = (0..150)
            .map(|i| {
                course(
                    &format!("s{i}"),
                    times.clone(),
                    gp_draw(&mut r, &times, &truth),
                )
            })
            .collect();
        let cfg = OptimizerConfig {
            seed,
            ..Default::default()
        };
        let (model, report) = fit_with_report(&data, &cfg).unwrap();
        let best = &report.restarts[report.best_restart];
        assert_ne!(best.status, RestartStatus::Failed);
        ls.push(model.hyperparams().lengthscale());
        ns.push(model.hyperparams().noise_std());
    }
    let med = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (l, n) = (med(&mut ls), med(&mut ns));
    assert!(l > 0.1 && l < 0.4, "lengthscale {l}");
    assert!(n > 0.1 / 1.5 && n < 0.15, "noise {n}");
}

fn hyper() -> impl Strategy<Value = Hyperparams> {
    (-3.0f64..0.7, -2.3f64..1.1, -3.0f64..0.0)
        .prop_map(|(l, f, n)| Hyperparams::from_log([l, f, n]).unwrap())
}

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..9, any::<u64>()).prop_map(|(t, seed)| {
        let mut r = rng(seed);
        (random_grid(&mut r, t), normals(&mut r, t))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences((times, values) in series(), h in hyper()) {
        let g = lml_gradient_parts(&times, &values, &h).unwrap();
        let base = h.to_log();
        let step = 1e-5;
        for k in 0..3 {
            let mut up = base;
            let mut down = base;
            up[k] += step;
            down[k] -= step;
            let fu = lml_parts(&times, &values, &Hyperparams::from_log(up).unwrap()).unwrap();
            let fd = lml_parts(&times, &values, &Hyperparams::from_log(down).unwrap()).unwrap();
            let numeric = (fu - fd) / (2.0 * step);
            prop_assert!(
                (g[k] - numeric).abs() <= 1e-5 * numeric.abs().max(1.0),
                "component {k}: analytic {} numeric {numeric}", g[k]
            );
        }
    }

    #[test]
    fn lml_ignores_pair_order((times, values) in series(), h in hyper(), seed in any::<u64>()) {
        let sorted = lml_parts(&times, &values, &h).unwrap();
        let mut pairs: Vec<(f64, f64)> = times.iter().copied().zip(values.iter().copied()).collect();
        rand::seq::SliceRandom::shuffle(pairs.as_mut_slice(), &mut rng(seed));
        let (t2, v2): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let shuffled = lml_parts(&t2, &v2, &h).unwrap();
        prop_assert!((sorted - shuffled).abs() <= 1e-10 * sorted.abs().max(1.0));
        let tc = TimeCourse::from_pairs("x", pairs).unwrap();
        prop_assert_eq!(log_marginal_likelihood(&tc, &h).unwrap(), sorted);
    }

    #[test]
    fn bundle_reconstructs_noisy_covariance((times, _v) in series(), h in hyper()) {
        let b = assemble_covariance(&times, &h).unwrap();
        let l = b.chol().lower();
        let rec = l * l.transpose();
        let err = (&rec - b.noisy()).norm() / b.noisy().norm();
        prop_assert!(err < 1e-10);
        let diag: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        prop_assert_eq!(b.logdet(), diag);
        let direct = noisy(&times, &h);
        for (x, y) in b.noisy().iter().zip(direct.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }
}
