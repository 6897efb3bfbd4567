//! Helpers shared by the integration tests. Oracles here use nalgebra's own
//! factorizations, never the crate's.
#![allow(dead_code)]

use gpsim_core::gp::{FittedModel, Hyperparams};
use gpsim_core::TimeCourse;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `t` sorted points in [0, 1] at least 1e-3 apart.
pub fn random_grid(rng: &mut ChaCha8Rng, t: usize) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
        g.sort_by(f64::total_cmp);
        if g.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            return g;
        }
    }
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn se(a: f64, b: f64, hp: &Hyperparams) -> f64 {
    let d = a - b;
    hp.signal_var() * (-(d * d) / (2.0 * hp.lengthscale() * hp.lengthscale())).exp()
}

pub fn kernel(a: &[f64], b: &[f64], hp: &Hyperparams) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| se(a[i], b[j], hp))
}

pub fn noisy(a: &[f64], hp: &Hyperparams) -> DMatrix<f64> {
    kernel(a, a, hp) + DMatrix::identity(a.len(), a.len()) * hp.noise_var()
}

/// `log N(y | 0, cov)` through nalgebra's Cholesky.
pub fn log_density(cov: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let chol = cov.clone().cholesky().expect("oracle covariance is PD");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let quad = y.dot(&chol.solve(y));
    -0.5 * (quad + logdet + y.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// One draw of noisy observations from the GP prior on `times`.
pub fn gp_draw(rng: &mut ChaCha8Rng, times: &[f64], hp: &Hyperparams) -> Vec<f64> {
    let chol = noisy(times, hp).cholesky().expect("PD");
    let z = DVector::from_vec(normals(rng, times.len()));
    (chol.l() * z).iter().copied().collect()
}

pub fn course(id: &str, times: Vec<f64>, values: Vec<f64>) -> TimeCourse {
    TimeCourse::new(id, times, values).unwrap()
}

pub fn model(hp: Hyperparams) -> FittedModel {
    FittedModel::from_hyperparams(hp, 0.0)
}

pub fn hp(l: f64, f: f64, n: f64) -> Hyperparams {
    Hyperparams::new(l, f, n).unwrap()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// `log p(a, b | same) − log p(a) − log p(b)` from the stacked joint.
pub fn joint_oracle(a: &TimeCourse, b: &TimeCourse, h: &Hyperparams) -> f64 {
    let (ta, tb) = (a.times(), b.times());
    let (na, nb) = (ta.len(), tb.len());
    let mut joint = DMatrix::zeros(na + nb, na + nb);
    joint.view_mut((0, 0), (na, na)).copy_from(&noisy(ta, h));
    joint.view_mut((na, na), (nb, nb)).copy_from(&noisy(tb, h));
    let cross = kernel(ta, tb, h);
    joint.view_mut((0, na), (na, nb)).copy_from(&cross);
    joint
        .view_mut((na, 0), (nb, na))
        .copy_from(&cross.transpose());
    let mut diag = joint.clone();
    diag.view_mut((0, na), (na, nb)).fill(0.0);
    diag.view_mut((na, 0), (nb, na)).fill(0.0);
    let y = DVector::from_iterator(na + nb, a.values().iter().chain(b.values()).copied());
    log_density(&joint, &y) - log_density(&diag, &y)
}

/// `log p(b | a) − log p(b)` through the posterior predictive of `b` given `a`.
pub fn predictive_oracle(a: &TimeCourse, b: &TimeCourse, h: &Hyperparams) -> f64 {
    let (ta, tb) = (a.times(), b.times());
    let kya = noisy(ta, h);
    let kyb = noisy(tb, h);
    let kba = kernel(tb, ta, h);
    let inv = kya.try_inverse().unwrap();
    let ya = DVector::from_column_slice(a.values());
    let yb = DVector::from_column_slice(b.values());
    let mean = &kba * &inv * &ya;
    let mut cov = &kyb - &kba * &inv * kba.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    log_density(&cov, &(&yb - mean)) - log_density(&kyb, &yb)
}
