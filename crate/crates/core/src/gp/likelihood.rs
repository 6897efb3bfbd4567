//! Log marginal likelihood of the zero-mean SE-kernel GP and its gradient in
//! log-hyperparameter space.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::kernel::{assemble_covariance, CovarianceBundle};
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::timecourse::{grid_key, GridKey, TimeCourse};

/// `log p(y | X, θ) = -½ (yᵀ K_y⁻¹ y + log det K_y + t log 2π)`.
pub fn log_marginal_likelihood(tc: &TimeCourse, hp: &Hyperparams) -> Result<f64> {
    lml_parts(tc.times(), tc.values(), hp)
}

/// Same as [`log_marginal_likelihood`] on raw slices; times need not be sorted.
pub fn lml_parts(times: &[f64], values: &[f64], hp: &Hyperparams) -> Result<f64> {
    check_lengths(times, values)?;
    let bundle = assemble_covariance(times, hp)?;
    Ok(lml_with_bundle(&bundle, values))
}

pub(crate) fn lml_with_bundle(bundle: &CovarianceBundle, values: &[f64]) -> f64 {
    let y = DVector::from_column_slice(values);
    let t = values.len() as f64;
    -0.5 * (bundle.chol().quad_form(&y) + bundle.logdet() + t * (2.0 * PI).ln())
}

/// Gradient of the log marginal likelihood with respect to
/// `(ln ℓ, ln σ_f, ln σ_n)`.
pub fn lml_gradient(tc: &TimeCourse, hp: &Hyperparams) -> Result<[f64; 3]> {
    lml_gradient_parts(tc.times(), tc.values(), hp)
}

pub fn lml_gradient_parts(times: &[f64], values: &[f64], hp: &Hyperparams) -> Result<[f64; 3]> {
    check_lengths(times, values)?;
    let bundle = assemble_covariance(times, hp)?;
    let alpha = bundle.chol().solve(&DVector::from_column_slice(values));
    let outer = &alpha * alpha.transpose();
    Ok(gradient_from_moments(&bundle, hp, &outer, 1.0))
}

fn check_lengths(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} times and {} values",
            times.len(),
            values.len()
        )));
    }
    Ok(())
}

/// `½ tr((A − n K_y⁻¹) ∂K_y/∂θ)` for each log-hyperparameter, where
/// `A = Σ αᵢ αᵢᵀ` over the `n` courses sharing this grid.
fn gradient_from_moments(
    bundle: &CovarianceBundle,
    hp: &Hyperparams,
    outer: &DMatrix<f64>,
    count: f64,
) -> [f64; 3] {
    let inv = bundle.chol().inverse();
    let w = outer - inv * count;
    let times = bundle.times();
    let k = bundle.gram();
    let inv_l2 = 1.0 / (hp.lengthscale() * hp.lengthscale());

    let (mut d_len, mut d_sig) = (0.0, 0.0);
    for p in 0..times.len() {
        for q in 0..times.len() {
            let d = times[p] - times[q];
            d_len += w[(p, q)] * k[(p, q)] * d * d * inv_l2;
            d_sig += w[(p, q)] * 2.0 * k[(p, q)];
        }
    }
    let d_noise = w.trace() * 2.0 * hp.noise_var();
    [0.5 * d_len, 0.5 * d_sig, 0.5 * d_noise]
}

/// Work done by one objective evaluation, for complexity accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Cholesky factorizations of a `t×t` covariance.
    pub factorizations: usize,
    /// Triangular solves / quadratic forms against an existing factor.
    pub solves: usize,
}

/// `Σᵢ log p(yᵢ | Xᵢ, θ)` over a dataset, with courses grouped by grid so
/// that each distinct grid is factored once per evaluation.
#[derive(Debug, Clone)]
pub struct SharedObjective {
    groups: Vec<GridGroup>,
}

#[derive(Debug, Clone)]
struct GridGroup {
    times: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl SharedObjective {
    pub fn new(dataset: &[TimeCourse]) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::InvalidInput("cannot fit an empty dataset".into()));
        }
        let mut index: HashMap<GridKey, usize> = HashMap::new();
        let mut groups: Vec<GridGroup> = Vec::new();
        for tc in dataset {
            let slot = *index.entry(grid_key(tc.times())).or_insert_with(|| {
                groups.push(GridGroup {
                    times: tc.times().to_vec(),
                    values: Vec::new(),
                });
                groups.len() - 1
            });
            groups[slot]
                .values
                .push(DVector::from_column_slice(tc.values()));
        }
        Ok(Self { groups })
    }

    pub fn distinct_grids(&self) -> usize {
        self.groups.len()
    }

    pub fn value(&self, hp: &Hyperparams) -> Result<(f64, EvalStats)> {
        let mut stats = EvalStats::default();
        let mut total = 0.0;
        for g in &self.groups {
            let bundle = assemble_covariance(&g.times, hp)?;
            stats.factorizations += 1;
            let t = g.times.len() as f64;
            let constant = bundle.logdet() + t * (2.0 * PI).ln();
            for y in &g.values {
                total += -0.5 * (bundle.chol().quad_form(y) + constant);
                stats.solves += 1;
            }
        }
        Ok((total, stats))
    }

    /// Objective and gradient with respect to log-hyperparameters.
    pub fn value_and_gradient(&self, hp: &Hyperparams) -> Result<(f64, [f64; 3], EvalStats)> {
        let mut stats = EvalStats::default();
        let mut total = 0.0;
        let mut grad = [0.0; 3];
        for g in &self.groups {
            let bundle = assemble_covariance(&g.times, hp)?;
            stats.factorizations += 1;
            let t = g.times.len();
            let constant = bundle.logdet() + t as f64 * (2.0 * PI).ln();
            let mut outer = DMatrix::<f64>::zeros(t, t);
            for y in &g.values {
                let alpha = bundle.chol().solve(y);
                stats.solves += 1;
                total += -0.5 * (y.dot(&alpha) + constant);
                outer.ger(1.0, &alpha, &alpha, 1.0);
            }
            let gg = gradient_from_moments(&bundle, hp, &outer, g.values.len() as f64);
            for (acc, v) in grad.iter_mut().zip(gg) {
                *acc += v;
            }
        }
        Ok((total, grad, stats))
    }
}
