//! Multi-start projected BFGS ascent of the shared log marginal likelihood in
//! log-hyperparameter space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::likelihood::SharedObjective;
use super::model::FittedModel;
use super::Hyperparams;
use crate::error::{Error, Result};
use crate::timecourse::TimeCourse;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub gradient_tolerance: f64,
    /// Lower bound on `σ_n` and `σ_f` as a fraction of the pooled data std.
    pub noise_floor_ratio: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            noise_floor_ratio: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartStatus {
    /// Projected gradient below tolerance.
    Converged,
    /// No ascent step could be found along the steepest-ascent direction;
    /// the iterate sits at the precision limit of the objective.
    Stalled,
    MaxIterations,
    /// The initial point could not be evaluated.
    Failed,
}

#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub initial: [f64; 3],
    pub initial_objective: f64,
    pub final_log_params: [f64; 3],
    pub objective: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub status: RestartStatus,
    /// Objective after every accepted step, starting at the initial point.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub restarts: Vec<RestartTrace>,
    pub best_restart: usize,
}

/// Box constraints in log space.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    lower: [f64; 3],
    upper: [f64; 3],
}

impl Bounds {
    fn clamp(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = x;
        for k in 0..3 {
            out[k] = x[k].clamp(self.lower[k], self.upper[k]);
        }
        out
    }
}

/// Pooled std of all values and the overall time span; both fall back to 1
/// when degenerate.
fn data_scales(dataset: &[TimeCourse]) -> (f64, f64) {
    let values: Vec<f64> = dataset
        .iter()
        .flat_map(|c| c.values().iter().copied())
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };

    let lo = dataset
        .iter()
        .map(|c| c.times()[0])
        .fold(f64::INFINITY, f64::min);
    let hi = dataset
        .iter()
        .map(|c| c.times()[c.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    (std, span)
}

/// Maximizes `Σᵢ log p(yᵢ | Xᵢ, θ)` over shared hyperparameters.
pub fn fit_shared_hyperparams(
    dataset: &[TimeCourse],
    config: &OptimizerConfig,
) -> Result<FittedModel> {
    fit_with_report(dataset, config).map(|(model, _)| model)
}

pub fn fit_with_report(
    dataset: &[TimeCourse],
    config: &OptimizerConfig,
) -> Result<(FittedModel, FitReport)> {
    if config.restarts == 0 {
        return Err(Error::InvalidParameter(
            "at least one restart is required".into(),
        ));
    }
    let objective = SharedObjective::new(dataset)?;
    let (std, span) = data_scales(dataset);
    let floor = (config.noise_floor_ratio * std).ln();
    let bounds = Bounds {
        lower: [(1e-3 * span).ln(), floor, floor],
        upper: [(1e3 * span).ln(), (1e3 * std).ln(), (1e3 * std).ln()],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log_uniform = |lo: f64, hi: f64| rng.random_range(lo.ln()..hi.ln());
    let inits: Vec<[f64; 3]> = (0..config.restarts)
        .map(|_| {
            let l = log_uniform(0.1 * span, 2.0 * span);
            let f = log_uniform(0.1 * std, 2.0 * std);
            let n = log_uniform(0.01 * std, std);
            bounds.clamp([l, f, n])
        })
        .collect();

    let traces: Vec<RestartTrace> = inits
        .par_iter()
        .map(|x0| ascend(&objective, *x0, &bounds, config))
        .collect();

    let mut best: Option<usize> = None;
    for (i, tr) in traces.iter().enumerate() {
        if tr.status == RestartStatus::Failed || !tr.objective.is_finite() {
            continue;
        }
        if best.is_none_or(|b| tr.objective > traces[b].objective) {
            best = Some(i);
        }
    }
    let usable =
        |tr: &RestartTrace| matches!(tr.status, RestartStatus::Converged | RestartStatus::Stalled);
    let Some(best) = best.filter(|_| traces.iter().any(usable)) else {
        let fallback = best.map(|b| &traces[b]);
        return Err(Error::Optimization {
            best_params: fallback
                .map(|t| t.final_log_params.map(f64::exp))
                .unwrap_or([f64::NAN; 3]),
            best_objective: fallback.map_or(f64::NAN, |t| t.objective),
            gradient_norm: fallback.map_or(f64::NAN, |t| t.gradient_norm),
        });
    };

    let tr = &traces[best];
    let hp = Hyperparams::from_log(tr.final_log_params)?;
    let model = FittedModel::new(hp, tr.objective, dataset)?;
    Ok((
        model,
        FitReport {
            restarts: traces,
            best_restart: best,
        },
    ))
}

fn evaluate(obj: &SharedObjective, x: &[f64; 3]) -> Option<(f64, [f64; 3])> {
    let hp = Hyperparams::from_log(*x).ok()?;
    let (f, g, _) = obj.value_and_gradient(&hp).ok()?;
    (f.is_finite() && g.iter().all(|v| v.is_finite())).then_some((f, g))
}

/// Gradient with components that push against an active bound zeroed.
fn projected(x: &[f64; 3], g: &[f64; 3], bounds: &Bounds) -> [f64; 3] {
    let mut p = *g;
    for k in 0..3 {
        if (x[k] <= bounds.lower[k] && g[k] < 0.0) || (x[k] >= bounds.upper[k] && g[k] > 0.0) {
            p[k] = 0.0;
        }
    }
    p
}

fn inf_norm(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn ascend(
    obj: &SharedObjective,
    x0: [f64; 3],
    bounds: &Bounds,
    config: &OptimizerConfig,
) -> RestartTrace {
    let Some((mut f, mut g)) = evaluate(obj, &x0) else {
        return RestartTrace {
            initial: x0,
            initial_objective: f64::NAN,
            final_log_params: x0,
            objective: f64::NAN,
            gradient_norm: f64::NAN,
            iterations: 0,
            status: RestartStatus::Failed,
            history: Vec::new(),
        };
    };
    let initial_objective = f;
    let mut x = x0;
    let mut h = identity3();
    let mut history = vec![f];
    let mut status = RestartStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let pg = projected(&x, &g, bounds);
        if inf_norm(&pg) < config.gradient_tolerance {
            status = RestartStatus::Converged;
            break;
        }
        iterations += 1;

        let mut fresh = is_identity(&h);
        let step = loop {
            let mut d = mat_vec(&h, &g);
            for k in 0..3 {
                if pg[k] == 0.0 {
                    d[k] = 0.0;
                }
            }
            if dot(&d, &pg) <= 0.0 {
                d = pg;
            }
            match line_search(obj, &x, f, &g, d, bounds) {
                Some(s) => break Some(s),
                None if !fresh => {
                    h = identity3();
                    fresh = true;
                }
                None => break None,
            }
        };
        let Some((x_new, f_new, g_new)) = step else {
            status = RestartStatus::Stalled;
            break;
        };

        let s = sub(&x_new, &x);
        // Curvature pair for the minimization of -f.
        let y = sub(&g, &g_new);
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            h = bfgs_update(&h, &s, &y, sy);
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
    }

    RestartTrace {
        initial: x0,
        initial_objective,
        final_log_params: x,
        objective: f,
        gradient_norm: inf_norm(&projected(&x, &g, bounds)),
        iterations,
        status,
        history,
    }
}

/// Backtracking Armijo search along `d`, projecting onto the box. Accepts
/// only strict increases of the objective.
fn line_search(
    obj: &SharedObjective,
    x: &[f64; 3],
    f: f64,
    g: &[f64; 3],
    d: [f64; 3],
    bounds: &Bounds,
) -> Option<([f64; 3], f64, [f64; 3])> {
    let max_move = inf_norm(&d);
    if max_move == 0.0 {
        return None;
    }
    let mut alpha = (2.0 / max_move).min(1.0);
    for _ in 0..60 {
        let mut cand = *x;
        for k in 0..3 {
            cand[k] += alpha * d[k];
        }
        let cand = bounds.clamp(cand);
        let moved = sub(&cand, x);
        if inf_norm(&moved) == 0.0 {
            return None;
        }
        if let Some((fc, gc)) = evaluate(obj, &cand) {
            if fc > f && fc >= f + 1e-4 * dot(g, &moved) {
                return Some((cand, fc, gc));
            }
        }
        alpha *= 0.5;
    }
    None
}

type Mat3 = [[f64; 3]; 3];

fn identity3() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn is_identity(h: &Mat3) -> bool {
    *h == identity3()
}

fn mat_vec(h: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [dot(&h[0], v), dot(&h[1], v), dot(&h[2], v)]
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Inverse-Hessian BFGS update `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update(h: &Mat3, s: &[f64; 3], y: &[f64; 3], sy: f64) -> Mat3 {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let mut out = *h;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] +=
                -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: usize) -> Vec<f64> {
        (0..t).map(|k| k as f64 / (t - 1) as f64).collect()
    }

    #[test]
    fn zero_data_drives_signal_to_floor() {
        let data: Vec<TimeCourse> = (0..10)
            .map(|i| TimeCourse::new(format!("z{i}"), grid(6), vec![0.0; 6]).unwrap())
            .collect();
        let (model, report) = fit_with_report(&data, &OptimizerConfig::default()).unwrap();
        assert!(model.objective().is_finite());
        // Pooled std falls back to 1, so the floor is 1e-6.
        assert!(
            model.hyperparams().signal_std() < 1e-5,
            "{:?}",
            model.hyperparams()
        );
        for tr in &report.restarts {
            assert!(tr.objective >= tr.initial_objective);
        }
    }

    #[test]
    fn history_is_non_decreasing_and_best_dominates_inits() {
        let t = grid(8);
        let data: Vec<TimeCourse> = (0..12)
            .map(|i| {
                let v = t
                    .iter()
                    .map(|x| (6.0 * x + i as f64 * 0.3).sin() + 0.05 * ((i * 7 + 3) % 5) as f64)
                    .collect();
                TimeCourse::new(format!("c{i}"), t.clone(), v).unwrap()
            })
            .collect();
        let (model, report) = fit_with_report(&data, &OptimizerConfig::default()).unwrap();
        for tr in &report.restarts {
            assert!(tr.history.windows(2).all(|w| w[1] >= w[0]));
            assert!(model.objective() >= tr.initial_objective);
        }
        let best = &report.restarts[report.best_restart];
        assert!(matches!(
            best.status,
            RestartStatus::Converged | RestartStatus::Stalled
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let t = grid(5);
        let data: Vec<TimeCourse> = (0..5)
            .map(|i| {
                let v = t
                    .iter()
                    .map(|x| x * i as f64 - 0.3 * (i % 2) as f64)
                    .collect();
                TimeCourse::new(format!("c{i}"), t.clone(), v).unwrap()
            })
            .collect();
        let cfg = OptimizerConfig {
            seed: 11,
            ..Default::default()
        };
        let a = fit_shared_hyperparams(&data, &cfg).unwrap();
        let b = fit_shared_hyperparams(&data, &cfg).unwrap();
        assert_eq!(a.hyperparams(), b.hyperparams());
    }

    #[test]
    fn zero_restarts_rejected() {
        let data = vec![TimeCourse::new("a", grid(3), vec![0.0, 1.0, 0.0]).unwrap()];
        let cfg = OptimizerConfig {
            restarts: 0,
            ..Default::default()
        };
        assert!(matches!(
            fit_shared_hyperparams(&data, &cfg),
            Err(Error::InvalidParameter(_))
        ));
    }
}
