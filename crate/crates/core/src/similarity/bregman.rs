use nalgebra::DVector;

use crate::error::Result;
use crate::gp::{kernel_matrix_unchecked, CovarianceBundle, FittedModel};
use crate::timecourse::TimeCourse;

/// Squared RKHS norm of the difference between the two posterior mean
/// functions, `‖μ_a − μ_b‖²_H` with `μ_i = Σ_k α_ik k(·, x_ik)` and
/// `α_i = K_{y_i}⁻¹ y_i`. Small negative round-off is clamped to zero.
pub fn bregman_rkhs(a: &TimeCourse, b: &TimeCourse, model: &FittedModel) -> Result<f64> {
    let ba = model.bundle(a.times())?;
    let bb = model.bundle(b.times())?;
    let pa = PosteriorWeights::new(a, &ba);
    let pb = PosteriorWeights::new(b, &bb);
    Ok(divergence(a, &pa, b, &pb, model))
}

/// `α = K_y⁻¹ y` together with `u = K α` on the course's own grid.
#[derive(Debug, Clone)]
pub(crate) struct PosteriorWeights {
    alpha: DVector<f64>,
    gram_alpha: DVector<f64>,
    norm2: f64,
}

impl PosteriorWeights {
    pub(crate) fn new(tc: &TimeCourse, bundle: &CovarianceBundle) -> Self {
        let alpha = bundle
            .chol()
            .solve(&DVector::from_column_slice(tc.values()));
        let gram_alpha = bundle.gram() * &alpha;
        let norm2 = gram_alpha.dot(&alpha);
        Self {
            alpha,
            gram_alpha,
            norm2,
        }
    }
}

pub(crate) fn divergence(
    a: &TimeCourse,
    pa: &PosteriorWeights,
    b: &TimeCourse,
    pb: &PosteriorWeights,
    model: &FittedModel,
) -> f64 {
    let cross = if a.same_grid(b) {
        0.5 * (pa.gram_alpha.dot(&pb.alpha) + pb.gram_alpha.dot(&pa.alpha))
    } else {
        let kab = kernel_matrix_unchecked(a.times(), b.times(), model.hyperparams());
        let ab = pa.alpha.dot(&(&kab * &pb.alpha));
        let ba = pb.alpha.dot(&(kab.transpose() * &pa.alpha));
        0.5 * (ab + ba)
    };
    let d = pa.norm2 + pb.norm2 - 2.0 * cross;
    if d < -1e-10 * (pa.norm2 + pb.norm2).max(1.0) {
        log::warn!(
            "bregman divergence {d:e} for {} / {} clamped to zero",
            a.id(),
            b.id()
        );
    }
    d.max(0.0)
}
