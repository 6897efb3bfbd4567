//! GP log-likelihood ratio `s(a, b) = log p_same(a, b) − log p_diff(a, b)`.
//!
//! On a shared grid the joint covariance under "same function" is
//! `[[K_y, K], [K, K_y]]`. Its inverse has diagonal blocks `Q⁻¹` and
//! off-diagonal blocks `−K_y⁻¹ K Q⁻¹` with `Q = K_y − K K_y⁻¹ K`, so
//!
//! ```text
//! s = ½ (aᵀ M₁ a + bᵀ M₁ b) + aᵀ M₂ b − ½ (log det Q − log det K_y)
//! M₁ = K_y⁻¹ − Q⁻¹,   M₂ = K_y⁻¹ K Q⁻¹
//! ```
//!
//! Substituting `K = K_y − σ²I` gives `Q = σ² (2I − σ² K_y⁻¹)`, which is
//! assembled in that form: its spectrum lies in `[σ², 2σ²)`, so the Cholesky
//! factor stays accurate when `σ_n ≪ σ_f`, where the literal difference
//! `K_y − K K_y⁻¹ K` would cancel catastrophically.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{kernel_matrix_unchecked, lml_with_bundle, CovarianceBundle, FittedModel};
use crate::linalg::{gaussian_log_density, symmetrize, CholeskyFactor};
use crate::timecourse::TimeCourse;

/// Per-grid precomputation for the synchronous path: one factorization of
/// `K_y` (from the bundle) and one of `Q`.
#[derive(Debug, Clone)]
pub struct SyncPlan {
    m1: DMatrix<f64>,
    m2: DMatrix<f64>,
    /// `½ (log det Q − log det K_y)`.
    offset: f64,
}

/// Per-course quantities on a given plan: `aᵀ M₁ a` and `M₂ a`.
#[derive(Debug, Clone)]
pub(crate) struct SyncProjection {
    self_term: f64,
    mixed: DVector<f64>,
}

impl SyncPlan {
    pub fn new(bundle: &CovarianceBundle) -> Result<Self> {
        let t = bundle.dim();
        let s2 = bundle.effective_noise_var();
        let ky_inv = bundle.chol().inverse();
        let w = &ky_inv * s2;
        let identity = DMatrix::<f64>::identity(t, t);

        let mut q = (&identity * 2.0 - &w) * s2;
        symmetrize(&mut q);
        let q_chol = CholeskyFactor::new(&q)?;
        let q_inv = q_chol.inverse();

        let mut m1 = &ky_inv - &q_inv;
        symmetrize(&mut m1);
        // K_y⁻¹ K = I − σ² K_y⁻¹.
        let mut m2 = (&identity - &w) * &q_inv;
        symmetrize(&mut m2);

        Ok(Self {
            m1,
            m2,
            offset: 0.5 * (q_chol.log_det() - bundle.logdet()),
        })
    }

    pub(crate) fn project(&self, values: &[f64]) -> SyncProjection {
        let a = DVector::from_column_slice(values);
        let mixed = &self.m2 * &a;
        let self_term = a.dot(&(&self.m1 * &a));
        SyncProjection { self_term, mixed }
    }

    /// Symmetric by construction: swapping the arguments swaps the operands
    /// of two commutative additions.
    pub(crate) fn score(
        &self,
        pa: &SyncProjection,
        a: &[f64],
        pb: &SyncProjection,
        b: &[f64],
    ) -> f64 {
        let ab: f64 = pa.mixed.iter().zip(b).map(|(x, y)| x * y).sum();
        let ba: f64 = pb.mixed.iter().zip(a).map(|(x, y)| x * y).sum();
        0.5 * (pa.self_term + pb.self_term) + 0.5 * (ab + ba) - self.offset
    }
}

/// GP similarity for two courses sampled on the same grid.
pub fn gp_similarity_sync(a: &TimeCourse, b: &TimeCourse, model: &FittedModel) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::IncompatibleGrids(format!(
            "{} and {} do not share a grid; use the asynchronous path",
            a.id(),
            b.id()
        )));
    }
    let bundle = model.bundle(a.times())?;
    let plan = SyncPlan::new(&bundle)?;
    let pa = plan.project(a.values());
    let pb = plan.project(b.values());
    Ok(plan.score(&pa, a.values(), &pb, b.values()))
}

/// Orders a pair canonically so that results are bitwise symmetric.
fn canonical<'a>(a: &'a TimeCourse, b: &'a TimeCourse) -> (&'a TimeCourse, &'a TimeCourse) {
    let key = |c: &TimeCourse| {
        (
            c.len(),
            c.times().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            c.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        )
    };
    if key(b) < key(a) {
        (b, a)
    } else {
        (a, b)
    }
}

/// GP similarity for arbitrary grids, from the joint `(t_a + t_b)`-dimensional
/// density versus the product of the two marginals.
pub fn gp_similarity_async(a: &TimeCourse, b: &TimeCourse, model: &FittedModel) -> Result<f64> {
    let (a, b) = canonical(a, b);
    let ba = model.bundle(a.times())?;
    let bb = model.bundle(b.times())?;
    async_score(a, &ba, b, &bb, model)
}

pub(crate) fn async_score(
    a: &TimeCourse,
    ba: &CovarianceBundle,
    b: &TimeCourse,
    bb: &CovarianceBundle,
    model: &FittedModel,
) -> Result<f64> {
    let (ta, tb) = (a.len(), b.len());
    let cross = kernel_matrix_unchecked(a.times(), b.times(), model.hyperparams());
    let mut joint = DMatrix::<f64>::zeros(ta + tb, ta + tb);
    joint.view_mut((0, 0), (ta, ta)).copy_from(ba.noisy());
    joint.view_mut((ta, ta), (tb, tb)).copy_from(bb.noisy());
    joint
        .view_mut((ta, 0), (tb, ta))
        .copy_from(&cross.transpose());
    joint.view_mut((0, ta), (ta, tb)).copy_from(&cross);
    let chol = CholeskyFactor::new(&joint)?;

    let stacked = DVector::from_iterator(ta + tb, a.values().iter().chain(b.values()).copied());
    let same = gaussian_log_density(&chol, &stacked);
    let diff = lml_with_bundle(ba, a.values()) + lml_with_bundle(bb, b.values());
    Ok(same - diff)
}

pub(crate) fn canonical_pair<'a>(
    a: &'a TimeCourse,
    b: &'a TimeCourse,
) -> (&'a TimeCourse, &'a TimeCourse, bool) {
    let (x, y) = canonical(a, b);
    (x, y, !std::ptr::eq(x, a))
}
