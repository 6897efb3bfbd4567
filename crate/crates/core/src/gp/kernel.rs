use nalgebra::DMatrix;

use super::Hyperparams;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

/// Squared-exponential cross-covariance `σ_f² exp(-(a_p - b_q)² / 2ℓ²)`.
pub fn kernel_matrix(times_a: &[f64], times_b: &[f64], hp: &Hyperparams) -> Result<DMatrix<f64>> {
    if times_a.is_empty() || times_b.is_empty() {
        return Err(Error::InvalidInput(
            "kernel_matrix needs non-empty time vectors".into(),
        ));
    }
    if times_a.iter().chain(times_b).any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput(
            "kernel_matrix received a non-finite time".into(),
        ));
    }
    Ok(kernel_matrix_unchecked(times_a, times_b, hp))
}

pub(crate) fn kernel_matrix_unchecked(a: &[f64], b: &[f64], hp: &Hyperparams) -> DMatrix<f64> {
    let sf2 = hp.signal_var();
    let inv = 1.0 / (2.0 * hp.lengthscale() * hp.lengthscale());
    DMatrix::from_fn(a.len(), b.len(), |p, q| {
        let d = a[p] - b[q];
        sf2 * (-d * d * inv).exp()
    })
}

/// Covariance of one sampling grid: noiseless gram, noisy covariance and its
/// Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceBundle {
    pub(crate) times: Vec<f64>,
    pub(crate) gram: DMatrix<f64>,
    pub(crate) noisy: DMatrix<f64>,
    pub(crate) chol: CholeskyFactor,
    pub(crate) logdet: f64,
    /// `σ_n²` plus any jitter that had to be added.
    pub(crate) noise_var: f64,
    pub(crate) jitter: f64,
}

impl CovarianceBundle {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Noiseless kernel matrix `K`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `K_y = K + σ_n² I` (plus jitter, if any).
    pub fn noisy(&self) -> &DMatrix<f64> {
        &self.noisy
    }

    pub fn chol(&self) -> &CholeskyFactor {
        &self.chol
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn effective_noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.times.len()
    }
}

/// Builds `K`, `K_y = K + σ_n² I` and factors `K_y`.
///
/// If the first factorization fails, `1e-10 · trace(K_y) / t` is added to the
/// diagonal and the factorization retried once.
pub fn assemble_covariance(times: &[f64], hp: &Hyperparams) -> Result<CovarianceBundle> {
    let gram = kernel_matrix(times, times, hp)?;
    let t = times.len();
    let mut noisy = gram.clone();
    for k in 0..t {
        noisy[(k, k)] += hp.noise_var();
    }
    let (chol, jitter) = match CholeskyFactor::new(&noisy) {
        Ok(c) => (c, 0.0),
        Err(_) => {
            let jitter = 1e-10 * noisy.trace() / t as f64;
            for k in 0..t {
                noisy[(k, k)] += jitter;
            }
            log::warn!("covariance not positive definite; retrying with jitter {jitter:e}");
            (CholeskyFactor::new(&noisy)?, jitter)
        }
    };
    let logdet = chol.log_det();
    Ok(CovarianceBundle {
        times: times.to_vec(),
        gram,
        noisy,
        chol,
        logdet,
        noise_var: hp.noise_var() + jitter,
        jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_gives_signal_variance() {
        let hp = Hyperparams::new(1.0, 2.0, 0.1).unwrap();
        let k = kernel_matrix(&[0.0], &[0.0], &hp).unwrap();
        assert_eq!(k[(0, 0)], 4.0);
    }

    #[test]
    fn exponent_minus_one() {
        for (l, sf) in [(1.0, 1.0), (0.3, 2.5), (4.0, 0.2)] {
            let hp = Hyperparams::new(l, sf, 0.1).unwrap();
            let k = kernel_matrix(&[0.0], &[l * 2f64.sqrt()], &hp).unwrap();
            let want = sf * sf * (-1f64).exp();
            assert!((k[(0, 0)] - want).abs() <= 1e-15 * want);
        }
    }

    #[test]
    fn three_point_matrix() {
        // exp(-d²/(2·0.09)) for d = 0.5 and d = 1, evaluated with mpmath at 30 digits.
        let half = 0.249_352_208_777_296_2_f64;
        let one = 0.003_865_920_139_472_807_f64;
        let hp = Hyperparams::new(0.3, 1.0, 0.1).unwrap();
        let t = [0.0, 0.5, 1.0];
        let k = kernel_matrix(&t, &t, &hp).unwrap();
        let want = [[1.0, half, one], [half, 1.0, half], [one, half, 1.0]];
        for p in 0..3 {
            for q in 0..3 {
                assert!((k[(p, q)] - want[p][q]).abs() < 1e-15, "{p},{q}");
                assert_eq!(k[(p, q)], k[(q, p)]);
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        let hp = Hyperparams::new(1.0, 1.0, 0.1).unwrap();
        assert!(kernel_matrix(&[f64::NAN], &[0.0], &hp).is_err());
        assert!(kernel_matrix(&[], &[0.0], &hp).is_err());
    }

    #[test]
    fn scalar_bundle() {
        let hp = Hyperparams::new(1.0, 1.0, 0.1).unwrap();
        let b = assemble_covariance(&[0.0], &hp).unwrap();
        assert!((b.noisy()[(0, 0)] - 1.01).abs() < 1e-15);
        assert!((b.logdet() - 1.01f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn two_point_bundle() {
        let hp = Hyperparams::new(1.0, 1.0, 0.5).unwrap();
        let b = assemble_covariance(&[0.0, 1.0], &hp).unwrap();
        let off = (-0.5f64).exp();
        let want = DMatrix::from_row_slice(2, 2, &[1.25, off, off, 1.25]);
        assert!((b.noisy() - want).amax() < 1e-15);
    }

    #[test]
    fn duplicate_times_with_tiny_noise_use_jitter_or_fail_cleanly() {
        let hp = Hyperparams::new(1.0, 1.0, 1e-300).unwrap();
        match assemble_covariance(&[0.0, 0.0, 1.0], &hp) {
            Ok(b) => assert!(b.jitter() > 0.0),
            Err(Error::Factorization { minor, .. }) => assert!(minor >= 2),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
