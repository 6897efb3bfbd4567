use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann–Whitney `U` for the first sample: `R_x − n_x (n_x + 1) / 2`.
    pub u: f64,
    /// Continuity-corrected standard score (non-negative).
    pub z: f64,
    /// Two-sided p-value, in `(0, 1]`.
    pub p_value: f64,
}

/// Two-sided Wilcoxon rank-sum test using the normal approximation with tie
/// and continuity corrections.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<RankSumTest> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput(
            "rank-sum test needs two non-empty samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "rank-sum test received a non-finite value".into(),
        ));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;

    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i;
        while j + 1 < pooled.len() && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // Ranks are 1-based; a tie block shares the mean rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_x += avg * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }

    let u = rank_x - nx * (nx + 1.0) / 2.0;
    let mean = nx * ny / 2.0;
    let var = nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return Ok(RankSumTest {
            u,
            z: 0.0,
            p_value: 1.0,
        });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(RankSumTest { u, z, p_value: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let x = [0.3, 0.9, 0.5, 0.7];
        let r = wilcoxon_rank_sum(&x, &x).unwrap();
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_values_equal() {
        let r = wilcoxon_rank_sum(&[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn complete_separation() {
        let x: Vec<f64> = (0..100).map(|i| 200.0 + i as f64).collect();
        let y: Vec<f64> = (0..100).map(|i| i as f64 * 0.5).collect();
        let r = wilcoxon_rank_sum(&x, &y).unwrap();
        assert!(r.p_value < 1e-10 && r.p_value > 0.0);
        assert_eq!(r.u, 10_000.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(wilcoxon_rank_sum(&[], &[1.0]).is_err());
    }
}
