//! Clustering quality scores and the rank-sum test used to compare them.

mod bhi;
mod nmi;
mod wilcoxon;

pub use bhi::{bhi, bhi_zscore, BioSimilarityMatrix};
pub use nmi::{nmi, nmi_labels};
pub use wilcoxon::{wilcoxon_rank_sum, RankSumTest};

/// Median of a sample (mean of the two central values for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}
