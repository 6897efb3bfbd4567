use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};

/// Precomputed pairwise biological similarity between series.
#[derive(Debug, Clone, PartialEq)]
pub struct BioSimilarityMatrix {
    ids: Vec<String>,
    scores: DMatrix<f64>,
}

impl BioSimilarityMatrix {
    /// Requires a square, symmetric, finite, non-negative matrix (the
    /// diagonal is not inspected).
    pub fn new(ids: Vec<String>, scores: DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if scores.shape() != (n, n) {
            return Err(Error::InvalidInput(format!(
                "{n} ids for a {}x{} similarity matrix",
                scores.nrows(),
                scores.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = scores[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "biological similarity ({i}, {j}) = {v} must be finite and non-negative"
                    )));
                }
                if v != scores[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "biological similarity is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { ids, scores })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Biological homogeneity index: mean over clusters of the average
/// off-diagonal similarity within each cluster. Singleton clusters are
/// skipped and excluded from the average.
pub fn bhi(c: &ClusterAssignment, s: &BioSimilarityMatrix) -> Result<f64> {
    if c.len() != s.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for a {}-series similarity matrix",
            c.len(),
            s.len()
        )));
    }
    bhi_labels(c.labels(), c.k(), s.scores())
}

fn bhi_labels(labels: &[usize], k: usize, s: &DMatrix<f64>) -> Result<f64> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for m in &members {
        let nl = m.len();
        if nl < 2 {
            continue;
        }
        let mut sum = 0.0;
        for &i in m {
            for &j in m {
                if i != j {
                    sum += s[(i, j)];
                }
            }
        }
        total += sum / (nl * (nl - 1)) as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateClustering(
            "every cluster is a singleton; BHI is undefined".into(),
        ));
    }
    if used < k {
        log::warn!("BHI skipped {} singleton cluster(s)", k - used);
    }
    Ok(total / used as f64)
}

/// z-score of `BHI(c)` against `n_random` random clusterings with the same
/// multiset of cluster sizes (label permutations). Permutation `r` uses
/// stream `r` of a generator seeded with `seed`.
pub fn bhi_zscore(
    c: &ClusterAssignment,
    s: &BioSimilarityMatrix,
    n_random: usize,
    seed: u64,
) -> Result<f64> {
    if n_random < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 random clusterings, got {n_random}"
        )));
    }
    let observed = bhi(c, s)?;
    let null: Vec<f64> = (0..n_random)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut labels = c.labels().to_vec();
            labels.shuffle(&mut rng);
            bhi_labels(&labels, c.k(), s.scores())
        })
        .collect::<Result<_>>()?;
    let n = null.len() as f64;
    let mean = null.iter().sum::<f64>() / n;
    let var = null.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if !(std > 1e-12 * mean.abs().max(1e-300)) {
        return Err(Error::DegenerateNull(format!(
            "randomized BHI values have zero spread (mean {mean})"
        )));
    }
    Ok((observed - mean) / std)
}
