use nalgebra::DMatrix;

use super::ClusterAssignment;
use crate::error::{Error, Result};
use crate::similarity::{Orientation, SimilarityMatrix};

/// One agglomeration step. Clusters are named by their smallest member
/// index; `kept < absorbed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub kept: usize,
    pub absorbed: usize,
    pub height: f64,
}

fn check(m: &SimilarityMatrix) -> Result<()> {
    if m.orientation() != Orientation::Dissimilarity {
        return Err(Error::InvalidOrientation(format!(
            "average linkage needs a dissimilarity matrix, got {} scores for {}",
            m.orientation().as_str(),
            m.measure_name()
        )));
    }
    Ok(())
}

/// Full UPGMA merge sequence (`N − 1` steps). Ties go to the
/// lexicographically smallest pair of cluster names.
pub fn average_linkage_merges(m: &SimilarityMatrix) -> Result<Vec<Merge>> {
    check(m)?;
    Ok(run(m.scores(), 1))
}

fn run(scores: &DMatrix<f64>, stop_at: usize) -> Vec<Merge> {
    let n = scores.nrows();
    let mut d = scores.clone();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > stop_at.max(1) {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                if d[(a, b)] < best.0 {
                    best = (d[(a, b)], a, b);
                }
            }
        }
        let (height, a, b) = best;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &c in &active {
            if c != a && c != b {
                let v = (na * d[(a, c)] + nb * d[(b, c)]) / (na + nb);
                d[(a, c)] = v;
                d[(c, a)] = v;
            }
        }
        size[a] += size[b];
        active.retain(|&c| c != b);
        merges.push(Merge {
            kept: a,
            absorbed: b,
            height,
        });
    }
    merges
}

/// Average-linkage agglomerative clustering cut at `k_clusters` clusters.
/// Labels are numbered in order of each cluster's smallest member.
pub fn hierarchical_average_linkage(
    m: &SimilarityMatrix,
    k_clusters: usize,
) -> Result<ClusterAssignment> {
    check(m)?;
    let n = m.len();
    if k_clusters == 0 || k_clusters > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k_clusters} clusters from {n} series"
        )));
    }
    let merges = run(m.scores(), k_clusters);
    let mut root: Vec<usize> = (0..n).collect();
    for mg in &merges {
        for r in root.iter_mut() {
            if *r == mg.absorbed {
                *r = mg.kept;
            }
        }
    }
    let assignment = ClusterAssignment::from_labels(&root);
    debug_assert_eq!(assignment.k(), k_clusters);
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dissim(x: &[f64]) -> SimilarityMatrix {
        let n = x.len();
        let ids = (0..n).map(|i| format!("s{i}")).collect();
        SimilarityMatrix::new(
            ids,
            DMatrix::from_fn(n, n, |i, j| (x[i] - x[j]).abs()),
            Orientation::Dissimilarity,
            "line",
        )
        .unwrap()
    }

    #[test]
    fn two_singletons() {
        let c = hierarchical_average_linkage(&dissim(&[0.0, 1.0]), 2).unwrap();
        assert_eq!(c.labels(), &[0, 1]);
    }

    #[test]
    fn separated_groups() {
        let x = [0.0, 10.1, 0.2, 20.0, 10.0, 0.1, 20.2, 10.2];
        let c = hierarchical_average_linkage(&dissim(&x), 3).unwrap();
        assert_eq!(c.labels(), &[0, 1, 0, 2, 1, 0, 2, 1]);
    }

    #[test]
    fn similarity_orientation_rejected() {
        let m = dissim(&[0.0, 1.0, 2.0]);
        let s = SimilarityMatrix::new(
            m.ids().to_vec(),
            m.scores().clone(),
            Orientation::Similarity,
            "x",
        )
        .unwrap();
        assert!(matches!(
            hierarchical_average_linkage(&s, 2),
            Err(Error::InvalidOrientation(_))
        ));
        assert!(hierarchical_average_linkage(&s.to_dissimilarity(), 2).is_ok());
    }

    #[test]
    fn too_many_clusters() {
        assert!(matches!(
            hierarchical_average_linkage(&dissim(&[0.0, 1.0]), 3),
            Err(Error::InvalidParameter(_))
        ));
    }
}
