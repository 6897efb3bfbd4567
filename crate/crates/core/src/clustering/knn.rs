use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Binary kNN affinity graph, union-symmetrized.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    adjacency: DMatrix<f64>,
    k_neighbors: usize,
    /// Per-node neighbor choices before symmetrization.
    neighbors: Vec<Vec<usize>>,
    /// Source scores oriented so larger is closer; used to reconnect
    /// components.
    closeness: DMatrix<f64>,
}

impl AffinityGraph {
    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn k_neighbors(&self) -> usize {
        self.k_neighbors
    }

    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub(crate) fn closeness(&self) -> &DMatrix<f64> {
        &self.closeness
    }

    pub fn len(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.nrows() == 0
    }
}

/// Connects each node to its `k` closest neighbors (largest similarity or
/// smallest dissimilarity; ties go to the lower index) with unit weights and
/// keeps an edge if either endpoint selected it.
pub fn knn_graph(m: &SimilarityMatrix, k: usize) -> Result<AffinityGraph> {
    let n = m.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k_neighbors must be in [1, {}) for {n} series, got {k}",
            n
        )));
    }
    let closeness = m.closeness();
    let mut adjacency = DMatrix::<f64>::zeros(n, n);
    let mut neighbors = Vec::with_capacity(n);
    for i in 0..n {
        let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        cand.sort_by(|&a, &b| {
            closeness[(i, b)]
                .total_cmp(&closeness[(i, a)])
                .then(a.cmp(&b))
        });
        cand.truncate(k);
        for &j in &cand {
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        neighbors.push(cand);
    }
    Ok(AffinityGraph {
        adjacency,
        k_neighbors: k,
        neighbors,
        closeness,
    })
}
