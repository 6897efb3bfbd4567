//! Distance-based clustering of a [`SimilarityMatrix`](crate::similarity::SimilarityMatrix).

mod hierarchical;
mod kmeans;
mod knn;
mod spectral;

use std::fmt;
use std::str::FromStr;

pub use hierarchical::{average_linkage_merges, hierarchical_average_linkage, Merge};
pub use kmeans::{kmeans, KMeansResult};
pub use knn::{knn_graph, AffinityGraph};
pub use spectral::spectral_cluster;

use crate::error::{Error, Result};

/// Cluster label per series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    /// Checks that every label is below `k` and every cluster is used.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            if l >= k {
                return Err(Error::InvalidInput(format!(
                    "label {l} out of range for k={k}"
                )));
            }
            sizes[l] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::DegenerateClustering(format!(
                "cluster {empty} of {k} is empty"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Builds from arbitrary labels, renumbering them `0..k` in order of
    /// first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        let k = map.len();
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Member indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterMethod {
    Spectral,
    Hierarchical,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 2] = [ClusterMethod::Spectral, ClusterMethod::Hierarchical];

    pub fn name(&self) -> &'static str {
        match self {
            ClusterMethod::Spectral => "spectral",
            ClusterMethod::Hierarchical => "hierarchical",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClusterMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown clustering method {s:?}")))
    }
}

/// Runs either clusterer on a matrix, negating similarities where a
/// dissimilarity is required.
pub fn cluster_matrix(
    m: &crate::similarity::SimilarityMatrix,
    method: ClusterMethod,
    k_clusters: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    match method {
        ClusterMethod::Spectral => {
            let g = knn_graph(m, k_neighbors)?;
            spectral_cluster(&g, k_clusters, seed)
        }
        ClusterMethod::Hierarchical => {
            hierarchical_average_linkage(&m.to_dissimilarity(), k_clusters)
        }
    }
}
