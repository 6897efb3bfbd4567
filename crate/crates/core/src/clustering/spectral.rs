use nalgebra::{DMatrix, SymmetricEigen};

use super::kmeans::kmeans;
use super::{AffinityGraph, ClusterAssignment};
use crate::error::{Error, Result};

const KMEANS_RESTARTS: usize = 50;

/// Connected components as lists of node indices, ordered by smallest member.
fn components(adj: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = adj.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(u) = stack.pop() {
            comp.push(u);
            for v in 0..n {
                if !seen[v] && adj[(u, v)] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Links the smallest component to its closest outside node until at most
/// `target` components remain.
fn merge_components(adj: &mut DMatrix<f64>, closeness: &DMatrix<f64>, target: usize) {
    loop {
        let comps = components(adj);
        if comps.len() <= target {
            return;
        }
        let smallest = comps
            .iter()
            .min_by(|a, b| a.len().cmp(&b.len()).then(a[0].cmp(&b[0])))
            .expect("non-empty");
        let n = adj.nrows();
        let mut inside = vec![false; n];
        for &i in smallest {
            inside[i] = true;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for &i in smallest {
            for j in (0..n).filter(|&j| !inside[j]) {
                let c = closeness[(i, j)];
                if best.is_none_or(|(bc, _, _)| c > bc) {
                    best = Some((c, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("another component exists");
        adj[(i, j)] = 1.0;
        adj[(j, i)] = 1.0;
    }
}

/// Spectral clustering on the symmetric normalized Laplacian
/// `L = I − D^{-1/2} A D^{-1/2}`: the eigenvectors of the `k_clusters`
/// smallest eigenvalues form an embedding whose rows are scaled to unit
/// length and grouped by k-means (k-means++, 50 seeded restarts).
pub fn spectral_cluster(
    g: &AffinityGraph,
    k_clusters: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = g.len();
    if k_clusters == 0 || k_clusters > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k_clusters} clusters from {n} series"
        )));
    }
    let mut adj = g.adjacency().clone();
    merge_components(&mut adj, g.closeness(), k_clusters);

    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d = adj.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt_deg[i] * adj[(i, j)] * inv_sqrt_deg[j]
    });
    let eig = SymmetricEigen::try_new(lap, 1e-12, 10_000)
        .ok_or_else(|| Error::Numerical("Laplacian eigen-decomposition did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let mut embed = DMatrix::<f64>::zeros(n, k_clusters);
    for (c, &idx) in order.iter().take(k_clusters).enumerate() {
        embed.set_column(c, &eig.eigenvectors.column(idx));
    }
    for mut r in embed.row_iter_mut() {
        let norm = r.norm();
        if norm > 0.0 {
            r /= norm;
        }
    }

    let km = kmeans(&embed, k_clusters, KMEANS_RESTARTS, seed)?;
    let assignment = ClusterAssignment::from_labels(&km.labels);
    if assignment.k() != k_clusters {
        return Err(Error::DegenerateClustering(format!(
            "spectral embedding produced {} clusters instead of {k_clusters}",
            assignment.k()
        )));
    }
    Ok(assignment)
}
