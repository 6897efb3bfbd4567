use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub restart: usize,
}

const MAX_LLOYD_ITERATIONS: usize = 300;

/// k-means on the rows of `points` with k-means++ seeding; returns the
/// restart with the lowest within-cluster sum of squares (earliest restart
/// on ties). Restart `r` draws from stream `r` of a generator seeded with
/// `seed`, so results do not depend on scheduling.
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter(
            "k-means needs at least one restart".into(),
        ));
    }
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let (labels, inertia) = lloyd(points, k, &mut rng);
            KMeansResult {
                labels,
                inertia,
                restart: r,
            }
        })
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.inertia < a.inertia { b } else { a })
        .expect("at least one restart");
    Ok(best)
}

fn sq_dist(points: &DMatrix<f64>, i: usize, c: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(d, v)| {
            let x = points[(i, d)] - v;
            x * x
        })
        .sum()
}

fn row(points: &DMatrix<f64>, i: usize) -> Vec<f64> {
    points.row(i).iter().copied().collect()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut centers = vec![row(points, rng.random_range(0..n))];
    let mut best: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in best.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(points, pick);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let (n, dim) = points.shape();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut changed = false;
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(points, i, center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for d in 0..dim {
                sums[labels[i]][d] += points[(i, d)];
            }
        }
        // An emptied cluster takes over the point farthest from its center.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n).filter(|&i| counts[labels[i]] > 1).max_by(|&a, &b| {
                    sq_dist(points, a, &centers[labels[a]])
                        .total_cmp(&sq_dist(points, b, &centers[labels[b]]))
                        .then(b.cmp(&a))
                });
                if let Some(i) = far {
                    let old = labels[i];
                    counts[old] -= 1;
                    for d in 0..dim {
                        sums[old][d] -= points[(i, d)];
                    }
                    labels[i] = c;
                    counts[c] = 1;
                    sums[c] = row(points, i);
                    changed = true;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| sq_dist(points, i, &centers[labels[i]]))
        .sum();
    (labels, inertia)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_obvious_groups() {
        let pts = DMatrix::from_row_slice(
            6,
            2,
            &[0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1],
        );
        let r = kmeans(&pts, 2, 10, 3).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[0], r.labels[2]);
        assert_eq!(r.labels[3], r.labels[5]);
        assert_ne!(r.labels[0], r.labels[3]);
        assert!(r.inertia < 0.1);
    }

    #[test]
    fn deterministic() {
        let pts = DMatrix::from_fn(30, 3, |i, j| ((i * 7 + j * 13) % 11) as f64);
        let a = kmeans(&pts, 4, 20, 9).unwrap();
        let b = kmeans(&pts, 4, 20, 9).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.inertia, b.inertia);
    }
}
