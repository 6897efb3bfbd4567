//! Pairwise (dis)similarity measures between time courses and the matrix
//! builder that applies them to a whole dataset.

mod baseline;
mod bregman;
mod gp_ratio;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use baseline::{correlation_distance, dtw, euclidean};
pub use bregman::bregman_rkhs;
pub use gp_ratio::{gp_similarity_async, gp_similarity_sync, SyncPlan};

use crate::error::{Error, Result};
use crate::gp::{CovarianceBundle, FittedModel};
use crate::timecourse::{grid_key, GridKey, TimeCourse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Larger means more alike.
    Similarity,
    /// Smaller means more alike.
    Dissimilarity,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::Similarity => "similarity",
            Orientation::Dissimilarity => "dissimilarity",
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similarity" => Ok(Orientation::Similarity),
            "dissimilarity" => Ok(Orientation::Dissimilarity),
            other => Err(Error::InvalidParameter(format!(
                "unknown orientation {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Gp,
    Euclidean,
    Correlation,
    Dtw,
    Bregman,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::Gp,
        Measure::Euclidean,
        Measure::Correlation,
        Measure::Dtw,
        Measure::Bregman,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Gp => "gp",
            Measure::Euclidean => "euclidean",
            Measure::Correlation => "correlation",
            Measure::Dtw => "dtw",
            Measure::Bregman => "bregman",
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Measure::Gp => Orientation::Similarity,
            _ => Orientation::Dissimilarity,
        }
    }

    pub fn requires_model(&self) -> bool {
        matches!(self, Measure::Gp | Measure::Bregman)
    }

    /// Point-to-point measures need every course on one grid.
    pub fn requires_shared_grid(&self) -> bool {
        matches!(self, Measure::Euclidean | Measure::Correlation)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure {s:?}")))
    }
}

/// Symmetric `N×N` matrix of pairwise scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    scores: DMatrix<f64>,
    orientation: Orientation,
    measure_name: String,
}

impl SimilarityMatrix {
    /// Validates shape, symmetry and finiteness.
    pub fn new(
        ids: Vec<String>,
        scores: DMatrix<f64>,
        orientation: Orientation,
        measure_name: impl Into<String>,
    ) -> Result<Self> {
        let n = ids.len();
        if scores.nrows() != n || scores.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "{n} ids for a {}x{} matrix",
                scores.nrows(),
                scores.ncols()
            )));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if scores[(i, j)] != scores[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            ids,
            scores,
            orientation,
            measure_name: measure_name.into(),
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn measure_name(&self) -> &str {
        &self.measure_name
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[(i, j)]
    }

    /// Dissimilarity view: similarity scores are negated, so `−s` for the GP
    /// measure.
    pub fn to_dissimilarity(&self) -> SimilarityMatrix {
        match self.orientation {
            Orientation::Dissimilarity => self.clone(),
            Orientation::Similarity => SimilarityMatrix {
                ids: self.ids.clone(),
                scores: -&self.scores,
                orientation: Orientation::Dissimilarity,
                measure_name: self.measure_name.clone(),
            },
        }
    }

    /// Scores where larger always means closer.
    pub fn closeness(&self) -> DMatrix<f64> {
        match self.orientation {
            Orientation::Similarity => self.scores.clone(),
            Orientation::Dissimilarity => -&self.scores,
        }
    }
}

fn pair_error(dataset: &[TimeCourse], i: usize, j: usize, e: Error) -> Error {
    Error::Pair {
        a: dataset[i].id().to_string(),
        b: dataset[j].id().to_string(),
        source: Box::new(e),
    }
}

/// Upper-triangle rows computed in parallel, then mirrored.
fn fill_symmetric<F>(dataset: &[TimeCourse], zero_diagonal: bool, f: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let n = dataset.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let start = if zero_diagonal { i + 1 } else { i };
            (start..n)
                .map(|j| f(i, j).map_err(|e| pair_error(dataset, i, j, e)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        let start = if zero_diagonal { i + 1 } else { i };
        for (off, v) in row.into_iter().enumerate() {
            let j = start + off;
            if !v.is_finite() {
                return Err(pair_error(
                    dataset,
                    i,
                    j,
                    Error::Numerical(format!("non-finite score {v}")),
                ));
            }
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Computes the full pairwise matrix for `measure`.
///
/// For the GP measure each distinct grid is prepared once (one factorization
/// of `K_y` and one of `Q`); pairs on the same grid then cost `O(t)` each,
/// pairs on different grids go through the joint-covariance path.
pub fn pairwise_matrix(
    dataset: &[TimeCourse],
    measure: Measure,
    model: Option<&FittedModel>,
) -> Result<SimilarityMatrix> {
    let ids: Vec<String> = dataset.iter().map(|c| c.id().to_string()).collect();
    if measure.requires_shared_grid() {
        if let Some(first) = dataset.first() {
            if let Some(j) = dataset.iter().position(|c| !c.same_grid(first)) {
                return Err(pair_error(
                    dataset,
                    0,
                    j,
                    Error::IncompatibleGrids(format!(
                        "{} distance is not defined for asynchronously sampled courses",
                        measure.name()
                    )),
                ));
            }
        }
    }
    let need_model = || {
        model.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "measure {} requires a fitted model",
                measure.name()
            ))
        })
    };

    let scores = match measure {
        Measure::Euclidean => {
            fill_symmetric(dataset, true, |i, j| euclidean(&dataset[i], &dataset[j]))?
        }
        Measure::Correlation => fill_symmetric(dataset, true, |i, j| {
            correlation_distance(&dataset[i], &dataset[j])
        })?,
        Measure::Dtw => fill_symmetric(dataset, true, |i, j| dtw(&dataset[i], &dataset[j]))?,
        Measure::Bregman => {
            let model = need_model()?;
            let grids = GridTable::new(dataset, model)?;
            let weights: Vec<_> = dataset
                .iter()
                .enumerate()
                .map(|(i, c)| bregman::PosteriorWeights::new(c, grids.bundle_of(i)))
                .collect();
            fill_symmetric(dataset, true, |i, j| {
                Ok(bregman::divergence(
                    &dataset[i],
                    &weights[i],
                    &dataset[j],
                    &weights[j],
                    model,
                ))
            })?
        }
        Measure::Gp => {
            let model = need_model()?;
            let grids = GridTable::new(dataset, model)?;
            let plans: Vec<SyncPlan> = grids
                .bundles
                .iter()
                .map(SyncPlan::new)
                .collect::<Result<_>>()?;
            let projections: Vec<_> = dataset
                .iter()
                .enumerate()
                .map(|(i, c)| plans[grids.course_grid[i]].project(c.values()))
                .collect();
            fill_symmetric(dataset, false, |i, j| {
                let (gi, gj) = (grids.course_grid[i], grids.course_grid[j]);
                let (a, b) = (&dataset[i], &dataset[j]);
                if gi == gj {
                    Ok(plans[gi].score(&projections[i], a.values(), &projections[j], b.values()))
                } else {
                    let (x, y, swapped) = gp_ratio::canonical_pair(a, b);
                    let (bx, by) = if swapped {
                        (&grids.bundles[gj], &grids.bundles[gi])
                    } else {
                        (&grids.bundles[gi], &grids.bundles[gj])
                    };
                    gp_ratio::async_score(x, bx, y, by, model)
                }
            })?
        }
    };
    SimilarityMatrix::new(ids, scores, measure.orientation(), measure.name())
}

/// Distinct grids of a dataset with their covariance bundles.
struct GridTable {
    bundles: Vec<CovarianceBundle>,
    course_grid: Vec<usize>,
}

impl GridTable {
    fn new(dataset: &[TimeCourse], model: &FittedModel) -> Result<Self> {
        let mut index: HashMap<GridKey, usize> = HashMap::new();
        let mut bundles = Vec::new();
        let mut course_grid = Vec::with_capacity(dataset.len());
        for c in dataset {
            let key = grid_key(c.times());
            let slot = match index.get(&key) {
                Some(&s) => s,
                None => {
                    bundles.push(model.bundle(c.times())?.into_owned());
                    index.insert(key, bundles.len() - 1);
                    bundles.len() - 1
                }
            };
            course_grid.push(slot);
        }
        Ok(Self {
            bundles,
            course_grid,
        })
    }

    fn bundle_of(&self, course: usize) -> &CovarianceBundle {
        &self.bundles[self.course_grid[course]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Hyperparams;

    fn grid_courses() -> Vec<TimeCourse> {
        let t = vec![0.0, 0.5, 1.0];
        vec![
            TimeCourse::new("a", t.clone(), vec![0.0, 1.0, 0.5]).unwrap(),
            TimeCourse::new("b", t, vec![0.2, 0.8, 0.1]).unwrap(),
        ]
    }

    #[test]
    fn two_course_matrix_is_symmetric() {
        let d = grid_courses();
        let model = FittedModel::from_hyperparams(Hyperparams::new(0.4, 1.0, 0.2).unwrap(), 0.0);
        for m in Measure::ALL {
            let sm = pairwise_matrix(&d, m, Some(&model)).unwrap();
            assert_eq!(sm.len(), 2);
            assert_eq!(sm.get(0, 1), sm.get(1, 0));
            if m != Measure::Gp {
                assert_eq!(sm.get(0, 0), 0.0);
            }
        }
    }

    #[test]
    fn gp_without_model_is_rejected() {
        let d = grid_courses();
        assert!(matches!(
            pairwise_matrix(&d, Measure::Gp, None),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn euclidean_on_async_names_the_pair() {
        let mut d = grid_courses();
        d.push(TimeCourse::new("c", vec![0.0, 1.0], vec![0.0, 1.0]).unwrap());
        match pairwise_matrix(&d, Measure::Euclidean, None) {
            Err(Error::Pair { a, b, source }) => {
                assert_eq!((a.as_str(), b.as_str()), ("a", "c"));
                assert!(matches!(*source, Error::IncompatibleGrids(_)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_course_gives_one_by_one() {
        let d = vec![grid_courses().remove(0)];
        let model = FittedModel::from_hyperparams(Hyperparams::new(0.4, 1.0, 0.2).unwrap(), 0.0);
        let sm = pairwise_matrix(&d, Measure::Gp, Some(&model)).unwrap();
        assert_eq!(sm.len(), 1);
        assert!(sm.get(0, 0).is_finite());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("edr".parse::<Measure>().is_err());
    }
}
