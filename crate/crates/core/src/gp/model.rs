use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::Arc;

use super::kernel::{assemble_covariance, CovarianceBundle};
use super::Hyperparams;
use crate::error::Result;
use crate::timecourse::{grid_key, GridKey, TimeCourse};

/// Fitted hyperparameters plus one cached covariance factorization per
/// distinct sampling grid of the training data. Immutable once built.
#[derive(Debug, Clone)]
pub struct FittedModel {
    hyperparams: Hyperparams,
    objective: f64,
    bundles: HashMap<GridKey, Arc<CovarianceBundle>>,
}

impl FittedModel {
    /// Wraps hyperparameters and caches covariances for every grid in
    /// `dataset`.
    pub fn new(hyperparams: Hyperparams, objective: f64, dataset: &[TimeCourse]) -> Result<Self> {
        let mut bundles = HashMap::new();
        for tc in dataset {
            let key = grid_key(tc.times());
            if let std::collections::hash_map::Entry::Vacant(e) = bundles.entry(key) {
                e.insert(Arc::new(assemble_covariance(tc.times(), &hyperparams)?));
            }
        }
        Ok(Self {
            hyperparams,
            objective,
            bundles,
        })
    }

    /// Model with the given hyperparameters and no cached grids.
    pub fn from_hyperparams(hyperparams: Hyperparams, objective: f64) -> Self {
        Self {
            hyperparams,
            objective,
            bundles: HashMap::new(),
        }
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    /// Summed log marginal likelihood at the fitted hyperparameters.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn cached_grids(&self) -> usize {
        self.bundles.len()
    }

    /// Covariance for `times`, from the cache when available.
    pub fn bundle(&self, times: &[f64]) -> Result<Cow<'_, CovarianceBundle>> {
        match self.bundles.get(&grid_key(times)) {
            Some(b) => Ok(Cow::Borrowed(b.as_ref())),
            None => Ok(Cow::Owned(assemble_covariance(times, &self.hyperparams)?)),
        }
    }

    pub fn cached_bundle(&self, times: &[f64]) -> Option<Arc<CovarianceBundle>> {
        self.bundles.get(&grid_key(times)).cloned()
    }
}
