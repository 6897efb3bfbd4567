//! Repeated synthetic clustering experiments: generate, fit, score, cluster,
//! and compare measures by NMI against the generating profiles.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Deserialize;

use crate::clustering::{cluster_matrix, ClusterMethod};
use crate::error::{Error, Result};
use crate::evaluation::{median, nmi, wilcoxon_rank_sum};
use crate::gp::{fit_shared_hyperparams, FittedModel, OptimizerConfig};
use crate::io::fmt_f64;
use crate::similarity::{pairwise_matrix, Measure};
use crate::synth::{generate, Sampling, SynthConfig};

/// Fraction of failed repeats above which the run is aborted.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub sampling: Sampling,
    pub noise_levels: Vec<f64>,
    pub measures: Vec<Measure>,
    pub clusterers: Vec<ClusterMethod>,
    pub repeats: usize,
    pub k_neighbors: usize,
    pub k_clusters: usize,
    pub seed: u64,
    pub n_per_profile: usize,
    pub length: usize,
    pub dropout_counts: Vec<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::for_sampling(Sampling::Even)
    }
}

/// File form of the spec; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    sampling: Option<String>,
    noise_levels: Option<Vec<f64>>,
    measures: Option<Vec<String>>,
    clusterers: Option<Vec<String>>,
    repeats: Option<usize>,
    k_neighbors: Option<usize>,
    k_clusters: Option<usize>,
    seed: Option<u64>,
    n_per_profile: Option<usize>,
    length: Option<usize>,
    dropout_counts: Option<Vec<usize>>,
}

impl ExperimentSpec {
    /// Defaults for a sampling mode. Euclidean is left out for asynchronous
    /// data, where it is undefined.
    pub fn for_sampling(sampling: Sampling) -> Self {
        let measures = match sampling {
            Sampling::Async => vec![Measure::Gp, Measure::Dtw, Measure::Bregman],
            _ => vec![
                Measure::Gp,
                Measure::Euclidean,
                Measure::Dtw,
                Measure::Bregman,
            ],
        };
        Self {
            sampling,
            noise_levels: vec![0.08, 0.10, 0.12],
            measures,
            clusterers: ClusterMethod::ALL.to_vec(),
            repeats: 100,
            k_neighbors: 7,
            k_clusters: 3,
            seed: 0,
            n_per_profile: 50,
            length: 15,
            dropout_counts: vec![6, 7, 8],
        }
    }

    /// Switches sampling mode; a measure list still at the old mode's
    /// defaults follows the new mode's defaults.
    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        if self.measures == Self::for_sampling(self.sampling).measures {
            self.measures = Self::for_sampling(sampling).measures;
        }
        self.sampling = sampling;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("experiment spec: {}", e.message())))?;
        let sampling = match &raw.sampling {
            Some(s) => s.parse()?,
            None => Sampling::Even,
        };
        let mut spec = Self::for_sampling(sampling);
        if let Some(v) = raw.noise_levels {
            spec.noise_levels = v;
        }
        if let Some(v) = raw.measures {
            spec.measures = v.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = raw.clusterers {
            spec.clusterers = v.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        spec.repeats = raw.repeats.unwrap_or(spec.repeats);
        spec.k_neighbors = raw.k_neighbors.unwrap_or(spec.k_neighbors);
        spec.k_clusters = raw.k_clusters.unwrap_or(spec.k_clusters);
        spec.seed = raw.seed.unwrap_or(spec.seed);
        spec.n_per_profile = raw.n_per_profile.unwrap_or(spec.n_per_profile);
        spec.length = raw.length.unwrap_or(spec.length);
        if let Some(v) = raw.dropout_counts {
            spec.dropout_counts = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if self.noise_levels.is_empty() || self.measures.is_empty() || self.clusterers.is_empty() {
            return Err(Error::InvalidParameter(
                "noise_levels, measures and clusterers must all be non-empty".into(),
            ));
        }
        if self.k_clusters == 0 || self.k_neighbors == 0 {
            return Err(Error::InvalidParameter(
                "k_clusters and k_neighbors must be positive".into(),
            ));
        }
        if self.sampling == Sampling::Async {
            if let Some(m) = self.measures.iter().find(|m| m.requires_shared_grid()) {
                return Err(Error::IncompatibleGrids(format!(
                    "{m} distance is not defined for asynchronous sampling"
                )));
            }
        }
        for &noise in &self.noise_levels {
            self.synth_config(noise, 0).validate()?;
        }
        Ok(())
    }

    pub fn synth_config(&self, noise_std: f64, repeat: usize) -> SynthConfig {
        SynthConfig {
            n_per_profile: self.n_per_profile,
            length: self.length,
            noise_std,
            sampling: self.sampling,
            dropout_counts: self.dropout_counts.clone(),
            seed: self.repeat_seed(repeat),
        }
    }

    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        self.seed.wrapping_add(repeat as u64)
    }

    fn needs_model(&self) -> bool {
        self.measures.iter().any(Measure::requires_model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub measure: Measure,
    pub clusterer: ClusterMethod,
    pub k: usize,
    pub repeat_index: usize,
    pub nmi: Option<f64>,
    pub seed: u64,
    pub noise: f64,
    pub sampling: Sampling,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub noise: f64,
    pub clusterer: ClusterMethod,
    pub measure: Measure,
    pub median_nmi: f64,
    pub n: usize,
}

/// Two-sided rank-sum comparison of two measures' NMI samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub noise: f64,
    pub clusterer: ClusterMethod,
    pub measure_a: Measure,
    pub measure_b: Measure,
    pub median_a: f64,
    pub median_b: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub comparisons: Vec<Comparison>,
    pub fits_performed: usize,
    pub failed_repeats: usize,
}

impl ExperimentReport {
    pub fn nmi_values(&self, noise: f64, clusterer: ClusterMethod, measure: Measure) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.noise == noise && r.clusterer == clusterer && r.measure == measure)
            .filter_map(|r| r.nmi)
            .collect()
    }

    pub fn median(&self, noise: f64, clusterer: ClusterMethod, measure: Measure) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.noise == noise && s.clusterer == clusterer && s.measure == measure)
            .map(|s| s.median_nmi)
    }

    /// The comparison of `a` against `b` in either stored order.
    pub fn comparison(
        &self,
        noise: f64,
        clusterer: ClusterMethod,
        a: Measure,
        b: Measure,
    ) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| {
            c.noise == noise
                && c.clusterer == clusterer
                && ((c.measure_a == a && c.measure_b == b)
                    || (c.measure_a == b && c.measure_b == a))
        })
    }
}

struct RepeatOutcome {
    rows: Vec<ResultRow>,
    fitted: bool,
}

fn run_repeat(spec: &ExperimentSpec, noise: f64, repeat: usize) -> RepeatOutcome {
    let seed = spec.repeat_seed(repeat);
    let row = |measure, clusterer, res: Result<f64>| ResultRow {
        measure,
        clusterer,
        k: spec.k_clusters,
        repeat_index: repeat,
        nmi: res.as_ref().ok().copied(),
        seed,
        noise,
        sampling: spec.sampling,
        error: res.err().map(|e| e.to_string()),
    };
    let fail_all = |e: &Error| {
        spec.measures
            .iter()
            .flat_map(|&m| spec.clusterers.iter().map(move |&c| (m, c)))
            .map(|(m, c)| row(m, c, Err(Error::Numerical(e.to_string()))))
            .collect()
    };

    let data = match generate(&spec.synth_config(noise, repeat)) {
        Ok(d) => d,
        Err(e) => {
            return RepeatOutcome {
                rows: fail_all(&e),
                fitted: false,
            }
        }
    };
    let model: Option<Result<FittedModel>> = spec.needs_model().then(|| {
        let cfg = OptimizerConfig {
            seed,
            ..Default::default()
        };
        fit_shared_hyperparams(&data.courses, &cfg)
    });

    let mut rows = Vec::with_capacity(spec.measures.len() * spec.clusterers.len());
    for &measure in &spec.measures {
        let matrix = match (&model, measure.requires_model()) {
            (Some(Err(e)), true) => Err(Error::Numerical(format!("GP fit failed: {e}"))),
            (Some(Ok(m)), true) => pairwise_matrix(&data.courses, measure, Some(m)),
            _ => pairwise_matrix(&data.courses, measure, None),
        };
        for &clusterer in &spec.clusterers {
            let res = match &matrix {
                Ok(m) => cluster_matrix(m, clusterer, spec.k_clusters, spec.k_neighbors, seed)
                    .and_then(|c| nmi(&c, &data.truth)),
                Err(e) => Err(Error::Numerical(e.to_string())),
            };
            if let Err(e) = &res {
                log::warn!("noise {noise} repeat {repeat} {measure}/{clusterer}: {e}");
            }
            rows.push(row(measure, clusterer, res));
        }
    }
    log::info!("noise {noise} repeat {repeat} done");
    RepeatOutcome {
        rows,
        fitted: model.is_some(),
    }
}

/// Runs every (noise, repeat) cell in parallel on the current rayon pool and
/// returns rows in (noise, repeat, measure, clusterer) order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let cells: Vec<(f64, usize)> = spec
        .noise_levels
        .iter()
        .flat_map(|&n| (0..spec.repeats).map(move |r| (n, r)))
        .collect();
    let outcomes: Vec<RepeatOutcome> = cells
        .par_iter()
        .map(|&(noise, r)| run_repeat(spec, noise, r))
        .collect();

    let fits_performed = outcomes.iter().filter(|o| o.fitted).count();
    let failed: Vec<&ResultRow> = outcomes
        .iter()
        .filter_map(|o| o.rows.iter().find(|r| r.error.is_some()))
        .collect();
    let failed_repeats = failed.len();
    if failed_repeats as f64 > MAX_FAILURE_FRACTION * cells.len() as f64 {
        let first = failed[0];
        return Err(Error::Numerical(format!(
            "{failed_repeats} of {} repeats failed; first failure (noise {}, repeat {}): {}",
            cells.len(),
            first.noise,
            first.repeat_index,
            first.error.as_deref().unwrap_or("")
        )));
    }
    let rows: Vec<ResultRow> = outcomes.into_iter().flat_map(|o| o.rows).collect();
    let (summary, comparisons) = summarize(spec, &rows)?;
    Ok(ExperimentReport {
        rows,
        summary,
        comparisons,
        fits_performed,
        failed_repeats,
    })
}

fn summarize(
    spec: &ExperimentSpec,
    rows: &[ResultRow],
) -> Result<(Vec<SummaryRow>, Vec<Comparison>)> {
    let mut samples: BTreeMap<(usize, usize, usize), Vec<f64>> = BTreeMap::new();
    let index = |m: Measure| {
        spec.measures
            .iter()
            .position(|&x| x == m)
            .expect("known measure")
    };
    let cindex = |c: ClusterMethod| {
        spec.clusterers
            .iter()
            .position(|&x| x == c)
            .expect("known clusterer")
    };
    let nindex = |n: f64| {
        spec.noise_levels
            .iter()
            .position(|&x| x == n)
            .expect("known noise")
    };
    for r in rows {
        if let Some(v) = r.nmi {
            samples
                .entry((nindex(r.noise), cindex(r.clusterer), index(r.measure)))
                .or_default()
                .push(v);
        }
    }
    let mut summary = Vec::new();
    let mut comparisons = Vec::new();
    for (ni, &noise) in spec.noise_levels.iter().enumerate() {
        for (ci, &clusterer) in spec.clusterers.iter().enumerate() {
            for (mi, &measure) in spec.measures.iter().enumerate() {
                if let Some(v) = samples.get(&(ni, ci, mi)) {
                    summary.push(SummaryRow {
                        noise,
                        clusterer,
                        measure,
                        median_nmi: median(v).expect("non-empty"),
                        n: v.len(),
                    });
                }
            }
            for a in 0..spec.measures.len() {
                for b in a + 1..spec.measures.len() {
                    let (Some(x), Some(y)) = (samples.get(&(ni, ci, a)), samples.get(&(ni, ci, b)))
                    else {
                        continue;
                    };
                    comparisons.push(Comparison {
                        noise,
                        clusterer,
                        measure_a: spec.measures[a],
                        measure_b: spec.measures[b],
                        median_a: median(x).expect("non-empty"),
                        median_b: median(y).expect("non-empty"),
                        p_value: wilcoxon_rank_sum(x, y)?.p_value,
                    });
                }
            }
        }
    }
    Ok((summary, comparisons))
}

pub fn write_results<W: Write>(w: W, rows: &[ResultRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header = [
        "measure",
        "clustering_method",
        "k",
        "repeat_index",
        "nmi",
        "seed",
        "noise",
        "sampling",
        "error",
    ];
    out.write_record(header).map_err(csv_io)?;
    for r in rows {
        out.write_record([
            r.measure.name().to_string(),
            r.clusterer.name().to_string(),
            r.k.to_string(),
            r.repeat_index.to_string(),
            r.nmi.map(fmt_f64).unwrap_or_default(),
            r.seed.to_string(),
            fmt_f64(r.noise),
            r.sampling.name().to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(w: W, summary: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["noise", "clustering_method", "measure", "median_nmi", "n"])
        .map_err(csv_io)?;
    for s in summary {
        out.write_record([
            fmt_f64(s.noise),
            s.clusterer.name().to_string(),
            s.measure.name().to_string(),
            fmt_f64(s.median_nmi),
            s.n.to_string(),
        ])
        .map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_comparisons<W: Write>(w: W, comparisons: &[Comparison]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "noise",
        "clustering_method",
        "measure_a",
        "measure_b",
        "median_a",
        "median_b",
        "p_value",
    ])
    .map_err(csv_io)?;
    for c in comparisons {
        out.write_record([
            fmt_f64(c.noise),
            c.clusterer.name().to_string(),
            c.measure_a.name().to_string(),
            c.measure_b.name().to_string(),
            fmt_f64(c.median_a),
            fmt_f64(c.median_b),
            fmt_f64(c.p_value),
        ])
        .map_err(csv_io)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
