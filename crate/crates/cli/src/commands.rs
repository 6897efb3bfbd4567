use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};

use gpsim_core::clustering::{cluster_matrix, ClusterAssignment};
use gpsim_core::error::{Error, Result};
use gpsim_core::evaluation::{bhi, bhi_zscore, nmi, BioSimilarityMatrix};
use gpsim_core::experiment::{
    run_experiment, write_comparisons, write_results, write_summary, ExperimentSpec,
};
use gpsim_core::gp::{fit_with_report, FittedModel, OptimizerConfig, RestartStatus};
use gpsim_core::io::{self as gio, ModelFile, Preprocessing};
use gpsim_core::similarity::pairwise_matrix;
use gpsim_core::synth::{generate, SynthConfig};
use nalgebra::DMatrix;

use crate::{ClusterArgs, EvaluateArgs, ExperimentArgs, FitArgs, SimilarityArgs, SynthArgs};

pub fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::from_toml(&fs::read_to_string(p)?)?,
        None => SynthConfig::default(),
    };
    cfg.n_per_profile = a.n_per_profile.unwrap_or(cfg.n_per_profile);
    cfg.length = a.length.unwrap_or(cfg.length);
    cfg.noise_std = a.noise.unwrap_or(cfg.noise_std);
    cfg.sampling = a.sampling.unwrap_or(cfg.sampling);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if let Some(d) = a.dropout {
        cfg.dropout_counts = d;
    }
    let data = generate(&cfg)?;
    let layout = gio::write_dataset_file(&a.out, &data.courses)?;
    if let Some(t) = &a.truth {
        let ids: Vec<String> = data.courses.iter().map(|c| c.id().to_string()).collect();
        gio::write_labels_file(t, &ids, &data.truth)?;
    }
    log::info!("wrote {} courses ({layout:?} layout)", data.courses.len());
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let (raw, _) = gio::read_dataset_file(&a.data)?;
    let pre = if a.normalize_time {
        Preprocessing::normalizing(&raw, a.center)
    } else {
        Preprocessing {
            center: a.center,
            ..Default::default()
        }
    };
    let courses = pre.apply(&raw)?;
    let cfg = OptimizerConfig {
        restarts: a.restarts,
        seed: a.seed,
        ..Default::default()
    };
    let (model, report) = fit_with_report(&courses, &cfg)?;
    let best = &report.restarts[report.best_restart];
    let level = match best.status {
        RestartStatus::Converged | RestartStatus::Stalled => log::Level::Info,
        _ => log::Level::Warn,
    };
    log::log!(
        level,
        "best restart ended {:?} with gradient norm {:.3e}",
        best.status,
        best.gradient_norm
    );
    let hp = *model.hyperparams();
    gio::write_model_file(
        &a.out,
        &ModelFile {
            hyperparams: hp,
            objective: model.objective(),
            preprocessing: pre,
        },
    )?;
    println!(
        "lengthscale={} signal_std={} noise_std={} objective={}",
        hp.lengthscale(),
        hp.signal_std(),
        hp.noise_std(),
        model.objective()
    );
    Ok(())
}

pub fn similarity(a: SimilarityArgs) -> Result<()> {
    let (raw, _) = gio::read_dataset_file(&a.data)?;
    let loaded = a.model.as_deref().map(gio::read_model_file).transpose()?;
    let (courses, model) = match &loaded {
        Some(m) => {
            let courses = m.preprocessing.apply(&raw)?;
            let model = FittedModel::new(m.hyperparams, m.objective, &courses)?;
            (courses, Some(model))
        }
        None if a.measure.requires_model() => {
            return Err(Error::InvalidParameter(format!(
                "--measure {} requires --model",
                a.measure
            )))
        }
        None => (raw, None),
    };
    let m = pairwise_matrix(&courses, a.measure, model.as_ref())?;
    gio::write_matrix_file(&a.out, &m)
}

pub fn cluster(a: ClusterArgs) -> Result<()> {
    let m = gio::read_matrix_file(&a.matrix)?;
    let c = cluster_matrix(&m, a.method, a.k, a.knn, a.seed)?;
    gio::write_labels_file(&a.out, m.ids(), &c)
}

/// Reorders `labels` (keyed by `ids`) into the order of `target`.
fn align_labels(
    target: &[String],
    ids: &[String],
    labels: &ClusterAssignment,
    what: &str,
) -> Result<ClusterAssignment> {
    let pos: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let raw = target
        .iter()
        .map(|id| {
            pos.get(id.as_str())
                .map(|&i| labels.labels()[i])
                .ok_or_else(|| Error::InvalidInput(format!("series {id} missing from {what}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if ids.len() != target.len() {
        return Err(Error::InvalidInput(format!(
            "{what} has {} series, expected {}",
            ids.len(),
            target.len()
        )));
    }
    Ok(ClusterAssignment::from_labels(&raw))
}

fn align_bio(target: &[String], s: &BioSimilarityMatrix) -> Result<BioSimilarityMatrix> {
    if s.ids() == target {
        return Ok(s.clone());
    }
    let pos: HashMap<&str, usize> = s
        .ids()
        .iter()
        .enumerate()
        .map(|(i, x)| (x.as_str(), i))
        .collect();
    let idx = target
        .iter()
        .map(|id| {
            pos.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidInput(format!("series {id} missing from similarity matrix"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = idx.len();
    let scores = DMatrix::from_fn(n, n, |i, j| s.scores()[(idx[i], idx[j])]);
    BioSimilarityMatrix::new(target.to_vec(), scores)
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    if a.truth.is_none() && a.bio.is_none() {
        return Err(Error::InvalidParameter("pass --truth and/or --bio".into()));
    }
    let (ids, labels) = gio::read_labels_file(&a.labels)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "metric,value")?;
    if let Some(t) = &a.truth {
        let (tids, truth) = gio::read_labels_file(t)?;
        let truth = align_labels(&ids, &tids, &truth, "truth file")?;
        writeln!(out, "nmi,{}", gio::fmt_f64(nmi(&labels, &truth)?))?;
    }
    if let Some(b) = &a.bio {
        let s = align_bio(&ids, &gio::read_bio_similarity_file(b)?)?;
        writeln!(out, "bhi,{}", gio::fmt_f64(bhi(&labels, &s)?))?;
        writeln!(
            out,
            "bhi_z,{}",
            gio::fmt_f64(bhi_zscore(&labels, &s, a.n_random, a.seed)?)
        )?;
    }
    Ok(())
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => ExperimentSpec::from_toml(&fs::read_to_string(p)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(s) = a.sampling {
        spec = spec.with_sampling(s);
    }
    if let Some(v) = a.noise {
        spec.noise_levels = v;
    }
    if let Some(v) = a.measures {
        spec.measures = v;
    }
    if let Some(v) = a.clusterers {
        spec.clusterers = v;
    }
    spec.repeats = a.repeats.unwrap_or(spec.repeats);
    spec.k_clusters = a.k.unwrap_or(spec.k_clusters);
    spec.k_neighbors = a.knn.unwrap_or(spec.k_neighbors);
    spec.n_per_profile = a.n_per_profile.unwrap_or(spec.n_per_profile);
    spec.seed = a.seed.unwrap_or(spec.seed);
    spec.validate()?;

    let report = run_experiment(&spec)?;
    fs::create_dir_all(&a.out_dir)?;
    write_results(
        fs::File::create(a.out_dir.join("results.csv"))?,
        &report.rows,
    )?;
    write_summary(
        fs::File::create(a.out_dir.join("summary.csv"))?,
        &report.summary,
    )?;
    write_comparisons(
        fs::File::create(a.out_dir.join("comparisons.csv"))?,
        &report.comparisons,
    )?;

    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(
        out,
        "{} rows, {} GP fits, {} failed repeats",
        report.rows.len(),
        report.fits_performed,
        report.failed_repeats
    )?;
    writeln!(
        out,
        "{:>6}  {:<12}  {:<11}  {:>10}",
        "noise", "clusterer", "measure", "median_nmi"
    )?;
    for s in &report.summary {
        writeln!(
            out,
            "{:>6.3}  {:<12}  {:<11}  {:>10.4}",
            s.noise,
            s.clusterer.name(),
            s.measure.name(),
            s.median_nmi
        )?;
    }
    writeln!(
        out,
        "{:>6}  {:<12}  {:<23}  {:>10}",
        "noise", "clusterer", "comparison", "p_value"
    )?;
    for c in &report.comparisons {
        writeln!(
            out,
            "{:>6.3}  {:<12}  {:<23}  {:>10.3e}",
            c.noise,
            c.clusterer.name(),
            format!("{} vs {}", c.measure_a, c.measure_b),
            c.p_value
        )?;
    }
    Ok(())
}
