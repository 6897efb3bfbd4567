//! Synthetic benchmark: noisy samples of three smooth profiles on even,
//! uneven or per-course (asynchronous) grids.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::timecourse::TimeCourse;

pub const PROFILE_COUNT: usize = 3;

/// Profile `id` ∈ {1, 2, 3} evaluated at `x` ∈ [0, 1]:
///
/// * `P1(x) = sin(2πx) / 2`
/// * `P2(x) = x − 0.5`
/// * `P3(x) = exp(−(x − 0.5)² / 0.02) / 2 − 0.25`
pub fn profile(id: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!(
            "profile argument {x} outside [0, 1]"
        )));
    }
    match id {
        1 => Ok((2.0 * PI * x).sin() / 2.0),
        2 => Ok(x - 0.5),
        3 => Ok((-(x - 0.5).powi(2) / 0.02).exp() / 2.0 - 0.25),
        other => Err(Error::InvalidParameter(format!(
            "profile id must be 1, 2 or 3, got {other}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampling {
    Even,
    Uneven,
    Async,
}

impl Sampling {
    pub fn name(&self) -> &'static str {
        match self {
            Sampling::Even => "even",
            Sampling::Uneven => "uneven",
            Sampling::Async => "async",
        }
    }
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Sampling::Even),
            "uneven" => Ok(Sampling::Uneven),
            "async" => Ok(Sampling::Async),
            other => Err(Error::InvalidParameter(format!(
                "unknown sampling mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_per_profile: usize,
    pub length: usize,
    pub noise_std: f64,
    pub sampling: Sampling,
    /// Candidate numbers of interior points removed per course in async mode.
    pub dropout_counts: Vec<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_per_profile: 50,
            length: 15,
            noise_std: 0.08,
            sampling: Sampling::Even,
            dropout_counts: vec![6, 7, 8],
            seed: 0,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSynthConfig {
    n_per_profile: Option<usize>,
    length: Option<usize>,
    noise_std: Option<f64>,
    sampling: Option<String>,
    dropout_counts: Option<Vec<usize>>,
    seed: Option<u64>,
}

impl SynthConfig {
    /// Reads a TOML config; missing keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSynthConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("synth config: {}", e.message())))?;
        let d = Self::default();
        let cfg = Self {
            n_per_profile: raw.n_per_profile.unwrap_or(d.n_per_profile),
            length: raw.length.unwrap_or(d.length),
            noise_std: raw.noise_std.unwrap_or(d.noise_std),
            sampling: match raw.sampling {
                Some(s) => s.parse()?,
                None => d.sampling,
            },
            dropout_counts: raw.dropout_counts.unwrap_or(d.dropout_counts),
            seed: raw.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_profile == 0 {
            return Err(Error::InvalidParameter(
                "n_per_profile must be positive".into(),
            ));
        }
        if self.length < 2 {
            return Err(Error::InvalidParameter("length must be at least 2".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be finite and non-negative, got {}",
                self.noise_std
            )));
        }
        if self.sampling == Sampling::Async {
            if self.dropout_counts.is_empty() {
                return Err(Error::InvalidParameter(
                    "async sampling needs dropout counts".into(),
                ));
            }
            // Endpoints are always kept, so at most length − 2 points can go.
            if let Some(d) = self.dropout_counts.iter().find(|&&d| d + 2 > self.length) {
                return Err(Error::InvalidParameter(format!(
                    "cannot drop {d} interior points from a {}-point grid",
                    self.length
                )));
            }
        }
        Ok(())
    }
}

/// Generated courses plus the profile each was drawn from.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub courses: Vec<TimeCourse>,
    pub truth: ClusterAssignment,
}

pub fn even_grid(t: usize) -> Vec<f64> {
    (0..t).map(|k| k as f64 / (t - 1) as f64).collect()
}

/// Irregular grid on [0, 1]: roughly 7/15 of the points packed into
/// [0, 0.3], 5/15 into [0.8, 1] and the rest spread over the middle.
/// For `t = 15` this is 0, 0.05, …, 0.3, then 0.425, 0.55, 0.675, then
/// 0.8, 0.85, …, 1.
pub fn uneven_grid(t: usize) -> Vec<f64> {
    if t < 5 {
        return even_grid(t);
    }
    let lo = ((7 * t) as f64 / 15.0).round().max(2.0) as usize;
    let hi = ((5 * t) as f64 / 15.0).round().max(2.0) as usize;
    let mid = t - lo - hi;
    let mut g = Vec::with_capacity(t);
    g.extend((0..lo).map(|k| 0.3 * k as f64 / (lo - 1) as f64));
    g.extend((1..=mid).map(|k| 0.3 + 0.5 * k as f64 / (mid + 1) as f64));
    g.extend((0..hi).map(|k| 0.8 + 0.2 * k as f64 / (hi - 1) as f64));
    g
}

/// Draws `3 · n_per_profile` courses, grouped by profile, fully determined
/// by the seed.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std)
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
    let base = match config.sampling {
        Sampling::Even | Sampling::Async => even_grid(config.length),
        Sampling::Uneven => uneven_grid(config.length),
    };
    let interior = config.length - 2;

    let total = PROFILE_COUNT * config.n_per_profile;
    let mut courses = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for p in 0..PROFILE_COUNT {
        for _ in 0..config.n_per_profile {
            let times = if config.sampling == Sampling::Async {
                let d = config.dropout_counts[rng.random_range(0..config.dropout_counts.len())];
                let mut drop = vec![false; config.length];
                for k in sample(&mut rng, interior, d) {
                    drop[k + 1] = true;
                }
                base.iter()
                    .zip(&drop)
                    .filter(|(_, &d)| !d)
                    .map(|(t, _)| *t)
                    .collect()
            } else {
                base.clone()
            };
            let values = times
                .iter()
                .map(|&x| profile(p + 1, x).map(|v| v + noise.sample(&mut rng)))
                .collect::<Result<Vec<f64>>>()?;
            let id = format!("s{:04}", courses.len());
            courses.push(TimeCourse::new(id, times, values)?);
            labels.push(p);
        }
    }
    Ok(SynthDataset {
        courses,
        truth: ClusterAssignment::new(labels, PROFILE_COUNT)?,
    })
}
