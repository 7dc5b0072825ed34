use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{EntryDistribution, FilterKind, FilterSpec, ModelSpec};
use crate::{Error, Result};

/// Default Kolmogorov-distance threshold for the LSD experiment.
pub const DEFAULT_KS_THRESHOLD: f64 = 0.05;
/// Default band for `|mean λ_max - edge|` in the edge experiment.
pub const DEFAULT_EDGE_TOLERANCE: f64 = 0.10;
/// Allowed relative spread of `p/n` across a multi-size sweep.
pub const ASPECT_RATIO_SPREAD: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lsd,
    Gap,
    Edge,
    Qf,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lsd => "lsd",
            ExperimentKind::Gap => "gap",
            ExperimentKind::Edge => "edge",
            ExperimentKind::Qf => "qf",
        }
    }
}

/// Weight matrix `A` of the quadratic form `x* B* A B x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadraticWeight {
    #[default]
    Identity,
    /// `A = Σ_p = B B*`.
    Sigma,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// One Monte Carlo campaign. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub filter: FilterKind,
    pub entry: EntryDistribution,
    pub seed: u64,
    pub trials: usize,
    /// `(p, n)` pairs.
    pub sizes: Vec<(usize, usize)>,
    /// Declared limiting ratio; defaults to `p/n` of the first size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
    /// Gap experiment: test this interval instead of the computed gaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_tolerance: Option<f64>,
    #[serde(default)]
    pub quadratic_weight: QuadraticWeight,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn declared_ratio(&self) -> f64 {
        self.aspect_ratio
            .unwrap_or_else(|| self.sizes.first().map_or(1.0, |&(p, n)| p as f64 / n as f64))
    }

    pub fn ks_threshold(&self) -> f64 {
        self.ks_threshold.unwrap_or(DEFAULT_KS_THRESHOLD)
    }

    pub fn edge_tolerance(&self) -> f64 {
        self.edge_tolerance.unwrap_or(DEFAULT_EDGE_TOLERANCE)
    }

    /// Index of the size with the largest `p` (last one on ties).
    pub fn largest_size_index(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.sizes.iter().enumerate() {
            if s.0 >= self.sizes[best].0 {
                best = i;
            }
        }
        best
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn filter_spec(&self, p: usize) -> FilterSpec {
        FilterSpec::new(self.filter.clone(), p)
    }

    pub fn model(&self, size: usize, trial: usize) -> ModelSpec {
        let (p, n) = self.sizes[size];
        ModelSpec {
            filter: self.filter_spec(p),
            n,
            entry: self.entry,
            seed: self.trial_seed(trial),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("sizes must not be empty".into()));
        }
        let c = self.declared_ratio();
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("aspect ratio {c} must be positive")));
        }
        for (i, _) in self.sizes.iter().enumerate() {
            let model = self.model(i, 0);
            model.validate()?;
            let cn = model.aspect_ratio();
            if (cn - c).abs() > ASPECT_RATIO_SPREAD * c {
                return Err(Error::Config(format!(
                    "size ({}, {}) has p/n = {cn}, more than 10% away from {c}",
                    model.p(),
                    model.n
                )));
            }
        }
        if let Some((a, b)) = self.interval {
            if !(a.is_finite() && b.is_finite() && a > 0.0 && a < b) {
                return Err(Error::Config(format!("interval [{a}, {b}] needs 0 < a < b")));
            }
        }
        if let Some(t) = self.ks_threshold {
            if !(t > 0.0) {
                return Err(Error::Config("ks_threshold must be positive".into()));
            }
        }
        if let Some(t) = self.edge_tolerance {
            if !(t > 0.0) {
                return Err(Error::Config("edge_tolerance must be positive".into()));
            }
        }
        match self.experiment {
            ExperimentKind::Edge if !self.filter.is_isotropic() => Err(Error::Config(
                "edge experiment needs an identity or scaled_identity filter".into(),
            )),
            ExperimentKind::Qf if self.sizes.len() < 3 => Err(Error::Config(
                "qf experiment needs at least 3 sizes for the regression".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Records and summary paths, defaulting to `<dir>/<kind>_records.csv`
    /// and `<dir>/<kind>_summary.json`.
    pub fn output_paths(&self, out_dir: Option<&Path>) -> (PathBuf, PathBuf) {
        let dir = out_dir.unwrap_or(Path::new("."));
        let name = self.experiment.name();
        let resolve = |given: &Option<PathBuf>, default: String| match given {
            Some(p) if p.is_absolute() || out_dir.is_none() => p.clone(),
            Some(p) => dir.join(p),
            None => dir.join(default),
        };
        let records = resolve(&self.output.records, format!("{name}_records.csv"));
        let summary = resolve(&self.output.summary, format!("{name}_summary.json"));
        (records, summary)
    }
}
