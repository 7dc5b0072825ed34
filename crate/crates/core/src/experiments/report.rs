use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub p: usize,
    pub n: usize,
    pub statistic_name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub p: usize,
    pub n: usize,
    pub count: usize,
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub criterion: String,
    pub metrics: BTreeMap<String, f64>,
}

/// Limit-law predictions the trials are compared against (largest size).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Predicted {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsd_zero_atom: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tested_intervals: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub density_grid: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub statistic: String,
    pub per_size: Vec<SizeSummary>,
    pub verdict: Verdict,
    pub predicted: Predicted,
    /// Thresholds, trial counts and seeds in force for this run.
    pub settings: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.summary.verdict.passed
    }

    /// Values of the records at size `(p, n)`, in trial order.
    pub fn values_at(&self, p: usize, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.p == p && r.n == n)
            .map(|r| r.value)
            .collect()
    }

    pub fn write(&self, records_path: &Path, summary_path: &Path) -> Result<()> {
        for path in [records_path, summary_path] {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut w = csv::Writer::from_path(records_path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        let text = serde_json::to_string_pretty(&self.summary)?;
        std::fs::write(summary_path, text + "\n")?;
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Per-size statistics, sizes in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<SizeSummary> {
    let mut order: Vec<(usize, usize)> = Vec::new();
    for r in records {
        if !order.contains(&(r.p, r.n)) {
            order.push((r.p, r.n));
        }
    }
    order
        .into_iter()
        .map(|(p, n)| {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.p == p && r.n == n)
                .map(|r| r.value)
                .collect();
            let count = v.len();
            let mean = v.iter().sum::<f64>() / count as f64;
            let stdev = if count > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            SizeSummary {
                p,
                n,
                count,
                mean,
                stdev,
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                median: median(&v),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: usize, value: f64) -> TrialRecord {
        TrialRecord {
            experiment: "edge".into(),
            trial: 0,
            seed: 0,
            p,
            n: 2 * p,
            statistic_name: "lambda_max".into(),
            value,
        }
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[rec(10, 1.0), rec(10, 3.0), rec(20, 5.0), rec(10, 2.0)]);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].p, s[0].count), (10, 3));
        assert_eq!(s[0].mean, 2.0);
        assert_eq!(s[0].median, 2.0);
        assert_eq!(s[0].stdev, 1.0);
        assert_eq!((s[0].min, s[0].max), (1.0, 3.0));
        assert_eq!(s[1].stdev, 0.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
