use std::collections::BTreeMap;

use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, QuadraticWeight};
use super::report::{median, summarize, ExperimentReport, Predicted, Summary, TrialRecord, Verdict};
use crate::eig::{count_in_interval, ks_distance_to, EigenSpectrum, LimitCdf};
use crate::model::{filter_spectrum, quadratic_form_deviation, EntryDistribution, FilterKind, LinearOperator, ModelSpec};
use crate::par::{try_map_indexed, Execution};
use crate::stieltjes::{density_scan, AspectRatio, SolverOptions, SpectralMeasure};
use crate::support::{find_support, SupportSet};
use crate::{Error, Result};

const PREDICTED_GRID_POINTS: usize = 64;

/// Spectrum of `S_n` for one trial; tiny negative eigenvalues are clamped.
pub fn simulate_spectrum(model: &ModelSpec) -> Result<EigenSpectrum> {
    Ok(model.sample_covariance(model.seed)?.eigenvalues()?.clamp_nonnegative())
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "config describes a `{}` experiment, not `{}`",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    Ok(())
}

struct SizeContext {
    c: AspectRatio,
    h: SpectralMeasure,
}

fn size_context(cfg: &ExperimentConfig, size: usize) -> Result<SizeContext> {
    let (p, n) = cfg.sizes[size];
    Ok(SizeContext {
        c: AspectRatio::from_dims(p, n)?,
        h: filter_spectrum(&cfg.filter_spec(p))?,
    })
}

fn run_trials<F>(cfg: &ExperimentConfig, size: usize, statistic: &str, exec: Execution, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&EigenSpectrum) -> f64 + Sync + Send,
{
    let (p, n) = cfg.sizes[size];
    try_map_indexed(exec, cfg.trials, |trial| {
        let model = cfg.model(size, trial);
        let spectrum = simulate_spectrum(&model)?;
        Ok(TrialRecord {
            experiment: cfg.experiment.name().to_string(),
            trial,
            seed: model.seed,
            p,
            n,
            statistic_name: statistic.to_string(),
            value: f(&spectrum),
        })
    })
}

fn base_settings(cfg: &ExperimentConfig) -> BTreeMap<String, serde_json::Value> {
    let mut s = BTreeMap::new();
    s.insert("trials".into(), json!(cfg.trials));
    s.insert("base_seed".into(), json!(cfg.seed));
    s.insert("sizes".into(), json!(cfg.sizes));
    s.insert("filter".into(), serde_json::to_value(&cfg.filter).unwrap_or_default());
    s.insert("entry".into(), serde_json::to_value(cfg.entry).unwrap_or_default());
    s
}

fn predicted_from(c: AspectRatio, h: &SpectralMeasure, support: &SupportSet) -> Result<Predicted> {
    let mut grid = Vec::new();
    for &(l, r) in support.intervals() {
        let per = (PREDICTED_GRID_POINTS / support.intervals().len().max(1)).max(8);
        let xs: Vec<f64> = (1..per).map(|j| l + (r - l) * j as f64 / per as f64).collect();
        let ds = density_scan(&xs, c, h, &SolverOptions::default())?;
        grid.extend(xs.into_iter().zip(ds));
    }
    Ok(Predicted {
        aspect_ratio: Some(c.value()),
        support: support.intervals().to_vec(),
        lsd_zero_atom: Some(support.lsd_zero_atom_weight()),
        edge: support.right_edge(),
        tested_intervals: Vec::new(),
        density_grid: grid,
    })
}

fn finish(cfg: &ExperimentConfig, statistic: &str, records: Vec<TrialRecord>, verdict: Verdict, predicted: Predicted, settings: BTreeMap<String, serde_json::Value>) -> ExperimentReport {
    let per_size = summarize(&records);
    ExperimentReport {
        records,
        summary: Summary {
            experiment: cfg.experiment.name().into(),
            statistic: statistic.into(),
            per_size,
            verdict,
            predicted,
            settings,
        },
    }
}

/// Kolmogorov distance of `F^{S_n}` to the limit law built from `(p/n, H_n)`.
pub fn run_lsd_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Lsd)?;
    let mut records = Vec::new();
    let mut medians = Vec::new();
    let mut last = None;
    for size in 0..cfg.sizes.len() {
        let ctx = size_context(cfg, size)?;
        let limit = LimitCdf::build(ctx.c, &ctx.h, &SolverOptions::default())?;
        log::info!("lsd: size {:?}, limit mass {:.6}", cfg.sizes[size], limit.total_mass());
        let mut size_records = run_trials(cfg, size, "ks_distance", exec, |spec| match spec.ecdf() {
            Ok(e) => ks_distance_to(&e, &limit),
            Err(_) => f64::NAN,
        })?;
        medians.push(median(&size_records.iter().map(|r| r.value).collect::<Vec<_>>()));
        records.append(&mut size_records);
        last = Some(ctx);
    }
    let threshold = cfg.ks_threshold();
    let first = medians[0];
    let final_median = medians[cfg.largest_size_index()];
    let decreasing = cfg.sizes.len() == 1 || final_median < first;
    let mut metrics = BTreeMap::new();
    metrics.insert("ks_threshold".into(), threshold);
    metrics.insert("median_ks_smallest".into(), first);
    metrics.insert("median_ks_largest".into(), final_median);
    if cfg.sizes.len() > 1 {
        let (ps, ns) = cfg.sizes[0];
        let (pl, nl) = cfg.sizes[cfg.largest_size_index()];
        let small: Vec<f64> = records.iter().filter(|r| r.p == ps && r.n == ns).map(|r| r.value).collect();
        let large: Vec<f64> = records.iter().filter(|r| r.p == pl && r.n == nl).map(|r| r.value).collect();
        let wins = small.iter().zip(&large).filter(|(s, l)| l < s).count();
        metrics.insert("paired_decreases".into(), wins as f64);
    }
    let ctx = last.expect("at least one size");
    let support = find_support(ctx.c, &ctx.h)?;
    let predicted = predicted_from(ctx.c, &ctx.h, &support)?;
    let verdict = Verdict {
        passed: final_median < threshold && decreasing,
        criterion: format!("median KS at the largest size < {threshold} and below the smallest-size median"),
        metrics,
    };
    let mut settings = base_settings(cfg);
    settings.insert("ks_threshold".into(), json!(threshold));
    Ok(finish(cfg, "ks_distance", records, verdict, predicted, settings))
}

/// Counts sample eigenvalues inside the (margin-shrunk) spectral gaps.
pub fn run_gap_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Gap)?;
    let mut records = Vec::new();
    let mut predicted = Predicted::default();
    let mut margin = None;
    let largest = cfg.largest_size_index();
    for size in 0..cfg.sizes.len() {
        let ctx = size_context(cfg, size)?;
        let support = find_support(ctx.c, &ctx.h)?;
        let intervals: Vec<(f64, f64)> = match cfg.interval {
            Some(iv) => vec![iv],
            None => {
                let gaps = support.gaps();
                if gaps.is_empty() {
                    return Err(Error::NoGap(format!(
                        "support {:?} at size {:?} has a single interval and no override was given",
                        support.intervals(),
                        cfg.sizes[size]
                    )));
                }
                if size == largest {
                    margin = Some(gaps[0].margin);
                }
                gaps.iter().map(|g| (g.a, g.b)).collect()
            }
        };
        log::info!("gap: size {:?}, testing {intervals:?}", cfg.sizes[size]);
        let tested = intervals.clone();
        let mut size_records = run_trials(cfg, size, "gap_count", exec, move |spec| {
            tested.iter().map(|&(a, b)| count_in_interval(spec, a, b)).sum::<usize>() as f64
        })?;
        records.append(&mut size_records);
        if size == largest {
            predicted = predicted_from(ctx.c, &ctx.h, &support)?;
            predicted.tested_intervals = intervals;
        }
    }
    let (pl, nl) = cfg.sizes[largest];
    let counts: Vec<f64> = records.iter().filter(|r| r.p == pl && r.n == nl).map(|r| r.value).collect();
    let total: f64 = counts.iter().sum();
    let mut metrics = BTreeMap::new();
    metrics.insert("total_count_largest".into(), total);
    metrics.insert("trials_with_zero".into(), counts.iter().filter(|&&c| c == 0.0).count() as f64);
    metrics.insert("trials_with_nonzero".into(), counts.iter().filter(|&&c| c > 0.0).count() as f64);
    if let Some(m) = margin {
        metrics.insert("margin".into(), m);
    }
    let verdict = Verdict {
        passed: total == 0.0,
        criterion: "no eigenvalue inside the tested intervals in any trial at the largest size".into(),
        metrics,
    };
    let mut settings = base_settings(cfg);
    if let Some(iv) = cfg.interval {
        settings.insert("interval_override".into(), json!(iv));
    }
    Ok(finish(cfg, "gap_count", records, verdict, predicted, settings))
}

/// Largest eigenvalue against the edge `s² (1 + √c_n)²` of an isotropic model.
pub fn run_edge_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Edge)?;
    let variance = cfg
        .filter
        .isotropic_variance()
        .ok_or_else(|| Error::Config("edge experiment needs an isotropic filter".into()))?;
    let mut records = Vec::new();
    for size in 0..cfg.sizes.len() {
        let mut size_records = run_trials(cfg, size, "lambda_max", exec, |spec| spec.max().unwrap_or(f64::NAN))?;
        records.append(&mut size_records);
    }
    let largest = cfg.largest_size_index();
    let (pl, nl) = cfg.sizes[largest];
    let c = AspectRatio::from_dims(pl, nl)?;
    let target = variance * (1.0 + c.value().sqrt()).powi(2);
    let values: Vec<f64> = records.iter().filter(|r| r.p == pl && r.n == nl).map(|r| r.value).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let max_dev = values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    let tol = cfg.edge_tolerance();
    let mut metrics = BTreeMap::new();
    metrics.insert("target".into(), target);
    metrics.insert("mean".into(), mean);
    metrics.insert("mean_deviation".into(), (mean - target).abs());
    metrics.insert("max_deviation".into(), max_dev);
    metrics.insert("tolerance".into(), tol);
    let verdict = Verdict {
        passed: (mean - target).abs() < tol && max_dev < 3.0 * tol,
        criterion: format!("|mean λ_max - edge| < {tol} and every trial within {}", 3.0 * tol),
        metrics,
    };
    let h = SpectralMeasure::point_mass(variance)?;
    let support = find_support(c, &h)?;
    let predicted = predicted_from(c, &h, &support)?;
    let mut settings = base_settings(cfg);
    settings.insert("edge_tolerance".into(), json!(tol));
    Ok(finish(cfg, "lambda_max", records, verdict, predicted, settings))
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Growth of `E|x* B* A B x - tr(A Σ)|²` in `n`.
pub fn run_qf_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    expect_kind(cfg, ExperimentKind::Qf)?;
    let mut records = Vec::new();
    let mut log_n = Vec::new();
    let mut log_ms = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let control = matches!(cfg.filter, FilterKind::Identity)
        && cfg.quadratic_weight == QuadraticWeight::Identity
        && cfg.entry == EntryDistribution::GaussianReal;
    for (size, &(p, n)) in cfg.sizes.iter().enumerate() {
        let b = cfg.filter_spec(p).operator()?;
        let a = match cfg.quadratic_weight {
            QuadraticWeight::Identity => LinearOperator::Identity(p),
            QuadraticWeight::Sigma => LinearOperator::Gram(Box::new(b.clone())),
        };
        let devs = quadratic_form_deviation(&b, &a, &cfg.entry, cfg.trials, cfg.seed, exec)?;
        let mean_sq = devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64;
        log::info!("qf: size {:?}, mean squared deviation {mean_sq:.4}", cfg.sizes[size]);
        if control {
            worst_ratio = worst_ratio.max((mean_sq / (2.0 * p as f64) - 1.0).abs());
        }
        log_n.push((n as f64).ln());
        log_ms.push(mean_sq.ln());
        records.extend(devs.iter().enumerate().map(|(trial, d)| TrialRecord {
            experiment: "qf".into(),
            trial,
            seed: cfg.trial_seed(trial),
            p,
            n,
            statistic_name: "squared_deviation".into(),
            value: d * d,
        }));
    }
    let (slope, intercept) = linear_fit(&log_n, &log_ms);
    let mut metrics = BTreeMap::new();
    metrics.insert("slope".into(), slope);
    metrics.insert("intercept".into(), intercept);
    if control {
        metrics.insert("max_relative_error_vs_2n".into(), worst_ratio);
    }
    let passed = slope <= 1.15 && (!control || slope >= 0.85);
    let verdict = Verdict {
        passed,
        criterion: if control {
            "log-log slope of the mean squared deviation in [0.85, 1.15]".into()
        } else {
            "log-log slope of the mean squared deviation <= 1.15".into()
        },
        metrics,
    };
    let mut settings = base_settings(cfg);
    settings.insert("quadratic_weight".into(), serde_json::to_value(cfg.quadratic_weight).unwrap_or_default());
    settings.insert("gaussian_control".into(), json!(control));
    Ok(finish(cfg, "squared_deviation", records, verdict, Predicted::default(), settings))
}

pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::Lsd => run_lsd_experiment(cfg, exec),
        ExperimentKind::Gap => run_gap_experiment(cfg, exec),
        ExperimentKind::Edge => run_edge_experiment(cfg, exec),
        ExperimentKind::Qf => run_qf_experiment(cfg, exec),
    }
}
