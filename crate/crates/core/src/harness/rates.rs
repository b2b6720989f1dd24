use serde::{Deserialize, Serialize};

use super::config::{DatasetSpec, ExperimentConfig};
use super::run::materialize;
use crate::error::{Result, SameError};
use crate::estimator::run_same;
use crate::metrics::{evaluate, HausdorffResult};
use crate::rng::derive_seed;

/// Rate-study settings layered on top of a base experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub n_grid: Vec<usize>,
    pub repeats: usize,
    /// `c` in `h_K = c (log n / n)^(1/d)`. By default chosen so that the
    /// first grid point reproduces the base config's final bandwidth.
    #[serde(default)]
    pub bandwidth_constant: Option<f64>,
    /// Hausdorff grid step as a fraction of `h_K`.
    #[serde(default = "default_resolution_factor")]
    pub resolution_factor: f64,
}

fn default_resolution_factor() -> f64 {
    0.1
}

impl RateSpec {
    pub fn new(n_grid: Vec<usize>, repeats: usize) -> Self {
        Self {
            n_grid,
            repeats,
            bandwidth_constant: None,
            resolution_factor: default_resolution_factor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRun {
    pub seed: u64,
    pub hausdorff: HausdorffResult,
    pub max_point_error: f64,
    pub max_projector_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub h_final: f64,
    pub median_hausdorff: f64,
    pub median_max_point_error: f64,
    pub median_max_projector_error: f64,
    pub runs: Vec<RateRun>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub schema: String,
    pub spec: RateSpec,
    pub rows: Vec<RateRow>,
    /// Least-squares slopes of `log(median)` against `log n`; `None` with a
    /// single grid point.
    pub slope_hausdorff: Option<f64>,
    pub slope_point_error: Option<f64>,
    pub slope_projector_error: Option<f64>,
    pub config: serde_json::Value,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ys` against `xs`, `None` for fewer than two
/// distinct abscissae.
pub fn loglog_slope(ns: &[usize], ys: &[f64]) -> Option<f64> {
    if ns.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn rate_h(c: f64, n: usize, d: usize) -> f64 {
    let n = n as f64;
    c * (n.ln() / n).powf(1.0 / d as f64)
}

/// Repeats the base experiment over `spec.n_grid` with `h_K` shrinking like
/// `(log n / n)^(1/d)` and reports per-`n` medians and log-log slopes.
/// Repeat `r` uses seed `derive_seed(base.seed, r)`.
pub fn rate_study(base: &ExperimentConfig, spec: &RateSpec) -> Result<RateTable> {
    base.validate()?;
    if spec.n_grid.is_empty() || spec.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SameError::param("n", "grid must be non-empty and strictly ascending"));
    }
    if spec.repeats < 3 {
        return Err(SameError::param("repeats", "at least 3 repeats are required"));
    }
    if !(spec.resolution_factor > 0.0) {
        return Err(SameError::param("resolution_factor", "must be positive"));
    }
    if !matches!(base.dataset, DatasetSpec::Builtin { .. }) {
        return Err(SameError::Config {
            path: "dataset".into(),
            message: "rate studies need a built-in model".into(),
        });
    }
    let d = base.same.d;
    let c = spec
        .bandwidth_constant
        .unwrap_or_else(|| base.same.final_bandwidth() / rate_h(1.0, spec.n_grid[0], d));
    let mut rows = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let h_final = rate_h(c, n, d);
        let mut runs = Vec::with_capacity(spec.repeats);
        for r in 0..spec.repeats {
            let mut cfg = base.clone();
            cfg.seed = derive_seed(base.seed, r as u64);
            if let DatasetSpec::Builtin { n: size, .. } = &mut cfg.dataset {
                *size = n;
            }
            cfg.same.h0 = h_final * cfg.same.a.powi(cfg.same.iterations as i32);
            let data = materialize(&cfg)?;
            let trace = run_same(&data.y, &cfg.same, None)?;
            let m = evaluate(&trace, &data.y, &data.truth(), Some(spec.resolution_factor * trace.last().h))?;
            runs.push(RateRun {
                seed: cfg.seed,
                hausdorff: m.hausdorff_estimate_vs_truth.expect("built-in data has a model"),
                max_point_error: m.max_point_error.expect("built-in data has clean points"),
                max_projector_error: m.max_projector_error.expect("built-in data has tangents"),
            });
        }
        let col = |f: fn(&RateRun) -> f64| median(&runs.iter().map(f).collect::<Vec<_>>());
        rows.push(RateRow {
            n,
            h_final,
            median_hausdorff: col(|r| r.hausdorff.value),
            median_max_point_error: col(|r| r.max_point_error),
            median_max_projector_error: col(|r| r.max_projector_error),
            runs,
        });
    }
    let slope = |f: fn(&RateRow) -> f64| loglog_slope(&spec.n_grid, &rows.iter().map(f).collect::<Vec<_>>());
    Ok(RateTable {
        schema: "rates_v1".into(),
        spec: spec.clone(),
        slope_hausdorff: slope(|r| r.median_hausdorff),
        slope_point_error: slope(|r| r.median_max_point_error),
        slope_projector_error: slope(|r| r.median_max_projector_error),
        rows,
        config: serde_json::to_value(base)?,
    })
}
