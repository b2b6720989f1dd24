//! Evaluation: point and projector errors, the union-of-disks estimate and
//! Hausdorff distances between finite sets, models and estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::estimator::SameTrace;
use crate::linalg::{dist, norm, projector_distance, sub, Projector};
use crate::manifold::{ManifoldModel, NoisySample};

/// Upper limit on the number of points a dense disk sample may hold.
const MAX_DENSE_POINTS: usize = 20_000_000;

/// Flat `d`-disk `{c + P u : |u| <= radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Disk {
    pub center: Vec<f64>,
    pub projector: Projector,
    pub radius: f64,
}

impl Disk {
    /// Exact Euclidean distance from `x` to the disk.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let v = sub(x, &self.center);
        let inplane = self.projector.norm_sq_of(&v).sqrt();
        let normal = norm(&self.projector.apply_complement(&v));
        if inplane <= self.radius {
            normal
        } else {
            let over = inplane - self.radius;
            (normal * normal + over * over).sqrt()
        }
    }
}

/// Union of one tangent disk of radius `h_K` per denoised point.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldEstimate {
    pub disks: Vec<Disk>,
}

/// Disks centred at the final estimates with the final projectors and radius.
pub fn build_estimate(trace: &SameTrace) -> ManifoldEstimate {
    let last = trace.last();
    let disks = last
        .estimates
        .iter()
        .zip(&last.projectors)
        .map(|(c, p)| Disk {
            center: c.to_vec(),
            projector: p.clone(),
            radius: last.h,
        })
        .collect();
    ManifoldEstimate { disks }
}

/// `min` over disks of the exact point-to-disk distance.
pub fn distance_to_estimate(x: &[f64], est: &ManifoldEstimate) -> f64 {
    let mut best = f64::INFINITY;
    for disk in &est.disks {
        // |x - c| - r is a lower bound on the disk distance.
        if dist(x, &disk.center) - disk.radius >= best {
            continue;
        }
        best = best.min(disk.distance(x));
    }
    best
}

impl ManifoldEstimate {
    /// Grid sample of every disk: cell centres of a grid of step at most
    /// `spacing` in disk coordinates, with centres outside the disk pulled
    /// radially onto its rim. Returns the cloud and its covering radius.
    pub fn dense_sample(&self, spacing: f64) -> Result<(PointCloud, f64)> {
        if !(spacing > 0.0) {
            return Err(SameError::param("resolution", "must be positive"));
        }
        let first = self.disks.first().ok_or_else(|| SameError::EmptySet("estimate has no disks".into()))?;
        let dim = first.center.len();
        let mut total = 0usize;
        let mut covering: f64 = 0.0;
        let mut plans = Vec::with_capacity(self.disks.len());
        for disk in &self.disks {
            let d = disk.projector.rank();
            let m = ((2.0 * disk.radius / spacing).ceil() as usize).max(1);
            let step = 2.0 * disk.radius / m as f64;
            let cells = (m as f64).powi(d as i32);
            if cells > MAX_DENSE_POINTS as f64 || total as f64 + cells > MAX_DENSE_POINTS as f64 {
                return Err(SameError::param("resolution", "too fine for this estimate"));
            }
            total += cells as usize;
            covering = covering.max(0.5 * step * (d as f64).sqrt());
            plans.push((m, step));
        }
        let data: Vec<f64> = self
            .disks
            .par_iter()
            .zip(&plans)
            .flat_map_iter(|(disk, &(m, step))| {
                let d = disk.projector.rank();
                let basis: Vec<Vec<f64>> = (0..d).map(|r| disk.projector.basis_vector(r)).collect();
                let slack = 0.5 * step * (d as f64).sqrt();
                let mut out = Vec::new();
                let mut idx = vec![0usize; d];
                loop {
                    let mut u: Vec<f64> = idx.iter().map(|&k| -disk.radius + step * (k as f64 + 0.5)).collect();
                    let r = norm(&u);
                    if r <= disk.radius + slack {
                        if r > disk.radius {
                            u.iter_mut().for_each(|v| *v *= disk.radius / r);
                        }
                        let mut p = disk.center.clone();
                        for (c, b) in u.iter().zip(&basis) {
                            p.iter_mut().zip(b).for_each(|(x, e)| *x += c * e);
                        }
                        out.extend(p);
                    }
                    // Odometer increment over the d grid indices.
                    let mut a = 0;
                    while a < d {
                        idx[a] += 1;
                        if idx[a] < m {
                            break;
                        }
                        idx[a] = 0;
                        a += 1;
                    }
                    if a == d {
                        break;
                    }
                }
                out
            })
            .collect();
        Ok((PointCloud::from_flat_unchecked(dim, data), covering))
    }
}

/// One side of a Hausdorff computation.
#[derive(Clone, Copy)]
pub enum SetSampler<'a> {
    Points(&'a PointCloud),
    Model(&'a dyn ManifoldModel),
    Estimate(&'a ManifoldEstimate),
}

impl SetSampler<'_> {
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SetSampler::Points(c) => c.iter().map(|p| dist(p, x)).fold(f64::INFINITY, f64::min),
            SetSampler::Model(m) => m.distance_to(x),
            SetSampler::Estimate(e) => distance_to_estimate(x, e),
        }
    }

    /// Finite sample with covering radius (0 for a finite set).
    fn densify(&self, resolution: f64) -> Result<(std::borrow::Cow<'_, PointCloud>, f64)> {
        use std::borrow::Cow;
        match self {
            SetSampler::Points(c) => {
                if c.is_empty() {
                    return Err(SameError::EmptySet("point set is empty".into()));
                }
                Ok((Cow::Borrowed(*c), 0.0))
            }
            SetSampler::Model(m) => {
                let s = m.dense_sample(resolution)?;
                Ok((Cow::Owned(s.points), s.covering_radius))
            }
            SetSampler::Estimate(e) => {
                let (c, r) = e.dense_sample(resolution)?;
                Ok((Cow::Owned(c), r))
            }
        }
    }
}

/// Hausdorff distance computed from dense samples. The true value lies in
/// `[value, value + uncertainty]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffResult {
    pub value: f64,
    pub uncertainty: f64,
}

/// `sup_{a in A} d(a, B)` over the given finite sample of `A`.
pub fn directed_hausdorff(a: &PointCloud, b: &SetSampler<'_>) -> f64 {
    (0..a.len())
        .into_par_iter()
        .map(|i| b.distance(a.point(i)))
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Symmetric Hausdorff distance. Each side is sampled at `resolution`;
/// distances to the other side are exact, so the error of each directed
/// term is at most the covering radius of the sampled side.
pub fn hausdorff(a: &SetSampler<'_>, b: &SetSampler<'_>, resolution: f64) -> Result<HausdorffResult> {
    if !(resolution > 0.0) {
        return Err(SameError::param("resolution", "must be positive"));
    }
    let (sa, ra) = a.densify(resolution)?;
    let (sb, rb) = b.densify(resolution)?;
    if sa.dim() != sb.dim() {
        return Err(SameError::DimensionMismatch {
            expected: sa.dim(),
            found: sb.dim(),
        });
    }
    let ab = directed_hausdorff(&sa, b);
    let ba = directed_hausdorff(&sb, a);
    Ok(HausdorffResult {
        value: ab.max(ba),
        uncertainty: ra.max(rb),
    })
}

/// Errors of one iteration. Truth-dependent entries are absent when the
/// corresponding truth (clean points, true tangents, a model) is unknown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationErrors {
    pub k: usize,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_point_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_point_error: Option<f64>,
    /// `max_i |Pi_hat_i - Pi(X_i)|` for the projectors used in this pass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_projector_error: Option<f64>,
    /// RMS and maximum distance of the estimates to the true manifold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_to_manifold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_to_manifold: Option<f64>,
    /// `max_i |X_hat_i - Y_i|`.
    pub max_displacement: f64,
    pub fallback_count: usize,
    pub retained_count: usize,
}

/// What is known about the hidden truth of a run.
#[derive(Clone, Copy, Default)]
pub struct Truth<'a> {
    pub clean: Option<&'a PointCloud>,
    pub projectors: Option<&'a [Projector]>,
    pub model: Option<&'a dyn ManifoldModel>,
}

impl<'a> Truth<'a> {
    pub fn of_sample(sample: &'a NoisySample, model: Option<&'a dyn ManifoldModel>) -> Self {
        Self {
            clean: Some(&sample.x),
            projectors: Some(&sample.true_projectors),
            model,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SameError::DimensionMismatch { expected, found })
    }
}

fn iteration_errors(trace: &SameTrace, y: &PointCloud, truth: &Truth<'_>) -> Result<Vec<IterationErrors>> {
    let n = y.len();
    check_len(n, trace.last().estimates.len())?;
    if let Some(x) = truth.clean {
        check_len(n, x.len())?;
    }
    if let Some(p) = truth.projectors {
        check_len(n, p.len())?;
    }
    trace
        .states
        .iter()
        .map(|s| {
            let (max_point_error, mean_point_error) = match truth.clean {
                Some(x) => {
                    let errs: Vec<f64> = (0..n)
                        .into_par_iter()
                        .map(|i| dist(s.estimates.point(i), x.point(i)))
                        .collect();
                    (
                        Some(errs.iter().copied().fold(0.0, f64::max)),
                        Some(errs.iter().sum::<f64>() / n as f64),
                    )
                }
                None => (None, None),
            };
            let max_projector_error = match truth.projectors {
                Some(p) => {
                    let e: Vec<f64> = (0..n)
                        .into_par_iter()
                        .map(|i| projector_distance(&s.projectors[i], &p[i]))
                        .collect::<Result<_>>()?;
                    Some(e.into_iter().fold(0.0, f64::max))
                }
                None => None,
            };
            let (rms_to_manifold, max_to_manifold) = match truth.model {
                Some(m) => {
                    let d = distances_to_model(&s.estimates, m);
                    (Some(rms(&d)), Some(d.iter().copied().fold(0.0, f64::max)))
                }
                None => (None, None),
            };
            let max_displacement = (0..n)
                .into_par_iter()
                .map(|i| dist(s.estimates.point(i), y.point(i)))
                .reduce(|| 0.0, f64::max);
            Ok(IterationErrors {
                k: s.k,
                h: s.h,
                max_point_error,
                mean_point_error,
                max_projector_error,
                rms_to_manifold,
                max_to_manifold,
                max_displacement,
                fallback_count: s.fallback_flags.iter().filter(|&&f| f).count(),
                retained_count: s.retained_flags.iter().filter(|&&f| f).count(),
            })
        })
        .collect()
}

/// Per-iteration `max_i |X_hat_i - X_i|`, its mean, and the projector error.
pub fn point_errors(trace: &SameTrace, truth: &NoisySample) -> Result<Vec<IterationErrors>> {
    iteration_errors(trace, &truth.y, &Truth::of_sample(truth, None))
}

/// Distances of every point of `cloud` to the model.
pub fn distances_to_model(cloud: &PointCloud, model: &dyn ManifoldModel) -> Vec<f64> {
    (0..cloud.len())
        .into_par_iter()
        .map(|i| model.distance_to(cloud.point(i)))
        .collect()
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

pub const METRICS_SCHEMA: &str = "metrics_v1";

/// Serialised evaluation of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema: String,
    pub n: usize,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_point_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_point_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_projector_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_to_manifold_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_to_manifold_denoised: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff_estimate_vs_truth: Option<HausdorffResult>,
    pub per_iteration: Vec<IterationErrors>,
    /// The fully resolved configuration that produced the run.
    pub config: serde_json::Value,
}

/// Full evaluation of a trace run on `y`. With a model the
/// distance-to-manifold series are filled, and with a resolution as well the
/// Hausdorff distance between the disk estimate and the model.
pub fn evaluate(
    trace: &SameTrace,
    y: &PointCloud,
    truth: &Truth<'_>,
    hausdorff_resolution: Option<f64>,
) -> Result<MetricsReport> {
    let per = iteration_errors(trace, y, truth)?;
    let last = per.last().expect("trace is never empty").clone();
    let mut raw = None;
    let mut haus = None;
    if let Some(m) = truth.model {
        raw = Some(rms(&distances_to_model(y, m)));
        if let Some(res) = hausdorff_resolution {
            let est = build_estimate(trace);
            haus = Some(hausdorff(&SetSampler::Estimate(&est), &SetSampler::Model(m), res)?);
        }
    }
    Ok(MetricsReport {
        schema: METRICS_SCHEMA.to_string(),
        n: y.len(),
        dim: y.dim(),
        max_point_error: last.max_point_error,
        mean_point_error: last.mean_point_error,
        max_projector_error: last.max_projector_error,
        rms_to_manifold_raw: raw,
        rms_to_manifold_denoised: last.rms_to_manifold,
        hausdorff_estimate_vs_truth: haus,
        per_iteration: per,
        config: serde_json::Value::Null,
    })
}
