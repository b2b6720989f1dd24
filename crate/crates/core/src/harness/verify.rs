//! Property suites run with fixed seeds and reported as machine-readable
//! pass/fail records with worst margins.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::estimator::adjusted_weights;
use crate::linalg::{dist, sub, Projector};
use crate::manifold::{
    add_noise, make_bump_manifold, make_circle, make_s_shape, make_sphere, make_swiss_roll,
    reach_criterion_check, reach_criterion_on_pairs, ManifoldModel, NoiseKind, NoiseModel, NoisySample,
    BUMP_HESSIAN_BOUND,
};
use crate::rng::{derive_seed, TAG_SAMPLE};
use crate::tolerances::{LEMMA2_CONSTANT, NOISE_TANGENT_SLACK};

pub const VERIFY_SCHEMA: &str = "verify_v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma1,
    Lemma2,
    LowerBoundReach,
    #[serde(rename = "noise_A3")]
    NoiseA3,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemma1, Suite::Lemma2, Suite::LowerBoundReach, Suite::NoiseA3];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::LowerBoundReach => "lower_bound_reach",
            Suite::NoiseA3 => "noise_A3",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = SameError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SameError::param("suite", format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Smallest slack of the checked inequality; negative on failure.
    pub worst_margin: f64,
    /// The checked statistic itself (a violation, distance or ratio).
    pub observed: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub suite: Suite,
    pub status: Status,
    pub checks: Vec<Check>,
    /// Why the suite was skipped.
    pub reason: Option<String>,
}

impl VerifyReport {
    fn from_checks(suite: Suite, checks: Vec<Check>) -> Self {
        let status = if checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            schema: VERIFY_SCHEMA.into(),
            suite,
            status,
            checks,
            reason: None,
        }
    }

    fn skipped(suite: Suite, reason: String) -> Self {
        Self {
            schema: VERIFY_SCHEMA.into(),
            suite,
            status: Status::Skipped,
            checks: Vec::new(),
            reason: Some(reason),
        }
    }

    pub fn worst_margin(&self) -> Option<f64> {
        self.checks.iter().map(|c| c.worst_margin).reduce(f64::min)
    }
}

/// Noisy circle setup shared by the lemma suites: radius `kappa`, noise of
/// magnitude `magnitude` with tangential bound `b`, exact tangents as `Pi_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaParams {
    pub kappa: f64,
    pub magnitude: f64,
    pub b: f64,
    pub n: usize,
    pub h: f64,
    /// Localisation radius of the weights (lemma2 only).
    pub tau: f64,
    pub seeds: usize,
    pub base_seed: u64,
    /// `c` of the weight-sum bound (lemma2 only).
    pub lemma2_constant: f64,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            magnitude: 0.05,
            b: 0.0,
            n: 1000,
            h: 0.2,
            tau: 0.5,
            seeds: 20,
            base_seed: 0,
            lemma2_constant: LEMMA2_CONSTANT,
        }
    }
}

impl LemmaParams {
    /// Unmet preconditions of the two-sided distance comparison with exact
    /// tangents: `M <= kappa/16` and `M b / h <= kappa/4`.
    pub fn lemma1_unmet(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.magnitude > self.kappa / 16.0 {
            out.push(format!("M = {} exceeds kappa/16 = {}", self.magnitude, self.kappa / 16.0));
        }
        if self.magnitude * self.b / self.h > self.kappa / 4.0 {
            out.push(format!(
                "M b / h = {} exceeds kappa/4 = {}",
                self.magnitude * self.b / self.h,
                self.kappa / 4.0
            ));
        }
        out
    }

    /// The lemma1 conditions plus `h <= tau / 2`.
    pub fn lemma2_unmet(&self) -> Vec<String> {
        let mut out = self.lemma1_unmet();
        if self.h > 0.5 * self.tau {
            out.push(format!("h = {} exceeds tau/2 = {}", self.h, 0.5 * self.tau));
        }
        out
    }

    fn sample(&self, r: usize) -> Result<NoisySample> {
        let circle = make_circle(self.kappa)?;
        let seed = derive_seed(self.base_seed, r as u64);
        let x = circle.sample(self.n, derive_seed(seed, TAG_SAMPLE));
        let p = circle.tangent_projectors(&x);
        add_noise(
            &x,
            &p,
            &NoiseModel::new(NoiseKind::AnisotropicUniform, self.magnitude, self.b),
            self.kappa,
            seed,
        )
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.h > 0.0 && self.tau > 0.0) {
            return Err(SameError::param("params", "kappa, h and tau must be positive"));
        }
        if self.n < 2 || self.seeds == 0 {
            return Err(SameError::param("params", "need n >= 2 and at least one seed"));
        }
        Ok(())
    }
}

/// For every pair with `|Y_i - Y_j| <= kappa/2`, with `e = 2 M b / kappa`:
/// `|Pi_i dY| / 2 - e <= |dX| <= 2 |Pi_i dY| + 2 e`.
/// Margins are relative: `1 - lhs / |dX|` and `1 - |dX| / rhs`.
fn lemma1_margins(s: &NoisySample, p: &LemmaParams) -> (usize, f64, f64) {
    let e = 2.0 * p.magnitude * p.b / p.kappa;
    let r = 0.5 * p.kappa;
    let n = s.y.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (yi, xi, pi) = (s.y.point(i), s.x.point(i), &s.true_projectors[i]);
            let mut acc = (0usize, f64::INFINITY, f64::INFINITY);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let yj = s.y.point(j);
                if dist(yi, yj) > r {
                    continue;
                }
                let t = pi.norm_sq_of(&sub(yi, yj)).sqrt();
                let dx = dist(xi, s.x.point(j));
                let (lo, hi) = (0.5 * t - e, 2.0 * t + 2.0 * e);
                let lower = if dx > 0.0 { 1.0 - lo / dx } else if lo <= 0.0 { 1.0 } else { f64::NEG_INFINITY };
                let upper = if hi > 0.0 { 1.0 - dx / hi } else if dx == 0.0 { 0.0 } else { f64::NEG_INFINITY };
                acc = (acc.0 + 1, acc.1.min(lower), acc.2.min(upper));
            }
            acc
        })
        .reduce(
            || (0, f64::INFINITY, f64::INFINITY),
            |a, b| (a.0 + b.0, a.1.min(b.1), a.2.min(b.2)),
        )
}

pub fn verify_lemma1(p: &LemmaParams) -> Result<VerifyReport> {
    p.check_shape()?;
    let unmet = p.lemma1_unmet();
    if !unmet.is_empty() {
        return Ok(VerifyReport::skipped(Suite::Lemma1, format!("preconditions unmet, skipped: {}", unmet.join("; "))));
    }
    let mut checks = Vec::with_capacity(p.seeds);
    for r in 0..p.seeds {
        let s = p.sample(r)?;
        let (pairs, lower, upper) = lemma1_margins(&s, p);
        let worst = lower.min(upper);
        checks.push(Check {
            name: format!("seed_{r}"),
            pass: worst >= 0.0,
            worst_margin: worst,
            observed: worst,
            detail: format!("{pairs} ordered pairs; lower margin {lower:.6}, upper margin {upper:.6}"),
        });
    }
    Ok(VerifyReport::from_checks(Suite::Lemma1, checks))
}

/// `min_i sum_j w_ij` with exact tangents.
pub fn min_weight_sum(y: &PointCloud, projectors: &[Projector], h: f64, tau: f64) -> f64 {
    (0..y.len())
        .into_par_iter()
        .map(|i| adjusted_weights(y, i, &projectors[i], h, tau).iter().sum::<f64>())
        .reduce(|| f64::INFINITY, f64::min)
}

/// `min_i sum_j w_ij >= c n h^d` with `c = p.lemma2_constant`; the margin is
/// `min sum / (n h^d) - c`.
pub fn verify_lemma2(p: &LemmaParams) -> Result<VerifyReport> {
    p.check_shape()?;
    let unmet = p.lemma2_unmet();
    if !unmet.is_empty() {
        return Ok(VerifyReport::skipped(Suite::Lemma2, format!("preconditions unmet, skipped: {}", unmet.join("; "))));
    }
    let scale = p.n as f64 * p.h;
    let mut checks = Vec::with_capacity(p.seeds);
    for r in 0..p.seeds {
        let s = p.sample(r)?;
        let m = min_weight_sum(&s.y, &s.true_projectors, p.h, p.tau);
        let ratio = m / scale;
        checks.push(Check {
            name: format!("seed_{r}"),
            pass: ratio >= p.lemma2_constant,
            worst_margin: ratio - p.lemma2_constant,
            observed: ratio,
            detail: format!("min weight sum {m:.4}, ratio to n h^d {ratio:.5}"),
        });
    }
    Ok(VerifyReport::from_checks(Suite::Lemma2, checks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerBoundParams {
    pub kappa: f64,
    pub h_grid: Vec<f64>,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            h_grid: vec![0.05, 0.1, 0.2],
            pairs: 10_000,
            seed: 0,
        }
    }
}

/// Federer criterion on bump manifolds, the separation `d_H(M_j, M_0) >=
/// h^2/(kappa L)` and the pointwise bounds of two-point noise with `M = 4
/// h^2/(kappa L)` and `b = h`.
pub fn verify_lower_bound(p: &LowerBoundParams) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let kappa = p.kappa;
    let slack = crate::tolerances::REACH_SLACK * (1.0 + kappa);
    for (hi, &h) in p.h_grid.iter().enumerate() {
        let (base, _) = make_bump_manifold(0, h, kappa, BUMP_HESSIAN_BOUND, 1)?;
        let count = (kappa / (4.0 * h)).floor() as usize;
        let mut js = vec![1, count.div_ceil(2), count];
        js.dedup();
        for j in js {
            let (m, c) = make_bump_manifold(j, h, kappa, BUMP_HESSIAN_BOUND, 1)?;
            let seed = derive_seed(p.seed, (hi * 1000 + j) as u64);
            let tag = format!("h={h},j={j}");

            let uniform = reach_criterion_check(&m, kappa, p.pairs, seed)?;
            let near = m.sample_near_bump(p.pairs, derive_seed(seed, 2));
            let near_other = m.sample_near_bump(p.pairs, derive_seed(seed, 3));
            let local = reach_criterion_on_pairs(&m, kappa, &near, &near_other)?;
            for (name, r) in [("reach_uniform", uniform), ("reach_near_bump", local)] {
                checks.push(Check {
                    name: format!("{name}[{tag}]"),
                    pass: r.pass,
                    worst_margin: slack - r.max_violation,
                    observed: r.max_violation,
                    detail: format!("{} pairs, max violation {:e}", r.pairs, r.max_violation),
                });
            }

            // The apex and the bump neighbourhood bound the directed distance
            // from M_j to M_0 from below.
            let height = c.height();
            let apex = c.apex().expect("j >= 1");
            let sep = near
                .iter()
                .map(|x| base.distance_to(x))
                .fold(base.distance_to(&apex), f64::max);
            checks.push(Check {
                name: format!("separation[{tag}]"),
                pass: sep >= height - 1e-12,
                worst_margin: sep - (height - 1e-12),
                observed: sep,
                detail: format!("d_H lower estimate {sep:e}, required {height:e}"),
            });

            let mut xs = m.sample(p.pairs, derive_seed(seed, 4)).as_flat().to_vec();
            xs.extend_from_slice(near.as_flat());
            let x = PointCloud::new(2, xs)?;
            let proj = m.tangent_projectors(&x);
            let model = NoiseModel::new(NoiseKind::TwoPointVertical, 4.0 * height, h);
            let s = add_noise(&x, &proj, &model, kappa, derive_seed(seed, 5))?;
            let (norm_excess, tangent_excess) = s.bound_margins();
            let tan_margin = NOISE_TANGENT_SLACK - tangent_excess;
            checks.push(Check {
                name: format!("two_point_noise[{tag}]"),
                pass: norm_excess <= 0.0 && tan_margin >= 0.0,
                worst_margin: (0.0 - norm_excess).min(tan_margin),
                observed: norm_excess.max(tangent_excess),
                detail: format!(
                    "{} points, max |eps| - M = {norm_excess:e}, max |Pi eps| - M h/kappa = {tangent_excess:e}",
                    x.len()
                ),
            });
        }
    }
    Ok(VerifyReport::from_checks(Suite::LowerBoundReach, checks))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseParams {
    pub n: usize,
    pub seeds: usize,
    /// `M` and `b` as fractions of each model's reach.
    pub magnitude_fraction: f64,
    pub tangent_fraction: f64,
    pub base_seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            n: 1000,
            seeds: 20,
            magnitude_fraction: 0.4,
            tangent_fraction: 0.5,
            base_seed: 0,
        }
    }
}

/// `|eps_i| <= M` and `|Pi(X_i) eps_i| <= M b / kappa + slack` for every
/// point, model, noise kind and seed.
pub fn verify_noise(p: &NoiseParams) -> Result<VerifyReport> {
    let models: Vec<Box<dyn ManifoldModel>> = vec![
        Box::new(make_circle(1.0)?),
        Box::new(make_sphere(1.0, 3)?),
        Box::new(make_swiss_roll()),
        Box::new(make_s_shape()),
    ];
    let mut checks = Vec::new();
    for m in &models {
        let kappa = m.reach();
        for kind in [NoiseKind::OrthogonalUniform, NoiseKind::AnisotropicUniform] {
            let model = NoiseModel::new(kind, p.magnitude_fraction * kappa, p.tangent_fraction * kappa);
            let (mut worst_norm, mut worst_tan) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for r in 0..p.seeds {
                let seed = derive_seed(p.base_seed, r as u64);
                let x = m.sample(p.n, derive_seed(seed, TAG_SAMPLE));
                let proj = m.tangent_projectors(&x);
                let (a, b) = add_noise(&x, &proj, &model, kappa, seed)?.bound_margins();
                worst_norm = worst_norm.max(a);
                worst_tan = worst_tan.max(b);
            }
            let tan_margin = NOISE_TANGENT_SLACK - worst_tan;
            checks.push(Check {
                name: format!("{}[{}]", m.name(), serde_json::to_value(kind)?.as_str().unwrap_or("?")),
                pass: worst_norm <= 0.0 && tan_margin >= 0.0,
                worst_margin: (0.0 - worst_norm).min(tan_margin),
                observed: worst_norm.max(worst_tan),
                detail: format!(
                    "{} seeds x {} points, max |eps| - M = {worst_norm:e}, max |Pi eps| - M b/kappa = {worst_tan:e}",
                    p.seeds, p.n
                ),
            });
        }
    }
    Ok(VerifyReport::from_checks(Suite::NoiseA3, checks))
}

/// Runs `suite`; `params` (a JSON object, possibly empty) overrides the
/// suite's default parameters.
pub fn verify_suite(suite: Suite, params: Option<&serde_json::Value>) -> Result<VerifyReport> {
    fn parse<T: serde::de::DeserializeOwned + Default>(v: Option<&serde_json::Value>) -> Result<T> {
        match v {
            None => Ok(T::default()),
            Some(v) => serde_path_to_error::deserialize(v.clone()).map_err(|e| SameError::Config {
                path: format!("params.{}", e.path()),
                message: e.into_inner().to_string(),
            }),
        }
    }
    match suite {
        Suite::Lemma1 => verify_lemma1(&parse(params)?),
        Suite::Lemma2 => verify_lemma2(&parse(params)?),
        Suite::LowerBoundReach => verify_lower_bound(&parse(params)?),
        Suite::NoiseA3 => verify_noise(&parse(params)?),
    }
}
