//! The structure-adaptive estimator: cylinder-shaped kernel weights,
//! Nadaraya-Watson smoothing and local-covariance projector refinement on a
//! geometrically shrinking bandwidth ladder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::{dist_sq, sub, top_d_projector, Projector, SymMatrix};

/// How the initial projectors are chosen when none are supplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// `Pi_i = I_D`: the first pass is isotropic smoothing.
    #[default]
    Identity,
    /// Ball-local PCA at radius `h0`.
    LocalPca,
}

fn default_min_weight_sum() -> f64 {
    1.0
}

/// Parameters of one run. The kernel is fixed to `K(t) = exp(-t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SameConfig {
    pub h0: f64,
    /// Bandwidth decay factor, `h_{k+1} = h_k / a`.
    pub a: f64,
    /// Index of the last pass; `K + 1` smoothing passes are run.
    #[serde(rename = "K")]
    pub iterations: usize,
    pub tau: f64,
    pub gamma: f64,
    pub d: usize,
    /// Points whose weight sum falls below this keep `X_i = Y_i`.
    #[serde(default = "default_min_weight_sum")]
    pub min_weight_sum: f64,
    #[serde(default)]
    pub init: InitKind,
}

impl SameConfig {
    /// Swiss roll in `R^3`: `h_k^2 = 3.5 * 1.25^-k`, `k = 0..3`.
    pub fn swiss_roll() -> Self {
        Self {
            h0: 3.5f64.sqrt(),
            a: 1.25f64.sqrt(),
            iterations: 3,
            tau: 3.5,
            gamma: 4.0,
            d: 2,
            min_weight_sum: 1.0,
            init: InitKind::Identity,
        }
    }

    /// S-shape in `R^3`: `h_k^2 = 0.6 * 1.25^-k`, `k = 0..7`.
    pub fn s_shape() -> Self {
        Self {
            h0: 0.6f64.sqrt(),
            a: 1.25f64.sqrt(),
            iterations: 7,
            tau: 0.9,
            gamma: 4.0,
            ..Self::swiss_roll()
        }
    }

    /// g241c benchmark: `h_k = 20 * 1.2^-k`, `k = 0..1`, `d = 10`.
    pub fn g241c() -> Self {
        Self {
            h0: 20.0,
            a: 1.2,
            iterations: 1,
            tau: 22.0,
            gamma: 4.0,
            d: 10,
            min_weight_sum: 1.0,
            init: InitKind::Identity,
        }
    }

    /// g241n benchmark: `h_k = 20 * 1.2^-k`, `k = 0..2`, `d = 6`.
    pub fn g241n() -> Self {
        Self {
            iterations: 2,
            tau: 21.0,
            d: 6,
            ..Self::g241c()
        }
    }

    /// Checks the parameter ranges against an ambient dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |name: &str, reason: String| Err(SameError::param(name, reason));
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return bad("h0", format!("must be positive and finite, got {}", self.h0));
        }
        if !(self.a > 1.0 && self.a <= 2.0) {
            return bad("a", format!("must lie in (1, 2], got {}", self.a));
        }
        if !(self.tau > 0.0) {
            return bad("tau", format!("must be positive, got {}", self.tau));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must be positive and finite, got {}", self.gamma));
        }
        if self.d == 0 || self.d >= dim {
            return bad("d", format!("need 1 <= d < D = {dim}, got {}", self.d));
        }
        if !(self.min_weight_sum >= 0.0 && self.min_weight_sum.is_finite()) {
            return bad("min_weight_sum", format!("must be finite and non-negative, got {}", self.min_weight_sum));
        }
        Ok(())
    }

    /// The bandwidth ladder `h_0, ..., h_K` by repeated division.
    pub fn bandwidths(&self) -> Vec<f64> {
        let mut h = self.h0;
        let mut out = Vec::with_capacity(self.iterations + 1);
        for _ in 0..=self.iterations {
            out.push(h);
            h /= self.a;
        }
        out
    }

    pub fn final_bandwidth(&self) -> f64 {
        *self.bandwidths().last().expect("ladder is never empty")
    }
}

/// State after smoothing pass `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub h: f64,
    pub estimates: PointCloud,
    /// The projectors used for the weights of this pass.
    pub projectors: Vec<Projector>,
    pub weight_sums: Vec<f64>,
    pub fallback_flags: Vec<bool>,
    /// Points whose projector was carried over because its neighbourhood in
    /// the previous pass held at most `d` points (always false at `k = 0`).
    pub retained_flags: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFingerprint {
    pub n: usize,
    pub dim: usize,
    /// SHA-256 of the little-endian bytes of the input coordinates.
    pub sha256: String,
}

impl InputFingerprint {
    pub fn of(y: &PointCloud) -> Self {
        let mut hasher = Sha256::new();
        for v in y.as_flat() {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        Self {
            n: y.len(),
            dim: y.dim(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SameTrace {
    /// One state per pass, `k = 0..=K`.
    pub states: Vec<IterationState>,
    pub config: SameConfig,
    pub fingerprint: InputFingerprint,
}

impl SameTrace {
    pub fn last(&self) -> &IterationState {
        self.states.last().expect("a trace holds K + 1 >= 1 states")
    }

    pub fn estimates(&self) -> &PointCloud {
        &self.last().estimates
    }

    pub fn fallback_count(&self) -> usize {
        self.states.iter().map(|s| s.fallback_flags.iter().filter(|&&f| f).count()).sum()
    }
}

fn insufficient(index: usize, count: usize, required: usize) -> SameError {
    SameError::InsufficientNeighbors {
        index,
        count,
        required,
    }
}

/// Initial projectors from ball-local PCA: the top-`d` eigenspace of
/// `sum_j (Y_j - m_i)(Y_j - m_i)^T` over `j != i` with `|Y_j - Y_i| <= h0`,
/// where `m_i` is the mean of those neighbours.
pub fn init_projectors_local_pca(y: &PointCloud, h0: f64, d: usize) -> Result<Vec<Projector>> {
    if !(h0 > 0.0) {
        return Err(SameError::param("h0", "must be positive"));
    }
    if d == 0 || d > y.dim() {
        return Err(SameError::param("d", format!("need 1 <= d <= D = {}", y.dim())));
    }
    let h0_sq = h0 * h0;
    (0..y.len())
        .into_par_iter()
        .map(|i| {
            let yi = y.point(i);
            let nbrs: Vec<usize> = (0..y.len())
                .filter(|&j| j != i && dist_sq(yi, y.point(j)) <= h0_sq)
                .collect();
            if nbrs.len() < d + 1 {
                return Err(insufficient(i, nbrs.len(), d + 1));
            }
            let mut mean = vec![0.0; y.dim()];
            for &j in &nbrs {
                for (m, v) in mean.iter_mut().zip(y.point(j)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= nbrs.len() as f64);
            let mut cov = SymMatrix::zeros(y.dim());
            for &j in &nbrs {
                cov.add_outer(&sub(y.point(j), &mean));
            }
            top_d_projector(&cov, d)
        })
        .collect()
}

/// Row `i` of the weight matrix:
/// `w_ij = exp(-|Pi_i (Y_i - Y_j)|^2 / h^2) * 1(|Y_i - Y_j| <= tau)`.
pub fn adjusted_weights(y: &PointCloud, i: usize, pi: &Projector, h: f64, tau: f64) -> Vec<f64> {
    let yi = y.point(i);
    let inv_h_sq = 1.0 / (h * h);
    let tau_sq = tau * tau;
    y.iter()
        .map(|yj| {
            let diff = sub(yi, yj);
            let r_sq: f64 = diff.iter().map(|v| v * v).sum();
            if r_sq > tau_sq {
                0.0
            } else {
                (-pi.norm_sq_of(&diff) * inv_h_sq).exp()
            }
        })
        .collect()
}

/// `sum_j w_j Y_j / sum_j w_j`, or `(fallback, true)` when the weight sum is
/// below `min_weight_sum`.
pub fn nw_estimate(y: &PointCloud, weights: &[f64], fallback: &[f64], min_weight_sum: f64) -> (Vec<f64>, bool) {
    let total: f64 = weights.iter().sum();
    if !(total >= min_weight_sum) || total == 0.0 {
        return (fallback.to_vec(), true);
    }
    let mut acc = vec![0.0; y.dim()];
    for (yj, &w) in y.iter().zip(weights) {
        if w != 0.0 {
            for (a, v) in acc.iter_mut().zip(yj) {
                *a += w * v;
            }
        }
    }
    acc.iter_mut().for_each(|a| *a /= total);
    (acc, false)
}

/// `sum_j (X_j - X_i)(X_j - X_i)^T` over the closed ball `|X_j - X_i| <= radius`
/// (including `j = i`), scanned in index order, and the number of points in it.
pub fn neighborhood_covariance(xhat: &PointCloud, i: usize, radius: f64) -> (SymMatrix, usize) {
    let xi = xhat.point(i);
    let r_sq = radius * radius;
    let mut cov = SymMatrix::zeros(xhat.dim());
    let mut count = 0;
    for xj in xhat.iter() {
        if dist_sq(xj, xi) <= r_sq {
            cov.add_outer(&sub(xj, xi));
            count += 1;
        }
    }
    (cov, count)
}

/// Refined projectors `top_d(Sigma_i)` at radius `gamma * h`; a point whose
/// ball holds at most `d` points keeps `previous[i]` and is flagged.
pub fn update_projectors(
    xhat: &PointCloud,
    gamma: f64,
    h: f64,
    d: usize,
    previous: &[Projector],
) -> Result<(Vec<Projector>, Vec<bool>)> {
    if !(gamma * h > 0.0) {
        return Err(SameError::param("gamma", "gamma * h must be positive"));
    }
    if previous.len() != xhat.len() {
        return Err(SameError::DimensionMismatch {
            expected: xhat.len(),
            found: previous.len(),
        });
    }
    let out: Vec<(Projector, bool)> = (0..xhat.len())
        .into_par_iter()
        .map(|i| {
            let (cov, count) = neighborhood_covariance(xhat, i, gamma * h);
            if count <= d {
                Ok((previous[i].clone(), true))
            } else {
                Ok((top_d_projector(&cov, d)?, false))
            }
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

fn smoothing_pass(
    y: &PointCloud,
    projectors: &[Projector],
    h: f64,
    cfg: &SameConfig,
) -> (PointCloud, Vec<f64>, Vec<bool>) {
    let rows: Vec<(Vec<f64>, f64, bool)> = (0..y.len())
        .into_par_iter()
        .map(|i| {
            let w = adjusted_weights(y, i, &projectors[i], h, cfg.tau);
            let sum: f64 = w.iter().sum();
            let (x, fb) = nw_estimate(y, &w, y.point(i), cfg.min_weight_sum);
            (x, sum, fb)
        })
        .collect();
    let mut data = Vec::with_capacity(y.as_flat().len());
    let mut sums = Vec::with_capacity(y.len());
    let mut flags = Vec::with_capacity(y.len());
    for (x, s, f) in rows {
        data.extend(x);
        sums.push(s);
        flags.push(f);
    }
    (PointCloud::from_flat_unchecked(y.dim(), data), sums, flags)
}

/// Runs all `K + 1` passes. `init` overrides `cfg.init` when given.
pub fn run_same(y: &PointCloud, cfg: &SameConfig, init: Option<Vec<Projector>>) -> Result<SameTrace> {
    cfg.validate(y.dim())?;
    if y.is_empty() {
        return Err(SameError::EmptySet("input cloud is empty".into()));
    }
    let mut projectors = match init {
        Some(p) => {
            if p.len() != y.len() {
                return Err(SameError::DimensionMismatch {
                    expected: y.len(),
                    found: p.len(),
                });
            }
            if let Some(bad) = p.iter().find(|q| q.dim() != y.dim()) {
                return Err(SameError::DimensionMismatch {
                    expected: y.dim(),
                    found: bad.dim(),
                });
            }
            p
        }
        None => match cfg.init {
            InitKind::Identity => vec![Projector::identity(y.dim()); y.len()],
            InitKind::LocalPca => init_projectors_local_pca(y, cfg.h0, cfg.d)?,
        },
    };
    let ladder = cfg.bandwidths();
    let mut retained = vec![false; y.len()];
    let mut states = Vec::with_capacity(ladder.len());
    for (k, &h) in ladder.iter().enumerate() {
        let (estimates, weight_sums, fallback_flags) = smoothing_pass(y, &projectors, h, cfg);
        let next = if k < cfg.iterations {
            Some(update_projectors(&estimates, cfg.gamma, h, cfg.d, &projectors)?)
        } else {
            None
        };
        states.push(IterationState {
            k,
            h,
            estimates,
            projectors: std::mem::take(&mut projectors),
            weight_sums,
            fallback_flags,
            retained_flags: std::mem::take(&mut retained),
        });
        if let Some((p, r)) = next {
            projectors = p;
            retained = r;
        }
    }
    Ok(SameTrace {
        states,
        config: cfg.clone(),
        fingerprint: InputFingerprint::of(y),
    })
}

/// Whether `x` lies in the bounding box of the positively weighted points
/// (a necessary condition for lying in their convex hull).
pub fn within_weighted_box(y: &PointCloud, weights: &[f64], x: &[f64], slack: f64) -> bool {
    (0..y.dim()).all(|c| {
        let (lo, hi) = y
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (p, _)| (lo.min(p[c]), hi.max(p[c])));
        x[c] >= lo - slack && x[c] <= hi + slack
    })
}
