//! Known test manifolds with exact oracles, the bounded noise models and
//! the bump-manifold lower-bound fixture.

mod bump;
mod noise;
mod reach;
mod sphere;
mod surface;

pub use bump::{make_bump_manifold, psi, psi_d1, psi_d2, BumpConstruction, BumpManifold, BUMP_HESSIAN_BOUND};
pub use noise::{add_noise, NoiseKind, NoiseModel, NoisySample, SampleSidecar};
pub use reach::{reach_criterion_check, reach_criterion_on_pairs, ReachReport};
pub use sphere::{make_circle, make_sphere, Sphere};
pub use surface::{make_s_shape, make_swiss_roll, ExtrudedSurface, SurfaceKind};

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::Result;
use crate::linalg::{dist, Projector};
use crate::rng::{stream_rng, SameRng};

/// Result of projecting a point onto a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    /// False when the iterative refinement stopped on its iteration cap, or
    /// when the projection is not unique (e.g. the centre of a sphere).
    pub converged: bool,
}

/// Deterministic dense sample of a manifold with a bound on how far any
/// manifold point can be from the nearest sample.
#[derive(Clone, Debug)]
pub struct DenseSample {
    pub points: PointCloud,
    pub covering_radius: f64,
}

/// A known manifold: sampler, tangent oracle, projection oracle and reach.
pub trait ManifoldModel: Send + Sync {
    fn name(&self) -> &str;
    fn ambient_dim(&self) -> usize;
    fn intrinsic_dim(&self) -> usize;
    fn reach(&self) -> f64;
    /// Radius of a ball around the origin holding the manifold.
    fn bounding_radius(&self) -> f64;

    /// Draws one point from `rng`.
    fn draw(&self, rng: &mut SameRng) -> Vec<f64>;

    fn tangent_projector(&self, x: &[f64]) -> Projector;

    fn project(&self, x: &[f64]) -> Projection;

    /// Grid-like sample with every manifold point within `covering_radius`
    /// of some sample; `spacing` is the target grid step.
    fn dense_sample(&self, spacing: f64) -> Result<DenseSample>;

    /// `n` points; point `i` is drawn from stream `i` of `seed`, so the
    /// cloud does not depend on how the index range is split among threads.
    fn sample(&self, n: usize, seed: u64) -> PointCloud {
        let data: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| self.draw(&mut stream_rng(seed, i as u64)))
            .collect();
        PointCloud::from_flat_unchecked(self.ambient_dim(), data)
    }

    fn distance_to(&self, x: &[f64]) -> f64 {
        dist(x, &self.project(x).point)
    }

    fn tangent_projectors(&self, cloud: &PointCloud) -> Vec<Projector> {
        (0..cloud.len())
            .into_par_iter()
            .map(|i| self.tangent_projector(cloud.point(i)))
            .collect()
    }
}

/// Minimises a unimodal `f` on `[lo, hi]` by golden-section search.
pub(crate) fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Closest parameter of a planar curve `c(t)`, `t` in `[lo, hi]`, to `p`.
///
/// Coarse scan to find the basin, golden-section inside it, then Newton on
/// `(c(t) - p) . c'(t) = 0`. Returns `(t, converged)`.
pub(crate) fn closest_curve_param(
    p: [f64; 2],
    lo: f64,
    hi: f64,
    scan: usize,
    c: impl Fn(f64) -> [f64; 2],
    d1: impl Fn(f64) -> [f64; 2],
    d2: impl Fn(f64) -> [f64; 2],
) -> (f64, bool) {
    let sq = |t: f64| {
        let q = c(t);
        (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
    };
    let step = (hi - lo) / scan as f64;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=scan {
        let v = sq(lo + step * k as f64);
        if v < best.1 {
            best = (k, v);
        }
    }
    let k = best.0;
    let a = lo + step * k.saturating_sub(1) as f64;
    let b = (lo + step * (k + 1) as f64).min(hi);
    let mut t = golden_section(a, b, sq);
    let mut converged = false;
    for _ in 0..50 {
        let q = c(t);
        let r = [q[0] - p[0], q[1] - p[1]];
        let v1 = d1(t);
        let v2 = d2(t);
        let g = r[0] * v1[0] + r[1] * v1[1];
        let h = v1[0] * v1[0] + v1[1] * v1[1] + r[0] * v2[0] + r[1] * v2[1];
        if !(h > 0.0) {
            break;
        }
        let next = (t - g / h).clamp(a, b);
        let moved = (next - t).abs();
        // Newton may only improve on the golden-section answer.
        if sq(next) > sq(t) {
            converged = moved <= 1e-9;
            break;
        }
        t = next;
        if moved <= crate::tolerances::PROJECTION_STEP * (1.0 + t.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        // A bracket-end optimum is a genuine (constrained) minimiser.
        let at_end = (t - lo).abs() < 1e-9 || (t - hi).abs() < 1e-9;
        let q = c(t);
        let v1 = d1(t);
        let g = (q[0] - p[0]) * v1[0] + (q[1] - p[1]) * v1[1];
        converged = at_end || g.abs() <= 1e-9 * (1.0 + sq(t).sqrt());
    }
    (t, converged)
}
