//! Empirical check of the reach through the tangent-deviation criterion
//! `d(x', x + T_x M) <= |x - x'|^2 / (2 kappa)` for all `x, x'` on `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ManifoldModel;
use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::{dist_sq, norm, sub};
use crate::rng::{derive_seed, TAG_PAIRS};
use crate::tolerances::REACH_SLACK;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachReport {
    /// `max(d(x', x + T_x) - |x - x'|^2 / (2 kappa))` over the tested pairs.
    pub max_violation: f64,
    pub pass: bool,
    pub pairs: usize,
}

/// Evaluates the criterion on the pairs `(xs_i, xps_i)`.
pub fn reach_criterion_on_pairs(
    model: &dyn ManifoldModel,
    kappa: f64,
    xs: &PointCloud,
    xps: &PointCloud,
) -> Result<ReachReport> {
    if xs.len() != xps.len() {
        return Err(SameError::DimensionMismatch {
            expected: xs.len(),
            found: xps.len(),
        });
    }
    if xs.is_empty() {
        return Err(SameError::EmptySet("no pairs to test".into()));
    }
    let max_violation = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let (x, xp) = (xs.point(i), xps.point(i));
            let p = model.tangent_projector(x);
            let off = norm(&p.apply_complement(&sub(xp, x)));
            off - dist_sq(x, xp) / (2.0 * kappa)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(ReachReport {
        max_violation,
        pass: max_violation <= REACH_SLACK * (1.0 + kappa),
        pairs: xs.len(),
    })
}

/// Evaluates the criterion on `pairs` independent uniform pairs.
pub fn reach_criterion_check(
    model: &dyn ManifoldModel,
    kappa: f64,
    pairs: usize,
    seed: u64,
) -> Result<ReachReport> {
    let s = derive_seed(seed, TAG_PAIRS);
    let xs = model.sample(pairs, s);
    let xps = model.sample(pairs, derive_seed(s, 1));
    reach_criterion_on_pairs(model, kappa, &xs, &xps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_bump_manifold, make_circle, make_s_shape, make_swiss_roll, BUMP_HESSIAN_BOUND};

    #[test]
    fn unit_circle_has_reach_one() {
        let c = make_circle(1.0).unwrap();
        let r = reach_criterion_check(&c, 1.0, 20_000, 3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn overstated_reach_fails_with_closed_form_violation() {
        let c = make_circle(1.0).unwrap();
        let phi: f64 = 2.0;
        let xs = PointCloud::from_rows(&[[1.0, 0.0]]).unwrap();
        let xps = PointCloud::from_rows(&[[phi.cos(), phi.sin()]]).unwrap();
        let r = reach_criterion_on_pairs(&c, 2.0, &xs, &xps).unwrap();
        assert!(!r.pass);
        assert!((r.max_violation - (1.0 - phi.cos()) / 2.0).abs() < 1e-12);
        assert!(!reach_criterion_check(&c, 2.0, 2000, 1).unwrap().pass);
    }

    #[test]
    fn bump_manifold_keeps_reach() {
        let kappa = 1.0;
        let (m, _) = make_bump_manifold(2, 0.05, kappa, BUMP_HESSIAN_BOUND, 1).unwrap();
        assert!(reach_criterion_check(&m, kappa, 20_000, 5).unwrap().pass);
        let near = m.sample_near_bump(3000, 6);
        let near2 = m.sample_near_bump(3000, 7);
        let r = reach_criterion_on_pairs(&m, kappa, &near, &near2).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn extruded_surfaces_nominal_reach_holds_on_samples() {
        for s in [make_s_shape(), make_swiss_roll()] {
            let r = reach_criterion_check(&s, s.reach(), 20_000, 2).unwrap();
            assert!(r.pass, "{} {r:?}", s.name());
        }
        // The arc radius itself is too optimistic for the S-shape.
        assert!(!reach_criterion_check(&make_s_shape(), 1.0, 20_000, 2).unwrap().pass);
    }
}
