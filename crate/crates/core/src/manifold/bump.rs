//! Lower-bound fixture: a closed curve with reach `kappa` (the boundary of a
//! stadium) carrying one small smooth bump on its upper flat side.
//!
//! The base curve `Z` is the boundary of the union of radius-`2 kappa` discs
//! centred on the segment `{(u, -2 kappa) : |u| <= 2 kappa}`: two horizontal
//! sides at heights `0` and `-4 kappa` joined by half-circles. Bump `j`
//! replaces the upper side near `z_j` with the graph of
//! `z -> (h^2 / (kappa L)) psi((z - z_j) / h)`.

use std::f64::consts::PI;

use rand::Rng;

use super::{closest_curve_param, DenseSample, ManifoldModel, Projection};
use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::Projector;
use crate::rng::{stream_rng, SameRng};

/// Upper bound on `sup |psi''|`, attained near `|u| = 0.895132`.
///
/// Obtained once from a dense second-difference scan of `psi` (step 1e-6)
/// and rounded up in the sixth decimal; the unit tests re-derive it.
pub const BUMP_HESSIAN_BOUND: f64 = 21.065_883;

/// Smooth bump `exp(1 - 1/(1 - u^2))` on `|u| < 1`, zero outside.
/// `psi(0) = 1` is its maximum.
pub fn psi(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

pub fn psi_d1(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        0.0
    } else {
        psi(u) * (-2.0 * u / (q * q))
    }
}

pub fn psi_d2(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q <= 0.0 {
        return 0.0;
    }
    let g1 = -2.0 * u / (q * q);
    let g2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
    psi(u) * (g1 * g1 + g2)
}

/// Parameters of one member of the bump family.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpConstruction {
    pub kappa: f64,
    pub h: f64,
    /// Bound on `sup |psi''|` used to scale the bump.
    pub lipschitz: f64,
    /// 1-based bump index; `0` is the unperturbed base curve.
    pub index: usize,
    /// Bump centres: a packing of `[-kappa/2, kappa/2]` with gaps of at least `4h`.
    pub centers: Vec<f64>,
}

impl BumpConstruction {
    /// `h^2 / (kappa L)`.
    pub fn height(&self) -> f64 {
        self.h * self.h / (self.kappa * self.lipschitz)
    }

    pub fn center(&self) -> Option<f64> {
        (self.index > 0).then(|| self.centers[self.index - 1])
    }

    pub fn apex(&self) -> Option<[f64; 2]> {
        self.center().map(|z| [z, self.height()])
    }

    /// Vertical offset of the upper side at abscissa `z`.
    pub fn profile(&self, z: f64) -> f64 {
        match self.center() {
            Some(c) => self.height() * psi((z - c) / self.h),
            None => 0.0,
        }
    }

    fn slope(&self, z: f64) -> f64 {
        match self.center() {
            Some(c) => self.height() / self.h * psi_d1((z - c) / self.h),
            None => 0.0,
        }
    }

    fn curvature_term(&self, z: f64) -> f64 {
        match self.center() {
            Some(c) => self.height() / (self.h * self.h) * psi_d2((z - c) / self.h),
            None => 0.0,
        }
    }
}

/// Bump manifold `M_j` (or the base curve `M_0`) in `R^2`.
#[derive(Clone, Debug)]
pub struct BumpManifold {
    c: BumpConstruction,
    name: String,
}

/// Builds member `j` of the bump family (`j = 0` gives the base curve).
///
/// Only the curve case `d = 1`, `D = 2` is supported.
pub fn make_bump_manifold(
    j: usize,
    h: f64,
    kappa: f64,
    lipschitz: f64,
    d: usize,
) -> Result<(BumpManifold, BumpConstruction)> {
    if d != 1 {
        return Err(SameError::param("d", "bump manifolds are built for d = 1 only"));
    }
    if !(kappa > 0.0) {
        return Err(SameError::param("kappa", "must be positive"));
    }
    if !(h > 0.0 && h < kappa / 4.0) {
        return Err(SameError::PackingInfeasible(format!(
            "need 0 < h < kappa/4, got h = {h}, kappa = {kappa}"
        )));
    }
    if lipschitz < BUMP_HESSIAN_BOUND {
        return Err(SameError::param(
            "lipschitz",
            format!("must be at least sup|psi''| = {BUMP_HESSIAN_BOUND}"),
        ));
    }
    let count = (kappa / (4.0 * h)).floor() as usize;
    if j > count {
        return Err(SameError::PackingInfeasible(format!(
            "bump index {j} exceeds the packing size {count}"
        )));
    }
    let gap = kappa / count as f64;
    let centers = (0..count)
        .map(|k| -kappa / 2.0 + (k as f64 + 0.5) * gap)
        .collect();
    let c = BumpConstruction {
        kappa,
        h,
        lipschitz,
        index: j,
        centers,
    };
    let name = if j == 0 { "bump_base".to_string() } else { format!("bump_{j}") };
    Ok((BumpManifold { c: c.clone(), name }, c))
}

#[derive(Clone, Copy)]
struct Closest {
    point: [f64; 2],
    tangent: [f64; 2],
    dist_sq: f64,
    converged: bool,
}

impl BumpManifold {
    pub fn construction(&self) -> &BumpConstruction {
        &self.c
    }

    fn perimeter(&self) -> f64 {
        8.0 * self.c.kappa + 4.0 * PI * self.c.kappa
    }

    /// Curve point at arc length `s` of the base curve, with the bump applied.
    fn at_arclength(&self, s: f64) -> [f64; 2] {
        let k = self.c.kappa;
        let top = 4.0 * k;
        let cap = 2.0 * PI * k;
        if s < top {
            let z = -2.0 * k + s;
            [z, self.c.profile(z)]
        } else if s < top + cap {
            let a = (s - top) / (2.0 * k);
            [2.0 * k + 2.0 * k * a.sin(), -2.0 * k + 2.0 * k * a.cos()]
        } else if s < 2.0 * top + cap {
            [2.0 * k - (s - top - cap), -4.0 * k]
        } else {
            let a = (s - 2.0 * top - cap) / (2.0 * k);
            [-2.0 * k - 2.0 * k * a.sin(), -2.0 * k - 2.0 * k * a.cos()]
        }
    }

    /// Points on and around the bump, `z` uniform in `[z_j - 1.5h, z_j + 1.5h]`.
    pub fn sample_near_bump(&self, n: usize, seed: u64) -> PointCloud {
        let c = self.c.center().unwrap_or(0.0);
        let w = 1.5 * self.c.h;
        let data = (0..n)
            .flat_map(|i| {
                let z = stream_rng(seed, i as u64).random_range(c - w..c + w);
                [z, self.c.profile(z)]
            })
            .collect();
        PointCloud::from_flat_unchecked(2, data)
    }

    fn closest(&self, p: [f64; 2]) -> Closest {
        let k = self.c.kappa;
        let mut best = Closest {
            point: [0.0, 0.0],
            tangent: [1.0, 0.0],
            dist_sq: f64::INFINITY,
            converged: true,
        };
        let mut offer = |point: [f64; 2], tangent: [f64; 2], converged: bool| {
            let d = (point[0] - p[0]).powi(2) + (point[1] - p[1]).powi(2);
            if d < best.dist_sq {
                best = Closest {
                    point,
                    tangent,
                    dist_sq: d,
                    converged,
                };
            }
        };

        // Flat parts of the upper side.
        let flat: Vec<(f64, f64)> = match self.c.center() {
            Some(c) => vec![(-2.0 * k, c - self.c.h), (c + self.c.h, 2.0 * k)],
            None => vec![(-2.0 * k, 2.0 * k)],
        };
        for (a, b) in flat {
            offer([p[0].clamp(a, b), 0.0], [1.0, 0.0], true);
        }
        if let Some(c) = self.c.center() {
            let (z, ok) = closest_curve_param(
                p,
                c - self.c.h,
                c + self.c.h,
                512,
                |z| [z, self.c.profile(z)],
                |z| [1.0, self.c.slope(z)],
                |z| [0.0, self.c.curvature_term(z)],
            );
            let s = self.c.slope(z);
            let n = (1.0 + s * s).sqrt();
            offer([z, self.c.profile(z)], [1.0 / n, s / n], ok);
        }
        // Lower side.
        offer([p[0].clamp(-2.0 * k, 2.0 * k), -4.0 * k], [1.0, 0.0], true);
        // Half-circle caps; outside their half-planes the closest cap point is
        // an endpoint, which the straight sides already cover.
        for (cx, side) in [(2.0 * k, 1.0), (-2.0 * k, -1.0)] {
            let (dx, dy) = (p[0] - cx, p[1] + 2.0 * k);
            let r = (dx * dx + dy * dy).sqrt();
            if side * dx > 0.0 && r > 0.0 {
                let (ux, uy) = (dx / r, dy / r);
                offer([cx + 2.0 * k * ux, -2.0 * k + 2.0 * k * uy], [-uy, ux], true);
            }
        }
        best
    }
}

impl ManifoldModel for BumpManifold {
    fn name(&self) -> &str {
        &self.name
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn intrinsic_dim(&self) -> usize {
        1
    }

    fn reach(&self) -> f64 {
        self.c.kappa
    }

    fn bounding_radius(&self) -> f64 {
        // The cap centres sit at distance 2 sqrt(2) kappa from the origin.
        let k = self.c.kappa;
        (2.0 + 2.0 * 2.0_f64.sqrt()) * k + self.c.height()
    }

    fn draw(&self, rng: &mut SameRng) -> Vec<f64> {
        let s = rng.random_range(0.0..self.perimeter());
        self.at_arclength(s).to_vec()
    }

    fn tangent_projector(&self, x: &[f64]) -> Projector {
        let c = self.closest([x[0], x[1]]);
        Projector::from_orthonormal(2, vec![c.tangent.to_vec()])
    }

    fn project(&self, x: &[f64]) -> Projection {
        let c = self.closest([x[0], x[1]]);
        Projection {
            point: c.point.to_vec(),
            converged: c.converged,
        }
    }

    fn dense_sample(&self, spacing: f64) -> Result<DenseSample> {
        if !(spacing > 0.0) {
            return Err(SameError::param("spacing", "must be positive"));
        }
        let k = self.c.kappa;
        let mut data = Vec::new();
        // Upper side on a lattice through the bump centre so the apex is sampled.
        let anchor = self.c.center().unwrap_or(0.0);
        let lo = ((-2.0 * k - anchor) / spacing).ceil() as i64;
        let hi = ((2.0 * k - anchor) / spacing).floor() as i64;
        data.extend([-2.0 * k, 0.0]);
        for m in lo..=hi {
            let z = anchor + m as f64 * spacing;
            data.extend([z, self.c.profile(z)]);
        }
        data.extend([2.0 * k, 0.0]);
        let cap_steps = ((2.0 * PI * k / spacing).ceil() as usize).max(2);
        let side_steps = ((4.0 * k / spacing).ceil() as usize).max(1);
        for m in 1..cap_steps {
            let a = PI * m as f64 / cap_steps as f64;
            data.extend([2.0 * k + 2.0 * k * a.sin(), -2.0 * k + 2.0 * k * a.cos()]);
            data.extend([-2.0 * k - 2.0 * k * a.sin(), -2.0 * k - 2.0 * k * a.cos()]);
        }
        for m in 0..=side_steps {
            data.extend([2.0 * k - 4.0 * k * m as f64 / side_steps as f64, -4.0 * k]);
        }
        let max_slope = self.c.height() / self.c.h * 2.2;
        Ok(DenseSample {
            points: PointCloud::from_flat_unchecked(2, data),
            covering_radius: 0.5 * spacing * (1.0 + max_slope * max_slope).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, norm};

    #[test]
    fn psi_shape() {
        assert_eq!(psi(0.0), 1.0);
        assert_eq!(psi(1.0), 0.0);
        assert_eq!(psi(-1.3), 0.0);
        for k in 1..1000 {
            assert!(psi(k as f64 / 1000.0) < 1.0);
        }
        assert_eq!(psi_d1(0.0), 0.0);
        assert!((psi_d2(0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn hessian_bound_matches_finite_differences() {
        // Analytic sup on a fine grid, then a second-difference check with a
        // step large enough to keep rounding below the truncation error.
        let mut sup: f64 = 0.0;
        let mut fd_sup: f64 = 0.0;
        let n = 2_000_000;
        for k in 0..=n {
            let u = -1.0 + 2.0 * k as f64 / n as f64;
            sup = sup.max(psi_d2(u).abs());
        }
        let step = 1e-4;
        let mut u = -1.0;
        while u <= 1.0 {
            let fd = (psi(u + step) - 2.0 * psi(u) + psi(u - step)) / (step * step);
            fd_sup = fd_sup.max(fd.abs());
            u += 1e-5;
        }
        assert!(sup <= BUMP_HESSIAN_BOUND, "{sup}");
        assert!(BUMP_HESSIAN_BOUND - sup < 1e-5, "{sup}");
        assert!((fd_sup - sup).abs() < 1e-4, "{fd_sup} vs {sup}");
        // Analytic derivatives agree with the difference quotients.
        for u in [-0.9, -0.3, 0.2, 0.895] {
            let fd1 = (psi(u + 1e-6) - psi(u - 1e-6)) / 2e-6;
            assert!((fd1 - psi_d1(u)).abs() < 1e-6);
            let fd2 = (psi_d1(u + 1e-6) - psi_d1(u - 1e-6)) / 2e-6;
            assert!((fd2 - psi_d2(u)).abs() < 1e-5);
        }
    }

    fn fixture() -> (BumpManifold, BumpConstruction) {
        make_bump_manifold(1, 0.2, 1.0, BUMP_HESSIAN_BOUND, 1).unwrap()
    }

    #[test]
    fn apex_has_expected_height() {
        let (m, c) = fixture();
        let z = c.center().unwrap();
        assert_eq!(c.profile(z), 0.2 * 0.2 / BUMP_HESSIAN_BOUND);
        assert_eq!(m.project(&[z, 1.0]).point, vec![z, c.height()]);
        assert_eq!(c.apex().unwrap(), [z, c.height()]);
    }

    #[test]
    fn bump_vanishes_outside_its_support() {
        let (_, c) = fixture();
        let z0 = c.center().unwrap();
        for dz in [0.2, 0.25, -0.2, -0.5, 1.0] {
            assert_eq!(c.profile(z0 + dz), 0.0);
        }
        assert!(c.profile(z0 + 0.19) > 0.0);
    }

    #[test]
    fn packing_constraints() {
        assert!(matches!(
            make_bump_manifold(1, 0.3, 1.0, BUMP_HESSIAN_BOUND, 1),
            Err(SameError::PackingInfeasible(_))
        ));
        assert!(make_bump_manifold(9, 0.1, 1.0, BUMP_HESSIAN_BOUND, 1).is_err());
        assert!(make_bump_manifold(1, 0.1, 1.0, 2.0, 1).is_err());
        assert!(make_bump_manifold(1, 0.1, 1.0, BUMP_HESSIAN_BOUND, 2).is_err());
        let (_, c) = make_bump_manifold(2, 0.05, 1.0, BUMP_HESSIAN_BOUND, 1).unwrap();
        for w in c.centers.windows(2) {
            assert!(w[1] - w[0] >= 2.0 * c.h);
        }
        assert!(c.centers.iter().all(|z| z.abs() + c.h <= 0.5));
    }

    #[test]
    fn samples_are_on_curve_with_valid_tangents() {
        let (m, _) = fixture();
        let mut cloud = m.sample(2000, 3).as_flat().to_vec();
        cloud.extend(m.sample_near_bump(500, 4).as_flat());
        let cloud = PointCloud::new(2, cloud).unwrap();
        for x in cloud.iter() {
            let p = m.project(x);
            assert!(p.converged);
            assert!(dist(&p.point, x) <= crate::tolerances::ON_MANIFOLD, "{x:?} -> {:?}", p.point);
            assert!(norm(x) <= m.bounding_radius());
            assert!(m.tangent_projector(x).check().passes());
        }
    }

    #[test]
    fn normal_matches_closed_form() {
        let (m, c) = fixture();
        let z0 = c.center().unwrap();
        for dz in [-0.15, -0.05, 0.02, 0.11] {
            let z = z0 + dz;
            let x = [z, c.profile(z)];
            let g = psi_d1(dz / c.h);
            let scale = c.h / (c.kappa * c.lipschitz);
            let ch = (1.0 + scale * scale * g * g).sqrt();
            let nu = [-scale * g / ch, 1.0 / ch];
            let p = m.tangent_projector(&x);
            assert!(norm(&p.apply(&nu)) < 1e-12);
        }
    }
}
