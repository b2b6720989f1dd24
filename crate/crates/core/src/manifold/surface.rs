//! Surfaces in `R^3` obtained by sweeping a planar curve `(x(t), z(t))`
//! along the `y` axis: the Swiss Roll and the S-shape.

use std::f64::consts::PI;

const SQRT_5: f64 = 2.236_067_977_499_79;

use rand::Rng;

use super::{closest_curve_param, DenseSample, ManifoldModel, Projection};
use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::Projector;
use crate::rng::SameRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceKind {
    /// `(t cos t, y, t sin t)`, `t` in `[1.5 pi, 4.5 pi]`, `y` in `[0, 21]`.
    SwissRoll,
    /// `(sin t, y, sign(t)(cos t - 1))`, `t` in `[-1.5 pi, 1.5 pi]`, `y` in `[0, 2]`.
    SShape,
}

#[derive(Clone, Debug)]
pub struct ExtrudedSurface {
    kind: SurfaceKind,
    t_range: (f64, f64),
    y_range: (f64, f64),
    reach: f64,
}

const SCAN: usize = 4096;

pub fn make_swiss_roll() -> ExtrudedSurface {
    ExtrudedSurface {
        kind: SurfaceKind::SwissRoll,
        t_range: (1.5 * PI, 4.5 * PI),
        y_range: (0.0, 21.0),
        // Consecutive sheets are 2 pi apart radially, but the inner boundary
        // edge at t = 1.5 pi sits slightly closer to the next sheet's normal
        // line; the tangent-deviation ratio bottoms out at 3.11135 there.
        reach: 3.11,
    }
}

pub fn make_s_shape() -> ExtrudedSurface {
    ExtrudedSurface {
        kind: SurfaceKind::SShape,
        t_range: (-1.5 * PI, 1.5 * PI),
        y_range: (0.0, 2.0),
        // Two unit-circle arcs, but each boundary end faces the other arc:
        // the tangent-deviation ratio is minimised at (sqrt 5 - 1) / 2.
        reach: 0.5 * (SQRT_5 - 1.0),
    }
}

impl ExtrudedSurface {
    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn curve(&self, t: f64) -> [f64; 2] {
        match self.kind {
            SurfaceKind::SwissRoll => [t * t.cos(), t * t.sin()],
            SurfaceKind::SShape => {
                let s = if t < 0.0 { -1.0 } else { 1.0 };
                [t.sin(), s * (t.cos() - 1.0)]
            }
        }
    }

    fn curve_d1(&self, t: f64) -> [f64; 2] {
        match self.kind {
            SurfaceKind::SwissRoll => [t.cos() - t * t.sin(), t.sin() + t * t.cos()],
            SurfaceKind::SShape => {
                let s = if t < 0.0 { -1.0 } else { 1.0 };
                [t.cos(), -s * t.sin()]
            }
        }
    }

    fn curve_d2(&self, t: f64) -> [f64; 2] {
        match self.kind {
            SurfaceKind::SwissRoll => {
                [-2.0 * t.sin() - t * t.cos(), 2.0 * t.cos() - t * t.sin()]
            }
            SurfaceKind::SShape => {
                let s = if t < 0.0 { -1.0 } else { 1.0 };
                [-t.sin(), -s * t.cos()]
            }
        }
    }

    /// Surface point at parameters `(t, y)`.
    pub fn point_at(&self, t: f64, y: f64) -> Vec<f64> {
        let [x, z] = self.curve(t);
        vec![x, y, z]
    }

    /// Tangent plane at parameters `(t, y)`: the curve direction and `e_y`.
    pub fn tangent_at(&self, t: f64) -> Projector {
        let [dx, dz] = self.curve_d1(t);
        let n = (dx * dx + dz * dz).sqrt();
        Projector::from_orthonormal(3, vec![vec![dx / n, 0.0, dz / n], vec![0.0, 1.0, 0.0]])
    }

    /// Parameters `(t, y)` of the closest surface point and a convergence flag.
    pub fn closest_params(&self, x: &[f64]) -> (f64, f64, bool) {
        let y = x[1].clamp(self.y_range.0, self.y_range.1);
        let (t, ok) = closest_curve_param(
            [x[0], x[2]],
            self.t_range.0,
            self.t_range.1,
            SCAN,
            |t| self.curve(t),
            |t| self.curve_d1(t),
            |t| self.curve_d2(t),
        );
        (t, y, ok)
    }

    fn max_speed(&self) -> f64 {
        match self.kind {
            SurfaceKind::SwissRoll => (1.0 + self.t_range.1 * self.t_range.1).sqrt(),
            SurfaceKind::SShape => 1.0,
        }
    }
}

impl ManifoldModel for ExtrudedSurface {
    fn name(&self) -> &str {
        match self.kind {
            SurfaceKind::SwissRoll => "swiss_roll",
            SurfaceKind::SShape => "s_shape",
        }
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn reach(&self) -> f64 {
        self.reach
    }

    fn bounding_radius(&self) -> f64 {
        let planar = match self.kind {
            SurfaceKind::SwissRoll => self.t_range.1,
            SurfaceKind::SShape => 2.0,
        };
        let y = self.y_range.0.abs().max(self.y_range.1.abs());
        (planar * planar + y * y).sqrt()
    }

    fn draw(&self, rng: &mut SameRng) -> Vec<f64> {
        let t = rng.random_range(self.t_range.0..self.t_range.1);
        let y = rng.random_range(self.y_range.0..self.y_range.1);
        self.point_at(t, y)
    }

    fn tangent_projector(&self, x: &[f64]) -> Projector {
        let (t, _, _) = self.closest_params(x);
        self.tangent_at(t)
    }

    fn project(&self, x: &[f64]) -> Projection {
        let (t, y, converged) = self.closest_params(x);
        Projection {
            point: self.point_at(t, y),
            converged,
        }
    }

    fn dense_sample(&self, spacing: f64) -> Result<DenseSample> {
        if !(spacing > 0.0) {
            return Err(SameError::param("spacing", "must be positive"));
        }
        let (t0, t1) = self.t_range;
        let (y0, y1) = self.y_range;
        let nt = (((t1 - t0) * self.max_speed() / spacing).ceil() as usize).max(1);
        let ny = (((y1 - y0) / spacing).ceil() as usize).max(1);
        let mut data = Vec::with_capacity((nt + 1) * (ny + 1) * 3);
        for a in 0..=nt {
            let t = t0 + (t1 - t0) * a as f64 / nt as f64;
            for b in 0..=ny {
                let y = y0 + (y1 - y0) * b as f64 / ny as f64;
                data.extend(self.point_at(t, y));
            }
        }
        let dt = (t1 - t0) * self.max_speed() / nt as f64;
        let dy = (y1 - y0) / ny as f64;
        Ok(DenseSample {
            points: PointCloud::from_flat_unchecked(3, data),
            covering_radius: 0.5 * (dt * dt + dy * dy).sqrt(),
        })
    }
}
