use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DenseSample, ManifoldModel, Projection};
use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::{norm, Projector};
use crate::rng::SameRng;

/// Round sphere of radius `r` centred at the origin of `R^dim`
/// (a circle when `dim == 2`). Its reach is exactly `r`.
#[derive(Clone, Debug)]
pub struct Sphere {
    radius: f64,
    dim: usize,
    name: String,
}

pub fn make_circle(r: f64) -> Result<Sphere> {
    make_sphere(r, 2)
}

pub fn make_sphere(r: f64, dim: usize) -> Result<Sphere> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(SameError::param("radius", "must be positive"));
    }
    if dim < 2 {
        return Err(SameError::param("dim", "ambient dimension must be at least 2"));
    }
    let name = if dim == 2 { "circle".to_string() } else { format!("sphere{}", dim - 1) };
    Ok(Sphere { radius: r, dim, name })
}

impl Sphere {
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ManifoldModel for Sphere {
    fn name(&self) -> &str {
        &self.name
    }

    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn intrinsic_dim(&self) -> usize {
        self.dim - 1
    }

    fn reach(&self) -> f64 {
        self.radius
    }

    fn bounding_radius(&self) -> f64 {
        self.radius
    }

    fn draw(&self, rng: &mut SameRng) -> Vec<f64> {
        if self.dim == 2 {
            let a = rng.random_range(0.0..2.0 * PI);
            return vec![self.radius * a.cos(), self.radius * a.sin()];
        }
        loop {
            let g: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm(&g);
            if n > 1e-8 {
                return g.iter().map(|x| self.radius * x / n).collect();
            }
        }
    }

    fn tangent_projector(&self, x: &[f64]) -> Projector {
        let n = norm(x);
        if self.dim == 2 {
            return Projector::from_orthonormal(2, vec![vec![-x[1] / n, x[0] / n]]);
        }
        let u: Vec<f64> = x.iter().map(|v| v / n).collect();
        let pivot = (0..self.dim)
            .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
            .unwrap_or(0);
        let vectors: Vec<Vec<f64>> = (0..self.dim)
            .filter(|&k| k != pivot)
            .map(|k| {
                let mut e: Vec<f64> = u.iter().map(|ui| -u[k] * ui).collect();
                e[k] += 1.0;
                e
            })
            .collect();
        Projector::from_basis(&vectors).expect("complement of a unit vector has full rank")
    }

    fn project(&self, x: &[f64]) -> Projection {
        let n = norm(x);
        if n == 0.0 {
            let mut p = vec![0.0; self.dim];
            p[0] = self.radius;
            return Projection { point: p, converged: false };
        }
        Projection {
            point: x.iter().map(|v| self.radius * v / n).collect(),
            converged: true,
        }
    }

    fn dense_sample(&self, spacing: f64) -> Result<DenseSample> {
        if !(spacing > 0.0) {
            return Err(SameError::param("spacing", "must be positive"));
        }
        let r = self.radius;
        match self.dim {
            2 => {
                let m = ((2.0 * PI * r / spacing).ceil() as usize).max(3);
                let data = (0..m)
                    .flat_map(|k| {
                        let a = 2.0 * PI * k as f64 / m as f64;
                        [r * a.cos(), r * a.sin()]
                    })
                    .collect();
                Ok(DenseSample {
                    points: PointCloud::from_flat_unchecked(2, data),
                    covering_radius: 2.0 * r * (PI / m as f64 / 2.0).sin(),
                })
            }
            3 => {
                let rings = ((PI * r / spacing).ceil() as usize).max(2);
                let dtheta = PI / rings as f64;
                let mut data = vec![0.0, 0.0, r, 0.0, 0.0, -r];
                let mut worst_ring_step: f64 = 0.0;
                for k in 1..rings {
                    let th = dtheta * k as f64;
                    let circ = 2.0 * PI * r * th.sin();
                    let m = ((circ / spacing).ceil() as usize).max(3);
                    worst_ring_step = worst_ring_step.max(circ / m as f64);
                    for l in 0..m {
                        let ph = 2.0 * PI * l as f64 / m as f64;
                        data.extend([r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
                    }
                }
                let meridian = r * dtheta;
                Ok(DenseSample {
                    points: PointCloud::from_flat_unchecked(3, data),
                    covering_radius: 0.5 * (meridian * meridian + worst_ring_step * worst_ring_step).sqrt(),
                })
            }
            _ => Err(SameError::param(
                "dim",
                "dense sampling is implemented for circles and 2-spheres only",
            )),
        }
    }
}
