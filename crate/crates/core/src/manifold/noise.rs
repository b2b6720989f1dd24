//! Bounded, conditionally centred noise with a cap on its tangential part.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Result, SameError};
use crate::linalg::{norm, Projector};
use crate::rng::{derive_seed, stream_rng, SameRng, TAG_NOISE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Uniform in the ball of radius `M` of the normal space.
    OrthogonalUniform,
    /// Tangential part uniform in the tangent ball of radius `M b / kappa`,
    /// normal part uniform in the normal ball of radius `M`, the sum shrunk
    /// radially onto the ball of radius `M` when it falls outside.
    AnisotropicUniform,
    /// Vertical two-point noise of the lower-bound construction: inside
    /// `B(0, kappa)` the last coordinate of `Y` is `+-M/2`, with
    /// `P(+M/2 | X) = 1/2 + X_last / M`; outside, `Y = X`.
    TwoPointVertical,
}

/// Noise of magnitude `M` whose tangential component is bounded by `M b / kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub magnitude: f64,
    pub tangent_bound: f64,
    pub kind: NoiseKind,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, magnitude: f64, tangent_bound: f64) -> Self {
        Self {
            magnitude,
            tangent_bound,
            kind,
        }
    }

    /// Bound on `|Pi(X) eps|`.
    pub fn tangent_cap(&self, kappa: f64) -> f64 {
        self.magnitude * self.tangent_bound / kappa
    }

    pub fn validate(&self, kappa: f64) -> Result<()> {
        if !(kappa > 0.0) {
            return Err(SameError::InfeasibleNoise(format!("reach must be positive, got {kappa}")));
        }
        if !(self.magnitude >= 0.0 && self.magnitude < kappa) {
            return Err(SameError::InfeasibleNoise(format!(
                "need 0 <= M < kappa, got M = {}, kappa = {kappa}",
                self.magnitude
            )));
        }
        if !(self.tangent_bound >= 0.0 && self.tangent_bound <= kappa) {
            return Err(SameError::InfeasibleNoise(format!(
                "need 0 <= b <= kappa, got b = {}, kappa = {kappa}",
                self.tangent_bound
            )));
        }
        Ok(())
    }
}

/// Observations `Y = X + eps` together with the hidden truth.
#[derive(Clone, Debug)]
pub struct NoisySample {
    pub y: PointCloud,
    pub x: PointCloud,
    /// The drawn `eps_i` (exactly, not recomputed as `Y - X`).
    pub noise: PointCloud,
    pub true_projectors: Vec<Projector>,
    pub model: NoiseModel,
    pub kappa: f64,
    pub seed: u64,
}

/// JSON sidecar stored next to the two CSVs of a persisted sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub seed: u64,
    #[serde(rename = "M")]
    pub magnitude: f64,
    pub b: f64,
    pub kappa: f64,
    pub model: String,
    pub kind: NoiseKind,
}

impl NoisySample {
    /// Worst `(|eps_i| - M, |Pi(X_i) eps_i| - M b / kappa)` over the sample;
    /// both must be non-positive (up to the tangent slack).
    pub fn bound_margins(&self) -> (f64, f64) {
        let cap = self.model.tangent_cap(self.kappa);
        (0..self.noise.len())
            .map(|i| {
                let e = self.noise.point(i);
                (
                    norm(e) - self.model.magnitude,
                    self.true_projectors[i].norm_sq_of(e).sqrt() - cap,
                )
            })
            .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.max(c), b.max(d)))
    }

    /// Writes `<stem>_noisy.csv`, `<stem>_clean.csv` and `<stem>.json` in `dir`.
    pub fn save(&self, dir: &Path, stem: &str, model_name: &str) -> Result<()> {
        self.y
            .write_csv(BufWriter::new(File::create(dir.join(format!("{stem}_noisy.csv")))?))?;
        self.x
            .write_csv(BufWriter::new(File::create(dir.join(format!("{stem}_clean.csv")))?))?;
        let side = SampleSidecar {
            seed: self.seed,
            magnitude: self.model.magnitude,
            b: self.model.tangent_bound,
            kappa: self.kappa,
            model: model_name.to_string(),
            kind: self.model.kind,
        };
        let mut text = serde_json::to_string_pretty(&side)?;
        text.push('\n');
        std::fs::write(dir.join(format!("{stem}.json")), text)?;
        Ok(())
    }

    /// Reads back what [`NoisySample::save`] wrote: `(Y, X, sidecar)`.
    pub fn load(dir: &Path, stem: &str) -> Result<(PointCloud, PointCloud, SampleSidecar)> {
        let y = PointCloud::read_csv(BufReader::new(File::open(dir.join(format!("{stem}_noisy.csv")))?))?;
        let x = PointCloud::read_csv(BufReader::new(File::open(dir.join(format!("{stem}_clean.csv")))?))?;
        let side = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        Ok((y, x, side))
    }
}

fn uniform_in_subspace(
    rng: &mut SameRng,
    dim: usize,
    sub_dim: usize,
    radius: f64,
    onto: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    if sub_dim == 0 || radius == 0.0 {
        return vec![0.0; dim];
    }
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let w = onto(&g);
        let nw = norm(&w);
        if nw > 1e-8 {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / sub_dim as f64);
            return w.iter().map(|v| v * r / nw).collect();
        }
    }
}

fn random_sign(rng: &mut SameRng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn clip_to_ball(e: &mut [f64], radius: f64) {
    let n = norm(e);
    if n > radius {
        let s = radius / n;
        e.iter_mut().for_each(|v| *v *= s);
        while norm(e) > radius {
            e.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
        }
    }
}

fn draw_noise(
    rng: &mut SameRng,
    x: &[f64],
    proj: &Projector,
    noise: &NoiseModel,
    kappa: f64,
) -> Result<Vec<f64>> {
    let dim = x.len();
    let m = noise.magnitude;
    if m == 0.0 {
        return Ok(vec![0.0; dim]);
    }
    let d = proj.rank();
    let mut e = match noise.kind {
        NoiseKind::OrthogonalUniform => {
            let s = random_sign(rng);
            let mut n = uniform_in_subspace(rng, dim, dim - d, m, |g| proj.apply_complement(g));
            n.iter_mut().for_each(|v| *v *= s);
            n
        }
        NoiseKind::AnisotropicUniform => {
            let (st, sn) = (random_sign(rng), random_sign(rng));
            let t = uniform_in_subspace(rng, dim, d, noise.tangent_cap(kappa), |g| proj.apply(g));
            let n = uniform_in_subspace(rng, dim, dim - d, m, |g| proj.apply_complement(g));
            t.iter().zip(&n).map(|(a, b)| st * a + sn * b).collect()
        }
        NoiseKind::TwoPointVertical => {
            let mut e = vec![0.0; dim];
            if norm(x) < kappa {
                let v = x[dim - 1];
                let eta = 0.5 + v / m;
                if !(0.0..=1.0).contains(&eta) {
                    return Err(SameError::InfeasibleNoise(format!(
                        "two-point noise needs |X_last| <= M/2, got {v} with M = {m}"
                    )));
                }
                let up = rng.random::<f64>() < eta;
                e[dim - 1] = if up { 0.5 * m - v } else { -0.5 * m - v };
            }
            e
        }
    };
    clip_to_ball(&mut e, m);
    Ok(e)
}

/// Adds noise of the given model to `x`, using the true tangent projectors
/// `projectors` and reach `kappa`. Point `i` draws from its own stream.
pub fn add_noise(
    x: &PointCloud,
    projectors: &[Projector],
    noise: &NoiseModel,
    kappa: f64,
    seed: u64,
) -> Result<NoisySample> {
    noise.validate(kappa)?;
    if projectors.len() != x.len() {
        return Err(SameError::DimensionMismatch {
            expected: x.len(),
            found: projectors.len(),
        });
    }
    let noise_seed = derive_seed(seed, TAG_NOISE);
    let eps: Vec<Vec<f64>> = (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(noise_seed, i as u64);
            draw_noise(&mut rng, x.point(i), &projectors[i], noise, kappa)
        })
        .collect::<Result<_>>()?;
    let mut ydata = Vec::with_capacity(x.as_flat().len());
    let mut edata = Vec::with_capacity(x.as_flat().len());
    for (p, e) in x.iter().zip(&eps) {
        ydata.extend(p.iter().zip(e).map(|(a, b)| a + b));
        edata.extend_from_slice(e);
    }
    Ok(NoisySample {
        y: PointCloud::new(x.dim(), ydata)?,
        x: x.clone(),
        noise: PointCloud::from_flat_unchecked(x.dim(), edata),
        true_projectors: projectors.to_vec(),
        model: *noise,
        kappa,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{make_circle, make_swiss_roll, ManifoldModel};

    fn circle_sample(kind: NoiseKind, m: f64, b: f64, seed: u64) -> NoisySample {
        let c = make_circle(1.0).unwrap();
        let x = c.sample(500, seed);
        let p = c.tangent_projectors(&x);
        add_noise(&x, &p, &NoiseModel::new(kind, m, b), 1.0, seed).unwrap()
    }

    #[test]
    fn orthogonal_noise_has_no_tangent_part() {
        let s = circle_sample(NoiseKind::OrthogonalUniform, 0.3, 0.0, 1);
        for i in 0..s.x.len() {
            assert!(s.true_projectors[i].norm_sq_of(s.noise.point(i)).sqrt() <= 1e-12);
        }
        let (a, b) = s.bound_margins();
        assert!(a <= 0.0 && b <= 1e-12);
    }

    #[test]
    fn zero_magnitude_is_exact_identity() {
        for kind in [NoiseKind::OrthogonalUniform, NoiseKind::AnisotropicUniform] {
            let s = circle_sample(kind, 0.0, 0.5, 2);
            assert_eq!(s.y, s.x);
        }
    }

    #[test]
    fn anisotropic_respects_both_bounds() {
        let roll = make_swiss_roll();
        let x = roll.sample(400, 3);
        let p: Vec<_> = roll.tangent_projectors(&x);
        for b in [0.0, 0.5, roll.reach()] {
            let s = add_noise(&x, &p, &NoiseModel::new(NoiseKind::AnisotropicUniform, 1.25, b), roll.reach(), 3).unwrap();
            let (a, t) = s.bound_margins();
            assert!(a <= 0.0, "{a}");
            assert!(t <= crate::tolerances::NOISE_TANGENT_SLACK, "{t}");
        }
    }

    #[test]
    fn infeasible_parameters_rejected() {
        let c = make_circle(1.0).unwrap();
        let x = c.sample(10, 0);
        let p = c.tangent_projectors(&x);
        for (m, b) in [(1.0, 0.0), (0.2, 1.5), (-0.1, 0.0)] {
            let r = add_noise(&x, &p, &NoiseModel::new(NoiseKind::AnisotropicUniform, m, b), 1.0, 0);
            assert!(matches!(r, Err(SameError::InfeasibleNoise(_))));
        }
    }

    #[test]
    fn conditional_mean_vanishes() {
        let n = 100_000;
        let x = PointCloud::new(2, [1.0, 0.0].repeat(n)).unwrap();
        let c = make_circle(1.0).unwrap();
        let p = vec![c.tangent_projector(&[1.0, 0.0]); n];
        let m = 0.4;
        for kind in [NoiseKind::OrthogonalUniform, NoiseKind::AnisotropicUniform] {
            let s = add_noise(&x, &p, &NoiseModel::new(kind, m, 0.5), 1.0, 17).unwrap();
            let mut mean = [0.0; 2];
            for e in s.noise.iter() {
                mean[0] += e[0] / n as f64;
                mean[1] += e[1] / n as f64;
            }
            assert!(norm(&mean) <= 4.0 * m / (n as f64).sqrt(), "{kind:?} {mean:?}");
        }
    }

    #[test]
    fn two_point_mean_on_flat_part() {
        let n = 100_000;
        let m = 0.1;
        let x = PointCloud::new(2, [0.1, 0.0].repeat(n)).unwrap();
        let p = vec![Projector::from_basis(&[[1.0, 0.0]]).unwrap(); n];
        let s = add_noise(&x, &p, &NoiseModel::new(NoiseKind::TwoPointVertical, m, 0.0), 1.0, 5).unwrap();
        let mean: f64 = s.noise.iter().map(|e| e[1]).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 * (0.5 * m) / (n as f64).sqrt(), "{mean}");
        assert!(s.noise.iter().all(|e| e[0] == 0.0 && e[1].abs() == 0.5 * m));
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = circle_sample(NoiseKind::AnisotropicUniform, 0.1, 0.5, 8);
        s.save(dir.path(), "sample", "circle").unwrap();
        let (y, x, side) = NoisySample::load(dir.path(), "sample").unwrap();
        assert_eq!(y, s.y);
        assert_eq!(x, s.x);
        assert_eq!(side.model, "circle");
        assert_eq!(side.magnitude, 0.1);
        let raw = std::fs::read_to_string(dir.path().join("sample.json")).unwrap();
        assert!(raw.contains("\"M\"") && raw.contains("\"kappa\""));
    }
}
