//! Benchmark fixtures.

use same_core::estimator::{InitKind, SameConfig};
use same_core::harness::{materialize, ExperimentConfig};
use same_core::linalg::SymMatrix;
use same_core::rng::derive_seed;
use same_core::{PointCloud, Projector};

/// Noisy unit circle of `n` points and a two-step schedule sized for it.
pub fn noisy_circle(n: usize, seed: u64) -> (PointCloud, Vec<Projector>, SameConfig) {
    let mut cfg = ExperimentConfig::noiseless_circle(seed);
    if let same_core::harness::DatasetSpec::Builtin { n: size, noise, .. } = &mut cfg.dataset {
        *size = n;
        noise.magnitude = 0.05;
    }
    cfg.same.init = InitKind::Identity;
    cfg.same.h0 = 0.3;
    cfg.same.tau = 0.6;
    let data = materialize(&cfg).expect("fixture config is valid");
    (data.y, data.projectors.expect("built-in data"), cfg.same)
}

/// Symmetric matrix with entries uniform in `[-1, 1]`, hashed from `seed`.
pub fn random_symmetric(dim: usize, seed: u64) -> SymMatrix {
    SymMatrix::from_upper(dim, |i, j| {
        let bits = derive_seed(seed, (i * dim + j) as u64) >> 11;
        2.0 * (bits as f64 / (1u64 << 53) as f64) - 1.0
    })
}
