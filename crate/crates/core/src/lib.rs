//! Structure-adaptive manifold estimation: iterative denoising of a point
//! cloud near a low-dimensional manifold with jointly estimated tangent
//! projectors, piecewise-linear reconstruction, and an evaluation harness.

pub mod cloud;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod knn;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod rng;
pub mod tolerances;

pub use cloud::PointCloud;
pub use error::{Result, SameError};
pub use estimator::{run_same, InitKind, IterationState, SameConfig, SameTrace};
pub use harness::{ExperimentConfig, Suite, VerifyReport};
pub use linalg::{Matrix, Projector, SymMatrix};
pub use manifold::{ManifoldModel, NoiseKind, NoiseModel, NoisySample};
pub use metrics::{HausdorffResult, ManifoldEstimate, MetricsReport};
