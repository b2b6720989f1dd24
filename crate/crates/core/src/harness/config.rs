use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SameError};
use crate::estimator::SameConfig;
use crate::knn::SplitSpec;
use crate::manifold::{
    make_bump_manifold, make_circle, make_s_shape, make_sphere, make_swiss_roll, ManifoldModel, NoiseKind,
    NoiseModel, BUMP_HESSIAN_BOUND,
};

pub const CONFIG_SCHEMA: &str = "config_v1";

fn default_schema() -> String {
    CONFIG_SCHEMA.to_string()
}

fn one() -> f64 {
    1.0
}

/// A built-in manifold with exact oracles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    Sphere {
        #[serde(default = "one")]
        radius: f64,
        /// Ambient dimension.
        dim: usize,
    },
    SwissRoll,
    SShape,
    Bump {
        index: usize,
        h: f64,
        #[serde(default = "one")]
        kappa: f64,
        /// Defaults to the smallest admissible value, `sup |psi''|`.
        #[serde(default)]
        lipschitz: Option<f64>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn ManifoldModel>> {
        Ok(match *self {
            ModelSpec::Circle { radius } => Box::new(make_circle(radius)?),
            ModelSpec::Sphere { radius, dim } => Box::new(make_sphere(radius, dim)?),
            ModelSpec::SwissRoll => Box::new(make_swiss_roll()),
            ModelSpec::SShape => Box::new(make_s_shape()),
            ModelSpec::Bump {
                index,
                h,
                kappa,
                lipschitz,
            } => Box::new(make_bump_manifold(index, h, kappa, lipschitz.unwrap_or(BUMP_HESSIAN_BOUND), 1)?.0),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub magnitude: f64,
    /// `b`; defaults to the reach of the model (no tangential constraint).
    #[serde(default)]
    pub tangent_bound: Option<f64>,
}

impl NoiseSpec {
    pub fn resolve(&self, kappa: f64) -> NoiseModel {
        NoiseModel::new(self.kind, self.magnitude, self.tangent_bound.unwrap_or(kappa))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// `n` points of a built-in model plus noise.
    Builtin { model: ModelSpec, n: usize, noise: NoiseSpec },
    /// Observations from a headerless CSV, optionally with the clean points
    /// and the model they lie on for evaluation.
    Csv {
        noisy: PathBuf,
        #[serde(default)]
        clean: Option<PathBuf>,
        #[serde(default)]
        model: Option<ModelSpec>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    /// Grid step of the dense samples behind the Hausdorff distance between
    /// the disk estimate and the model; omitted means not computed.
    #[serde(default)]
    pub hausdorff_resolution: Option<f64>,
}

fn default_out() -> PathBuf {
    PathBuf::from("same_out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

/// One experiment (`config_v1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub same: SameConfig,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn at(path: &str, e: SameError) -> SameError {
    match e {
        SameError::InvalidParameter { name, reason } => SameError::Config {
            path: format!("{path}.{name}"),
            message: reason,
        },
        SameError::Config { .. } | SameError::Io(_) => e,
        other => SameError::Config {
            path: path.to_string(),
            message: other.to_string(),
        },
    }
}

impl ExperimentConfig {
    /// Swiss roll denoising: 2500 points, anisotropic noise of magnitude 1.25.
    pub fn swiss_roll(seed: u64) -> Self {
        Self {
            schema: default_schema(),
            seed,
            dataset: DatasetSpec::Builtin {
                model: ModelSpec::SwissRoll,
                n: 2500,
                noise: NoiseSpec {
                    kind: NoiseKind::AnisotropicUniform,
                    magnitude: 1.25,
                    tangent_bound: None,
                },
            },
            same: SameConfig::swiss_roll(),
            evaluation: EvaluationSpec::default(),
            output: OutputSpec::default(),
        }
    }

    /// S-shape denoising: 1500 points, anisotropic noise of magnitude 0.2.
    pub fn s_shape(seed: u64) -> Self {
        Self {
            dataset: DatasetSpec::Builtin {
                model: ModelSpec::SShape,
                n: 1500,
                noise: NoiseSpec {
                    kind: NoiseKind::AnisotropicUniform,
                    magnitude: 0.2,
                    tangent_bound: None,
                },
            },
            same: SameConfig::s_shape(),
            ..Self::swiss_roll(seed)
        }
    }

    /// Noiseless unit circle, 500 points, local-PCA start; the base of the
    /// consistency rate study (`h_K = 0.1` at the base size).
    pub fn noiseless_circle(seed: u64) -> Self {
        Self {
            dataset: DatasetSpec::Builtin {
                model: ModelSpec::Circle { radius: 1.0 },
                n: 500,
                noise: NoiseSpec {
                    kind: NoiseKind::OrthogonalUniform,
                    magnitude: 0.0,
                    tangent_bound: None,
                },
            },
            same: SameConfig {
                h0: 0.1 * 1.25 * 1.25,
                a: 1.25,
                iterations: 2,
                tau: 1.0,
                gamma: 2.0,
                d: 1,
                min_weight_sum: 1.0,
                init: crate::estimator::InitKind::LocalPca,
            },
            ..Self::swiss_roll(seed)
        }
    }

    pub fn model_spec(&self) -> Option<&ModelSpec> {
        match &self.dataset {
            DatasetSpec::Builtin { model, .. } => Some(model),
            DatasetSpec::Csv { model, .. } => model.as_ref(),
        }
    }

    /// Semantic checks beyond the schema; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(SameError::Config {
                path: "schema".into(),
                message: format!("expected \"{CONFIG_SCHEMA}\", found \"{}\"", self.schema),
            });
        }
        let dim = match &self.dataset {
            DatasetSpec::Builtin { model, n, noise } => {
                if *n == 0 {
                    return Err(SameError::Config {
                        path: "dataset.builtin.n".into(),
                        message: "must be at least 1".into(),
                    });
                }
                let m = model.build().map_err(|e| at("dataset.builtin.model", e))?;
                noise
                    .resolve(m.reach())
                    .validate(m.reach())
                    .map_err(|e| at("dataset.builtin.noise", e))?;
                Some(m.ambient_dim())
            }
            DatasetSpec::Csv { model, .. } => {
                match model {
                    Some(m) => Some(m.build().map_err(|e| at("dataset.csv.model", e))?.ambient_dim()),
                    None => None,
                }
            }
        };
        if let Some(dim) = dim {
            self.same.validate(dim).map_err(|e| at("same", e))?;
        }
        if let Some(r) = self.evaluation.hausdorff_resolution {
            if !(r > 0.0 && r.is_finite()) {
                return Err(SameError::Config {
                    path: "evaluation.hausdorff_resolution".into(),
                    message: format!("must be positive, got {r}"),
                });
            }
        }
        Ok(())
    }

    /// Parses and validates a `config_v1` document.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SameError::Config {
                path: if path == "." { String::new() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn default_k_max() -> usize {
    30
}

/// Benchmark classification run: split, estimator settings and the largest
/// `k` of the `1..=k_max` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub split: SplitSpec,
    pub same: SameConfig,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

impl KnnConfig {
    pub fn g241c(seed: u64) -> Self {
        Self {
            schema: default_schema(),
            split: SplitSpec::new(seed),
            same: SameConfig::g241c(),
            k_max: default_k_max(),
            output: OutputSpec::default(),
        }
    }

    pub fn g241n(seed: u64) -> Self {
        Self {
            same: SameConfig::g241n(),
            ..Self::g241c(seed)
        }
    }

    pub fn k_grid(&self) -> Vec<usize> {
        (1..=self.k_max).collect()
    }

    /// Checks against a dataset of ambient dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(SameError::Config {
                path: "schema".into(),
                message: format!("expected \"{CONFIG_SCHEMA}\", found \"{}\"", self.schema),
            });
        }
        if self.k_max == 0 || self.k_max > self.split.n_train {
            return Err(SameError::Config {
                path: "k_max".into(),
                message: format!("must be in 1..={}", self.split.n_train),
            });
        }
        self.same.validate(dim).map_err(|e| at("same", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            SameError::Config {
                path: if path == "." { String::new() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
