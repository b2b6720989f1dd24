use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{DatasetSpec, ExperimentConfig, KnnConfig};
use crate::knn::{denoise_then_knn, load_benchmark, KnnReport};
use crate::cloud::{format_f64, PointCloud};
use crate::error::{Result, SameError};
use crate::estimator::{run_same, SameTrace};
use crate::linalg::{dist, Projector};
use crate::manifold::{add_noise, ManifoldModel, NoisySample};
use crate::metrics::{distances_to_model, evaluate, MetricsReport, Truth};
use crate::rng::{derive_seed, TAG_SAMPLE};

/// Observations plus whatever truth is known about them.
pub struct Dataset {
    pub y: PointCloud,
    pub clean: Option<PointCloud>,
    pub projectors: Option<Vec<Projector>>,
    pub model: Option<Box<dyn ManifoldModel>>,
    pub sample: Option<NoisySample>,
}

impl Dataset {
    pub fn truth(&self) -> Truth<'_> {
        Truth {
            clean: self.clean.as_ref(),
            projectors: self.projectors.as_deref(),
            model: self.model.as_deref(),
        }
    }
}

/// Samples (or reads) the dataset of `cfg`.
pub fn materialize(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSpec::Builtin { model, n, noise } => {
            let m = model.build()?;
            let x = m.sample(*n, derive_seed(cfg.seed, TAG_SAMPLE));
            let p = m.tangent_projectors(&x);
            let kappa = m.reach();
            let s = add_noise(&x, &p, &noise.resolve(kappa), kappa, cfg.seed)?;
            Ok(Dataset {
                y: s.y.clone(),
                clean: Some(s.x.clone()),
                projectors: Some(s.true_projectors.clone()),
                model: Some(m),
                sample: Some(s),
            })
        }
        DatasetSpec::Csv { noisy, clean, model } => {
            let y = PointCloud::read_csv(BufReader::new(File::open(noisy)?))?;
            let clean = match clean {
                Some(p) => Some(PointCloud::read_csv(BufReader::new(File::open(p)?))?),
                None => None,
            };
            if let Some(c) = &clean {
                if c.len() != y.len() || c.dim() != y.dim() {
                    return Err(SameError::Config {
                        path: "dataset.csv.clean".into(),
                        message: format!(
                            "shape {}x{} differs from the observations {}x{}",
                            c.len(),
                            c.dim(),
                            y.len(),
                            y.dim()
                        ),
                    });
                }
            }
            let model = match model {
                Some(m) => Some(m.build()?),
                None => None,
            };
            let projectors = match (&clean, &model) {
                (Some(c), Some(m)) => Some(m.tangent_projectors(c)),
                _ => None,
            };
            Ok(Dataset {
                y,
                clean,
                projectors,
                model,
                sample: None,
            })
        }
    }
}

/// Result of [`run_experiment`].
pub struct RunOutcome {
    pub metrics: MetricsReport,
    pub trace: SameTrace,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunInfo {
    started_unix_s: u64,
    elapsed_s: f64,
    threads: usize,
    version: &'static str,
}

fn write_cloud(path: &Path, c: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    c.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Per-point distance to the truth before and after denoising: to the model
/// when it is known, otherwise to the clean point.
fn plot_rows(data: &Dataset, denoised: &PointCloud) -> Option<(Vec<f64>, Vec<f64>)> {
    if let Some(m) = data.model.as_deref() {
        return Some((distances_to_model(&data.y, m), distances_to_model(denoised, m)));
    }
    let x = data.clean.as_ref()?;
    let before = data.y.iter().zip(x.iter()).map(|(a, b)| dist(a, b)).collect();
    let after = denoised.iter().zip(x.iter()).map(|(a, b)| dist(a, b)).collect();
    Some((before, after))
}

/// Runs one experiment and writes its artifacts into `cfg.output.dir`:
/// `noisy.csv`, `clean.csv` (when known), `denoised.csv`, `sample.json`
/// (built-in datasets), `metrics.json`, `plot_data.csv` and `run_info.json`.
/// Everything but `run_info.json` is a pure function of the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let data = materialize(cfg)?;
    let trace = run_same(&data.y, &cfg.same, None)?;
    let mut metrics = evaluate(&trace, &data.y, &data.truth(), cfg.evaluation.hausdorff_resolution)?;
    metrics.config = serde_json::to_value(cfg)?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str| {
        let p = dir.join(name);
        files.push(p.clone());
        p
    };
    write_cloud(&emit("noisy.csv"), &data.y)?;
    if let Some(c) = &data.clean {
        write_cloud(&emit("clean.csv"), c)?;
    }
    write_cloud(&emit("denoised.csv"), trace.estimates())?;
    if let (Some(s), Some(m)) = (&data.sample, data.model.as_deref()) {
        write_json(
            &emit("sample.json"),
            &crate::manifold::SampleSidecar {
                seed: s.seed,
                magnitude: s.model.magnitude,
                b: s.model.tangent_bound,
                kappa: s.kappa,
                model: m.name().to_string(),
                kind: s.model.kind,
            },
        )?;
    }
    write_json(&emit("metrics.json"), &metrics)?;
    if let Some((before, after)) = plot_rows(&data, trace.estimates()) {
        let mut w = BufWriter::new(File::create(emit("plot_data.csv"))?);
        writeln!(w, "index,dist_raw,dist_denoised")?;
        for (i, (a, b)) in before.iter().zip(&after).enumerate() {
            writeln!(w, "{i},{},{}", format_f64(*a), format_f64(*b))?;
        }
        w.flush()?;
    }
    let info = RunInfo {
        started_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        elapsed_s: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&emit("run_info.json"), &info)?;
    Ok(RunOutcome { metrics, trace, files })
}

/// Reads the labelled benchmark at `data`, runs the classification
/// comparison and writes `knn.json` (with the config embedded) into
/// `cfg.output.dir`.
pub fn run_knn_experiment(data: &Path, cfg: &KnnConfig) -> Result<(KnnReport, PathBuf)> {
    let ds = load_benchmark(data)?;
    cfg.validate(ds.features.dim())?;
    let report = denoise_then_knn(&ds, &cfg.split, &cfg.same, &cfg.k_grid())?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let path = cfg.output.dir.join("knn.json");
    let mut v = serde_json::to_value(&report)?;
    v["config"] = serde_json::to_value(cfg)?;
    write_json(&path, &v)?;
    Ok((report, path))
}
