use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use same_core::cloud::format_f64;
use same_core::harness::{
    rate_study, run_experiment, run_knn_experiment, verify_suite, ExperimentConfig, KnnConfig, RateSpec, RateTable,
    Status, Suite,
};
use same_core::SameError;

#[derive(Parser)]
#[command(name = "same", version, about = "Structure-adaptive manifold estimation experiments")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise one dataset and write points, metrics and plot data.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat an experiment over a grid of sample sizes.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "500,2000,8000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite; exits with 3 when a check fails.
    Verify {
        /// lemma1, lemma2, lower_bound_reach, noise_A3 or all.
        #[arg(long)]
        suite: String,
        /// JSON object overriding the suite parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also write the report(s) to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-NN test error on a labelled benchmark before and after denoising.
    Knn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<KnnPreset>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset configuration.
    Config {
        #[arg(long)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    SwissRoll,
    SShape,
    NoiselessCircle,
    G241c,
    G241n,
}

#[derive(Clone, Copy, ValueEnum)]
enum KnnPreset {
    G241c,
    G241n,
}

enum Failure {
    Invalid(String),
    Verification(String),
    Runtime(String),
}

impl From<SameError> for Failure {
    fn from(e: SameError) -> Self {
        match e {
            SameError::Config { .. }
            | SameError::InvalidParameter { .. }
            | SameError::Parse { .. }
            | SameError::InfeasibleNoise(_)
            | SameError::PackingInfeasible(_)
            | SameError::DimensionMismatch { .. }
            | SameError::Io(_)
            | SameError::Json(_) => Failure::Invalid(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn pretty<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn load_experiment(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output.dir = o;
    }
    Ok(cfg)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let cfg = load_experiment(config, seed, out)?;
    let o = run_experiment(&cfg)?;
    let m = &o.metrics;
    println!("n = {}, D = {}, iterations = {}", m.n, m.dim, o.trace.states.len());
    if let (Some(raw), Some(den)) = (m.rms_to_manifold_raw, m.rms_to_manifold_denoised) {
        println!("rms to manifold: raw {raw:.6}, denoised {den:.6} (ratio {:.4})", den / raw);
    }
    if let Some(e) = m.max_point_error {
        println!("max point error {e:.6}");
    }
    if let Some(h) = &m.hausdorff_estimate_vs_truth {
        println!("hausdorff(estimate, truth) {:.6} +- {:.6}", h.value, h.uncertainty);
    }
    println!("fallbacks {}", o.trace.fallback_count());
    println!("wrote {}", cfg.output.dir.display());
    Ok(())
}

fn rates_csv(t: &RateTable) -> String {
    let mut s = String::from("n,h_final,median_hausdorff,median_max_point_error,median_max_projector_error\n");
    for r in &t.rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            format_f64(r.h_final),
            format_f64(r.median_hausdorff),
            format_f64(r.median_max_point_error),
            format_f64(r.median_max_projector_error)
        ));
    }
    s
}

fn cmd_rates(config: &Path, n: Vec<usize>, repeats: usize, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let cfg = load_experiment(config, seed, out)?;
    let t = rate_study(&cfg, &RateSpec::new(n, repeats))?;
    fs::create_dir_all(&cfg.output.dir)?;
    fs::write(cfg.output.dir.join("rates.json"), pretty(&t)?)?;
    fs::write(cfg.output.dir.join("rates.csv"), rates_csv(&t))?;
    for r in &t.rows {
        println!(
            "n = {:>6}  h_K = {:.5}  hausdorff {:.3e}  point {:.3e}  projector {:.3e}",
            r.n, r.h_final, r.median_hausdorff, r.median_max_point_error, r.median_max_projector_error
        );
    }
    let show = |s: Option<f64>| s.map_or("null".to_string(), |v| format!("{v:.3}"));
    println!(
        "log-log slopes: hausdorff {}, point {}, projector {}",
        show(t.slope_hausdorff),
        show(t.slope_point_error),
        show(t.slope_projector_error)
    );
    Ok(())
}

fn cmd_verify(suite: &str, params: Option<PathBuf>, out: Option<PathBuf>) -> CmdResult {
    let suites: Vec<Suite> = if suite.eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![suite.parse()?]
    };
    let params: Option<serde_json::Value> = match params {
        Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?).map_err(SameError::from)?),
        None => None,
    };
    let mut reports = Vec::new();
    for s in suites {
        reports.push(verify_suite(s, params.as_ref())?);
    }
    let text = if reports.len() == 1 { pretty(&reports[0])? } else { pretty(&reports)? };
    std::io::stdout().write_all(text.as_bytes())?;
    if let Some(o) = out {
        fs::write(o, &text)?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| r.status == Status::Fail)
        .map(|r| r.suite.to_string())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("failed suites: {}", failed.join(", "))))
    }
}

fn cmd_knn(
    data: &Path,
    config: Option<PathBuf>,
    preset: Option<KnnPreset>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> CmdResult {
    let mut cfg = match (config, preset) {
        (Some(p), _) => KnnConfig::load(&p)?,
        (None, Some(KnnPreset::G241c)) => KnnConfig::g241c(0),
        (None, Some(KnnPreset::G241n)) => KnnConfig::g241n(0),
        (None, None) => return Err(Failure::Invalid("either --config or --preset is required".into())),
    };
    if let Some(s) = seed {
        cfg.split.seed = s;
    }
    if let Some(o) = out {
        cfg.output.dir = o;
    }
    let (r, path) = run_knn_experiment(data, &cfg)?;
    println!("{}: n = {}, D = {}", r.dataset, r.n, r.dim);
    println!("raw      best k = {:>2}, test error {:.4}", r.best_k_raw, r.err_raw);
    println!("denoised best k = {:>2}, test error {:.4}", r.best_k_denoised, r.err_denoised);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_config(preset: Preset, seed: u64) -> CmdResult {
    let text = match preset {
        Preset::SwissRoll => pretty(&ExperimentConfig::swiss_roll(seed))?,
        Preset::SShape => pretty(&ExperimentConfig::s_shape(seed))?,
        Preset::NoiselessCircle => pretty(&ExperimentConfig::noiseless_circle(seed))?,
        Preset::G241c => pretty(&KnnConfig::g241c(seed))?,
        Preset::G241n => pretty(&KnnConfig::g241n(seed))?,
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out),
        Command::Rates {
            config,
            n,
            repeats,
            seed,
            out,
        } => cmd_rates(&config, n, repeats, seed, out),
        Command::Verify { suite, params, out } => cmd_verify(&suite, params, out),
        Command::Knn {
            data,
            config,
            preset,
            seed,
            out,
        } => cmd_knn(&data, config, preset, seed, out),
        Command::Config { preset, seed } => cmd_config(preset, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
