//! Command-line front end. Every command prints JSON on stdout.
//!
//! Exit codes: 0 success (including `--help`), 1 usage error, 2 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{
    bound_report, specialized_bounds, BoundConstants, Regime, SpecializedParams,
};
use crate::error::{Error, Result};
use crate::esprit::{coarray_esprit, direct_esprit};
use crate::estimation::{covariance_error, estimate_coarray_covariance, grid_sup_bound};
use crate::experiment::{emit_csv, presets, run_experiment, ExperimentConfig};
use crate::geometry::SensorArray;
use crate::metrics::matching_distance;
use crate::signal::{noise_power_for_snr, sample_snapshots, true_coarray_covariance, SourceScene};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "coarray-lab", version, about = "Sparse-array DOA estimation with Coarray ESPRIT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate snapshots and estimate source frequencies.
    Estimate(EstimateArgs),
    /// Evaluate the finite-snapshot bounds for a scene.
    Bounds(BoundsArgs),
    /// Run or list Monte Carlo experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Inspect array geometry.
    #[command(subcommand)]
    Geometry(GeometryCmd),
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// nested:N1,N2 | ula:P | custom:[d1,d2,...]
    #[arg(long)]
    array: SensorArray,
    /// Comma-separated normalized frequencies in [0, 1).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "scene")]
    omegas: Vec<f64>,
    /// Comma-separated source powers (default: all 1).
    #[arg(long, value_delimiter = ',')]
    powers: Vec<f64>,
    /// Noise power σ².
    #[arg(long, conflicts_with = "snr_db")]
    noise: Option<f64>,
    /// SNR in dB relative to the weakest source; sets σ² = p_min·10^(−SNR/10).
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// JSON scene file {"omegas": [...], "powers": [...], "noise_power": x}.
    #[arg(long, conflicts_with_all = ["omegas", "powers", "noise"])]
    scene: Option<PathBuf>,
}

impl SceneArgs {
    fn scene(&self) -> Result<SourceScene> {
        let base = match &self.scene {
            Some(path) => {
                let text = read(path)?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => {
                let powers = if self.powers.is_empty() {
                    vec![1.0; self.omegas.len()]
                } else {
                    self.powers.clone()
                };
                SourceScene::new(self.omegas.clone(), powers, self.noise.unwrap_or(0.0))?
            }
        };
        match self.snr_db {
            Some(snr) => base.with_noise_power(noise_power_for_snr(base.p_min(), snr)),
            None => Ok(base),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Coarray,
    Direct,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Number of snapshots L.
    #[arg(short = 'L', long = "snapshots")]
    snapshots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Coarray)]
    method: MethodArg,
    /// Refinement of the 4·M_ca grid used for the error certificate.
    #[arg(long, default_value_t = 1)]
    grid_mult: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RegimeArg {
    Ula,
    Nested,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    scene: SceneArgs,
    /// Target matching-distance error ε.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Failure probability δ.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Overrides such as c=0.5,gamma=3.
    #[arg(long)]
    constants: Option<String>,
    /// Also evaluate the separation-regime bound for this geometry family.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
}

#[derive(Subcommand, Debug)]
enum ExperimentCmd {
    /// Run a TOML experiment config and write the aggregate CSV.
    Run {
        config: PathBuf,
        /// CSV path (defaults to the config's `output`).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Also write every trial record as JSON.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// List the built-in presets.
    ListPresets {
        /// Print one preset as TOML instead.
        #[arg(long)]
        dump: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum GeometryCmd {
    /// Positions, coarray and redundancy of an array.
    Inspect {
        #[arg(long)]
        array: SensorArray,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report types serialize")
}

fn estimate(a: &EstimateArgs) -> Result<serde_json::Value> {
    let array = &a.scene.array;
    let scene = a.scene.scene()?;
    let coarray = array.coarray();
    let y = sample_snapshots(array, &scene, a.snapshots, a.seed)?;
    let est = match a.method {
        MethodArg::Coarray => coarray_esprit(&y, array, &coarray, scene.num_sources())?,
        MethodArg::Direct => direct_esprit(&y, array, scene.num_sources())?,
    };
    let mut v = serde_json::to_value(&est).expect("estimate serializes");
    let md = matching_distance(scene.omegas(), &est.omegas_hat)?.distance;
    let diag = v["diagnostics"].as_object_mut().expect("diagnostics object");
    diag.insert("md".into(), json!(md));
    diag.insert("seed".into(), json!(a.seed));
    if coarray.is_hole_free() {
        let exact = true_coarray_covariance(&coarray, &scene)?;
        let t_hat = estimate_coarray_covariance(&y, &coarray, array)?;
        diag.insert("cov_error".into(), json!(covariance_error(&exact, &t_hat)?));
        diag.insert(
            "grid_sup_bound".into(),
            json!(grid_sup_bound(&exact, &t_hat, &coarray, array, a.grid_mult)?),
        );
    }
    Ok(v)
}

fn bounds(a: &BoundsArgs) -> Result<serde_json::Value> {
    let k: BoundConstants = match &a.constants {
        Some(s) => s.parse()?,
        None => BoundConstants::default(),
    };
    let scene = a.scene.scene()?;
    let array = &a.scene.array;
    let report = bound_report(array, &scene, a.epsilon, a.delta, &k)?;
    let mut v = serde_json::to_value(&report).expect("report serializes");
    if let Some(r) = a.regime {
        let regime = match r {
            RegimeArg::Ula => Regime::Ula,
            RegimeArg::Nested => Regime::Nested,
        };
        let p = SpecializedParams::from_scene(regime, array.len(), &scene, a.epsilon, a.delta);
        v["specialized"] = serde_json::to_value(specialized_bounds(&p, &k)).expect("serializes");
    }
    Ok(v)
}

fn geometry(array: &SensorArray) -> Result<serde_json::Value> {
    let c = array.coarray();
    let weights: Vec<[i64; 2]> = c.iter_weights().map(|(i, w)| [i, w as i64]).collect();
    Ok(json!({
        "positions": array.positions(),
        "num_sensors": array.len(),
        "difference_set": c.difference_set(),
        "weights": weights,
        "m_ca": c.m_ca(),
        "hole_free": c.is_hole_free(),
        "redundancy": c.redundancy_coefficient().ok(),
    }))
}

fn experiment(cmd: &ExperimentCmd) -> Result<serde_json::Value> {
    match cmd {
        ExperimentCmd::Run {
            config,
            output,
            trials,
            records,
        } => {
            let mut cfg = ExperimentConfig::load(config)?;
            if let Some(t) = trials {
                cfg.trials = *t;
            }
            let out = output
                .clone()
                .or_else(|| cfg.output.as_ref().map(PathBuf::from))
                .ok_or_else(|| Error::Config("no output path in config or --output".into()))?;
            let data = run_experiment(&cfg)?;
            emit_csv(&data.aggregates, &out)?;
            if let Some(p) = records {
                std::fs::write(p, to_json(&data.records)).map_err(|e| Error::Io {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
            }
            Ok(json!({
                "experiment": data.experiment,
                "output": out.display().to_string(),
                "trials": data.records.len(),
                "failures": data.records.iter().filter(|r| r.failure_stage.is_some()).count(),
                "rows": data.aggregates.len(),
            }))
        }
        ExperimentCmd::ListPresets { dump } => match dump {
            Some(name) => {
                let cfg = presets::by_name(name)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown preset {name:?}")))?;
                Ok(json!({ "name": name, "toml": cfg.to_toml_string()? }))
            }
            None => Ok(json!(presets::all()
                .into_iter()
                .map(|(n, c)| json!({
                    "name": n,
                    "experiment": c.experiment.as_str(),
                    "arms": c.arms.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                    "trials": c.trials,
                    "grid_points": c.grid().len(),
                }))
                .collect::<Vec<_>>())),
        },
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Bounds(a) => bounds(a),
        Command::Experiment(c) => experiment(c),
        Command::Geometry(GeometryCmd::Inspect { array }) => geometry(array),
    };
    match result {
        Ok(v) => {
            let _ = writeln!(out, "{}", to_json(&v));
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Entry point used by the binary.
pub fn cli_main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
