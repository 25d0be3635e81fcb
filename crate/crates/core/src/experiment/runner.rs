//! Monte Carlo trial execution and per-grid-point aggregation.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Arm, ExperimentConfig, GridPoint, Method};
use crate::error::{Error, Result};
use crate::esprit::{esprit_on_coarray, esprit_on_physical};
use crate::estimation::{average_with_provenance, covariance_error, sample_covariance, Provenance};
use crate::metrics::matching_distance;
use crate::rng::derive_seed;
use crate::signal::{sample_snapshots, true_coarray_covariance};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "COARRAY_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureStage {
    Sampling,
    CoarrayEstimation,
    SignalSubspace,
    EspritRotation,
    Matching,
}

impl FailureStage {
    fn from_error(e: &Error, fallback: FailureStage) -> Self {
        match e {
            Error::Stage { stage: "signal subspace", .. } => Self::SignalSubspace,
            Error::Stage { stage: "esprit rotation", .. } => Self::EspritRotation,
            Error::Stage { stage: "coarray estimation", .. } => Self::CoarrayEstimation,
            _ => fallback,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub arm: String,
    pub sensors: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub delta: f64,
    pub dynamic_range: f64,
    pub trial: usize,
    pub seed: u64,
    /// Absent when the estimator failed.
    pub md: Option<f64>,
    pub resolved: bool,
    /// ‖T_ca − T̂_ca‖₂ of the arm's geometry; absent only if sampling failed.
    pub cov_error: Option<f64>,
    pub failure_stage: Option<FailureStage>,
}

/// Summary over the trials of one (arm, grid point).
///
/// `prob_resolved` counts failures as unresolved; `mean_md` and `median_md`
/// exclude them and `failures` reports how many were excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub arm: String,
    pub sensors: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub delta: f64,
    pub dynamic_range: f64,
    pub trials: usize,
    pub mean_md: f64,
    pub median_md: f64,
    pub prob_resolved: f64,
    pub mean_cov_error: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub experiment: &'static str,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Clone, Copy)]
struct Task {
    arm_idx: usize,
    arm: Arm,
    grid_idx: usize,
    point: GridPoint,
    trial: usize,
}

fn run_trial(cfg: &ExperimentConfig, t: &Task, base_seed: u64) -> Result<TrialRecord> {
    let seed = derive_seed(base_seed, &[t.arm_idx as u64, t.grid_idx as u64, t.trial as u64]);
    let g = &t.point;
    let scene = cfg.scene_for(g)?;
    let array = t.arm.array.build(g.sensors)?;
    let coarray = array.coarray();
    let mut rec = TrialRecord {
        arm: t.arm.to_string(),
        sensors: g.sensors,
        snapshots: g.snapshots,
        snr_db: g.snr_db,
        delta: g.separation,
        dynamic_range: g.dynamic_range,
        trial: t.trial,
        seed,
        md: None,
        resolved: false,
        cov_error: None,
        failure_stage: None,
    };
    let y = match sample_snapshots(&array, &scene, g.snapshots, seed) {
        Ok(y) => y,
        Err(_) => {
            rec.failure_stage = Some(FailureStage::Sampling);
            return Ok(rec);
        }
    };
    let r_hat = sample_covariance(&y);
    let provenance = Provenance::Estimated {
        snapshots: g.snapshots,
        seed,
    };
    let t_hat = match average_with_provenance(&r_hat, &coarray, &array, provenance) {
        Ok(t) => t,
        Err(_) => {
            rec.failure_stage = Some(FailureStage::CoarrayEstimation);
            return Ok(rec);
        }
    };
    let exact = true_coarray_covariance(&coarray, &scene)?;
    rec.cov_error = Some(covariance_error(&exact, &t_hat)?);
    let s = scene.num_sources();
    let est = match t.arm.method {
        Method::Coarray => esprit_on_coarray(&t_hat, s),
        Method::Direct => esprit_on_physical(&r_hat, &array, s),
    };
    match est {
        Ok(est) => match matching_distance(scene.omegas(), &est.omegas_hat) {
            Ok(m) => {
                let tol = g.separation / 10.0;
                rec.resolved = m.errors.iter().all(|&e| e <= tol);
                rec.md = Some(m.distance);
            }
            Err(_) => rec.failure_stage = Some(FailureStage::Matching),
        },
        Err(e) => rec.failure_stage = Some(FailureStage::from_error(&e, FailureStage::EspritRotation)),
    }
    Ok(rec)
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn aggregate(chunk: &[TrialRecord]) -> Aggregate {
    let first = &chunk[0];
    let mut mds: Vec<f64> = chunk.iter().filter_map(|r| r.md).collect();
    let covs: Vec<f64> = chunk.iter().filter_map(|r| r.cov_error).collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Aggregate {
        arm: first.arm.clone(),
        sensors: first.sensors,
        snapshots: first.snapshots,
        snr_db: first.snr_db,
        delta: first.delta,
        dynamic_range: first.dynamic_range,
        trials: chunk.len(),
        mean_md: mean(&mds),
        median_md: median(&mut mds),
        prob_resolved: chunk.iter().filter(|r| r.resolved).count() as f64 / chunk.len() as f64,
        mean_cov_error: mean(&covs),
        failures: chunk.iter().filter(|r| r.failure_stage.is_some()).count(),
    }
}

/// Pool size from [`THREADS_ENV`], or `None` for rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Dataset> {
    run_experiment_with_threads(cfg, threads_from_env()?)
}

/// Runs every (arm, grid point, trial) and aggregates. Output does not depend
/// on the thread count.
pub fn run_experiment_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Dataset> {
    cfg.validate()?;
    let grid = cfg.grid();
    let mut tasks = Vec::with_capacity(cfg.arms.len() * grid.len() * cfg.trials);
    for (arm_idx, &arm) in cfg.arms.iter().enumerate() {
        for (grid_idx, &point) in grid.iter().enumerate() {
            for trial in 0..cfg.trials {
                tasks.push(Task {
                    arm_idx,
                    arm,
                    grid_idx,
                    point,
                    trial,
                });
            }
        }
    }
    let work = || -> Result<Vec<TrialRecord>> {
        tasks
            .par_iter()
            .map(|t| run_trial(cfg, t, cfg.base_seed))
            .collect()
    };
    let records = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut aggregates: Vec<Aggregate> = records.chunks(cfg.trials).map(aggregate).collect();
    aggregates.sort_by(|a, b| {
        a.arm
            .cmp(&b.arm)
            .then(a.sensors.cmp(&b.sensors))
            .then(a.snapshots.cmp(&b.snapshots))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.delta.total_cmp(&b.delta))
            .then(a.dynamic_range.total_cmp(&b.dynamic_range))
    });
    Ok(Dataset {
        experiment: cfg.experiment.as_str(),
        records,
        aggregates,
    })
}
