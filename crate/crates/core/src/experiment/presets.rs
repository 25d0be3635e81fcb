//! Desk-scale configurations for the five simulation studies.
//!
//! Each preset keeps the published array sizes, snapshot counts, SNRs,
//! separations and power ratios; sweep axes are coarsened and trials default
//! to 200.

use super::config::{Arm, ArrayKind, ExperimentConfig, ExperimentId, Method, Separation};

pub const DESK_TRIALS: usize = 200;
pub const PRESET_SEED: u64 = 20_240_601;

const ULA_DIRECT: Arm = Arm {
    array: ArrayKind::Ula,
    method: Method::Direct,
};
const ULA_COARRAY: Arm = Arm {
    array: ArrayKind::Ula,
    method: Method::Coarray,
};
const NESTED_COARRAY: Arm = Arm {
    array: ArrayKind::Nested,
    method: Method::Coarray,
};

/// `n` points from `lo` to `hi`, equally spaced in log scale.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln();
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => lo * (r * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// Integer log grid with duplicates removed.
pub fn log_grid_counts(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = log_grid(lo as f64, hi as f64, n)
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    v.dedup();
    v
}

fn base(experiment: ExperimentId, output: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        arms: vec![ULA_COARRAY, NESTED_COARRAY],
        sensors: vec![20],
        snapshots: vec![],
        snr_db: vec![0.0],
        separation: vec![],
        dynamic_range: vec![1.0],
        num_sources: 2,
        omega_start: 0.1,
        p_min: 1.0,
        trials: DESK_TRIALS,
        base_seed: PRESET_SEED,
        output: Some(output.to_string()),
        scene: None,
    }
}

/// Direct vs coarray ESPRIT on a 20-sensor ULA, with the nested array for reference.
pub fn fig1() -> ExperimentConfig {
    ExperimentConfig {
        arms: vec![ULA_DIRECT, ULA_COARRAY, NESTED_COARRAY],
        snapshots: vec![100],
        snr_db: (-4..=4).map(|k| 5.0 * k as f64).collect(),
        separation: vec![Separation::PerSensors { scale: 2.0, exponent: 1.0 }],
        num_sources: 4,
        ..base(ExperimentId::Fig1CoarrayVsDirect, "fig1.csv")
    }
}

/// Resolution probability against separation on a log grid over [1/P², 4/P].
pub fn fig2() -> ExperimentConfig {
    let p = 20.0;
    ExperimentConfig {
        snapshots: vec![55, 600],
        snr_db: vec![0.0, -16.0],
        separation: log_grid(1.0 / (p * p), 4.0 / p, 13)
            .into_iter()
            .map(Separation::Fixed)
            .collect(),
        ..base(ExperimentId::Fig2ProbResolution, "fig2.csv")
    }
}

/// Relative matching distance over a snapshot × SNR grid.
pub fn fig3() -> ExperimentConfig {
    ExperimentConfig {
        snapshots: log_grid_counts(10, 1000, 8),
        snr_db: (-4..=3).map(|k| 5.0 * k as f64).collect(),
        separation: vec![
            Separation::PerSensors { scale: 2.0, exponent: 1.0 },
            Separation::PerSensors { scale: 2.0, exponent: 2.0 },
        ],
        ..base(ExperimentId::Fig3SnrSnapshotGrid, "fig3.csv")
    }
}

/// Matching distance and covariance error against the number of sensors.
pub fn fig4() -> ExperimentConfig {
    ExperimentConfig {
        sensors: vec![6, 8, 10, 12, 14, 16, 18, 20],
        snapshots: vec![50],
        separation: vec![
            Separation::PerSensors { scale: 1.0, exponent: 1.5 },
            Separation::PerSensors { scale: 1.0, exponent: 2.0 },
        ],
        num_sources: 4,
        ..base(ExperimentId::Fig4ErrorVsSensors, "fig4.csv")
    }
}

/// Resolution against snapshots for power ratios 1 and 10 with p_min = 0.2.
pub fn fig5() -> ExperimentConfig {
    ExperimentConfig {
        snapshots: log_grid_counts(5, 5000, 10),
        separation: vec![Separation::PerSensors { scale: 1.0, exponent: 1.0 }],
        dynamic_range: vec![1.0, 10.0],
        p_min: 0.2,
        ..base(ExperimentId::Fig5DynamicRange, "fig5.csv")
    }
}

pub fn all() -> Vec<(&'static str, ExperimentConfig)> {
    vec![
        ("fig1", fig1()),
        ("fig2", fig2()),
        ("fig3", fig3()),
        ("fig4", fig4()),
        ("fig5", fig5()),
    ]
}

pub fn by_name(name: &str) -> Option<ExperimentConfig> {
    all().into_iter().find(|(n, c)| *n == name || c.experiment.as_str() == name).map(|p| p.1)
}
