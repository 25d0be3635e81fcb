//! Experiment configuration and its flat TOML file format.
//!
//! ```toml
//! experiment = "fig2_prob_resolution"
//! arms = ["ula:coarray", "nested:coarray"]
//! sensors = [20]
//! snapshots = [55]
//! snr_db = [0.0, -16.0]
//! separation = ["1/P^2", 0.01, "4/P"]
//! dynamic_range = [1.0]
//! num_sources = 2
//! omega_start = 0.1
//! p_min = 1.0
//! trials = 200
//! base_seed = 7
//! output = "fig2.csv"
//! ```
//!
//! `separation` entries are plain numbers or `a/P^b` expressions in the
//! sensor count. An optional inline `scene = { omegas = [...], powers = [...],
//! noise_power = x }` fixes the sources instead; `snr_db`, if given, then
//! overrides its noise power.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SensorArray;
use crate::metrics::min_separation;
use crate::signal::{noise_power_for_snr, SourceScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Fig1CoarrayVsDirect,
    Fig2ProbResolution,
    Fig3SnrSnapshotGrid,
    Fig4ErrorVsSensors,
    Fig5DynamicRange,
    Custom,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig1CoarrayVsDirect => "fig1_coarray_vs_direct",
            Self::Fig2ProbResolution => "fig2_prob_resolution",
            Self::Fig3SnrSnapshotGrid => "fig3_snr_snapshot_grid",
            Self::Fig4ErrorVsSensors => "fig4_error_vs_sensors",
            Self::Fig5DynamicRange => "fig5_dynamic_range",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArrayKind {
    /// P consecutive sensors.
    Ula,
    /// nested(⌈P/2⌉, ⌊P/2⌋).
    Nested,
}

impl ArrayKind {
    pub fn build(&self, sensors: usize) -> Result<SensorArray> {
        match self {
            Self::Ula => SensorArray::ula(sensors),
            Self::Nested => SensorArray::nested_balanced(sensors),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Coarray,
    Direct,
}

/// One processing chain, written `array:method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arm {
    pub array: ArrayKind,
    pub method: Method,
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = match self.array {
            ArrayKind::Ula => "ula",
            ArrayKind::Nested => "nested",
        };
        let m = match self.method {
            Method::Coarray => "coarray",
            Method::Direct => "direct",
        };
        write!(f, "{a}:{m}")
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, m) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("arm {s:?} is not of the form array:method")))?;
        let array = match a.trim() {
            "ula" => ArrayKind::Ula,
            "nested" => ArrayKind::Nested,
            other => return Err(Error::Config(format!("unknown array kind {other:?}"))),
        };
        let method = match m.trim() {
            "coarray" => Method::Coarray,
            "direct" => Method::Direct,
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        };
        if array == ArrayKind::Nested && method == Method::Direct {
            return Err(Error::Config("direct ESPRIT needs a ULA arm".into()));
        }
        Ok(Self { array, method })
    }
}

impl Serialize for Arm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Arm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Source separation, either absolute or `scale / P^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    Fixed(f64),
    PerSensors { scale: f64, exponent: f64 },
}

impl Separation {
    pub fn evaluate(&self, sensors: usize) -> f64 {
        match *self {
            Self::Fixed(v) => v,
            Self::PerSensors { scale, exponent } => scale / (sensors as f64).powf(exponent),
        }
    }
}

impl fmt::Display for Separation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Fixed(v) => write!(f, "{v}"),
            Self::PerSensors { scale, exponent } if exponent == 1.0 => write!(f, "{scale}/P"),
            Self::PerSensors { scale, exponent } => write!(f, "{scale}/P^{exponent}"),
        }
    }
}

impl FromStr for Separation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::Config(format!("bad separation {s:?}; use a number or a/P^b"));
        if let Some((num, den)) = t.split_once('/') {
            let scale: f64 = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim();
            let rest = den.strip_prefix('P').ok_or_else(bad)?.trim();
            let exponent = if rest.is_empty() {
                1.0
            } else {
                rest.strip_prefix('^')
                    .ok_or_else(bad)?
                    .trim()
                    .parse()
                    .map_err(|_| bad())?
            };
            Ok(Self::PerSensors { scale, exponent })
        } else {
            Ok(Self::Fixed(t.parse().map_err(|_| bad())?))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawSeparation {
    Number(f64),
    Text(String),
}

impl Serialize for Separation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Self::Fixed(v) => RawSeparation::Number(v),
            _ => RawSeparation::Text(self.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Separation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawSeparation::deserialize(d)? {
            RawSeparation::Number(v) => Ok(Self::Fixed(v)),
            RawSeparation::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn default_omega_start() -> f64 {
    0.1
}

fn default_p_min() -> f64 {
    1.0
}

fn default_unit() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub arms: Vec<Arm>,
    pub sensors: Vec<usize>,
    pub snapshots: Vec<usize>,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub separation: Vec<Separation>,
    #[serde(default = "default_unit")]
    pub dynamic_range: Vec<f64>,
    #[serde(default)]
    pub num_sources: usize,
    #[serde(default = "default_omega_start")]
    pub omega_start: f64,
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SourceScene>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub sensors: usize,
    pub snapshots: usize,
    /// NaN when a fixed scene keeps its own noise power.
    pub snr_db: f64,
    pub separation: f64,
    pub dynamic_range: f64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        nonempty("arms", self.arms.len())?;
        nonempty("sensors", self.sensors.len())?;
        nonempty("snapshots", self.snapshots.len())?;
        if self.scene.is_none() {
            nonempty("snr_db", self.snr_db.len())?;
            nonempty("separation", self.separation.len())?;
            nonempty("dynamic_range", self.dynamic_range.len())?;
            if self.num_sources == 0 {
                return Err(Error::Config("num_sources must be at least 1".into()));
            }
            if !(self.p_min > 0.0) {
                return Err(Error::Config("p_min must be positive".into()));
            }
            if self.dynamic_range.iter().any(|&d| !(d >= 1.0)) {
                return Err(Error::Config("dynamic_range entries must be >= 1".into()));
            }
        }
        if self.snapshots.contains(&0) {
            return Err(Error::Config("snapshot counts must be positive".into()));
        }
        for g in self.grid() {
            let scene = self.scene_for(&g)?;
            for arm in &self.arms {
                let a = arm.array.build(g.sensors).map_err(|e| Error::Config(e.to_string()))?;
                let m_ca = a.coarray().m_ca();
                let limit = match arm.method {
                    Method::Coarray => m_ca,
                    Method::Direct => a.len() - 1,
                };
                if scene.num_sources() > limit {
                    return Err(Error::Config(format!(
                        "arm {arm} with P = {} resolves at most {limit} sources, scene has {}",
                        g.sensors,
                        scene.num_sources()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Sweep grid in nested order P, L, SNR, separation, dynamic range.
    pub fn grid(&self) -> Vec<GridPoint> {
        let fixed = self.scene.as_ref();
        let snrs: Vec<f64> = if fixed.is_some() && self.snr_db.is_empty() {
            vec![f64::NAN]
        } else {
            self.snr_db.clone()
        };
        let mut out = Vec::new();
        for &sensors in &self.sensors {
            for &snapshots in &self.snapshots {
                for &snr_db in &snrs {
                    match fixed {
                        Some(scene) => out.push(GridPoint {
                            sensors,
                            snapshots,
                            snr_db,
                            separation: if scene.num_sources() > 1 {
                                min_separation(scene.omegas()).unwrap_or(0.5)
                            } else {
                                0.5
                            },
                            dynamic_range: scene.p_max() / scene.p_min(),
                        }),
                        None => {
                            for sep in &self.separation {
                                for &dynamic_range in &self.dynamic_range {
                                    out.push(GridPoint {
                                        sensors,
                                        snapshots,
                                        snr_db,
                                        separation: sep.evaluate(sensors),
                                        dynamic_range,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Sources at ω_k = omega_start + kΔ; the first one carries p_min times
    /// the dynamic range, the rest p_min. σ² = p_min·10^(−SNR/10).
    pub fn scene_for(&self, g: &GridPoint) -> Result<SourceScene> {
        let built = match &self.scene {
            Some(scene) if g.snr_db.is_nan() => Ok(scene.clone()),
            Some(scene) => scene.with_noise_power(noise_power_for_snr(scene.p_min(), g.snr_db)),
            None => {
                let s = self.num_sources;
                let omegas = (0..s).map(|k| self.omega_start + k as f64 * g.separation).collect();
                let mut powers = vec![self.p_min; s];
                powers[0] = self.p_min * g.dynamic_range;
                SourceScene::new(omegas, powers, noise_power_for_snr(self.p_min, g.snr_db))
            }
        };
        built.map_err(|e| Error::Config(format!("grid point {g:?}: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "custom"
arms = ["ula:coarray", "ula:direct", "nested:coarray"]
sensors = [8, 10]
snapshots = [50]
snr_db = [0.0, 10.0]
separation = ["2/P", 0.01, "1/P^1.5"]
num_sources = 2
trials = 3
base_seed = 42
"#;

    #[test]
    fn parses_and_builds_grid() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.arms.len(), 3);
        assert_eq!(cfg.dynamic_range, vec![1.0]);
        assert_eq!(cfg.omega_start, 0.1);
        let g = cfg.grid();
        assert_eq!(g.len(), 2 * 2 * 3);
        assert!((g[0].separation - 0.25).abs() < 1e-15);
        assert!((g[2].separation - 1.0 / 8f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn scene_follows_conventions() {
        let mut cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        cfg.p_min = 0.2;
        let g = GridPoint {
            sensors: 10,
            snapshots: 50,
            snr_db: 10.0,
            separation: 0.05,
            dynamic_range: 10.0,
        };
        let s = cfg.scene_for(&g).unwrap();
        assert_eq!(s.omegas(), &[0.1, 0.15000000000000002]);
        assert_eq!(s.powers(), &[2.0, 0.2]);
        assert!((s.noise_power() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn separation_expressions() {
        assert_eq!("2/P".parse::<Separation>().unwrap().evaluate(20), 0.1);
        assert_eq!("1/P^2".parse::<Separation>().unwrap().evaluate(20), 0.0025);
        assert_eq!("0.3".parse::<Separation>().unwrap(), Separation::Fixed(0.3));
        assert!("2/Q".parse::<Separation>().is_err());
        assert!("x".parse::<Separation>().is_err());
    }

    #[test]
    fn arm_parsing() {
        assert_eq!("ula:direct".parse::<Arm>().unwrap().to_string(), "ula:direct");
        assert!("nested:direct".parse::<Arm>().is_err());
        assert!("ula".parse::<Arm>().is_err());
    }

    #[test]
    fn validation_errors() {
        let bad = SAMPLE.replace("trials = 3", "trials = 0");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = SAMPLE.replace("snapshots = [50]", "snapshots = []");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = SAMPLE.replace("num_sources = 2", "num_sources = 9");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = format!("{SAMPLE}\nunknown_key = 1\n");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn fixed_scene_config() {
        let text = r#"
experiment = "custom"
arms = ["nested:coarray"]
sensors = [6]
snapshots = [100]
trials = 2
base_seed = 1
scene = { omegas = [0.1, 0.3], powers = [1.0, 2.0], noise_power = 0.5 }
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let g = cfg.grid();
        assert_eq!(g.len(), 1);
        assert!(g[0].snr_db.is_nan());
        assert!((g[0].separation - 0.2).abs() < 1e-15);
        assert_eq!(g[0].dynamic_range, 2.0);
        assert_eq!(cfg.scene_for(&g[0]).unwrap().noise_power(), 0.5);
    }

    #[test]
    fn load_reports_missing_file() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/missing.toml")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
