//! Source scenes, steering matrices, exact covariances and snapshot synthesis.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::CoarrayCovariance;
use crate::geometry::{CoarrayStructure, SensorArray};
use crate::metrics::torus_distance;
use crate::rng::rng_from_seed;
use crate::{CMatrix, C64};

/// Uncorrelated point sources on the frequency torus plus white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScene")]
pub struct SourceScene {
    omegas: Vec<f64>,
    powers: Vec<f64>,
    noise_power: f64,
}

#[derive(Deserialize)]
struct RawScene {
    omegas: Vec<f64>,
    powers: Vec<f64>,
    noise_power: f64,
}

impl TryFrom<RawScene> for SourceScene {
    type Error = Error;

    fn try_from(r: RawScene) -> Result<Self> {
        SourceScene::new(r.omegas, r.powers, r.noise_power)
    }
}

impl SourceScene {
    /// Frequencies are wrapped onto [0, 1).
    pub fn new(omegas: Vec<f64>, powers: Vec<f64>, noise_power: f64) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidScene("need at least one source".into()));
        }
        if omegas.len() != powers.len() {
            return Err(Error::InvalidScene(format!(
                "{} frequencies but {} powers",
                omegas.len(),
                powers.len()
            )));
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidScene("non-finite frequency".into()));
        }
        if powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidScene("source powers must be positive".into()));
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidScene("noise power must be non-negative".into()));
        }
        let omegas: Vec<f64> = omegas.into_iter().map(wrap_torus).collect();
        for i in 0..omegas.len() {
            for j in (i + 1)..omegas.len() {
                if torus_distance(omegas[i], omegas[j]) < 1e-12 {
                    return Err(Error::InvalidScene(format!(
                        "frequencies {} and {} coincide modulo 1",
                        omegas[i], omegas[j]
                    )));
                }
            }
        }
        Ok(Self {
            omegas,
            powers,
            noise_power,
        })
    }

    /// DOAs in degrees, converted with ω = sin(θ)/2 mod 1.
    pub fn from_degrees(thetas_deg: &[f64], powers: Vec<f64>, noise_power: f64) -> Result<Self> {
        let omegas = thetas_deg
            .iter()
            .map(|t| t.to_radians().sin() / 2.0)
            .collect();
        Self::new(omegas, powers, noise_power)
    }

    /// `count` sources at `start + k·spacing`, all with power `power`.
    pub fn equispaced(count: usize, start: f64, spacing: f64, power: f64, noise_power: f64) -> Result<Self> {
        let omegas = (0..count).map(|k| start + k as f64 * spacing).collect();
        Self::new(omegas, vec![power; count], noise_power)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn num_sources(&self) -> usize {
        self.omegas.len()
    }

    pub fn p_min(&self) -> f64 {
        self.powers.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn p_max(&self) -> f64 {
        self.powers.iter().copied().fold(0.0, f64::max)
    }

    /// Same sources with a different noise floor.
    pub fn with_noise_power(&self, noise_power: f64) -> Result<Self> {
        Self::new(self.omegas.clone(), self.powers.clone(), noise_power)
    }

    /// SNR relative to the weakest source, 10·log10(p_min/σ²).
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.p_min() / self.noise_power).log10()
    }
}

/// Noise power giving `snr_db` relative to `p_min`.
pub fn noise_power_for_snr(p_min: f64, snr_db: f64) -> f64 {
    p_min * 10f64.powf(-snr_db / 10.0)
}

pub fn wrap_torus(w: f64) -> f64 {
    let r = w.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Entry (p, i) = exp(j·2π·d_p·ω_i).
pub fn steering_matrix(positions: &[i64], omegas: &[f64]) -> CMatrix {
    CMatrix::from_fn(positions.len(), omegas.len(), |p, i| {
        // reduce the phase on the torus before scaling to keep it small
        let phase = (positions[p] as f64 * omegas[i]).rem_euclid(1.0);
        C64::from_polar(1.0, 2.0 * PI * phase)
    })
}

/// R_y = A P Aᴴ + σ² I.
pub fn true_covariance(array: &SensorArray, scene: &SourceScene) -> CMatrix {
    let a = steering_matrix(array.positions(), scene.omegas());
    let mut ap = a.clone();
    for (i, &p) in scene.powers().iter().enumerate() {
        ap.column_mut(i).scale_mut(p);
    }
    let mut r = &ap * a.adjoint();
    for k in 0..array.len() {
        r[(k, k)] += C64::new(scene.noise_power(), 0.0);
    }
    r
}

/// Exact coarray lag t_i = Σ_k p_k e^{j2π i ω_k} + σ² δ_i.
pub fn coarray_lag(scene: &SourceScene, lag: i64) -> C64 {
    let mut t: C64 = scene
        .omegas()
        .iter()
        .zip(scene.powers())
        .map(|(&w, &p)| C64::from_polar(p, 2.0 * PI * (lag as f64 * w).rem_euclid(1.0)))
        .sum();
    if lag == 0 {
        t += C64::new(scene.noise_power(), 0.0);
    }
    t
}

/// T_ca = A_U P A_Uᴴ + σ² I on the contiguous segment U = {0..M_ca}.
pub fn true_coarray_covariance(
    coarray: &CoarrayStructure,
    scene: &SourceScene,
) -> Result<CoarrayCovariance> {
    coarray.require_hole_free()?;
    let m = coarray.m_ca() as i64;
    let t: Vec<C64> = (-m..=m).map(|i| coarray_lag(scene, i)).collect();
    let mut cov = CoarrayCovariance::from_lags(t, crate::estimation::Provenance::Exact)?;
    cov.force_real_zero_lag();
    Ok(cov)
}

/// Complex array output, P rows by L snapshot columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: CMatrix,
    pub seed: u64,
}

impl SnapshotMatrix {
    pub fn num_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

fn standard_complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(h * re, h * im)
}

/// Draws L i.i.d. snapshots y(t) = A x(t) + n(t) with x ~ CN(0, diag(p)) and
/// n ~ CN(0, σ² I), so y ~ CN(0, R_y). Real and imaginary parts are drawn
/// as independent N(0, 1/2) variates scaled by the standard deviation.
pub fn sample_snapshots(
    array: &SensorArray,
    scene: &SourceScene,
    snapshots: usize,
    seed: u64,
) -> Result<SnapshotMatrix> {
    if snapshots == 0 {
        return Err(Error::InvalidArgument("need at least one snapshot".into()));
    }
    let mut rng = rng_from_seed(seed);
    let a = steering_matrix(array.positions(), scene.omegas());
    let p = array.len();
    let s = scene.num_sources();
    let amp: Vec<f64> = scene.powers().iter().map(|p| p.sqrt()).collect();
    let noise_amp = scene.noise_power().sqrt();
    let mut x = CMatrix::zeros(s, snapshots);
    let mut noise = CMatrix::zeros(p, snapshots);
    for t in 0..snapshots {
        for k in 0..s {
            x[(k, t)] = standard_complex_normal(&mut rng) * amp[k];
        }
        for k in 0..p {
            noise[(k, t)] = standard_complex_normal(&mut rng) * noise_amp;
        }
    }
    Ok(SnapshotMatrix {
        data: a * x + noise,
        seed,
    })
}
