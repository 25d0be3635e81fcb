//! Closed-form finite-snapshot guarantees for Coarray ESPRIT.
//!
//! Absolute values depend on the unspecified Hanson–Wright constant `c`
//! and are meaningful up to that universal factor.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CoarrayStructure, SensorArray};
use crate::linalg::{hermitian_spectral_norm, singular_values};
use crate::metrics::min_separation;
use crate::estimation::{covariance_error, estimate_coarray_covariance};
use crate::rng::derive_seed;
use crate::signal::{
    sample_snapshots, steering_matrix, true_coarray_covariance, true_covariance, SourceScene,
};

/// Sub-Gaussian norm of an N(0, 1/2) variate.
pub const SUB_GAUSSIAN_K: f64 = 1.154_700_538_379_251_5; // 2/√3

pub fn default_c2() -> f64 {
    3.0 / (16.0 * SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// Hanson–Wright constant.
    pub c: f64,
    pub c2: f64,
    /// Separation slack, strictly above 1.
    pub gamma: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            c: 1.0,
            c2: default_c2(),
            gamma: 2.0,
        }
    }
}

impl BoundConstants {
    pub fn new(c: f64, c2: f64, gamma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
        }
        if !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::InvalidArgument(format!("c2 must be positive, got {c2}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self { c, c2, gamma })
    }

    /// c₁ = c / (2√2 K²).
    pub fn c1(&self) -> f64 {
        self.c / (2.0 * SQRT_2 * SUB_GAUSSIAN_K * SUB_GAUSSIAN_K)
    }

    pub fn c3(&self) -> f64 {
        1.0 / self.c1()
    }

    /// C' = γ/(γ−1).
    pub fn c_prime(&self) -> f64 {
        self.gamma / (self.gamma - 1.0)
    }

    /// C'_n = 5γ/(γ−1).
    pub fn c_prime_nested(&self) -> f64 {
        5.0 * self.c_prime()
    }
}

/// Parses overrides such as `c=0.5,gamma=3`.
impl FromStr for BoundConstants {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut k = Self::default();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got {item:?}")))?;
            let v: f64 = val
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number in {item:?}")))?;
            match key.trim() {
                "c" => k.c = v,
                "c2" => k.c2 = v,
                "gamma" => k.gamma = v,
                other => {
                    return Err(Error::InvalidArgument(format!("unknown constant {other:?}")))
                }
            }
        }
        Self::new(k.c, k.c2, k.gamma)
    }
}

/// (C_S, C'_S) = (2^{−S}/(4√2), 14π√2 S^{3/2} 4^S).
pub fn subspace_constants(s: usize) -> (f64, f64) {
    let sf = s as f64;
    let c_s = 2f64.powi(-(s as i32)) / (4.0 * SQRT_2);
    let c_s_prime = 14.0 * PI * SQRT_2 * sf.powf(1.5) * 4f64.powi(s as i32);
    (c_s, c_s_prime)
}

/// σ_S of the coarray steering matrix on {0..M_ca}.
pub fn coarray_sigma_s(coarray: &CoarrayStructure, scene: &SourceScene) -> Result<f64> {
    coarray.require_hole_free()?;
    let s = scene.num_sources();
    let rows = coarray.m_ca() + 1;
    if s > rows {
        return Err(Error::InvalidArgument(format!(
            "{s} sources exceed the {rows}-element contiguous coarray"
        )));
    }
    let u: Vec<i64> = (0..rows as i64).collect();
    Ok(singular_values(&steering_matrix(&u, scene.omegas()))[s - 1])
}

/// β = p_min σ_S²(A_U) − σ²; negative values are returned as-is.
pub fn eigen_gap(scene: &SourceScene, coarray: &CoarrayStructure) -> Result<f64> {
    let sig = coarray_sigma_s(coarray, scene)?;
    Ok(scene.p_min() * sig * sig - scene.noise_power())
}

/// ‖R_y‖₂ of the exact physical covariance.
pub fn covariance_norm(array: &SensorArray, scene: &SourceScene) -> f64 {
    hermitian_spectral_norm(&true_covariance(array, scene))
}

/// Scene- and geometry-dependent scalars every bound is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub num_sources: usize,
    pub num_sensors: usize,
    pub m_ca: usize,
    pub p_min: f64,
    pub beta: f64,
    pub sigma_s: f64,
    pub ry_norm: f64,
    pub delta_s: f64,
}

impl BoundInputs {
    pub fn evaluate(array: &SensorArray, scene: &SourceScene) -> Result<Self> {
        let coarray = array.coarray();
        let sigma_s = coarray_sigma_s(&coarray, scene)?;
        Ok(Self {
            num_sources: scene.num_sources(),
            num_sensors: array.len(),
            m_ca: coarray.m_ca(),
            p_min: scene.p_min(),
            beta: scene.p_min() * sigma_s * sigma_s - scene.noise_power(),
            sigma_s,
            ry_norm: covariance_norm(array, scene),
            delta_s: coarray.redundancy_coefficient()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QFactor {
    pub q: f64,
    pub q1: f64,
    pub l0: f64,
}

/// q = C'_S √(M_ca+1)/(β σ_S), q₁ = q‖R_y‖₂, L₀ = ‖R_y‖₂ √Δ/(C_S β).
pub fn q_factor(inp: &BoundInputs) -> Result<QFactor> {
    if !(inp.beta > 0.0) {
        return Err(Error::EigenGapViolation { beta: inp.beta });
    }
    let (c_s, c_s_prime) = subspace_constants(inp.num_sources);
    let q = c_s_prime * ((inp.m_ca + 1) as f64).sqrt() / (inp.beta * inp.sigma_s);
    Ok(QFactor {
        q,
        q1: q * inp.ry_norm,
        l0: inp.ry_norm * inp.delta_s.sqrt() / (c_s * inp.beta),
    })
}

/// 8 M_ca exp[−c₁ L min(c₂ε²/(‖R‖²Δ), ε/(‖R‖√Δ))], clipped to [0, 1].
pub fn tail_bound_from(
    epsilon: f64,
    snapshots: f64,
    m_ca: usize,
    ry_norm: f64,
    delta_s: f64,
    k: &BoundConstants,
) -> f64 {
    let quad = k.c2 * epsilon * epsilon / (ry_norm * ry_norm * delta_s);
    let lin = epsilon / (ry_norm * delta_s.sqrt());
    let v = 8.0 * m_ca as f64 * (-k.c1() * snapshots * quad.min(lin)).exp();
    v.clamp(0.0, 1.0)
}

/// Upper bound on P(‖T_ca − T̂_ca‖₂ ≥ ε) after L snapshots.
pub fn tail_bound(
    epsilon: f64,
    snapshots: usize,
    array: &SensorArray,
    scene: &SourceScene,
    k: &BoundConstants,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if snapshots == 0 {
        return Err(Error::InvalidArgument("need at least one snapshot".into()));
    }
    let c = array.coarray();
    let delta_s = c.redundancy_coefficient()?;
    Ok(tail_bound_from(
        epsilon,
        snapshots as f64,
        c.m_ca(),
        covariance_norm(array, scene),
        delta_s,
        k,
    ))
}

/// Which entry of the four-term max dominates the snapshot requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveTerm {
    /// q₁²Δ/(c₂ε²)
    Quadratic,
    /// q₁√Δ/ε
    Linear,
    /// L₀²/c₂
    OffsetSquared,
    /// L₀
    Offset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRequirement {
    /// c₃ ln(8M_ca/δ) · max(terms).
    pub value: f64,
    pub terms: [f64; 4],
    pub active: ActiveTerm,
    pub log_factor: f64,
    /// ε ≤ q·min(C_S β, p_min P √Δ/c₂), where the max reduces to its first term.
    pub corollary_regime: bool,
    pub corollary_epsilon_cap: f64,
    pub q: QFactor,
}

pub fn snapshot_requirement_from(
    epsilon: f64,
    delta: f64,
    inp: &BoundInputs,
    k: &BoundConstants,
) -> Result<SnapshotRequirement> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let qf = q_factor(inp)?;
    let sd = inp.delta_s.sqrt();
    let terms = [
        qf.q1 * qf.q1 * inp.delta_s / (k.c2 * epsilon * epsilon),
        qf.q1 * sd / epsilon,
        qf.l0 * qf.l0 / k.c2,
        qf.l0,
    ];
    let (idx, &max) = terms
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, t)| if *t > *acc.1 { (i, t) } else { acc });
    let active = [
        ActiveTerm::Quadratic,
        ActiveTerm::Linear,
        ActiveTerm::OffsetSquared,
        ActiveTerm::Offset,
    ][idx];
    let log_factor = (8.0 * inp.m_ca as f64 / delta).ln();
    let (c_s, _) = subspace_constants(inp.num_sources);
    let cap = qf.q * (c_s * inp.beta).min(inp.p_min * inp.num_sensors as f64 * sd / k.c2);
    Ok(SnapshotRequirement {
        value: k.c3() * log_factor * max,
        terms,
        active,
        log_factor,
        corollary_regime: epsilon <= cap,
        corollary_epsilon_cap: cap,
        q: qf,
    })
}

/// Snapshots sufficient for md ≤ ε with probability ≥ 1 − δ.
pub fn snapshot_requirement(
    epsilon: f64,
    delta: f64,
    array: &SensorArray,
    scene: &SourceScene,
    k: &BoundConstants,
) -> Result<SnapshotRequirement> {
    snapshot_requirement_from(epsilon, delta, &BoundInputs::evaluate(array, scene)?, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Ula,
    Nested,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecializedParams {
    pub regime: Regime,
    pub sensors: usize,
    pub num_sources: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub noise_power: f64,
    pub min_separation: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl SpecializedParams {
    pub fn from_scene(
        regime: Regime,
        sensors: usize,
        scene: &SourceScene,
        epsilon: f64,
        delta: f64,
    ) -> Self {
        let sep = if scene.num_sources() > 1 {
            min_separation(scene.omegas()).unwrap_or(0.5)
        } else {
            0.5
        };
        Self {
            regime,
            sensors,
            num_sources: scene.num_sources(),
            p_min: scene.p_min(),
            p_max: scene.p_max(),
            noise_power: scene.noise_power(),
            min_separation: sep,
            epsilon,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preconditions {
    pub separation: bool,
    pub snr: bool,
    pub epsilon: bool,
    pub sensors: bool,
}

impl Preconditions {
    pub fn all(&self) -> bool {
        self.separation && self.snr && self.epsilon && self.sensors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecializedBound {
    pub value: f64,
    /// C_ula or C_nest.
    pub geometry_constant: f64,
    pub epsilon_cap: f64,
    pub preconditions: Preconditions,
}

/// Separation-regime snapshot bound for a ULA or a balanced nested array.
/// Violated preconditions are flagged, never raised.
pub fn specialized_bounds(p: &SpecializedParams, k: &BoundConstants) -> SpecializedBound {
    let (c_s, c_s_prime) = subspace_constants(p.num_sources);
    let pf = p.sensors as f64;
    let sf = p.num_sources as f64;
    let dyn_sq = (p.p_max / p.p_min).powi(2);
    let mix = (sf + p.noise_power / p.p_max).powi(2);
    let snr = if p.noise_power > 0.0 { p.p_min / p.noise_power } else { f64::INFINITY };
    let eps_sq = p.epsilon * p.epsilon;
    match p.regime {
        Regime::Ula => {
            let cp = k.c_prime();
            let cu = 8.0 * c_s_prime.powi(2) * cp.powi(3) * (k.c3() / k.c2) * mix;
            let cap = c_s * c_s_prime;
            SpecializedBound {
                value: cu / eps_sq * dyn_sq * (8.0 * pf / p.delta).ln().powi(2),
                geometry_constant: cu,
                epsilon_cap: cap,
                preconditions: Preconditions {
                    separation: p.min_separation >= k.gamma / pf,
                    snr: snr > 2.0 * cp / pf,
                    epsilon: p.epsilon > 0.0 && p.epsilon <= cap,
                    sensors: p.sensors >= 3,
                },
            }
        }
        Regime::Nested => {
            let cn = k.c_prime_nested();
            let cnest = 4.0 * c_s_prime.powi(2) * cn.powi(3) * (k.c3() / k.c2) * mix;
            let cap = (0.2f64).sqrt() * c_s * c_s_prime;
            SpecializedBound {
                value: cnest / eps_sq * dyn_sq * (8.0 * pf * pf / p.delta).ln(),
                geometry_constant: cnest,
                epsilon_cap: cap,
                preconditions: Preconditions {
                    separation: p.min_separation >= 5.0 * k.gamma / (pf * pf),
                    snr: snr > 2.0 * cn / (pf * pf),
                    epsilon: p.epsilon > 0.0 && p.epsilon <= cap,
                    sensors: p.sensors >= 3,
                },
            }
        }
    }
}

/// σ_S² of the k-row Vandermonde matrix with nodes e^{j2πω}.
pub fn vandermonde_sigma_sq(k: usize, omegas: &[f64]) -> f64 {
    let rows: Vec<i64> = (0..k as i64).collect();
    let s = singular_values(&steering_matrix(&rows, omegas));
    let last = s[omegas.len().min(k) - 1];
    last * last
}

/// k/C' whenever the nodes are γ/k-separated and S ≤ k.
pub fn vandermonde_floor(k: usize, omegas: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
    }
    if omegas.is_empty() || omegas.len() > k {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= S <= k, got S = {} and k = {k}",
            omegas.len()
        )));
    }
    let required = gamma / k as f64;
    if omegas.len() > 1 {
        let sep = min_separation(omegas)?;
        if sep < required {
            return Err(Error::SeparationViolation {
                separation: sep,
                required,
            });
        }
    }
    Ok(k as f64 * (gamma - 1.0) / gamma)
}

/// P²/C'_n for the balanced nested array when Δ_min ≥ 5γ/P² and S ≤ P²/5.
pub fn nested_floor(sensors: usize, omegas: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
    }
    let p2 = (sensors * sensors) as f64;
    if sensors < 3 || omegas.is_empty() || omegas.len() as f64 > p2 / 5.0 {
        return Err(Error::InvalidArgument(format!(
            "need P >= 3 and 1 <= S <= P^2/5, got P = {sensors}, S = {}",
            omegas.len()
        )));
    }
    let required = 5.0 * gamma / p2;
    if omegas.len() > 1 {
        let sep = min_separation(omegas)?;
        if sep < required {
            return Err(Error::SeparationViolation {
                separation: sep,
                required,
            });
        }
    }
    Ok(p2 * (gamma - 1.0) / (5.0 * gamma))
}

/// Everything the `bounds` command reports for one scene and geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub scale: &'static str,
    pub constants: ReportedConstants,
    pub epsilon: f64,
    pub delta: f64,
    pub m_ca: usize,
    pub beta: f64,
    pub eigen_gap_ok: bool,
    pub sigma_s_coarray: f64,
    /// Lemma-style certificate (M_ca+1)/C' when the scene is γ/(M_ca+1)-separated.
    pub sigma_s_sq_floor: Option<f64>,
    pub delta_s: f64,
    pub ry_norm: f64,
    pub ry_norm_bracket: [f64; 2],
    #[serde(rename = "C_S")]
    pub c_s: f64,
    #[serde(rename = "C_S_prime")]
    pub c_s_prime: f64,
    pub q: Option<f64>,
    pub q1: Option<f64>,
    #[serde(rename = "L0")]
    pub l0: Option<f64>,
    #[serde(rename = "L_required")]
    pub l_required: Option<f64>,
    pub active_term: Option<ActiveTerm>,
    pub corollary_regime: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportedConstants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub gamma: f64,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta={:.6e} delta_s={:.6e}", self.beta, self.delta_s)?;
        if let Some(l) = self.l_required {
            write!(f, " L_required={l:.6e}")?;
        }
        Ok(())
    }
}

pub fn bound_report(
    array: &SensorArray,
    scene: &SourceScene,
    epsilon: f64,
    delta: f64,
    k: &BoundConstants,
) -> Result<BoundReport> {
    let inp = BoundInputs::evaluate(array, scene)?;
    let (c_s, c_s_prime) = subspace_constants(inp.num_sources);
    let rows = inp.m_ca + 1;
    let floor = vandermonde_floor(rows, scene.omegas(), k.gamma).ok();
    let req = if inp.beta > 0.0 {
        Some(snapshot_requirement_from(epsilon, delta, &inp, k)?)
    } else {
        None
    };
    let pf = inp.num_sensors as f64;
    Ok(BoundReport {
        scale: "up to universal constant c",
        constants: ReportedConstants {
            c: k.c,
            c1: k.c1(),
            c2: k.c2,
            c3: k.c3(),
            gamma: k.gamma,
        },
        epsilon,
        delta,
        m_ca: inp.m_ca,
        beta: inp.beta,
        eigen_gap_ok: inp.beta > 0.0,
        sigma_s_coarray: inp.sigma_s,
        sigma_s_sq_floor: floor,
        delta_s: inp.delta_s,
        ry_norm: inp.ry_norm,
        ry_norm_bracket: [
            scene.p_min() * pf,
            scene.p_max() * pf * inp.num_sources as f64 + scene.noise_power(),
        ],
        c_s,
        c_s_prime,
        q: req.as_ref().map(|r| r.q.q),
        q1: req.as_ref().map(|r| r.q.q1),
        l0: req.as_ref().map(|r| r.q.l0),
        l_required: req.as_ref().map(|r| r.value),
        active_term: req.as_ref().map(|r| r.active),
        corollary_regime: req.as_ref().map(|r| r.corollary_regime),
    })
}

/// Empirical exceedance count for one (geometry, scene, ε, L) configuration,
/// kept with the quantities the tail bound needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailObservation {
    pub epsilon: f64,
    pub snapshots: usize,
    pub m_ca: usize,
    pub ry_norm: f64,
    pub delta_s: f64,
    pub exceedances: usize,
    pub trials: usize,
}

impl TailObservation {
    pub fn frequency(&self) -> f64 {
        self.exceedances as f64 / self.trials as f64
    }

    /// Binomial standard error of the observed frequency.
    pub fn standard_error(&self) -> f64 {
        let p = self.frequency();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn bound(&self, k: &BoundConstants) -> f64 {
        tail_bound_from(
            self.epsilon,
            self.snapshots as f64,
            self.m_ca,
            self.ry_norm,
            self.delta_s,
            k,
        )
    }

    /// The bound does not undercut the observed frequency by more than
    /// `z` standard errors.
    pub fn is_sound(&self, k: &BoundConstants, z: f64) -> bool {
        self.frequency() - self.bound(k) <= z * self.standard_error()
    }
}

/// ‖T_ca − T̂_ca‖₂ for `trials` seeded draws of L snapshots. Trial t uses
/// seed `derive_seed(base_seed, [t])`.
pub fn sample_covariance_errors(
    array: &SensorArray,
    scene: &SourceScene,
    snapshots: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    let coarray = array.coarray();
    let exact = true_coarray_covariance(&coarray, scene)?;
    (0..trials)
        .map(|t| {
            let y = sample_snapshots(array, scene, snapshots, derive_seed(base_seed, &[t as u64]))?;
            covariance_error(&exact, &estimate_coarray_covariance(&y, &coarray, array)?)
        })
        .collect()
}

impl TailObservation {
    /// Scores previously sampled errors against ε.
    pub fn from_errors(
        errors: &[f64],
        epsilon: f64,
        snapshots: usize,
        array: &SensorArray,
        scene: &SourceScene,
    ) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        let coarray = array.coarray();
        Ok(Self {
            epsilon,
            snapshots,
            m_ca: coarray.m_ca(),
            ry_norm: covariance_norm(array, scene),
            delta_s: coarray.redundancy_coefficient()?,
            exceedances: errors.iter().filter(|&&e| e >= epsilon).count(),
            trials: errors.len(),
        })
    }
}

/// Counts ‖T_ca − T̂_ca‖₂ ≥ ε over `trials` seeded draws of L snapshots.
pub fn observe_tail(
    array: &SensorArray,
    scene: &SourceScene,
    epsilon: f64,
    snapshots: usize,
    trials: usize,
    base_seed: u64,
) -> Result<TailObservation> {
    let errors = sample_covariance_errors(array, scene, snapshots, trials, base_seed)?;
    TailObservation::from_errors(&errors, epsilon, snapshots, array, scene)
}

/// Largest c in (0, c_max] keeping every observation sound at `z` standard
/// errors, holding c₂ and γ from `base`. The bound shrinks as c grows, so
/// the sound set is an interval and bisection finds its edge. Returns `None`
/// when even c → 0 is unsound, which only happens for a frequency above 1
/// plus slack.
pub fn calibrate_c(
    observations: &[TailObservation],
    base: &BoundConstants,
    c_max: f64,
    z: f64,
) -> Result<Option<f64>> {
    let sound = |c: f64| -> Result<bool> {
        let k = BoundConstants::new(c, base.c2, base.gamma)?;
        Ok(observations.iter().all(|o| o.is_sound(&k, z)))
    };
    if sound(c_max)? {
        return Ok(Some(c_max));
    }
    let (mut lo, mut hi) = (0.0, c_max);
    if !sound(c_max * 1e-12)? {
        return Ok(None);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        if sound(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo.max(c_max * 1e-12)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn observation(exceedances: usize, epsilon: f64) -> TailObservation {
        TailObservation {
            epsilon,
            snapshots: 500,
            m_ca: 5,
            ry_norm: 4.0,
            delta_s: 4.75,
            exceedances,
            trials: 200,
        }
    }

    #[test]
    fn calibration_finds_the_soundness_edge() {
        let k = BoundConstants::default();
        // a frequency of one at a tiny ε is sound only while the bound stays clipped at 1
        let obs = [observation(200, 0.05)];
        let c = calibrate_c(&obs, &k, 1e6, 3.0).unwrap().unwrap();
        let at = |c: f64| obs[0].bound(&BoundConstants::new(c, k.c2, k.gamma).unwrap());
        assert_eq!(at(c), 1.0);
        assert!(at(c * (1.0 + 1e-9)) < 1.0);
        // no exceedances: every c is sound
        assert_eq!(calibrate_c(&[observation(0, 0.05)], &k, 50.0, 3.0).unwrap(), Some(50.0));
    }

    #[test]
    fn observed_tail_is_deterministic_and_counts_large_eps_as_zero() {
        let a = SensorArray::nested(2, 2).unwrap();
        let scene = SourceScene::new(vec![0.2], vec![1.0], 0.5).unwrap();
        let o1 = observe_tail(&a, &scene, 0.3, 100, 40, 9).unwrap();
        let o2 = observe_tail(&a, &scene, 0.3, 100, 40, 9).unwrap();
        assert_eq!(o1, o2);
        assert!(o1.exceedances > 0 && o1.exceedances < 40, "{o1:?}");
        assert_eq!(observe_tail(&a, &scene, 1e3, 100, 40, 9).unwrap().exceedances, 0);
        assert_eq!(observe_tail(&a, &scene, 0.0, 10, 5, 9).unwrap().exceedances, 5);
    }

    #[test]
    fn default_constants() {
        let k = BoundConstants::default();
        assert!(rel(k.c2, 0.132_582_521_472_477_65) < 1e-15);
        // c₁ = 3/(8√2) when c = 1
        assert!(rel(k.c1(), 0.265_165_042_944_955_3) < 1e-14);
        assert!(rel(k.c3(), 3.771_236_166_328_254) < 1e-14);
        assert_eq!(k.c_prime(), 2.0);
        assert_eq!(k.c_prime_nested(), 10.0);
    }

    #[test]
    fn constants_parse_and_validate() {
        let k: BoundConstants = "c=0.5, gamma=3".parse().unwrap();
        assert_eq!((k.c, k.gamma), (0.5, 3.0));
        assert!("gamma=1".parse::<BoundConstants>().is_err());
        assert!("c=-1".parse::<BoundConstants>().is_err());
        assert!("foo=1".parse::<BoundConstants>().is_err());
    }

    #[test]
    fn subspace_constant_values() {
        let (c1, p1) = subspace_constants(1);
        assert!(rel(c1, 1.0 / (8.0 * SQRT_2)) < 1e-15);
        assert!(rel(p1, 56.0 * SQRT_2 * PI) < 1e-15);
        let (c2, _) = subspace_constants(2);
        assert!(rel(c2, 1.0 / (16.0 * SQRT_2)) < 1e-15);
    }

    #[test]
    fn single_source_gap() {
        let a = SensorArray::nested(3, 2).unwrap();
        let c = a.coarray();
        let scene = SourceScene::new(vec![0.31], vec![1.5], 0.4).unwrap();
        let beta = eigen_gap(&scene, &c).unwrap();
        assert!(rel(beta, 1.5 * (c.m_ca() + 1) as f64 - 0.4) < 1e-12);
    }

    #[test]
    fn negative_gap_is_reported_but_q_refuses() {
        let a = SensorArray::ula(4).unwrap();
        let scene = SourceScene::new(vec![0.1, 0.12], vec![1.0, 1.0], 5.0).unwrap();
        let inp = BoundInputs::evaluate(&a, &scene).unwrap();
        assert!(inp.beta < 0.0);
        assert!(matches!(q_factor(&inp), Err(Error::EigenGapViolation { .. })));
        let r = bound_report(&a, &scene, 0.01, 0.1, &BoundConstants::default()).unwrap();
        assert!(!r.eigen_gap_ok);
        assert!(r.l_required.is_none());
    }

    #[test]
    fn q_for_unit_source_on_ula() {
        let p = 9;
        let a = SensorArray::ula(p).unwrap();
        let scene = SourceScene::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let qf = q_factor(&BoundInputs::evaluate(&a, &scene).unwrap()).unwrap();
        let (_, c1p) = subspace_constants(1);
        assert!(rel(qf.q, c1p / p as f64) < 1e-12);
    }

    #[test]
    fn q_decreases_with_weakest_power() {
        let a = SensorArray::nested(3, 3).unwrap();
        let lo = SourceScene::new(vec![0.1, 0.4], vec![1.0, 2.0], 0.5).unwrap();
        let hi = SourceScene::new(vec![0.1, 0.4], vec![1.5, 2.0], 0.5).unwrap();
        let mut ilo = BoundInputs::evaluate(&a, &lo).unwrap();
        let ihi = BoundInputs::evaluate(&a, &hi).unwrap();
        // hold σ_S fixed and vary only p_min through β
        ilo.sigma_s = ihi.sigma_s;
        ilo.beta = ilo.p_min * ilo.sigma_s.powi(2) - 0.5;
        assert!(q_factor(&ihi).unwrap().q < q_factor(&ilo).unwrap().q);
    }

    #[test]
    fn tail_bound_edge_cases() {
        let a = SensorArray::nested(2, 2).unwrap();
        let scene = SourceScene::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let k = BoundConstants::default();
        assert_eq!(tail_bound(0.0, 100, &a, &scene, &k).unwrap(), 1.0);
        assert!(tail_bound(-1.0, 100, &a, &scene, &k).is_err());
        assert!(tail_bound(1.0, 0, &a, &scene, &k).is_err());
    }

    #[test]
    fn tail_bound_frozen_value() {
        // nested(2,2), S=1, ω=0, p=1, σ²=0: M_ca=5, ‖R_y‖₂=4, Δ=4.75.
        // Evaluated independently: 40·exp(−(3/(8√2))·20000·(3/(16√2))/(16·4.75)).
        let a = SensorArray::nested(2, 2).unwrap();
        let scene = SourceScene::new(vec![0.0], vec![1.0], 0.0).unwrap();
        let v = tail_bound(1.0, 20_000, &a, &scene, &BoundConstants::default()).unwrap();
        assert!(rel(v, TAIL_FROZEN) < 1e-9, "{v:e}");
    }

    const TAIL_FROZEN: f64 = 3.838_148_144_548_632e-3;

    #[test]
    fn halving_epsilon_quadruples_quadratic_requirement() {
        let a = SensorArray::nested(4, 4).unwrap();
        let scene = SourceScene::new(vec![0.1, 0.35], vec![1.0, 1.0], 0.1).unwrap();
        let k = BoundConstants::default();
        let r1 = snapshot_requirement(1e-3, 0.1, &a, &scene, &k).unwrap();
        let r2 = snapshot_requirement(5e-4, 0.1, &a, &scene, &k).unwrap();
        assert!(r1.corollary_regime && r2.corollary_regime);
        assert_eq!(r1.active, ActiveTerm::Quadratic);
        assert!(rel(r2.value / r1.value, 4.0) < 1e-12);
    }

    #[test]
    fn requirement_checks_arguments() {
        let a = SensorArray::nested(2, 2).unwrap();
        let scene = SourceScene::new(vec![0.1], vec![1.0], 0.1).unwrap();
        let k = BoundConstants::default();
        assert!(snapshot_requirement(0.0, 0.1, &a, &scene, &k).is_err());
        assert!(snapshot_requirement(0.1, 1.0, &a, &scene, &k).is_err());
    }

    #[test]
    fn vandermonde_examples() {
        let f = vandermonde_floor(16, &[0.0, 0.25], 2.0).unwrap();
        assert_eq!(f, 8.0);
        assert!(vandermonde_sigma_sq(16, &[0.0, 0.25]) >= 8.0);
        // orthogonal DFT columns reach σ² = k
        let s = vandermonde_sigma_sq(16, &[0.0, 0.25, 0.5]);
        assert!((s - 16.0).abs() < 1e-10);
        // largest admissible γ for a half-turn spacing is k/2
        assert_eq!(vandermonde_floor(16, &[0.0, 0.5], 8.0).unwrap(), 14.0);
        assert!(matches!(
            vandermonde_floor(16, &[0.0, 0.1], 2.0),
            Err(Error::SeparationViolation { .. })
        ));
    }

    #[test]
    fn nested_floor_against_svd() {
        let p = 10;
        let gamma = 2.0;
        let a = SensorArray::nested_balanced(p).unwrap();
        let c = a.coarray();
        let sep = 10.0 * gamma / (p * p) as f64;
        let scene = SourceScene::new(vec![0.1, 0.1 + sep, 0.1 + 2.0 * sep], vec![1.0; 3], 0.1).unwrap();
        let floor = nested_floor(p, scene.omegas(), gamma).unwrap();
        assert_eq!(floor, 10.0);
        let sig = coarray_sigma_s(&c, &scene).unwrap();
        assert!(sig * sig >= floor);
    }

    #[test]
    fn specialized_flags() {
        let k = BoundConstants::default();
        let p = 16;
        let scene = SourceScene::new(vec![0.1, 0.1 + 2.0 / p as f64], vec![1.0, 1.0], 0.1).unwrap();
        let ula = specialized_bounds(&SpecializedParams::from_scene(Regime::Ula, p, &scene, 1e-3, 0.1), &k);
        assert!(ula.preconditions.all());
        let close = SourceScene::new(vec![0.1, 0.1 + 0.75 / p as f64], vec![1.0, 1.0], 0.1).unwrap();
        let bad = specialized_bounds(&SpecializedParams::from_scene(Regime::Ula, p, &close, 1e-3, 0.1), &k);
        assert!(!bad.preconditions.separation);
        let nest = specialized_bounds(&SpecializedParams::from_scene(Regime::Nested, p, &close, 1e-3, 0.1), &k);
        assert!(nest.preconditions.separation);
        let big_eps = specialized_bounds(&SpecializedParams::from_scene(Regime::Nested, p, &close, 1e3, 0.1), &k);
        assert!(!big_eps.preconditions.epsilon);
    }

    #[test]
    fn equal_powers_drop_dynamic_range() {
        let k = BoundConstants::default();
        let mut p = SpecializedParams {
            regime: Regime::Nested,
            sensors: 12,
            num_sources: 2,
            p_min: 1.0,
            p_max: 1.0,
            noise_power: 0.0,
            min_separation: 0.2,
            epsilon: 1e-2,
            delta: 0.05,
        };
        let b = specialized_bounds(&p, &k);
        let expect = b.geometry_constant / 1e-4 * (8.0 * 144.0 / 0.05f64).ln();
        assert!(rel(b.value, expect) < 1e-12);
        p.p_max = 2.0;
        assert!(rel(specialized_bounds(&p, &k).value / b.value, 4.0) < 1e-12);
    }

    #[test]
    fn report_serializes() {
        let a = SensorArray::nested(3, 3).unwrap();
        let scene = SourceScene::new(vec![0.1, 0.3], vec![1.0, 1.0], 0.1).unwrap();
        let r = bound_report(&a, &scene, 1e-3, 0.1, &BoundConstants::default()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["beta", "sigma_s_coarray", "q", "q1", "L0", "delta_s", "L_required", "C_S", "C_S_prime"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(r.ry_norm_bracket[0] <= r.ry_norm && r.ry_norm <= r.ry_norm_bracket[1]);
    }

    proptest! {
        #[test]
        fn gap_sign_matches_definition(w in 0.0..1.0f64, d in 0.05..0.45f64, p in 0.1..3.0f64, s2 in 0.0..10.0f64) {
            let a = SensorArray::nested(3, 2).unwrap();
            let scene = SourceScene::new(vec![w, w + d], vec![p, 2.0 * p], s2).unwrap();
            let beta = eigen_gap(&scene, &a.coarray()).unwrap();
            let sig = coarray_sigma_s(&a.coarray(), &scene).unwrap();
            prop_assert_eq!(beta > 0.0, p * sig * sig > s2);
        }

        #[test]
        fn tail_bound_monotone(e1 in 0.01..5.0f64, e2 in 0.01..5.0f64, l1 in 1usize..5000, l2 in 1usize..5000) {
            let a = SensorArray::nested(3, 3).unwrap();
            let scene = SourceScene::new(vec![0.1, 0.3], vec![1.0, 0.5], 0.2).unwrap();
            let k = BoundConstants::default();
            let (elo, ehi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let (llo, lhi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(tail_bound(ehi, llo, &a, &scene, &k).unwrap() <= tail_bound(elo, llo, &a, &scene, &k).unwrap());
            prop_assert!(tail_bound(elo, lhi, &a, &scene, &k).unwrap() <= tail_bound(elo, llo, &a, &scene, &k).unwrap());
        }

        #[test]
        fn requirement_equals_independent_recomputation(
            w in 0.0..1.0f64, d in 0.1..0.4f64, pw in 0.2..2.0f64, s2 in 0.0..0.5f64, eps in 1e-4..10.0f64
        ) {
            let a = SensorArray::nested(3, 3).unwrap();
            let scene = SourceScene::new(vec![w, w + d], vec![pw, 1.0], s2).unwrap();
            let k = BoundConstants::default();
            let inp = BoundInputs::evaluate(&a, &scene).unwrap();
            prop_assume!(inp.beta > 0.0);
            let r = snapshot_requirement_from(eps, 0.05, &inp, &k).unwrap();
            // direct transcription of the four-term formula
            let cs = 2f64.powi(-2) / (4.0 * 2f64.sqrt());
            let csp = 14.0 * PI * 2f64.sqrt() * 2f64.powf(1.5) * 16.0;
            let q = csp * ((inp.m_ca + 1) as f64).sqrt() / (inp.beta * inp.sigma_s);
            let q1 = q * inp.ry_norm;
            let l0 = inp.ry_norm * inp.delta_s.sqrt() / (cs * inp.beta);
            let c2 = 3.0 / (16.0 * 2f64.sqrt());
            let c3 = 2.0 * 2f64.sqrt() * (4.0 / 3.0);
            let m = (q1 * q1 * inp.delta_s / (c2 * eps * eps))
                .max(q1 * inp.delta_s.sqrt() / eps)
                .max(l0 * l0 / c2)
                .max(l0);
            let expect = c3 * (8.0 * inp.m_ca as f64 / 0.05).ln() * m;
            prop_assert!(rel(r.value, expect) < 1e-9);
            if r.corollary_regime {
                prop_assert_eq!(r.active, ActiveTerm::Quadratic);
            }
        }
    }
}
