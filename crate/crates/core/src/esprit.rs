//! ESPRIT on a Hermitian covariance: signal subspace, rotation matrix
//! Ψ = U₀†U₁ and frequencies from the phases of its eigenvalues.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{estimate_coarray_covariance, sample_covariance, CoarrayCovariance};
use crate::geometry::{CoarrayStructure, SensorArray};
use crate::linalg::{complex_eigenvalues, hermitian_eigen, pinv_full_rank};
use crate::signal::SnapshotMatrix;
use crate::{CMatrix, C64};

/// Relative singular-value cutoff for the pseudo-inverse of U₀.
pub const PINV_REL_CUTOFF: f64 = 1e-10;
/// λ_S − λ_{S+1} at or below this fraction of λ₁ flags a degenerate gap.
pub const EIGEN_GAP_REL_TOL: f64 = 1e-9;

/// Top-S eigenpairs of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SignalSubspace {
    pub basis: CMatrix,
    /// S largest eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// λ_{S+1}, absent when S equals the matrix dimension.
    pub next_eigenvalue: Option<f64>,
    pub gap_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub signal_eigenvalues: Vec<f64>,
    pub next_eigenvalue: Option<f64>,
    pub gap_degenerate: bool,
    /// |λ̂_i| for each Ψ eigenvalue, in `omegas_hat` order.
    pub psi_moduli: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Estimated frequencies in [0, 1), ascending.
    pub omegas_hat: Vec<f64>,
    /// Ψ eigenvalues paired with `omegas_hat`.
    pub psi_eigenvalues: Vec<C64>,
    pub diagnostics: Diagnostics,
}

impl Serialize for DoaEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let psi: Vec<[f64; 2]> = self.psi_eigenvalues.iter().map(|z| [z.re, z.im]).collect();
        let mut st = s.serialize_struct("DoaEstimate", 3)?;
        st.serialize_field("omegas_hat", &self.omegas_hat)?;
        st.serialize_field("psi_eigenvalues", &psi)?;
        st.serialize_field("diagnostics", &self.diagnostics)?;
        st.end()
    }
}

/// Dominant `s`-dimensional eigenspace of a Hermitian matrix.
pub fn signal_subspace(t: &CMatrix, s: usize) -> Result<SignalSubspace> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", n, t.ncols()),
        });
    }
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {s} outside 1..={n}"
        )));
    }
    let eig = hermitian_eigen(t);
    let next = eig.values.get(s).copied();
    let lead = eig.values[0].abs();
    let gap_degenerate = next.is_some_and(|nx| eig.values[s - 1] - nx <= EIGEN_GAP_REL_TOL * lead);
    Ok(SignalSubspace {
        basis: eig.vectors.columns(0, s).into_owned(),
        eigenvalues: eig.values[..s].to_vec(),
        next_eigenvalue: next,
        gap_degenerate,
    })
}

/// Eigenvalues of Ψ = U₀†U₁ for any basis of the signal subspace, where
/// U₀ and U₁ drop the last and first row.
pub fn rotation_eigenvalues(basis: &CMatrix) -> Result<Vec<C64>> {
    let rows = basis.nrows();
    let s = basis.ncols();
    if rows < s + 1 {
        return Err(Error::InvalidArgument(format!(
            "need more than {s} rows for a rank-{s} shift invariance, got {rows}"
        )));
    }
    let u0 = basis.rows(0, rows - 1).into_owned();
    let u1 = basis.rows(1, rows - 1).into_owned();
    let psi = pinv_full_rank(&u0, PINV_REL_CUTOFF)? * u1;
    complex_eigenvalues(&psi)
}

/// arg(λ)/2π mapped to [0, 1).
pub fn phase_to_omega(lambda: C64) -> f64 {
    let phi = lambda.arg();
    let w = if phi < 0.0 { phi / (2.0 * PI) + 1.0 } else { phi / (2.0 * PI) };
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn esprit_rotation(u: &SignalSubspace) -> Result<DoaEstimate> {
    let lambdas = rotation_eigenvalues(&u.basis)?;
    let mut pairs: Vec<(f64, C64)> = lambdas.into_iter().map(|l| (phase_to_omega(l), l)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DoaEstimate {
        omegas_hat: pairs.iter().map(|p| p.0).collect(),
        psi_eigenvalues: pairs.iter().map(|p| p.1).collect(),
        diagnostics: Diagnostics {
            signal_eigenvalues: u.eigenvalues.clone(),
            next_eigenvalue: u.next_eigenvalue,
            gap_degenerate: u.gap_degenerate,
            psi_moduli: pairs.iter().map(|p| p.1.norm()).collect(),
        },
    })
}

/// Subspace extraction plus rotation on a coarray covariance.
pub fn esprit_on_coarray(t: &CoarrayCovariance, s: usize) -> Result<DoaEstimate> {
    if s > t.m_ca() {
        return Err(Error::InvalidArgument(format!(
            "coarray ESPRIT resolves at most M_ca = {} sources, got {s}",
            t.m_ca()
        )));
    }
    let u = signal_subspace(t.matrix(), s).map_err(|e| e.at("signal subspace"))?;
    esprit_rotation(&u).map_err(|e| e.at("esprit rotation"))
}

/// Sample covariance → redundancy averaging → ESPRIT.
pub fn coarray_esprit(
    y: &SnapshotMatrix,
    array: &SensorArray,
    coarray: &CoarrayStructure,
    s: usize,
) -> Result<DoaEstimate> {
    let t = estimate_coarray_covariance(y, coarray, array).map_err(|e| e.at("coarray estimation"))?;
    esprit_on_coarray(&t, s)
}

/// ESPRIT on a physical ULA covariance.
pub fn esprit_on_physical(r: &CMatrix, array: &SensorArray, s: usize) -> Result<DoaEstimate> {
    if !array.is_ula() {
        return Err(Error::InvalidGeometry(format!(
            "direct ESPRIT needs a uniform linear array, got {array}"
        )));
    }
    if s >= array.len() {
        return Err(Error::InvalidArgument(format!(
            "direct ESPRIT resolves fewer than P = {} sources, got {s}",
            array.len()
        )));
    }
    if r.nrows() != array.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", array.len()),
            got: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    let u = signal_subspace(r, s).map_err(|e| e.at("signal subspace"))?;
    esprit_rotation(&u).map_err(|e| e.at("esprit rotation"))
}

/// ESPRIT directly on the sample covariance of a ULA.
pub fn direct_esprit(y: &SnapshotMatrix, array: &SensorArray, s: usize) -> Result<DoaEstimate> {
    if y.num_sensors() != array.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} sensors", array.len()),
            got: format!("{} rows", y.num_sensors()),
        });
    }
    esprit_on_physical(&sample_covariance(y), array, s)
}
