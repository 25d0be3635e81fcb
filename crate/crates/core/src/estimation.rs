//! Finite-snapshot coarray covariance estimation and its error diagnostics.
//!
//! The sample covariance is redundancy-averaged lag by lag into t̂ and then
//! laid out as the Hermitian Toeplitz matrix T̂_ca. The spectral-function
//! machinery (f_e, Λ(θ), grid supremum) bounds ‖T_ca − T̂_ca‖₂ from above.

use std::f64::consts::PI;

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CoarrayStructure, SensorArray};
use crate::linalg::hermitian_spectral_norm;
use crate::signal::SnapshotMatrix;
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Estimated { snapshots: usize, seed: u64 },
    Perturbed,
}

/// Hermitian Toeplitz coarray covariance `T = 𝒯(t)` with
/// `T[m, n] = t_{m-n}` and `t = [t_{-M}, …, t_0, …, t_M]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarrayCovariance {
    matrix: CMatrix,
    lags: Vec<C64>,
    provenance: Provenance,
}

impl CoarrayCovariance {
    /// Builds 𝒯(t) from a conjugate-symmetric lag vector of odd length.
    pub fn from_lags(lags: Vec<C64>, provenance: Provenance) -> Result<Self> {
        if lags.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: "odd-length lag vector".into(),
                got: format!("length {}", lags.len()),
            });
        }
        let m = lags.len() / 2;
        let scale = lags.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..=m {
            if (lags[m + i] - lags[m - i].conj()).norm() > 1e-9 * scale {
                return Err(Error::InvalidArgument(format!(
                    "lag vector is not conjugate symmetric at lag {i}"
                )));
            }
        }
        let matrix = CMatrix::from_fn(m + 1, m + 1, |r, c| lags[m + r - c]);
        Ok(Self {
            matrix,
            lags,
            provenance,
        })
    }

    pub(crate) fn force_real_zero_lag(&mut self) {
        let m = self.m_ca();
        let t0 = C64::new(self.lags[m].re, 0.0);
        self.lags[m] = t0;
        for k in 0..=m {
            self.matrix[(k, k)] = t0;
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Full lag vector `[t_{-M}, …, t_M]`.
    pub fn lags(&self) -> &[C64] {
        &self.lags
    }

    pub fn lag(&self, i: i64) -> C64 {
        self.lags[(i + self.m_ca() as i64) as usize]
    }

    pub fn m_ca(&self) -> usize {
        self.lags.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.m_ca() + 1
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Serialised as `{ "m_ca": M, "t": [[re, im], ...] }`.
impl Serialize for CoarrayCovariance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.lags.iter().map(|z| [z.re, z.im]).collect();
        let mut st = s.serialize_struct("CoarrayCovariance", 3)?;
        st.serialize_field("m_ca", &self.m_ca())?;
        st.serialize_field("t", &pairs)?;
        st.serialize_field("provenance", &self.provenance)?;
        st.end()
    }
}

/// R̂ = (1/L) Σ_t y(t) y(t)ᴴ, built to be exactly Hermitian.
pub fn sample_covariance(y: &SnapshotMatrix) -> CMatrix {
    let data = &y.data;
    let (p, l) = data.shape();
    let inv_l = 1.0 / l as f64;
    let mut r = CMatrix::zeros(p, p);
    for n in 0..p {
        for m in n..p {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..l {
                acc += data[(m, t)] * data[(n, t)].conj();
            }
            acc *= inv_l;
            if m == n {
                acc.im = 0.0;
            }
            r[(m, n)] = acc;
            r[(n, m)] = acc.conj();
        }
    }
    r
}

fn check_square(r: &CMatrix, p: usize) -> Result<()> {
    if r.nrows() != p || r.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: format!("{p}x{p}"),
            got: format!("{}x{}", r.nrows(), r.ncols()),
        });
    }
    Ok(())
}

/// Lags t̂_{-M..M} with lag i ≥ 0 averaged over its sensor pairs and lag −i
/// taken as the conjugate of lag i; t̂_0 keeps only its real part.
fn symmetrize(mut raw: Vec<C64>) -> Vec<C64> {
    let m = raw.len() / 2;
    raw[m].im = 0.0;
    for i in 1..=m {
        raw[m - i] = raw[m + i].conj();
    }
    raw
}

/// t̂_i = (1/|Ω_i|) Σ_{d_m − d_n = i} R̂[m, n], laid out as 𝒯(t̂).
pub fn redundancy_average(
    r_hat: &CMatrix,
    coarray: &CoarrayStructure,
    array: &SensorArray,
) -> Result<CoarrayCovariance> {
    average_with_provenance(r_hat, coarray, array, Provenance::Perturbed)
}

pub(crate) fn average_with_provenance(
    r_hat: &CMatrix,
    coarray: &CoarrayStructure,
    array: &SensorArray,
    provenance: Provenance,
) -> Result<CoarrayCovariance> {
    coarray.require_hole_free()?;
    coarray.check_array(array)?;
    check_square(r_hat, array.len())?;
    let m = coarray.m_ca() as i64;
    let raw: Vec<C64> = (-m..=m)
        .map(|i| {
            let inv_w = 1.0 / coarray.weight(i) as f64;
            coarray
                .pairs(i)
                .iter()
                .fold(C64::new(0.0, 0.0), |acc, &(a, b)| acc + r_hat[(a, b)] * inv_w)
        })
        .collect();
    CoarrayCovariance::from_lags(symmetrize(raw), provenance)
}

/// Same averaging through the dense matrix F_av applied to vec(R̂).
pub fn redundancy_average_dense(
    r_hat: &CMatrix,
    coarray: &CoarrayStructure,
    array: &SensorArray,
) -> Result<CoarrayCovariance> {
    check_square(r_hat, array.len())?;
    let f = coarray.averaging_matrix(array)?;
    let p = array.len();
    let vec_r = CVector::from_iterator(p * p, r_hat.iter().copied());
    let mut raw = Vec::with_capacity(f.nrows());
    for row in 0..f.nrows() {
        let mut acc = C64::new(0.0, 0.0);
        for (col, &w) in f.row(row).iter().enumerate() {
            if w != 0.0 {
                acc += vec_r[col] * w;
            }
        }
        raw.push(acc);
    }
    CoarrayCovariance::from_lags(symmetrize(raw), Provenance::Perturbed)
}

/// Full estimation chain from snapshots to T̂_ca.
pub fn estimate_coarray_covariance(
    y: &SnapshotMatrix,
    coarray: &CoarrayStructure,
    array: &SensorArray,
) -> Result<CoarrayCovariance> {
    let r_hat = sample_covariance(y);
    average_with_provenance(
        &r_hat,
        coarray,
        array,
        Provenance::Estimated {
            snapshots: y.num_snapshots(),
            seed: y.seed,
        },
    )
}

fn check_same_dim(a: &CoarrayCovariance, b: &CoarrayCovariance) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", a.dim()),
            got: format!("{0}x{0}", b.dim()),
        });
    }
    Ok(())
}

/// ‖T_ca − T̂_ca‖₂.
pub fn covariance_error(exact: &CoarrayCovariance, est: &CoarrayCovariance) -> Result<f64> {
    check_same_dim(exact, est)?;
    Ok(hermitian_spectral_norm(&(exact.matrix() - est.matrix())))
}

/// Λ(θ)[m, n] = exp(j(d_m − d_n)θ) / |Ω_{d_m − d_n}|.
pub fn lambda_matrix(theta: f64, coarray: &CoarrayStructure, array: &SensorArray) -> Result<CMatrix> {
    coarray.require_hole_free()?;
    coarray.check_array(array)?;
    let d = array.positions();
    Ok(CMatrix::from_fn(d.len(), d.len(), |m, n| {
        let lag = d[m] - d[n];
        C64::from_polar(1.0 / coarray.weight(lag) as f64, lag as f64 * theta)
    }))
}

fn error_lags(exact: &CoarrayCovariance, est: &CoarrayCovariance) -> Result<Vec<C64>> {
    check_same_dim(exact, est)?;
    Ok(exact
        .lags()
        .iter()
        .zip(est.lags())
        .map(|(t, th)| t - th)
        .collect())
}

fn eval_trig(e: &[C64], theta: f64) -> C64 {
    let m = (e.len() / 2) as i64;
    e.iter()
        .enumerate()
        .map(|(k, &ek)| ek * C64::from_polar(1.0, -theta * (k as i64 - m) as f64))
        .sum()
}

/// f_e(θ) = Σ_k e_k exp(−jθk) with e = t − t̂.
pub fn spectral_function_error(
    exact: &CoarrayCovariance,
    est: &CoarrayCovariance,
    coarray: &CoarrayStructure,
    array: &SensorArray,
    theta: f64,
) -> Result<C64> {
    coarray.require_hole_free()?;
    coarray.check_array(array)?;
    if exact.m_ca() != coarray.m_ca() {
        return Err(Error::DimensionMismatch {
            expected: format!("M_ca = {}", coarray.m_ca()),
            got: format!("M_ca = {}", exact.m_ca()),
        });
    }
    Ok(eval_trig(&error_lags(exact, est)?, theta))
}

/// E_y[m, n] = e_{d_m − d_n}, the coarray error mapped back onto sensor pairs.
pub fn physical_error_matrix(
    exact: &CoarrayCovariance,
    est: &CoarrayCovariance,
    array: &SensorArray,
) -> Result<CMatrix> {
    let e = error_lags(exact, est)?;
    let m = (e.len() / 2) as i64;
    let d = array.positions();
    let max_lag = d[d.len() - 1] - d[0];
    if max_lag > m {
        return Err(Error::DimensionMismatch {
            expected: format!("lags up to {max_lag}"),
            got: format!("lags up to {m}"),
        });
    }
    Ok(CMatrix::from_fn(d.len(), d.len(), |a, b| {
        e[(d[a] - d[b] + m) as usize]
    }))
}

/// tr(E_y Λ(θ)), an independent route to f_e(θ).
pub fn spectral_function_error_trace(
    exact: &CoarrayCovariance,
    est: &CoarrayCovariance,
    coarray: &CoarrayStructure,
    array: &SensorArray,
    theta: f64,
) -> Result<C64> {
    let ey = physical_error_matrix(exact, est, array)?;
    let lambda = lambda_matrix(theta, coarray, array)?;
    Ok((ey * lambda).trace())
}

/// Grid nodes 4N·mult equispaced points over one period for a trigonometric
/// polynomial of order N.
pub fn sup_grid(order: usize, grid_mult: usize) -> Vec<f64> {
    let n = (order * grid_mult.max(1)).max(1);
    (1..=4 * n)
        .map(|k| (k as f64 - 2.0 * n as f64) * PI / (2.0 * n as f64))
        .collect()
}

/// 2 · max_k |f_e(θ_k)| over the 4·M_ca-point grid (refined by `grid_mult`).
pub fn grid_sup_bound(
    exact: &CoarrayCovariance,
    est: &CoarrayCovariance,
    coarray: &CoarrayStructure,
    array: &SensorArray,
    grid_mult: usize,
) -> Result<f64> {
    coarray.require_hole_free()?;
    coarray.check_array(array)?;
    let e = error_lags(exact, est)?;
    Ok(2.0
        * sup_grid(coarray.m_ca(), grid_mult)
            .into_iter()
            .map(|th| eval_trig(&e, th).norm())
            .fold(0.0, f64::max))
}
