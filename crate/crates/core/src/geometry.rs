//! Sensor arrays and their difference coarray.
//!
//! Positions are integers in half-wavelength units. The nested constructor uses
//! the 1-based convention `{1..N1} ∪ {m(N1+1)}`; differences are translation
//! invariant so a 0-based ULA has the same coarray as `nested(P-1, 1)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SensorArray {
    positions: Vec<i64>,
}

impl SensorArray {
    /// Builds an array from arbitrary positions. Order is normalised to
    /// ascending; duplicates and negative positions are rejected.
    pub fn from_positions(mut positions: Vec<i64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 sensors, got {}",
                positions.len()
            )));
        }
        if let Some(&d) = positions.iter().find(|&&d| d < 0) {
            return Err(Error::InvalidGeometry(format!("negative position {d}")));
        }
        positions.sort_unstable();
        if let Some(w) = positions.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGeometry(format!("duplicate position {}", w[0])));
        }
        Ok(Self { positions })
    }

    /// Generalized nested array `{1..=n1} ∪ {m(n1+1) : m = 1..=n2}`.
    pub fn nested(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n2 > n1 {
            return Err(Error::InvalidGeometry(format!(
                "nested array needs n1 >= n2 > 0, got ({n1}, {n2})"
            )));
        }
        let inner = (1..=n1 as i64).collect::<Vec<_>>();
        let outer = (1..=n2 as i64).map(|m| m * (n1 as i64 + 1));
        let positions = inner.into_iter().chain(outer).collect();
        Self::from_positions(positions)
    }

    /// P-sensor ULA, built as `nested(P-1, 1)` = `{1..=P}`.
    pub fn ula(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidGeometry(format!("ULA needs P >= 2, got {p}")));
        }
        Self::nested(p - 1, 1)
    }

    /// Balanced nested array `nested(ceil(P/2), floor(P/2))`.
    pub fn nested_balanced(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidGeometry(format!(
                "nested array needs P >= 2, got {p}"
            )));
        }
        Self::nested(p.div_ceil(2), p / 2)
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// True when sensors sit on consecutive integers.
    pub fn is_ula(&self) -> bool {
        self.positions.windows(2).all(|w| w[1] - w[0] == 1)
    }

    pub fn coarray(&self) -> CoarrayStructure {
        CoarrayStructure::new(self)
    }
}

impl TryFrom<Vec<i64>> for SensorArray {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::from_positions(v)
    }
}

impl From<SensorArray> for Vec<i64> {
    fn from(a: SensorArray) -> Self {
        a.positions
    }
}

/// `nested:N1,N2`, `ula:P` or `custom:[d1,d2,...]`.
impl FromStr for SensorArray {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidGeometry(format!("{msg} in array spec {s:?}"));
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected kind:params"))?;
        let parse_usize = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| bad(&format!("bad integer {t:?}")))
        };
        match kind.trim() {
            "nested" => {
                let (a, b) = rest.split_once(',').ok_or_else(|| bad("expected N1,N2"))?;
                Self::nested(parse_usize(a)?, parse_usize(b)?)
            }
            "ula" => Self::ula(parse_usize(rest)?),
            "custom" => {
                let positions: Vec<i64> = serde_json::from_str(rest.trim())
                    .map_err(|e| bad(&format!("bad position list ({e})")))?;
                Self::from_positions(positions)
            }
            other => Err(bad(&format!("unknown array kind {other:?}"))),
        }
    }
}

impl fmt::Display for SensorArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.positions)
    }
}

/// Difference set, weight function and contiguous segment of an array.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarrayStructure {
    num_sensors: usize,
    max_diff: usize,
    /// `counts[i + max_diff]` = |Ω_i|, zero for holes.
    counts: Vec<usize>,
    m_ca: usize,
    hole_free: bool,
    /// Sensor index pairs (m, n) with d_m - d_n = i, indexed like `counts`.
    pairs: Vec<Vec<(usize, usize)>>,
}

impl CoarrayStructure {
    pub fn new(array: &SensorArray) -> Self {
        let d = array.positions();
        let p = d.len();
        let max_diff = (d[p - 1] - d[0]) as usize;
        let mut counts = vec![0usize; 2 * max_diff + 1];
        let mut pairs = vec![Vec::new(); 2 * max_diff + 1];
        // column-major (m fastest) so group sums follow vec() order
        for (n, &dn) in d.iter().enumerate() {
            for (m, &dm) in d.iter().enumerate() {
                let k = (dm - dn + max_diff as i64) as usize;
                counts[k] += 1;
                pairs[k].push((m, n));
            }
        }
        let m_ca = (0..=max_diff)
            .take_while(|&i| counts[i + max_diff] > 0)
            .last()
            .unwrap_or(0);
        Self {
            num_sensors: p,
            max_diff,
            counts,
            m_ca,
            hole_free: m_ca == max_diff,
            pairs,
        }
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    /// Largest M with {0..M} ⊆ difference set.
    pub fn m_ca(&self) -> usize {
        self.m_ca
    }

    pub fn max_difference(&self) -> usize {
        self.max_diff
    }

    pub fn is_hole_free(&self) -> bool {
        self.hole_free
    }

    /// |Ω_i|, zero when `i` is not in the difference set.
    pub fn weight(&self, i: i64) -> usize {
        let k = i + self.max_diff as i64;
        if k < 0 || k as usize >= self.counts.len() {
            0
        } else {
            self.counts[k as usize]
        }
    }

    /// Sorted difference set.
    pub fn difference_set(&self) -> Vec<i64> {
        self.iter_weights().map(|(i, _)| i).collect()
    }

    /// (lag, weight) for every lag in the difference set, ascending.
    pub fn iter_weights(&self) -> impl Iterator<Item = (i64, usize)> + '_ {
        let off = self.max_diff as i64;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(k, &c)| (k as i64 - off, c))
    }

    pub fn weights(&self) -> BTreeMap<i64, usize> {
        self.iter_weights().collect()
    }

    /// Sensor pairs generating lag `i`.
    pub fn pairs(&self, i: i64) -> &[(usize, usize)] {
        let k = i + self.max_diff as i64;
        if k < 0 || k as usize >= self.pairs.len() {
            &[]
        } else {
            &self.pairs[k as usize]
        }
    }

    pub(crate) fn require_hole_free(&self) -> Result<()> {
        if self.hole_free {
            Ok(())
        } else {
            Err(Error::NotHoleFree {
                m_ca: self.m_ca,
                max_diff: self.max_diff,
            })
        }
    }

    pub(crate) fn check_array(&self, array: &SensorArray) -> Result<()> {
        if array.len() != self.num_sensors {
            return Err(Error::DimensionMismatch {
                expected: format!("{} sensors", self.num_sensors),
                got: format!("{} sensors", array.len()),
            });
        }
        Ok(())
    }

    /// Δ(S) = Σ_{i=0}^{M_ca} 1/|Ω_i|.
    pub fn redundancy_coefficient(&self) -> Result<f64> {
        self.require_hole_free()?;
        Ok((0..=self.m_ca as i64)
            .map(|i| 1.0 / self.weight(i) as f64)
            .sum())
    }

    /// Dense redundancy-averaging matrix F_av of shape (2M_ca+1) × P².
    ///
    /// Row `i + M_ca` (0-based) averages lag `i`; column `m + P·n` addresses
    /// entry (m, n) of a column-major vectorised P×P matrix.
    pub fn averaging_matrix(&self, array: &SensorArray) -> Result<DMatrix<f64>> {
        self.require_hole_free()?;
        self.check_array(array)?;
        let p = self.num_sensors;
        let m = self.m_ca;
        let d = array.positions();
        let mut f = DMatrix::zeros(2 * m + 1, p * p);
        for col_n in 0..p {
            for row_m in 0..p {
                let lag = d[row_m] - d[col_n];
                let row = (lag + m as i64) as usize;
                f[(row, row_m + p * col_n)] = 1.0 / self.weight(lag) as f64;
            }
        }
        Ok(f)
    }
}
