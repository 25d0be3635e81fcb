//! Dense complex linear algebra used by the estimators.
//!
//! Hermitian eigendecomposition comes from nalgebra. Singular values and the
//! pseudo-inverse use a one-sided Jacobi SVD written here: nalgebra's complex
//! SVD loses accuracy when singular values repeat. The small non-Hermitian
//! eigenproblem of the ESPRIT rotation matrix is solved with a
//! Wilkinson-shifted QR iteration on the Hessenberg form.

use nalgebra::linalg::{Hessenberg, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Convergence tolerance for the shifted QR iteration (relative subdiagonal size).
pub const QR_TOLERANCE: f64 = 1e-12;
/// Iteration cap per unit of matrix dimension.
pub const QR_ITERATIONS_PER_DIM: usize = 100;

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix with a deterministic phase on each
/// eigenvector: its first non-negligible component is real and positive.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalize_phase(col.as_mut_slice());
        vectors.set_column(dst, &col);
    }
    HermitianEigen { values, vectors }
}

fn normalize_phase(v: &mut [C64]) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let rot = lead.conj() / lead.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

/// Spectral norm of a Hermitian matrix as its largest absolute eigenvalue.
pub fn hermitian_spectral_norm(m: &CMatrix) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Sweep cap for the one-sided Jacobi SVD.
const JACOBI_SWEEPS: usize = 60;

/// One-sided Jacobi SVD of a matrix with at least as many rows as columns.
///
/// Returns `(sigma, w, v)` with `m · v = w`, orthogonal columns in `w` of
/// norms `sigma`, and unitary `v`.
fn jacobi_svd(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let n = m.ncols();
    let mut w = m.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase;
                        mat[(i, p)] = x * c - y * s;
                        mat[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n).map(|j| w.column(j).norm()).collect();
    (sigma, w, v)
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let (mut s, _, _) = if m.ncols() > m.nrows() {
        jacobi_svd(&m.adjoint())
    } else {
        jacobi_svd(m)
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Moore–Penrose pseudo-inverse of a full-column-rank matrix.
///
/// Fails with [`Error::RankDeficient`] when σ_min < `rel_cutoff` · σ_max.
pub fn pinv_full_rank(m: &CMatrix, rel_cutoff: f64) -> Result<CMatrix> {
    if m.ncols() > m.nrows() {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let (s, w, mut v) = jacobi_svd(m);
    let smax = s.iter().fold(0.0, |a: f64, &b| a.max(b));
    let smin = s.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b));
    if !(smax > 0.0) || smin < rel_cutoff * smax {
        return Err(Error::RankDeficient {
            ratio: if smax > 0.0 { smin / smax } else { 0.0 },
        });
    }
    // pinv = V Σ⁻¹ Uᴴ = V Σ⁻² Wᴴ
    for (j, &sj) in s.iter().enumerate() {
        v.column_mut(j).scale_mut(1.0 / (sj * sj));
    }
    Ok(v * w.adjoint())
}

/// Eigenvalues of a general complex square matrix.
pub fn complex_eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[(0, 0)]]),
        _ => {}
    }
    let mut h = Hessenberg::new(a.clone()).h();
    let cap = QR_ITERATIONS_PER_DIM * n;
    let mut iterations = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let sub = h[(lo, lo - 1)].norm();
            if sub <= QR_TOLERANCE * scale || sub < f64::MIN_POSITIVE {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iterations += 1;
        since_deflation += 1;
        if iterations > cap {
            return Err(Error::NoConvergence { iterations: cap });
        }
        let shift = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        qr_step(&mut h, lo, hi, shift);
    }
    Ok((0..n).map(|k| h[(k, k)]).collect())
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Unitary Givens pair (c real, s complex) with [c s; -s̄ c]·[x; y] = [r; 0].
fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    (ax / r, (x / ax) * y.conj() / r)
}

fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, shift: C64) {
    for k in lo..=hi {
        h[(k, k)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = x * c + s * y;
            h[(k + 1, j)] = -s.conj() * x + y * c;
        }
        rots.push((c, s));
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        for i in lo..=(k + 2).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s.conj();
            h[(i, k + 1)] = -x * s + y * c;
        }
    }
    for k in lo..=hi {
        h[(k, k)] += shift;
    }
}

/// Largest principal-angle sine between the column spans of two
/// orthonormal bases of equal dimension, computed as ‖(I − UUᴴ)V‖₂ so
/// that small angles keep full precision.
pub fn subspace_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let resid = v - u * (u.adjoint() * v);
    singular_values(&resid).into_iter().fold(0.0, f64::max).min(1.0)
}


#[cfg(test)]
mod tests {
    use super::test_util::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Cyclic complex Jacobi eigenvalue sweep for Hermitian matrices.
    fn jacobi_hermitian(m: &CMatrix) -> (Vec<f64>, CMatrix) {
        let n = m.nrows();
        let mut a = m.clone();
        let mut v = CMatrix::identity(n, n);
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum();
            if off < 1e-28 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.norm() < 1e-300 {
                        continue;
                    }
                    let phase = apq / apq.norm();
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = 0.5 * (2.0 * apq.norm()).atan2(aqq - app);
                    let (s, c) = theta.sin_cos();
                    // rotation J with J[p,p]=c, J[q,q]=c, J[p,q]=s*phase, J[q,p]=-s*conj(phase)
                    let mut j = CMatrix::identity(n, n);
                    j[(p, p)] = C64::new(c, 0.0);
                    j[(q, q)] = C64::new(c, 0.0);
                    j[(p, q)] = phase * s;
                    j[(q, p)] = -phase.conj() * s;
                    a = j.adjoint() * &a * &j;
                    v *= &j;
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| a[(y, y)].re.partial_cmp(&a[(x, x)].re).unwrap());
        let vals = idx.iter().map(|&k| a[(k, k)].re).collect();
        let mut vecs = CMatrix::zeros(n, n);
        for (d, &s) in idx.iter().enumerate() {
            vecs.set_column(d, &v.column(s));
        }
        (vals, vecs)
    }

    #[test]
    fn hermitian_eigen_matches_jacobi_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let m = random_hermitian(&mut rng, 12);
            let got = hermitian_eigen(&m);
            let (vals, vecs) = jacobi_hermitian(&m);
            for (a, b) in got.values.iter().zip(&vals) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
            for s in 1..=4 {
                let d = subspace_distance(
                    &got.vectors.columns(0, s).into_owned(),
                    &vecs.columns(0, s).into_owned(),
                );
                assert!(d < 1e-9, "subspace angle {d}");
            }
        }
    }

    #[test]
    fn eigenvector_phase_is_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_hermitian(&mut rng, 6);
        let e = hermitian_eigen(&m);
        for k in 0..6 {
            let lead = e.vectors[(0, k)];
            assert!(lead.im.abs() < 1e-12 && lead.re > 0.0);
        }
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = random_hermitian(&mut rng, 8);
            let svd_norm = singular_values(&m)[0];
            assert!((hermitian_spectral_norm(&m) - svd_norm).abs() < 1e-10);
        }
    }

    #[test]
    fn pinv_left_inverse_and_rank_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_complex(&mut rng, 9, 3);
        let p = pinv_full_rank(&a, 1e-10).unwrap();
        let eye = &p * &a;
        assert!((eye - CMatrix::identity(3, 3)).norm() < 1e-12);

        let mut b = a.clone();
        let c0 = b.column(0).into_owned();
        b.set_column(2, &(c0 * C64::new(2.0, -1.0)));
        assert!(matches!(
            pinv_full_rank(&b, 1e-10),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn svd_handles_repeated_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in 1..=6 {
            let n = k + 3;
            let q = random_complex(&mut rng, n, k).qr().q();
            let w = random_complex(&mut rng, k, k).qr().q();
            let mut d = vec![1.0; k];
            d[k - 1] = 0.25;
            let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                k,
                d.iter().map(|&x| C64::new(x, 0.0)),
            ));
            let m = &q * diag * w.adjoint();
            let mut want = d.clone();
            want.sort_by(|a, b| b.total_cmp(a));
            for (g, e) in singular_values(&m).iter().zip(&want) {
                assert!((g - e).abs() < 1e-13);
            }
            let p = pinv_full_rank(&m, 1e-10).unwrap();
            assert!((&p * &m - CMatrix::identity(k, k)).norm() < 1e-12);
            // Penrose condition m p m = m
            assert!((&m * &p * &m - &m).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_values_of_wide_matrix_match_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let m = random_complex(&mut rng, 3, 7);
        let a = singular_values(&m);
        let b = singular_values(&m.adjoint());
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
    }

    fn char_poly_residual(a: &CMatrix, lam: C64) -> f64 {
        let n = a.nrows();
        let shifted = a - CMatrix::identity(n, n) * lam;
        let s = singular_values(&shifted);
        s[n - 1] / s[0].max(1e-300)
    }

    #[test]
    fn complex_eigenvalues_recover_similarity_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in 1..=6 {
            let phases: Vec<f64> = (0..s).map(|k| 0.1 + 0.13 * k as f64).collect();
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                s,
                phases.iter().map(|&w| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * w)),
            ));
            let q = random_complex(&mut rng, s, s);
            let qi = q.clone().try_inverse().unwrap();
            let psi = &qi * &d * &q;
            let mut got: Vec<f64> = complex_eigenvalues(&psi)
                .unwrap()
                .iter()
                .map(|z| z.arg().rem_euclid(2.0 * std::f64::consts::PI) / (2.0 * std::f64::consts::PI))
                .collect();
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g, w) in got.iter().zip(&phases) {
                assert!((g - w).abs() < 1e-9, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn complex_eigenvalues_trace_det_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..=8 {
            for _ in 0..5 {
                let a = random_complex(&mut rng, n, n);
                let ev = complex_eigenvalues(&a).unwrap();
                let tr: C64 = ev.iter().sum();
                let det: C64 = ev.iter().product();
                assert!((tr - a.trace()).norm() < 1e-9 * (1.0 + a.norm()));
                let d = a.clone().determinant();
                assert!((det - d).norm() < 1e-8 * (1.0 + d.norm()));
                for &l in &ev {
                    assert!(char_poly_residual(&a, l) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn complex_eigenvalues_agree_with_schur() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_complex(&mut rng, 5, 5);
        let mut ours = complex_eigenvalues(&a).unwrap();
        let mut theirs: Vec<C64> = nalgebra::linalg::Schur::new(a)
            .eigenvalues()
            .unwrap()
            .iter()
            .copied()
            .collect();
        let key = |z: &C64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        ours.sort_by_key(key);
        theirs.sort_by_key(key);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn unimodular_spectrum_converges() {
        // equal-modulus eigenvalues stall an unshifted iteration
        let n = 4;
        let mut p = CMatrix::zeros(n, n);
        for k in 0..n {
            p[((k + 1) % n, k)] = C64::new(1.0, 0.0);
        }
        let ev = complex_eigenvalues(&p).unwrap();
        for z in ev {
            assert!((z.norm() - 1.0).abs() < 1e-10);
            assert!((z.powi(4) - C64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }
}
