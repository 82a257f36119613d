/*
Copyright 2026 The tenrec Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Matrix kernels used by the ADMM updates: thin SVD, singular value
//! thresholding, orthogonal procrustes and elementwise shrinkage.

use nalgebra::QR;

use crate::error::{Error, Result};
use crate::tensor::{matrix_frobenius, DenseTensor, Matrix};

/// Relative size below which `G V^T` counts as zero in [`procrustes`].
pub const PROCRUSTES_DEGENERATE_TOL: f64 = 1e-14;

/// `m = u * diag(s) * v^T` with `k = min(rows, cols)` columns in `u` and `v`.
///
/// `s` is nonincreasing. Each `u` column has its largest-magnitude entry
/// (lowest row on ties) nonnegative; the matching `v` column is flipped with it.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

pub fn thin_svd(m: &Matrix) -> Result<ThinSvd> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("thin_svd: input has non-finite entries"));
    }
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(rows, 0),
            s: Vec::new(),
            v: Matrix::zeros(cols, 0),
        });
    }

    // Reduce to the k x k triangle of a QR, then run one-sided Jacobi on it.
    let (u, s, v) = if rows >= cols {
        let (q, r) = QR::new(m.clone()).unpack();
        let (ur, s, vr) = jacobi_svd(r)?;
        (q * ur, s, vr)
    } else {
        let (q, r) = QR::new(m.transpose()).unpack();
        let (ur, s, vr) = jacobi_svd(r)?;
        (vr, s, q * ur)
    };
    Ok(sort_and_sign(u, s, v))
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a square matrix: rotates column pairs
/// of `a` until they are mutually orthogonal. Returns `(u, s, v)` unsorted.
fn jacobi_svd(mut a: Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let n = a.ncols();
    let m = a.nrows();
    let mut v = Matrix::identity(n, n);
    let tol = f64::EPSILON * m as f64;
    // Columns at rounding-noise level cannot be orthogonalized any further.
    let floor = (f64::EPSILON * a.norm()).powi(2);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (a.column(p), a.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma.abs() <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::arg("thin_svd: Jacobi sweeps did not converge"));
    }

    let sigma: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let top = sigma.iter().fold(0.0f64, |x, &y| x.max(y));
    let mut u = Matrix::zeros(m, n);
    let mut missing = Vec::new();
    for (j, &sj) in sigma.iter().enumerate() {
        if sj > top * f64::EPSILON * m as f64 && sj > 0.0 {
            u.column_mut(j).copy_from(&(a.column(j) / sj));
        } else {
            missing.push(j);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok((u, sigma, v))
}

fn rotate_columns(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = a.nrows();
    let data = a.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * rows);
    let cp = &mut head[p * rows..(p + 1) * rows];
    let cq = &mut tail[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column.
fn complete_orthonormal(u: &mut Matrix, missing: &[usize]) {
    let rows = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut basis = 0;
    for &j in missing {
        while basis < rows {
            let mut cand = nalgebra::DVector::<f64>::zeros(rows);
            cand[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj = u.column(f).dot(&cand);
                    cand -= u.column(f) * proj;
                }
            }
            let norm = cand.norm();
            if norm > 0.5 {
                u.column_mut(j).copy_from(&(cand / norm));
                filled.push(j);
                break;
            }
        }
    }
}

fn sort_and_sign(u: Matrix, s: Vec<f64>, v: Matrix) -> ThinSvd {
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut us = Matrix::zeros(u.nrows(), k);
    let mut vs = Matrix::zeros(v.nrows(), k);
    let mut ss = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, x) in ucol.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                pivot = i;
            }
        }
        let sign = if ucol[pivot] < 0.0 { -1.0 } else { 1.0 };
        us.column_mut(dst).copy_from(&(ucol * sign));
        vs.column_mut(dst).copy_from(&(v.column(src) * sign));
        ss.push(s[src]);
    }
    ThinSvd {
        u: us,
        s: ss,
        v: vs,
    }
}

pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(thin_svd(m)?.s)
}

pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Singular value thresholding `U diag(max(s - tau, 0)) V^T`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(svt_with_norm(m, tau)?.0)
}

/// [`svt`] plus the nuclear norm of its output, `sum max(s_i - tau, 0)`.
pub fn svt_with_norm(m: &Matrix, tau: f64) -> Result<(Matrix, f64)> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::arg(format!(
            "svt: threshold must be finite and nonnegative, got {tau}"
        )));
    }
    let svd = thin_svd(m)?;
    let kept = svd.s.iter().take_while(|&&s| s > tau).count();
    if kept == 0 {
        return Ok((Matrix::zeros(m.nrows(), m.ncols()), 0.0));
    }
    let mut us = svd.u.columns(0, kept).into_owned();
    let mut norm = 0.0;
    for j in 0..kept {
        let shrunk = svd.s[j] - tau;
        norm += shrunk;
        us.column_mut(j).scale_mut(shrunk);
    }
    let out = us * svd.v.columns(0, kept).transpose();
    Ok((out, norm))
}

#[derive(Debug, Clone)]
pub enum ProcrustesOutcome {
    /// `U = Uhat Vhat^T` from the thin SVD of `G V^T`.
    Rotation(Matrix),
    /// `G V^T` is numerically zero: every orthonormal `U` is optimal.
    Degenerate,
}

impl ProcrustesOutcome {
    pub fn into_option(self) -> Option<Matrix> {
        match self {
            ProcrustesOutcome::Rotation(u) => Some(u),
            ProcrustesOutcome::Degenerate => None,
        }
    }
}

/// Columnwise-orthonormal `U` (I x R) minimizing `||U v - g||_F` for
/// `g` (I x P) and `v` (R x P).
pub fn procrustes(g: &Matrix, v: &Matrix) -> Result<ProcrustesOutcome> {
    if g.ncols() != v.ncols() {
        return Err(Error::arg(format!(
            "procrustes: g is {}x{} but v is {}x{}",
            g.nrows(),
            g.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    if v.nrows() > g.nrows() {
        return Err(Error::arg(format!(
            "procrustes: rank bound {} exceeds row count {}",
            v.nrows(),
            g.nrows()
        )));
    }
    let gv = g * v.transpose();
    let scale = (matrix_frobenius(g) * matrix_frobenius(v)).max(1.0);
    if matrix_frobenius(&gv) <= PROCRUSTES_DEGENERATE_TOL * scale {
        return Ok(ProcrustesOutcome::Degenerate);
    }
    let svd = thin_svd(&gv)?;
    Ok(ProcrustesOutcome::Rotation(svd.u * svd.v.transpose()))
}

#[inline]
pub fn shrink_scalar(x: f64, tau: f64) -> f64 {
    let mag = x.abs() - tau;
    if mag > 0.0 {
        mag.copysign(x)
    } else {
        0.0
    }
}

/// Elementwise soft threshold `sgn(x) max(|x| - tau, 0)`.
pub fn shrink(t: &DenseTensor, tau: f64) -> DenseTensor {
    assert!(tau >= 0.0, "shrink: negative threshold {tau}");
    t.map(|x| shrink_scalar(x, tau))
}

/// `||a^T a - I||_inf` (max abs entry).
pub fn orthonormality_error(a: &Matrix) -> f64 {
    let gram = a.transpose() * a;
    let mut worst: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Cyclic Jacobi eigenvalues of a symmetric matrix.
    fn jacobi_eigenvalues(mut a: Matrix) -> Vec<f64> {
        let n = a.nrows();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn identity_and_diagonal() {
        let svd = thin_svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(svd.s, vec![1.0, 1.0, 1.0]);
        let d = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let svd = thin_svd(&d).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14 && (svd.s[1] - 1.0).abs() < 1e-14);
        let d = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        assert!((thin_svd(&d).unwrap().s[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_match_jacobi_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, c) in [(4, 6), (6, 4), (5, 5), (3, 20), (20, 3)] {
            let m = random(&mut rng, r, c);
            let s = thin_svd(&m).unwrap().s;
            let gram = if r <= c { &m * m.transpose() } else { m.transpose() * &m };
            let ev = jacobi_eigenvalues(gram);
            for (a, b) in s.iter().zip(&ev) {
                assert!((a - b.max(0.0).sqrt()).abs() < 1e-10, "{r}x{c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn thin_svd_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(1, 1), (1, 7), (7, 1), (12, 5), (5, 40), (60, 9), (30, 30), (200, 200)] {
            let m = random(&mut rng, r, c);
            let svd = thin_svd(&m).unwrap();
            let k = r.min(c);
            assert_eq!(svd.u.shape(), (r, k));
            assert_eq!(svd.v.shape(), (c, k));
            assert!(orthonormality_error(&svd.u) <= 1e-10);
            assert!(orthonormality_error(&svd.v) <= 1e-10);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(svd.s.iter().all(|&s| s >= 0.0));
            let err = matrix_frobenius(&(svd.reconstruct() - &m));
            assert!(err <= 1e-10 * matrix_frobenius(&m), "{r}x{c}: {err}");
            for j in 0..k {
                let col = svd.u.column(j);
                let pivot = col.iamax();
                assert!(col[pivot] >= 0.0);
            }
        }
    }

    #[test]
    fn svd_sign_convention_is_deterministic() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -2.0, -1.0, 0.0]);
        let svd = thin_svd(&m).unwrap();
        assert!(svd.u[(0, 0)] > 0.0 && svd.u[(1, 1)] > 0.0);
        assert!((svd.reconstruct() - m).abs().max() < 1e-14);
    }

    #[test]
    fn rank_deficient_inputs_reconstruct() {
        // Rank 2 with an exactly repeated direction.
        let m = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.5, -1.0, 0.25]);
        let svd = thin_svd(&m).unwrap();
        assert!((svd.reconstruct() - &m).amax() < 1e-13);
        assert!(svd.s[2] < 1e-14);
        assert!(orthonormality_error(&svd.u) < 1e-13);
        assert!(orthonormality_error(&svd.v) < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (r, c, k) in [(9, 7, 2), (7, 9, 3), (40, 5, 1), (5, 40, 4), (6, 6, 5)] {
            let m = random(&mut rng, r, k) * random(&mut rng, k, c);
            let svd = thin_svd(&m).unwrap();
            assert!((svd.reconstruct() - &m).amax() < 1e-12 * (1.0 + m.amax()));
            assert!(orthonormality_error(&svd.u) < 1e-12);
            assert!(orthonormality_error(&svd.v) < 1e-12);
            assert!(svd.s[k..].iter().all(|&x| x < 1e-12 * svd.s[0]));
        }

        let z = thin_svd(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!(z.s, vec![0.0; 3]);
        assert!(orthonormality_error(&z.u) < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let m = Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(thin_svd(&m).is_err());
    }

    #[test]
    fn svt_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random(&mut rng, 6, 9);
        let same = svt(&m, 0.0).unwrap();
        assert!(matrix_frobenius(&(same - &m)) <= 1e-10 * matrix_frobenius(&m));

        let d = Matrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let out = svt(&d, 2.0).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((out - want).abs().max() < 1e-14);

        let s1 = thin_svd(&m).unwrap().s[0];
        assert_eq!(svt(&m, s1).unwrap(), Matrix::zeros(6, 9));
        assert!(svt(&m, -1.0).is_err());
        assert!(svt(&m, f64::NAN).is_err());
    }

    #[test]
    fn svt_norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random(&mut rng, 7, 4);
        let tau = 0.4;
        let (out, norm) = svt_with_norm(&m, tau).unwrap();
        let want: f64 = thin_svd(&m).unwrap().s.iter().map(|s| (s - tau).max(0.0)).sum();
        assert!((norm - want).abs() < 1e-12);
        assert!((nuclear_norm(&out).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn procrustes_fixed_points() {
        let g = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let u = procrustes(&g, &Matrix::identity(2, 2)).unwrap().into_option().unwrap();
        assert!((u - &g).abs().max() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = QR::new(random(&mut rng, 6, 3)).q();
        let u = procrustes(&q, &Matrix::identity(3, 3)).unwrap().into_option().unwrap();
        assert!((u - q).abs().max() < 1e-12);
    }

    #[test]
    fn procrustes_degenerate_and_errors() {
        let g = Matrix::from_element(5, 4, 1.0);
        let v = Matrix::zeros(2, 4);
        assert!(matches!(
            procrustes(&g, &v).unwrap(),
            ProcrustesOutcome::Degenerate
        ));
        assert!(procrustes(&g, &Matrix::zeros(2, 3)).is_err());
        assert!(procrustes(&Matrix::zeros(2, 4), &Matrix::zeros(3, 4)).is_err());
    }

    #[test]
    fn procrustes_beats_random_orthonormal_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = random(&mut rng, 6, 10);
        let v = random(&mut rng, 3, 10);
        let u = procrustes(&g, &v).unwrap().into_option().unwrap();
        assert!(orthonormality_error(&u) <= 1e-10);
        let best = matrix_frobenius(&(&u * &v - &g));
        for _ in 0..1000 {
            let cand = QR::new(random(&mut rng, 6, 3)).q();
            assert!(matrix_frobenius(&(cand * &v - &g)) >= best - 1e-12);
        }
    }

    #[test]
    fn shrink_definition() {
        assert!((shrink_scalar(1.2, 0.5) - 0.7).abs() < 1e-15);
        assert_eq!(shrink_scalar(-0.3, 0.5), 0.0);
        assert_eq!(shrink_scalar(-2.0, 0.5), -1.5);
        let t = DenseTensor::new(vec![4], vec![1.0, -2.0, 0.25, 0.0]).unwrap();
        assert_eq!(shrink(&t, 0.0), t);
    }
}
