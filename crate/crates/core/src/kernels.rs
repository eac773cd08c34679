//! Dense linear-algebra kernels.
//!
//! The matrix-matrix product is backed by `matrixmultiply`; the
//! factorizations (Cholesky, Householder QR, Hermitian eigendecomposition)
//! are written here so that failure reporting (pivot indices, iteration
//! caps) and sign conventions follow the contracts the rest of the crate
//! relies on.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatView, MatViewMut};
use crate::scalar::Scalar;

/// Operand transformation for [`gemm`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    None,
    /// Conjugate transpose (plain transpose for real scalars).
    ConjTrans,
}

fn conj_data<T: Scalar>(data: &[T]) -> Vec<T> {
    data.iter().map(|x| x.conj()).collect()
}

/// `C ← α·op(A)·op(B) + β·C`.
///
/// Panics on non-conforming dimensions.
pub fn gemm<T: Scalar>(
    alpha: T,
    a: MatView<'_, T>,
    opa: Op,
    b: MatView<'_, T>,
    opb: Op,
    beta: T,
    c: &mut MatViewMut<'_, T>,
) {
    let (am, ak) = match opa {
        Op::None => (a.rows(), a.cols()),
        Op::ConjTrans => (a.cols(), a.rows()),
    };
    let (bk, bn) = match opb {
        Op::None => (b.rows(), b.cols()),
        Op::ConjTrans => (b.cols(), b.rows()),
    };
    assert_eq!(am, c.rows(), "gemm: result row mismatch");
    assert_eq!(bn, c.cols(), "gemm: result column mismatch");
    assert_eq!(ak, bk, "gemm: inner dimension mismatch");

    if am == 0 || bn == 0 {
        return;
    }
    if ak == 0 {
        for x in c.data_mut() {
            *x = if beta == T::ZERO { T::ZERO } else { beta * *x };
        }
        return;
    }

    // Transposition is a stride swap; complex conjugation needs a copy of
    // the flagged operand since the backend has no conjugate option.
    let a_conj;
    let (a_ptr, rsa, csa) = match opa {
        Op::None => (a.data().as_ptr(), 1isize, a.rows() as isize),
        Op::ConjTrans => {
            let ptr = if T::IS_COMPLEX {
                a_conj = conj_data(a.data());
                a_conj.as_ptr()
            } else {
                a.data().as_ptr()
            };
            (ptr, a.rows() as isize, 1isize)
        }
    };
    let b_conj;
    let (b_ptr, rsb, csb) = match opb {
        Op::None => (b.data().as_ptr(), 1isize, b.rows() as isize),
        Op::ConjTrans => {
            let ptr = if T::IS_COMPLEX {
                b_conj = conj_data(b.data());
                b_conj.as_ptr()
            } else {
                b.data().as_ptr()
            };
            (ptr, b.rows() as isize, 1isize)
        }
    };

    let crows = c.rows() as isize;
    unsafe {
        T::raw_gemm(
            am,
            ak,
            bn,
            alpha,
            a_ptr,
            rsa,
            csa,
            b_ptr,
            rsb,
            csb,
            beta,
            c.data_mut().as_mut_ptr(),
            1,
            crows,
        );
    }
}

/// Gram matrix `X^H X` with the upper triangle computed and mirrored, so
/// the result is exactly Hermitian (real diagonal).
pub fn herk_gram<T: Scalar>(x: MatView<'_, T>) -> DenseMatrix<T> {
    let n = x.cols();
    let mut g = DenseMatrix::zeros(n, n);
    gemm(T::ONE, x, Op::ConjTrans, x, Op::None, T::ZERO, &mut g.view_mut());
    for j in 0..n {
        *g.at_mut(j, j) = T::from_re(g.at(j, j).re());
        for i in 0..j {
            *g.at_mut(j, i) = g.at(i, j).conj();
        }
    }
    g
}

/// Cholesky factorization `A = R^H R` of a Hermitian matrix, reading the
/// upper triangle of `a`.
///
/// Returns `(R, info)`: `info == 0` on success, otherwise the 1-based
/// pivot at which the factorization broke down (output unspecified).
pub fn potrf<T: Scalar>(a: &DenseMatrix<T>) -> (DenseMatrix<T>, usize) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "potrf: matrix must be square");
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            *r.at_mut(i, j) = a.at(i, j);
        }
    }
    for j in 0..n {
        let mut d = r.at(j, j).re();
        for k in 0..j {
            d -= r.at(k, j).norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return (r, j + 1);
        }
        let rjj = d.sqrt();
        *r.at_mut(j, j) = T::from_re(rjj);
        let inv = 1.0 / rjj;
        for i in j + 1..n {
            let mut s = r.at(j, i);
            for k in 0..j {
                s -= r.at(k, j).conj() * r.at(k, i);
            }
            *r.at_mut(j, i) = s.scale(inv);
        }
    }
    (r, 0)
}

/// In-place right triangular solve `X ← X·R⁻¹` with `R` upper triangular.
pub fn trsm_right<T: Scalar>(x: &mut MatViewMut<'_, T>, r: &DenseMatrix<T>) -> Result<()> {
    let n = x.cols();
    assert_eq!(r.rows(), n, "trsm: triangular factor size mismatch");
    assert_eq!(r.cols(), n, "trsm: triangular factor must be square");
    let rows = x.rows();
    for j in 0..n {
        let rjj = r.at(j, j);
        if rjj == T::ZERO {
            return Err(Error::SingularTriangular { index: j });
        }
        let (head, tail) = x.data_mut().split_at_mut(j * rows);
        let colj = &mut tail[..rows];
        for k in 0..j {
            let rkj = r.at(k, j);
            if rkj == T::ZERO {
                continue;
            }
            let colk = &head[k * rows..(k + 1) * rows];
            for (y, &xk) in colj.iter_mut().zip(colk) {
                *y -= xk * rkj;
            }
        }
        for y in colj.iter_mut() {
            *y = *y / rjj;
        }
    }
    Ok(())
}

/// Elementary reflector in LAPACK `larfg` form: given `alpha` and `x`,
/// produces `tau` and real `beta` with `H^H [alpha; x] = beta·e₁`,
/// `H = I − tau·v·v^H`, `v = [1; x']` where `x` is overwritten by `x'`.
fn larfg<T: Scalar>(alpha: T, x: &mut [T]) -> (T, f64) {
    let xnorm_sqr: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let alpha_im_zero = alpha == T::from_re(alpha.re());
    if xnorm_sqr == 0.0 && alpha_im_zero {
        return (T::ZERO, alpha.re());
    }
    let norm = (alpha.norm_sqr() + xnorm_sqr).sqrt();
    let beta = -norm.copysign(alpha.re());
    let tau = (T::from_re(beta) - alpha).scale(1.0 / beta);
    let denom = alpha - T::from_re(beta);
    let scal = T::ONE / denom;
    for v in x.iter_mut() {
        *v *= scal;
    }
    (tau, beta)
}

/// Householder QR returning the thin `Q` (m×n, orthonormal columns) with
/// the sign convention that the implicit `R` has non-negative diagonal.
pub fn householder_qr<T: Scalar>(x: MatView<'_, T>) -> DenseMatrix<T> {
    let (m, n) = (x.rows(), x.cols());
    assert!(m >= n, "householder_qr: need m >= n");
    let mut w = x.to_owned();
    let mut taus = vec![T::ZERO; n];
    let mut betas = vec![0.0f64; n];

    for k in 0..n {
        // Reflector for column k; v[0] = 1 is stored explicitly.
        let wd = w.data_mut();
        let col = &mut wd[k * m + k..(k + 1) * m];
        let alpha = col[0];
        let (head, tail) = col.split_at_mut(1);
        let (tau, beta) = larfg(alpha, tail);
        head[0] = T::ONE;
        taus[k] = tau;
        betas[k] = beta;
        if tau == T::ZERO {
            continue;
        }
        // Apply H^H = I − conj(tau)·v·v^H to the trailing columns.
        let tc = tau.conj();
        // `rest` begins at row 0 of column k+1; offset by k to land on row k.
        let (vcol, rest) = wd[k * m + k..].split_at_mut(m - k);
        let v = &vcol[..m - k];
        for j in 0..(n - k - 1) {
            let cj = &mut rest[j * m + k..j * m + m];
            let mut s = T::ZERO;
            for (vi, cji) in v.iter().zip(cj.iter()) {
                s += vi.conj() * *cji;
            }
            let f = tc * s;
            for (vi, cji) in v.iter().zip(cj.iter_mut()) {
                *cji -= f * *vi;
            }
        }
    }

    // Accumulate Q = H_0 · H_1 ⋯ H_{n-1} applied to the thin identity,
    // in reverse so each reflector only touches columns ≥ k.
    let mut q = DenseMatrix::<T>::zeros(m, n);
    for j in 0..n {
        *q.at_mut(j, j) = T::ONE;
    }
    for k in (0..n).rev() {
        let tau = taus[k];
        if tau == T::ZERO {
            continue;
        }
        let v: Vec<T> = w.data()[k * m + k..(k + 1) * m].to_vec();
        let qd = q.data_mut();
        for j in k..n {
            let cj = &mut qd[j * m + k..(j + 1) * m];
            let mut s = T::ZERO;
            for (vi, cji) in v.iter().zip(cj.iter()) {
                s += vi.conj() * *cji;
            }
            let f = tau * s;
            for (vi, cji) in v.iter().zip(cj.iter_mut()) {
                *cji -= f * *vi;
            }
        }
    }

    // Fix column signs so the implicit R diagonal is non-negative.
    for k in 0..n {
        if betas[k] < 0.0 {
            for v in q.col_mut(k) {
                *v = -*v;
            }
        }
    }
    q
}

const HEEVD_MAX_SWEEPS_PER_EIGENVALUE: usize = 50;

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and a
/// unitary matrix of eigenvectors (columns).
///
/// Householder tridiagonalization followed by implicit-shift QL; the
/// iteration is capped and failure to converge is reported, never hidden.
pub fn heevd<T: Scalar>(a: MatView<'_, T>) -> Result<(Vec<f64>, DenseMatrix<T>)> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "heevd: matrix must be square");
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    if n == 1 {
        return Ok((vec![a.at(0, 0).re()], DenseMatrix::identity(1)));
    }

    // --- Householder tridiagonalization (full storage, updates confined
    // to the trailing block; reflectors stored in the reduced columns).
    let mut w = a.to_owned();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n - 1];
    let mut taus = vec![T::ZERO; n - 1];
    let mut p = vec![T::ZERO; n];
    let mut u = vec![T::ZERO; n];

    for k in 0..n - 1 {
        let len = n - 1 - k;
        let wd = w.data_mut();
        let col = &mut wd[k * n + k + 1..(k + 1) * n];
        let alpha = col[0];
        let (head, tail) = col.split_at_mut(1);
        let (tau, beta) = larfg(alpha, tail);
        head[0] = T::ONE;
        e[k] = beta;
        taus[k] = tau;
        if tau == T::ZERO || len == 1 {
            continue;
        }
        // Hermitian rank-2 update of the trailing block:
        //   p = tau·A₂·v,  u = p − ½·tau·(p^H v)·v,  A₂ ← A₂ − v u^H − u v^H
        let v_start = k * n + k + 1;
        for pi in p[..len].iter_mut() {
            *pi = T::ZERO;
        }
        for j in 0..len {
            let vj = wd[v_start + j];
            let colj = (k + 1 + j) * n + k + 1;
            for i in 0..len {
                p[i] += wd[colj + i] * vj;
            }
        }
        for pi in p[..len].iter_mut() {
            *pi = tau * *pi;
        }
        let mut phv = T::ZERO;
        for i in 0..len {
            phv += p[i].conj() * wd[v_start + i];
        }
        let c = (tau * phv).scale(0.5);
        for i in 0..len {
            u[i] = p[i] - c * wd[v_start + i];
        }
        for j in 0..len {
            let vj = wd[v_start + j];
            let uj = u[j];
            let colj = (k + 1 + j) * n + k + 1;
            for i in 0..len {
                let upd = wd[v_start + i] * uj.conj() + u[i] * vj.conj();
                wd[colj + i] -= upd;
            }
        }
    }
    for i in 0..n {
        d[i] = w.at(i, i).re();
    }

    // --- Accumulate the unitary factor (reverse order keeps each
    // reflector's footprint to columns ≥ k+1).
    let mut q = DenseMatrix::<T>::identity(n);
    for k in (0..n - 1).rev() {
        let tau = taus[k];
        if tau == T::ZERO {
            continue;
        }
        let v: Vec<T> = w.data()[k * n + k + 1..(k + 1) * n].to_vec();
        let qd = q.data_mut();
        for j in k + 1..n {
            let cj = &mut qd[j * n + k + 1..(j + 1) * n];
            let mut s = T::ZERO;
            for (vi, cji) in v.iter().zip(cj.iter()) {
                s += vi.conj() * *cji;
            }
            let f = tau * s;
            for (vi, cji) in v.iter().zip(cj.iter_mut()) {
                *cji -= f * *vi;
            }
        }
    }

    // --- Implicit-shift QL on the real tridiagonal, rotations applied to
    // the accumulated complex columns.
    let mut evals = d;
    let mut sub = e;
    sub.push(0.0);
    ql_implicit(&mut evals, &mut sub, &mut q)?;

    // --- Ascending order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[i].total_cmp(&evals[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| evals[i]).collect();
    q.permute_cols(0, &order);
    Ok((sorted, q))
}

/// QL iteration with implicit Wilkinson shifts (EISPACK `tql2` lineage).
fn ql_implicit<T: Scalar>(d: &mut [f64], e: &mut [f64], q: &mut DenseMatrix<T>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > HEEVD_MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::EigNoConvergence {
                    max_sweeps: HEEVD_MAX_SWEEPS_PER_EIGENVALUE,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                rotate_cols(q, i, s, c);
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Applies the real Givens rotation to eigenvector columns `i`, `i+1`.
fn rotate_cols<T: Scalar>(q: &mut DenseMatrix<T>, i: usize, s: f64, c: f64) {
    let rows = q.rows();
    let data = q.data_mut();
    let (left, right) = data.split_at_mut((i + 1) * rows);
    let qi = &mut left[i * rows..];
    let qi1 = &mut right[..rows];
    for (a, b) in qi.iter_mut().zip(qi1.iter_mut()) {
        let tmp = *b;
        *b = a.scale(s) + tmp.scale(c);
        *a = a.scale(c) - tmp.scale(s);
    }
}
