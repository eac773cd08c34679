//! Chebyshev polynomial filter over the distributed grid.
//!
//! Each active column `v_j` is transformed into `p_{d_j}(H)·v_j`, where
//! `p_d` is the scaled-and-shifted Chebyshev polynomial mapping the
//! unwanted interval `[μ_ne, b_sup]` to `[−1, 1]`, normalized at the
//! damping point `μ₁`:
//!
//! ```text
//! σ₁ = e/(μ₁−c)          C¹ = (σ₁/e)(H−cI)C⁰
//! σ_{i+1} = 1/(2/σ₁ − σ_i)
//! C^{i+1} = 2(σ_{i+1}/e)(H−cI)C^i − σ_iσ_{i+1}C^{i−1}
//! ```
//!
//! so `p_d(λ) = T_d((λ−c)/e) / T_d((μ₁−c)/e)`. The scaling keeps the
//! iterates bounded for large degrees.
//!
//! Odd steps multiply into the B-layout buffer via the local tile's
//! adjoint, even steps back into C via the tile itself (H is Hermitian,
//! so no redistribution is needed between steps); even total degrees
//! guarantee the result lands in C. Per-vector degrees are handled by
//! sorting the active columns by degree: all vectors advance together
//! and a column simply stops updating once its degree is reached.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::RankCtx;
use crate::kernels::{gemm, Op};
use crate::matrix::{DenseMatrix, MatView, MatViewMut};
use crate::profiler::{Kernel, Phase, RankProfiler};
use crate::scalar::Scalar;

/// Spectral window of one filter application: `center`/`half_width`
/// describe the damped interval, `damping_point` is μ₁ where the
/// polynomial is normalized to one.
#[derive(Clone, Copy, Debug)]
pub struct FilterParams {
    pub center: f64,
    pub half_width: f64,
    pub damping_point: f64,
}

impl FilterParams {
    pub fn new(center: f64, half_width: f64, damping_point: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::Config(format!(
                "filter half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            damping_point,
        })
    }

    /// σ₁..σ_d of the damped recurrence.
    fn sigmas(&self, d: usize) -> Vec<f64> {
        let sigma1 = self.half_width / (self.damping_point - self.center);
        let mut s = Vec::with_capacity(d + 1);
        s.push(0.0); // unused slot so s[i] is σ_i
        s.push(sigma1);
        for i in 1..d {
            let next = 1.0 / (2.0 / sigma1 - s[i]);
            s.push(next);
        }
        s
    }
}

/// `p_d(λ)` evaluated by the same scalar recurrence the matrix filter
/// applies; handy for inspecting the response curve.
pub fn scalar_response(params: &FilterParams, lambda: f64, deg: usize) -> f64 {
    if deg == 0 {
        return 1.0;
    }
    let e = params.half_width;
    let c = params.center;
    let sig = params.sigmas(deg);
    let mut prev = 1.0f64;
    let mut cur = (sig[1] / e) * (lambda - c);
    for i in 2..=deg {
        let next = 2.0 * (sig[i] / e) * (lambda - c) * cur - sig[i - 1] * sig[i] * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Chebyshev growth factor off the damped interval:
/// `max(|t−√(t²−1)|, |t+√(t²−1)|)`, with the square root taken complex
/// inside the interval so the factor is exactly 1 there.
pub fn growth_factor(t: f64) -> f64 {
    if !t.is_finite() {
        return f64::INFINITY;
    }
    let a = t.abs();
    if a <= 1.0 {
        1.0
    } else {
        a + (t * t - 1.0).sqrt()
    }
}

/// Per-vector filter degrees with the evenness/cap invariants.
#[derive(Clone, Debug)]
pub struct DegreeSchedule {
    degs: Vec<usize>,
    pub deg_max: usize,
}

impl DegreeSchedule {
    /// All vectors start at `deg_init`; both `deg_init` and `deg_max`
    /// must be even and `2 ≤ deg_init ≤ deg_max`.
    pub fn uniform(n_e: usize, deg_init: usize, deg_max: usize) -> Result<Self> {
        if deg_init % 2 != 0 || deg_max % 2 != 0 {
            return Err(Error::Config(format!(
                "filter degrees must be even: deg={deg_init}, deg_max={deg_max}"
            )));
        }
        if deg_init < 2 || deg_init > deg_max {
            return Err(Error::Config(format!(
                "need 2 <= deg ({deg_init}) <= deg_max ({deg_max})"
            )));
        }
        Ok(Self {
            degs: vec![deg_init; n_e],
            deg_max,
        })
    }

    pub fn degs(&self) -> &[usize] {
        &self.degs
    }

    pub fn degs_mut(&mut self) -> &mut [usize] {
        &mut self.degs
    }

    pub fn max_active(&self, locked: usize) -> usize {
        self.degs[locked..].iter().copied().max().unwrap_or(0)
    }

    /// Recomputes the degree of every active vector from its residual
    /// and Ritz value: `deg_j = ⌈ln(tol/res_j)/ln(1/ρ_j)⌉` rounded up to
    /// even and clamped to `[2, deg_max]`; vectors whose Ritz value sits
    /// inside the damped interval (ρ ≤ 1+ε) get the full `deg_max`.
    pub fn optimize(
        &mut self,
        tol: f64,
        resd: &[f64],
        lambda: &[f64],
        params: &FilterParams,
        locked: usize,
    ) {
        let cap = self.deg_max;
        for j in locked..self.degs.len() {
            let t = (lambda[j] - params.center) / params.half_width;
            let rho = growth_factor(t);
            let deg = if rho <= 1.0 + 1e-8 {
                cap
            } else if !(resd[j] > tol) {
                2
            } else {
                let raw = ((resd[j] / tol).ln() / rho.ln()).ceil();
                if !raw.is_finite() || raw >= cap as f64 {
                    cap
                } else {
                    (raw.max(2.0) as usize).next_multiple_of(2)
                }
            };
            self.degs[j] = deg.clamp(2, cap);
        }
    }
}

/// Sorts the active columns by (degree, Ritz value) ascending, applying
/// the same permutation to C, C2, Λ, residuals, and the schedule. The
/// locked prefix is untouched.
pub fn sort_by_degree<T: Scalar>(
    c: &mut DenseMatrix<T>,
    c2: &mut DenseMatrix<T>,
    lambda: &mut [f64],
    resd: &mut [f64],
    degs: &mut DegreeSchedule,
    locked: usize,
) {
    let n_e = degs.degs.len();
    let active = n_e - locked;
    if active <= 1 {
        return;
    }
    let mut perm: Vec<usize> = (0..active).collect();
    perm.sort_by(|&a, &b| {
        let (ja, jb) = (locked + a, locked + b);
        degs.degs[ja]
            .cmp(&degs.degs[jb])
            .then(lambda[ja].total_cmp(&lambda[jb]))
            .then(a.cmp(&b))
    });
    let is_identity = perm.iter().enumerate().all(|(k, &p)| k == p);
    if is_identity {
        return;
    }
    c.permute_cols(locked, &perm);
    c2.permute_cols(locked, &perm);
    permute_slice(&mut lambda[locked..], &perm);
    permute_slice(&mut resd[locked..], &perm);
    permute_slice(&mut degs.degs[locked..], &perm);
}

pub(crate) fn permute_slice<V: Copy>(s: &mut [V], perm: &[usize]) {
    let orig: Vec<V> = s.to_vec();
    for (k, &p) in perm.iter().enumerate() {
        s[k] = orig[p];
    }
}

// ---------------------------------------------------------------------
// Distributed HEMM
// ---------------------------------------------------------------------

/// `B ← α·(H·C) + β·B_old` in B layout: each rank multiplies with its
/// tile's adjoint (Hermitian symmetry stands in for the redistribution)
/// and the partial products are summed over the column communicator.
/// The β term enters through member 0 exactly once; B must be replicated
/// across the column communicator beforehand, which the alternation
/// guarantees.
#[allow(clippy::too_many_arguments)]
pub fn hemm_to_b<T: Scalar>(
    ctx: &RankCtx,
    h: &DenseMatrix<T>,
    c_act: MatView<'_, T>,
    b_act: &mut MatViewMut<'_, T>,
    alpha: f64,
    beta: f64,
    prof: &mut RankProfiler,
    kernel: Kernel,
    iteration: usize,
) -> Result<()> {
    let t0 = Instant::now();
    let beta_t = if beta != 0.0 && ctx.col_comm().my_index() == 0 {
        T::from_re(beta)
    } else {
        T::ZERO
    };
    gemm(T::from_re(alpha), h.view(), Op::ConjTrans, c_act, Op::None, beta_t, b_act);
    prof.add(kernel, iteration, Phase::Compute, t0.elapsed().as_secs_f64(), 0, 0);

    let (m0, w0) = ctx.comm_totals();
    let t1 = Instant::now();
    ctx.col_comm().allreduce_sum(b_act.data_mut())?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(kernel, iteration, Phase::Comm, t1.elapsed().as_secs_f64(), m1 - m0, w1 - w0);
    Ok(())
}

/// `C ← α·(H·B) + β·C_old` in C layout; mirror of [`hemm_to_b`] with the
/// partial sums reduced over the row communicator.
#[allow(clippy::too_many_arguments)]
pub fn hemm_to_c<T: Scalar>(
    ctx: &RankCtx,
    h: &DenseMatrix<T>,
    b_act: MatView<'_, T>,
    c_act: &mut MatViewMut<'_, T>,
    alpha: f64,
    beta: f64,
    prof: &mut RankProfiler,
    kernel: Kernel,
    iteration: usize,
) -> Result<()> {
    let t0 = Instant::now();
    let beta_t = if beta != 0.0 && ctx.row_comm().my_index() == 0 {
        T::from_re(beta)
    } else {
        T::ZERO
    };
    gemm(T::from_re(alpha), h.view(), Op::None, b_act, Op::None, beta_t, c_act);
    prof.add(kernel, iteration, Phase::Compute, t0.elapsed().as_secs_f64(), 0, 0);

    let (m0, w0) = ctx.comm_totals();
    let t1 = Instant::now();
    ctx.row_comm().allreduce_sum(c_act.data_mut())?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(kernel, iteration, Phase::Comm, t1.elapsed().as_secs_f64(), m1 - m0, w1 - w0);
    Ok(())
}

/// Local positions `(i, j)` of global diagonal entries inside this
/// rank's H tile, used to apply the spectral shift in place.
pub fn local_diag_positions(
    row_idx: &[usize],
    col_idx: &[usize],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, &g) in row_idx.iter().enumerate() {
        if let Ok(b) = col_idx.binary_search(&g) {
            out.push((a, b));
        }
    }
    out
}

/// Applies `p_{d_j}(H)` to the active columns of C (columns `locked..`),
/// using B for the odd-step intermediates. Active degrees must be even,
/// at least 2, and non-decreasing (sorted batching). Returns the number
/// of single-vector products performed, `Σ_j d_j`.
///
/// The local H tile is shifted by the filter center on its diagonal
/// entries during the call and restored bit-exactly afterwards.
#[allow(clippy::too_many_arguments)]
pub fn chebyshev_filter<T: Scalar>(
    ctx: &RankCtx,
    h: &mut DenseMatrix<T>,
    diag: &[(usize, usize)],
    c: &mut DenseMatrix<T>,
    b: &mut DenseMatrix<T>,
    degs: &[usize],
    locked: usize,
    params: &FilterParams,
    prof: &mut RankProfiler,
    iteration: usize,
) -> Result<u64> {
    let n_e = c.cols();
    let active = &degs[locked..];
    if active.is_empty() {
        return Ok(0);
    }
    for w in active.windows(2) {
        if w[0] > w[1] {
            return Err(Error::Config("filter degrees must be sorted ascending".into()));
        }
    }
    if active.iter().any(|&d| d < 2 || d % 2 != 0) {
        return Err(Error::Config("active filter degrees must be even and >= 2".into()));
    }
    let d_max = *active.last().unwrap();
    let e = params.half_width;
    let cshift = params.center;
    let sig = params.sigmas(d_max);

    // Shift the local diagonal: H ← H − c·I, restored on exit.
    let t0 = Instant::now();
    let saved: Vec<T> = diag.iter().map(|&(i, j)| h.at(i, j)).collect();
    for &(i, j) in diag {
        *h.at_mut(i, j) = h.at(i, j) - T::from_re(cshift);
    }
    prof.add(Kernel::Filter, iteration, Phase::Compute, t0.elapsed().as_secs_f64(), 0, 0);

    let mut matvecs = 0u64;
    let mut result = Ok(());
    for s in 1..=d_max {
        let batch = active.partition_point(|&d| d < s);
        let lo = locked + batch;
        let width = n_e - lo;
        if width == 0 {
            break;
        }
        matvecs += width as u64;
        let (alpha, beta) = if s == 1 {
            (sig[1] / e, 0.0)
        } else {
            (2.0 * sig[s] / e, -sig[s - 1] * sig[s])
        };
        let step = if s % 2 == 1 {
            let mut b_view = b.cols_view_mut(lo, n_e);
            hemm_to_b(ctx, h, c.cols_view(lo, n_e), &mut b_view, alpha, beta, prof, Kernel::Filter, iteration)
        } else {
            let mut c_view = c.cols_view_mut(lo, n_e);
            hemm_to_c(ctx, h, b.cols_view(lo, n_e), &mut c_view, alpha, beta, prof, Kernel::Filter, iteration)
        };
        if let Err(err) = step {
            result = Err(err);
            break;
        }
    }

    // Restore the diagonal exactly even if a collective failed.
    let t2 = Instant::now();
    for (&(i, j), &orig) in diag.iter().zip(&saved) {
        *h.at_mut(i, j) = orig;
    }
    prof.add(Kernel::Filter, iteration, Phase::Compute, t2.elapsed().as_secs_f64(), 0, 0);
    result.map(|_| matvecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{
        distribute, gather, DistContext, Distribution, Grid, GridShape, Layout,
    };
    use crate::kernels::heevd;
    use crate::matgen::{generate, SpectrumSpec};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Closed-form Chebyshev evaluation, independent of the recurrence:
    /// `T_d(t) = cos(d·acos t)` inside, `sign(t)^d·cosh(d·acosh|t|)` outside.
    fn cheb_t(d: usize, t: f64) -> f64 {
        if t.abs() <= 1.0 {
            (d as f64 * t.acos()).cos()
        } else {
            let sign = if t < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
            sign * (d as f64 * t.abs().acosh()).cosh()
        }
    }

    fn oracle_response(params: &FilterParams, lambda: f64, d: usize) -> f64 {
        let t = (lambda - params.center) / params.half_width;
        let t1 = (params.damping_point - params.center) / params.half_width;
        cheb_t(d, t) / cheb_t(d, t1)
    }

    #[test]
    fn scalar_recurrence_matches_closed_form() {
        let params = FilterParams::new(0.6, 0.4, -0.05).unwrap();
        for &d in &[2usize, 4, 8, 20, 36] {
            for k in 0..40 {
                let lambda = -0.1 + k as f64 * 0.03;
                let got = scalar_response(&params, lambda, d);
                let want = oracle_response(&params, lambda, d);
                let scale = want.abs().max(1.0);
                assert!(
                    (got - want).abs() / scale < 1e-11,
                    "d={d} λ={lambda}: {got} vs {want}"
                );
            }
        }
    }

    fn filter_on_grid<T: Scalar>(
        shape: GridShape,
        h_global: &DenseMatrix<T>,
        x_global: &DenseMatrix<T>,
        degs: Vec<usize>,
        params: FilterParams,
    ) -> (DenseMatrix<T>, u64) {
        let n = h_global.rows();
        let k = x_global.cols();
        let dist = Distribution::Block;
        let dc = DistContext::new(n, dist, shape);
        let h_blocks = distribute(h_global, dist, shape, Layout::Full2D).unwrap();
        let x_blocks = distribute(x_global, dist, shape, Layout::Col1D).unwrap();
        let grid = Grid::new(shape);
        let outs = grid
            .run(|ctx| {
                let mut h = h_blocks[ctx.rank].clone();
                let mut c = x_blocks[ctx.rank].clone();
                let mut b = DenseMatrix::zeros(dc.col_part.count(ctx.col), k);
                let diag = local_diag_positions(
                    &dc.row_part.indices(ctx.row),
                    &dc.col_part.indices(ctx.col),
                );
                let h_before = h.clone();
                let mut prof = RankProfiler::new();
                let mv = chebyshev_filter(
                    &ctx, &mut h, &diag, &mut c, &mut b, &degs, 0, &params, &mut prof, 1,
                )?;
                assert_eq!(h.data(), h_before.data(), "H must be restored bit-exactly");
                Ok((c, mv))
            })
            .unwrap();
        let blocks: Vec<DenseMatrix<T>> = outs.iter().map(|(c, _)| c.clone()).collect();
        let mv = outs[0].1;
        (
            gather(&blocks, dist, shape, Layout::Col1D, n, k).unwrap(),
            mv,
        )
    }

    #[test]
    fn diagonal_matrix_basis_vectors() {
        // H = diag(λ), input e_i: the output is p_d(λ_i)·e_i.
        let n = 8;
        let lambdas: Vec<f64> = (0..n).map(|i| i as f64 * 0.3 - 0.4).collect();
        let h = DenseMatrix::from_fn(n, n, |i, j| if i == j { lambdas[i] } else { 0.0 });
        let x = DenseMatrix::<f64>::identity(n);
        let params = FilterParams::new(1.3, 0.5, -0.45).unwrap();
        let degs = vec![6usize; n];
        let (y, mv) = filter_on_grid(GridShape::new(1, 1), &h, &x, degs, params);
        assert_eq!(mv, 6 * n as u64);
        for i in 0..n {
            let want = oracle_response(&params, lambdas[i], 6);
            for r in 0..n {
                let expect = if r == i { want } else { 0.0 };
                assert!(
                    (y.at(r, i) - expect).abs() < 1e-11 * want.abs().max(1.0),
                    "column {i}"
                );
            }
        }
    }

    #[test]
    fn eigenvector_stays_parallel() {
        let spec = SpectrumSpec::uniform(0.0, 2.0, 24).unwrap();
        let h = generate::<Complex64>(&spec, 5);
        let (vals, vecs) = heevd(h.view()).unwrap();
        let x = DenseMatrix::from_fn(24, 1, |i, _| vecs.at(i, 3));
        let params = FilterParams::new(1.2, 0.8, vals[0]).unwrap();
        let (y, _) = filter_on_grid(GridShape::new(1, 1), &h, &x, vec![8], params);
        // Output must be p(λ₃)·x: remove the scaling and compare.
        let scale = oracle_response(&params, vals[3], 8);
        for i in 0..24 {
            let d = (y.at(i, 0) - x.at(i, 0).scale(scale)).abs();
            assert!(d < 1e-10 * scale.abs().max(1.0));
        }
    }

    fn eigendecomposition_filter_oracle<T: Scalar>(
        h: &DenseMatrix<T>,
        x: &DenseMatrix<T>,
        degs: &[usize],
        params: &FilterParams,
    ) -> DenseMatrix<T> {
        let (vals, vecs) = heevd(h.view()).unwrap();
        let n = h.rows();
        let k = x.cols();
        // coeff = Vᴴ X, then scale row r of coeff by p_d(λ_r) per column degree.
        let mut coeff = DenseMatrix::zeros(n, k);
        gemm(T::ONE, vecs.view(), Op::ConjTrans, x.view(), Op::None, T::ZERO, &mut coeff.view_mut());
        for j in 0..k {
            for r in 0..n {
                let p = oracle_response(params, vals[r], degs[j]);
                *coeff.at_mut(r, j) = coeff.at(r, j).scale(p);
            }
        }
        let mut y = DenseMatrix::zeros(n, k);
        gemm(T::ONE, vecs.view(), Op::None, coeff.view(), Op::None, T::ZERO, &mut y.view_mut());
        y
    }

    #[test]
    fn matches_eigendecomposition_oracle() {
        let n = 100;
        let spec = SpectrumSpec::uniform(-1.0, 1.0, n).unwrap();
        let h = generate::<f64>(&spec, 9);
        let mut rng = ChaCha12Rng::seed_from_u64(100);
        let x = DenseMatrix::from_fn(n, 8, |_, _| f64::standard_normal(&mut rng));
        let params = FilterParams::new(0.2, 0.8, -1.01).unwrap();
        let degs = vec![4usize; 8];
        let (y, _) = filter_on_grid(GridShape::new(1, 1), &h, &x, degs.clone(), params);
        let oracle = eigendecomposition_filter_oracle(&h, &x, &degs, &params);
        let scale = oracle.frobenius_norm();
        let mut diff: f64 = 0.0;
        for (a, b) in y.data().iter().zip(oracle.data()) {
            diff = diff.max((*a - *b).abs());
        }
        assert!(diff / scale < 1e-12, "diff {diff}, scale {scale}");
    }

    #[test]
    fn mixed_degrees_batch_correctly() {
        let n = 40;
        let spec = SpectrumSpec::uniform(0.0, 1.0, n).unwrap();
        let h = generate::<Complex64>(&spec, 13);
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let x = DenseMatrix::from_fn(n, 3, |_, _| Complex64::standard_normal(&mut rng));
        let params = FilterParams::new(0.55, 0.45, -0.01).unwrap();
        let degs = vec![2usize, 4, 6];
        let (y, mv) = filter_on_grid(GridShape::new(2, 2), &h, &x, degs.clone(), params);
        assert_eq!(mv, 12, "matvec counter is the sum of active degrees");
        let oracle = eigendecomposition_filter_oracle(&h, &x, &degs, &params);
        for j in 0..3 {
            for i in 0..n {
                let d = (y.at(i, j) - oracle.at(i, j)).abs();
                assert!(d < 1e-11, "col {j} row {i}: {d}");
            }
        }
    }

    #[test]
    fn grid_shape_invariance() {
        let n = 36;
        let spec = SpectrumSpec::uniform(0.0, 1.0, n).unwrap();
        let h = generate::<f64>(&spec, 21);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = DenseMatrix::from_fn(n, 5, |_, _| f64::standard_normal(&mut rng));
        let params = FilterParams::new(0.6, 0.4, -0.02).unwrap();
        let degs = vec![8usize; 5];
        let (y1, _) = filter_on_grid(GridShape::new(1, 1), &h, &x, degs.clone(), params);
        let (y2, _) = filter_on_grid(GridShape::new(2, 2), &h, &x, degs.clone(), params);
        let (y3, _) = filter_on_grid(GridShape::new(3, 1), &h, &x, degs, params);
        let scale = y1.frobenius_norm();
        for (a, b) in y1.data().iter().zip(y2.data()) {
            assert!((a - b).abs() / scale < 1e-13);
        }
        for (a, b) in y1.data().iter().zip(y3.data()) {
            assert!((a - b).abs() / scale < 1e-13);
        }
    }

    #[test]
    fn filter_is_linear_per_degree() {
        let n = 30;
        let spec = SpectrumSpec::uniform(-0.5, 0.5, n).unwrap();
        let h = generate::<f64>(&spec, 17);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let x = DenseMatrix::from_fn(n, 2, |_, _| f64::standard_normal(&mut rng));
        let (al, be) = (0.7, -1.3);
        let mut combo = DenseMatrix::zeros(n, 1);
        for i in 0..n {
            *combo.at_mut(i, 0) = al * x.at(i, 0) + be * x.at(i, 1);
        }
        let params = FilterParams::new(0.25, 0.25, -0.51).unwrap();
        let (yx, _) = filter_on_grid(GridShape::new(1, 1), &h, &x, vec![6, 6], params);
        let (yc, _) = filter_on_grid(GridShape::new(1, 1), &h, &combo, vec![6], params);
        for i in 0..n {
            let want = al * yx.at(i, 0) + be * yx.at(i, 1);
            let scale = want.abs().max(1.0);
            assert!((yc.at(i, 0) - want).abs() / scale < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_degrees_and_width() {
        assert!(FilterParams::new(0.0, 0.0, -1.0).is_err());
        assert!(FilterParams::new(0.0, -0.5, -1.0).is_err());
        let shape = GridShape::new(1, 1);
        let h = DenseMatrix::<f64>::identity(4);
        let x = DenseMatrix::<f64>::identity(4);
        let params = FilterParams::new(0.5, 0.5, -0.1).unwrap();
        let dc = DistContext::new(4, Distribution::Block, shape);
        let grid = Grid::new(shape);
        let err = grid
            .run(|ctx| {
                let mut hh = h.clone();
                let mut c = x.clone();
                let mut b = DenseMatrix::zeros(4, 4);
                let diag = local_diag_positions(&dc.row_part.indices(0), &dc.col_part.indices(0));
                let mut prof = RankProfiler::new();
                chebyshev_filter(
                    &ctx, &mut hh, &diag, &mut c, &mut b, &[3, 4, 4, 4], 0, &params, &mut prof, 1,
                )?;
                Ok(())
            })
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn degree_opt_formula() {
        let n_e = 4;
        // t = −1.25 gives ρ = 2 exactly.
        let params = FilterParams::new(0.0, 1.0, -4.0).unwrap();
        let mut sched = DegreeSchedule::uniform(n_e, 20, 36).unwrap();
        let lambda = vec![-1.25; n_e];
        // Residual already at tol → minimal degree 2.
        sched.optimize(1e-10, &[1e-10; 4], &lambda, &params, 0);
        assert_eq!(sched.degs(), &[2, 2, 2, 2]);
        // ρ=2, res=1e-2, tol=1e-10 → ceil(26.575...) = 27 → 28.
        sched.optimize(1e-10, &[1e-2; 4], &lambda, &params, 0);
        assert_eq!(sched.degs(), &[28, 28, 28, 28]);
        // Deep exterior value: enormous ρ clamps to 2.
        let far = vec![-1e8; n_e];
        sched.optimize(1e-10, &[1e-2; 4], &far, &params, 0);
        assert_eq!(sched.degs(), &[2, 2, 2, 2]);
        // Inside the damped interval: forced to deg_max.
        let inside = vec![0.3; n_e];
        sched.optimize(1e-10, &[1e-2; 4], &inside, &params, 0);
        assert_eq!(sched.degs(), &[36, 36, 36, 36]);
        // Locked prefix untouched.
        let mut sched = DegreeSchedule::uniform(n_e, 20, 36).unwrap();
        sched.optimize(1e-10, &[0.0, 1e-2, 1e-2, 1e-2], &lambda, &params, 1);
        assert_eq!(sched.degs()[0], 20);
    }

    #[test]
    fn degree_opt_invariants_hold() {
        let params = FilterParams::new(0.4, 0.35, -0.9).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        for _ in 0..200 {
            let n_e = 6;
            let mut sched = DegreeSchedule::uniform(n_e, 20, 36).unwrap();
            let lambda: Vec<f64> = (0..n_e).map(|_| f64::standard_normal(&mut rng)).collect();
            let resd: Vec<f64> = (0..n_e)
                .map(|_| 10f64.powf(f64::standard_normal(&mut rng) * 4.0 - 6.0))
                .collect();
            sched.optimize(1e-10, &resd, &lambda, &params, 0);
            for &d in sched.degs() {
                assert!(d % 2 == 0 && (2..=36).contains(&d));
            }
        }
    }

    #[test]
    fn sort_by_degree_cases() {
        let mut c = DenseMatrix::from_fn(2, 3, |_, j| j as f64);
        let mut c2 = c.clone();
        let mut lambda = vec![0.1, 0.2, 0.3];
        let mut resd = vec![1e-3, 1e-4, 1e-5];
        let mut sched = DegreeSchedule::uniform(3, 2, 36).unwrap();
        sched.degs_mut().copy_from_slice(&[4, 2, 6]);
        sort_by_degree(&mut c, &mut c2, &mut lambda, &mut resd, &mut sched, 0);
        assert_eq!(sched.degs(), &[2, 4, 6]);
        assert_eq!(c.data(), &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]);
        assert_eq!(c2.data(), c.data());
        assert_eq!(lambda, vec![0.2, 0.1, 0.3]);
        assert_eq!(resd, vec![1e-4, 1e-3, 1e-5]);

        // Already sorted → identity.
        let before = c.data().to_vec();
        sort_by_degree(&mut c, &mut c2, &mut lambda, &mut resd, &mut sched, 0);
        assert_eq!(c.data(), &before[..]);

        // Ties broken by ascending Ritz value, deterministically.
        let mut c = DenseMatrix::from_fn(2, 3, |_, j| j as f64);
        let mut c2 = c.clone();
        let mut lambda = vec![0.5, 0.1, 0.3];
        let mut resd = vec![0.0; 3];
        let mut sched = DegreeSchedule::uniform(3, 2, 36).unwrap();
        sched.degs_mut().copy_from_slice(&[4, 4, 4]);
        sort_by_degree(&mut c, &mut c2, &mut lambda, &mut resd, &mut sched, 0);
        assert_eq!(lambda, vec![0.1, 0.3, 0.5]);
        assert_eq!(c.data(), &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
    }
}
