//! Spectral-bound estimation from a few Lanczos runs.
//!
//! A handful of short Lanczos recurrences on random vectors provide
//! `μ₁` (smallest Ritz value seen), `b_sup` (a safeguarded upper bound
//! `θ_max + ‖f_k‖` with the final residual norm added on), and `μ_ne`,
//! estimated from the pooled Ritz values and their squared first
//! eigenvector components used as an empirical spectral density: the
//! estimated eigenvalue count below `t` is `(N/runs)·Σ τ_i` over Ritz
//! values `θ_i ≤ t`, and `μ_ne` is the smallest `t` reaching `n_e`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::filter::{hemm_to_b, FilterParams};
use crate::grid::{redistribute_b_to_c, DistContext, RankCtx};
use crate::kernels::heevd;
use crate::matrix::DenseMatrix;
use crate::profiler::{Kernel, Phase, RankProfiler};
use crate::scalar::Scalar;

/// Estimated spectral window. `mu_1 ≤ mu_ne < b_sup` always holds; the
/// degenerate safeguard widens collapsed intervals so the filter's
/// half-width stays positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub mu_1: f64,
    pub mu_ne: f64,
    pub b_sup: f64,
}

const DEGENERATE_EPS: f64 = 1e-8;

impl SpectralBounds {
    pub fn new(mu_1: f64, mu_ne: f64, b_sup: f64) -> Self {
        let mut b = Self { mu_1, mu_ne, b_sup };
        b.enforce();
        b
    }

    /// Re-estimates the lower bounds while keeping `b_sup` fixed.
    pub fn update(&mut self, mu_1: f64, mu_ne: f64) {
        self.mu_1 = mu_1;
        self.mu_ne = mu_ne;
        self.enforce();
    }

    fn enforce(&mut self) {
        let gap = DEGENERATE_EPS * self.b_sup.abs().max(1.0);
        if self.b_sup - self.mu_ne < gap {
            self.mu_ne = self.b_sup - gap;
        }
        if self.mu_1 > self.mu_ne {
            self.mu_1 = self.mu_ne;
        }
    }

    /// Filter center `(b_sup + μ_ne)/2`.
    pub fn center(&self) -> f64 {
        0.5 * (self.b_sup + self.mu_ne)
    }

    /// Filter half-width `(b_sup − μ_ne)/2`.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.b_sup - self.mu_ne)
    }

    pub fn filter_params(&self) -> Result<FilterParams> {
        FilterParams::new(self.center(), self.half_width(), self.mu_1)
    }
}

/// New lower-bound estimates from the current Ritz values: their
/// minimum and maximum.
pub fn update_bounds(lambda: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in lambda {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo, hi)
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Steps per run (the Krylov depth), capped at N.
    pub steps: usize,
    /// Number of independent runs pooled into the density estimate.
    pub runs: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { steps: 25, runs: 4 }
    }
}

struct RunSummary {
    theta: Vec<f64>,
    weights: Vec<f64>,
    b_sup: f64,
}

/// Estimates the spectral bounds of the distributed Hermitian matrix.
///
/// Every column communicator executes the identical recurrence (the
/// starting blocks are keyed by the rank's row coordinate), so the
/// result is bitwise reproducible for a fixed (seed, grid).
#[allow(clippy::too_many_arguments)]
pub fn lanczos_bounds<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    h: &DenseMatrix<T>,
    n: usize,
    n_e: usize,
    opts: &LanczosOptions,
    seed: u64,
    prof: &mut RankProfiler,
) -> Result<SpectralBounds> {
    if opts.steps < 2 {
        return Err(Error::Config("lanczos needs at least 2 steps".into()));
    }
    if opts.runs < 1 {
        return Err(Error::Config("lanczos needs at least 1 run".into()));
    }
    if n_e >= n {
        return Err(Error::Config(format!(
            "search space n_e={n_e} must be smaller than N={n}"
        )));
    }
    let k = opts.steps.min(n);
    let mut summaries = Vec::with_capacity(opts.runs);
    for run in 0..opts.runs {
        summaries.push(lanczos_run(ctx, dc, h, k, seed, run, prof)?);
    }

    let mut mu_1 = f64::INFINITY;
    let mut b_sup = f64::NEG_INFINITY;
    let mut pool: Vec<(f64, f64)> = Vec::new();
    for s in &summaries {
        mu_1 = mu_1.min(s.theta[0]);
        b_sup = b_sup.max(s.b_sup);
        pool.extend(s.theta.iter().copied().zip(s.weights.iter().copied()));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let per_run_mass = n as f64 / opts.runs as f64;
    let mut cum = 0.0;
    let mut mu_ne = pool.last().map(|p| p.0).unwrap_or(b_sup);
    for &(theta, w) in &pool {
        cum += w * per_run_mass;
        if cum >= n_e as f64 {
            mu_ne = theta;
            break;
        }
    }
    Ok(SpectralBounds::new(mu_1, mu_ne, b_sup))
}

/// One k-step run with full reorthogonalization; breakdown restarts with
/// a fresh random vector, and an exhausted basis truncates the run.
fn lanczos_run<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    h: &DenseMatrix<T>,
    k: usize,
    seed: u64,
    run: usize,
    prof: &mut RankProfiler,
) -> Result<RunSummary> {
    let n_r = dc.row_part.count(ctx.row);
    let n_c = dc.col_part.count(ctx.col);
    let t_setup = Instant::now();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k + 1);
    let mut alphas: Vec<f64> = Vec::with_capacity(k);
    let mut betas: Vec<f64> = Vec::with_capacity(k);
    prof.add(Kernel::Lanczos, 0, Phase::Compute, t_setup.elapsed().as_secs_f64(), 0, 0);

    let mut v = random_block(ctx, n_r, seed, run, 0);
    let nrm = global_norm(ctx, &v, prof)?;
    scale_vec(&mut v, 1.0 / nrm);
    basis.push(v);

    let mut w_b = DenseMatrix::<T>::zeros(n_c, 1);
    let mut w_c = DenseMatrix::<T>::zeros(n_r, 1);
    let mut step = 0usize;
    while step < k {
        // w = H·v_step (into B layout, then back to C layout).
        {
            let vcur = &basis[step];
            let c_view = crate::matrix::MatView::from_slice(n_r, 1, vcur);
            let mut b_view = w_b.view_mut();
            hemm_to_b(ctx, h, c_view, &mut b_view, 1.0, 0.0, prof, Kernel::Lanczos, 0)?;
        }
        let (m0, w0) = ctx.comm_totals();
        let t0 = Instant::now();
        redistribute_b_to_c(ctx, dc, &w_b, &mut w_c)?;
        let (m1, w1) = ctx.comm_totals();
        prof.add(Kernel::Lanczos, 0, Phase::Comm, t0.elapsed().as_secs_f64(), m1 - m0, w1 - w0);

        let t1 = Instant::now();
        let mut w: Vec<T> = w_c.data().to_vec();
        // α = Re(v^H w) via one reduced dot.
        let alpha = global_dot(ctx, &basis[step], &w, prof)?.re();
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&basis[step]) {
            *wi -= vi.scale(alpha);
        }
        if step > 0 {
            let beta_prev = betas[step - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[step - 1]) {
                *wi -= vi.scale(beta_prev);
            }
        }
        prof.add(Kernel::Lanczos, 0, Phase::Compute, t1.elapsed().as_secs_f64(), 0, 0);

        // Full reorthogonalization against the whole basis.
        orthogonalize(ctx, &basis, &mut w, prof)?;
        let beta = global_norm_slice(ctx, &w, prof)?;
        let scale = alphas.iter().fold(1.0f64, |m, a| m.max(a.abs()));
        let breakdown = beta <= 1e-12 * scale.max(betas.iter().cloned().fold(1.0, f64::max));
        if breakdown {
            betas.push(0.0);
            // Restart with a fresh random direction.
            let mut fresh: Vec<T> = random_block(ctx, n_r, seed, run, step as u64 + 1);
            orthogonalize(ctx, &basis, &mut fresh, prof)?;
            let fn_norm = global_norm_slice(ctx, &fresh, prof)?;
            if fn_norm <= 1e-12 {
                // Invariant subspace exhausted; truncate the run.
                step += 1;
                break;
            }
            scale_slice(&mut fresh, 1.0 / fn_norm);
            basis.push(fresh);
        } else {
            betas.push(beta);
            scale_slice(&mut w, 1.0 / beta);
            basis.push(w);
        }
        step += 1;
    }

    let kk = step;
    let t2 = Instant::now();
    let tri = DenseMatrix::<f64>::from_fn(kk, kk, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let (theta, s) = heevd(tri.view())?;
    let weights: Vec<f64> = (0..kk).map(|i| s.at(0, i) * s.at(0, i)).collect();
    let b_sup = theta[kk - 1] + betas[kk - 1];
    prof.add(Kernel::Lanczos, 0, Phase::Compute, t2.elapsed().as_secs_f64(), 0, 0);
    Ok(RunSummary {
        theta,
        weights,
        b_sup,
    })
}

/// Starting block for (run, restart) keyed by the rank's row coordinate,
/// mirroring the initial-vector seeding rule.
fn random_block<T: Scalar>(ctx: &RankCtx, n_r: usize, seed: u64, run: usize, restart: u64) -> Vec<T> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(ctx.row as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(run as u64).to_le_bytes());
    key[24..32].copy_from_slice(&restart.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    (0..n_r).map(|_| T::standard_normal(&mut rng)).collect()
}

fn scale_vec<T: Scalar>(v: &mut Vec<T>, s: f64) {
    for x in v.iter_mut() {
        *x = x.scale(s);
    }
}

fn scale_slice<T: Scalar>(v: &mut [T], s: f64) {
    for x in v.iter_mut() {
        *x = x.scale(s);
    }
}

fn global_dot<T: Scalar>(
    ctx: &RankCtx,
    a: &[T],
    b: &[T],
    prof: &mut RankProfiler,
) -> Result<T> {
    let mut acc = T::ZERO;
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    let mut buf = [acc];
    let (m0, w0) = ctx.comm_totals();
    let t0 = Instant::now();
    ctx.col_comm().allreduce_sum(&mut buf)?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(Kernel::Lanczos, 0, Phase::Comm, t0.elapsed().as_secs_f64(), m1 - m0, w1 - w0);
    Ok(buf[0])
}

fn global_norm_slice<T: Scalar>(ctx: &RankCtx, v: &[T], prof: &mut RankProfiler) -> Result<f64> {
    let local: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let mut buf = [local];
    let (m0, w0) = ctx.comm_totals();
    let t0 = Instant::now();
    ctx.col_comm().allreduce_sum(&mut buf)?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(Kernel::Lanczos, 0, Phase::Comm, t0.elapsed().as_secs_f64(), m1 - m0, w1 - w0);
    Ok(buf[0].sqrt())
}

fn global_norm<T: Scalar>(
    ctx: &RankCtx,
    v: &[T],
    prof: &mut RankProfiler,
) -> Result<f64> {
    global_norm_slice(ctx, v, prof)
}

/// One batched classical Gram–Schmidt pass of `w` against `basis`.
fn orthogonalize<T: Scalar>(
    ctx: &RankCtx,
    basis: &[Vec<T>],
    w: &mut [T],
    prof: &mut RankProfiler,
) -> Result<()> {
    if basis.is_empty() {
        return Ok(());
    }
    let t0 = Instant::now();
    let mut coeffs: Vec<T> = basis
        .iter()
        .map(|v| {
            let mut acc = T::ZERO;
            for (x, y) in v.iter().zip(w.iter()) {
                acc += x.conj() * *y;
            }
            acc
        })
        .collect();
    prof.add(Kernel::Lanczos, 0, Phase::Compute, t0.elapsed().as_secs_f64(), 0, 0);
    let (m0, w0) = ctx.comm_totals();
    let t1 = Instant::now();
    ctx.col_comm().allreduce_sum(&mut coeffs)?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(Kernel::Lanczos, 0, Phase::Comm, t1.elapsed().as_secs_f64(), m1 - m0, w1 - w0);
    let t2 = Instant::now();
    for (v, &co) in basis.iter().zip(&coeffs) {
        for (wi, vi) in w.iter_mut().zip(v) {
            *wi -= *vi * co;
        }
    }
    prof.add(Kernel::Lanczos, 0, Phase::Compute, t2.elapsed().as_secs_f64(), 0, 0);
    Ok(())
}
