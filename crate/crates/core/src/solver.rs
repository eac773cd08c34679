//! Subspace iteration driver.
//!
//! One solve runs the loop
//!
//! ```text
//! Lanczos bounds
//! while locked < nev and iter ≤ max_iter:
//!     update bounds / optimize degrees / sort by degree   (iter ≥ 2)
//!     Chebyshev-filter the active columns of C
//!     estimate the filtered block's condition number
//!     orthonormalize C (CholeskyQR dispatch over the column comm)
//!     restore locked columns from C2, save actives into C2
//!     Rayleigh–Ritz on the active subspace
//!     residuals, then deflation & locking
//! ```
//!
//! over the worker grid. All ranks execute the identical control flow on
//! replicated scalars (Ritz values, residuals, degrees), so collective
//! participation never diverges and results are bitwise reproducible for
//! a fixed (config, seed, grid).

use std::time::Instant;

use crate::caqr::{caqr_dispatch, cholesky_qr, cond_est, householder_fallback, QrOutcome, QrVariant};
use crate::error::{Error, Result};
use crate::filter::{
    chebyshev_filter, hemm_to_b, local_diag_positions, permute_slice, sort_by_degree,
    DegreeSchedule,
};
use crate::grid::{
    allgather_rows, distribute, redistribute_c_to_b, validate_redistribution, DistContext,
    Distribution, Grid, GridShape, Layout, RankBuffers, RankCtx,
};
use crate::kernels::{gemm, heevd, Op};
use crate::lanczos::{lanczos_bounds, update_bounds, LanczosOptions, SpectralBounds};
use crate::matgen::random_initial_vectors;
use crate::matrix::DenseMatrix;
use crate::profiler::{merge_ranks, Kernel, KernelRecord, Phase, RankProfiler};
use crate::scalar::Scalar;

/// How the per-iteration QR factorization is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrPolicy {
    /// Condition-estimate dispatch (the default).
    Auto,
    /// Gathered Householder QR every iteration.
    ForceHouseholder,
    ForceChol1,
    ForceChol2,
    ForceShifted,
}

/// How much per-iteration state the result carries back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceLevel {
    Off,
    /// Scalars only: estimates, QR outcomes, Ritz values, residuals.
    Light,
    /// Additionally gathers the filtered block and the locked prefix.
    Full,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub nev: usize,
    pub nex: usize,
    pub tol: f64,
    pub deg_init: usize,
    pub deg_max: usize,
    pub max_iter: usize,
    /// Per-vector degree optimization; with `false` every filter call
    /// uses `deg_init`.
    pub opt: bool,
    pub seed: u64,
    pub shape: GridShape,
    pub dist: Distribution,
    pub qr_policy: QrPolicy,
    pub lanczos: LanczosOptions,
    pub trace: TraceLevel,
}

impl SolverConfig {
    pub fn new(nev: usize, nex: usize) -> Self {
        Self {
            nev,
            nex,
            tol: 1e-10,
            deg_init: 20,
            deg_max: 36,
            max_iter: 25,
            opt: true,
            seed: 0,
            shape: GridShape::new(1, 1),
            dist: Distribution::Block,
            qr_policy: QrPolicy::Auto,
            lanczos: LanczosOptions::default(),
            trace: TraceLevel::Off,
        }
    }

    pub fn n_e(&self) -> usize {
        self.nev + self.nex
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.nev < 1 {
            return Err(Error::Config("nev must be at least 1".into()));
        }
        if self.nex < 1 {
            return Err(Error::Config("nex must be at least 1".into()));
        }
        if self.n_e() > n {
            return Err(Error::Config(format!(
                "search space nev+nex = {} exceeds N = {n}",
                self.n_e()
            )));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        validate_redistribution(self.shape, self.dist, n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// `max_iter` exhausted; the result carries the partial state.
    MaxIterReached,
}

/// Per-iteration snapshot, populated according to [`TraceLevel`].
#[derive(Clone, Debug)]
pub struct IterationTrace<T: Scalar> {
    pub iteration: usize,
    pub est_cond: f64,
    pub qr: QrOutcome,
    pub locked_before: usize,
    pub new_converged: usize,
    pub lambda: Vec<f64>,
    pub resd: Vec<f64>,
    pub degs: Vec<usize>,
    /// Gathered active block right after the filter (before QR).
    pub filtered_block: Option<DenseMatrix<T>>,
    /// Gathered locked prefix at the end of the iteration.
    pub locked_block: Option<DenseMatrix<T>>,
}

#[derive(Clone, Debug)]
pub struct SolverStats {
    pub iterations: usize,
    /// Single-vector products performed by the polynomial filter
    /// (Σ of the active degrees over all iterations).
    pub matvecs: u64,
    pub locked: usize,
    pub qr_outcomes: Vec<QrOutcome>,
    /// Merged per-kernel compute/comm/copy times and counters.
    pub records: Vec<KernelRecord>,
    pub wall_s: f64,
}

#[derive(Clone, Debug)]
pub struct SolverResult<T: Scalar> {
    pub status: SolveStatus,
    /// The `nev` reported eigenvalues, ascending.
    pub lambda: Vec<f64>,
    /// Residual norms of the reported pairs (normalized).
    pub resd: Vec<f64>,
    /// Gathered eigenvector block, N×nev.
    pub eigenvectors: DenseMatrix<T>,
    /// All nev+nex Ritz values at exit (locked prefix first).
    pub lambda_full: Vec<f64>,
    pub bounds: SpectralBounds,
    pub stats: SolverStats,
    pub trace: Vec<IterationTrace<T>>,
}

/// Spot check of Hermitian symmetry on a seeded random sample of entry
/// pairs; full verification stays the caller's responsibility.
fn spot_check_hermitian<T: Scalar>(h: &DenseMatrix<T>, seed: u64) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let n = h.rows();
    if n != h.cols() {
        return Err(Error::Dimension {
            op: "solve",
            detail: format!("matrix must be square, got {}x{}", n, h.cols()),
        });
    }
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let samples = 500.min(n * n);
    let mut scale = 1.0f64;
    let mut worst: Option<(usize, usize, f64)> = None;
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let a = h.at(i, j);
        let b = h.at(j, i).conj();
        scale = scale.max(a.abs());
        let diff = (a - b).abs();
        if worst.map(|w| diff > w.2).unwrap_or(diff > 0.0) {
            worst = Some((i, j, diff));
        }
    }
    if let Some((i, j, diff)) = worst {
        if diff > 1e-12 * scale {
            return Err(Error::NotHermitian { i, j, diff });
        }
    }
    Ok(())
}

/// Computes the `nev` lowest eigenpairs of the distributed Hermitian
/// matrix. The matrix is distributed internally according to
/// `config.shape`/`config.dist` and solved by the worker grid.
pub fn solve<T: Scalar>(h_global: &DenseMatrix<T>, config: &SolverConfig) -> Result<SolverResult<T>> {
    let wall0 = Instant::now();
    let n = h_global.rows();
    config.validate(n)?;
    // Degree invariants checked up front.
    DegreeSchedule::uniform(config.n_e(), config.deg_init, config.deg_max)?;
    spot_check_hermitian(h_global, config.seed)?;

    let dc = DistContext::new(n, config.dist, config.shape);
    let h_blocks = distribute(h_global, config.dist, config.shape, Layout::Full2D)?;
    let grid = Grid::new(config.shape);
    let outputs = grid.run(|ctx| rank_solve(&ctx, &dc, &h_blocks[ctx.rank], n, config))?;

    let profilers: Vec<RankProfiler> = outputs.iter().map(|o| o.profiler_snapshot()).collect();
    let records = merge_ranks(&profilers);
    let mut first = outputs.into_iter().next().expect("at least one rank");
    first.stats.records = records;
    first.stats.wall_s = wall0.elapsed().as_secs_f64();
    Ok(first.into_result())
}

/// Rank-local output; rank (0,0) carries the gathered payloads.
struct RankOutput<T: Scalar> {
    status: SolveStatus,
    lambda: Vec<f64>,
    resd: Vec<f64>,
    eigenvectors: DenseMatrix<T>,
    lambda_full: Vec<f64>,
    bounds: SpectralBounds,
    stats: SolverStats,
    trace: Vec<IterationTrace<T>>,
    profiler: RankProfiler,
}

impl<T: Scalar> RankOutput<T> {
    fn profiler_snapshot(&self) -> RankProfiler {
        let mut p = RankProfiler::new();
        for r in self.profiler.records() {
            p.add(r.kernel, r.iteration, Phase::Compute, r.compute_s, r.messages, r.words);
            p.add(r.kernel, r.iteration, Phase::Comm, r.comm_s, 0, 0);
            p.add(r.kernel, r.iteration, Phase::Copy, r.copy_s, 0, 0);
        }
        p
    }

    fn into_result(self) -> SolverResult<T> {
        SolverResult {
            status: self.status,
            lambda: self.lambda,
            resd: self.resd,
            eigenvectors: self.eigenvectors,
            lambda_full: self.lambda_full,
            bounds: self.bounds,
            stats: self.stats,
            trace: self.trace,
        }
    }
}

fn wrap_iter(iter: usize) -> impl FnOnce(Error) -> Error {
    move |source| match source {
        e @ Error::CollectivePoisoned => e,
        source => Error::SolverKernel {
            iter,
            source: Box::new(source),
        },
    }
}

fn rank_solve<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    h_block: &DenseMatrix<T>,
    n: usize,
    config: &SolverConfig,
) -> Result<RankOutput<T>> {
    let n_e = config.n_e();
    let nev = config.nev;
    let mut prof = RankProfiler::new();
    let mut bufs = RankBuffers::new(h_block.clone(), n_e);
    let n_r = bufs.h.rows();
    let diag = local_diag_positions(&dc.row_part.indices(ctx.row), &dc.col_part.indices(ctx.col));

    bufs.c = random_initial_vectors(n_r, n_e, ctx.row, config.seed);
    // The density target must stay below N; with n_e = N the window
    // degenerates anyway and the safeguard keeps the filter usable.
    let dos_target = n_e.min(n - 1);
    let mut bounds =
        lanczos_bounds(ctx, dc, &bufs.h, n, dos_target, &config.lanczos, config.seed, &mut prof)?;

    let mut lambda = vec![0.0f64; n_e];
    let mut resd = vec![f64::INFINITY; n_e];
    let mut degs = DegreeSchedule::uniform(n_e, config.deg_init, config.deg_max)?;
    let mut locked = 0usize;
    let mut iter = 1usize;
    let mut matvecs = 0u64;
    let mut qr_outcomes = Vec::new();
    let mut trace = Vec::new();
    let is_root = ctx.rank == 0;

    // The lowest nev pairs are the deliverable: besides locked ≥ nev,
    // no active Ritz value may undercut the locked front, otherwise a
    // lagging interior pair could be skipped.
    let front_done = |locked: usize, lambda: &[f64]| -> bool {
        if locked < nev {
            return false;
        }
        let mut head: Vec<f64> = lambda[..locked].to_vec();
        head.sort_by(f64::total_cmp);
        let front = head[nev - 1];
        lambda[locked..].iter().all(|&l| l >= front)
    };

    while !front_done(locked, &lambda) && iter <= config.max_iter {
        if iter != 1 {
            let (mu1, mune) = update_bounds(&lambda);
            bounds.update(mu1, mune);
            if config.opt {
                let params = bounds.filter_params().map_err(wrap_iter(iter))?;
                degs.optimize(config.tol, &resd, &lambda, &params, locked);
                sort_by_degree(&mut bufs.c, &mut bufs.c2, &mut lambda, &mut resd, &mut degs, locked);
            }
        }
        let params = bounds.filter_params().map_err(wrap_iter(iter))?;

        // Filter the active columns.
        matvecs += chebyshev_filter(
            ctx, &mut bufs.h, &diag, &mut bufs.c, &mut bufs.b, degs.degs(), locked, &params,
            &mut prof, iter,
        )
        .map_err(wrap_iter(iter))?;

        let est = cond_est(&lambda, params.center, params.half_width, degs.degs(), locked)
            .map_err(wrap_iter(iter))?;

        let filtered_block = if config.trace == TraceLevel::Full {
            let act = bufs.c.cols_view(locked, n_e).to_owned();
            let gathered = allgather_rows(ctx.col_comm(), &dc.row_part, &act)?;
            if is_root {
                Some(gathered)
            } else {
                None
            }
        } else {
            None
        };

        // Orthonormalize the full block over the column communicator.
        let outcome = run_qr(ctx, dc, &mut bufs.c, est, config.qr_policy, &mut prof, iter)
            .map_err(wrap_iter(iter))?;
        qr_outcomes.push(outcome);

        // Locked columns are frozen: restore them from C2 and save the
        // fresh orthonormal actives.
        let t0 = Instant::now();
        {
            let (c, c2) = (&mut bufs.c, &mut bufs.c2);
            c.copy_cols_from(0, c2, 0, locked);
            c2.copy_cols_from(locked, c, locked, n_e - locked);
        }
        prof.add(Kernel::Qr, iter, Phase::Compute, t0.elapsed().as_secs_f64(), 0, 0);

        rayleigh_ritz(ctx, dc, &mut bufs, &mut lambda, locked, &mut prof, iter)
            .map_err(wrap_iter(iter))?;

        let normalizer = bounds.mu_1.abs().max(bounds.b_sup.abs());
        residuals(ctx, dc, &mut bufs, &lambda, locked, normalizer, &mut resd, &mut prof, iter)
            .map_err(wrap_iter(iter))?;

        // Deflation & locking.
        let locked_before = locked;
        let (new_converged, perm) = lock_converged(&resd, &lambda, config.tol, locked);
        if !perm.iter().enumerate().all(|(k, &p)| k == p) {
            bufs.c.permute_cols(locked, &perm);
            bufs.c2.permute_cols(locked, &perm);
            permute_slice(&mut lambda[locked..], &perm);
            permute_slice(&mut resd[locked..], &perm);
            permute_slice(&mut degs.degs_mut()[locked..], &perm);
        }
        locked += new_converged;

        if config.trace != TraceLevel::Off {
            let locked_block = if config.trace == TraceLevel::Full && locked > 0 {
                let pre = bufs.c.cols_view(0, locked).to_owned();
                let gathered = allgather_rows(ctx.col_comm(), &dc.row_part, &pre)?;
                if is_root {
                    Some(gathered)
                } else {
                    None
                }
            } else {
                None
            };
            trace.push(IterationTrace {
                iteration: iter,
                est_cond: est,
                qr: outcome,
                locked_before,
                new_converged,
                lambda: lambda.clone(),
                resd: resd.clone(),
                degs: degs.degs().to_vec(),
                filtered_block,
                locked_block,
            });
        }
        iter += 1;
    }

    let iterations = iter - 1;
    let status = if front_done(locked, &lambda) {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterReached
    };

    // Final ordering: locked pairs ascending, then actives ascending, so
    // the first nev columns are the reported pairs.
    let mut order: Vec<usize> = (0..locked).collect();
    order.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]));
    let mut tail: Vec<usize> = (locked..n_e).collect();
    tail.sort_by(|&a, &b| lambda[a].total_cmp(&lambda[b]));
    order.extend(tail.iter().map(|&t| t));
    if !order.iter().enumerate().all(|(k, &p)| k == p) {
        bufs.c.permute_cols(0, &order);
        permute_slice(&mut lambda, &order);
        permute_slice(&mut resd, &order);
    }

    let first = bufs.c.cols_view(0, nev).to_owned();
    let eigenvectors = allgather_rows(ctx.col_comm(), &dc.row_part, &first)?;

    Ok(RankOutput {
        status,
        lambda: lambda[..nev].to_vec(),
        resd: resd[..nev].to_vec(),
        eigenvectors,
        lambda_full: lambda,
        bounds,
        stats: SolverStats {
            iterations,
            matvecs,
            locked,
            qr_outcomes,
            records: Vec::new(),
            wall_s: 0.0,
        },
        trace,
        profiler: prof,
    })
}

/// QR step honoring the policy; `Auto` goes through the dispatch.
fn run_qr<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    c: &mut DenseMatrix<T>,
    est: f64,
    policy: QrPolicy,
    prof: &mut RankProfiler,
    iter: usize,
) -> Result<QrOutcome> {
    let comm = ctx.col_comm();
    let part = &dc.row_part;
    match policy {
        QrPolicy::Auto => caqr_dispatch(comm, part, c, est, prof, iter),
        QrPolicy::ForceHouseholder => {
            householder_fallback(comm, part, c, prof, iter)?;
            Ok(QrOutcome {
                variant: QrVariant::HouseholderFallback,
                est_cond: est,
                cholesky_rounds: 0,
                householder_fallback: false,
            })
        }
        QrPolicy::ForceChol1 => {
            let rounds = cholesky_qr(comm, c, 1, prof, iter)?;
            Ok(QrOutcome {
                variant: QrVariant::Chol1,
                est_cond: est,
                cholesky_rounds: rounds,
                householder_fallback: false,
            })
        }
        QrPolicy::ForceChol2 => {
            let rounds = cholesky_qr(comm, c, 2, prof, iter)?;
            Ok(QrOutcome {
                variant: QrVariant::Chol2,
                est_cond: est,
                cholesky_rounds: rounds,
                householder_fallback: false,
            })
        }
        QrPolicy::ForceShifted => {
            // Route through the dispatch's shifted branch unconditionally.
            caqr_dispatch(comm, part, c, f64::INFINITY, prof, iter).map(|mut o| {
                o.est_cond = est;
                o
            })
        }
    }
}

/// Rayleigh–Ritz on the active columns: redistribute C2 into B2, apply
/// H, reduce the projected matrix over the row communicator, solve the
/// small problem redundantly, and back-transform.
pub fn rayleigh_ritz<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    bufs: &mut RankBuffers<T>,
    lambda: &mut [f64],
    locked: usize,
    prof: &mut RankProfiler,
    iter: usize,
) -> Result<()> {
    let n_e = bufs.c.cols();
    let act = n_e - locked;

    let (m0, w0) = ctx.comm_totals();
    let t0 = Instant::now();
    redistribute_c_to_b(ctx, dc, &bufs.c2, &mut bufs.b2)?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(Kernel::RayleighRitz, iter, Phase::Comm, t0.elapsed().as_secs_f64(), m1 - m0, w1 - w0);

    {
        let mut b_act = bufs.b.cols_view_mut(locked, n_e);
        hemm_to_b(
            ctx, &bufs.h, bufs.c.cols_view(locked, n_e), &mut b_act, 1.0, 0.0, prof,
            Kernel::RayleighRitz, iter,
        )?;
    }

    // Projected matrix A = B2ᴴ·B on the active block.
    let t1 = Instant::now();
    let mut proj = DenseMatrix::<T>::zeros(act, act);
    gemm(
        T::ONE,
        bufs.b2.cols_view(locked, n_e),
        Op::ConjTrans,
        bufs.b.cols_view(locked, n_e),
        Op::None,
        T::ZERO,
        &mut proj.view_mut(),
    );
    prof.add(Kernel::RayleighRitz, iter, Phase::Compute, t1.elapsed().as_secs_f64(), 0, 0);

    let (m2, w2) = ctx.comm_totals();
    let t2 = Instant::now();
    ctx.row_comm().allreduce_sum(proj.data_mut())?;
    let (m3, w3) = ctx.comm_totals();
    prof.add(Kernel::RayleighRitz, iter, Phase::Comm, t2.elapsed().as_secs_f64(), m3 - m2, w3 - w2);

    let t3 = Instant::now();
    // Keep the redundant A buffer current (leading block).
    for j in 0..act {
        for i in 0..act {
            *bufs.a.at_mut(i, j) = proj.at(i, j);
        }
    }
    let (theta, y) = heevd(proj.view())?;
    debug_assert_replicated(ctx, &theta)?;

    // Back-transform: C ← C2·Y on the active columns, then refresh C2.
    {
        let mut c_act = bufs.c.cols_view_mut(locked, n_e);
        gemm(
            T::ONE,
            bufs.c2.cols_view(locked, n_e),
            Op::None,
            y.view(),
            Op::None,
            T::ZERO,
            &mut c_act,
        );
    }
    bufs.c2.copy_cols_from(locked, &bufs.c, locked, act);
    lambda[locked..].copy_from_slice(&theta);
    prof.add(Kernel::RayleighRitz, iter, Phase::Compute, t3.elapsed().as_secs_f64(), 0, 0);
    Ok(())
}

/// Debug-mode guard: the redundant small problem must agree bitwise on
/// every rank (uses uncounted broadcasts so profiling counts stay
/// algorithmic).
#[allow(unused_variables)]
fn debug_assert_replicated(ctx: &RankCtx, theta: &[f64]) -> Result<()> {
    #[cfg(debug_assertions)]
    {
        let mut probe: Vec<f64> = theta.to_vec();
        ctx.row_comm().bcast_uncounted(0, &mut probe)?;
        assert!(
            probe.iter().zip(theta).all(|(a, b)| a.to_bits() == b.to_bits()),
            "projected eigenvalues diverged across the row communicator"
        );
        let mut probe: Vec<f64> = theta.to_vec();
        ctx.col_comm().bcast_uncounted(0, &mut probe)?;
        assert!(
            probe.iter().zip(theta).all(|(a, b)| a.to_bits() == b.to_bits()),
            "projected eigenvalues diverged across the column communicator"
        );
    }
    Ok(())
}

/// Residual norms of the active Ritz pairs:
/// `resd_j = ‖H·c_j − λ_j·c_j‖₂ / max(|μ₁|, |b_sup|)`.
#[allow(clippy::too_many_arguments)]
pub fn residuals<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    bufs: &mut RankBuffers<T>,
    lambda: &[f64],
    locked: usize,
    normalizer: f64,
    resd: &mut [f64],
    prof: &mut RankProfiler,
    iter: usize,
) -> Result<()> {
    let n_e = bufs.c.cols();
    let act = n_e - locked;

    let (m0, w0) = ctx.comm_totals();
    let t0 = Instant::now();
    redistribute_c_to_b(ctx, dc, &bufs.c2, &mut bufs.b2)?;
    let (m1, w1) = ctx.comm_totals();
    prof.add(Kernel::Residual, iter, Phase::Comm, t0.elapsed().as_secs_f64(), m1 - m0, w1 - w0);

    {
        let mut b_act = bufs.b.cols_view_mut(locked, n_e);
        hemm_to_b(
            ctx, &bufs.h, bufs.c.cols_view(locked, n_e), &mut b_act, 1.0, 0.0, prof,
            Kernel::Residual, iter,
        )?;
    }

    let t1 = Instant::now();
    let mut nrm = vec![0.0f64; act];
    for (k, nrm_k) in nrm.iter_mut().enumerate() {
        let j = locked + k;
        let lam = lambda[j];
        let bcol = bufs.b.col_mut(j);
        let b2col = &bufs.b2.col(j).to_vec();
        let mut acc = 0.0;
        for (bi, b2i) in bcol.iter_mut().zip(b2col) {
            *bi -= b2i.scale(lam);
            acc += bi.norm_sqr();
        }
        *nrm_k = acc;
    }
    prof.add(Kernel::Residual, iter, Phase::Compute, t1.elapsed().as_secs_f64(), 0, 0);

    let (m2, w2) = ctx.comm_totals();
    let t2 = Instant::now();
    ctx.row_comm().allreduce_sum(&mut nrm)?;
    let (m3, w3) = ctx.comm_totals();
    prof.add(Kernel::Residual, iter, Phase::Comm, t2.elapsed().as_secs_f64(), m3 - m2, w3 - w2);

    let scale = 1.0 / normalizer.max(f64::MIN_POSITIVE);
    for (k, &sq) in nrm.iter().enumerate() {
        resd[locked + k] = sq.sqrt() * scale;
    }
    Ok(())
}

/// Deflation decision: indices (relative to the active range) of the
/// newly converged columns first — ordered by ascending Ritz value —
/// then the still-active ones in their current order. Returns the count
/// and the permutation to apply.
pub fn lock_converged(
    resd: &[f64],
    lambda: &[f64],
    tol: f64,
    locked: usize,
) -> (usize, Vec<usize>) {
    let n_e = resd.len();
    let mut conv: Vec<usize> = (0..n_e - locked)
        .filter(|&k| resd[locked + k] <= tol)
        .collect();
    conv.sort_by(|&a, &b| lambda[locked + a].total_cmp(&lambda[locked + b]));
    let keep: Vec<usize> = (0..n_e - locked)
        .filter(|&k| !(resd[locked + k] <= tol))
        .collect();
    let new_converged = conv.len();
    conv.extend(keep);
    (new_converged, conv)
}

/// Gathers the distributed matrix the solver worked on (test support:
/// reassembles H from the blocks the ranks held).
pub fn gather_distributed<T: Scalar>(
    blocks: &[DenseMatrix<T>],
    dist: Distribution,
    shape: GridShape,
    n: usize,
) -> Result<DenseMatrix<T>> {
    crate::grid::gather(blocks, dist, shape, Layout::Full2D, n, n)
}
