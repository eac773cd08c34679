//! Simulated 2D process grid.
//!
//! Ranks are cooperative worker threads inside one process, arranged as a
//! p×q grid (row-major rank order). Every rank belongs to exactly one row
//! communicator (the q ranks sharing its grid row) and one column
//! communicator (the p ranks sharing its grid column). The collective
//! surface is `{allreduce_sum, bcast, barrier}`; reductions run in a fixed
//! binary-tree order over member indices, so collective results are
//! bitwise reproducible regardless of thread scheduling.
//!
//! Collectives act as synchronization points. As with MPI, every member of
//! a communicator must reach the same collective in the same order;
//! divergent participation deadlocks. A panic inside one worker poisons
//! all communicators so the remaining workers fail instead of hanging.

use std::any::Any;
use std::cell::Cell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;

/// Grid dimensions; ranks are numbered row-major: `rank = row·q + col`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridShape {
    pub p: usize,
    pub q: usize,
}

impl GridShape {
    pub fn new(p: usize, q: usize) -> Self {
        assert!(p >= 1 && q >= 1, "grid dimensions must be positive");
        Self { p, q }
    }

    pub fn ranks(&self) -> usize {
        self.p * self.q
    }

    pub fn coords(&self, rank: usize) -> (usize, usize) {
        (rank / self.q, rank % self.q)
    }

    pub fn rank_at(&self, row: usize, col: usize) -> usize {
        row * self.q + col
    }
}

/// Picks the most square p×q factorization of `num_ranks` with `p ≥ q`.
pub fn create_grid(num_ranks: usize) -> GridShape {
    assert!(num_ranks >= 1, "need at least one rank");
    let mut q = (num_ranks as f64).sqrt() as usize;
    while q >= 1 {
        if num_ranks % q == 0 {
            return GridShape::new(num_ranks / q, q);
        }
        q -= 1;
    }
    GridShape::new(num_ranks, 1)
}

/// How a global matrix is split across the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    Block,
    BlockCyclic { mb: usize, nb: usize },
}

impl Distribution {
    pub fn row_partition(&self, n: usize, parts: usize) -> AxisPartition {
        match *self {
            Distribution::Block => AxisPartition::block(n, parts),
            Distribution::BlockCyclic { mb, .. } => AxisPartition::cyclic(n, parts, mb),
        }
    }

    pub fn col_partition(&self, n: usize, parts: usize) -> AxisPartition {
        match *self {
            Distribution::Block => AxisPartition::block(n, parts),
            Distribution::BlockCyclic { nb, .. } => AxisPartition::cyclic(n, parts, nb),
        }
    }
}

/// Ownership map of one global axis over `parts` grid coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxisPartition {
    /// Contiguous ranges; the first `n mod parts` coordinates get one
    /// extra element.
    Block { n: usize, parts: usize },
    /// Round-robin over blocks of `block` consecutive indices:
    /// global `g` belongs to coordinate `(g / block) mod parts`.
    Cyclic { n: usize, parts: usize, block: usize },
}

impl AxisPartition {
    pub fn block(n: usize, parts: usize) -> Self {
        assert!(parts >= 1);
        AxisPartition::Block { n, parts }
    }

    pub fn cyclic(n: usize, parts: usize, block: usize) -> Self {
        assert!(parts >= 1 && block >= 1, "cyclic block size must be positive");
        AxisPartition::Cyclic { n, parts, block }
    }

    pub fn total(&self) -> usize {
        match *self {
            AxisPartition::Block { n, .. } | AxisPartition::Cyclic { n, .. } => n,
        }
    }

    pub fn parts(&self) -> usize {
        match *self {
            AxisPartition::Block { parts, .. } | AxisPartition::Cyclic { parts, .. } => parts,
        }
    }

    /// Number of global indices owned by coordinate `part`.
    pub fn count(&self, part: usize) -> usize {
        match *self {
            AxisPartition::Block { n, parts } => {
                let base = n / parts;
                base + usize::from(part < n % parts)
            }
            AxisPartition::Cyclic { n, parts, block } => {
                let mut c = 0;
                let mut t = part;
                while t * block < n {
                    c += block.min(n - t * block);
                    t += parts;
                }
                c
            }
        }
    }

    /// Global index of local element `local` on coordinate `part`.
    pub fn global_index(&self, part: usize, local: usize) -> usize {
        match *self {
            AxisPartition::Block { n, parts } => {
                let base = n / parts;
                let rem = n % parts;
                let start = part * base + part.min(rem);
                start + local
            }
            AxisPartition::Cyclic { parts, block, .. } => {
                let t = part + (local / block) * parts;
                t * block + local % block
            }
        }
    }

    /// Owner coordinate and local index of global index `g`.
    pub fn owner(&self, g: usize) -> (usize, usize) {
        match *self {
            AxisPartition::Block { n, parts } => {
                let base = n / parts;
                let rem = n % parts;
                let cut = rem * (base + 1);
                if g < cut {
                    (g / (base + 1), g % (base + 1))
                } else {
                    let off = g - cut;
                    (rem + off / base, off % base)
                }
            }
            AxisPartition::Cyclic { parts, block, .. } => {
                let t = g / block;
                (t % parts, (t / parts) * block + g % block)
            }
        }
    }

    /// Global indices owned by `part`, in local order.
    pub fn indices(&self, part: usize) -> Vec<usize> {
        (0..self.count(part))
            .map(|l| self.global_index(part, l))
            .collect()
    }
}

/// Which buffer family a distribution call targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// H-style: rows split over grid rows, columns over grid columns.
    Full2D,
    /// C-style: rows split over the column communicator (by grid row);
    /// every rank in a grid row holds the same block.
    Col1D,
    /// B-style: rows split over the row communicator (by grid column);
    /// every rank in a grid column holds the same block.
    Row1D,
}

/// Splits `global` into per-rank local blocks (indexed by rank id).
pub fn distribute<T: Scalar>(
    global: &DenseMatrix<T>,
    dist: Distribution,
    shape: GridShape,
    layout: Layout,
) -> Result<Vec<DenseMatrix<T>>> {
    validate_dist(dist)?;
    let rows = global.rows();
    let row_part = dist.row_partition(rows, shape.p);
    let col_part = dist.col_partition(global.cols(), shape.q);
    let b_part = dist.col_partition(rows, shape.q);
    let mut out = Vec::with_capacity(shape.ranks());
    for rank in 0..shape.ranks() {
        let (i, j) = shape.coords(rank);
        let block = match layout {
            Layout::Full2D => {
                let ridx = row_part.indices(i);
                let cidx = col_part.indices(j);
                DenseMatrix::from_fn(ridx.len(), cidx.len(), |a, b| global.at(ridx[a], cidx[b]))
            }
            Layout::Col1D => {
                let ridx = row_part.indices(i);
                DenseMatrix::from_fn(ridx.len(), global.cols(), |a, b| global.at(ridx[a], b))
            }
            Layout::Row1D => {
                let ridx = b_part.indices(j);
                DenseMatrix::from_fn(ridx.len(), global.cols(), |a, b| global.at(ridx[a], b))
            }
        };
        out.push(block);
    }
    Ok(out)
}

/// Reassembles the global matrix from per-rank blocks; exact inverse of
/// [`distribute`] for the same parameters.
pub fn gather<T: Scalar>(
    blocks: &[DenseMatrix<T>],
    dist: Distribution,
    shape: GridShape,
    layout: Layout,
    global_rows: usize,
    global_cols: usize,
) -> Result<DenseMatrix<T>> {
    validate_dist(dist)?;
    if blocks.len() != shape.ranks() {
        return Err(Error::Dimension {
            op: "gather",
            detail: format!("{} blocks for {} ranks", blocks.len(), shape.ranks()),
        });
    }
    let row_part = dist.row_partition(global_rows, shape.p);
    let col_part = dist.col_partition(global_cols, shape.q);
    let b_part = dist.col_partition(global_rows, shape.q);
    let mut out = DenseMatrix::zeros(global_rows, global_cols);
    let mut place_rows = |idx: &[usize], block: &DenseMatrix<T>| -> Result<()> {
        if block.rows() != idx.len() || block.cols() != global_cols {
            return Err(Error::Dimension {
                op: "gather",
                detail: format!(
                    "block {}x{}, expected {}x{}",
                    block.rows(),
                    block.cols(),
                    idx.len(),
                    global_cols
                ),
            });
        }
        for (a, &g) in idx.iter().enumerate() {
            for b in 0..global_cols {
                *out.at_mut(g, b) = block.at(a, b);
            }
        }
        Ok(())
    };
    match layout {
        Layout::Full2D => {
            for rank in 0..shape.ranks() {
                let (i, j) = shape.coords(rank);
                let ridx = row_part.indices(i);
                let cidx = col_part.indices(j);
                let blk = &blocks[rank];
                if blk.rows() != ridx.len() || blk.cols() != cidx.len() {
                    return Err(Error::Dimension {
                        op: "gather",
                        detail: format!(
                            "rank {rank} block {}x{}, expected {}x{}",
                            blk.rows(),
                            blk.cols(),
                            ridx.len(),
                            cidx.len()
                        ),
                    });
                }
                for (a, &gr) in ridx.iter().enumerate() {
                    for (b, &gc) in cidx.iter().enumerate() {
                        *out.at_mut(gr, gc) = blk.at(a, b);
                    }
                }
            }
        }
        Layout::Col1D => {
            for i in 0..shape.p {
                place_rows(&row_part.indices(i), &blocks[shape.rank_at(i, 0)])?;
            }
        }
        Layout::Row1D => {
            for j in 0..shape.q {
                place_rows(&b_part.indices(j), &blocks[shape.rank_at(0, j)])?;
            }
        }
    }
    Ok(out)
}

fn validate_dist(dist: Distribution) -> Result<()> {
    if let Distribution::BlockCyclic { mb, nb } = dist {
        if mb == 0 || nb == 0 {
            return Err(Error::Config("block-cyclic block sizes must be positive".into()));
        }
    }
    Ok(())
}

/// Per-rank element count of the solver's working set:
/// `N²/(pq) + 2·N·n_e/p + 2·N·n_e/q + n_e²`.
///
/// Exact for block distributions with divisible sizes; otherwise the
/// actual per-rank counts use the local `n_r`, `n_c` in place of
/// `N/p`, `N/q`.
pub fn memory_model(n: u64, n_e: u64, p: u64, q: u64) -> f64 {
    let n = n as f64;
    let n_e = n_e as f64;
    let p = p as f64;
    let q = q as f64;
    n * n / (p * q) + 2.0 * n * n_e / p + 2.0 * n * n_e / q + n_e * n_e
}

/// The per-rank blocks used by one solve: the local H tile plus the
/// C/C2 (column-communicator) and B/B2 (row-communicator) vector blocks
/// and the redundant projected matrix A.
pub struct RankBuffers<T> {
    pub h: DenseMatrix<T>,
    pub c: DenseMatrix<T>,
    pub c2: DenseMatrix<T>,
    pub b: DenseMatrix<T>,
    pub b2: DenseMatrix<T>,
    pub a: DenseMatrix<T>,
}

impl<T: Scalar> RankBuffers<T> {
    pub fn new(h: DenseMatrix<T>, n_e: usize) -> Self {
        let n_r = h.rows();
        let n_c = h.cols();
        Self {
            h,
            c: DenseMatrix::zeros(n_r, n_e),
            c2: DenseMatrix::zeros(n_r, n_e),
            b: DenseMatrix::zeros(n_c, n_e),
            b2: DenseMatrix::zeros(n_c, n_e),
            a: DenseMatrix::zeros(n_e, n_e),
        }
    }

    /// Total allocated elements; equals [`memory_model`] for divisible
    /// block layouts.
    pub fn element_count(&self) -> u64 {
        (self.h.data().len()
            + self.c.data().len()
            + self.c2.data().len()
            + self.b.data().len()
            + self.b2.data().len()
            + self.a.data().len()) as u64
    }
}

// ---------------------------------------------------------------------
// Collectives
// ---------------------------------------------------------------------

type Slot = Option<Box<dyn Any + Send>>;

struct CollState {
    arrived: usize,
    departed: usize,
    poisoned: bool,
    slots: Vec<Slot>,
    result: Option<Arc<dyn Any + Send + Sync>>,
}

struct CommCore {
    size: usize,
    state: Mutex<CollState>,
    cv: Condvar,
}

impl CommCore {
    fn new(size: usize) -> Self {
        Self {
            size,
            state: Mutex::new(CollState {
                arrived: 0,
                departed: 0,
                poisoned: false,
                slots: (0..size).map(|_| None).collect(),
                result: None,
            }),
            cv: Condvar::new(),
        }
    }

    fn poison(&self) {
        let mut st = self.state.lock().unwrap();
        st.poisoned = true;
        self.cv.notify_all();
    }

    /// One rendezvous: every member deposits `input`; the last arrival
    /// runs `reduce` over the member-indexed slots and publishes the
    /// outcome to everyone.
    fn round<T, F>(&self, my_index: usize, input: Vec<T>, reduce: F) -> Result<Vec<T>>
    where
        T: Clone + Send + Sync + 'static,
        F: FnOnce(&mut [Slot]) -> std::result::Result<Vec<T>, String>,
    {
        let mut st = self.state.lock().unwrap();
        while st.result.is_some() && !st.poisoned {
            st = self.cv.wait(st).unwrap();
        }
        if st.poisoned {
            return Err(Error::CollectivePoisoned);
        }
        st.slots[my_index] = Some(Box::new(input));
        st.arrived += 1;
        if st.arrived == self.size {
            let outcome = reduce(&mut st.slots);
            st.result = Some(Arc::new(outcome));
            self.cv.notify_all();
        } else {
            while st.result.is_none() && !st.poisoned {
                st = self.cv.wait(st).unwrap();
            }
            if st.poisoned {
                return Err(Error::CollectivePoisoned);
            }
        }
        let arc = st.result.as_ref().unwrap().clone();
        let outcome = arc
            .downcast_ref::<std::result::Result<Vec<T>, String>>()
            .expect("collective element type agreed across members");
        let out = outcome.clone();
        st.departed += 1;
        if st.departed == self.size {
            st.arrived = 0;
            st.departed = 0;
            st.result = None;
            for s in st.slots.iter_mut() {
                *s = None;
            }
            self.cv.notify_all();
        }
        drop(st);
        out.map_err(|detail| Error::CollectiveShape { detail })
    }
}

/// Fixed reduction order: stride-doubling pairwise sums over member
/// indices, independent of arrival order.
fn tree_sum<T: Scalar>(slots: &mut [Slot]) -> std::result::Result<Vec<T>, String> {
    let n = slots.len();
    let mut bufs: Vec<Vec<T>> = Vec::with_capacity(n);
    for (i, s) in slots.iter_mut().enumerate() {
        let boxed = s.take().ok_or_else(|| format!("member {i} missing deposit"))?;
        bufs.push(
            *boxed
                .downcast::<Vec<T>>()
                .map_err(|_| "element type mismatch".to_string())?,
        );
    }
    let len = bufs[0].len();
    for (i, b) in bufs.iter().enumerate() {
        if b.len() != len {
            return Err(format!("member 0 has {len} elements, member {i} has {}", b.len()));
        }
    }
    let mut stride = 1;
    while stride < n {
        let mut i = 0;
        while i + stride < n {
            let (head, tail) = bufs.split_at_mut(i + stride);
            let dst = &mut head[i];
            let src = &tail[0];
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d += *s;
            }
            i += 2 * stride;
        }
        stride *= 2;
    }
    Ok(std::mem::take(&mut bufs[0]))
}

/// A rank's handle on one communicator (row or column).
///
/// Message/word counters tally this member's participation: one message
/// and `len` words per collective call.
pub struct Communicator {
    core: Arc<CommCore>,
    my_index: usize,
    messages: Cell<u64>,
    words: Cell<u64>,
}

impl Communicator {
    pub fn size(&self) -> usize {
        self.core.size
    }

    pub fn my_index(&self) -> usize {
        self.my_index
    }

    pub fn messages(&self) -> u64 {
        self.messages.get()
    }

    pub fn words(&self) -> u64 {
        self.words.get()
    }

    fn count(&self, words: u64) {
        self.messages.set(self.messages.get() + 1);
        self.words.set(self.words.get() + words);
    }

    /// Element-wise sum over all members; every member receives the
    /// result. Bitwise deterministic (fixed tree order).
    pub fn allreduce_sum<T: Scalar>(&self, buf: &mut [T]) -> Result<()> {
        self.count(buf.len() as u64);
        let out = self.core.round(self.my_index, buf.to_vec(), tree_sum::<T>)?;
        buf.copy_from_slice(&out);
        Ok(())
    }

    /// Every member receives `root`'s buffer; lengths must agree.
    pub fn bcast<T: Scalar>(&self, root: usize, buf: &mut [T]) -> Result<()> {
        self.count(buf.len() as u64);
        self.bcast_impl(root, buf)
    }

    /// Broadcast excluded from the message/word counters; used for
    /// debug-mode consistency checks so instrumented counts stay equal
    /// to the algorithmic communication volume.
    pub(crate) fn bcast_uncounted<T: Scalar>(&self, root: usize, buf: &mut [T]) -> Result<()> {
        self.bcast_impl(root, buf)
    }

    fn bcast_impl<T: Scalar>(&self, root: usize, buf: &mut [T]) -> Result<()> {
        if root >= self.core.size {
            return Err(Error::InvalidRoot {
                root,
                size: self.core.size,
            });
        }
        let len = buf.len();
        let out = self.core.round(self.my_index, buf.to_vec(), move |slots| {
            let boxed = slots[root].take().ok_or("root missing deposit".to_string())?;
            let data = *boxed
                .downcast::<Vec<T>>()
                .map_err(|_| "element type mismatch".to_string())?;
            if data.len() != len {
                return Err(format!("root buffer {} vs member buffer {len}", data.len()));
            }
            Ok(data)
        })?;
        buf.copy_from_slice(&out);
        Ok(())
    }

    pub fn barrier(&self) -> Result<()> {
        self.count(0);
        self.core
            .round::<u8, _>(self.my_index, Vec::new(), |_| Ok(Vec::new()))?;
        Ok(())
    }
}

/// Per-rank execution context handed to the worker closure.
pub struct RankCtx {
    pub rank: usize,
    pub row: usize,
    pub col: usize,
    pub shape: GridShape,
    row_comm: Communicator,
    col_comm: Communicator,
}

impl RankCtx {
    /// Communicator over the q ranks sharing this grid row.
    pub fn row_comm(&self) -> &Communicator {
        &self.row_comm
    }

    /// Communicator over the p ranks sharing this grid column.
    pub fn col_comm(&self) -> &Communicator {
        &self.col_comm
    }

    /// (messages, words) this rank has moved so far, both communicators.
    pub fn comm_totals(&self) -> (u64, u64) {
        (
            self.row_comm.messages() + self.col_comm.messages(),
            self.row_comm.words() + self.col_comm.words(),
        )
    }
}

/// The worker grid: topology plus the shared collective cores.
pub struct Grid {
    shape: GridShape,
    row_cores: Vec<Arc<CommCore>>,
    col_cores: Vec<Arc<CommCore>>,
}

impl Grid {
    pub fn new(shape: GridShape) -> Self {
        let row_cores = (0..shape.p).map(|_| Arc::new(CommCore::new(shape.q))).collect();
        let col_cores = (0..shape.q).map(|_| Arc::new(CommCore::new(shape.p))).collect();
        Self {
            shape,
            row_cores,
            col_cores,
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    fn ctx(&self, rank: usize) -> RankCtx {
        let (row, col) = self.shape.coords(rank);
        RankCtx {
            rank,
            row,
            col,
            shape: self.shape,
            row_comm: Communicator {
                core: self.row_cores[row].clone(),
                my_index: col,
                messages: Cell::new(0),
                words: Cell::new(0),
            },
            col_comm: Communicator {
                core: self.col_cores[col].clone(),
                my_index: row,
                messages: Cell::new(0),
                words: Cell::new(0),
            },
        }
    }

    fn poison_all(&self) {
        for c in self.row_cores.iter().chain(&self.col_cores) {
            c.poison();
        }
    }

    /// Runs `f` once per rank (one thread each; inline for a 1×1 grid)
    /// and returns the per-rank results in rank order.
    ///
    /// A panic in any worker poisons the collectives, unwinds the other
    /// workers, and is then re-raised on the caller thread.
    pub fn run<R, F>(&self, f: F) -> Result<Vec<R>>
    where
        R: Send,
        F: Fn(RankCtx) -> Result<R> + Sync,
    {
        let n = self.shape.ranks();
        if n == 1 {
            return Ok(vec![f(self.ctx(0))?]);
        }

        enum Outcome<R> {
            Done(Result<R>),
            Panicked(Box<dyn Any + Send>),
        }

        let mut outcomes: Vec<Option<Outcome<R>>> = (0..n).map(|_| None).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .map(|rank| {
                    let f = &f;
                    s.spawn(move || match catch_unwind(AssertUnwindSafe(|| f(self.ctx(rank)))) {
                        Ok(res) => Outcome::Done(res),
                        Err(payload) => {
                            self.poison_all();
                            Outcome::Panicked(payload)
                        }
                    })
                })
                .collect();
            for (slot, h) in outcomes.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|p| Outcome::Panicked(p)));
            }
        });

        let mut results = Vec::with_capacity(n);
        let mut first_err = None;
        for out in outcomes.into_iter().map(Option::unwrap) {
            match out {
                Outcome::Panicked(payload) => std::panic::resume_unwind(payload),
                Outcome::Done(Ok(r)) => results.push(r),
                Outcome::Done(Err(e)) => {
                    if first_err.is_none() {
                        first_err = Some(e);
                    }
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok(results),
        }
    }
}

// ---------------------------------------------------------------------
// Redistribution between the C (column-communicator) and B
// (row-communicator) buffer families
// ---------------------------------------------------------------------

/// Row partitions of the vector buffers for one problem instance:
/// C-type blocks follow H's row partition, B-type blocks H's column
/// partition.
#[derive(Clone, Debug)]
pub struct DistContext {
    pub row_part: AxisPartition,
    pub col_part: AxisPartition,
}

impl DistContext {
    pub fn new(n: usize, dist: Distribution, shape: GridShape) -> Self {
        Self {
            row_part: dist.row_partition(n, shape.p),
            col_part: dist.col_partition(n, shape.q),
        }
    }
}

/// Checks that the C↔B redistribution is realizable on this grid: square
/// grids need matching row/column partitions (a single diagonal-rooted
/// broadcast per communicator), p×1 and 1×q are assembled directly.
/// Anything else would need a multi-broadcast schedule and is rejected.
pub fn validate_redistribution(shape: GridShape, dist: Distribution, n: usize) -> Result<()> {
    if shape.p == 1 || shape.q == 1 {
        return Ok(());
    }
    if shape.p == shape.q {
        let dc = DistContext::new(n, dist, shape);
        if dc.row_part == dc.col_part {
            return Ok(());
        }
    }
    Err(Error::UnsupportedRedistribution {
        p: shape.p,
        q: shape.q,
    })
}

/// `B_out ← redistribute(C_in)`: moves a column-communicator-distributed
/// matrix into row-communicator layout.
pub fn redistribute_c_to_b<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    c: &DenseMatrix<T>,
    b_out: &mut DenseMatrix<T>,
) -> Result<()> {
    let k = c.cols();
    debug_assert_eq!(b_out.cols(), k);
    let (p, q) = (ctx.shape.p, ctx.shape.q);
    if p == 1 {
        // Column communicator is a singleton: C holds all N rows locally.
        let idx = dc.col_part.indices(ctx.col);
        for (local, &g) in idx.iter().enumerate() {
            for j in 0..k {
                *b_out.at_mut(local, j) = c.at(g, j);
            }
        }
        return Ok(());
    }
    if q == 1 {
        // B spans all N rows: allgather C over the column communicator.
        allgather_rows_into(ctx.col_comm(), &dc.row_part, c, b_out)
    } else if p == q {
        // Aligned partitions: the diagonal member owns this rank's B rows.
        let root = ctx.col;
        if ctx.row == root {
            b_out.data_mut().copy_from_slice(c.data());
        }
        ctx.col_comm().bcast(root, b_out.data_mut())
    } else {
        Err(Error::UnsupportedRedistribution { p, q })
    }
}

/// `C_out ← redistribute(B_in)`: the mirror move, used where a matrix
/// produced in B layout is needed back in C layout.
pub fn redistribute_b_to_c<T: Scalar>(
    ctx: &RankCtx,
    dc: &DistContext,
    b: &DenseMatrix<T>,
    c_out: &mut DenseMatrix<T>,
) -> Result<()> {
    let k = b.cols();
    debug_assert_eq!(c_out.cols(), k);
    let (p, q) = (ctx.shape.p, ctx.shape.q);
    if q == 1 {
        let idx = dc.row_part.indices(ctx.row);
        for (local, &g) in idx.iter().enumerate() {
            for j in 0..k {
                *c_out.at_mut(local, j) = b.at(g, j);
            }
        }
        return Ok(());
    }
    if p == 1 {
        allgather_rows_into(ctx.row_comm(), &dc.col_part, b, c_out)
    } else if p == q {
        let root = ctx.row;
        if ctx.col == root {
            c_out.data_mut().copy_from_slice(b.data());
        }
        ctx.row_comm().bcast(root, c_out.data_mut())
    } else {
        Err(Error::UnsupportedRedistribution { p, q })
    }
}

/// Assembles the full row-distributed matrix on every member by one
/// broadcast per member (round-robin collection).
pub fn allgather_rows<T: Scalar>(
    comm: &Communicator,
    part: &AxisPartition,
    local: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let mut out = DenseMatrix::zeros(part.total(), local.cols());
    allgather_rows_into(comm, part, local, &mut out)?;
    Ok(out)
}

fn allgather_rows_into<T: Scalar>(
    comm: &Communicator,
    part: &AxisPartition,
    local: &DenseMatrix<T>,
    out: &mut DenseMatrix<T>,
) -> Result<()> {
    let k = local.cols();
    debug_assert_eq!(out.rows(), part.total());
    for member in 0..comm.size() {
        let rows = part.count(member);
        let mut tmp = vec![T::ZERO; rows * k];
        if comm.my_index() == member {
            if local.rows() != rows {
                return Err(Error::Dimension {
                    op: "allgather_rows",
                    detail: format!("local block has {} rows, partition says {rows}", local.rows()),
                });
            }
            tmp.copy_from_slice(local.data());
        }
        comm.bcast(member, &mut tmp)?;
        let idx = part.indices(member);
        for (a, &g) in idx.iter().enumerate() {
            for j in 0..k {
                *out.at_mut(g, j) = tmp[j * rows + a];
            }
        }
    }
    Ok(())
}

/// This member's row slice of a fully assembled matrix (inverse of
/// [`allgather_rows`]; no communication).
pub fn scatter_rows<T: Scalar>(
    full: &DenseMatrix<T>,
    part: &AxisPartition,
    member: usize,
) -> DenseMatrix<T> {
    let idx = part.indices(member);
    DenseMatrix::from_fn(idx.len(), full.cols(), |a, j| full.at(idx[a], j))
}
