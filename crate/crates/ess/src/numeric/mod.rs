//! Numeric LU factorization over the frontal tree, triangular solves and
//! pattern-reusing refactorization.
//!
//! The factorization walks the frontal elimination tree bottom-up: each
//! frontal assembles a dense front from routed matrix entries plus its
//! children's Schur contributions, eliminates what threshold pivoting
//! allows, and hands the rest upward. Columns whose pivots fail are delayed
//! into the parent front, so the final row and column permutations combine
//! the fill-reducing ordering with pivoting and delays. The serial driver
//! here is the reference; the task-parallel executor in [`parallel_factor`]
//! produces bit-identical factors because every front's input, and therefore
//! every pivot decision, is schedule-independent.

mod exec;
mod front;
mod real;
mod solve;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CscMatrix, Permutation};
use crate::symbolic::{analyze, Analysis, AnalyzeOptions, NONE};

pub use exec::{parallel_factor, EpochReport, ParallelRun};
pub use real::{train_real, RealExecEnv};
pub use solve::{par_solve, solve};

use front::{factor_frontal, Contribution, FactorPlan, Front};

/// Numeric knobs for the factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorOptions {
    /// Threshold-pivoting relative tolerance in (0, 1]: a pivot candidate is
    /// accepted once its magnitude reaches this fraction of the largest
    /// entry in its column. 1.0 recovers full partial pivoting inside each
    /// front; small values keep near-dominant diagonals unpermuted.
    pub pivot_tol: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions { pivot_tol: 0.001 }
    }
}

/// The factor block one frontal produced: for each column it eliminated, the
/// pivot and the dense L column / U row over global (permuted) indices.
///
/// `cols` is in elimination order, which can deviate from ascending id order
/// when a column only passes the pivot threshold after later columns update
/// it. `l_struct[t]` lists the global row ids below pivot `t` (future pivot
/// rows of this front, then whatever ascends to ancestors), `u_struct[t]`
/// the global column ids right of it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontFactor<T> {
    pub cols: Vec<usize>,
    pub pivot_rows: Vec<usize>,
    pub pivots: Vec<T>,
    pub l_struct: Vec<Vec<usize>>,
    pub l_values: Vec<Vec<T>>,
    pub u_struct: Vec<Vec<usize>>,
    pub u_values: Vec<Vec<T>>,
}

impl<T> FrontFactor<T> {
    pub fn n_eliminated(&self) -> usize {
        self.cols.len()
    }
}

/// A complete LU factorization in frontal form.
///
/// With `P = row_perm` and `Q = col_perm` (both mapping original indices to
/// elimination steps), the stored fronts recompose to `P·A·Qᵀ = L·U` with L
/// unit lower triangular and U upper triangular in step space. `ordering` is
/// the symmetric fill-reducing part shared by both permutations; pivot row
/// swaps and delayed columns contribute the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct LUFactors<T> {
    n: usize,
    fronts: Vec<FrontFactor<T>>,
    frontal_parent: Vec<usize>,
    ordering: Permutation,
    row_perm: Permutation,
    col_perm: Permutation,
}

impl<T: Scalar> LUFactors<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Per-frontal factor blocks, in frontal order.
    pub fn fronts(&self) -> &[FrontFactor<T>] {
        &self.fronts
    }

    /// Full row permutation, original row index to elimination step.
    pub fn row_perm(&self) -> &Permutation {
        &self.row_perm
    }

    /// Full column permutation, original column index to elimination step.
    pub fn col_perm(&self) -> &Permutation {
        &self.col_perm
    }

    /// The symmetric fill-reducing ordering the analysis chose.
    pub fn ordering(&self) -> &Permutation {
        &self.ordering
    }

    pub(crate) fn frontal_parent(&self) -> &[usize] {
        &self.frontal_parent
    }

    /// Dense L and U in elimination-step coordinates. Test and debugging
    /// aid: allocates 2n² values.
    pub fn to_dense(&self) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let n = self.n;
        // Permuted id -> step, on each axis.
        let mut row_step = vec![0; n];
        let mut col_step = vec![0; n];
        for i in 0..n {
            row_step[self.ordering.map(i)] = self.row_perm.map(i);
            col_step[self.ordering.map(i)] = self.col_perm.map(i);
        }
        let mut l = vec![vec![T::zero(); n]; n];
        let mut u = vec![vec![T::zero(); n]; n];
        for ff in &self.fronts {
            for t in 0..ff.cols.len() {
                let s = col_step[ff.cols[t]];
                debug_assert_eq!(s, row_step[ff.pivot_rows[t]]);
                l[s][s] = T::one();
                u[s][s] = ff.pivots[t];
                for (&r, &v) in ff.l_struct[t].iter().zip(&ff.l_values[t]) {
                    l[row_step[r]][s] = v;
                }
                for (&c, &v) in ff.u_struct[t].iter().zip(&ff.u_values[t]) {
                    u[s][col_step[c]] = v;
                }
            }
        }
        (l, u)
    }
}

/// One executed task: a burst of frontals eliminated back to back on one
/// core. Timestamps are microseconds from the start of the run; peak_bytes
/// is the worker's measured high-water mark of front plus contribution
/// storage while running the burst.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub task_id: usize,
    pub frontals: Vec<usize>,
    pub core: usize,
    pub t_start_us: u64,
    pub t_end_us: u64,
    pub peak_bytes: u64,
}

/// Execution record of a parallel factorization, one row per dispatched
/// task, in dispatch order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScheduleTrace {
    pub rows: Vec<TraceRow>,
}

impl ScheduleTrace {
    /// CSV rendering; the frontal list is space-separated inside its field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task_id,frontals,core,t_start_us,t_end_us,peak_bytes\n");
        for r in &self.rows {
            let frontals = r
                .frontals
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.task_id, frontals, r.core, r.t_start_us, r.t_end_us, r.peak_bytes
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Structural soundness of a recorded schedule against the frontal
    /// tree: every frontal eliminated exactly once, per-core intervals
    /// disjoint, and every cross-task child finished before its parent's
    /// task began. Returns a description of the first violation.
    pub fn validate(&self, frontal_parent: &[usize]) -> std::result::Result<(), String> {
        let nf = frontal_parent.len();
        let mut task_of = vec![usize::MAX; nf];
        for (ri, row) in self.rows.iter().enumerate() {
            if row.t_end_us < row.t_start_us {
                return Err(format!("task {} ends before it starts", row.task_id));
            }
            for &f in &row.frontals {
                if f >= nf {
                    return Err(format!("task {} names unknown frontal {f}", row.task_id));
                }
                if task_of[f] != usize::MAX {
                    return Err(format!("frontal {f} eliminated twice"));
                }
                task_of[f] = ri;
            }
        }
        if let Some(f) = task_of.iter().position(|&t| t == usize::MAX) {
            return Err(format!("frontal {f} never eliminated"));
        }

        let mut by_core: BTreeMap<usize, Vec<(u64, u64)>> = BTreeMap::new();
        for row in &self.rows {
            by_core
                .entry(row.core)
                .or_default()
                .push((row.t_start_us, row.t_end_us));
        }
        for (core, mut spans) in by_core {
            spans.sort_unstable();
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 {
                    return Err(format!("core {core} runs two tasks at once"));
                }
            }
        }

        for f in 0..nf {
            let p = frontal_parent[f];
            if p == NONE || task_of[p] == task_of[f] {
                continue;
            }
            let child_end = self.rows[task_of[f]].t_end_us;
            let parent_start = self.rows[task_of[p]].t_start_us;
            if child_end > parent_start {
                return Err(format!(
                    "frontal {f} finished at {child_end}us, after its parent's task began at {parent_start}us"
                ));
            }
        }
        Ok(())
    }
}

/// Eliminates one frontal: assemble, factor, and either pass the update to
/// the parent or, at a root, flag the leftover columns as singular. Also
/// reports the assembled front's size for memory accounting.
pub(crate) fn eliminate_one<T: Scalar>(
    plan: &FactorPlan<T>,
    fi: usize,
    kids: &[Contribution<T>],
) -> Result<(FrontFactor<T>, Option<Contribution<T>>, u64)> {
    let front = Front::assemble(plan, fi, kids);
    let front_bytes = front.bytes();
    let (ff, upd) = factor_frontal(front, plan.pivot_tol);
    if plan.parent[fi] == NONE {
        if let Some(&c) = upd.cols.first() {
            return Err(Error::Singular {
                column: plan.ordering.map_inv(c),
            });
        }
        Ok((ff, None, front_bytes))
    } else {
        Ok((ff, Some(upd), front_bytes))
    }
}

/// Assembles the final factors from per-frontal blocks: assigns elimination
/// steps by walking fronts in frontal order (delayed columns by then sit in
/// ancestor fronts) and composes the full row and column permutations.
pub(crate) fn build_factors<T: Scalar>(
    plan: &FactorPlan<T>,
    fronts: Vec<FrontFactor<T>>,
) -> Result<LUFactors<T>> {
    let n = plan.n;
    let mut row_step = vec![NONE; n];
    let mut col_step = vec![NONE; n];
    let mut step = 0;
    for ff in &fronts {
        for t in 0..ff.cols.len() {
            debug_assert_eq!(col_step[ff.cols[t]], NONE);
            debug_assert_eq!(row_step[ff.pivot_rows[t]], NONE);
            col_step[ff.cols[t]] = step;
            row_step[ff.pivot_rows[t]] = step;
            step += 1;
        }
    }
    debug_assert_eq!(step, n, "every column is eliminated exactly once");
    let row_perm = Permutation::new((0..n).map(|i| row_step[plan.ordering.map(i)]).collect())?;
    let col_perm = Permutation::new((0..n).map(|j| col_step[plan.ordering.map(j)]).collect())?;
    Ok(LUFactors {
        n,
        fronts,
        frontal_parent: plan.parent.clone(),
        ordering: plan.ordering.clone(),
        row_perm,
        col_perm,
    })
}

/// Single-threaded reference factorization: eliminates frontals in ascending
/// order, which is always a valid bottom-up traversal.
pub fn serial_factor<T: Scalar>(
    a: &CscMatrix<T>,
    an: &Analysis,
    opts: &FactorOptions,
) -> Result<LUFactors<T>> {
    let plan = FactorPlan::new(a, an, opts)?;
    let nf = plan.n_frontals();
    let mut store: Vec<Option<Contribution<T>>> = (0..nf).map(|_| None).collect();
    let mut fronts = Vec::with_capacity(nf);
    for fi in 0..nf {
        let kids: Vec<Contribution<T>> = plan.children[fi]
            .iter()
            .map(|&c| store[c].take().expect("children precede their parent"))
            .collect();
        let (ff, upd, _) = eliminate_one(&plan, fi, &kids)?;
        if let Some(u) = upd {
            store[fi] = Some(u);
        }
        fronts.push(ff);
    }
    build_factors(&plan, fronts)
}

/// Analysis plus factorization bundled around one matrix, so later
/// same-pattern matrices can reuse the symbolic work.
#[derive(Debug, Clone)]
pub struct Solver<T: Scalar> {
    a: CscMatrix<T>,
    analysis: Analysis,
    opts: FactorOptions,
}

impl<T: Scalar> Solver<T> {
    pub fn new(
        a: CscMatrix<T>,
        analyze_opts: &AnalyzeOptions,
        opts: FactorOptions,
    ) -> Result<Solver<T>> {
        let analysis = analyze(&a, analyze_opts)?;
        Ok(Solver { a, analysis, opts })
    }

    /// Wraps an existing analysis of `a`.
    pub fn with_analysis(a: CscMatrix<T>, analysis: Analysis, opts: FactorOptions) -> Solver<T> {
        Solver { a, analysis, opts }
    }

    pub fn matrix(&self) -> &CscMatrix<T> {
        &self.a
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    pub fn options(&self) -> &FactorOptions {
        &self.opts
    }

    pub fn factor(&self) -> Result<LUFactors<T>> {
        serial_factor(&self.a, &self.analysis, &self.opts)
    }

    /// Errors with the first differing column unless `a2` has exactly the
    /// analyzed pattern.
    pub fn check_same_pattern(&self, a2: &CscMatrix<T>) -> Result<()> {
        match self.a.pattern_differs_at(a2) {
            None => Ok(()),
            Some(column) => Err(Error::PatternMismatch { column }),
        }
    }

    /// Numeric-only refactorization: reuses the ordering, fill, frontal
    /// partition and task tree of the analyzed matrix for new values on the
    /// identical pattern.
    pub fn refactor_same_pattern(&self, a2: &CscMatrix<T>) -> Result<LUFactors<T>> {
        self.check_same_pattern(a2)?;
        serial_factor(a2, &self.analysis, &self.opts)
    }
}
