//! Dense frontal matrices: assembly from original entries plus child
//! contributions, and the pivoting elimination kernel.
//!
//! A front is a square dense matrix whose row and column axes each carry a
//! set of global (permuted) indices. The leading indices on both axes are
//! pivot candidates: the frontal's own columns plus whatever its children
//! delayed; the rest are update rows and columns owned by ancestors.
//! Row and column id sets start out identical, but pivoting can consume the
//! row of one candidate for a different candidate's column, so after a
//! delay the leftover row ids and column ids may differ. Contributions
//! therefore carry both axes.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{permute, CscMatrix, Permutation};
use crate::symbolic::{Analysis, NONE};

use super::{FactorOptions, FrontFactor};

/// Everything the elimination needs that does not change while it runs:
/// per-frontal structure, routed matrix entries and the tree wiring.
/// Rebuilt per factorization (entries carry values); shared read-only by
/// the parallel workers.
#[derive(Debug)]
pub(crate) struct FactorPlan<T> {
    pub n: usize,
    /// Column range of each frontal in permuted space.
    pub cols: Vec<Range<usize>>,
    /// Sorted union of the fill structures of each frontal's columns.
    pub rows: Vec<Vec<usize>>,
    /// Matrix entries in permuted coordinates, routed to the frontal owning
    /// `min(row, col)`; that frontal scatters them during assembly.
    pub entries: Vec<Vec<(usize, usize, T)>>,
    pub parent: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    /// Dense-front byte estimate per frontal (delays excluded); feeds the
    /// epoch memory statistic, mirroring the simulator's estimate.
    pub front_bytes: Vec<u64>,
    /// The fill-reducing ordering, kept to report singular columns in the
    /// caller's original indices.
    pub ordering: Permutation,
    pub pivot_tol: T,
}

impl<T: Scalar> FactorPlan<T> {
    pub fn new(a: &CscMatrix<T>, an: &Analysis, opts: &FactorOptions) -> Result<FactorPlan<T>> {
        let n = a.n();
        if n != an.fill.n() {
            return Err(Error::DimensionMismatch {
                expected: an.fill.n(),
                found: n,
            });
        }
        if !(opts.pivot_tol > 0.0 && opts.pivot_tol <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "pivot tolerance must lie in (0, 1], got {}",
                opts.pivot_tol
            )));
        }
        let nf = an.frontals.len();
        let m = permute(a, &an.ordering, &an.ordering);

        let mut rows = Vec::with_capacity(nf);
        for fi in 0..nf {
            let mut union: Vec<usize> = Vec::new();
            for c in an.frontals.cols(fi) {
                union = merge_sorted(&union, an.fill.col_struct(c));
            }
            rows.push(union);
        }

        let mut entries: Vec<Vec<(usize, usize, T)>> = vec![Vec::new(); nf];
        for j in 0..n {
            let (ridx, vals) = m.col(j);
            for (&i, &v) in ridx.iter().zip(vals) {
                entries[an.frontals.frontal_of(i.min(j))].push((i, j, v));
            }
        }

        let parent = an.frontals.parents(&an.etree);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); nf];
        for (f, &p) in parent.iter().enumerate() {
            if p != NONE {
                children[p].push(f);
            }
        }
        let front_bytes = rows
            .iter()
            .map(|r| (r.len() * r.len() * std::mem::size_of::<T>()) as u64)
            .collect();

        Ok(FactorPlan {
            n,
            cols: (0..nf).map(|fi| an.frontals.cols(fi)).collect(),
            rows,
            entries,
            parent,
            children,
            front_bytes,
            ordering: an.ordering.clone(),
            pivot_tol: T::from_f64_lossy(opts.pivot_tol),
        })
    }

    pub fn n_frontals(&self) -> usize {
        self.parent.len()
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Schur-complement block a finished front hands to its parent: a dense
/// square block whose row and column axes carry sorted global ids. The axes
/// agree unless a pivot consumed one candidate's row for another candidate's
/// column and the bereaved column was delayed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Contribution<T> {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// Row-major `rows.len() * cols.len()` values.
    pub vals: Vec<T>,
}

impl<T> Contribution<T> {
    pub fn bytes(&self) -> u64 {
        (self.vals.len() * std::mem::size_of::<T>()) as u64
    }

    #[cfg(test)]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Dense working front during elimination. Columns stay in sorted global
/// order; pivoting swaps rows only, tracked through `row_ids`.
#[derive(Debug)]
pub(crate) struct Front<T> {
    /// Sorted global column ids; the first `k` are pivot candidates.
    col_ids: Vec<usize>,
    /// Global row id currently held by each row slot; starts sorted, and its
    /// first `k` entries (candidate rows) are reordered by pivoting.
    row_ids: Vec<usize>,
    k: usize,
    /// Row-major `row_ids.len() * col_ids.len()` values.
    a: Vec<T>,
}

impl<T: Scalar> Front<T> {
    /// Builds the front for frontal `fi`: its static index set widened by
    /// any delayed ids the children hand up, original entries scattered in,
    /// child contributions added in the order given. Callers pass children
    /// in ascending frontal order so the summation order never depends on
    /// the schedule.
    pub fn assemble(plan: &FactorPlan<T>, fi: usize, kids: &[Contribution<T>]) -> Front<T> {
        let own = &plan.cols[fi];
        let mut row_ids: Vec<usize> = plan.rows[fi].clone();
        let mut col_ids: Vec<usize> = plan.rows[fi].clone();
        for kid in kids {
            for &id in &kid.rows {
                if let Err(slot) = row_ids.binary_search(&id) {
                    debug_assert!(id < own.start, "only delayed ids widen a front");
                    row_ids.insert(slot, id);
                }
            }
            for &id in &kid.cols {
                if let Err(slot) = col_ids.binary_search(&id) {
                    debug_assert!(id < own.start, "only delayed ids widen a front");
                    col_ids.insert(slot, id);
                }
            }
        }
        debug_assert_eq!(row_ids.len(), col_ids.len(), "fronts stay square");
        let m = col_ids.len();
        let k = col_ids.partition_point(|&i| i < own.end);
        debug_assert_eq!(k, row_ids.partition_point(|&i| i < own.end));

        let rpos = |id: usize| row_ids.binary_search(&id).expect("row belongs to this front");
        let cpos = |id: usize| col_ids.binary_search(&id).expect("col belongs to this front");
        let mut a = vec![T::zero(); m * m];
        for &(i, j, v) in &plan.entries[fi] {
            a[rpos(i) * m + cpos(j)] += v;
        }
        for kid in kids {
            let w = kid.cols.len();
            let rat: Vec<usize> = kid.rows.iter().map(|&id| rpos(id)).collect();
            let cat: Vec<usize> = kid.cols.iter().map(|&id| cpos(id)).collect();
            for r in 0..kid.rows.len() {
                let src = &kid.vals[r * w..(r + 1) * w];
                let dst = rat[r] * m;
                for c in 0..w {
                    a[dst + cat[c]] += src[c];
                }
            }
        }
        Front {
            col_ids,
            row_ids,
            k,
            a,
        }
    }

    pub fn bytes(&self) -> u64 {
        (self.a.len() * std::mem::size_of::<T>()) as u64
    }

    #[cfg(test)]
    pub fn from_dense(ids: Vec<usize>, k: usize, dense: &[&[T]]) -> Front<T> {
        let m = ids.len();
        assert!(k <= m && dense.len() == m);
        let mut a = vec![T::zero(); m * m];
        for (r, row) in dense.iter().enumerate() {
            a[r * m..(r + 1) * m].copy_from_slice(row);
        }
        Front {
            col_ids: ids.clone(),
            row_ids: ids,
            k,
            a,
        }
    }
}

/// Eliminates as many pivot candidates as threshold partial pivoting allows
/// and splits the front into its factor block and the parent contribution.
///
/// Pivots are confined to candidate rows: an update row belongs to an
/// ancestor and must survive. A candidate column is eliminated once some
/// candidate row's entry reaches `pivot_tol` times the column's full
/// magnitude (update rows included) and the absolute floor; the row carrying
/// the column's own index is preferred when it qualifies, keeping
/// near-diagonally-dominant systems unpermuted. Failed columns are retried
/// after other eliminations have updated them (repeated passes until a full
/// pass makes no progress), and whatever still fails is delayed: the
/// leftover rows and columns ride into the contribution block for the
/// parent to absorb.
///
/// The pass structure is fixed, so the elimination order, the row swaps and
/// every floating-point operation depend only on the assembled front, never
/// on scheduling.
pub(crate) fn factor_frontal<T: Scalar>(
    mut front: Front<T>,
    pivot_tol: T,
) -> (FrontFactor<T>, Contribution<T>) {
    let m = front.col_ids.len();
    let k = front.k;
    let a = &mut front.a;
    let floor = T::pivot_floor();

    let mut col_done = vec![false; m];
    let mut elim: Vec<usize> = Vec::with_capacity(k);
    loop {
        let mut progress = false;
        for cj in 0..k {
            if col_done[cj] {
                continue;
            }
            let e = elim.len();
            let mut col_max = T::zero();
            for r in e..m {
                col_max = col_max.max(a[r * m + cj].abs());
            }
            if col_max < floor {
                continue;
            }
            let need = (col_max * pivot_tol).max(floor);
            // Diagonal preference: the candidate row carrying this column's
            // own index, if it survives and qualifies.
            let mut slot = (e..k)
                .find(|&r| front.row_ids[r] == front.col_ids[cj] && a[r * m + cj].abs() >= need);
            if slot.is_none() {
                let best = (e..k).max_by(|&r, &s| {
                    a[r * m + cj]
                        .abs()
                        .partial_cmp(&a[s * m + cj].abs())
                        .expect("finite front values")
                });
                slot = best.filter(|&r| a[r * m + cj].abs() >= need);
            }
            let Some(s) = slot else { continue };

            if s != e {
                let (lo, hi) = a.split_at_mut(s * m);
                lo[e * m..(e + 1) * m].swap_with_slice(&mut hi[..m]);
                front.row_ids.swap(e, s);
            }
            let upd_cols: Vec<usize> = (0..m).filter(|&c| !col_done[c] && c != cj).collect();
            let piv = a[e * m + cj];
            for r in (e + 1)..m {
                let l = a[r * m + cj] / piv;
                a[r * m + cj] = l;
                if l != T::zero() {
                    let (top, bot) = a.split_at_mut((e + 1) * m);
                    let src = &top[e * m..];
                    let dst = &mut bot[(r - e - 1) * m..(r - e) * m];
                    for &c in &upd_cols {
                        dst[c] -= l * src[c];
                    }
                }
            }
            col_done[cj] = true;
            elim.push(cj);
            progress = true;
        }
        if !progress {
            break;
        }
    }

    let ne = elim.len();
    // Step of each column position within this front, for splitting U out of
    // the in-place storage (earlier steps' positions hold L multipliers).
    let mut step_of = vec![NONE; m];
    for (t, &cj) in elim.iter().enumerate() {
        step_of[cj] = t;
    }

    let mut ff = FrontFactor {
        cols: elim.iter().map(|&cj| front.col_ids[cj]).collect(),
        pivot_rows: front.row_ids[..ne].to_vec(),
        pivots: Vec::with_capacity(ne),
        l_struct: Vec::with_capacity(ne),
        l_values: Vec::with_capacity(ne),
        u_struct: Vec::with_capacity(ne),
        u_values: Vec::with_capacity(ne),
    };
    for (t, &cj) in elim.iter().enumerate() {
        ff.pivots.push(a[t * m + cj]);
        ff.l_struct.push(front.row_ids[t + 1..].to_vec());
        ff.l_values.push(((t + 1)..m).map(|r| a[r * m + cj]).collect());
        let (us, uv) = (0..m)
            .filter(|&c| c != cj && (step_of[c] == NONE || step_of[c] > t))
            .map(|c| (front.col_ids[c], a[t * m + c]))
            .unzip();
        ff.u_struct.push(us);
        ff.u_values.push(uv);
    }

    // Contribution: every surviving row against every surviving column, both
    // axes in ascending id order regardless of how pivoting shuffled slots.
    let w = m - ne;
    let mut live_rows: Vec<(usize, usize)> = (ne..m).map(|r| (front.row_ids[r], r)).collect();
    live_rows.sort_unstable();
    let live_cols: Vec<usize> = (0..m).filter(|&c| step_of[c] == NONE).collect();
    let mut vals = Vec::with_capacity(w * w);
    for &(_, r) in &live_rows {
        for &c in &live_cols {
            vals.push(a[r * m + c]);
        }
    }
    let update = Contribution {
        rows: live_rows.into_iter().map(|(id, _)| id).collect(),
        cols: live_cols.into_iter().map(|c| front.col_ids[c]).collect(),
        vals,
    };
    (ff, update)
}
