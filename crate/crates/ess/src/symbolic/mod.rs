//! Symbolic factorization: elimination tree, fill pattern, frontal detection
//! and the task tree the scheduler works on.
//!
//! All functions here operate on a structurally symmetric matrix in its final
//! elimination order. [`analyze`] bundles the whole pipeline (symmetrize,
//! order, tree, fill, frontals) behind one call.

mod mindeg;

pub use mindeg::min_degree_order;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedmdp::TaskTree;
use crate::sparse::{permute, CscMatrix, Permutation};

/// Sentinel for "no parent" in elimination and frontal trees.
pub const NONE: usize = usize::MAX;

/// Column elimination tree: `parent[j]` is the smallest i > j with L[i, j]
/// structurally nonzero, or [`NONE`] for roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    parent: Vec<usize>,
}

impl EliminationTree {
    /// Assembles a tree from a raw parent array ([`NONE`] for roots). Parents
    /// must sit after their children, as they do in any elimination order.
    pub(crate) fn from_parents(parent: Vec<usize>) -> EliminationTree {
        debug_assert!(parent
            .iter()
            .enumerate()
            .all(|(j, &p)| p == NONE || p > j));
        EliminationTree { parent }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        match self.parent[j] {
            NONE => None,
            p => Some(p),
        }
    }

    /// Raw parent array with [`NONE`] sentinels.
    pub fn as_slice(&self) -> &[usize] {
        &self.parent
    }

    /// Children of each node, in increasing order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.parent.len()];
        for (j, &p) in self.parent.iter().enumerate() {
            if p != NONE {
                ch[p].push(j);
            }
        }
        ch
    }

    /// Longest root-to-leaf path length, counted in nodes. Zero for an empty
    /// tree.
    pub fn height(&self) -> usize {
        let n = self.parent.len();
        let mut depth = vec![0usize; n];
        let mut best = 0;
        // parent[j] > j, so a single left-to-right... parents are larger than
        // children, so compute depths right-to-left from the roots.
        for j in (0..n).rev() {
            depth[j] = match self.parent[j] {
                NONE => 1,
                p => depth[p] + 1,
            };
            best = best.max(depth[j]);
        }
        best
    }
}

/// Structure of L per column: sorted row indices, diagonal included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillPattern {
    cols: Vec<Vec<usize>>,
}

impl FillPattern {
    /// Assembles a pattern from per-column sorted row lists; column j's list
    /// must start with its diagonal.
    pub(crate) fn from_cols(cols: Vec<Vec<usize>>) -> FillPattern {
        debug_assert!(cols
            .iter()
            .enumerate()
            .all(|(j, s)| s.first() == Some(&j) && s.windows(2).all(|w| w[0] < w[1])));
        FillPattern { cols }
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn col_struct(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    /// Total structural nonzeros in L (diagonal included).
    pub fn nnz_lower(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// Fill-ins: entries of L absent from the lower triangle of `a`.
    pub fn fill_count<T: Scalar>(&self, a: &CscMatrix<T>) -> usize {
        let mut lower_nnz = 0;
        for j in 0..a.n() {
            let (rows, _) = a.col(j);
            lower_nnz += rows.iter().filter(|&&i| i >= j).count();
        }
        self.nnz_lower() - lower_nnz
    }
}

fn require_symmetric<T: Scalar>(a: &CscMatrix<T>) -> Result<()> {
    if !a.is_pattern_symmetric() {
        return Err(Error::InvalidMatrix(
            "symbolic analysis needs a structurally symmetric pattern; \
             symmetrize first"
                .into(),
        ));
    }
    Ok(())
}

/// Elimination tree of a structurally symmetric matrix, by the ancestor
/// path-compression construction: for each entry (i, j) with i < j, walk i's
/// ancestor chain and graft it under j.
pub fn elimination_tree<T: Scalar>(a: &CscMatrix<T>) -> Result<EliminationTree> {
    require_symmetric(a)?;
    let n = a.n();
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for j in 0..n {
        let (rows, _) = a.col(j);
        for &i in rows.iter().take_while(|&&i| i < j) {
            let mut r = i;
            loop {
                let anc = ancestor[r];
                ancestor[r] = j;
                if anc == NONE {
                    parent[r] = j;
                    break;
                }
                if anc == j {
                    break;
                }
                r = anc;
            }
        }
    }
    Ok(EliminationTree { parent })
}

/// Exact structure of L assuming no numerical cancellation: each column is
/// the union of its lower A-structure and its children's structures (minus
/// their diagonals), walked in elimination order.
pub fn symbolic_fill<T: Scalar>(a: &CscMatrix<T>, tree: &EliminationTree) -> Result<FillPattern> {
    require_symmetric(a)?;
    let n = a.n();
    if tree.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tree.n(),
        });
    }
    let children = tree.children();
    let mut cols: Vec<Vec<usize>> = Vec::with_capacity(n);
    // Dense marker workspace: mark[i] == j means row i is already in column j.
    let mut mark = vec![usize::MAX; n];
    for j in 0..n {
        let mut s = Vec::new();
        mark[j] = j;
        s.push(j);
        let (rows, _) = a.col(j);
        for &i in rows.iter().filter(|&&i| i > j) {
            if mark[i] != j {
                mark[i] = j;
                s.push(i);
            }
        }
        for &c in &children[j] {
            for &i in cols[c].iter().filter(|&&i| i > c) {
                debug_assert!(i >= j, "child structure reaches above the parent");
                if mark[i] != j {
                    mark[i] = j;
                    s.push(i);
                }
            }
        }
        s.sort_unstable();
        cols.push(s);
    }
    Ok(FillPattern { cols })
}

/// Partition of the columns into frontals: maximal runs of consecutive
/// columns eliminated together as one dense front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontalPartition {
    /// Half-open column ranges, in elimination order.
    frontals: Vec<(usize, usize)>,
    /// Column -> frontal index.
    frontal_of: Vec<usize>,
}

impl FrontalPartition {
    /// Assembles a partition from half-open ranges that tile `0..n` in order.
    pub(crate) fn from_ranges(frontals: Vec<(usize, usize)>) -> FrontalPartition {
        let n = frontals.last().map_or(0, |&(_, e)| e);
        let mut frontal_of = vec![0usize; n];
        let mut expect = 0;
        for (fi, &(s, e)) in frontals.iter().enumerate() {
            assert!(s == expect && e > s, "frontal ranges must tile the columns");
            for c in s..e {
                frontal_of[c] = fi;
            }
            expect = e;
        }
        FrontalPartition {
            frontals,
            frontal_of,
        }
    }

    pub fn len(&self) -> usize {
        self.frontals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frontals.is_empty()
    }

    pub fn n_cols(&self) -> usize {
        self.frontal_of.len()
    }

    /// Columns of frontal `fi`.
    pub fn cols(&self, fi: usize) -> std::ops::Range<usize> {
        let (s, e) = self.frontals[fi];
        s..e
    }

    pub fn frontal_of(&self, col: usize) -> usize {
        self.frontal_of[col]
    }

    /// Column groups as explicit vectors, mostly for tests and reporting.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        self.frontals.iter().map(|&(s, e)| (s..e).collect()).collect()
    }

    /// Frontal-level parent of each frontal ([`NONE`] for roots): the frontal
    /// owning the elimination-tree parent of the frontal's last column.
    pub fn parents(&self, tree: &EliminationTree) -> Vec<usize> {
        self.frontals
            .iter()
            .map(|&(_, e)| match tree.parent(e - 1) {
                None => NONE,
                Some(p) => self.frontal_of[p],
            })
            .collect()
    }
}

/// Greedy frontal detection. Columns j and j+1 merge when j's parent is j+1
/// and column j+1's structure adds at most `relax` rows over column j's; at
/// relax = 0 only exactly nested pairs merge (struct(j+1) = struct(j) minus
/// its diagonal). Merges chain, so a frontal is a maximal such run.
pub fn detect_frontals(
    fill: &FillPattern,
    tree: &EliminationTree,
    relax: usize,
) -> FrontalPartition {
    let n = fill.n();
    assert_eq!(tree.n(), n, "fill and tree disagree on n");
    let mut frontals = Vec::new();
    let mut frontal_of = vec![0usize; n];
    let mut start = 0;
    for j in 0..n {
        let merge_next = j + 1 < n && tree.parent(j) == Some(j + 1) && {
            let cur = fill.col_struct(j);
            let next = fill.col_struct(j + 1);
            // Entries of struct(j+1) missing from struct(j): the merged front
            // would pad column j with that many explicit zeros.
            let mut extra = 0usize;
            let mut ki = 0;
            for &r in next {
                while ki < cur.len() && cur[ki] < r {
                    ki += 1;
                }
                if ki == cur.len() || cur[ki] != r {
                    extra += 1;
                }
            }
            extra <= relax
        };
        if !merge_next {
            let fi = frontals.len();
            for c in start..=j {
                frontal_of[c] = fi;
            }
            frontals.push((start, j + 1));
            start = j + 1;
        }
    }
    FrontalPartition {
        frontals,
        frontal_of,
    }
}

/// Per-frontal workload estimate: sum over the frontal's columns of the
/// squared column structure size, a proxy for the dense elimination flops.
pub fn frontal_workloads(partition: &FrontalPartition, fill: &FillPattern) -> Vec<u64> {
    (0..partition.len())
        .map(|fi| {
            partition
                .cols(fi)
                .map(|c| (fill.col_struct(c).len() as u64).pow(2))
                .sum()
        })
        .collect()
}

/// Builds the scheduling task tree over frontals: one node per frontal with
/// its workload, edges following the frontal-level elimination tree, and an
/// empty cut set (the whole tree is one task).
pub fn build_task_tree(
    partition: &FrontalPartition,
    fill: &FillPattern,
    tree: &EliminationTree,
) -> TaskTree {
    let workloads = frontal_workloads(partition, fill);
    let parents = partition.parents(tree);
    TaskTree::new(workloads, parents)
}

/// Which fill-reducing ordering [`analyze`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    /// Minimum degree on A + Aᵀ.
    #[default]
    MinDegree,
    /// Keep the input order.
    Natural,
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub ordering: Ordering,
    /// Frontal relaxation: extra structure rows a column may add to its
    /// predecessor and still share a front with it.
    pub relax: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            ordering: Ordering::MinDegree,
            relax: 4,
        }
    }
}

/// Everything the numeric factorization needs to know about structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Analysis {
    /// Symmetric fill-reducing ordering, old index -> elimination position.
    pub ordering: Permutation,
    /// Elimination tree over permuted columns.
    pub etree: EliminationTree,
    /// L structure over permuted columns.
    pub fill: FillPattern,
    pub frontals: FrontalPartition,
    pub relax: usize,
}

impl Analysis {
    /// Task tree over this analysis's frontals.
    pub fn task_tree(&self) -> TaskTree {
        build_task_tree(&self.frontals, &self.fill, &self.etree)
    }
}

/// Full symbolic pipeline: symmetrize the pattern, order it, build the tree,
/// the fill and the frontal partition.
pub fn analyze<T: Scalar>(a: &CscMatrix<T>, opts: &AnalyzeOptions) -> Result<Analysis> {
    let sym = a.symmetrize_pattern();
    let ordering = match opts.ordering {
        Ordering::MinDegree => min_degree_order(&sym),
        Ordering::Natural => Permutation::identity(a.n()),
    };
    let m = permute(&sym, &ordering, &ordering);
    let etree = elimination_tree(&m)?;
    let fill = symbolic_fill(&m, &etree)?;
    let frontals = detect_frontals(&fill, &etree, opts.relax);
    Ok(Analysis {
        ordering,
        etree,
        fill,
        frontals,
        relax: opts.relax,
    })
}
