//! Independent-diagonal-block detection and symbolic reuse across blocks with
//! identical local sparsity.
//!
//! Power-system matrices lead with many small decoupled equipment blocks and
//! trail with a network part the blocks couple into. [`find_diagonal_blocks`]
//! recovers the block ranges, [`reuse_plan`] groups ranges whose local
//! patterns match exactly, and [`analyze_blocked`] runs one symbolic analysis
//! per group (instead of per block) and composes the results into a single
//! whole-matrix [`Analysis`] the numeric factorization consumes unchanged.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::{CscMatrix, Permutation};
use crate::symbolic::{
    analyze, Analysis, AnalyzeOptions, EliminationTree, FillPattern, FrontalPartition, NONE,
};

/// Column partition into independent diagonal blocks plus a trailing coupling
/// region (the network equations and their border couplings).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMap {
    /// Half-open column ranges, ascending, tiling `0..coupling.start`.
    pub blocks: Vec<Range<usize>>,
    /// The trailing columns excluded from block discovery.
    pub coupling: Range<usize>,
}

impl BlockMap {
    pub fn n(&self) -> usize {
        self.coupling.end
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Checks the shape invariants and block independence against a matrix:
    /// ranges tile the block region in order, and no stored entry of a block
    /// column leaves the block except into the coupling rows.
    pub fn validate<T: Scalar>(&self, a: &CscMatrix<T>) -> Result<()> {
        if self.coupling.end != a.n() || self.coupling.start > self.coupling.end {
            return Err(Error::InvalidMatrix(format!(
                "coupling range {:?} does not fit an n = {} matrix",
                self.coupling,
                a.n()
            )));
        }
        let mut expect = 0;
        for r in &self.blocks {
            if r.start != expect || r.is_empty() {
                return Err(Error::InvalidMatrix(format!(
                    "block ranges must tile the block region; {r:?} starts at {expect}"
                )));
            }
            expect = r.end;
        }
        if expect != self.coupling.start {
            return Err(Error::InvalidMatrix(format!(
                "blocks end at {expect} but the coupling region starts at {}",
                self.coupling.start
            )));
        }
        for r in &self.blocks {
            for j in r.clone() {
                let (rows, _) = a.col(j);
                for &i in rows {
                    if i < self.coupling.start && !r.contains(&i) {
                        return Err(Error::InvalidMatrix(format!(
                            "entry ({i}, {j}) connects two different blocks"
                        )));
                    }
                }
            }
        }
        // Rows of a block never appear in another block's columns, and the
        // check above covers columns; block rows inside coupling columns are
        // allowed (that is the border), so nothing more to verify.
        Ok(())
    }
}

/// Finds the independent diagonal blocks among columns `0..n - border_hint`.
///
/// Blocks come out as maximal contiguous runs with no entry crossing a run
/// boundary (in either direction); components that interleave in the index
/// order are conservatively merged into one run. The trailing `border_hint`
/// columns always land in the coupling region, entries into them do not link
/// blocks together.
pub fn find_diagonal_blocks<T: Scalar>(
    a: &CscMatrix<T>,
    border_hint: usize,
) -> Result<BlockMap> {
    if border_hint >= a.n() {
        return Err(Error::InvalidSpec(format!(
            "border {border_hint} leaves no block region in an n = {} matrix",
            a.n()
        )));
    }
    let region = a.n() - border_hint;
    let sym = a.symmetrize_pattern();
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut reach = 0usize;
    for j in 0..region {
        reach = reach.max(j);
        let (rows, _) = sym.col(j);
        for &i in rows.iter().filter(|&&i| i < region) {
            reach = reach.max(i);
        }
        if j == reach {
            blocks.push(start..j + 1);
            start = j + 1;
        }
    }
    Ok(BlockMap {
        blocks,
        coupling: region..a.n(),
    })
}

/// Per-column row lists of the block-local square pattern, rows shifted to
/// the block origin. Entries outside the block (coupling rows) are excluded.
fn local_cols<T: Scalar>(a: &CscMatrix<T>, block: &Range<usize>) -> Vec<Vec<usize>> {
    block
        .clone()
        .map(|j| {
            let (rows, _) = a.col(j);
            rows.iter()
                .filter(|&&i| block.contains(&i))
                .map(|&i| i - block.start)
                .collect()
        })
        .collect()
}

/// 64-bit polynomial digest of a block's local pattern, invariant under the
/// block's position in the matrix. Equal patterns always collide; unequal
/// ones almost never do, and [`reuse_plan`] verifies exactly before grouping.
pub fn structure_hash<T: Scalar>(a: &CscMatrix<T>, block: Range<usize>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut mix = |x: u64| h = h.wrapping_mul(PRIME) ^ x;
    mix(block.len() as u64);
    for col in local_cols(a, &block) {
        mix(u64::MAX);
        for i in col {
            mix(i as u64);
        }
    }
    h
}

/// Grouping of blocks by identical local pattern. Structure ids are assigned
/// in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReusePlan {
    /// Block index -> structure id.
    pub structure_of: Vec<usize>,
    /// Structure id -> member block indices, ascending. The first member is
    /// the group's representative.
    pub groups: Vec<Vec<usize>>,
}

impl ReusePlan {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// The block whose symbolic analysis the whole group adopts.
    pub fn representative(&self, group: usize) -> usize {
        self.groups[group][0]
    }
}

/// Groups the map's blocks by exact local-pattern equality. Hashes bucket the
/// candidates; a full pattern comparison against the group representative
/// confirms each membership, so hash collisions cannot merge distinct
/// structures.
pub fn reuse_plan<T: Scalar>(a: &CscMatrix<T>, map: &BlockMap) -> ReusePlan {
    let mut structure_of = Vec::with_capacity(map.blocks.len());
    let mut groups: Vec<Vec<usize>> = Vec::new();
    // (size, hash) -> candidate group ids, plus each group's normalized
    // pattern for the exact check.
    let mut buckets: Vec<((usize, u64), Vec<usize>)> = Vec::new();
    let mut patterns: Vec<Vec<Vec<usize>>> = Vec::new();
    for (b, r) in map.blocks.iter().enumerate() {
        let key = (r.len(), structure_hash(a, r.clone()));
        let cols = local_cols(a, r);
        let bi = match buckets.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                buckets.push((key, Vec::new()));
                buckets.len() - 1
            }
        };
        let gid = match buckets[bi].1.iter().copied().find(|&g| patterns[g] == cols) {
            Some(g) => g,
            None => {
                let g = groups.len();
                groups.push(Vec::new());
                patterns.push(cols);
                buckets[bi].1.push(g);
                g
            }
        };
        groups[gid].push(b);
        structure_of.push(gid);
    }
    ReusePlan {
        structure_of,
        groups,
    }
}

/// A blocked symbolic analysis: the discovered blocks, the reuse grouping,
/// the composed whole-matrix analysis, and how many block-local symbolic
/// analyses actually ran (the coupling region's analysis is not counted).
#[derive(Debug, Clone)]
pub struct BlockedAnalysis {
    pub map: BlockMap,
    pub plan: ReusePlan,
    pub analysis: Analysis,
    pub block_analyses: usize,
}

/// Symbolic analysis that discovers the diagonal blocks, analyzes one
/// representative per structure group (`reuse = true`) or every block
/// (`reuse = false`, same results the slow way), and composes the local
/// results with a coupling-region analysis into one whole-matrix [`Analysis`].
///
/// Composition layout: each block keeps its column range and is ordered
/// locally; the coupling columns stay last, ordered on their own pattern
/// augmented with one clique per block-local elimination root (the rows a
/// block's final front hands to the coupling region, which is exactly the
/// Schur contribution its elimination produces). Frontal merging inside a
/// block considers the local pattern only; coupling attachments widen the
/// composed structures afterwards.
pub fn analyze_blocked<T: Scalar>(
    a: &CscMatrix<T>,
    border_hint: usize,
    opts: &AnalyzeOptions,
    reuse: bool,
) -> Result<BlockedAnalysis> {
    let map = find_diagonal_blocks(a, border_hint)?;
    let plan = reuse_plan(a, &map);
    let n = a.n();
    let region = map.coupling.start;
    let k = n - region;
    let sym = a.symmetrize_pattern();

    // Block-local analyses, one per group or one per block.
    let mut local: Vec<Option<Analysis>> = vec![None; map.blocks.len()];
    let mut block_analyses = 0;
    if reuse {
        for group in &plan.groups {
            let rep = group[0];
            let an = analyze(&local_matrix(a, &map.blocks[rep]), opts)?;
            block_analyses += 1;
            for &b in group {
                local[b] = Some(an.clone());
            }
        }
    } else {
        for (b, r) in map.blocks.iter().enumerate() {
            local[b] = Some(analyze(&local_matrix(a, r), opts)?);
            block_analyses += 1;
        }
    }

    // Coupling attachments per block column (block-local new position ->
    // coupling-local old indices), accumulated up each local elimination
    // tree; a local root's accumulated set is its front's Schur boundary.
    let mut attach: Vec<Vec<BTreeSet<usize>>> = Vec::with_capacity(map.blocks.len());
    for (b, r) in map.blocks.iter().enumerate() {
        let an = local[b].as_ref().unwrap();
        let mut acc: Vec<BTreeSet<usize>> = (0..r.len())
            .map(|p| {
                let old = r.start + an.ordering.map_inv(p);
                let (rows, _) = sym.col(old);
                rows.iter()
                    .filter(|&&i| i >= region)
                    .map(|&i| i - region)
                    .collect()
            })
            .collect();
        for p in 0..r.len() {
            if let Some(q) = an.etree.parent(p) {
                let s = acc[p].clone();
                acc[q].extend(s);
            }
        }
        attach.push(acc);
    }

    // Coupling-region analysis on its own pattern plus the block cliques.
    let coupling_an = if k > 0 {
        let mut pat: BTreeSet<(usize, usize)> = BTreeSet::new();
        for j in region..n {
            pat.insert((j - region, j - region));
            let (rows, _) = sym.col(j);
            for &i in rows.iter().filter(|&&i| i >= region) {
                pat.insert((i - region, j - region));
            }
        }
        for (b, r) in map.blocks.iter().enumerate() {
            let an = local[b].as_ref().unwrap();
            for p in 0..r.len() {
                if an.etree.parent(p).is_none() {
                    for &q1 in &attach[b][p] {
                        for &q2 in &attach[b][p] {
                            pat.insert((q1, q2));
                        }
                    }
                }
            }
        }
        let triplets: Vec<(usize, usize, T)> = pat
            .into_iter()
            .map(|(i, j)| (i, j, T::one()))
            .collect();
        Some(analyze(&CscMatrix::from_triplets(k, &triplets)?, opts)?)
    } else {
        None
    };
    let cperm = coupling_an
        .as_ref()
        .map(|an| an.ordering.clone())
        .unwrap_or_else(|| Permutation::identity(0));

    // Compose the global permutation, tree, fill and frontal partition.
    let mut order = vec![0usize; n];
    let mut parent = vec![NONE; n];
    let mut fill_cols: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut frontals: Vec<(usize, usize)> = Vec::new();
    for (b, r) in map.blocks.iter().enumerate() {
        let an = local[b].as_ref().unwrap();
        let base = r.start;
        for old in r.clone() {
            order[old] = base + an.ordering.map(old - base);
        }
        for p in 0..r.len() {
            parent[base + p] = match an.etree.parent(p) {
                Some(q) => base + q,
                // The attachment set is ordered by the old coupling indices;
                // the parent is the earliest attachment in elimination order.
                None => attach[b][p]
                    .iter()
                    .map(|&q| region + cperm.map(q))
                    .min()
                    .unwrap_or(NONE),
            };
            let mut s: Vec<usize> = an
                .fill
                .col_struct(p)
                .iter()
                .map(|&i| base + i)
                .chain(attach[b][p].iter().map(|&q| region + cperm.map(q)))
                .collect();
            s.sort_unstable();
            fill_cols.push(s);
        }
        for fi in 0..an.frontals.len() {
            let c = an.frontals.cols(fi);
            frontals.push((base + c.start, base + c.end));
        }
    }
    if let Some(can) = &coupling_an {
        for old in region..n {
            order[old] = region + can.ordering.map(old - region);
        }
        for p in 0..k {
            parent[region + p] = match can.etree.parent(p) {
                Some(q) => region + q,
                None => NONE,
            };
            fill_cols.push(can.fill.col_struct(p).iter().map(|&i| region + i).collect());
        }
        for fi in 0..can.frontals.len() {
            let c = can.frontals.cols(fi);
            frontals.push((region + c.start, region + c.end));
        }
    }

    let analysis = Analysis {
        ordering: Permutation::new(order)?,
        etree: EliminationTree::from_parents(parent),
        fill: FillPattern::from_cols(fill_cols),
        frontals: FrontalPartition::from_ranges(frontals),
        relax: opts.relax,
    };
    Ok(BlockedAnalysis {
        map,
        plan,
        analysis,
        block_analyses,
    })
}

/// The block's square submatrix (entries with row and column inside the
/// range), used as input for its local analysis.
fn local_matrix<T: Scalar>(a: &CscMatrix<T>, block: &Range<usize>) -> CscMatrix<T> {
    let mut triplets = Vec::new();
    for j in block.clone() {
        let (rows, vals) = a.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            if block.contains(&i) {
                triplets.push((i - block.start, j - block.start, v));
            }
        }
    }
    CscMatrix::from_triplets(block.len(), &triplets).expect("in-range by construction")
}
