//! Shared oracles for the integration suites.
//!
//! Everything here is deliberately brute force and independent of the library
//! implementation: dense boolean elimination for fill and elimination trees,
//! dense LU with partial pivoting for numerics, exhaustive ordering search for
//! fill minimality, and value iteration for MDP fixed points. The library is
//! tested against these, never against itself.

#![allow(dead_code)]

use ess::sparse::CscMatrix;
use ess::Permutation;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Root marker in oracle elimination trees.
pub const NO_PARENT: usize = usize::MAX;

/// Dense symbolic elimination on a symmetric boolean pattern.
///
/// Runs boolean Gaussian elimination without cancellation: eliminating column
/// k marks `(i, j)` for every `i, j > k` with `(i, k)` and `(k, j)` present.
/// Returns the filled pattern (lower triangle describes L, diagonal included).
pub fn dense_symbolic_fill(pattern: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = pattern.len();
    let mut m: Vec<Vec<bool>> = pattern.to_vec();
    for (r, row) in m.iter().enumerate() {
        assert_eq!(row.len(), n);
        assert!(row[r], "oracle needs a full diagonal");
    }
    for (i, row) in pattern.iter().enumerate() {
        for (j, &set) in row.iter().enumerate() {
            assert_eq!(set, pattern[j][i], "oracle needs a symmetric pattern");
        }
    }
    for k in 0..n {
        for i in (k + 1)..n {
            if !m[i][k] {
                continue;
            }
            for j in (k + 1)..n {
                if m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    m
}

/// Column structures of L from the filled pattern: sorted row indices at or
/// below the diagonal, per column.
pub fn dense_l_structs(filled: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = filled.len();
    (0..n)
        .map(|j| (j..n).filter(|&i| filled[i][j]).collect())
        .collect()
}

/// Elimination tree straight off the definition: parent(j) is the smallest
/// i > j with L[i, j] nonzero in the filled pattern.
pub fn dense_etree(pattern: &[Vec<bool>]) -> Vec<usize> {
    let filled = dense_symbolic_fill(pattern);
    let n = filled.len();
    (0..n)
        .map(|j| {
            ((j + 1)..n)
                .find(|&i| filled[i][j])
                .unwrap_or(NO_PARENT)
        })
        .collect()
}

/// Number of fill-in positions (lower triangle, diagonal excluded) that
/// elimination adds beyond the original pattern.
pub fn dense_fill_count(pattern: &[Vec<bool>]) -> usize {
    let filled = dense_symbolic_fill(pattern);
    let n = pattern.len();
    let mut count = 0;
    for i in 0..n {
        for j in 0..i {
            if filled[i][j] && !pattern[i][j] {
                count += 1;
            }
        }
    }
    count
}

/// Applies a symmetric ordering to a boolean pattern: entry (i, j) moves to
/// (order[i], order[j]).
pub fn permute_pattern(pattern: &[Vec<bool>], order: &[usize]) -> Vec<Vec<bool>> {
    let n = pattern.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if pattern[i][j] {
                out[order[i]][order[j]] = true;
            }
        }
    }
    out
}

/// Minimum fill over every one of the n! symmetric orderings. Factorial: keep
/// n at 6 or below.
pub fn exhaustive_min_fill(pattern: &[Vec<bool>]) -> usize {
    let n = pattern.len();
    assert!(n <= 6, "exhaustive search is factorial");
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = usize::MAX;
    permute_all(&mut order, 0, &mut |ord| {
        best = best.min(dense_fill_count(&permute_pattern(pattern, ord)));
    });
    best
}

fn permute_all(order: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == order.len() {
        f(order);
        return;
    }
    for i in k..order.len() {
        order.swap(k, i);
        permute_all(order, k + 1, f);
        order.swap(k, i);
    }
}

/// Dense LU with partial pivoting. Returns (lu, piv) in LAPACK-style packed
/// form: L below the unit diagonal, U on and above, piv[k] = pivot row chosen
/// at step k. Panics on exact singularity (oracle inputs are well scaled).
pub fn dense_lu(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut piv = Vec::with_capacity(n);
    for k in 0..n {
        let (mut best_i, mut best) = (k, m[k][k].abs());
        for i in (k + 1)..n {
            if m[i][k].abs() > best {
                best = m[i][k].abs();
                best_i = i;
            }
        }
        assert!(best > 0.0, "oracle matrix is singular at column {k}");
        m.swap(k, best_i);
        piv.push(best_i);
        for i in (k + 1)..n {
            let l = m[i][k] / m[k][k];
            m[i][k] = l;
            for j in (k + 1)..n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    (m, piv)
}

/// Solves `A x = b` through the dense LU oracle.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let (lu, piv) = dense_lu(a);
    let mut x = b.to_vec();
    for k in 0..n {
        x.swap(k, piv[k]);
        for i in (k + 1)..n {
            let delta = lu[i][k] * x[k];
            x[i] -= delta;
        }
    }
    for k in (0..n).rev() {
        for j in (k + 1)..n {
            let delta = lu[k][j] * x[j];
            x[k] -= delta;
        }
        x[k] /= lu[k][k];
    }
    x
}

/// Explicit finite MDP for value-iteration oracles. `transition[a][s]` is the
/// distribution over successor states when taking action a in state s;
/// `reward[a][s]` the immediate reward; `terminal[s]` stops an episode.
pub struct ExplicitMdp {
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub terminal: Vec<bool>,
    pub gamma: f64,
}

impl ExplicitMdp {
    pub fn n_states(&self) -> usize {
        self.terminal.len()
    }

    pub fn n_actions(&self) -> usize {
        self.transition.len()
    }

    /// Every transition row must be a probability distribution.
    pub fn assert_row_stochastic(&self) {
        for rows in &self.transition {
            for (s, row) in rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                assert!(
                    (sum - 1.0).abs() < 1e-12,
                    "transition row for state {s} sums to {sum}"
                );
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
    }

    /// Q* by value iteration to the fixed point (max-form Bellman operator).
    pub fn value_iteration(&self, tol: f64) -> Vec<Vec<f64>> {
        let ns = self.n_states();
        let na = self.n_actions();
        let mut q = vec![vec![0.0; na]; ns];
        loop {
            let mut delta: f64 = 0.0;
            let mut next = q.clone();
            for s in 0..ns {
                if self.terminal[s] {
                    continue;
                }
                for a in 0..na {
                    let mut v = self.reward[a][s];
                    for s2 in 0..ns {
                        let p = self.transition[a][s][s2];
                        if p > 0.0 && !self.terminal[s2] {
                            let best = q[s2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                            v += self.gamma * p * best;
                        }
                    }
                    delta = delta.max((v - q[s][a]).abs());
                    next[s][a] = v;
                }
            }
            q = next;
            if delta < tol {
                return q;
            }
        }
    }
}

/// Random symmetric pattern with a full diagonal: every off-diagonal pair is
/// present with probability `density`, mirrored.
pub fn random_symmetric_pattern(n: usize, density: f64, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![vec![false; n]; n];
    for i in 0..n {
        p[i][i] = true;
        for j in 0..i {
            if rng.gen_bool(density) {
                p[i][j] = true;
                p[j][i] = true;
            }
        }
    }
    p
}

/// Sparse matrix over a boolean pattern with symmetric-positive-definite-ish
/// values: off-diagonals uniform in [-1, 1], diagonal = 2 x row magnitude sum.
pub fn matrix_from_pattern(pattern: &[Vec<bool>], seed: u64) -> CscMatrix<f64> {
    let n = pattern.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && pattern[i][j] {
                vals[i][j] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let mut triplets = Vec::new();
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| vals[i][j].abs()).sum();
        for j in 0..n {
            if i == j {
                triplets.push((i, i, 2.0 * row_sum.max(0.5)));
            } else if pattern[i][j] {
                triplets.push((i, j, vals[i][j]));
            }
        }
    }
    CscMatrix::from_triplets(n, &triplets).unwrap()
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

// ---------------------------------------------------------------------------
// The 11-column worked example.
//
// The pattern below was constructed so that, after the row/column transposition
// that swaps labels 8 and 9 (one-based), natural-order elimination produces:
//
//   frontals (one-based labels)  {1} {2,3} {4} {5} {6} {7,9} {8} {10,11}
//   frontal tree                 {10,11} over {7,9} and {8};
//                                {8} over {2,3} and {5};
//                                {7,9} over {6}; {6} over {1} and {4}
//
// All expectations below were derived by hand from the elimination recurrence
// and are re-derived in-test by the dense oracle; nothing here comes from the
// library under test.
// ---------------------------------------------------------------------------

/// Lower-triangle pattern (diagonal included) in ELIMINATION POSITION space,
/// 0-based: position p holds paper label `FIXTURE11_LABELS[p]`.
pub const FIXTURE11_LOWER: [&[usize]; 11] = [
    &[0, 5],
    &[1, 2, 8],
    &[2],
    &[3, 5],
    &[4, 8],
    &[5, 6],
    &[6, 7, 9],
    &[7],
    &[8, 9],
    &[9, 10],
    &[10],
];

/// One-based paper label at each elimination position.
pub const FIXTURE11_LABELS: [usize; 11] = [1, 2, 3, 4, 5, 6, 7, 9, 8, 10, 11];

/// Expected elimination tree over positions (parent of each position).
pub const FIXTURE11_PARENT: [usize; 11] = [5, 2, 8, 5, 8, 6, 7, 9, 9, 10, NO_PARENT];

/// Expected L column structures over positions (diagonal included).
pub const FIXTURE11_STRUCTS: [&[usize]; 11] = [
    &[0, 5],
    &[1, 2, 8],
    &[2, 8],
    &[3, 5],
    &[4, 8],
    &[5, 6],
    &[6, 7, 9],
    &[7, 9],
    &[8, 9],
    &[9, 10],
    &[10],
];

/// Expected frontal partition over positions at relax = 0.
pub const FIXTURE11_FRONTALS: [&[usize]; 8] = [
    &[0],
    &[1, 2],
    &[3],
    &[4],
    &[5],
    &[6, 7],
    &[8],
    &[9, 10],
];

/// Expected frontal-level parent (index into FIXTURE11_FRONTALS).
pub const FIXTURE11_FRONTAL_PARENT: [usize; 8] = [4, 6, 4, 6, 5, 7, 7, NO_PARENT];

/// Expected per-frontal workloads (sum of squared column structure sizes).
pub const FIXTURE11_WORKLOADS: [u64; 8] = [4, 13, 4, 4, 4, 13, 4, 5];

/// Builds the fixture in PAPER LABEL space (0-based labels: paper label - 1),
/// together with the symmetric permutation that maps label space into
/// elimination position space. Values are diagonally dominant and seeded.
pub fn fixture11_label_matrix(seed: u64) -> (CscMatrix<f64>, Permutation) {
    let n = 11;
    // label_of_position, 0-based
    let lab: Vec<usize> = FIXTURE11_LABELS.iter().map(|&l| l - 1).collect();
    // position_of_label = inverse
    let mut pos = vec![0usize; n];
    for (p, &l) in lab.iter().enumerate() {
        pos[l] = p;
    }
    let mut pattern = vec![vec![false; n]; n];
    for (j, rows) in FIXTURE11_LOWER.iter().enumerate() {
        for &i in rows.iter() {
            // translate position-space entry to label space
            pattern[lab[i]][lab[j]] = true;
            pattern[lab[j]][lab[i]] = true;
        }
    }
    let a = matrix_from_pattern(&pattern, seed);
    let perm = Permutation::new(pos).unwrap();
    (a, perm)
}

/// The same fixture already in elimination position space.
pub fn fixture11_position_matrix(seed: u64) -> CscMatrix<f64> {
    let n = 11;
    let mut pattern = vec![vec![false; n]; n];
    for (j, rows) in FIXTURE11_LOWER.iter().enumerate() {
        for &i in rows.iter() {
            pattern[i][j] = true;
            pattern[j][i] = true;
        }
    }
    matrix_from_pattern(&pattern, seed)
}

/// Asserts the structural invariants any valid symbolic analysis must hold,
/// whatever pipeline produced it: sorted diagonal-first structures, the tree
/// matching each column's first off-diagonal row, child structures flowing
/// into parents, the permuted symmetric pattern covered by the fill, and
/// frontals tiling the columns as parent chains.
pub fn assert_analysis_consistent(a: &CscMatrix<f64>, an: &ess::Analysis) {
    let n = a.n();
    for j in 0..n {
        let s = an.fill.col_struct(j);
        assert_eq!(s.first(), Some(&j), "struct({j}) must start at its diagonal");
        assert!(s.windows(2).all(|w| w[0] < w[1]), "struct({j}) not sorted");
        match an.etree.parent(j) {
            None => assert_eq!(s.len(), 1, "root {j} has off-diagonal structure"),
            Some(p) => {
                assert_eq!(p, s[1], "parent of {j} is not its first sub-diagonal row");
                let ps = an.fill.col_struct(p);
                for &i in &s[1..] {
                    assert!(
                        ps.binary_search(&i).is_ok(),
                        "struct({p}) misses row {i} inherited from child {j}"
                    );
                }
            }
        }
    }
    let pm = ess::permute(&a.symmetrize_pattern(), &an.ordering, &an.ordering);
    for j in 0..n {
        let (rows, _) = pm.col(j);
        let s = an.fill.col_struct(j);
        for &i in rows.iter().filter(|&&i| i >= j) {
            assert!(
                s.binary_search(&i).is_ok(),
                "pattern entry ({i}, {j}) not covered by the fill"
            );
        }
    }
    let mut expect = 0;
    for fi in 0..an.frontals.len() {
        let r = an.frontals.cols(fi);
        assert_eq!(r.start, expect, "frontal {fi} leaves a column gap");
        expect = r.end;
        for c in r.clone() {
            assert_eq!(an.frontals.frontal_of(c), fi);
            if c + 1 < r.end {
                assert_eq!(
                    an.etree.parent(c),
                    Some(c + 1),
                    "columns {c} and {} share a front without a parent link",
                    c + 1
                );
            }
        }
    }
    assert_eq!(expect, n, "frontals do not cover all columns");
}
