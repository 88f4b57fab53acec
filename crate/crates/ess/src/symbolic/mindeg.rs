//! Minimum-degree ordering on the symmetrized pattern.
//!
//! Plain elimination-graph minimum degree: eliminate the lowest-degree vertex,
//! turn its neighborhood into a clique, repeat. A lazy binary heap keeps
//! (degree, original degree, vertex) triples; stale entries are discarded on
//! pop. Ties in current degree prefer the vertex that started with fewer
//! neighbors, which keeps hubs late even once their degree has decayed, then
//! the smallest index, making the ordering fully deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;
use crate::sparse::{CscMatrix, Permutation};

/// Fill-reducing symmetric ordering of `A + Aᵀ`; `perm[old] = new` position.
pub fn min_degree_order<T: Scalar>(a: &CscMatrix<T>) -> Permutation {
    let n = a.n();
    let sym = a.symmetrize_pattern();

    // Adjacency as sorted vectors, diagonal excluded.
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|j| {
            let (rows, _) = sym.col(j);
            rows.iter().copied().filter(|&i| i != j).collect()
        })
        .collect();

    let initial_degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize, usize)>> = (0..n)
        .map(|v| Reverse((adj[v].len(), initial_degree[v], v)))
        .collect();

    let mut order = vec![0usize; n];
    let mut scratch: Vec<usize> = Vec::new();

    for next_pos in 0..n {
        let v = loop {
            let Reverse((deg, _, v)) = heap.pop().expect("heap never empties before all placed");
            if alive[v] && adj[v].len() == deg {
                break v;
            }
        };
        alive[v] = false;
        order[v] = next_pos;

        // Neighbors of v form a clique; v disappears from their lists.
        let neighbors = std::mem::take(&mut adj[v]);
        for &u in &neighbors {
            debug_assert!(alive[u]);
            // adj[u] := (adj[u] ∪ neighbors) \ {u, v}, merged sorted.
            scratch.clear();
            let au = &adj[u];
            let (mut i, mut k) = (0, 0);
            while i < au.len() || k < neighbors.len() {
                let x = au.get(i).copied().unwrap_or(usize::MAX);
                let y = neighbors.get(k).copied().unwrap_or(usize::MAX);
                let m = x.min(y);
                if x == m {
                    i += 1;
                }
                if y == m {
                    k += 1;
                }
                if m != u && m != v {
                    scratch.push(m);
                }
            }
            adj[u].clear();
            adj[u].extend_from_slice(&scratch);
            heap.push(Reverse((adj[u].len(), initial_degree[u], u)));
        }
    }
    Permutation::new(order).expect("ordering visits every vertex once")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::permute;

    fn pattern_matrix(n: usize, lower: &[(usize, usize)]) -> CscMatrix<f64> {
        let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 4.0)).collect();
        for &(i, j) in lower {
            t.push((i, j, 1.0));
            t.push((j, i, 1.0));
        }
        CscMatrix::from_triplets(n, &t).unwrap()
    }

    /// Fill-in count of the natural-order elimination of a pattern, by dense
    /// boolean elimination. Test-local oracle.
    fn fill_count(a: &CscMatrix<f64>) -> usize {
        let n = a.n();
        let mut m = vec![vec![false; n]; n];
        for j in 0..n {
            let (rows, _) = a.col(j);
            for &i in rows {
                m[i][j] = true;
                m[j][i] = true;
            }
        }
        let orig = m.clone();
        for k in 0..n {
            for i in (k + 1)..n {
                if m[i][k] {
                    for j in (k + 1)..n {
                        if m[k][j] {
                            m[i][j] = true;
                        }
                    }
                }
            }
        }
        let mut count = 0;
        for i in 0..n {
            for j in 0..i {
                if m[i][j] && !orig[i][j] {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn arrowhead_puts_hub_last_with_zero_fill() {
        // Dense first row/column; spokes have degree 1, the hub 4. Once three
        // spokes are gone the hub's degree drops to 1 too; the original-degree
        // tie-break still holds it back until the end.
        let lower: Vec<(usize, usize)> = (1..5).map(|i| (i, 0)).collect();
        let a = pattern_matrix(5, &lower);
        let p = min_degree_order(&a);
        assert_eq!(p.map(0), 4, "hub must be ordered last");
        let permuted = permute(&a, &p, &p);
        assert_eq!(fill_count(&permuted), 0);
    }

    #[test]
    fn tridiagonal_orders_with_zero_fill() {
        let lower: Vec<(usize, usize)> = (1..10).map(|i| (i, i - 1)).collect();
        let a = pattern_matrix(10, &lower);
        let p = min_degree_order(&a);
        let permuted = permute(&a, &p, &p);
        assert_eq!(fill_count(&permuted), 0);
    }

    #[test]
    fn diagonal_matrix_keeps_natural_order() {
        // All degrees are zero; ties resolve to the smallest index, so the
        // ordering is the identity.
        let a = pattern_matrix(6, &[]);
        let p = min_degree_order(&a);
        assert_eq!(p.as_slice(), (0..6).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn ordering_is_deterministic() {
        let lower = [(1, 0), (2, 0), (3, 1), (4, 2), (5, 4), (5, 3), (4, 1)];
        let a = pattern_matrix(6, &lower);
        let p1 = min_degree_order(&a);
        let p2 = min_degree_order(&a);
        assert_eq!(p1.as_slice(), p2.as_slice());
    }

    #[test]
    fn unsymmetric_input_is_symmetrized_first() {
        // Entry (3,0) only below the diagonal; ordering must not panic and
        // must treat it as a symmetric edge.
        let t = vec![
            (0, 0, 1.0),
            (1, 1, 1.0),
            (2, 2, 1.0),
            (3, 3, 1.0),
            (3, 0, 1.0),
        ];
        let a = CscMatrix::from_triplets(4, &t).unwrap();
        let p = min_degree_order(&a);
        assert_eq!(p.len(), 4);
    }
}
