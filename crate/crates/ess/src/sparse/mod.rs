//! Compressed sparse column storage and the small set of whole-matrix
//! operations everything else builds on: permutation, structural
//! symmetrization, matrix-vector products and the scaled residual norm.
//!
//! Matrices are square throughout; the solver has no use for rectangular
//! storage. Row indices are strictly increasing within each column, which the
//! constructors enforce and every algorithm relies on.

pub mod io;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    /// Builds a matrix from raw CSC arrays, validating every structural
    /// invariant: monotone column pointers, in-range strictly increasing row
    /// indices, and matching array lengths.
    pub fn new(n: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<T>) -> Result<Self> {
        if col_ptr.len() != n + 1 {
            return Err(Error::InvalidMatrix(format!(
                "col_ptr length {} != n+1 = {}",
                col_ptr.len(),
                n + 1
            )));
        }
        if col_ptr[0] != 0 || *col_ptr.last().unwrap() != row_idx.len() {
            return Err(Error::InvalidMatrix(
                "col_ptr must start at 0 and end at nnz".into(),
            ));
        }
        if row_idx.len() != values.len() {
            return Err(Error::InvalidMatrix(format!(
                "row_idx length {} != values length {}",
                row_idx.len(),
                values.len()
            )));
        }
        for j in 0..n {
            if col_ptr[j] > col_ptr[j + 1] || col_ptr[j + 1] > row_idx.len() {
                return Err(Error::InvalidMatrix(format!(
                    "col_ptr not monotone within bounds at column {j}"
                )));
            }
        }
        for j in 0..n {
            let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            for (k, &i) in rows.iter().enumerate() {
                if i >= n {
                    return Err(Error::InvalidMatrix(format!(
                        "row index {i} out of range in column {j}"
                    )));
                }
                if k > 0 && rows[k - 1] >= i {
                    return Err(Error::InvalidMatrix(format!(
                        "row indices not strictly increasing in column {j}"
                    )));
                }
            }
        }
        Ok(CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicate positions
    /// are summed; entries may arrive in any order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidMatrix(format!(
                    "triplet ({i}, {j}) out of range for n = {n}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        sorted.sort_by_key(|a| (a.1, a.0));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            let mut k2 = k + 1;
            while k2 < sorted.len() && sorted[k2].0 == i && sorted[k2].1 == j {
                v += sorted[k2].2;
                k2 += 1;
            }
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
            k = k2;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        CscMatrix::new(n, col_ptr, row_idx, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[T]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.values[r])
    }

    /// Stored value at (i, j), or zero.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut col_ptr = vec![0usize; n + 1];
        for &i in &self.row_idx {
            col_ptr[i + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for j in 0..n {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let slot = next[i];
                row_idx[slot] = j;
                values[slot] = v;
                next[i] += 1;
            }
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Pattern of `A + Aᵀ` carrying A's values; positions present only in the
    /// transpose become explicit zeros. Symbolic analysis runs on this, and
    /// factoring it instead of `A` changes nothing numerically.
    pub fn symmetrize_pattern(&self) -> Self {
        let t = self.transpose();
        let n = self.n;
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            let (ra, va) = self.col(j);
            let (rt, _) = t.col(j);
            let mut ka = 0;
            let mut kt = 0;
            while ka < ra.len() || kt < rt.len() {
                let ia = ra.get(ka).copied().unwrap_or(usize::MAX);
                let it = rt.get(kt).copied().unwrap_or(usize::MAX);
                if ia < it {
                    row_idx.push(ia);
                    values.push(va[ka]);
                    ka += 1;
                } else if it < ia {
                    row_idx.push(it);
                    values.push(T::zero());
                    kt += 1;
                } else {
                    row_idx.push(ia);
                    values.push(va[ka]);
                    ka += 1;
                    kt += 1;
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        CscMatrix {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn is_pattern_symmetric(&self) -> bool {
        let t = self.transpose();
        self.col_ptr == t.col_ptr && self.row_idx == t.row_idx
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "vector length must match matrix dimension");
        let mut y = vec![T::zero(); self.n];
        for j in 0..self.n {
            let (rows, vals) = self.col(j);
            let xj = x[j];
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// Infinity norm: maximum absolute row sum.
    pub fn inf_norm(&self) -> T {
        let mut row_sum = vec![T::zero(); self.n];
        for (&i, &v) in self.row_idx.iter().zip(&self.values) {
            row_sum[i] += v.abs();
        }
        row_sum.into_iter().fold(T::zero(), T::max)
    }

    /// Compares sparsity patterns; returns the first column where they differ.
    pub fn pattern_differs_at(&self, other: &Self) -> Option<usize> {
        if self.n != other.n {
            return Some(0);
        }
        for j in 0..self.n {
            let (ra, _) = self.col(j);
            let (rb, _) = other.col(j);
            if ra != rb {
                return Some(j);
            }
        }
        None
    }

    /// Dense copy, row-major. Intended for small matrices in tests and
    /// debugging; allocates n² values.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for j in 0..self.n {
            let (rows, vals) = self.col(j);
            for (&i, &v) in rows.iter().zip(vals) {
                d[i][j] += v;
            }
        }
        d
    }
}

/// Bijective index mapping with its inverse kept alongside.
///
/// `perm[old] = new`: applying the permutation moves index `old` to position
/// `new`. `inv` is the inverse map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    /// Validates that `perm` is a bijection on 0..len.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inv = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n {
                return Err(Error::InvalidMatrix(format!(
                    "permutation image {new} out of range for length {n}"
                )));
            }
            if inv[new] != usize::MAX {
                return Err(Error::InvalidMatrix(format!(
                    "permutation not a bijection: image {new} repeated"
                )));
            }
            inv[new] = old;
        }
        Ok(Permutation { perm, inv })
    }

    pub fn identity(n: usize) -> Self {
        let perm: Vec<usize> = (0..n).collect();
        Permutation {
            inv: perm.clone(),
            perm,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// new position of `old`.
    pub fn map(&self, old: usize) -> usize {
        self.perm[old]
    }

    /// old position that landed at `new`.
    pub fn map_inv(&self, new: usize) -> usize {
        self.inv[new]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            perm: self.inv.clone(),
            inv: self.perm.clone(),
        }
    }

    /// Scatters `v` so that output[perm[i]] = v[i].
    pub fn apply<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.perm.len());
        let mut out = vec![T::default(); v.len()];
        for (old, &new) in self.perm.iter().enumerate() {
            out[new] = v[old];
        }
        out
    }

    /// Inverse of [`apply`](Self::apply): output[i] = v[perm[i]].
    pub fn apply_inv<T: Copy + Default>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.perm.len());
        let mut out = vec![T::default(); v.len()];
        for (old, &new) in self.perm.iter().enumerate() {
            out[old] = v[new];
        }
        out
    }
}

/// Permuted copy `B` of `A` with `B[p[i], q[j]] = A[i, j]`.
pub fn permute<T: Scalar>(a: &CscMatrix<T>, p: &Permutation, q: &Permutation) -> CscMatrix<T> {
    assert_eq!(p.len(), a.n(), "row permutation length must equal n");
    assert_eq!(q.len(), a.n(), "column permutation length must equal n");
    let n = a.n();
    let mut col_ptr = vec![0usize; n + 1];
    for j in 0..n {
        let deg = a.col_ptr[j + 1] - a.col_ptr[j];
        col_ptr[q.map(j) + 1] += deg;
    }
    for j in 0..n {
        col_ptr[j + 1] += col_ptr[j];
    }
    let mut row_idx = vec![0usize; a.nnz()];
    let mut values = vec![T::zero(); a.nnz()];
    let mut scratch: Vec<(usize, T)> = Vec::new();
    for j in 0..n {
        let (rows, vals) = a.col(j);
        scratch.clear();
        scratch.extend(rows.iter().zip(vals).map(|(&i, &v)| (p.map(i), v)));
        scratch.sort_by_key(|&(i, _)| i);
        let start = col_ptr[q.map(j)];
        for (k, &(i, v)) in scratch.iter().enumerate() {
            row_idx[start + k] = i;
            values[start + k] = v;
        }
    }
    CscMatrix {
        n,
        col_ptr,
        row_idx,
        values,
    }
}

/// Scaled residual `‖Ax − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)`, the usual backward-error
/// style acceptance number. Returns zero when the residual vector is exactly
/// zero, so a perfectly solved all-zero system does not produce 0/0.
pub fn residual_norm<T: Scalar>(a: &CscMatrix<T>, x: &[T], b: &[T]) -> T {
    assert_eq!(x.len(), a.n());
    assert_eq!(b.len(), a.n());
    let ax = a.mul_vec(x);
    let mut num = T::zero();
    for i in 0..a.n() {
        num = num.max((ax[i] - b[i]).abs());
    }
    if num == T::zero() {
        return T::zero();
    }
    let xmax = x.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let bmax = b.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    num / (a.inf_norm() * xmax + bmax)
}
