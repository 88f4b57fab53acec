//! Triangular solves against a frontal LU factorization.
//!
//! Both passes walk fronts in frontal order (forward) or reverse frontal
//! order (backward); inside a front, columns go in elimination order. That
//! traversal meets every elimination step in ascending step order, so it is
//! ordinary forward/backward substitution expressed in permuted ids.
//!
//! [`par_solve`] runs the same arithmetic on level waves of the frontal
//! tree. Updates that cross fronts are buffered per target front and
//! replayed in ascending source-front order just before the target runs,
//! which is exactly the order the serial pass applies them; every float
//! therefore sees the identical operation sequence and the parallel result
//! is bit-identical to [`solve`] at any core count.

use std::collections::HashMap;
use std::thread;

use super::LUFactors;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::symbolic::NONE;

/// Solves `A x = b` using the factorization of A. `b` is in original row
/// indices and the result in original column indices.
pub fn solve<T: Scalar>(lu: &LUFactors<T>, b: &[T]) -> Result<Vec<T>> {
    if b.len() != lu.n {
        return Err(Error::DimensionMismatch {
            expected: lu.n,
            found: b.len(),
        });
    }
    let n = lu.n;
    // Right-hand side by permuted row id.
    let mut w: Vec<T> = (0..n).map(|r| b[lu.ordering.map_inv(r)]).collect();
    // Forward pass: y by permuted column id.
    let mut y = vec![T::zero(); n];
    for ff in &lu.fronts {
        for t in 0..ff.cols.len() {
            let yv = w[ff.pivot_rows[t]];
            y[ff.cols[t]] = yv;
            for (&r, &l) in ff.l_struct[t].iter().zip(&ff.l_values[t]) {
                w[r] -= l * yv;
            }
        }
    }
    // Backward pass: x by permuted column id.
    let mut x = vec![T::zero(); n];
    for ff in lu.fronts.iter().rev() {
        for t in (0..ff.cols.len()).rev() {
            let mut acc = y[ff.cols[t]];
            for (&d, &u) in ff.u_struct[t].iter().zip(&ff.u_values[t]) {
                acc -= u * x[d];
            }
            x[ff.cols[t]] = acc / ff.pivots[t];
        }
    }
    Ok((0..n).map(|j| x[lu.ordering.map(j)]).collect())
}

/// What one front's forward pass sends onward: its solved y values and, per
/// ancestor front, the update sequence for that front's pivot rows, in
/// emission order.
struct ForwardOut<T> {
    front: usize,
    y: Vec<(usize, T)>,
    external: Vec<(usize, Vec<(usize, T)>)>,
}

/// Parallel triangular solve over level waves of the frontal tree. The
/// result is bit-identical to [`solve`] for every `cores >= 1`.
pub fn par_solve<T: Scalar>(lu: &LUFactors<T>, b: &[T], cores: usize) -> Result<Vec<T>> {
    if cores == 0 {
        return Err(Error::InvalidSpec(
            "par_solve needs at least one core".into(),
        ));
    }
    if b.len() != lu.n {
        return Err(Error::DimensionMismatch {
            expected: lu.n,
            found: b.len(),
        });
    }
    let nf = lu.fronts.len();
    if cores == 1 || nf <= 1 {
        return solve(lu, b);
    }
    let n = lu.n;
    let parents = lu.frontal_parent();

    // Level waves: children strictly before parents; ids descend toward
    // children, so one ascending sweep settles every level.
    let mut level = vec![0usize; nf];
    for f in 0..nf {
        let p = parents[f];
        if p != NONE {
            level[p] = level[p].max(level[f] + 1);
        }
    }
    let n_waves = level.iter().max().map_or(0, |&l| l + 1);
    let mut waves: Vec<Vec<usize>> = vec![Vec::new(); n_waves];
    for f in 0..nf {
        waves[level[f]].push(f);
    }

    // Which front eliminates each permuted row / column.
    let mut row_owner = vec![NONE; n];
    let mut col_owner = vec![NONE; n];
    for (fi, ff) in lu.fronts.iter().enumerate() {
        for &pr in &ff.pivot_rows {
            row_owner[pr] = fi;
        }
        for &c in &ff.cols {
            col_owner[c] = fi;
        }
    }

    let w0: Vec<T> = (0..n).map(|r| b[lu.ordering.map_inv(r)]).collect();
    let mut y = vec![T::zero(); n];
    // Buffered cross-front updates: per target front, (source front, ops).
    let mut pending: Vec<Vec<(usize, Vec<(usize, T)>)>> = vec![Vec::new(); nf];

    let forward_front = |f: usize, mut inputs: Vec<(usize, Vec<(usize, T)>)>| -> ForwardOut<T> {
        let ff = &lu.fronts[f];
        let mut local: HashMap<usize, T> = ff.pivot_rows.iter().map(|&r| (r, w0[r])).collect();
        inputs.sort_unstable_by_key(|&(src, _)| src);
        for (_, ops) in inputs {
            for (r, u) in ops {
                *local.get_mut(&r).expect("update targets a pivot row") -= u;
            }
        }
        let mut y_out = Vec::with_capacity(ff.cols.len());
        let mut external: HashMap<usize, Vec<(usize, T)>> = HashMap::new();
        for t in 0..ff.cols.len() {
            let yv = local[&ff.pivot_rows[t]];
            y_out.push((ff.cols[t], yv));
            for (&r, &l) in ff.l_struct[t].iter().zip(&ff.l_values[t]) {
                let u = l * yv;
                if row_owner[r] == f {
                    *local.get_mut(&r).expect("in-front row") -= u;
                } else {
                    external.entry(row_owner[r]).or_default().push((r, u));
                }
            }
        }
        let mut external: Vec<_> = external.into_iter().collect();
        external.sort_unstable_by_key(|&(tgt, _)| tgt);
        ForwardOut {
            front: f,
            y: y_out,
            external,
        }
    };

    for wave in &waves {
        let chunk = wave.len().div_ceil(cores).max(1);
        let mut jobs: Vec<(Vec<usize>, Vec<Vec<(usize, Vec<(usize, T)>)>>)> = wave
            .chunks(chunk)
            .map(|fs| {
                let inputs = fs.iter().map(|&f| std::mem::take(&mut pending[f])).collect();
                (fs.to_vec(), inputs)
            })
            .collect();
        let outs: Vec<ForwardOut<T>> = thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .drain(..)
                .map(|(fs, inputs)| {
                    let fwd = &forward_front;
                    scope.spawn(move || {
                        fs.into_iter()
                            .zip(inputs)
                            .map(|(f, input)| fwd(f, input))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("forward solve worker panicked"))
                .collect()
        });
        for out in outs {
            for (c, v) in out.y {
                y[c] = v;
            }
            for (tgt, ops) in out.external {
                pending[tgt].push((out.front, ops));
            }
        }
    }

    // Backward pass: parents strictly before children, so walk the waves in
    // reverse. Workers read ancestor solution values from the snapshot of x
    // written by earlier waves and their own front's values locally.
    let mut x = vec![T::zero(); n];
    for wave in waves.iter().rev() {
        let chunk = wave.len().div_ceil(cores).max(1);
        let written: Vec<(usize, T)> = {
            let x_read = &x;
            let y_read = &y;
            let col_owner = &col_owner;
            let backward_front = move |f: usize| -> Vec<(usize, T)> {
                let ff = &lu.fronts[f];
                let mut localx: HashMap<usize, T> = HashMap::new();
                let mut out = Vec::with_capacity(ff.cols.len());
                for t in (0..ff.cols.len()).rev() {
                    let mut acc = y_read[ff.cols[t]];
                    for (&d, &u) in ff.u_struct[t].iter().zip(&ff.u_values[t]) {
                        let xv = if col_owner[d] == f {
                            localx[&d]
                        } else {
                            x_read[d]
                        };
                        acc -= u * xv;
                    }
                    let xv = acc / ff.pivots[t];
                    localx.insert(ff.cols[t], xv);
                    out.push((ff.cols[t], xv));
                }
                out
            };
            thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .chunks(chunk)
                    .map(|fs| {
                        let bwd = &backward_front;
                        scope.spawn(move || {
                            fs.iter().flat_map(|&f| bwd(f)).collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("backward solve worker panicked"))
                    .collect()
            })
        };
        for (c, v) in written {
            x[c] = v;
        }
    }

    Ok((0..n).map(|j| x[lu.ordering.map(j)]).collect())
}
