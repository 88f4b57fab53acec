//! Parallel sparse direct LU solver for power-system-shaped matrices.
//!
//! The pipeline: a fill-reducing ordering and symbolic factorization turn the
//! matrix into a tree of dense frontal eliminations; the tree is split into
//! parallel tasks by cutting edges; a tabular Q-learning policy trained
//! offline decides where to cut while the factorization runs. Repeated
//! diagonal blocks with identical sparsity share one symbolic analysis.
//!
//! The numeric core is generic over the scalar type; `f64` aliases for the
//! main types live at the crate root and are what the CLI uses.

pub mod blockdetect;
pub mod error;
pub mod matgen;
pub mod numeric;
pub mod qlearn;
pub mod scalar;
pub mod schedmdp;
pub mod sparse;
pub mod symbolic;

pub use blockdetect::{analyze_blocked, find_diagonal_blocks, BlockMap, BlockedAnalysis};
pub use error::{Error, Result};
pub use numeric::{
    par_solve, parallel_factor, serial_factor, solve, FactorOptions, LUFactors, ScheduleTrace,
    Solver, TraceRow,
};
pub use qlearn::{infer_policy, load_qtable, save_qtable, LearnedPolicy, QTable};
pub use scalar::Scalar;
pub use sparse::{permute, residual_norm, Permutation};
pub use symbolic::{analyze, Analysis, AnalyzeOptions};

/// Double-precision matrix, the default precision throughout the CLI.
pub type CscMatrix64 = sparse::CscMatrix<f64>;
/// Single-precision matrix.
pub type CscMatrix32 = sparse::CscMatrix<f32>;
/// Double-precision factorization.
pub type LUFactors64 = numeric::LUFactors<f64>;
