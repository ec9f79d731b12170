//! Sparse linear least squares through the normal equations.
//!
//! `A x ≈ b` is solved as `(AᵀA + εI) x = Aᵀb` with a sparse Cholesky
//! factorization under a nested-dissection ordering, followed by two rounds of
//! iterative refinement against the unshifted normal matrix. The shift is
//! `ε = 1e-9 · trace(AᵀA) / n`; refinement removes its bias whenever `AᵀA`
//! itself is nonsingular.
//!
//! A [`Factorization`] is immutable and can be reused for any number of
//! right-hand sides. [`factorize_in_background`] runs the decomposition on a
//! worker thread and hands back a [`PendingFactorization`].

mod cholesky;
mod ordering;
mod sparse;

use std::sync::{Arc, Condvar, Mutex};

use nalgebra::DMatrix;
use thiserror::Error;

use cholesky::CholeskyFactor;
pub use ordering::{fill_reducing_order, minimum_degree};
pub use sparse::{SparseMatrix, DROP_TOLERANCE};

/// Relative diagonal shift applied before decomposition.
pub const REGULARIZATION: f64 = 1e-9;

/// Pivots below this multiple of the shift count as null-space directions.
const NULL_PIVOT_FACTOR: f64 = 4.0;

const REFINEMENT_ROUNDS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("system is underdetermined: {rows} rows for {cols} unknowns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("normal matrix is rank deficient (estimated null-space dimension {null_dim})")]
    RankDeficient { null_dim: usize },
    #[error("non-positive pivot {value:e} at elimination step {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("background factorization worker failed")]
    WorkerFailed,
}

/// A reusable decomposition of the normal matrix of `A`.
#[derive(Debug, Clone)]
pub struct Factorization {
    a: SparseMatrix,
    normal: SparseMatrix,
    factor: CholeskyFactor,
}

impl Factorization {
    /// Number of rows of the factored `A` (length of right-hand sides).
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// Number of unknowns.
    pub fn cols(&self) -> usize {
        self.a.cols()
    }

    /// Stored nonzeros of the triangular factor.
    pub fn factor_nnz(&self) -> usize {
        self.factor.nnz()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }
}

/// Factorizes `AᵀA` for repeated least-squares solves.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization, SolveError> {
    if a.rows() < a.cols() {
        return Err(SolveError::Underdetermined { rows: a.rows(), cols: a.cols() });
    }
    let n = a.cols();
    let normal = a.gram();
    if n == 0 {
        let (factor, _) = CholeskyFactor::factorize(&normal, Vec::new(), 0.0)?;
        return Ok(Factorization { a: a.clone(), normal, factor });
    }
    let trace = normal.trace();
    if !(trace > 0.0) {
        return Err(SolveError::RankDeficient { null_dim: n });
    }
    let shift = REGULARIZATION * trace / n as f64;
    let perm = fill_reducing_order(&normal);
    let (factor, pivots) = match CholeskyFactor::factorize(&normal, perm, shift) {
        Ok(ok) => ok,
        Err(SolveError::NotPositiveDefinite { .. }) => {
            return Err(SolveError::RankDeficient { null_dim: 1 });
        }
        Err(e) => return Err(e),
    };
    let null_dim = pivots.values.iter().filter(|&&d| d < NULL_PIVOT_FACTOR * shift).count();
    if null_dim > 0 {
        return Err(SolveError::RankDeficient { null_dim });
    }
    debug_assert_eq!(factor.dim(), n);
    Ok(Factorization { a: a.clone(), normal, factor })
}

/// Solves `min ‖A x − b‖²` column by column using a prior factorization.
pub fn solve_with(f: &Factorization, b: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    if b.nrows() != f.rows() {
        return Err(SolveError::DimensionMismatch { expected: f.rows(), found: b.nrows() });
    }
    let n = f.cols();
    let mut x = DMatrix::zeros(n, b.ncols());
    for (j, col) in b.column_iter().enumerate() {
        let rhs = f.a.mul_transpose_vec(col.as_slice());
        let mut xj = rhs.clone();
        f.factor.solve_in_place(&mut xj);
        for _ in 0..REFINEMENT_ROUNDS {
            let gx = f.normal.mul_vec(&xj);
            let mut r: Vec<f64> = rhs.iter().zip(&gx).map(|(a, b)| a - b).collect();
            f.factor.solve_in_place(&mut r);
            for (xi, ri) in xj.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        x.column_mut(j).copy_from_slice(&xj);
    }
    Ok(x)
}

/// One-shot least squares: `factorize` then `solve_with`.
pub fn least_squares(a: &SparseMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    if b.nrows() != a.rows() {
        return Err(SolveError::DimensionMismatch { expected: a.rows(), found: b.nrows() });
    }
    solve_with(&factorize(a)?, b)
}

type Slot = Option<Result<Arc<Factorization>, SolveError>>;

/// Completion handle for a factorization running on a worker thread.
#[derive(Debug, Clone)]
pub struct PendingFactorization {
    inner: Arc<(Mutex<Slot>, Condvar)>,
}

impl PendingFactorization {
    /// A handle that is already complete.
    pub fn ready(result: Result<Factorization, SolveError>) -> Self {
        Self { inner: Arc::new((Mutex::new(Some(result.map(Arc::new))), Condvar::new())) }
    }

    /// Returns the result if the worker has finished, without blocking.
    pub fn try_get(&self) -> Option<Result<Arc<Factorization>, SolveError>> {
        self.inner.0.lock().expect("factorization lock poisoned").clone()
    }

    pub fn is_ready(&self) -> bool {
        self.inner.0.lock().expect("factorization lock poisoned").is_some()
    }

    /// Blocks until the worker finishes.
    pub fn wait(&self) -> Result<Arc<Factorization>, SolveError> {
        let (lock, cvar) = &*self.inner;
        let mut slot = lock.lock().expect("factorization lock poisoned");
        while slot.is_none() {
            slot = cvar.wait(slot).expect("factorization lock poisoned");
        }
        slot.clone().expect("slot filled")
    }
}

/// Starts factorizing `a` on a background thread.
pub fn factorize_in_background(a: SparseMatrix) -> PendingFactorization {
    let handle = PendingFactorization { inner: Arc::new((Mutex::new(None), Condvar::new())) };
    let inner = Arc::clone(&handle.inner);
    let spawned = std::thread::Builder::new().name("factorize".into()).spawn(move || {
        let result = factorize(&a).map(Arc::new);
        let (lock, cvar) = &*inner;
        *lock.lock().expect("factorization lock poisoned") = Some(result);
        cvar.notify_all();
    });
    if spawned.is_err() {
        *handle.inner.0.lock().expect("factorization lock poisoned") = Some(Err(SolveError::WorkerFailed));
    }
    handle
}
