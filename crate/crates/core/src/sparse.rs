//! Compressed-sparse-row operators over a [`SectorBasis`].

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{SectorBasis, StateVector};
use crate::C64;

/// Anything that can act on amplitude vectors of a fixed dimension.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); self.dim()];
        self.apply(x, &mut y);
        y
    }
}

/// Hermitian operator in CSR form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    basis: Arc<SectorBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    exec: Execution,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(
        basis: Arc<SectorBasis>,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= dim || *c >= dim) {
            return Err(Error::ShapeMismatch(format!(
                "entry ({r}, {c}) outside dimension {dim}"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut op = SparseOperator {
            basis,
            row_ptr,
            cols,
            vals,
            exec: Execution::default(),
        };
        op.prune_zeros();
        Ok(op)
    }

    fn prune_zeros(&mut self) {
        if self.vals.iter().all(|v| *v != C64::default()) {
            return;
        }
        let dim = self.row_ptr.len() - 1;
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != C64::default() {
                    cols.push(self.cols[k]);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    /// Selects the mat-vec execution policy.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterates over stored entries `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::default(),
        }
    }

    /// Largest `|A_ij - conj(A_ji)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[C64]) -> C64 {
        let mut acc = C64::default();
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.vals[k] * x[self.cols[k]];
        }
        acc
    }

    /// `A x` into a fresh state (not normalized).
    pub fn apply_state(&self, state: &StateVector) -> StateVector {
        let y = self.apply_vec(state.amplitudes());
        StateVector::from_raw(state.basis().clone(), y).expect("dimension preserved")
    }

    /// `<psi|A|psi>`; real part is the physical value for Hermitian `A`.
    pub fn expectation(&self, state: &StateVector) -> C64 {
        let x = state.amplitudes();
        (0..self.dim())
            .map(|r| x[r].conj() * self.row_dot(r, x))
            .sum()
    }

    /// `<psi|A^2|psi> = ||A psi||^2` for Hermitian `A`.
    pub fn square_expectation(&self, state: &StateVector) -> f64 {
        self.apply_vec(state.amplitudes())
            .iter()
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Sum of two operators on the same basis.
    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch("operator dimensions differ".into()));
        }
        let trip = self.entries().chain(other.entries()).collect();
        Ok(SparseOperator::from_triplets(self.basis.clone(), trip)?.with_execution(self.exec))
    }

    /// Scaled copy.
    pub fn scaled(&self, factor: f64) -> SparseOperator {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out.prune_zeros();
        out
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        self.exec.fill(y, |r| self.row_dot(r, x));
    }
}
