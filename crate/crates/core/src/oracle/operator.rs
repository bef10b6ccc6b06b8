use std::ops::Add;

use nalgebra::{DMatrix, DVector};

use super::space::MeasureVector;
use crate::scalar::Scalar;

/// Dense operator on functions over the enumerated states, with `L^2(mu)`
/// geometry given by the attached reference measure.
///
/// `(A f)(i) = sum_j A[i, j] f(j)`, so Markov generators have zero row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator<T: Scalar> {
    matrix: DMatrix<T>,
    mu: MeasureVector<T>,
}

impl<T: Scalar> LinearOperator<T> {
    pub fn new(matrix: DMatrix<T>, mu: MeasureVector<T>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        assert_eq!(matrix.nrows(), mu.len(), "measure and operator sizes differ");
        Self { matrix, mu }
    }

    pub fn identity(mu: MeasureVector<T>) -> Self {
        Self::new(DMatrix::identity(mu.len(), mu.len()), mu)
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn measure(&self) -> &MeasureVector<T> {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, f: &DVector<T>) -> DVector<T> {
        &self.matrix * f
    }

    /// `mu`-adjoint `D^{-1} A^T D`.
    pub fn adjoint(&self) -> Self {
        let w = self.mu.weights();
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| self.matrix[(j, i)] * w[j] / w[i]);
        Self::new(m, self.mu.clone())
    }

    /// `D^{1/2} A D^{-1/2}`, which has the `mu`-adjoint of `A` as its transpose.
    pub fn similarity(&self) -> DMatrix<T> {
        let s = self.mu.weights().map(|x| x.sqrt());
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| s[i] * self.matrix[(i, j)] / s[j])
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(&self.matrix * factor, self.mu.clone())
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> T {
        self.matrix
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Zero row sums and nonnegative off-diagonal entries, within `tol`.
    pub fn is_markov_generator(&self, tol: T) -> bool {
        let n = self.dim();
        self.max_row_sum() <= tol && (0..n).all(|i| (0..n).all(|j| i == j || self.matrix[(i, j)] >= -tol))
    }

    /// `mu_i A_ij == mu_j A_ji` within `tol`.
    pub fn is_reversible(&self, tol: T) -> bool {
        let w = self.mu.weights();
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| (w[i] * self.matrix[(i, j)] - w[j] * self.matrix[(j, i)]).abs() <= tol))
    }

    /// `sup_i |mu (A f)|`-style check: largest `|mu^T A|` entry.
    pub fn left_action_residual(&self) -> T {
        let w = self.mu.weights();
        (self.matrix.transpose() * w).amax()
    }

    /// Indices reachable from `start` along positive off-diagonal entries.
    #[allow(clippy::needless_range_loop)]
    fn reach(&self, start: usize, transpose: bool) -> Vec<bool> {
        let n = self.dim();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let a = if transpose {
                    self.matrix[(j, i)]
                } else {
                    self.matrix[(i, j)]
                };
                if !seen[j] && a > T::zero() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Whether the jump graph of the generator is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        self.dim() == 0 || (self.reach(0, false).into_iter().all(|b| b) && self.reach(0, true).into_iter().all(|b| b))
    }
}

impl<T: Scalar> Add for &LinearOperator<T> {
    type Output = LinearOperator<T>;

    fn add(self, rhs: Self) -> LinearOperator<T> {
        LinearOperator::new(&self.matrix + &rhs.matrix, self.mu.clone())
    }
}
