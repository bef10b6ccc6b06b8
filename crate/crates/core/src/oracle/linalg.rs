//! Dense kernels: matrix exponential, bordered solves, symmetric spectra.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen, LU};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error thresholds on the 1-norm for degrees 3, 5, 7, 9, 13.
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.53939833006323e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

pub fn one_norm<T: Scalar>(a: &DMatrix<T>) -> T {
    a.column_iter()
        .map(|c| c.iter().fold(T::zero(), |s, &x| s + x.abs()))
        .fold(T::zero(), |m, x| m.max(x))
}

fn pade_low<T: Scalar>(a: &DMatrix<T>, coeffs: &[f64]) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let a2 = a * a;
    let mut u = DMatrix::<T>::identity(n, n) * lit::<T>(coeffs[1]);
    let mut v = DMatrix::<T>::identity(n, n) * lit::<T>(coeffs[0]);
    let mut power = DMatrix::<T>::identity(n, n);
    for k in 1..coeffs.len() / 2 {
        power = &power * &a2;
        u += &power * lit::<T>(coeffs[2 * k + 1]);
        v += &power * lit::<T>(coeffs[2 * k]);
    }
    let u = a * u;
    solve_pade(&v + &u, v - u)
}

fn pade13<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let b = |k: usize| lit::<T>(PADE13[k]);
    let n = a.nrows();
    let id = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a * (&a6 * inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    solve_pade(&v + &u, v - u)
}

fn solve_pade<T: Scalar>(p: DMatrix<T>, q: DMatrix<T>) -> Result<DMatrix<T>> {
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Numerical("singular Pade denominator".into()))
}

/// Matrix exponential by scaling and squaring with a diagonal Pade approximant.
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    assert_eq!(a.nrows(), a.ncols());
    let norm = one_norm(a).as_f64();
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of a non-finite matrix".into()));
    }
    for (coeffs, theta) in [&PADE3[..], &PADE5[..], &PADE7[..], &PADE9[..]].into_iter().zip(THETA) {
        if norm <= theta {
            return pade_low(a, coeffs);
        }
    }
    let s = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
    let scaled = a * lit::<T>(2f64.powi(-s));
    let mut r = pade13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Factorized bordered system `[[M, c], [r^T, 0]]`.
///
/// When `M` has a one-dimensional null space, `c` lies outside its range and
/// `r` is not orthogonal to its null vector, the bordered matrix is
/// invertible; solving with right-hand side `(g, 0)` gives the unique `x`
/// with `M x = g` and `r^T x = 0` whenever `g` is in the range of `M`.
pub struct BorderedSolver<T: Scalar> {
    lu: LU<T, Dyn, Dyn>,
    n: usize,
}

impl<T: Scalar> BorderedSolver<T> {
    pub fn new(m: &DMatrix<T>, column: &DVector<T>, row: &DVector<T>) -> Result<Self> {
        let n = m.nrows();
        let mut b = DMatrix::<T>::zeros(n + 1, n + 1);
        b.view_mut((0, 0), (n, n)).copy_from(m);
        b.view_mut((0, n), (n, 1)).copy_from(column);
        b.view_mut((n, 0), (1, n)).copy_from(&row.transpose());
        let lu = b.lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical("bordered system is singular".into()));
        }
        Ok(Self { lu, n })
    }

    /// Returns `(x, multiplier)` for right-hand side `(g, constraint)`.
    pub fn solve_with(&self, g: &DVector<T>, constraint: T) -> Result<(DVector<T>, T)> {
        let mut rhs = DVector::<T>::zeros(self.n + 1);
        rhs.rows_mut(0, self.n).copy_from(g);
        rhs[self.n] = constraint;
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("bordered solve failed".into()))?;
        Ok((sol.rows(0, self.n).into_owned(), sol[self.n]))
    }

    pub fn solve(&self, g: &DVector<T>) -> Result<DVector<T>> {
        self.solve_with(g, T::zero()).map(|(x, _)| x)
    }
}

/// Eigenvalues (ascending) and eigenvectors of the symmetric part of `m`.
pub fn symmetric_spectrum<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let sym = (m + m.transpose()) * lit::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        // brute-force oracle: scale down, sum 30 Taylor terms, square back
        let s = 10;
        let scaled = a / 2f64.powi(s);
        let n = a.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_across_norms() {
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 30.0] {
            let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0) * scale;
            let e = expm(&a).unwrap();
            let t = taylor_expm(&a);
            let rel = (&e - &t).amax() / t.amax();
            assert!(rel < 1e-11, "scale {scale}: rel err {rel}");
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(expm(&z).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn expm_diagonal_in_f32() {
        let a = DMatrix::<f32>::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5, -3.0]));
        let e = expm(&a).unwrap();
        for (i, x) in [-1.0f32, 0.5, -3.0].into_iter().enumerate() {
            assert!((e[(i, i)] - x.exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn bordered_solve_on_singular_laplacian() {
        // path-graph Laplacian has constants in its kernel
        let m = DMatrix::<f64>::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let ones = DVector::from_element(3, 1.0);
        let solver = BorderedSolver::new(&m, &ones, &ones).unwrap();
        let g = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let x = solver.solve(&g).unwrap();
        assert!((&m * &x - &g).amax() < 1e-14);
        assert!(x.sum().abs() < 1e-14);
    }

    #[test]
    fn spectrum_sorted() {
        let m = DMatrix::<f64>::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_spectrum(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs.column(0)[0] + vecs.column(0)[1]).abs() < 1e-14);
    }
}
