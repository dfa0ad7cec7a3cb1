//! Small dense complex linear algebra: inner products, column-major
//! matrices, Cholesky factorization and an incrementally grown QR.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Result, StapError};
use crate::scalar::Real;

/// Conjugated inner product `aᴴb`.
pub fn dotc<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

pub fn norm_sq<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm<T: Real>(a: &[Complex<T>]) -> T {
    norm_sq(a).sqrt()
}

/// `y += alpha · x`
pub fn axpy<T: Real>(alpha: Complex<T>, x: &[Complex<T>], y: &mut [Complex<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense complex matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(columns: &[Vec<Complex<T>>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(StapError::InvalidArgument(
                "all columns must have the same length".into(),
            ));
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[Complex<T>] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [Complex<T>] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex::zero(); self.rows];
        for (j, xj) in x.iter().enumerate() {
            if !xj.is_zero() {
                axpy(*xj, self.column(j), &mut y);
            }
        }
        y
    }

    /// `Aᴴ y`
    pub fn adjoint_mul_vec(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols).map(|j| dotc(self.column(j), y)).collect()
    }

    /// Largest elementwise modulus of `A − Aᴴ`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[j * self.rows + i]
    }
}

/// Lower-triangular Cholesky factor `L` of a Hermitian positive definite
/// matrix, `A = L Lᴴ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: CMatrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes `a`. Only the lower triangle is read.
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(StapError::InvalidArgument("Cholesky needs a square matrix".into()));
        }
        let mut l = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(StapError::SingularCovariance {
                    condition: f64::INFINITY,
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &CMatrix<T> {
        &self.lower
    }

    /// Condition estimate of `A` from the factor diagonal, `(max Lᵢᵢ / min Lᵢᵢ)²`.
    /// A lower bound on the 2-norm condition number.
    pub fn condition_estimate(&self) -> T {
        let n = self.lower.rows();
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for i in 0..n {
            let d = self.lower[(i, i)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let r = hi / lo;
        r * r
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lower.rows();
        let mut y = b.to_vec();
        for k in 0..n {
            let col = self.lower.column(k);
            y[k] = y[k] / col[k].re;
            let yk = y[k];
            if yk.is_zero() {
                continue;
            }
            for (yi, lik) in y[k + 1..].iter_mut().zip(&col[k + 1..]) {
                *yi -= lik * yk;
            }
        }
        y
    }

    /// Solves `Lᴴ x = y`.
    pub fn backward(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lower.rows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let col = self.lower.column(i);
            let s = x[i] - dotc(&col[i + 1..], &x[i + 1..]);
            x[i] = s / col[i].re;
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        self.backward(&self.forward(b))
    }

    /// `A⁻¹`, Hermitian.
    pub fn inverse(&self) -> CMatrix<T> {
        let n = self.lower.rows();
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![Complex::zero(); n];
        for j in 0..n {
            e[j] = Complex::one();
            let x = self.solve(&e);
            inv.column_mut(j).copy_from_slice(&x);
            e[j] = Complex::zero();
        }
        inv
    }
}

/// Thin QR factorization grown one column at a time by modified
/// Gram-Schmidt with a second reorthogonalization pass.
#[derive(Debug, Clone)]
pub struct IncrementalQr<T> {
    q: Vec<Vec<Complex<T>>>,
    /// Column `j` holds the first `j + 1` entries of R's column `j`.
    r: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Default for IncrementalQr<T> {
    fn default() -> Self {
        Self { q: Vec::new(), r: Vec::new() }
    }
}

impl<T: Real> IncrementalQr<T> {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q_columns(&self) -> &[Vec<Complex<T>>] {
        &self.q
    }

    /// Appends a column. Returns the ratio `|Rₖₖ| / ‖column‖`, the fraction of
    /// the new column lying outside the current span. The column is not added
    /// when that ratio is zero.
    pub fn push(&mut self, column: &[Complex<T>]) -> T {
        let col_norm = norm(column);
        let mut v = column.to_vec();
        let mut coeffs = vec![Complex::zero(); self.q.len() + 1];
        for _pass in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dotc(qi, &v);
                axpy(-c, qi, &mut v);
                coeffs[i] += c;
            }
        }
        let rkk = norm(&v);
        if col_norm.is_zero() || rkk.is_zero() {
            return T::zero();
        }
        for z in v.iter_mut() {
            *z = *z / rkk;
        }
        coeffs[self.q.len()] = Complex::new(rkk, T::zero());
        self.q.push(v);
        self.r.push(coeffs);
        rkk / col_norm
    }

    /// `max |Rᵢᵢ| / min |Rᵢᵢ|`, a lower bound on the condition number of the
    /// stacked columns when those columns have unit norm.
    pub fn diagonal_condition(&self) -> T {
        let (mut lo, mut hi) = (T::infinity(), T::zero());
        for (j, col) in self.r.iter().enumerate() {
            let d = col[j].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if self.r.is_empty() {
            T::one()
        } else {
            hi / lo
        }
    }

    /// Least-squares coefficients of `b` on the stacked columns.
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let k = self.q.len();
        let mut c: Vec<Complex<T>> = self.q.iter().map(|qi| dotc(qi, b)).collect();
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in (i + 1)..k {
                s -= self.r[j][i] * c[j];
            }
            c[i] = s / self.r[i][i];
        }
        c
    }

    /// Removes from `v` its projection onto the current span.
    pub fn project_out(&self, v: &mut [Complex<T>]) {
        for _pass in 0..2 {
            for qi in &self.q {
                let c = dotc(qi, v);
                axpy(-c, qi, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let a = CMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) => c(4.0, 0.0),
            (1, 1) => c(5.0, 0.0),
            (2, 2) => c(6.0, 0.0),
            (1, 0) => c(1.0, 1.0),
            (0, 1) => c(1.0, -1.0),
            (2, 0) => c(0.0, 0.5),
            (0, 2) => c(0.0, -0.5),
            (2, 1) => c(-1.0, 0.0),
            (1, 2) => c(-1.0, 0.0),
            _ => unreachable!(),
        });
        let chol = Cholesky::new(&a).unwrap();
        let b = vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)];
        let x = chol.solve(&b);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        let inv = chol.inverse();
        for j in 0..3 {
            let e = a.mul_vec(inv.column(j));
            for (i, v) in e.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMatrix::<f64>::identity(2);
        a[(1, 1)] = c(-1.0, 0.0);
        assert!(matches!(Cholesky::new(&a), Err(StapError::SingularCovariance { .. })));
    }

    #[test]
    fn qr_least_squares_matches_exact_fit() {
        let cols = vec![
            vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(2.0, 0.0), c(0.0, -1.0), c(1.0, 0.0)],
        ];
        let mut qr = IncrementalQr::default();
        for col in &cols {
            assert!(qr.push(col) > 0.1);
        }
        let truth = [c(1.5, -0.5), c(-2.0, 1.0)];
        let mut b = vec![c(0.0, 0.0); 4];
        for (t, col) in truth.iter().zip(&cols) {
            axpy(*t, col, &mut b);
        }
        let x = qr.solve(&b);
        for (u, v) in x.iter().zip(&truth) {
            assert!((u - v).norm() < 1e-12);
        }
        let mut res = b.clone();
        qr.project_out(&mut res);
        assert!(norm(&res) < 1e-12);
    }

    #[test]
    fn qr_flags_dependent_column() {
        let col = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let mut qr = IncrementalQr::default();
        qr.push(&col);
        let ratio = qr.push(&col);
        assert!(ratio < 1e-12);
    }
}
