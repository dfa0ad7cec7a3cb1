//! Sensing dictionaries: unit-norm columns with fast forward and adjoint
//! products, plus pairwise column coherence.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{invalid, Result, StapError};
use crate::linalg::{axpy, dotc, norm, norm_sq, CMatrix};
use crate::scalar::{unit_phasor, Real};
use crate::steering::{AngleDopplerGrid, ArrayGeometry};

/// Default allocation ceiling for a dense dictionary.
pub const DEFAULT_DICTIONARY_BUDGET_BYTES: u64 = 1 << 30;

const POWER_ITERATIONS: usize = 50;

/// A matrix whose unit-norm columns are the atoms a snapshot is expanded on.
pub trait Dictionary<T: Real>: Sync {
    fn n_rows(&self) -> usize;

    fn n_cols(&self) -> usize;

    /// Unit-norm column `j`.
    fn column(&self, j: usize) -> &[Complex<T>];

    /// Euclidean norms of the columns before normalization.
    fn column_norms(&self) -> &[T];

    /// Cached estimate of ‖Φ‖₂².
    fn spectral_norm_sq(&self) -> T;

    /// `Φ x`
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.n_cols());
        let mut y = vec![Complex::zero(); self.n_rows()];
        for (j, xj) in x.iter().enumerate() {
            if !xj.is_zero() {
                axpy(*xj, self.column(j), &mut y);
            }
        }
        y
    }

    /// `Φᴴ r`
    fn adjoint(&self, r: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(r.len(), self.n_rows());
        (0..self.n_cols()).map(|j| dotc(self.column(j), r)).collect()
    }

    /// Re(φⱼᴴ M φⱼ) for every column, `m` Hermitian.
    fn hermitian_forms(&self, m: &CMatrix<T>) -> Vec<T> {
        assert!(m.rows() == self.n_rows() && m.cols() == self.n_rows());
        (0..self.n_cols())
            .map(|j| {
                let c = self.column(j);
                dotc(c, &m.mul_vec(c)).re
            })
            .collect()
    }
}

/// `|⟨φᵢ, φⱼ⟩|` for unit-norm columns; in `[0, 1]`.
pub fn column_coherence<T: Real, D: Dictionary<T> + ?Sized>(dict: &D, i: usize, j: usize) -> Result<T> {
    let n = dict.n_cols();
    if i >= n || j >= n {
        return Err(invalid(format!("column index out of range ({i}, {j}) for {n} columns")));
    }
    Ok(dotc(dict.column(i), dict.column(j)).norm().min(T::one()))
}

/// Coherence of column `j` with every column of the dictionary.
pub fn coherence_row<T: Real, D: Dictionary<T> + ?Sized>(dict: &D, j: usize) -> Result<Vec<T>> {
    if j >= dict.n_cols() {
        return Err(invalid(format!("column index {j} out of range")));
    }
    Ok(dict
        .adjoint(dict.column(j))
        .into_iter()
        .map(|z| z.norm().min(T::one()))
        .collect())
}

/// Largest off-diagonal coherence. Quadratic in the number of columns.
pub fn mutual_coherence<T: Real, D: Dictionary<T> + ?Sized>(dict: &D) -> T {
    let mut worst = T::zero();
    for j in 0..dict.n_cols() {
        let row = dict.adjoint(dict.column(j));
        for (i, z) in row.iter().enumerate() {
            if i != j {
                worst = worst.max(z.norm());
            }
        }
    }
    worst
}

fn power_method<T: Real>(
    n_cols: usize,
    apply: impl Fn(&[Complex<T>]) -> Vec<Complex<T>>,
    adjoint: impl Fn(&[Complex<T>]) -> Vec<Complex<T>>,
) -> T {
    // deterministic, non-degenerate start
    let mut v: Vec<Complex<T>> = (0..n_cols)
        .map(|i| unit_phasor(T::of((i as f64 * 0.618_033_988_749_895).fract())))
        .collect();
    let mut estimate = T::zero();
    for _ in 0..POWER_ITERATIONS {
        let nv = norm(&v);
        if nv.is_zero() {
            return T::zero();
        }
        v.iter_mut().for_each(|z| *z = *z / nv);
        let w = adjoint(&apply(&v));
        estimate = norm(&w);
        v = w;
    }
    estimate
}

/// Dictionary backed by an arbitrary dense matrix, normalized at
/// construction.
#[derive(Debug, Clone)]
pub struct DenseDictionary<T> {
    columns: CMatrix<T>,
    column_norms: Vec<T>,
    spectral_norm_sq: T,
}

impl<T: Real> DenseDictionary<T> {
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        let mut columns = matrix;
        let mut column_norms = Vec::with_capacity(columns.cols());
        for j in 0..columns.cols() {
            let n = norm(columns.column(j));
            if n.is_zero() {
                return Err(invalid(format!("dictionary column {j} is zero")));
            }
            columns.column_mut(j).iter_mut().for_each(|z| *z = *z / n);
            column_norms.push(n);
        }
        let spectral_norm_sq = power_method(columns.cols(), |x| columns.mul_vec(x), |y| columns.adjoint_mul_vec(y));
        Ok(Self {
            columns,
            column_norms,
            spectral_norm_sq,
        })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.columns
    }
}

impl<T: Real> Dictionary<T> for DenseDictionary<T> {
    fn n_rows(&self) -> usize {
        self.columns.rows()
    }
    fn n_cols(&self) -> usize {
        self.columns.cols()
    }
    fn column(&self, j: usize) -> &[Complex<T>] {
        self.columns.column(j)
    }
    fn column_norms(&self) -> &[T] {
        &self.column_norms
    }
    fn spectral_norm_sq(&self) -> T {
        self.spectral_norm_sq
    }
}

/// Grid dictionary of normalized space-time steering vectors.
///
/// The columns factor as `(a_s ⊗ a_d)/√(NL)`, so products with Φ and Φᴴ are
/// evaluated separably in O(N·N_s·N_d + N·L·N_d) rather than O(N·L·N_s·N_d).
#[derive(Debug, Clone)]
pub struct SteeringDictionary<T> {
    geometry: ArrayGeometry,
    grid: AngleDopplerGrid,
    columns: CMatrix<T>,
    column_norms: Vec<T>,
    /// N × N_s spatial atoms, column-major.
    spatial_atoms: CMatrix<T>,
    /// L × N_d Doppler atoms, column-major.
    doppler_atoms: CMatrix<T>,
    scale: T,
    spectral_norm_sq: T,
}

/// Builds the grid dictionary with the default memory budget.
pub fn build_dictionary<T: Real>(geometry: &ArrayGeometry, grid: &AngleDopplerGrid) -> Result<SteeringDictionary<T>> {
    SteeringDictionary::with_budget(geometry, grid, DEFAULT_DICTIONARY_BUDGET_BYTES)
}

impl<T: Real> SteeringDictionary<T> {
    pub fn with_budget(geometry: &ArrayGeometry, grid: &AngleDopplerGrid, budget_bytes: u64) -> Result<Self> {
        geometry.validate()?;
        grid.validate()?;
        let (n, l) = (geometry.n_elements, geometry.n_pulses);
        let (ns, nd) = (grid.n_spatial(), grid.n_doppler());
        if ns * nd == 0 {
            return Err(invalid("grid has no cells"));
        }
        let required = (n * l) as u64 * (ns * nd) as u64 * std::mem::size_of::<Complex<T>>() as u64;
        if required > budget_bytes {
            return Err(StapError::ResourceExhausted {
                required_bytes: required,
                budget_bytes,
            });
        }

        let spatial_atoms =
            CMatrix::from_fn(n, ns, |k, m| unit_phasor(T::of(k as f64) * T::of(grid.spatial_freqs[m])));
        let doppler_atoms =
            CMatrix::from_fn(l, nd, |k, m| unit_phasor(T::of(k as f64) * T::of(grid.doppler_freqs[m])));
        let raw_norm = T::of((n * l) as f64).sqrt();
        let scale = raw_norm.recip();

        let mut columns = CMatrix::zeros(n * l, ns * nd);
        for m in 0..ns {
            let a_s = spatial_atoms.column(m);
            for d in 0..nd {
                let a_d = doppler_atoms.column(d);
                let col = columns.column_mut(m * nd + d);
                for (k, s) in a_s.iter().enumerate() {
                    for (li, t) in a_d.iter().enumerate() {
                        col[k * l + li] = s * t * scale;
                    }
                }
            }
        }

        let mut dict = Self {
            geometry: *geometry,
            grid: grid.clone(),
            columns,
            column_norms: vec![raw_norm; ns * nd],
            spatial_atoms,
            doppler_atoms,
            scale,
            spectral_norm_sq: T::zero(),
        };
        dict.spectral_norm_sq = power_method(ns * nd, |x| dict.apply(x), |y| dict.adjoint(y));
        Ok(dict)
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &AngleDopplerGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.columns
    }

    fn separable_apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let (n, l) = (self.geometry.n_elements, self.geometry.n_pulses);
        let (ns, nd) = (self.grid.n_spatial(), self.grid.n_doppler());
        // partial[k][d] = Σ_m a_s[k, m] x[m, d]
        let mut partial = vec![Complex::zero(); n * nd];
        for m in 0..ns {
            let row = &x[m * nd..(m + 1) * nd];
            if row.iter().all(|z| z.is_zero()) {
                continue;
            }
            for (k, s) in self.spatial_atoms.column(m).iter().enumerate() {
                axpy(*s, row, &mut partial[k * nd..(k + 1) * nd]);
            }
        }
        let mut y = vec![Complex::zero(); n * l];
        for k in 0..n {
            let pk = &partial[k * nd..(k + 1) * nd];
            for (d, p) in pk.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let coef = p * self.scale;
                axpy(coef, self.doppler_atoms.column(d), &mut y[k * l..(k + 1) * l]);
            }
        }
        y
    }

    fn separable_adjoint(&self, r: &[Complex<T>]) -> Vec<Complex<T>> {
        let (n, l) = (self.geometry.n_elements, self.geometry.n_pulses);
        let (ns, nd) = (self.grid.n_spatial(), self.grid.n_doppler());
        // partial[k][d] = Σ_l conj(a_d[l, d]) r[k, l]
        let mut partial = vec![Complex::zero(); n * nd];
        for k in 0..n {
            let rk = &r[k * l..(k + 1) * l];
            for d in 0..nd {
                partial[k * nd + d] = dotc(self.doppler_atoms.column(d), rk);
            }
        }
        let mut out = vec![Complex::zero(); ns * nd];
        for m in 0..ns {
            let dst = &mut out[m * nd..(m + 1) * nd];
            for (k, s) in self.spatial_atoms.column(m).iter().enumerate() {
                axpy(s.conj() * self.scale, &partial[k * nd..(k + 1) * nd], dst);
            }
        }
        out
    }
}

impl<T: Real> Dictionary<T> for SteeringDictionary<T> {
    fn n_rows(&self) -> usize {
        self.columns.rows()
    }

    fn n_cols(&self) -> usize {
        self.columns.cols()
    }

    fn column(&self, j: usize) -> &[Complex<T>] {
        self.columns.column(j)
    }

    fn column_norms(&self) -> &[T] {
        &self.column_norms
    }

    fn spectral_norm_sq(&self) -> T {
        self.spectral_norm_sq
    }

    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.n_cols());
        let nnz = x.iter().filter(|z| !z.is_zero()).count();
        let (n, l) = (self.geometry.n_elements, self.geometry.n_pulses);
        let nd = self.grid.n_doppler();
        let separable_cost = n * self.grid.n_spatial() * nd + n * l * nd;
        if nnz * n * l < separable_cost {
            let mut y = vec![Complex::zero(); n * l];
            for (j, xj) in x.iter().enumerate() {
                if !xj.is_zero() {
                    axpy(*xj, self.column(j), &mut y);
                }
            }
            y
        } else {
            self.separable_apply(x)
        }
    }

    fn adjoint(&self, r: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(r.len(), self.n_rows());
        self.separable_adjoint(r)
    }

    fn hermitian_forms(&self, m: &CMatrix<T>) -> Vec<T> {
        let (n, l) = (self.geometry.n_elements, self.geometry.n_pulses);
        let (ns, nd) = (self.grid.n_spatial(), self.grid.n_doppler());
        assert!(m.rows() == n * l && m.cols() == n * l);
        let scale_sq = self.scale * self.scale;
        let mut out = Vec::with_capacity(ns * nd);
        // Per spatial atom a, reduce M to the L × L block Σᵢⱼ conj(aᵢ) aⱼ M[iL.., jL..].
        let mut block = CMatrix::zeros(l, l);
        for sm in 0..ns {
            let a = self.spatial_atoms.column(sm);
            for q in 0..l {
                let dst = block.column_mut(q);
                dst.iter_mut().for_each(|z| *z = Complex::zero());
                for (j, aj) in a.iter().enumerate() {
                    let col = m.column(j * l + q);
                    for (i, ai) in a.iter().enumerate() {
                        let w = ai.conj() * aj;
                        axpy(w, &col[i * l..(i + 1) * l], dst);
                    }
                }
            }
            for d in 0..nd {
                let b = self.doppler_atoms.column(d);
                out.push(dotc(b, &block.mul_vec(b)).re * scale_sq);
            }
        }
        out
    }
}

/// ‖Φᴴr‖∞, the largest modulus of the correlations with `r`.
pub fn adjoint_sup_norm<T: Real, D: Dictionary<T> + ?Sized>(dict: &D, r: &[Complex<T>]) -> T {
    dict.adjoint(r).iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Largest elementwise distance between two vectors.
pub fn max_abs_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |m, (x, y)| m.max((x - y).norm()))
}

/// Energy of a coefficient vector, Σ|xᵢ|².
pub fn energy<T: Real>(x: &[Complex<T>]) -> T {
    norm_sq(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steering::space_time_steering;
    use approx::assert_abs_diff_eq;

    fn small() -> SteeringDictionary<f64> {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let grid = AngleDopplerGrid::uniform(3, 4).unwrap();
        build_dictionary(&g, &grid).unwrap()
    }

    #[test]
    fn small_dictionary_shape_and_entries() {
        let d = small();
        assert_eq!((d.n_rows(), d.n_cols()), (4, 12));
        for j in 0..12 {
            for z in d.column(j) {
                assert_abs_diff_eq!(z.norm(), 0.5, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(d.column_norms()[j], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn columns_match_steering_vectors() {
        let d = small();
        let grid = d.grid().clone();
        for m in 0..3 {
            for n in 0..4 {
                let v = space_time_steering(grid.spatial_freqs[m], grid.doppler_freqs[n], d.geometry()).unwrap();
                let col = d.column(grid.flat_index(m, n));
                for (a, b) in v.iter().zip(col) {
                    assert_abs_diff_eq!((a * 0.5 - b).norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn separable_products_match_dense() {
        let g = ArrayGeometry::half_wavelength(3, 5).unwrap();
        let grid = AngleDopplerGrid::uniform(7, 6).unwrap();
        let d: SteeringDictionary<f64> = build_dictionary(&g, &grid).unwrap();
        let x: Vec<_> = (0..42).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let r: Vec<_> = (0..15).map(|i| Complex::new((i as f64 * 1.7).cos(), (i as f64).sin())).collect();
        assert!(max_abs_diff(&d.separable_apply(&x), &d.matrix().mul_vec(&x)) < 1e-12);
        assert!(max_abs_diff(&d.adjoint(&r), &d.matrix().adjoint_mul_vec(&r)) < 1e-12);
        let mut sparse = vec![Complex::zero(); 42];
        sparse[5] = Complex::new(2.0, -1.0);
        assert!(max_abs_diff(&d.apply(&sparse), &d.matrix().mul_vec(&sparse)) < 1e-12);
    }

    #[test]
    fn separable_hermitian_forms_match_dense() {
        let g = ArrayGeometry::half_wavelength(3, 4).unwrap();
        let d: SteeringDictionary<f64> = build_dictionary(&g, &AngleDopplerGrid::uniform(5, 6).unwrap()).unwrap();
        let b = CMatrix::from_fn(12, 12, |i, j| Complex::new(((i * 7 + j * 3) % 5) as f64, ((i + 2 * j) % 3) as f64 - 1.0));
        // M = B + Bᴴ is Hermitian.
        let m = CMatrix::from_fn(12, 12, |i, j| b[(i, j)] + b[(j, i)].conj());
        let dense = DenseDictionary::new(d.matrix().clone()).unwrap();
        let want = dense.hermitian_forms(&m);
        let got = d.hermitian_forms(&m);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn spectral_norm_of_full_uniform_grid() {
        // Σ over a full uniform grid of a·aᴴ is (N_s N_d / NL)·I when N_s ≥ N and N_d ≥ L.
        let g = ArrayGeometry::half_wavelength(3, 4).unwrap();
        let grid = AngleDopplerGrid::uniform(8, 8).unwrap();
        let d: SteeringDictionary<f64> = build_dictionary(&g, &grid).unwrap();
        assert_abs_diff_eq!(d.spectral_norm_sq(), 64.0 / 12.0, epsilon = 1e-9);
    }

    #[test]
    fn coherence_basics() {
        let d = small();
        assert_abs_diff_eq!(column_coherence(&d, 3, 3).unwrap(), 1.0, epsilon = 1e-12);
        let a = column_coherence(&d, 1, 7).unwrap();
        let b = column_coherence(&d, 7, 1).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        assert!(column_coherence(&d, 0, 12).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let g = ArrayGeometry::half_wavelength(14, 16).unwrap();
        let grid = AngleDopplerGrid::uniform(64, 64).unwrap();
        match SteeringDictionary::<f64>::with_budget(&g, &grid, 1024) {
            Err(StapError::ResourceExhausted { required_bytes, .. }) => {
                assert_eq!(required_bytes, 224 * 4096 * 16)
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn dense_dictionary_normalizes() {
        let m = CMatrix::from_fn(3, 2, |i, j| Complex::new((i + j + 1) as f64, 0.0));
        let d = DenseDictionary::new(m).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(norm(d.column(j)), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(d.column_norms()[0], 14f64.sqrt(), epsilon = 1e-12);
        let zero = CMatrix::<f64>::zeros(2, 1);
        assert!(DenseDictionary::new(zero).is_err());
    }
}
