//! Sample-matrix-inversion beamforming baseline.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{invalid, Result, StapError};
use crate::linalg::{dotc, CMatrix, Cholesky};
use crate::scalar::Real;

/// Condition estimate beyond which a covariance is refused.
pub const MAX_COVARIANCE_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum DiagonalLoading {
    /// δ = factor · trace(sample covariance) / (N·L).
    TraceRelative(f64),
    /// δ given directly.
    Absolute(f64),
}

impl Default for DiagonalLoading {
    fn default() -> Self {
        DiagonalLoading::TraceRelative(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T> {
    pub matrix: CMatrix<T>,
    pub n_samples: usize,
    pub loading: T,
}

/// R̂ = (1/K)·Σ rᵢrᵢᴴ + δ·I with trace-relative δ.
pub fn estimate_covariance<T: Real>(r_train: &[Vec<Complex<T>>], loading_factor: f64) -> Result<CovarianceEstimate<T>> {
    estimate_covariance_with(r_train, DiagonalLoading::TraceRelative(loading_factor))
}

pub fn estimate_covariance_with<T: Real>(
    r_train: &[Vec<Complex<T>>],
    loading: DiagonalLoading,
) -> Result<CovarianceEstimate<T>> {
    let Some(first) = r_train.first() else {
        return Err(invalid("covariance estimation needs at least one snapshot"));
    };
    let n = first.len();
    if n == 0 || r_train.iter().any(|r| r.len() != n) {
        return Err(invalid("training snapshots must be nonempty and of equal length"));
    }
    let (factor, absolute) = match loading {
        DiagonalLoading::TraceRelative(f) => (f, false),
        DiagonalLoading::Absolute(d) => (d, true),
    };
    if !(factor >= 0.0) || !factor.is_finite() {
        return Err(invalid("diagonal loading must be finite and non-negative"));
    }

    let k = T::of(r_train.len() as f64);
    let mut m = CMatrix::zeros(n, n);
    for r in r_train {
        for j in 0..n {
            let cj = r[j].conj();
            let col = m.column_mut(j);
            for i in j..n {
                col[i] += r[i] * cj;
            }
        }
    }
    for j in 0..n {
        for i in j..n {
            let v = m[(i, j)] / k;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        let d = m[(j, j)].re;
        m[(j, j)] = Complex::new(d, T::zero());
    }
    let delta = if absolute {
        T::of(factor)
    } else {
        T::of(factor) * m.trace().re / T::of(n as f64)
    };
    for j in 0..n {
        m[(j, j)].re += delta;
    }
    Ok(CovarianceEstimate {
        matrix: m,
        n_samples: r_train.len(),
        loading: delta,
    })
}

/// Cholesky factor of an estimate that is safe to invert.
pub fn factor_covariance<T: Real>(cov: &CovarianceEstimate<T>) -> Result<Cholesky<T>> {
    let n = cov.matrix.rows();
    if cov.n_samples < n && !(cov.loading > T::zero()) {
        return Err(invalid(format!(
            "{} training snapshots for dimension {n} require positive diagonal loading",
            cov.n_samples
        )));
    }
    let chol = Cholesky::new(&cov.matrix)?;
    let condition = chol.condition_estimate().as_f64();
    if condition > MAX_COVARIANCE_CONDITION {
        return Err(StapError::SingularCovariance { condition });
    }
    Ok(chol)
}

/// w = R̂⁻¹s / (sᴴR̂⁻¹s)
pub fn smi_weight<T: Real>(chol: &Cholesky<T>, steering: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if steering.len() != chol.lower().rows() {
        return Err(invalid("steering vector length does not match covariance"));
    }
    let rinv_s = chol.solve(steering);
    let denom = dotc(steering, &rinv_s);
    if denom.norm().is_zero() {
        return Err(invalid("steering vector is zero"));
    }
    Ok(rinv_s.iter().map(|z| z / denom).collect())
}

/// |wᴴ r_test| for every dictionary column s, with w the SMI weight for s,
/// i.e. |sᴴR̂⁻¹r| / sᴴR̂⁻¹s.
pub fn smi_spectrum<T: Real, D: Dictionary<T> + ?Sized>(
    cov: &CovarianceEstimate<T>,
    r_test: &[Complex<T>],
    dict: &D,
) -> Result<Vec<T>> {
    if r_test.len() != dict.n_rows() || cov.matrix.rows() != dict.n_rows() {
        return Err(invalid("snapshot, covariance and dictionary dimensions disagree"));
    }
    let chol = factor_covariance(cov)?;
    let correlations = dict.adjoint(&chol.solve(r_test));
    let gains = dict.hermitian_forms(&chol.inverse());
    Ok(correlations.iter().zip(gains).map(|(c, g)| c.norm() / g).collect())
}

/// |sᴴ r| for every unit-norm dictionary column s.
pub fn matched_filter_map<T: Real, D: Dictionary<T> + ?Sized>(dict: &D, r: &[Complex<T>]) -> Result<Vec<T>> {
    if r.len() != dict.n_rows() {
        return Err(invalid("snapshot length does not match dictionary"));
    }
    Ok(dict.adjoint(r).iter().map(|z| z.norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::build_dictionary;
    use crate::steering::{AngleDopplerGrid, ArrayGeometry};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zero_data_gives_zero_matrix() {
        let cov = estimate_covariance::<f64>(&vec![vec![c(0.0, 0.0); 3]; 2], 1.0).unwrap();
        assert_eq!(cov.loading, 0.0);
        assert!(cov.matrix.trace().norm() == 0.0);
    }

    #[test]
    fn single_snapshot_is_outer_product() {
        let r = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.0, 3.0)];
        let cov = estimate_covariance(&[r.clone()], 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov.matrix[(i, j)] - r[i] * r[j].conj()).norm() < 1e-14);
            }
        }
        assert!(cov.matrix.hermitian_defect() < 1e-14);
    }

    #[test]
    fn loading_modes() {
        let r = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let rel = estimate_covariance(&[r.clone()], 2.0).unwrap();
        assert!((rel.loading - 2.0).abs() < 1e-14);
        let abs = estimate_covariance_with(&[r], DiagonalLoading::Absolute(0.25)).unwrap();
        assert_eq!(abs.loading, 0.25);
        assert!((abs.matrix[(0, 0)].re - 1.25).abs() < 1e-14);
        assert!(estimate_covariance::<f64>(&[], 1.0).is_err());
    }

    #[test]
    fn identity_covariance_is_matched_filter() {
        let g = ArrayGeometry::half_wavelength(3, 3).unwrap();
        let d = build_dictionary::<f64>(&g, &AngleDopplerGrid::uniform(6, 6).unwrap()).unwrap();
        let cov = CovarianceEstimate {
            matrix: CMatrix::identity(9),
            n_samples: 9,
            loading: 0.0,
        };
        let r = d.column(0).to_vec();
        let smi = smi_spectrum(&cov, &r, &d).unwrap();
        let mf = matched_filter_map(&d, &r).unwrap();
        for (a, b) in smi.iter().zip(&mf) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(crate::filters::argmax(&smi), 0);
    }

    #[test]
    fn spectrum_matches_whitened_form() {
        let g = ArrayGeometry::half_wavelength(3, 4).unwrap();
        let d = build_dictionary::<f64>(&g, &AngleDopplerGrid::uniform(5, 7).unwrap()).unwrap();
        let snaps: Vec<Vec<_>> = (0..30)
            .map(|k| (0..12).map(|i| c(((k * 5 + i * 3) % 13) as f64 - 6.0, ((k * i + 2) % 7) as f64 - 3.0)).collect())
            .collect();
        let cov = estimate_covariance(&snaps, 0.05).unwrap();
        let chol = factor_covariance(&cov).unwrap();
        let r = &snaps[3];
        let smi = smi_spectrum(&cov, r, &d).unwrap();
        let v = chol.forward(r);
        for (j, got) in smi.iter().enumerate() {
            let u = chol.forward(d.column(j));
            let want = dotc(&u, &v).norm() / crate::linalg::norm_sq(&u);
            assert!((got - want).abs() < 1e-10 * want.max(1.0), "{j}: {got} vs {want}");
        }
    }

    #[test]
    fn weights_are_distortionless() {
        let snaps: Vec<Vec<_>> = (0..20)
            .map(|k| (0..4).map(|i| c(((k * 3 + i * 7) % 11) as f64 - 5.0, ((k + i * i) % 5) as f64)).collect())
            .collect();
        let cov = estimate_covariance(&snaps, 0.1).unwrap();
        let chol = factor_covariance(&cov).unwrap();
        let s = vec![c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        let w = smi_weight(&chol, &s).unwrap();
        assert!((dotc(&w, &s) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unloaded_undersampled_covariance_is_refused() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let d = build_dictionary::<f64>(&g, &AngleDopplerGrid::uniform(2, 2).unwrap()).unwrap();
        let cov = estimate_covariance(&[vec![c(1.0, 0.0); 4]], 0.0).unwrap();
        assert!(smi_spectrum(&cov, &[c(1.0, 0.0); 4], &d).is_err());
        let loaded = estimate_covariance(&[vec![c(1.0, 0.0); 4]], 1.0).unwrap();
        assert!(smi_spectrum(&loaded, &[c(1.0, 0.0); 4], &d).is_ok());
    }
}
