//! Spatial, Doppler and space-time steering vectors for a uniform linear
//! array observing a train of coherent pulses.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{unit_phasor, Real};

/// Uniform linear array with `n_elements` receivers processing `n_pulses`
/// pulses per coherent interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    pub n_pulses: usize,
    /// Element spacing in wavelengths, d/λ.
    pub element_spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, n_pulses: usize, element_spacing_wavelengths: f64) -> Result<Self> {
        let g = Self {
            n_elements,
            n_pulses,
            element_spacing_wavelengths,
        };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(n_elements: usize, n_pulses: usize) -> Result<Self> {
        Self::new(n_elements, n_pulses, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 || self.n_pulses == 0 {
            return Err(invalid(format!(
                "geometry needs at least one element and one pulse (got N={}, L={})",
                self.n_elements, self.n_pulses
            )));
        }
        if !(self.element_spacing_wavelengths > 0.0) || !self.element_spacing_wavelengths.is_finite() {
            return Err(invalid(format!(
                "element spacing must be positive (got {})",
                self.element_spacing_wavelengths
            )));
        }
        Ok(())
    }

    /// Length of a space-time snapshot, N·L.
    pub fn snapshot_len(&self) -> usize {
        self.n_elements * self.n_pulses
    }

    /// Normalized spatial frequency `(d/λ)·cos θ` for azimuth θ in degrees.
    pub fn spatial_freq_from_azimuth(&self, azimuth_deg: f64) -> f64 {
        self.element_spacing_wavelengths * azimuth_deg.to_radians().cos()
    }

    /// Azimuth in degrees for a normalized spatial frequency, or `None` when
    /// the frequency lies outside the visible region `|f_s| ≤ d/λ`.
    pub fn azimuth_from_spatial_freq(&self, spatial_freq: f64) -> Option<f64> {
        let c = spatial_freq / self.element_spacing_wavelengths;
        (c.abs() <= 1.0).then(|| c.acos().to_degrees())
    }
}

/// Converts a Doppler shift in Hz to normalized Doppler (cycles per pulse).
pub fn normalized_doppler(doppler_hz: f64, prf_hz: f64) -> f64 {
    doppler_hz / prf_hz
}

/// Wraps a normalized frequency into `[-0.5, 0.5)`.
pub fn wrap_frequency(f: f64) -> f64 {
    let w = f - f.floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Rectangular grid over the normalized angle-Doppler plane.
///
/// Cell `(m, n)` (spatial bin `m`, Doppler bin `n`) has flat index
/// `m·n_doppler + n`, which is also its dictionary column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDopplerGrid {
    pub spatial_freqs: Vec<f64>,
    pub doppler_freqs: Vec<f64>,
}

impl AngleDopplerGrid {
    /// Uniform grid with bins at `-0.5 + i/n` on each axis.
    pub fn uniform(n_spatial: usize, n_doppler: usize) -> Result<Self> {
        let axis = |n: usize| (0..n).map(|i| -0.5 + i as f64 / n as f64).collect::<Vec<_>>();
        Self::new(axis(n_spatial), axis(n_doppler))
    }

    pub fn new(spatial_freqs: Vec<f64>, doppler_freqs: Vec<f64>) -> Result<Self> {
        let g = Self {
            spatial_freqs,
            doppler_freqs,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("spatial", &self.spatial_freqs)?;
        check_axis("Doppler", &self.doppler_freqs)
    }

    pub fn n_spatial(&self) -> usize {
        self.spatial_freqs.len()
    }

    pub fn n_doppler(&self) -> usize {
        self.doppler_freqs.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_spatial() * self.n_doppler()
    }

    pub fn flat_index(&self, spatial_bin: usize, doppler_bin: usize) -> usize {
        spatial_bin * self.n_doppler() + doppler_bin
    }

    /// `(spatial_bin, doppler_bin)` of a flat index.
    pub fn cell(&self, flat: usize) -> (usize, usize) {
        (flat / self.n_doppler(), flat % self.n_doppler())
    }

    /// Nearest spatial bin on the circle of normalized frequencies.
    pub fn nearest_spatial_bin(&self, f: f64) -> usize {
        nearest_bin(&self.spatial_freqs, f)
    }

    pub fn nearest_doppler_bin(&self, f: f64) -> usize {
        nearest_bin(&self.doppler_freqs, f)
    }

    /// Flat index of the grid cell closest to `(f_s, f_d)`.
    pub fn nearest_cell(&self, spatial_freq: f64, doppler_freq: f64) -> usize {
        self.flat_index(
            self.nearest_spatial_bin(spatial_freq),
            self.nearest_doppler_bin(doppler_freq),
        )
    }
}

fn check_axis(name: &str, freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(invalid(format!("{name} axis of the grid is empty")));
    }
    if freqs.iter().any(|f| !(-0.5..0.5).contains(f)) {
        return Err(invalid(format!("{name} frequencies must lie in [-0.5, 0.5)")));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{name} frequencies must be strictly increasing")));
    }
    Ok(())
}

fn nearest_bin(axis: &[f64], f: f64) -> usize {
    let circ = |a: f64| {
        let d = wrap_frequency(a - f).abs();
        d.min(1.0 - d)
    };
    let mut best = 0;
    for (i, &a) in axis.iter().enumerate() {
        if circ(a) < circ(axis[best]) {
            best = i;
        }
    }
    best
}

fn phase_ramp<T: Real>(freq: T, len: usize) -> Vec<Complex<T>> {
    (0..len).map(|k| unit_phasor(T::of(k as f64) * freq)).collect()
}

/// Spatial steering vector, entry `k` equal to `exp(j2πk·f_s)`.
pub fn spatial_steering<T: Real>(spatial_freq: T, n_elements: usize) -> Result<Vec<Complex<T>>> {
    if n_elements == 0 {
        return Err(invalid("spatial steering needs at least one element"));
    }
    Ok(phase_ramp(spatial_freq, n_elements))
}

/// Doppler steering vector, entry `k` equal to `exp(j2πk·f_d)`.
pub fn doppler_steering<T: Real>(doppler_freq: T, n_pulses: usize) -> Result<Vec<Complex<T>>> {
    if n_pulses == 0 {
        return Err(invalid("Doppler steering needs at least one pulse"));
    }
    Ok(phase_ramp(doppler_freq, n_pulses))
}

/// Space-time steering vector `spatial ⊗ doppler`, entry `n·L + l` equal to
/// `exp(j2π(n·f_s + l·f_d))`. Not normalized: its norm is √(N·L).
pub fn space_time_steering<T: Real>(
    spatial_freq: T,
    doppler_freq: T,
    geometry: &ArrayGeometry,
) -> Result<Vec<Complex<T>>> {
    geometry.validate()?;
    let s = spatial_steering(spatial_freq, geometry.n_elements)?;
    let d = doppler_steering(doppler_freq, geometry.n_pulses)?;
    Ok(kron(&s, &d))
}

/// Kronecker product of two vectors, outer index from `a`.
pub fn kron<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Vec<Complex<T>> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_vec(v: &[Complex<f64>], expected: &[(f64, f64)]) {
        assert_eq!(v.len(), expected.len());
        for (z, &(re, im)) in v.iter().zip(expected) {
            assert_abs_diff_eq!(z.re, re, epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, im, epsilon = 1e-12);
        }
    }

    #[test]
    fn spatial_examples() {
        assert_vec(&spatial_steering(0.0, 4).unwrap(), &[(1.0, 0.0); 4]);
        assert_vec(
            &spatial_steering(0.25, 4).unwrap(),
            &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)],
        );
        assert_vec(&spatial_steering(0.5, 3).unwrap(), &[(1.0, 0.0), (-1.0, 0.0), (1.0, 0.0)]);
        assert!(spatial_steering::<f64>(0.1, 0).is_err());
    }

    #[test]
    fn doppler_examples() {
        assert_vec(&doppler_steering(0.0, 3).unwrap(), &[(1.0, 0.0); 3]);
        assert_vec(&doppler_steering(0.25, 2).unwrap(), &[(1.0, 0.0), (0.0, 1.0)]);
        assert_vec(&doppler_steering(-0.5, 3).unwrap(), &[(1.0, 0.0), (-1.0, 0.0), (1.0, 0.0)]);
        assert!(doppler_steering::<f64>(0.1, 0).is_err());
    }

    #[test]
    fn space_time_examples() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        assert_vec(&space_time_steering(0.0, 0.0, &g).unwrap(), &[(1.0, 0.0); 4]);
        assert_vec(
            &space_time_steering(0.5, 0.25, &g).unwrap(),
            &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)],
        );
    }

    #[test]
    fn f32_steering_is_supported() {
        let v = spatial_steering(0.25f32, 4).unwrap();
        assert!((v[1].im - 1.0).abs() < 1e-6);
    }

    #[test]
    fn geometry_rejects_bad_values() {
        assert!(ArrayGeometry::new(0, 4, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 0, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.0).is_err());
    }

    #[test]
    fn azimuth_round_trip() {
        let g = ArrayGeometry::half_wavelength(14, 16).unwrap();
        let f = g.spatial_freq_from_azimuth(70.0);
        assert_abs_diff_eq!(f, 0.5 * 70f64.to_radians().cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.azimuth_from_spatial_freq(f).unwrap(), 70.0, epsilon = 1e-9);
        assert!(g.azimuth_from_spatial_freq(0.6).is_none());
    }

    #[test]
    fn grid_validation_and_indexing() {
        let g = AngleDopplerGrid::uniform(3, 4).unwrap();
        assert_eq!(g.n_cells(), 12);
        assert_eq!(g.flat_index(2, 1), 9);
        assert_eq!(g.cell(9), (2, 1));
        assert!(AngleDopplerGrid::new(vec![0.1, 0.1], vec![0.0]).is_err());
        assert!(AngleDopplerGrid::new(vec![0.5], vec![0.0]).is_err());
        assert!(AngleDopplerGrid::new(vec![], vec![0.0]).is_err());
    }

    #[test]
    fn nearest_bin_wraps_around() {
        let g = AngleDopplerGrid::uniform(64, 64).unwrap();
        assert_eq!(g.nearest_spatial_bin(0.49999), 0);
        assert_eq!(g.nearest_doppler_bin(-0.15625), 22);
        assert_eq!(g.nearest_spatial_bin(0.5 * 70f64.to_radians().cos()), 43);
    }

    #[test]
    fn wrap_frequency_range() {
        assert_abs_diff_eq!(wrap_frequency(0.75), -0.25);
        assert_abs_diff_eq!(wrap_frequency(-0.5), -0.5);
        assert_abs_diff_eq!(wrap_frequency(0.5), -0.5);
    }
}
