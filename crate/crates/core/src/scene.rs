//! Synthetic radar scenes: point scatterers on the angle-Doppler plane,
//! range-cell data cubes and the mountaintop-analog preset.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::steering::{normalized_doppler, wrap_frequency, AngleDopplerGrid, ArrayGeometry};

/// Point scatterer with complex amplitude α at `(f_s, f_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub spatial_freq: f64,
    pub doppler_freq: f64,
    pub amplitude: Complex<f64>,
    /// Standard deviation of a circular complex Gaussian perturbation of the
    /// amplitude, drawn independently per snapshot.
    #[serde(default)]
    pub fluctuation_stddev: f64,
}

impl Scatterer {
    pub fn new(spatial_freq: f64, doppler_freq: f64, amplitude: Complex<f64>) -> Self {
        Self {
            spatial_freq,
            doppler_freq,
            amplitude,
            fluctuation_stddev: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |f: f64| (-0.5..0.5).contains(&f);
        if !ok(self.spatial_freq) || !ok(self.doppler_freq) {
            return Err(invalid(format!(
                "scatterer frequencies must lie in [-0.5, 0.5) (got f_s={}, f_d={})",
                self.spatial_freq, self.doppler_freq
            )));
        }
        if !(self.fluctuation_stddev >= 0.0) {
            return Err(invalid("fluctuation_stddev must be non-negative"));
        }
        Ok(())
    }

    fn snapped(&self, grid: &AngleDopplerGrid) -> Self {
        Self {
            spatial_freq: grid.spatial_freqs[grid.nearest_spatial_bin(self.spatial_freq)],
            doppler_freq: grid.doppler_freqs[grid.nearest_doppler_bin(self.doppler_freq)],
            ..*self
        }
    }
}

/// A scatterer present only in one range cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub range_cell: usize,
    pub scatterer: Scatterer,
}

/// Everything needed to regenerate a data cube bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    pub n_range_cells: usize,
    #[serde(default)]
    pub clutter: Vec<Scatterer>,
    #[serde(default)]
    pub targets: Vec<Target>,
    /// Noise variance σ² per complex sample.
    pub noise_power: f64,
    #[serde(default)]
    pub prf_hz: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.n_range_cells == 0 {
            return Err(invalid("scenario needs at least one range cell"));
        }
        if !(self.noise_power >= 0.0) || !self.noise_power.is_finite() {
            return Err(invalid("noise_power must be a non-negative number"));
        }
        if let Some(prf) = self.prf_hz {
            if !(prf > 0.0) {
                return Err(invalid("prf_hz must be positive"));
            }
        }
        for s in &self.clutter {
            s.validate()?;
        }
        for t in &self.targets {
            if t.range_cell >= self.n_range_cells {
                return Err(invalid(format!(
                    "target range cell {} outside 0..{}",
                    t.range_cell, self.n_range_cells
                )));
            }
            t.scatterer.validate()?;
        }
        Ok(())
    }

    /// Copy with every scatterer moved to its nearest grid cell.
    pub fn snapped_to_grid(&self, grid: &AngleDopplerGrid) -> Self {
        Self {
            clutter: self.clutter.iter().map(|s| s.snapped(grid)).collect(),
            targets: self
                .targets
                .iter()
                .map(|t| Target {
                    range_cell: t.range_cell,
                    scatterer: t.scatterer.snapped(grid),
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Scatterers contributing to one range cell.
    pub fn scatterers_in_cell(&self, cell: usize) -> Vec<Scatterer> {
        let mut all = self.clutter.clone();
        all.extend(self.targets.iter().filter(|t| t.range_cell == cell).map(|t| t.scatterer));
        all
    }
}

/// Range-cell snapshots of one coherent processing interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube<T> {
    pub geometry: ArrayGeometry,
    pub n_range_cells: usize,
    pub snapshots: Vec<Vec<Complex<T>>>,
}

impl<T: Real> DataCube<T> {
    pub fn new(geometry: ArrayGeometry, snapshots: Vec<Vec<Complex<T>>>) -> Result<Self> {
        geometry.validate()?;
        let len = geometry.snapshot_len();
        if let Some(bad) = snapshots.iter().position(|s| s.len() != len) {
            return Err(invalid(format!("snapshot {bad} does not have length N·L = {len}")));
        }
        Ok(Self {
            geometry,
            n_range_cells: snapshots.len(),
            snapshots,
        })
    }

    pub fn snapshot(&self, cell: usize) -> &[Complex<T>] {
        &self.snapshots[cell]
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex<f64> {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * s, im * s)
}

/// `Σ αᵢ·φ(f_s,i, f_d,i) + w` with unnormalized steering vectors and
/// circular complex Gaussian noise of variance `noise_power` per entry.
pub fn synthesize_snapshot<T: Real, R: Rng + ?Sized>(
    scatterers: &[Scatterer],
    geometry: &ArrayGeometry,
    noise_power: f64,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    geometry.validate()?;
    let (n, l) = (geometry.n_elements, geometry.n_pulses);
    let mut out = vec![Complex::<f64>::zero(); n * l];
    for s in scatterers {
        let mut alpha = s.amplitude;
        if s.fluctuation_stddev > 0.0 {
            alpha += complex_gaussian(rng, s.fluctuation_stddev * s.fluctuation_stddev);
        }
        for k in 0..n {
            for li in 0..l {
                let phase = k as f64 * s.spatial_freq + li as f64 * s.doppler_freq;
                out[k * l + li] += alpha * Complex::from_polar(1.0, std::f64::consts::TAU * phase);
            }
        }
    }
    if noise_power > 0.0 {
        for z in out.iter_mut() {
            *z += complex_gaussian(rng, noise_power);
        }
    }
    Ok(out.into_iter().map(|z| Complex::new(T::of(z.re), T::of(z.im))).collect())
}

/// Random stream for one range cell, independent of every other cell.
pub fn cell_rng(seed: u64, cell: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    rng
}

/// Generates the full cube. Each range cell draws from its own substream, so
/// the result is a pure function of the configuration.
pub fn synthesize_cube<T: Real>(config: &ScenarioConfig) -> Result<DataCube<T>> {
    config.validate()?;
    let snapshots = (0..config.n_range_cells)
        .map(|cell| {
            let mut rng = cell_rng(config.seed, cell);
            synthesize_snapshot(
                &config.scatterers_in_cell(cell),
                &config.geometry,
                config.noise_power,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    DataCube::new(config.geometry, snapshots)
}

/// Constants of the mountaintop-analog scene.
pub mod mountaintop {
    pub const N_ELEMENTS: usize = 14;
    pub const N_PULSES: usize = 16;
    pub const ELEMENT_SPACING_WAVELENGTHS: f64 = 0.5;
    pub const N_RANGE_CELLS: usize = 100;
    pub const TARGET_CELL: usize = 50;
    pub const CLUTTER_AZIMUTH_DEG: f64 = 70.0;
    pub const TARGET_AZIMUTH_DEG: f64 = 100.0;
    pub const DOPPLER_HZ: f64 = -150.0;
    /// Puts -150 Hz at -0.15625 cycles/pulse, a bin centre of the default 64-bin grid.
    pub const PRF_HZ: f64 = 960.0;
    pub const N_CLUTTER_PATCHES: usize = 11;
    /// Spatial and Doppler step between neighbouring ridge patches. One
    /// Doppler resolution cell (1/L), so ridge patches are mutually orthogonal.
    pub const RIDGE_STEP: f64 = 1.0 / 16.0;
    pub const NOISE_POWER: f64 = 1.0;
    /// Share of each patch's power that fluctuates independently per range
    /// cell; the rest is a fixed amplitude common to all cells.
    pub const CLUTTER_DIFFUSE_FRACTION: f64 = 0.25;
}

/// Synthetic analog of the 14-element, 16-pulse mountaintop collection.
///
/// A ridge of 11 equal-power clutter patches is centred at 70° azimuth and
/// −150 Hz. Neighbouring patches step by 1/16 in both normalized frequencies.
/// One target sits at 100° azimuth with the centre patch's Doppler in range
/// cell 50. `cnr_db` fixes total clutter power over noise, `snr_db` the
/// target power over noise, both per sample. Each patch carries a fixed
/// amplitude plus independent per-cell complex Gaussian fluctuation holding
/// [`mountaintop::CLUTTER_DIFFUSE_FRACTION`] of its power.
pub fn mountaintop_analog_preset(cnr_db: f64, snr_db: f64) -> ScenarioConfig {
    mountaintop_analog_preset_with(cnr_db, snr_db, mountaintop::CLUTTER_DIFFUSE_FRACTION)
}

/// [`mountaintop_analog_preset`] with an explicit fluctuating power share in
/// [0, 1]: 0 gives identical clutter in every cell, 1 fully random patches.
pub fn mountaintop_analog_preset_with(cnr_db: f64, snr_db: f64, diffuse_fraction: f64) -> ScenarioConfig {
    use mountaintop::*;
    let diffuse_fraction = diffuse_fraction.clamp(0.0, 1.0);
    let geometry = ArrayGeometry {
        n_elements: N_ELEMENTS,
        n_pulses: N_PULSES,
        element_spacing_wavelengths: ELEMENT_SPACING_WAVELENGTHS,
    };
    let f_d = normalized_doppler(DOPPLER_HZ, PRF_HZ);
    let f_s_clutter = geometry.spatial_freq_from_azimuth(CLUTTER_AZIMUTH_DEG);
    let f_s_target = geometry.spatial_freq_from_azimuth(TARGET_AZIMUTH_DEG);

    let patch_power = NOISE_POWER * 10f64.powf(cnr_db / 10.0) / N_CLUTTER_PATCHES as f64;
    let half = (N_CLUTTER_PATCHES / 2) as i64;
    let clutter = (-half..=half)
        .map(|j| {
            // fixed, well-spread phases
            let phase = (j as f64 * 0.618_033_988_749_895).rem_euclid(1.0);
            let mut s = Scatterer::new(
                wrap_frequency(f_s_clutter + j as f64 * RIDGE_STEP),
                wrap_frequency(f_d + j as f64 * RIDGE_STEP),
                Complex::from_polar(
                    (patch_power * (1.0 - diffuse_fraction)).sqrt(),
                    std::f64::consts::TAU * phase,
                ),
            );
            s.fluctuation_stddev = (patch_power * diffuse_fraction).sqrt();
            s
        })
        .collect();
    let target = Target {
        range_cell: TARGET_CELL,
        scatterer: Scatterer::new(
            f_s_target,
            f_d,
            Complex::new((NOISE_POWER * 10f64.powf(snr_db / 10.0)).sqrt(), 0.0),
        ),
    };
    ScenarioConfig {
        geometry,
        n_range_cells: N_RANGE_CELLS,
        clutter,
        targets: vec![target],
        noise_power: NOISE_POWER,
        prf_hz: Some(PRF_HZ),
        seed: 0,
    }
}
