//! Clutter filters on the sparse angle-Doppler map: single- and
//! multi-snapshot annihilation and iterative sidelobe suppression.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{coherence_row, Dictionary, SteeringDictionary};
use crate::error::{invalid, Result, StapError};
use crate::scalar::Real;
use crate::solvers::{solve, SolverConfig};
use crate::steering::AngleDopplerGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapConfig {
    /// Number of leading sorted magnitudes searched for the gap.
    /// `None` means min(4·N, N_s·N_d/8).
    pub search_limit: Option<usize>,
    /// A gap ratio at or below this triggers the energy fallback.
    pub min_ratio: f64,
    /// Energy fraction zeroed when no clear gap exists. `None` turns the
    /// fallback off and accepts whatever gap was found.
    pub energy_fallback: Option<f64>,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            search_limit: None,
            min_ratio: 3.0,
            energy_fallback: Some(0.9),
        }
    }
}

impl GapConfig {
    pub fn resolved_search_limit(&self, n_elements: usize, n_cells: usize) -> usize {
        let lim = self.search_limit.unwrap_or((4 * n_elements).min(n_cells / 8));
        lim.clamp(1, n_cells.saturating_sub(1).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.search_limit == Some(0) {
            return Err(invalid("gap search_limit must be at least 1"));
        }
        if !(self.min_ratio >= 1.0) {
            return Err(invalid("gap min_ratio must be at least 1"));
        }
        if let Some(f) = self.energy_fallback {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid("energy_fallback must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// How training solutions are combined into one map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Robust {
    #[default]
    Mean,
    /// Coordinatewise median of moduli, carrying the phase of the mean.
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SidelobeConfig {
    /// Δ: columns at least this coherent with the peak are zeroed with it.
    pub coherence_threshold: f64,
    /// Stop once training-map energy is at most this fraction of its start.
    pub residue_fraction: f64,
    /// `None` allows one peak per grid cell.
    pub max_peaks: Option<usize>,
}

impl Default for SidelobeConfig {
    fn default() -> Self {
        Self {
            coherence_threshold: 0.9,
            residue_fraction: 0.05,
            max_peaks: None,
        }
    }
}

impl SidelobeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.coherence_threshold > 0.0 && self.coherence_threshold <= 1.0) {
            return Err(invalid("coherence_threshold must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.residue_fraction) {
            return Err(invalid("residue_fraction must lie in [0, 1]"));
        }
        if self.max_peaks == Some(0) {
            return Err(invalid("max_peaks must be at least 1"));
        }
        Ok(())
    }
}

/// Leading map entries judged to be clutter.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterSupport<T> {
    /// Flat grid indices, largest magnitude first.
    pub indices: Vec<usize>,
    pub magnitudes: Vec<T>,
    pub gap_index: usize,
    pub gap_ratio: T,
    /// True when the energy fallback chose `gap_index`.
    pub from_energy_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidelobeIteration<T> {
    pub iter: usize,
    pub peak_index: usize,
    pub neighborhood_size: usize,
    /// Training-map energy left after this iteration.
    pub residue_energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T> {
    pub magnitude_map: Vec<T>,
    /// Ascending flat indices.
    pub zeroed_indices: Vec<usize>,
    pub diagnostics: Vec<SidelobeIteration<T>>,
    pub support: Option<ClutterSupport<T>>,
    /// Unfiltered test-snapshot solution.
    pub test_coefficients: Vec<Complex<T>>,
    /// Aggregated training map before any zeroing, for multi-snapshot filters.
    pub training_map: Option<Vec<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> FilterOutput<T> {
    pub fn input_map(&self) -> Vec<T> {
        moduli(&self.test_coefficients)
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.magnitude_map)
    }

    /// One row per grid cell: `spatial_index,doppler_index,magnitude,zeroed`.
    pub fn map_csv(&self, grid: &AngleDopplerGrid) -> String {
        let mut zeroed = vec![false; self.magnitude_map.len()];
        for &i in &self.zeroed_indices {
            zeroed[i] = true;
        }
        let mut s = String::from("spatial_index,doppler_index,magnitude,zeroed\n");
        for (i, m) in self.magnitude_map.iter().enumerate() {
            let (a, d) = grid.cell(i);
            let _ = writeln!(s, "{a},{d},{m},{}", u8::from(zeroed[i]));
        }
        s
    }

    /// `iter,peak_index,neighborhood_size,residue_energy`
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("iter,peak_index,neighborhood_size,residue_energy\n");
        for d in &self.diagnostics {
            let _ = writeln!(s, "{},{},{},{}", d.iter, d.peak_index, d.neighborhood_size, d.residue_energy);
        }
        s
    }
}

pub fn moduli<T: Real>(x: &[Complex<T>]) -> Vec<T> {
    x.iter().map(|z| z.norm()).collect()
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<T: Real>(map: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in map.iter().enumerate() {
        if *v > map[best] {
            best = i;
        }
    }
    best
}

pub fn map_energy<T: Real>(map: &[T]) -> T {
    map.iter().map(|v| *v * *v).sum()
}

/// Finds the split `k` maximizing `m[k−1]/m[k]` for `k` in `1..=search_limit`.
///
/// Returns `(k, ratio)`. A zero denominator ends the search with ratio `+∞`.
pub fn estimate_gap_index<T: Real>(magnitudes_desc: &[T], search_limit: usize) -> Result<(usize, T)> {
    if magnitudes_desc.is_empty() {
        return Err(invalid("gap search needs a nonempty vector"));
    }
    if search_limit == 0 || search_limit >= magnitudes_desc.len() {
        return Err(invalid(format!(
            "search_limit {search_limit} must lie in 1..={}",
            magnitudes_desc.len() - 1
        )));
    }
    if magnitudes_desc.windows(2).any(|w| w[1] > w[0]) || magnitudes_desc.iter().any(|v| !(*v >= T::zero())) {
        return Err(invalid("magnitudes must be nonnegative and sorted descending"));
    }
    let mut best = (0, T::one());
    for k in 1..=search_limit {
        let (num, den) = (magnitudes_desc[k - 1], magnitudes_desc[k]);
        if den.is_zero() {
            if num.is_zero() {
                break;
            }
            return Ok((k, T::infinity()));
        }
        let ratio = num / den;
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    if best.0 == 0 {
        return Err(StapError::NoGap {
            unzeroed_map: magnitudes_desc.iter().map(|v| v.as_f64()).collect(),
        });
    }
    Ok(best)
}

fn sorted_desc<T: Real>(map: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..map.len()).collect();
    order.sort_by(|&a, &b| map[b].partial_cmp(&map[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

/// Splits a magnitude map into clutter (leading entries) and the rest.
pub fn clutter_support<T: Real>(map: &[T], n_elements: usize, gap: &GapConfig) -> Result<ClutterSupport<T>> {
    gap.validate()?;
    if map.len() < 2 {
        return Err(invalid("map needs at least two cells"));
    }
    let order = sorted_desc(map);
    let sorted: Vec<T> = order.iter().map(|&i| map[i]).collect();
    let limit = gap.resolved_search_limit(n_elements, map.len());
    let found = estimate_gap_index(&sorted, limit);
    let weak = match &found {
        Ok((_, ratio)) => *ratio <= T::of(gap.min_ratio),
        Err(StapError::NoGap { .. }) => true,
        Err(_) => false,
    };
    let (k, ratio, fallback) = match (found, gap.energy_fallback) {
        (Ok((_, ratio)), Some(frac)) if weak => (energy_prefix(&sorted, frac), ratio, true),
        (Ok((k, ratio)), _) => (k, ratio, false),
        (Err(StapError::NoGap { .. }), Some(frac)) => (energy_prefix(&sorted, frac), T::one(), true),
        (Err(StapError::NoGap { .. }), None) => {
            return Err(StapError::NoGap {
                unzeroed_map: map.iter().map(|v| v.as_f64()).collect(),
            })
        }
        (Err(e), _) => return Err(e),
    };
    Ok(ClutterSupport {
        indices: order[..k].to_vec(),
        magnitudes: sorted[..k].to_vec(),
        gap_index: k,
        gap_ratio: ratio,
        from_energy_fallback: fallback,
    })
}

/// Shortest prefix of descending magnitudes holding `frac` of the energy.
fn energy_prefix<T: Real>(sorted: &[T], frac: f64) -> usize {
    let total = map_energy(sorted);
    let target = total * T::of(frac);
    let mut acc = T::zero();
    for (i, v) in sorted.iter().enumerate() {
        acc += *v * *v;
        if acc >= target {
            return i + 1;
        }
    }
    sorted.len()
}

fn fallback_warning<T: Real>(s: &ClutterSupport<T>) -> Option<String> {
    s.from_energy_fallback.then(|| {
        format!(
            "no gap above the ratio threshold (best {}); zeroed the {} largest entries by energy fraction",
            s.gap_ratio, s.gap_index
        )
    })
}

fn zero_indices<T: Real>(map: &mut [T], indices: &[usize]) -> Vec<usize> {
    for &i in indices {
        map[i] = T::zero();
    }
    let mut z = indices.to_vec();
    z.sort_unstable();
    z.dedup();
    z
}

fn check_snapshot<T: Real>(dict: &SteeringDictionary<T>, r: &[Complex<T>]) -> Result<()> {
    if r.len() != dict.n_rows() {
        return Err(invalid(format!(
            "snapshot has length {}, expected {}",
            r.len(),
            dict.n_rows()
        )));
    }
    Ok(())
}

/// Single-snapshot annihilation: solve, then zero the `k` largest entries
/// found by the gap rule.
pub fn annihilate_single<T: Real>(
    dict: &SteeringDictionary<T>,
    r_test: &[Complex<T>],
    solver: &SolverConfig<T>,
    gap: &GapConfig,
) -> Result<FilterOutput<T>> {
    check_snapshot(dict, r_test)?;
    let sol = solve(dict, r_test, solver)?;
    let mut map = moduli(&sol.coefficients);
    let support = clutter_support(&map, dict.geometry().n_elements, gap)?;
    let zeroed = zero_indices(&mut map, &support.indices);
    Ok(FilterOutput {
        magnitude_map: map,
        zeroed_indices: zeroed,
        diagnostics: Vec::new(),
        warnings: fallback_warning(&support).into_iter().collect(),
        support: Some(support),
        test_coefficients: sol.coefficients,
        training_map: None,
    })
}

/// Combines per-snapshot solutions coordinatewise.
pub fn aggregate<T: Real>(solutions: &[Vec<Complex<T>>], robust: Robust) -> Result<Vec<Complex<T>>> {
    let Some(first) = solutions.first() else {
        return Err(invalid("aggregation needs at least one solution"));
    };
    let n = first.len();
    if solutions.iter().any(|s| s.len() != n) {
        return Err(invalid("solutions differ in length"));
    }
    let k = T::of(solutions.len() as f64);
    let mean: Vec<Complex<T>> = (0..n)
        .map(|i| solutions.iter().map(|s| s[i]).fold(Complex::zero(), |a, b| a + b) / k)
        .collect();
    match robust {
        Robust::Mean => Ok(mean),
        Robust::Median => {
            let mut buf = Vec::with_capacity(solutions.len());
            Ok(mean
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    buf.clear();
                    buf.extend(solutions.iter().map(|s| s[i].norm()));
                    let med = median(&mut buf);
                    let mn = m.norm();
                    let phase = if mn > T::zero() { m / mn } else { Complex::new(T::one(), T::zero()) };
                    phase * med
                })
                .collect())
        }
    }
}

fn median<T: Real>(v: &mut [T]) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) * T::of(0.5)
    }
}

/// Solves every snapshot against one dictionary, in parallel.
pub fn solve_all<T: Real>(
    dict: &SteeringDictionary<T>,
    snapshots: &[Vec<Complex<T>>],
    solver: &SolverConfig<T>,
) -> Result<Vec<Vec<Complex<T>>>> {
    for r in snapshots {
        check_snapshot(dict, r)?;
    }
    snapshots
        .par_iter()
        .map(|r| solve(dict, r, solver).map(|s| s.coefficients))
        .collect()
}

/// Aggregated training solution and the clutter support read from it.
/// Depends on training data only.
pub fn training_clutter_support<T: Real>(
    dict: &SteeringDictionary<T>,
    r_train: &[Vec<Complex<T>>],
    solver: &SolverConfig<T>,
    gap: &GapConfig,
    robust: Robust,
) -> Result<(ClutterSupport<T>, Vec<Complex<T>>)> {
    if r_train.is_empty() {
        return Err(invalid("at least one training snapshot is required"));
    }
    let solutions = solve_all(dict, r_train, solver)?;
    let averaged = aggregate(&solutions, robust)?;
    let support = clutter_support(&moduli(&averaged), dict.geometry().n_elements, gap)?;
    Ok((support, averaged))
}

/// Multi-snapshot annihilation: clutter positions come from the aggregated
/// training map and are zeroed in the test map.
pub fn annihilate_multi<T: Real>(
    dict: &SteeringDictionary<T>,
    r_train: &[Vec<Complex<T>>],
    r_test: &[Complex<T>],
    solver: &SolverConfig<T>,
    gap: &GapConfig,
    robust: Robust,
) -> Result<FilterOutput<T>> {
    check_snapshot(dict, r_test)?;
    if r_train.is_empty() {
        return Err(invalid("at least one training snapshot is required"));
    }
    let solutions = solve_all(dict, r_train, solver)?;
    let test = solve(dict, r_test, solver)?;
    annihilate_multi_solved(dict, &solutions, test.coefficients, gap, robust)
}

/// [`annihilate_multi`] on solutions computed beforehand.
pub fn annihilate_multi_solved<T: Real>(
    dict: &SteeringDictionary<T>,
    train_solutions: &[Vec<Complex<T>>],
    test_solution: Vec<Complex<T>>,
    gap: &GapConfig,
    robust: Robust,
) -> Result<FilterOutput<T>> {
    if train_solutions.is_empty() {
        return Err(invalid("at least one training solution is required"));
    }
    if test_solution.len() != dict.n_cols() {
        return Err(invalid("test solution length does not match dictionary"));
    }
    let averaged = aggregate(train_solutions, robust)?;
    let training_map = moduli(&averaged);
    let support = clutter_support(&training_map, dict.geometry().n_elements, gap)?;
    let mut map = moduli(&test_solution);
    let zeroed = zero_indices(&mut map, &support.indices);
    Ok(FilterOutput {
        magnitude_map: map,
        zeroed_indices: zeroed,
        diagnostics: Vec::new(),
        warnings: fallback_warning(&support).into_iter().collect(),
        support: Some(support),
        test_coefficients: test_solution,
        training_map: Some(training_map),
    })
}

/// Iterative sidelobe suppression.
///
/// Repeatedly takes the peak of the aggregated training map and zeroes every
/// cell whose column coherence with the peak is at least Δ, in both the
/// training map and the test map, until the training map's energy drops to
/// the configured fraction of its initial value.
pub fn sidelobe_suppress<T: Real>(
    dict: &SteeringDictionary<T>,
    r_train: &[Vec<Complex<T>>],
    r_test: &[Complex<T>],
    solver: &SolverConfig<T>,
    cfg: &SidelobeConfig,
    robust: Robust,
) -> Result<FilterOutput<T>> {
    cfg.validate()?;
    check_snapshot(dict, r_test)?;
    if r_train.is_empty() {
        return Err(invalid("at least one training snapshot is required"));
    }
    let solutions = solve_all(dict, r_train, solver)?;
    let test = solve(dict, r_test, solver)?;
    sidelobe_suppress_solved(dict, &solutions, test.coefficients, cfg, robust)
}

/// [`sidelobe_suppress`] on solutions computed beforehand.
pub fn sidelobe_suppress_solved<T: Real>(
    dict: &SteeringDictionary<T>,
    train_solutions: &[Vec<Complex<T>>],
    test_solution: Vec<Complex<T>>,
    cfg: &SidelobeConfig,
    robust: Robust,
) -> Result<FilterOutput<T>> {
    let training_map = moduli(&aggregate(train_solutions, robust)?);
    let mut out = sidelobe_suppress_maps(dict, &training_map, moduli(&test_solution), cfg)?;
    out.test_coefficients = test_solution;
    Ok(out)
}

/// The suppression loop on precomputed maps.
pub fn sidelobe_suppress_maps<T: Real>(
    dict: &SteeringDictionary<T>,
    training_map: &[T],
    test_map: Vec<T>,
    cfg: &SidelobeConfig,
) -> Result<FilterOutput<T>> {
    cfg.validate()?;
    let n = dict.n_cols();
    if training_map.len() != n || test_map.len() != n {
        return Err(invalid(format!("maps must have length {n}")));
    }
    let mut x = training_map.to_vec();
    let mut x_test = test_map;
    let initial = map_energy(&x);
    let stop = initial * T::of(cfg.residue_fraction);
    let max_peaks = cfg.max_peaks.unwrap_or(n);
    let delta = T::of(cfg.coherence_threshold);
    let mut remaining = initial;
    let mut zeroed = vec![false; n];
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();

    while remaining > stop && remaining > T::zero() {
        if diagnostics.len() == max_peaks {
            warnings.push(format!(
                "stopped after max_peaks = {max_peaks} with residue fraction {}",
                (remaining / initial).as_f64()
            ));
            break;
        }
        let peak = argmax(&x);
        let coh = coherence_row(dict, peak)?;
        let mut size = 0;
        for (k, c) in coh.iter().enumerate() {
            if k == peak || *c >= delta {
                x[k] = T::zero();
                x_test[k] = T::zero();
                zeroed[k] = true;
                size += 1;
            }
        }
        remaining = map_energy(&x);
        diagnostics.push(SidelobeIteration {
            iter: diagnostics.len() + 1,
            peak_index: peak,
            neighborhood_size: size,
            residue_energy: remaining,
        });
    }

    Ok(FilterOutput {
        magnitude_map: x_test,
        zeroed_indices: (0..n).filter(|&i| zeroed[i]).collect(),
        diagnostics,
        support: None,
        test_coefficients: Vec::new(),
        training_map: Some(training_map.to_vec()),
        warnings,
    })
}
