//! Angle and range scans, SCR improvement and heatmap export.

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::baseline::{estimate_covariance_with, matched_filter_map, smi_spectrum, DiagonalLoading};
use crate::dictionary::SteeringDictionary;
use crate::error::{invalid, Result, StapError};
use crate::filters::{
    annihilate_multi_solved, clutter_support, moduli, sidelobe_suppress_solved, solve_all, FilterOutput, GapConfig,
    Robust, SidelobeConfig,
};
use crate::scalar::Real;
use crate::scene::DataCube;
use crate::solvers::SolverConfig;
use crate::steering::AngleDopplerGrid;

/// Scans report zero magnitudes at this level instead of −∞.
pub const DB_FLOOR: f64 = -120.0;

/// Floor on the strongest non-target entry in SCR ratios.
pub const SCR_FLOOR: f64 = 1e-12;

/// Heatmap dynamic range below the map maximum.
pub const PGM_DB_RANGE: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub axis_values: Vec<f64>,
    /// One response vector per method, aligned with `axis_values`.
    pub responses_db: Vec<Vec<f64>>,
    pub method_labels: Vec<String>,
}

impl ScanResult {
    pub fn new(axis_values: Vec<f64>, method_labels: Vec<String>, responses_db: Vec<Vec<f64>>) -> Result<Self> {
        if method_labels.len() != responses_db.len() || responses_db.iter().any(|r| r.len() != axis_values.len()) {
            return Err(invalid("scan axis, labels and responses must have matching lengths"));
        }
        Ok(Self {
            axis_values,
            responses_db,
            method_labels,
        })
    }

    pub fn response(&self, label: &str) -> Option<&[f64]> {
        self.method_labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.responses_db[i].as_slice())
    }

    /// Header `axis,<method>_db,...`, one row per axis value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis");
        for l in &self.method_labels {
            let _ = write!(s, ",{l}_db");
        }
        s.push('\n');
        for (i, a) in self.axis_values.iter().enumerate() {
            let _ = write!(s, "{a}");
            for r in &self.responses_db {
                let _ = write!(s, ",{}", r[i]);
            }
            s.push('\n');
        }
        s
    }
}

fn to_db(value: f64, reference: f64) -> f64 {
    let db = 20.0 * (value / reference).log10();
    if db.is_nan() {
        DB_FLOOR
    } else {
        db.max(DB_FLOOR)
    }
}

/// Spatial slice of each map at one Doppler bin, in dB relative to the entry
/// at `normalize_at`. The axis is azimuth in degrees when every bin maps to a
/// real angle, else spatial frequency.
pub fn angle_scan<T: Real>(
    maps: &[(&str, &[T])],
    dict: &SteeringDictionary<T>,
    doppler_bin: usize,
    normalize_at: usize,
) -> Result<ScanResult> {
    let grid = dict.grid();
    if doppler_bin >= grid.n_doppler() || normalize_at >= grid.n_spatial() {
        return Err(invalid(format!(
            "bin ({normalize_at}, {doppler_bin}) outside a {}x{} grid",
            grid.n_spatial(),
            grid.n_doppler()
        )));
    }
    let geometry = dict.geometry();
    let azimuths: Option<Vec<f64>> = grid
        .spatial_freqs
        .iter()
        .map(|&f| geometry.azimuth_from_spatial_freq(f))
        .collect();
    let axis = azimuths.unwrap_or_else(|| grid.spatial_freqs.clone());
    let mut labels = Vec::new();
    let mut responses = Vec::new();
    for (label, map) in maps {
        if map.len() != grid.n_cells() {
            return Err(invalid(format!("map '{label}' does not match the grid")));
        }
        let slice: Vec<f64> = (0..grid.n_spatial())
            .map(|s| map[grid.flat_index(s, doppler_bin)].as_f64())
            .collect();
        let reference = slice[normalize_at];
        if !(reference > 0.0) {
            return Err(StapError::UndefinedReference(format!(
                "map '{label}' is zero at spatial bin {normalize_at}"
            )));
        }
        responses.push(slice.iter().map(|v| to_db(*v, reference)).collect());
        labels.push(label.to_string());
    }
    ScanResult::new(axis, labels, responses)
}

/// Training cells around a test cell, with guard cells on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingWindow {
    pub n_training: usize,
    /// Cells excluded on each side of the test cell.
    pub guard_cells: usize,
}

impl Default for TrainingWindow {
    fn default() -> Self {
        Self {
            n_training: 16,
            guard_cells: 5,
        }
    }
}

impl TrainingWindow {
    /// The `n_training` eligible cells nearest the test cell, split evenly on
    /// both sides where the cube allows and shifted inward at its edges.
    /// The test cell and guard cells are never included.
    pub fn cells(&self, test_cell: usize, n_range_cells: usize) -> Result<Vec<usize>> {
        if test_cell >= n_range_cells {
            return Err(invalid(format!("test cell {test_cell} outside {n_range_cells} range cells")));
        }
        if self.n_training == 0 {
            return Err(invalid("n_training must be at least 1"));
        }
        let mut eligible: Vec<usize> = (0..n_range_cells)
            .filter(|&c| c.abs_diff(test_cell) > self.guard_cells)
            .collect();
        if eligible.len() < self.n_training {
            return Err(StapError::InsufficientTraining {
                required: self.n_training,
                available: eligible.len(),
            });
        }
        eligible.sort_by_key(|&c| (c.abs_diff(test_cell), c));
        eligible.truncate(self.n_training);
        eligible.sort_unstable();
        Ok(eligible)
    }
}

/// A filter applied to one range cell of a cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", bound = "T: Real")]
pub enum RangeFilter<T> {
    AnnihilateSingle {
        solver: SolverConfig<T>,
        #[serde(default)]
        gap: GapConfig,
    },
    AnnihilateMulti {
        solver: SolverConfig<T>,
        #[serde(default)]
        gap: GapConfig,
        #[serde(default)]
        robust: Robust,
        #[serde(default)]
        training: TrainingWindow,
    },
    Sidelobe {
        solver: SolverConfig<T>,
        #[serde(default)]
        sidelobe: SidelobeConfig,
        #[serde(default)]
        robust: Robust,
        #[serde(default)]
        training: TrainingWindow,
    },
    Smi {
        #[serde(default)]
        loading: DiagonalLoading,
        #[serde(default)]
        training: TrainingWindow,
    },
    MatchedFilter,
}

impl<T: Real> RangeFilter<T> {
    pub fn label(&self) -> &'static str {
        match self {
            RangeFilter::AnnihilateSingle { .. } => "annihilate_single",
            RangeFilter::AnnihilateMulti { .. } => "annihilate_multi",
            RangeFilter::Sidelobe { .. } => "sidelobe",
            RangeFilter::Smi { .. } => "smi",
            RangeFilter::MatchedFilter => "matched_filter",
        }
    }

    fn solver(&self) -> Option<&SolverConfig<T>> {
        match self {
            RangeFilter::AnnihilateSingle { solver, .. }
            | RangeFilter::AnnihilateMulti { solver, .. }
            | RangeFilter::Sidelobe { solver, .. } => Some(solver),
            _ => None,
        }
    }
}

fn plain_output<T: Real>(map: Vec<T>) -> FilterOutput<T> {
    FilterOutput {
        magnitude_map: map,
        zeroed_indices: Vec::new(),
        diagnostics: Vec::new(),
        support: None,
        test_coefficients: Vec::new(),
        training_map: None,
        warnings: Vec::new(),
    }
}

fn check_cube<T: Real>(dict: &SteeringDictionary<T>, cube: &DataCube<T>) -> Result<()> {
    if cube.geometry.snapshot_len() != dict.geometry().snapshot_len() {
        return Err(invalid("cube and dictionary geometries disagree"));
    }
    Ok(())
}

fn output_from_solutions<T: Real>(
    dict: &SteeringDictionary<T>,
    n_range_cells: usize,
    solution: &dyn Fn(usize) -> Vec<Complex<T>>,
    cell: usize,
    filter: &RangeFilter<T>,
) -> Result<FilterOutput<T>> {
    match filter {
        RangeFilter::AnnihilateSingle { gap, .. } => {
            let coeffs = solution(cell);
            let mut map = moduli(&coeffs);
            let support = clutter_support(&map, dict.geometry().n_elements, gap)?;
            for &i in &support.indices {
                map[i] = T::zero();
            }
            let mut zeroed = support.indices.clone();
            zeroed.sort_unstable();
            let mut out = plain_output(map);
            out.zeroed_indices = zeroed;
            if support.from_energy_fallback {
                out.warnings.push("gap fallback to energy fraction".into());
            }
            out.support = Some(support);
            out.test_coefficients = coeffs;
            Ok(out)
        }
        RangeFilter::AnnihilateMulti {
            gap, robust, training, ..
        } => {
            let train: Vec<_> = training.cells(cell, n_range_cells)?.into_iter().map(solution).collect();
            annihilate_multi_solved(dict, &train, solution(cell), gap, *robust)
        }
        RangeFilter::Sidelobe {
            sidelobe,
            robust,
            training,
            ..
        } => {
            let train: Vec<_> = training.cells(cell, n_range_cells)?.into_iter().map(solution).collect();
            sidelobe_suppress_solved(dict, &train, solution(cell), sidelobe, *robust)
        }
        RangeFilter::Smi { .. } | RangeFilter::MatchedFilter => Err(invalid("filter does not use sparse solutions")),
    }
}

/// Runs `filter` on one range cell, drawing training cells from the cube.
pub fn apply_filter<T: Real>(
    dict: &SteeringDictionary<T>,
    cube: &DataCube<T>,
    cell: usize,
    filter: &RangeFilter<T>,
) -> Result<FilterOutput<T>> {
    check_cube(dict, cube)?;
    let m = cube.snapshots.len();
    if cell >= m {
        return Err(invalid(format!("range cell {cell} outside {m} cells")));
    }
    match filter {
        RangeFilter::Smi { loading, training } => smi_output(dict, cube, cell, *loading, training),
        RangeFilter::MatchedFilter => Ok(plain_output(matched_filter_map(dict, cube.snapshot(cell))?)),
        _ => {
            let solver = filter.solver().expect("sparse filter has a solver");
            let cells: Vec<usize> = match filter {
                RangeFilter::AnnihilateSingle { .. } => vec![cell],
                RangeFilter::AnnihilateMulti { training, .. } | RangeFilter::Sidelobe { training, .. } => {
                    let mut c = training.cells(cell, m)?;
                    c.push(cell);
                    c
                }
                _ => unreachable!(),
            };
            let snaps: Vec<_> = cells.iter().map(|&c| cube.snapshot(c).to_vec()).collect();
            let sols = solve_all(dict, &snaps, solver)?;
            let lookup = |c: usize| sols[cells.iter().position(|&x| x == c).expect("cell was solved")].clone();
            output_from_solutions(dict, m, &lookup, cell, filter)
        }
    }
}

fn smi_output<T: Real>(
    dict: &SteeringDictionary<T>,
    cube: &DataCube<T>,
    cell: usize,
    loading: DiagonalLoading,
    training: &TrainingWindow,
) -> Result<FilterOutput<T>> {
    let train: Vec<_> = training
        .cells(cell, cube.snapshots.len())?
        .into_iter()
        .map(|c| cube.snapshot(c).to_vec())
        .collect();
    let cov = estimate_covariance_with(&train, loading)?;
    Ok(plain_output(smi_spectrum(&cov, cube.snapshot(cell), dict)?))
}

/// Peak of the filter output in every range cell, in dB relative to the
/// peak at `target_cell`. Sparse filters solve each cell once and reuse the
/// solutions as training data for other cells.
pub fn range_scan<T: Real>(
    dict: &SteeringDictionary<T>,
    cube: &DataCube<T>,
    filter: &RangeFilter<T>,
    target_cell: usize,
) -> Result<ScanResult> {
    check_cube(dict, cube)?;
    let m = cube.snapshots.len();
    if m < 2 {
        return Err(invalid(format!("range scan needs at least 2 range cells, cube has {m}")));
    }
    if target_cell >= m {
        return Err(invalid(format!("target cell {target_cell} outside {m} cells")));
    }
    let peaks: Vec<f64> = match filter.solver() {
        Some(solver) => {
            let sols = solve_all(dict, &cube.snapshots, solver)?;
            let lookup = |c: usize| sols[c].clone();
            (0..m)
                .map(|c| output_from_solutions(dict, m, &lookup, c, filter).map(|o| peak(&o.magnitude_map)))
                .collect::<Result<_>>()?
        }
        None => (0..m)
            .map(|c| apply_filter(dict, cube, c, filter).map(|o| peak(&o.magnitude_map)))
            .collect::<Result<_>>()?,
    };
    let reference = peaks[target_cell];
    if !(reference > 0.0) {
        return Err(StapError::UndefinedReference(format!(
            "filter output at target cell {target_cell} is zero"
        )));
    }
    ScanResult::new(
        (0..m).map(|c| c as f64).collect(),
        vec![filter.label().to_string()],
        vec![peaks.iter().map(|p| to_db(*p, reference)).collect()],
    )
}

fn peak<T: Real>(map: &[T]) -> f64 {
    map.iter().fold(0.0f64, |m, v| m.max(v.as_f64()))
}

fn target_to_max_other<T: Real>(map: &[T], target: usize, which: &str) -> Result<f64> {
    let t = map[target].as_f64();
    if !(t > 0.0) {
        return Err(StapError::UndefinedMetric(format!("{which} map is zero at the target cell")));
    }
    let other = map
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .fold(0.0f64, |m, (_, v)| m.max(v.as_f64()))
        .max(SCR_FLOOR);
    Ok(t / other)
}

/// 20·log10 of the change in target-to-strongest-other ratio between maps.
pub fn scr_improvement<T: Real>(map_before: &[T], map_after: &[T], target_cell: usize) -> Result<f64> {
    if map_before.len() != map_after.len() || target_cell >= map_before.len() || map_before.len() < 2 {
        return Err(invalid("maps must be aligned, hold at least two cells and contain the target"));
    }
    let before = target_to_max_other(map_before, target_cell, "before")?;
    let after = target_to_max_other(map_after, target_cell, "after")?;
    Ok(20.0 * (after / before).log10())
}

/// 8-bit binary PGM: one column per spatial bin, one row per Doppler bin,
/// dB relative to the map maximum mapped linearly from [−60, 0] to [0, 255].
pub fn write_pgm<T: Real>(map: &[T], grid: &AngleDopplerGrid) -> Result<Vec<u8>> {
    if map.len() != grid.n_cells() {
        return Err(invalid("map does not match the grid"));
    }
    let (w, h) = (grid.n_spatial(), grid.n_doppler());
    let max = peak(map);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for d in 0..h {
        for s in 0..w {
            let v = map[grid.flat_index(s, d)].as_f64();
            let px = if max > 0.0 && v > 0.0 {
                let db = (20.0 * (v / max).log10()).clamp(-PGM_DB_RANGE, 0.0);
                ((db + PGM_DB_RANGE) / PGM_DB_RANGE * 255.0).round() as u8
            } else {
                0
            };
            out.push(px);
        }
    }
    Ok(out)
}
