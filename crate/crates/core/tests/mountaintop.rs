use std::collections::BTreeSet;

use cs_stap::filters::{clutter_support, moduli};
use cs_stap::scene::mountaintop;
use cs_stap::{
    angle_scan, apply_filter, build_dictionary, column_coherence, estimate_covariance, mountaintop_analog_preset,
    range_scan, solve, space_time_steering, synthesize_cube, AngleDopplerGrid, ArrayGeometry, DataCube,
    DiagonalLoading, Dictionary, GapConfig, RangeFilter, Robust, ScenarioConfig, SidelobeConfig, SolverConfig,
    SteeringDictionary, TrainingWindow,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn grid() -> AngleDopplerGrid {
    AngleDopplerGrid::uniform(64, 64).unwrap()
}

fn dict() -> SteeringDictionary<f64> {
    let cfg = mountaintop_analog_preset(40.0, 10.0);
    build_dictionary(&cfg.geometry, &grid()).unwrap()
}

fn scene(cnr_db: f64, seed: u64) -> ScenarioConfig {
    mountaintop_analog_preset(cnr_db, 10.0).with_seed(seed).snapped_to_grid(&grid())
}

fn clutter_cells(cfg: &ScenarioConfig) -> BTreeSet<usize> {
    let g = grid();
    cfg.clutter.iter().map(|s| g.nearest_cell(s.spatial_freq, s.doppler_freq)).collect()
}

fn target_cell(cfg: &ScenarioConfig) -> usize {
    let t = cfg.targets[0].scatterer;
    grid().nearest_cell(t.spatial_freq, t.doppler_freq)
}

fn noise_solver() -> SolverConfig<f64> {
    SolverConfig::greedy_for_noise(1.0, mountaintop::N_ELEMENTS * mountaintop::N_PULSES)
}

fn multi(window: TrainingWindow) -> RangeFilter<f64> {
    RangeFilter::AnnihilateMulti {
        solver: noise_solver(),
        gap: GapConfig::default(),
        robust: Robust::Mean,
        training: window,
    }
}

fn noise_only(geometry: ArrayGeometry, n_range_cells: usize, noise_power: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        geometry,
        n_range_cells,
        clutter: Vec::new(),
        targets: Vec::new(),
        noise_power,
        prf_hz: None,
        seed,
    }
}

#[test]
fn dictionary_columns_are_normalized_steering_vectors() {
    let d = dict();
    let g = grid();
    let geometry = d.geometry().clone();
    let scale = 1.0 / ((geometry.n_elements * geometry.n_pulses) as f64).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (s, t) = (rng.random_range(0..64), rng.random_range(0..64));
        let v = space_time_steering(g.spatial_freqs[s], g.doppler_freqs[t], &geometry).unwrap();
        let col = d.column(g.flat_index(s, t));
        for (a, b) in col.iter().zip(&v) {
            assert!((a - b * scale).norm() < 1e-12);
        }
    }
}

#[test]
fn adjacent_spatial_bins_have_dirichlet_coherence() {
    let d = dict();
    let g = grid();
    let n = mountaintop::N_ELEMENTS as f64;
    let delta = 1.0 / 64.0;
    let expected = ((std::f64::consts::PI * n * delta).sin() / (n * (std::f64::consts::PI * delta).sin())).abs();
    for (s, t) in [(0, 0), (10, 40), (62, 63)] {
        let mu = column_coherence(&d, g.flat_index(s, t), g.flat_index(s + 1, t)).unwrap();
        assert!((mu - expected).abs() < 1e-12, "{mu} vs {expected}");
    }
}

#[test]
fn monte_carlo_noise_power() {
    let geometry = ArrayGeometry::half_wavelength(2, 2).unwrap();
    let cube: DataCube<f64> = synthesize_cube(&noise_only(geometry, 25_000, 2.0, 3)).unwrap();
    let samples = cube.snapshots.iter().flatten();
    let power = samples.clone().map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
    assert!((power / 2.0 - 1.0).abs() < 0.02, "{power}");
}

#[test]
fn white_sample_covariance_approaches_identity() {
    let geometry = ArrayGeometry::half_wavelength(4, 4).unwrap();
    let cube: DataCube<f64> = synthesize_cube(&noise_only(geometry, 10_000, 1.0, 5)).unwrap();
    let cov = estimate_covariance(&cube.snapshots, 0.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..16 {
        for j in 0..16 {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((cov.matrix[(i, j)] - want).norm());
        }
    }
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn clutter_only_cell_has_gap_after_eleven_atoms() {
    let d = dict();
    let cfg = scene(40.0, 0);
    let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
    let sol = solve(&d, cube.snapshot(20), &noise_solver()).unwrap();
    let support = clutter_support(&moduli(&sol.coefficients), mountaintop::N_ELEMENTS, &GapConfig::default()).unwrap();
    assert_eq!(support.gap_index, 11);
    assert!(!support.from_energy_fallback);
    let found: BTreeSet<usize> = support.indices.iter().copied().collect();
    assert_eq!(found, clutter_cells(&cfg));
}

#[test]
fn training_support_zeroes_the_ridge_and_keeps_the_target() {
    let d = dict();
    let cfg = scene(40.0, 1);
    let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
    let out = apply_filter(&d, &cube, mountaintop::TARGET_CELL, &multi(TrainingWindow::default())).unwrap();
    let zeroed: BTreeSet<usize> = out.zeroed_indices.iter().copied().collect();
    assert_eq!(zeroed, clutter_cells(&cfg));
    let target = target_cell(&cfg);
    assert!(out.magnitude_map[target] > 0.0);
    assert_eq!(out.argmax(), target);
}

#[test]
fn sidelobe_suppression_leaves_the_target_on_top() {
    let d = dict();
    let cfg = scene(40.0, 2);
    let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
    let filter = RangeFilter::Sidelobe {
        solver: noise_solver(),
        sidelobe: SidelobeConfig {
            coherence_threshold: 0.9,
            residue_fraction: 0.05,
            max_peaks: None,
        },
        robust: Robust::Mean,
        training: TrainingWindow::default(),
    };
    let out = apply_filter(&d, &cube, mountaintop::TARGET_CELL, &filter).unwrap();
    assert_eq!(out.argmax(), target_cell(&cfg));
}

#[test]
fn smi_with_three_training_cells_misses_the_target() {
    let d = dict();
    let cfg = scene(40.0, 0);
    let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
    let filter = RangeFilter::Smi {
        loading: DiagonalLoading::default(),
        training: TrainingWindow {
            n_training: 3,
            guard_cells: 5,
        },
    };
    let out = apply_filter(&d, &cube, mountaintop::TARGET_CELL, &filter).unwrap();
    assert_ne!(out.argmax(), target_cell(&cfg));
}

#[test]
fn multi_snapshot_scans_isolate_the_target() {
    let d = dict();
    let g = grid();
    let cfg = scene(40.0, 3);
    let cube: DataCube<f64> = synthesize_cube(&cfg).unwrap();
    let cs = multi(TrainingWindow::default());
    let cell = mountaintop::TARGET_CELL;

    let (ts, td) = g.cell(target_cell(&cfg));
    let out = apply_filter(&d, &cube, cell, &cs).unwrap();
    let scan = angle_scan(&[("cs", &out.magnitude_map)], &d, td, ts).unwrap();
    let other = scan.responses_db[0]
        .iter()
        .enumerate()
        .filter(|(s, _)| *s != ts)
        .fold(f64::NEG_INFINITY, |m, (_, v)| m.max(*v));
    assert!(other <= -20.0, "angle scan {other} dB");

    let scan = range_scan(&d, &cube, &cs, cell).unwrap();
    let other = scan.responses_db[0]
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != cell)
        .fold(f64::NEG_INFINITY, |m, (_, v)| m.max(*v));
    assert!(other <= -20.0, "range scan {other} dB");
}

/// Peak over the range scan minus its median, in dB.
fn noise_scan_excess(seed: u64) -> f64 {
    let d = dict();
    let geometry = d.geometry().clone();
    let cube: DataCube<f64> =
        synthesize_cube(&noise_only(geometry, mountaintop::N_RANGE_CELLS, 1.0, seed)).unwrap();
    let smi = RangeFilter::Smi {
        loading: DiagonalLoading::default(),
        training: TrainingWindow::default(),
    };
    let mut db = range_scan(&d, &cube, &smi, mountaintop::TARGET_CELL).unwrap().responses_db.remove(0);
    db.sort_by(|a, b| a.partial_cmp(b).unwrap());
    db[db.len() - 1] - db[db.len() / 2]
}

#[test]
fn noise_only_range_scan_stays_within_calibrated_margin() {
    let margin = (100..105).map(noise_scan_excess).fold(0.0, f64::max) + 1.0;
    assert!(margin < 10.0, "calibrated margin {margin} dB");
    for seed in 200..205 {
        let excess = noise_scan_excess(seed);
        assert!(excess <= margin, "seed {seed}: {excess} dB over a {margin} dB margin");
    }
}
