use cs_stap::cube_io::{read_cube, write_cube};
use cs_stap::filters::{aggregate, clutter_support, moduli};
use cs_stap::linalg::{dotc, norm};
use cs_stap::solvers::soft_threshold;
use cs_stap::{
    annihilate_single, build_dictionary, estimate_covariance, estimate_gap_index, greedy_solve, l1_solve,
    AngleDopplerGrid, ArrayGeometry, DataCube, Dictionary, GapConfig, Robust, SolverConfig, SteeringDictionary,
};
use num_complex::Complex;
use proptest::prelude::*;

type C64 = Complex<f64>;

fn small_dict() -> SteeringDictionary<f64> {
    build_dictionary(&ArrayGeometry::half_wavelength(3, 4).unwrap(), &AngleDopplerGrid::uniform(6, 8).unwrap()).unwrap()
}

fn cplx() -> impl Strategy<Value = C64> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(re, im)| C64::new(re, im))
}

fn snapshot(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(cplx(), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_shrinks_modulus_and_keeps_phase(z in cplx(), tau in 0.0f64..6.0) {
        let s = soft_threshold(z, tau);
        let want = (z.norm() - tau).max(0.0);
        prop_assert!((s.norm() - want).abs() <= 1e-12);
        if s.norm() > 1e-9 {
            prop_assert!((s / s.norm() - z / z.norm()).norm() <= 1e-9);
        }
    }

    #[test]
    fn l1_solution_rotates_with_the_snapshot(r in snapshot(12), theta in 0.0f64..std::f64::consts::TAU) {
        let d = small_dict();
        let cfg = SolverConfig::l1(Some(2.0), 5000);
        let base = l1_solve(&d, &r, &cfg).unwrap();
        let rot = C64::from_polar(1.0, theta);
        let rotated: Vec<C64> = r.iter().map(|z| z * rot).collect();
        let turned = l1_solve(&d, &rotated, &cfg).unwrap();
        for (a, b) in base.coefficients.iter().zip(&turned.coefficients) {
            prop_assert!((a * rot - b).norm() <= 1e-6 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn greedy_residual_is_orthogonal_to_support(r in snapshot(12)) {
        let d = small_dict();
        let sol = greedy_solve(&d, &r, &SolverConfig::greedy(1e-6, 6)).unwrap();
        let fit = d.apply(&sol.coefficients);
        let res: Vec<C64> = r.iter().zip(&fit).map(|(a, b)| a - b).collect();
        for &j in &sol.support {
            prop_assert!(dotc(d.column(j), &res).norm() <= 1e-8 * (1.0 + norm(&r)));
        }
        prop_assert!((norm(&res) - sol.residual_norm).abs() <= 1e-9 * (1.0 + norm(&r)));
    }

    #[test]
    fn adjoint_is_the_adjoint(x in snapshot(48), r in snapshot(12)) {
        let d = small_dict();
        let lhs = dotc(&d.apply(&x), &r);
        let rhs = dotc(&x, &d.adjoint(&r));
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn annihilation_never_increases_the_map(r in snapshot(12)) {
        let d = small_dict();
        match annihilate_single(&d, &r, &SolverConfig::greedy(1e-6, 12), &GapConfig::default()) {
            Ok(out) => {
                let input = out.input_map();
                for (a, b) in out.magnitude_map.iter().zip(&input) {
                    prop_assert!(a <= b);
                }
                let support = out.support.as_ref().unwrap();
                prop_assert_eq!(out.zeroed_indices.len(), support.indices.len());
            }
            Err(e) => prop_assert!(e.to_string().contains("gap"), "{}", e),
        }
    }

    #[test]
    fn aggregation_of_copies_is_identity(x in snapshot(48), k in 1usize..6) {
        let copies = vec![x.clone(); k];
        for robust in [Robust::Mean, Robust::Median] {
            let agg = aggregate(&copies, robust).unwrap();
            for (a, b) in agg.iter().zip(&x) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }
    }

    #[test]
    fn gap_index_is_the_largest_consecutive_ratio(mut v in prop::collection::vec(0.01f64..100.0, 3..20)) {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let limit = v.len() - 1;
        match estimate_gap_index(&v, limit) {
            Ok((k, ratio)) => {
                prop_assert!((1..=limit).contains(&k));
                let best = (1..=limit).map(|i| v[i - 1] / v[i]).fold(0.0, f64::max);
                prop_assert!((ratio - best).abs() <= 1e-12 * best);
                prop_assert!((v[k - 1] / v[k] - best).abs() <= 1e-12 * best);
            }
            Err(_) => prop_assert!(v.iter().all(|x| *x == v[0])),
        }
    }

    #[test]
    fn clutter_support_is_a_prefix_of_the_sorted_map(map in prop::collection::vec(0.0f64..10.0, 48)) {
        if let Ok(s) = clutter_support(&map, 3, &GapConfig::default()) {
            let smallest_kept = s.magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
            let largest_dropped = (0..map.len())
                .filter(|i| !s.indices.contains(i))
                .map(|i| map[i])
                .fold(0.0, f64::max);
            prop_assert!(smallest_kept >= largest_dropped);
        }
    }

    #[test]
    fn covariance_is_hermitian_with_real_nonnegative_diagonal(snaps in prop::collection::vec(snapshot(6), 1..8)) {
        let cov = estimate_covariance(&snaps, 0.5).unwrap();
        prop_assert!(cov.matrix.hermitian_defect() <= 1e-12);
        for i in 0..6 {
            prop_assert!(cov.matrix[(i, i)].im == 0.0 && cov.matrix[(i, i)].re >= 0.0);
        }
    }

    #[test]
    fn cube_files_round_trip(cells in prop::collection::vec(snapshot(6), 1..5)) {
        let geometry = ArrayGeometry::half_wavelength(2, 3).unwrap();
        let cube = DataCube::new(geometry, cells).unwrap();
        let mut buf = Vec::new();
        write_cube(&cube, &mut buf).unwrap();
        let back: DataCube<f64> = read_cube(buf.as_slice(), 0.5).unwrap();
        prop_assert_eq!(back, cube);
    }
}

#[test]
fn moduli_of_empty_is_empty() {
    assert!(moduli::<f64>(&[]).is_empty());
}
