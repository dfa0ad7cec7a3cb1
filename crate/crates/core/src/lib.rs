//! Compressed-sensing space-time adaptive processing.
//!
//! Builds angle-Doppler steering dictionaries, synthesizes airborne radar
//! data cubes, recovers sparse clutter spectra and filters them out of a test
//! snapshot. A sample-matrix-inversion baseline and range/angle scan tools
//! are included for comparison.

pub mod baseline;
pub mod cube_io;
pub mod dictionary;
pub mod error;
pub mod eval;
pub mod filters;
pub mod linalg;
pub mod scalar;
pub mod scene;
pub mod solvers;
pub mod steering;

pub use dictionary::{build_dictionary, column_coherence, DenseDictionary, Dictionary, SteeringDictionary};
pub use baseline::{estimate_covariance, matched_filter_map, smi_spectrum, smi_weight, CovarianceEstimate, DiagonalLoading};
pub use error::{Result, StapError};
pub use eval::{angle_scan, apply_filter, range_scan, scr_improvement, write_pgm, RangeFilter, ScanResult, TrainingWindow};
pub use filters::{annihilate_multi, annihilate_single, estimate_gap_index, sidelobe_suppress, FilterOutput, GapConfig, Robust, SidelobeConfig};
pub use scalar::{Cplx, Real};
pub use scene::{mountaintop_analog_preset, synthesize_cube, DataCube, ScenarioConfig, Scatterer, Target};
pub use solvers::{greedy_solve, l1_solve, objective_value, solve, SolverConfig, SolverMethod, SparseSolution};
pub use steering::{space_time_steering, AngleDopplerGrid, ArrayGeometry};

pub type SteeringDictionaryF64 = SteeringDictionary<f64>;
pub type SteeringDictionaryF32 = SteeringDictionary<f32>;
pub type DataCubeF64 = DataCube<f64>;
pub type DataCubeF32 = DataCube<f32>;
pub type SolverConfigF64 = SolverConfig<f64>;
pub type SparseSolutionF64 = SparseSolution<f64>;
pub type FilterOutputF64 = FilterOutput<f64>;
pub type RangeFilterF64 = RangeFilter<f64>;
