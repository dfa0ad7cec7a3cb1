//! Complex sparse solvers for the underdetermined system `r = Φx`.

mod greedy;
mod l1;

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dictionary::{adjoint_sup_norm, Dictionary};
use crate::error::{invalid, Result};
use crate::linalg::norm_sq;
use crate::scalar::Real;

pub use greedy::greedy_solve;
pub use l1::{l1_solve, soft_threshold};

/// Fraction of ‖Φᴴr‖∞ used as the L1 weight when none is configured.
pub const DEFAULT_L1_WEIGHT_FRACTION: f64 = 0.05;

/// Coefficients with modulus above this count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// Residual tolerance multiplier over the expected noise norm √(N·L·σ²).
pub const DISCREPANCY_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    GreedyPursuit,
    L1Proximal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolverConfig<T> {
    pub method: SolverMethod,
    pub max_iterations: usize,
    /// Stop once ‖Φx − r‖₂ falls to this value (greedy).
    pub residual_tolerance: T,
    /// λ of ½‖Φx − r‖² + λ‖x‖₁. `None` picks 0.05·‖Φᴴr‖∞ per snapshot.
    #[serde(default)]
    pub l1_weight: Option<T>,
    #[serde(default)]
    pub max_support: Option<usize>,
    /// Proximal step. `None` uses 1/‖Φ‖².
    #[serde(default)]
    pub step_size: Option<T>,
    /// Relative objective change that ends the proximal iteration.
    #[serde(default = "default_objective_tolerance")]
    pub objective_tolerance: T,
    #[serde(default)]
    pub trace: bool,
}

fn default_objective_tolerance<T: Real>() -> T {
    T::of(1e-8)
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self::greedy(T::of(1e-6), 256)
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn greedy(residual_tolerance: T, max_iterations: usize) -> Self {
        Self {
            method: SolverMethod::GreedyPursuit,
            max_iterations,
            residual_tolerance,
            l1_weight: None,
            max_support: None,
            step_size: None,
            objective_tolerance: default_objective_tolerance(),
            trace: false,
        }
    }

    /// Greedy pursuit stopped by the discrepancy principle: residual within
    /// 1.1× the expected noise norm √(n_rows·σ²).
    pub fn greedy_for_noise(noise_power: T, n_rows: usize) -> Self {
        let tol = T::of(DISCREPANCY_FACTOR) * (T::of(n_rows as f64) * noise_power).sqrt();
        Self::greedy(tol, n_rows)
    }

    pub fn l1(l1_weight: Option<T>, max_iterations: usize) -> Self {
        Self {
            method: SolverMethod::L1Proximal,
            max_iterations,
            residual_tolerance: T::zero(),
            l1_weight,
            max_support: None,
            step_size: None,
            objective_tolerance: default_objective_tolerance(),
            trace: false,
        }
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.residual_tolerance >= T::zero()) {
            return Err(invalid("residual_tolerance must be non-negative"));
        }
        if let Some(w) = self.l1_weight {
            if !(w > T::zero()) {
                return Err(invalid("l1_weight must be positive"));
            }
        }
        if let Some(s) = self.step_size {
            if !(s > T::zero()) {
                return Err(invalid("step_size must be positive"));
            }
        }
        if self.max_support == Some(0) {
            return Err(invalid("max_support must be at least 1"));
        }
        Ok(())
    }
}

/// One solver iteration as recorded in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub iter: usize,
    pub residual_norm: T,
    pub objective: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution<T> {
    /// Coefficients on the unit-norm dictionary columns.
    pub coefficients: Vec<Complex<T>>,
    pub residual_norm: T,
    pub iterations_used: usize,
    /// Indices with nonzero coefficient, in selection order for greedy
    /// solves and ascending for proximal solves.
    pub support: Vec<usize>,
    pub converged: bool,
    pub trace: Vec<TraceRow<T>>,
}

impl<T: Real> SparseSolution<T> {
    /// Scatterer amplitudes α, undoing column normalization.
    pub fn raw_coefficients<D: Dictionary<T> + ?Sized>(&self, dict: &D) -> Vec<Complex<T>> {
        self.coefficients
            .iter()
            .zip(dict.column_norms())
            .map(|(c, n)| c / *n)
            .collect()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.coefficients.iter().map(|z| z.norm()).collect()
    }

    /// Trace as CSV with header `iter,residual_norm,objective`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iter,residual_norm,objective\n");
        for row in &self.trace {
            let _ = writeln!(s, "{},{},{}", row.iter, row.residual_norm, row.objective);
        }
        s
    }
}

/// ½‖Φx − r‖₂² + λ‖x‖₁
pub fn objective_value<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    x: &[Complex<T>],
    l1_weight: T,
) -> Result<T> {
    check_shapes(dict, r)?;
    if x.len() != dict.n_cols() {
        return Err(invalid(format!(
            "coefficient vector has length {}, dictionary has {} columns",
            x.len(),
            dict.n_cols()
        )));
    }
    Ok(objective_parts(dict, r, x, l1_weight).0)
}

/// `(objective, residual_norm)`
pub(crate) fn objective_parts<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    x: &[Complex<T>],
    l1_weight: T,
) -> (T, T) {
    let mut res = dict.apply(x);
    res.iter_mut().zip(r).for_each(|(a, b)| *a -= b);
    let rss = norm_sq(&res);
    let l1: T = x.iter().map(|z| z.norm()).sum();
    (T::of(0.5) * rss + l1_weight * l1, rss.sqrt())
}

pub(crate) fn check_shapes<T: Real, D: Dictionary<T> + ?Sized>(dict: &D, r: &[Complex<T>]) -> Result<()> {
    if r.len() != dict.n_rows() {
        return Err(invalid(format!(
            "snapshot has length {}, dictionary expects {}",
            r.len(),
            dict.n_rows()
        )));
    }
    Ok(())
}

/// λ actually used for a snapshot under `cfg`.
pub fn effective_l1_weight<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> T {
    cfg.l1_weight
        .unwrap_or_else(|| T::of(DEFAULT_L1_WEIGHT_FRACTION) * adjoint_sup_norm(dict, r))
}

/// Dispatches on `cfg.method`.
pub fn solve<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> Result<SparseSolution<T>> {
    match cfg.method {
        SolverMethod::GreedyPursuit => greedy_solve(dict, r, cfg),
        SolverMethod::L1Proximal => l1_solve(dict, r, cfg),
    }
}

pub(crate) fn support_of<T: Real>(x: &[Complex<T>]) -> Vec<usize> {
    let thr = T::of(SUPPORT_THRESHOLD);
    x.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > thr)
        .map(|(i, _)| i)
        .collect()
}
