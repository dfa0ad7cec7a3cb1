use num_complex::Complex;
use num_traits::Zero;

use super::{check_shapes, objective_parts, SolverConfig, SparseSolution, TraceRow};
use crate::dictionary::Dictionary;
use crate::error::{Result, StapError};
use crate::linalg::{norm, IncrementalQr};
use crate::scalar::Real;

/// Condition number above which the selected columns are treated as rank
/// deficient.
pub const MAX_SUPPORT_CONDITION: f64 = 1e12;

/// Orthogonal matching pursuit.
///
/// Each step picks the column with the largest |⟨column, residual⟩| and refits
/// all selected columns by least squares through an incrementally updated QR
/// factorization, so the residual stays orthogonal to the selected span.
pub fn greedy_solve<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> Result<SparseSolution<T>> {
    check_shapes(dict, r)?;
    cfg.validate()?;
    let n_cols = dict.n_cols();
    let max_support = cfg.max_support.unwrap_or(usize::MAX).min(dict.n_rows()).min(n_cols);

    let mut qr = IncrementalQr::default();
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; n_cols];
    let mut residual = r.to_vec();
    let mut res_norm = norm(&residual);
    let mut coeffs_on_support: Vec<Complex<T>> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;

    let tol = cfg.residual_tolerance;
    let mut converged = res_norm <= tol;
    while !converged && iterations < cfg.max_iterations && support.len() < max_support {
        let corr = dict.adjoint(&residual);
        let mut best = None;
        let mut best_mag = T::zero();
        for (j, c) in corr.iter().enumerate() {
            let m = c.norm();
            if !selected[j] && m > best_mag {
                best_mag = m;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if best_mag <= T::epsilon() * res_norm {
            break;
        }

        let ratio = qr.push(dict.column(j));
        if ratio.is_zero() {
            return Err(StapError::DegenerateSupport {
                index: j,
                condition: f64::INFINITY,
            });
        }
        let condition = qr.diagonal_condition().max(T::one() / ratio).as_f64();
        if condition > MAX_SUPPORT_CONDITION {
            return Err(StapError::DegenerateSupport { index: j, condition });
        }
        selected[j] = true;
        support.push(j);
        iterations += 1;

        coeffs_on_support = qr.solve(r);
        residual.copy_from_slice(r);
        qr.project_out(&mut residual);
        res_norm = norm(&residual);
        converged = res_norm <= tol;

        if cfg.trace {
            trace.push(TraceRow {
                iter: iterations,
                residual_norm: res_norm,
                objective: T::of(0.5) * res_norm * res_norm,
            });
        }
    }

    let mut coefficients = vec![Complex::zero(); n_cols];
    for (&j, &c) in support.iter().zip(&coeffs_on_support) {
        coefficients[j] = c;
    }
    // Report the residual of the assembled coefficients, not the projection.
    let residual_norm = if support.is_empty() {
        res_norm
    } else {
        objective_parts(dict, r, &coefficients, T::zero()).1
    };
    Ok(SparseSolution {
        coefficients,
        residual_norm,
        iterations_used: iterations,
        support,
        converged,
        trace,
    })
}
