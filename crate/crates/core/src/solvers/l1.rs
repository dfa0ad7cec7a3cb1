use num_complex::Complex;
use num_traits::Zero;

use super::{
    check_shapes, effective_l1_weight, objective_parts, support_of, SolverConfig, SparseSolution, TraceRow,
};
use crate::dictionary::Dictionary;
use crate::error::{invalid, Result};
use crate::linalg::norm;
use crate::scalar::Real;

/// Complex soft threshold: shrinks the modulus of `z` by `tau`, keeping its
/// phase, and returns zero when `|z| ≤ tau`.
pub fn soft_threshold<T: Real>(z: Complex<T>, tau: T) -> Complex<T> {
    let m = z.norm();
    if m <= tau {
        Complex::zero()
    } else {
        z * ((m - tau) / m)
    }
}

fn half_rss_and_l1<T: Real>(phi_x: &[Complex<T>], r: &[Complex<T>], x: &[Complex<T>]) -> (T, T) {
    let rss: T = phi_x.iter().zip(r).map(|(a, b)| (a - b).norm_sqr()).sum();
    let l1: T = x.iter().map(|z| z.norm()).sum();
    (rss, l1)
}

/// Minimizes ½‖Φx − r‖₂² + λ‖x‖₁ by monotone accelerated proximal gradient.
///
/// An accelerated candidate replaces the iterate only when it does not raise
/// the objective, so the objective sequence is non-increasing. The relative
/// objective change is tested on accepted steps.
pub fn l1_solve<T: Real, D: Dictionary<T> + ?Sized>(
    dict: &D,
    r: &[Complex<T>],
    cfg: &SolverConfig<T>,
) -> Result<SparseSolution<T>> {
    check_shapes(dict, r)?;
    cfg.validate()?;
    let lipschitz = dict.spectral_norm_sq();
    if !(lipschitz > T::zero()) {
        return Err(invalid("dictionary has zero spectral norm"));
    }
    let step = cfg.step_size.unwrap_or(T::one() / lipschitz);
    if step > T::of(2.0) / lipschitz {
        return Err(invalid(format!(
            "step size {step} exceeds 2/‖Φ‖² = {}",
            T::of(2.0) / lipschitz
        )));
    }
    let lambda = effective_l1_weight(dict, r, cfg);
    let tau = lambda * step;
    let half = T::of(0.5);
    let n = dict.n_cols();
    let m = dict.n_rows();

    let mut x = vec![Complex::<T>::zero(); n];
    let mut x_prev = x.clone();
    let mut phi_x = vec![Complex::<T>::zero(); m];
    let mut phi_x_prev = phi_x.clone();
    let mut y = x.clone();
    let mut phi_y = phi_x.clone();
    let mut t = T::one();
    let mut f_x = half * norm(r).powi(2);
    let mut trace = Vec::new();
    let mut converged = r.iter().all(|z| z.is_zero());
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let grad_res: Vec<Complex<T>> = phi_y.iter().zip(r).map(|(a, b)| a - b).collect();
        let grad = dict.adjoint(&grad_res);
        let z: Vec<Complex<T>> = y
            .iter()
            .zip(&grad)
            .map(|(yi, gi)| soft_threshold(yi - gi * step, tau))
            .collect();
        let phi_z = dict.apply(&z);
        let (rss_z, l1_z) = half_rss_and_l1(&phi_z, r, &z);
        let f_z = half * rss_z + lambda * l1_z;

        let t_next = (T::one() + (T::one() + T::of(4.0) * t * t).sqrt()) * half;
        let accepted = f_z <= f_x;
        x_prev.clone_from(&x);
        phi_x_prev.clone_from(&phi_x);
        let f_before = f_x;
        if accepted {
            x = z.clone();
            phi_x = phi_z.clone();
            f_x = f_z;
        }
        // y = x + (t/t')(z − x) + ((t − 1)/t')(x − x_prev)
        let a = t / t_next;
        let b = (t - T::one()) / t_next;
        for i in 0..n {
            y[i] = x[i] + (z[i] - x[i]) * a + (x[i] - x_prev[i]) * b;
        }
        for i in 0..m {
            phi_y[i] = phi_x[i] + (phi_z[i] - phi_x[i]) * a + (phi_x[i] - phi_x_prev[i]) * b;
        }
        t = t_next;

        if cfg.trace {
            let (rss, _) = half_rss_and_l1(&phi_x, r, &[]);
            trace.push(TraceRow {
                iter: iterations,
                residual_norm: rss.sqrt(),
                objective: f_x,
            });
        }
        if accepted {
            let scale = f_before.abs().max(T::min_positive_value());
            if (f_before - f_x).abs() / scale < cfg.objective_tolerance {
                converged = true;
            }
        }
    }

    let residual_norm = objective_parts(dict, r, &x, lambda).1;
    Ok(SparseSolution {
        support: support_of(&x),
        coefficients: x,
        residual_norm,
        iterations_used: iterations,
        converged,
        trace,
    })
}
