//! Projected gradient descent over the radius-`R` ball.
//!
//! Shared by the offline expert trainer and the ERM oracle. Termination is
//! certified by the gradient mapping `(w - Π(w - s∇F(w))) / s`, which
//! vanishes exactly at constrained minimizers.

use crate::error::Result;
use crate::hypothesis::{norm, project_to_ball};

#[derive(Debug, Clone, PartialEq)]
pub struct PgdOutcome {
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Gradient mapping norm at `w`.
    pub grad_map_norm: f64,
    pub converged: bool,
}

/// Minimizes `F` over the ball with fixed step `step`.
///
/// `eval(w, grad)` writes `∇F(w)` into `grad` and returns `F(w)`. With
/// `step = 1/L` for an `L`-smooth `F` every iterate decreases the objective.
pub fn minimize<F>(mut eval: F, start: &[f64], radius: f64, step: f64, tol: f64, max_iters: usize) -> Result<PgdOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut w = project_to_ball(start, radius)?.into_vec();
    let mut grad = vec![0.0; w.len()];
    let mut trial = vec![0.0; w.len()];
    let mut iterations = 0;
    loop {
        let objective = eval(&w, &mut grad);
        for ((t, wi), gi) in trial.iter_mut().zip(&w).zip(&grad) {
            *t = wi - step * gi;
        }
        let next = project_to_ball(&trial, radius)?.into_vec();
        let diff: Vec<f64> = w.iter().zip(&next).map(|(a, b)| a - b).collect();
        let grad_map_norm = norm(&diff) / step;
        if grad_map_norm <= tol || iterations >= max_iters {
            return Ok(PgdOutcome {
                w,
                objective,
                iterations,
                grad_map_norm,
                converged: grad_map_norm <= tol,
            });
        }
        w = next;
        iterations += 1;
    }
}
