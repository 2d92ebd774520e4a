//! Empirical risk minimizer over the ball, used as the regret comparator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, HypothesisVector, Sample};
use crate::loss::LossSpec;
use crate::solver;

pub const DEFAULT_ERM_TOL: f64 = 1e-9;
const ERM_MAX_ITERS: usize = 500_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmSolution {
    pub w: HypothesisVector,
    /// Mean loss at `w`.
    pub risk: f64,
    pub iterations: usize,
    pub grad_map_norm: f64,
}

/// Minimizes the empirical risk by projected gradient descent from the
/// origin with step `1/β`. Fails if the gradient mapping does not fall
/// below `tol` within the iteration cap.
pub fn erm_oracle(samples: &[Sample], spec: &LossSpec, tol: f64) -> Result<ErmSolution> {
    if samples.is_empty() {
        return Err(Error::invalid("ERM needs at least one sample"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("ERM tolerance must be positive, got {tol}")));
    }
    for s in samples {
        check_dim(spec.dim(), s.dim())?;
    }
    // validates norms once so the raw loop below can skip it
    spec.empirical_risk(&HypothesisVector::zeros(spec.dim()), samples)?;
    let out = solver::minimize(
        |w, grad| spec.risk_and_grad_raw(w, samples, grad),
        &vec![0.0; spec.dim()],
        spec.r(),
        1.0 / spec.beta(),
        tol,
        ERM_MAX_ITERS,
    )?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.grad_map_norm,
        });
    }
    Ok(ErmSolution {
        w: HypothesisVector::from_raw(out.w),
        risk: out.objective,
        iterations: out.iterations,
        grad_map_norm: out.grad_map_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::Label;

    fn grid_min(samples: &[Sample], spec: &LossSpec) -> (f64, (f64, f64)) {
        let mut best = (f64::INFINITY, (0.0, 0.0));
        for i in -1000..=1000 {
            for j in -1000..=1000 {
                let (a, b) = (i as f64 * 1e-3, j as f64 * 1e-3);
                if a * a + b * b > 1.0 {
                    continue;
                }
                let risk = samples
                    .iter()
                    .map(|s| (1.0 + (-s.y.sign() * (a * s.x[0] + b * s.x[1])).exp()).ln() / spec.c)
                    .sum::<f64>()
                    / samples.len() as f64;
                if risk < best.0 {
                    best = (risk, (a, b));
                }
            }
        }
        best
    }

    #[test]
    fn single_sample_matches_grid() {
        let spec = LossSpec::new(1.0, 1.0, 2).unwrap();
        let samples = vec![Sample::new(vec![0.3, -0.5], Label::Pos)];
        let sol = erm_oracle(&samples, &spec, DEFAULT_ERM_TOL).unwrap();
        let (best, _) = grid_min(&samples, &spec);
        assert!(sol.risk <= best + 1e-4);
    }

    #[test]
    fn separable_pair_sits_on_boundary() {
        let spec = LossSpec::new(1.0, 1.0, 2).unwrap();
        let samples = vec![
            Sample::new(vec![0.8, 0.1], Label::Pos),
            Sample::new(vec![-0.7, 0.2], Label::Neg),
        ];
        let sol = erm_oracle(&samples, &spec, DEFAULT_ERM_TOL).unwrap();
        assert!((sol.w.norm() - 1.0).abs() < 1e-6);
        let (best, arg) = grid_min(&samples, &spec);
        assert!((arg.0 * arg.0 + arg.1 * arg.1).sqrt() > 0.998);
        assert!(sol.risk <= best + 1e-4);
    }

    #[test]
    fn mirrored_dataset_is_symmetric() {
        // closed under x -> -x with labels kept, so L(w) = L(-w)
        let spec = LossSpec::new(1.0, 1.0, 2).unwrap();
        let base = [(vec![0.4, 0.3], Label::Pos), (vec![0.1, -0.8], Label::Neg), (vec![-0.5, 0.2], Label::Pos)];
        let mut samples = Vec::new();
        for (x, y) in base {
            samples.push(Sample::new(x.iter().map(|v| -v).collect(), y));
            samples.push(Sample::new(x, y));
        }
        let sol = erm_oracle(&samples, &spec, DEFAULT_ERM_TOL).unwrap();
        let flipped = HypothesisVector::in_ball(sol.w.as_slice().iter().map(|v| -v).collect(), 1.0).unwrap();
        let a = spec.empirical_risk(&sol.w, &samples).unwrap();
        let b = spec.empirical_risk(&flipped, &samples).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(sol.w.norm() < 1e-6);
    }

    #[test]
    fn rejects_empty_input() {
        let spec = LossSpec::new(1.0, 1.0, 2).unwrap();
        assert!(erm_oracle(&[], &spec, 1e-9).is_err());
    }
}
