//! Closed-form regret and generalization bounds.
//!
//! Logarithms are natural throughout. The Rademacher sum over the moment
//! spectrum is truncated at the supplied eigenvalue list; zero eigenvalues
//! contribute nothing, so the truncation is exact for finite-rank estimates.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::Sample;

/// Everything the calculators need, with measured quantities filled in by
/// the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub t: usize,
    pub k: usize,
    pub b: usize,
    pub d: f64,
    pub r: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Measured regret of the best maintained expert against the ERM
    /// comparator.
    pub regret_ke: f64,
    /// Measured proxy for `Ω(w*)`.
    pub omega_star: f64,
    pub weighted_loss: f64,
    /// Non-increasing spectrum of the second-moment operator.
    pub eigenvalues: Vec<f64>,
}

/// `√(T ln K)`.
pub fn meta_regret_bound(t: usize, k: usize) -> f64 {
    (t as f64 * (k.max(1) as f64).ln()).sqrt()
}

/// `6D√(Tβ)`.
pub fn ogd_regret_bound(t: usize, d: f64, beta: f64) -> f64 {
    6.0 * d * (t as f64 * beta).sqrt()
}

/// Both forms of the CO₂ regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Co2RegretBounds {
    /// `√(T ln K) + Regret_KE`.
    pub general: f64,
    /// `√(T ln K) + 6D√(Tβ)`.
    pub worst: f64,
}

pub fn co2_regret_bounds(t: usize, k: usize, d: f64, beta: f64, regret_ke: f64) -> Co2RegretBounds {
    let meta = meta_regret_bound(t, k);
    Co2RegretBounds {
        general: meta + regret_ke,
        worst: meta + ogd_regret_bound(t, d, beta),
    }
}

/// Largest pool size for which mixing is guaranteed to help:
/// `2·exp(6D√β - Regret_KE/√T)`.
pub fn k_condition(t: usize, d: f64, beta: f64, regret_ke: f64) -> f64 {
    2.0 * (6.0 * d * beta.sqrt() - regret_ke / (t as f64).sqrt()).exp()
}

/// Distance bound between a trained offline expert and the population
/// minimizer: `√(2Ω(w*) + 32β/γ² + 6·weighted_loss/γ)`.
pub fn gap_bound_thm2(omega_star: f64, beta: f64, gamma: f64, weighted_loss: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    Ok((2.0 * omega_star + 32.0 * beta / (gamma * gamma) + 6.0 * weighted_loss / gamma).sqrt())
}

fn check_non_increasing(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid("eigenvalues must be finite and non-negative"));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("eigenvalues must be listed in non-increasing order"));
    }
    Ok(())
}

/// Rademacher complexity bound of the radius-`R` linear class:
/// `R·√((1/T) Σ min(D², eλ_i/T)) + DR√e/T`.
pub fn rademacher_bound(t: usize, d: f64, r: f64, eigenvalues: &[f64]) -> Result<f64> {
    check_non_increasing(eigenvalues)?;
    if t == 0 {
        return Err(Error::invalid("T must be positive"));
    }
    let tf = t as f64;
    let e = std::f64::consts::E;
    let tail: f64 = eigenvalues.iter().map(|l| (d * d).min(e * l / tf)).sum();
    Ok(r * (tail / tf).sqrt() + d * r * e.sqrt() / tf)
}

/// The three summands of the excess-risk bound, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskTerms {
    /// Data-independent `O(1/T)` term.
    pub fast: f64,
    /// Rademacher term with the `log^{3/2}(64T)` factor.
    pub rademacher: f64,
    /// `O(1/√T)` term carrying the regret contribution.
    pub slow: f64,
}

impl ExcessRiskTerms {
    pub fn total(&self) -> f64 {
        self.fast + self.rademacher + self.slow
    }
}

pub fn excess_risk_terms(inputs: &BoundInputs) -> Result<ExcessRiskTerms> {
    let BoundInputs { t, k, d, r, beta, delta, .. } = *inputs;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must be in (0, 1), got {delta}")));
    }
    if t == 0 || k == 0 {
        return Err(Error::invalid("T and K must be positive"));
    }
    check_non_increasing(&inputs.eigenvalues)?;
    let tf = t as f64;
    let e = std::f64::consts::E;
    let sb = beta.sqrt();
    let log16 = (16.0 / delta).ln();

    let fast = (12.0 * beta * r * r + 4.0 * r * sb) * log16 / tf;

    let spectrum: f64 = inputs.eigenvalues.iter().map(|l| (tf * d * d).min(e * l)).sum();
    let rademacher = 28.0 * r * sb * (64.0 * tf).ln().powf(1.5) / tf * (spectrum.sqrt() + d * e.sqrt());

    let slow = ((6.0 * r * sb + 2.0) * log16.sqrt()
        + 4.0 * (8.0 / delta).ln()
        + (k as f64).ln().sqrt()
        + 6.0 * d * sb)
        / tf.sqrt();

    Ok(ExcessRiskTerms { fast, rademacher, slow })
}

/// Excess-risk bound of the averaged output, holding with probability
/// `1 - δ`.
pub fn excess_risk_bound_thm5(inputs: &BoundInputs) -> Result<f64> {
    Ok(excess_risk_terms(inputs)?.total())
}

/// Spectrum of the empirical second-moment matrix `(1/n) Σ x xᵀ`, sorted
/// non-increasing, with round-off negatives clamped to zero.
pub fn estimate_eigenvalues(samples: &[Sample]) -> Result<Vec<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| Error::invalid("cannot estimate a spectrum from no samples"))?;
    let dim = first.dim();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        crate::hypothesis::check_dim(dim, s.dim())?;
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += s.x[i] * s.x[j];
            }
        }
    }
    m /= samples.len() as f64;
    let mut eig: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0))
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}
