//! Training a new offline expert on a completed interval.
//!
//! The expert minimizes `L(w) + (γ/2)·‖w - v‖²` over the ball, where `v` is
//! the meta-expert's weighted combination of the pool at the end of the
//! interval (the anchor). `γ` must be at least `Σ α_k L(w_k) / (4R²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, dist_sq, HypothesisVector, Sample};
use crate::loss::LossSpec;
use crate::meta::MetaWeights;
use crate::solver;

/// Center of the knowledge-transfer regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub v: HypothesisVector,
    /// `Σ_k α_k L(w_k)` on the completed interval.
    pub weighted_loss: f64,
}

impl Anchor {
    pub fn new(v: HypothesisVector, weighted_loss: f64) -> Result<Self> {
        if !(0.0..=1.0 + 1e-12).contains(&weighted_loss) {
            return Err(Error::domain(format!("weighted loss {weighted_loss} outside [0, 1]")));
        }
        Ok(Self { v, weighted_loss })
    }

    /// Builds the anchor from the pool's final weights and experts, with
    /// empirical risks measured on `samples`.
    pub fn from_pool(
        meta: &MetaWeights,
        experts: &[&HypothesisVector],
        samples: &[Sample],
        spec: &LossSpec,
    ) -> Result<Self> {
        let v = meta.combine(experts)?;
        let mut weighted_loss = 0.0;
        for (a, w) in meta.alpha().iter().zip(experts) {
            weighted_loss += a * spec.empirical_risk(w, samples)?;
        }
        Self::new(v, weighted_loss.min(1.0))
    }
}

/// `Ω(w) = ‖w - v‖²`.
pub fn omega(w: &HypothesisVector, anchor: &Anchor) -> f64 {
    dist_sq(w.as_slice(), anchor.v.as_slice())
}

/// Smallest admissible `γ`: `weighted_loss / (4R²)`.
pub fn gamma_lower_bound(anchor: &Anchor, r: f64) -> f64 {
    anchor.weighted_loss / (4.0 * r * r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfflineTrainConfig {
    pub gamma: f64,
    pub max_iters: usize,
    pub grad_map_tol: f64,
}

impl OfflineTrainConfig {
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_GAMMA_FLOOR: f64 = 0.1;

    /// `γ = max(lower bound, floor)`, iteration cap
    /// `50·⌈(β+γ)/γ · ln(1/tol)⌉`.
    pub fn for_anchor(anchor: &Anchor, spec: &LossSpec, gamma_floor: f64, grad_map_tol: f64) -> Result<Self> {
        if !(gamma_floor.is_finite() && gamma_floor >= 0.0) {
            return Err(Error::invalid(format!("gamma floor must be non-negative, got {gamma_floor}")));
        }
        if !(grad_map_tol > 0.0 && grad_map_tol < 1.0) {
            return Err(Error::invalid(format!("solver tolerance must be in (0, 1), got {grad_map_tol}")));
        }
        let gamma = gamma_lower_bound(anchor, spec.r()).max(gamma_floor);
        if gamma <= 0.0 {
            return Err(Error::invalid(
                "gamma is zero: the anchor has zero loss and no positive floor was given",
            ));
        }
        let rounds = ((spec.beta() + gamma) / gamma * (1.0 / grad_map_tol).ln()).ceil();
        Ok(Self {
            gamma,
            max_iters: 50 * rounds as usize,
            grad_map_tol,
        })
    }
}

/// Result of [`train_offline`] with its solver certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedExpert {
    pub w: HypothesisVector,
    /// Regularized objective at `w`.
    pub objective: f64,
    /// Regularized objective at the anchor (the start point).
    pub anchor_objective: f64,
    pub iterations: usize,
    pub grad_map_norm: f64,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Regularized objective `L(w) + (γ/2) Ω(w)`.
pub fn regularized_objective(w: &HypothesisVector, samples: &[Sample], anchor: &Anchor, gamma: f64, spec: &LossSpec) -> Result<f64> {
    Ok(spec.empirical_risk(w, samples)? + 0.5 * gamma * omega(w, anchor))
}

pub fn train_offline(
    samples: &[Sample],
    anchor: &Anchor,
    config: &OfflineTrainConfig,
    spec: &LossSpec,
) -> Result<TrainedExpert> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot train an offline expert on an empty interval"));
    }
    check_dim(spec.dim(), anchor.v.dim())?;
    let floor = gamma_lower_bound(anchor, spec.r());
    if !(config.gamma >= floor && config.gamma > 0.0) {
        return Err(Error::invalid(format!(
            "gamma {} is below the admissible floor {floor}",
            config.gamma
        )));
    }
    // surface domain errors (bad norms, dims) before the unchecked solver loop
    let anchor_objective = regularized_objective(&anchor.v, samples, anchor, config.gamma, spec)?;

    let gamma = config.gamma;
    let center = anchor.v.as_slice();
    let out = solver::minimize(
        |w, grad| {
            let risk = spec.risk_and_grad_raw(w, samples, grad);
            let mut reg = 0.0;
            for ((g, wi), ci) in grad.iter_mut().zip(w).zip(center) {
                *g += gamma * (wi - ci);
                reg += (wi - ci) * (wi - ci);
            }
            risk + 0.5 * gamma * reg
        },
        center,
        spec.r(),
        1.0 / (spec.beta() + gamma),
        config.grad_map_tol,
        config.max_iters,
    )?;
    Ok(TrainedExpert {
        w: HypothesisVector::from_raw(out.w),
        objective: out.objective,
        anchor_objective,
        iterations: out.iterations,
        grad_map_norm: out.grad_map_norm,
        converged: out.converged,
    })
}
