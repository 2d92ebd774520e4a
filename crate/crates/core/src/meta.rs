//! Exponentially weighted forecaster over the expert pool.
//!
//! Experts are indexed by ascending priority; the initial weights
//! `α_k = (K+1) / ((K+1-k)(K+2-k)K)` increase with `k`, so the expert in the
//! last slot (the online expert) starts with the most mass. The smallest
//! initial weight is `1/K²`, which together with `ν = 4√(ln K / T)` gives the
//! `√(T ln K)` bound on the weighted regret against every expert.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, HypothesisVector};

/// Tolerance on losses fed to the update, to absorb rounding at the ends of
/// `[0, 1]`.
const LOSS_RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaWeights {
    alpha: Vec<f64>,
    nu: f64,
}

/// Initial weights for `k` experts in ascending priority order.
pub fn init_weights(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("number of experts must be at least 1"));
    }
    let kf = k as f64;
    Ok((1..=k)
        .map(|i| {
            let i = i as f64;
            (kf + 1.0) / ((kf + 1.0 - i) * (kf + 2.0 - i) * kf)
        })
        .collect())
}

/// `ν = 4√(ln K / T)`; zero for a single expert.
pub fn step_size_nu(k: usize, horizon: usize) -> Result<f64> {
    if k == 0 || horizon == 0 {
        return Err(Error::invalid(format!(
            "step size needs K >= 1 and T >= 1, got K = {k}, T = {horizon}"
        )));
    }
    Ok(4.0 * ((k as f64).ln() / horizon as f64).sqrt())
}

impl MetaWeights {
    /// Fresh weights for `k` experts over an interval of nominal length
    /// `horizon`.
    pub fn new(k: usize, horizon: usize) -> Result<Self> {
        Ok(Self {
            alpha: init_weights(k)?,
            nu: step_size_nu(k, horizon)?,
        })
    }

    /// Weights with an explicit step size. `alpha` must be a probability
    /// vector.
    pub fn from_parts(alpha: Vec<f64>, nu: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("empty weight vector"));
        }
        if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::invalid(format!("step size must be non-negative, got {nu}")));
        }
        Ok(Self { alpha, nu })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    /// `Σ_k α_k w^k`. The result stays in the ball because the weights form a
    /// convex combination.
    pub fn combine(&self, experts: &[&HypothesisVector]) -> Result<HypothesisVector> {
        check_dim(self.k(), experts.len())?;
        let dim = experts[0].dim();
        let mut out = vec![0.0; dim];
        for (a, w) in self.alpha.iter().zip(experts) {
            check_dim(dim, w.dim())?;
            for (o, v) in out.iter_mut().zip(w.as_slice()) {
                *o += a * v;
            }
        }
        Ok(HypothesisVector::from_raw(out))
    }

    /// One exponential reweighting step.
    pub fn update(&self, losses: &[f64]) -> Result<Self> {
        check_dim(self.k(), losses.len())?;
        if let Some(l) = losses
            .iter()
            .find(|l| !(**l >= -LOSS_RANGE_SLACK && **l <= 1.0 + LOSS_RANGE_SLACK))
        {
            return Err(Error::domain(format!("loss {l} outside [0, 1]")));
        }
        // shifting by the smallest loss leaves the ratios unchanged and keeps
        // the largest factor at exactly 1
        let floor = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut alpha: Vec<f64> = self
            .alpha
            .iter()
            .zip(losses)
            .map(|(a, l)| a * (-self.nu * (l - floor)).exp())
            .collect();
        let total: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= total);
        Ok(Self { alpha, nu: self.nu })
    }
}
