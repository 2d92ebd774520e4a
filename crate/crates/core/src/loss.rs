//! Normalized logistic loss.
//!
//! `f(w; x, y) = log(1 + exp(-y⟨w, x⟩)) / C` with `C = log(1 + exp(D·R))`.
//! On the admissible domain `|⟨w, x⟩| ≤ D·R`, so `f ∈ [0, 1]` without any
//! clipping, and the Hessian `σ(1-σ) x xᵀ / C` is bounded by `β = D²/(4C)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, dot, norm, HypothesisVector, ProblemConstants, Sample, NORM_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    /// Normalizer `log(1 + exp(D·R))`.
    pub c: f64,
    pub constants: ProblemConstants,
}

impl LossSpec {
    /// Builds the loss for feature bound `d`, radius `r`, dimension `dim`;
    /// `β` is derived as `d²/(4C)`.
    pub fn new(d: f64, r: f64, dim: usize) -> Result<Self> {
        // validate d, r, dim before deriving anything from them
        ProblemConstants::new(d, r, 1.0, dim)?;
        let c = softplus(d * r);
        let beta = d * d / (4.0 * c);
        Ok(Self {
            c,
            constants: ProblemConstants::new(d, r, beta, dim)?,
        })
    }

    pub fn d(&self) -> f64 {
        self.constants.d
    }

    pub fn r(&self) -> f64 {
        self.constants.r
    }

    pub fn beta(&self) -> f64 {
        self.constants.beta
    }

    pub fn dim(&self) -> usize {
        self.constants.dim
    }

    fn check(&self, w: &[f64], s: &Sample) -> Result<()> {
        check_dim(self.dim(), w.len())?;
        check_dim(self.dim(), s.x.len())?;
        let (d, r) = (self.d(), self.r());
        let wn = norm(w);
        if !(wn <= r * (1.0 + NORM_SLACK)) {
            return Err(Error::domain(format!("hypothesis norm {wn} exceeds R = {r}")));
        }
        let xn = norm(&s.x);
        if !(xn <= d * (1.0 + NORM_SLACK)) {
            return Err(Error::domain(format!("feature norm {xn} exceeds D = {d}")));
        }
        Ok(())
    }

    fn margin(w: &[f64], s: &Sample) -> f64 {
        s.y.sign() * dot(w, &s.x)
    }

    /// Loss of `w` on one sample, in `[0, 1]`.
    pub fn loss(&self, w: &HypothesisVector, s: &Sample) -> Result<f64> {
        self.check(w.as_slice(), s)?;
        Ok(self.loss_raw(w.as_slice(), s))
    }

    /// Gradient of [`LossSpec::loss`] with respect to `w`.
    pub fn grad_loss(&self, w: &HypothesisVector, s: &Sample) -> Result<Vec<f64>> {
        self.check(w.as_slice(), s)?;
        let mut g = vec![0.0; self.dim()];
        self.add_grad_raw(w.as_slice(), s, 1.0, &mut g);
        Ok(g)
    }

    /// Mean loss over a non-empty sample list.
    pub fn empirical_risk(&self, w: &HypothesisVector, samples: &[Sample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical risk of an empty sample list"));
        }
        let mut total = 0.0;
        for s in samples {
            total += self.loss(w, s)?;
        }
        Ok(total / samples.len() as f64)
    }

    /// Loss without domain checks. Callers guarantee dimensions and bounds.
    pub(crate) fn loss_raw(&self, w: &[f64], s: &Sample) -> f64 {
        softplus(-Self::margin(w, s)) / self.c
    }

    /// `out += scale · ∇f(w)`.
    pub(crate) fn add_grad_raw(&self, w: &[f64], s: &Sample, scale: f64, out: &mut [f64]) {
        let y = s.y.sign();
        let coef = -y * sigmoid(-Self::margin(w, s)) / self.c * scale;
        for (o, xi) in out.iter_mut().zip(&s.x) {
            *o += coef * xi;
        }
    }

    /// Mean loss and its gradient, unchecked.
    pub(crate) fn risk_and_grad_raw(&self, w: &[f64], samples: &[Sample], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / samples.len() as f64;
        let mut total = 0.0;
        for s in samples {
            total += self.loss_raw(w, s);
            self.add_grad_raw(w, s, scale, grad);
        }
        total * scale
    }
}

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
