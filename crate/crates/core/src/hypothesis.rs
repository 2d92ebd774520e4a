//! Dense feature vectors, labels and the radius-`R` hypothesis ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for "inside the ball" checks after projection. A projected
/// vector has norm `R` up to a couple of ulps.
pub const BALL_EPS: f64 = 4.0 * f64::EPSILON;

/// Relative slack used when validating caller-supplied norm bounds.
pub const NORM_SLACK: f64 = 1e-9;

/// Global problem constants shared by every expert in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Bound on feature norms.
    pub d: f64,
    /// Radius of the hypothesis ball.
    pub r: f64,
    /// Smoothness constant of the loss.
    pub beta: f64,
    pub dim: usize,
}

impl ProblemConstants {
    pub fn new(d: f64, r: f64, beta: f64, dim: usize) -> Result<Self> {
        for (name, v) in [("D", d), ("R", r), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if dim == 0 {
            return Err(Error::invalid("dim must be at least 1"));
        }
        Ok(Self { d, r, beta, dim })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    /// Maps a numeric label to a class: positive values are `Pos`, everything
    /// else (`0`, `-1`, ...) is `Neg`.
    pub fn from_value(v: f64) -> Self {
        if v > 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

/// A labeled example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Label,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Label) -> Self {
        Self { x, y }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.x)
    }
}

/// A weight vector inside the radius-`R` ball.
///
/// Values are produced by [`project_to_ball`], [`HypothesisVector::in_ball`]
/// or by convex combination of in-ball vectors, so the norm bound holds at
/// every observable point for the radius they were built against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HypothesisVector(Vec<f64>);

impl HypothesisVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Accepts `w` only if it already lies in the radius-`r` ball.
    pub fn in_ball(w: Vec<f64>, r: f64) -> Result<Self> {
        check_finite(&w)?;
        let n = norm(&w);
        if n > r * (1.0 + NORM_SLACK) {
            return Err(Error::domain(format!("vector norm {n} exceeds radius {r}")));
        }
        Ok(Self(w))
    }

    /// Wraps a vector the caller has already placed in the ball.
    pub(crate) fn from_raw(w: Vec<f64>) -> Self {
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl AsRef<[f64]> for HypothesisVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_finite(w: &[f64]) -> Result<()> {
    if let Some(v) = w.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("non-finite component {v}")));
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Euclidean projection onto `{w : ‖w‖ ≤ r}`.
pub fn project_to_ball(w: &[f64], r: f64) -> Result<HypothesisVector> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    check_finite(w)?;
    let n = norm(w);
    if n <= r * (1.0 + BALL_EPS) {
        return Ok(HypothesisVector(w.to_vec()));
    }
    let scale = r / n;
    Ok(HypothesisVector(w.iter().map(|v| v * scale).collect()))
}

/// `⟨w, x⟩`, rejecting mismatched dimensions.
pub fn inner(w: &HypothesisVector, x: &[f64]) -> Result<f64> {
    check_dim(w.dim(), x.len())?;
    Ok(dot(w.as_slice(), x))
}
