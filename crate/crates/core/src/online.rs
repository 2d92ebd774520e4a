//! Projected online gradient descent expert.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, project_to_ball, HypothesisVector, ProblemConstants, NORM_SLACK};
use crate::stream::rng::SplitMix64;

/// How the online expert starts a new interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitPolicy {
    /// Start from the origin.
    #[default]
    Cold,
    /// Inherit the final iterate of the previous interval.
    Warm,
    /// Seeded uniform draw from the ball.
    Random { seed: u64 },
}

/// OGD step size `η_t = D / √(β t)`.
pub fn eta(t: usize, constants: &ProblemConstants) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid("OGD step counter starts at 1"));
    }
    Ok(constants.d / (constants.beta * t as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineExpertState {
    w: HypothesisVector,
    /// 1-based index of the next step within the interval.
    t: usize,
    constants: ProblemConstants,
}

impl OnlineExpertState {
    pub fn w(&self) -> &HypothesisVector {
        &self.w
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    /// `w' = Π(w - η_t g)`, `t' = t + 1`.
    pub fn ogd_step(&self, grad: &[f64]) -> Result<Self> {
        check_dim(self.w.dim(), grad.len())?;
        let step = eta(self.t, &self.constants)?;
        let moved: Vec<f64> = self
            .w
            .as_slice()
            .iter()
            .zip(grad)
            .map(|(w, g)| w - step * g)
            .collect();
        Ok(Self {
            w: project_to_ball(&moved, self.constants.r)?,
            t: self.t + 1,
            constants: self.constants,
        })
    }
}

/// Starting state for a new interval. `Warm` requires `previous`, which must
/// lie in the ball.
pub fn init_online(
    policy: InitPolicy,
    previous: Option<&HypothesisVector>,
    constants: &ProblemConstants,
) -> Result<OnlineExpertState> {
    let dim = constants.dim;
    let w = match policy {
        InitPolicy::Cold => HypothesisVector::zeros(dim),
        InitPolicy::Warm => {
            let prev = previous.ok_or_else(|| Error::invalid("warm start without a previous iterate"))?;
            check_dim(dim, prev.dim())?;
            let n = prev.norm();
            if n > constants.r * (1.0 + NORM_SLACK) {
                return Err(Error::domain(format!(
                    "warm start norm {n} exceeds R = {}",
                    constants.r
                )));
            }
            prev.clone()
        }
        InitPolicy::Random { seed } => {
            let mut rng = SplitMix64::new(seed);
            let dir: Vec<f64> = (0..dim).map(|_| rng.next_normal()).collect();
            let n = crate::hypothesis::norm(&dir);
            let radius = constants.r * rng.next_open01().powf(1.0 / dim as f64);
            let w: Vec<f64> = if n > 0.0 {
                dir.iter().map(|v| v * radius / n).collect()
            } else {
                vec![0.0; dim]
            };
            project_to_ball(&w, constants.r)?
        }
    };
    Ok(OnlineExpertState { w, t: 1, constants: *constants })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(d: f64, r: f64, beta: f64) -> ProblemConstants {
        ProblemConstants::new(d, r, beta, 2).unwrap()
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta(1, &consts(1.0, 1.0, 1.0)).unwrap(), 1.0);
        assert!((eta(25, &consts(1.0, 1.0, 4.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!(eta(0, &consts(1.0, 1.0, 1.0)).is_err());
        let c = consts(1.0, 1.0, 0.3);
        for t in 1..1000 {
            assert!(eta(t + 1, &c).unwrap() < eta(t, &c).unwrap());
        }
    }

    #[test]
    fn ogd_step_examples() {
        let c = consts(1.0, 1.0, 1.0);
        let s = init_online(InitPolicy::Cold, None, &c).unwrap();
        let s2 = s.ogd_step(&[0.0, 0.0]).unwrap();
        assert_eq!(s2.w(), s.w());
        assert_eq!(s2.t(), 2);

        let s2 = s.ogd_step(&[1.0, 0.0]).unwrap();
        assert_eq!(s2.w().as_slice(), &[-1.0, 0.0]);

        let s3 = s.ogd_step(&[3.0, 4.0]).unwrap();
        assert!((s3.w().norm() - 1.0).abs() < 1e-15);
        assert!(s.ogd_step(&[1.0]).is_err());
    }

    #[test]
    fn init_policies() {
        let c = consts(1.0, 1.0, 1.0);
        let cold = init_online(InitPolicy::Cold, None, &c).unwrap();
        assert_eq!(cold.w().as_slice(), &[0.0, 0.0]);
        assert_eq!(cold.t(), 1);

        let prev = HypothesisVector::in_ball(vec![0.3, 0.4], 1.0).unwrap();
        let warm = init_online(InitPolicy::Warm, Some(&prev), &c).unwrap();
        assert_eq!(warm.w(), &prev);
        assert_eq!(warm.t(), 1);

        assert!(init_online(InitPolicy::Warm, None, &c).is_err());
        let outside = HypothesisVector::from_raw(vec![3.0, 4.0]);
        assert!(matches!(
            init_online(InitPolicy::Warm, Some(&outside), &c),
            Err(Error::Domain(_))
        ));

        let a = init_online(InitPolicy::Random { seed: 9 }, None, &c).unwrap();
        let b = init_online(InitPolicy::Random { seed: 9 }, None, &c).unwrap();
        assert_eq!(a, b);
        assert!(a.w().norm() <= 1.0);
    }

    #[test]
    fn iterates_stay_in_ball() {
        let c = consts(1.0, 0.5, 0.05);
        let mut s = init_online(InitPolicy::Cold, None, &c).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..500 {
            let g = [rng.next_normal() * 3.0, rng.next_normal() * 3.0];
            s = s.ogd_step(&g).unwrap();
            assert!(s.w().norm() <= 0.5 * (1.0 + 1e-15));
        }
    }
}
