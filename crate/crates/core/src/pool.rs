//! The interval lifecycle: mix the pool while the online interval fills,
//! then train a new offline expert, refresh the pool and start over.
//!
//! Offline experts are stored priority-ascending, so the highest-priority
//! offline expert sits just below the online expert, which always occupies
//! the last slot and receives the largest initial weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, inner, HypothesisVector, Label, Sample};
use crate::loss::LossSpec;
use crate::meta::MetaWeights;
use crate::offline::{omega, train_offline, Anchor, OfflineTrainConfig, TrainedExpert};
use crate::online::{init_online, InitPolicy, OnlineExpertState};
use crate::stream::rng::SplitMix64;
use crate::stream::IntervalBuffer;

const TAG_ONLINE_INIT: u64 = 6;

/// How surviving offline experts are ranked when the pool is refreshed.
/// The newly trained expert always gets the highest priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityStrategy {
    /// Queue order: the oldest expert is evicted first.
    Fifo,
    /// Rank survivors by their final meta weight on the completed interval.
    #[default]
    #[serde(alias = "weight")]
    WeightPriority,
}

/// `K = min(G, K_max)`.
pub fn effective_k(g: usize, k_max: usize) -> Result<usize> {
    if g == 0 {
        return Err(Error::invalid("interval count G starts at 1"));
    }
    if k_max < 2 {
        return Err(Error::invalid(format!("K_max must be at least 2, got {k_max}")));
    }
    Ok(g.min(k_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    /// Samples per interval.
    pub b: usize,
    pub k_max: usize,
    pub strategy: PriorityStrategy,
    pub init: InitPolicy,
    pub gamma_floor: f64,
    pub solver_tol: f64,
}

impl PoolConfig {
    pub fn new(b: usize, k_max: usize) -> Self {
        Self {
            b,
            k_max,
            strategy: PriorityStrategy::default(),
            init: InitPolicy::Cold,
            gamma_floor: OfflineTrainConfig::DEFAULT_GAMMA_FLOOR,
            solver_tol: OfflineTrainConfig::DEFAULT_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::invalid("interval size B must be positive"));
        }
        effective_k(1, self.k_max)?;
        Ok(())
    }
}

/// What happened on one labeled sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based position in the online interval.
    pub t: usize,
    /// The meta output used for this sample.
    pub w_t: HypothesisVector,
    pub loss_meta: f64,
    /// `f_t(w_t^k)`, online expert last.
    pub losses_per_expert: Vec<f64>,
    pub alpha_before: Vec<f64>,
    pub alpha_after: Vec<f64>,
}

/// Diagnostics from one rollover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloverInfo {
    pub anchor: Anchor,
    pub gamma: f64,
    pub solver_tol: f64,
    pub trained: TrainedExpert,
    /// `Ω(w^K)` for the new expert.
    pub omega: f64,
    /// The online expert's final iterate on the completed interval.
    pub online_final: HypothesisVector,
    pub evicted: Option<HypothesisVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertPool {
    offline: Vec<HypothesisVector>,
    online: OnlineExpertState,
    meta: MetaWeights,
    g: usize,
    t: usize,
    config: PoolConfig,
    spec: LossSpec,
}

impl ExpertPool {
    /// A pool at the start of the first interval: no offline experts, one
    /// online expert.
    pub fn new(spec: LossSpec, config: PoolConfig) -> Result<Self> {
        config.validate()?;
        // nothing to inherit on the first interval
        let first = match config.init {
            InitPolicy::Warm => InitPolicy::Cold,
            other => init_policy(other, 1),
        };
        let online = init_online(first, None, &spec.constants)?;
        Ok(Self {
            offline: Vec::new(),
            online,
            meta: MetaWeights::new(1, config.b)?,
            g: 1,
            t: 0,
            config,
            spec,
        })
    }

    pub fn offline(&self) -> &[HypothesisVector] {
        &self.offline
    }

    pub fn online(&self) -> &OnlineExpertState {
        &self.online
    }

    pub fn meta(&self) -> &MetaWeights {
        &self.meta
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.offline.len() + 1
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    /// All experts in weight order, online expert last.
    pub fn experts(&self) -> Vec<&HypothesisVector> {
        self.offline.iter().chain(std::iter::once(self.online.w())).collect()
    }

    /// The current meta output `w_t`.
    pub fn output(&self) -> Result<HypothesisVector> {
        self.meta.combine(&self.experts())
    }

    /// Predicts with the current output; ties go to `+1`. Does not advance
    /// the pool.
    pub fn predict_unlabeled(&self, x: &[f64]) -> Result<Label> {
        let score = inner(&self.output()?, x)?;
        Ok(if score >= 0.0 { Label::Pos } else { Label::Neg })
    }

    /// One round: output, observe the loss, reweight, step the online expert.
    pub fn process_labeled(&mut self, s: &Sample) -> Result<StepRecord> {
        if self.t >= self.config.b {
            return Err(Error::InvalidState(format!(
                "online interval already holds B = {} samples; roll over first",
                self.config.b
            )));
        }
        check_dim(self.spec.dim(), s.dim())?;
        let experts = self.experts();
        let w_t = self.meta.combine(&experts)?;
        let losses = experts
            .iter()
            .map(|w| self.spec.loss(w, s))
            .collect::<Result<Vec<_>>>()?;
        let loss_meta = self.spec.loss(&w_t, s)?;
        let meta = self.meta.update(&losses)?;
        let grad = self.spec.grad_loss(self.online.w(), s)?;
        let online = self.online.ogd_step(&grad)?;

        let record = StepRecord {
            t: self.t + 1,
            w_t,
            loss_meta,
            losses_per_expert: losses,
            alpha_before: self.meta.alpha().to_vec(),
            alpha_after: meta.alpha().to_vec(),
        };
        self.meta = meta;
        self.online = online;
        self.t += 1;
        Ok(record)
    }

    /// Closes the online interval: trains the new offline expert on
    /// `completed`, refreshes the pool and resets the meta weights and the
    /// online expert.
    pub fn rollover(&mut self, completed: &IntervalBuffer) -> Result<RolloverInfo> {
        let b = self.config.b;
        if self.t != b {
            return Err(Error::InvalidState(format!(
                "rollover needs a full interval: t = {}, B = {b}",
                self.t
            )));
        }
        if completed.len() != b {
            return Err(Error::invalid(format!(
                "completed interval holds {} samples, expected B = {b}",
                completed.len()
            )));
        }
        let samples = &completed.samples;
        let anchor = Anchor::from_pool(&self.meta, &self.experts(), samples, &self.spec)?;
        let train_cfg =
            OfflineTrainConfig::for_anchor(&anchor, &self.spec, self.config.gamma_floor, self.config.solver_tol)?;
        let trained = train_offline(samples, &anchor, &train_cfg, &self.spec)?;

        let g = self.g + 1;
        let k = effective_k(g, self.config.k_max)?;

        let mut ranked: Vec<(f64, HypothesisVector)> = self
            .offline
            .drain(..)
            .zip(self.meta.alpha())
            .map(|(w, a)| (*a, w))
            .collect();
        if self.config.strategy == PriorityStrategy::WeightPriority {
            // stable sort keeps queue order among equal weights
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let mut offline: Vec<HypothesisVector> = ranked.into_iter().map(|(_, w)| w).collect();
        offline.push(trained.w.clone());
        let evicted = if offline.len() > k - 1 {
            Some(offline.remove(0))
        } else {
            None
        };
        debug_assert_eq!(offline.len(), k - 1);

        let online_final = self.online.w().clone();
        let online = init_online(init_policy(self.config.init, g), Some(&online_final), &self.spec.constants)?;

        self.meta = MetaWeights::new(k, b)?;
        self.offline = offline;
        self.online = online;
        self.g = g;
        self.t = 0;

        Ok(RolloverInfo {
            omega: omega(&trained.w, &anchor),
            anchor,
            gamma: train_cfg.gamma,
            solver_tol: train_cfg.grad_map_tol,
            trained,
            online_final,
            evicted,
        })
    }
}

/// A seeded random policy draws a fresh point per interval.
fn init_policy(policy: InitPolicy, g: usize) -> InitPolicy {
    match policy {
        InitPolicy::Random { seed } => InitPolicy::Random {
            seed: SplitMix64::substream(seed, TAG_ONLINE_INIT, g as u64).next_u64(),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::project_to_ball;

    fn spec() -> LossSpec {
        LossSpec::new(1.0, 1.0, 2).unwrap()
    }

    fn interval(g: usize, samples: Vec<Sample>) -> IntervalBuffer {
        IntervalBuffer { interval_index: g, samples }
    }

    fn toy_samples(n: usize, flip: bool, seed: u64) -> Vec<Sample> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| {
                let y = if i % 2 == 0 { Label::Pos } else { Label::Neg };
                let c = if flip { -0.5 } else { 0.5 } * y.sign();
                let x = vec![c + 0.3 * rng.next_normal(), 0.3 * rng.next_normal()];
                Sample::new(project_to_ball(&x, 1.0).unwrap().into_vec(), y)
            })
            .collect()
    }

    fn run_interval(pool: &mut ExpertPool, samples: &[Sample]) -> Vec<StepRecord> {
        samples.iter().map(|s| pool.process_labeled(s).unwrap()).collect()
    }

    #[test]
    fn effective_k_examples() {
        assert_eq!(effective_k(1, 5).unwrap(), 1);
        assert_eq!(effective_k(5, 5).unwrap(), 5);
        assert_eq!(effective_k(100, 5).unwrap(), 5);
        assert!(effective_k(0, 5).is_err());
        assert!(effective_k(3, 1).is_err());
    }

    #[test]
    fn single_expert_is_plain_ogd() {
        let spec = spec();
        let mut pool = ExpertPool::new(spec, PoolConfig::new(40, 5)).unwrap();
        let samples = toy_samples(40, false, 1);
        // hand-rolled projected OGD
        let mut w = [0.0f64, 0.0];
        for (i, s) in samples.iter().enumerate() {
            let rec = pool.process_labeled(s).unwrap();
            for (a, b) in rec.w_t.as_slice().iter().zip(w) {
                assert!((a - b).abs() <= 1e-12);
            }
            assert_eq!(rec.alpha_after, vec![1.0]);
            let m = s.y.sign() * (w[0] * s.x[0] + w[1] * s.x[1]);
            let coef = -s.y.sign() / (1.0 + m.exp()) / spec.c;
            let eta = 1.0 / (spec.beta() * (i + 1) as f64).sqrt();
            let mut next = [w[0] - eta * coef * s.x[0], w[1] - eta * coef * s.x[1]];
            let n = (next[0] * next[0] + next[1] * next[1]).sqrt();
            if n > 1.0 {
                next = [next[0] / n, next[1] / n];
            }
            w = next;
        }
        for (a, b) in pool.online().w().as_slice().iter().zip(w) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn process_rejects_full_interval() {
        let mut pool = ExpertPool::new(spec(), PoolConfig::new(2, 3)).unwrap();
        let samples = toy_samples(3, false, 2);
        pool.process_labeled(&samples[0]).unwrap();
        assert!(pool.rollover(&interval(1, samples[..1].to_vec())).is_err());
        pool.process_labeled(&samples[1]).unwrap();
        assert!(matches!(pool.process_labeled(&samples[2]), Err(Error::InvalidState(_))));
        assert!(pool.rollover(&interval(1, samples[..1].to_vec())).is_err());
        pool.rollover(&interval(1, samples[..2].to_vec())).unwrap();
        assert_eq!(pool.t(), 0);
        assert_eq!(pool.k(), 2);
    }

    #[test]
    fn scripted_two_expert_step() {
        let spec = spec();
        let b = 10;
        let mut pool = ExpertPool::new(spec, PoolConfig::new(b, 5)).unwrap();
        let first = toy_samples(b, false, 3);
        run_interval(&mut pool, &first);
        pool.rollover(&interval(1, first)).unwrap();
        assert_eq!(pool.k(), 2);
        assert_eq!(pool.meta().alpha(), &[0.25, 0.75]);

        let off = pool.offline()[0].as_slice().to_vec();
        let on = pool.online().w().as_slice().to_vec();
        let s = Sample::new(vec![0.6, -0.2], Label::Neg);
        let rec = pool.process_labeled(&s).unwrap();

        let c = (1.0 + 1f64.exp()).ln();
        let ell = |w: &[f64]| (1.0 + (w[0] * 0.6 - w[1] * 0.2).exp()).ln() / c;
        let w_t = [0.25 * off[0] + 0.75 * on[0], 0.25 * off[1] + 0.75 * on[1]];
        assert!((rec.w_t.as_slice()[0] - w_t[0]).abs() < 1e-15);
        assert!((rec.w_t.as_slice()[1] - w_t[1]).abs() < 1e-15);
        assert!((rec.loss_meta - ell(&w_t)).abs() < 1e-14);

        let nu = 4.0 * (2f64.ln() / b as f64).sqrt();
        let (l1, l2) = (ell(&off), ell(&on));
        let a1 = 0.25 * (-nu * l1).exp();
        let a2 = 0.75 * (-nu * l2).exp();
        assert!((pool.meta().alpha()[0] - a1 / (a1 + a2)).abs() < 1e-14);
        assert!((pool.meta().alpha()[1] - a2 / (a1 + a2)).abs() < 1e-14);

        // online expert steps at its own iterate with η_1 = D/√β
        let z = on[0] * 0.6 - on[1] * 0.2;
        let coef = 1.0 / (1.0 + (-z).exp()) / c;
        let eta = 1.0 / spec.beta().sqrt();
        let raw = [on[0] - eta * coef * 0.6, on[1] + eta * coef * 0.2];
        let n = (raw[0] * raw[0] + raw[1] * raw[1]).sqrt().max(1.0);
        let got = pool.online().w().as_slice();
        assert!((got[0] - raw[0] / n).abs() < 1e-14 && (got[1] - raw[1] / n).abs() < 1e-14);
    }

    #[test]
    fn equal_experts_keep_initial_weights() {
        let spec = spec();
        let b = 6;
        let mut cfg = PoolConfig::new(b, 5);
        cfg.gamma_floor = 1e9;
        cfg.init = InitPolicy::Warm;
        let mut pool = ExpertPool::new(spec, cfg).unwrap();
        // with the online expert never moving, every expert stays at 0
        let zero = Sample::new(vec![0.0, 0.0], Label::Pos);
        let zeros = vec![zero.clone(); b];
        for g in 1..=3 {
            run_interval(&mut pool, &zeros);
            pool.rollover(&interval(g, zeros.clone())).unwrap();
        }
        let init = pool.meta().alpha().to_vec();
        let rec = pool.process_labeled(&zero).unwrap();
        assert_eq!(rec.w_t.as_slice(), &[0.0, 0.0]);
        for (a, b) in pool.meta().alpha().iter().zip(&init) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn predict_tie_breaks_to_positive() {
        let mut pool = ExpertPool::new(spec(), PoolConfig::new(4, 3)).unwrap();
        assert_eq!(pool.predict_unlabeled(&[0.3, 0.1]).unwrap(), Label::Pos);
        pool.process_labeled(&Sample::new(vec![1.0, 0.0], Label::Pos)).unwrap();
        // the online expert moved toward +x
        assert_eq!(pool.predict_unlabeled(&[2.0, 0.0]).unwrap(), Label::Pos);
        assert_eq!(pool.predict_unlabeled(&[-2.0, 0.0]).unwrap(), Label::Neg);
        assert_eq!(pool.predict_unlabeled(&[0.0, 1.0]).unwrap(), Label::Pos);
        assert_eq!(pool.t(), 1);
    }

    fn grow(strategy: PriorityStrategy, intervals: usize) -> (ExpertPool, Vec<HypothesisVector>, Vec<RolloverInfo>) {
        let b = 20;
        let mut cfg = PoolConfig::new(b, 3);
        cfg.strategy = strategy;
        let mut pool = ExpertPool::new(spec(), cfg).unwrap();
        let mut trained = Vec::new();
        let mut infos = Vec::new();
        for g in 1..=intervals {
            let samples = toy_samples(b, g % 2 == 0, 10 + g as u64);
            run_interval(&mut pool, &samples);
            let info = pool.rollover(&interval(g, samples)).unwrap();
            assert_eq!(pool.k(), effective_k(pool.g(), 3).unwrap());
            assert_eq!(pool.meta().k(), pool.k());
            trained.push(info.trained.w.clone());
            infos.push(info);
        }
        (pool, trained, infos)
    }

    #[test]
    fn pool_grows_below_capacity() {
        let (pool, trained, infos) = grow(PriorityStrategy::Fifo, 2);
        assert_eq!(pool.g(), 3);
        assert_eq!(pool.offline(), &trained[..]);
        assert!(infos.iter().all(|i| i.evicted.is_none()));
    }

    #[test]
    fn fifo_evicts_oldest() {
        let (pool, trained, infos) = grow(PriorityStrategy::Fifo, 4);
        assert_eq!(pool.offline(), &trained[2..]);
        assert_eq!(infos[2].evicted.as_ref(), Some(&trained[0]));
        assert_eq!(infos[3].evicted.as_ref(), Some(&trained[1]));
    }

    #[test]
    fn weight_priority_keeps_newest_on_top() {
        let b = 20;
        let mut cfg = PoolConfig::new(b, 3);
        cfg.strategy = PriorityStrategy::WeightPriority;
        let mut pool = ExpertPool::new(spec(), cfg).unwrap();
        for g in 1..=5 {
            let samples = toy_samples(b, g % 2 == 0, 20 + g as u64);
            run_interval(&mut pool, &samples);
            let before: Vec<(f64, HypothesisVector)> = pool
                .offline()
                .iter()
                .cloned()
                .zip(pool.meta().alpha().iter().cloned())
                .map(|(w, a)| (a, w))
                .collect();
            let info = pool.rollover(&interval(g, samples)).unwrap();
            assert_eq!(pool.offline().last(), Some(&info.trained.w));
            if before.len() == 2 {
                // the lower-weighted survivor is evicted
                let low = if before[0].0 <= before[1].0 { &before[0].1 } else { &before[1].1 };
                assert_eq!(info.evicted.as_ref(), Some(low));
            }
        }
    }

    #[test]
    fn rollover_respects_regularizer_cap() {
        let (_, _, infos) = grow(PriorityStrategy::WeightPriority, 5);
        for info in infos {
            assert!(info.gamma >= info.anchor.weighted_loss / 4.0);
            assert!(info.omega <= info.anchor.weighted_loss / info.gamma + 10.0 * info.solver_tol);
            assert!(info.trained.objective <= info.trained.anchor_objective);
        }
    }

    #[test]
    fn warm_start_inherits_final_iterate() {
        let b = 8;
        let mut cfg = PoolConfig::new(b, 4);
        cfg.init = InitPolicy::Warm;
        let mut pool = ExpertPool::new(spec(), cfg).unwrap();
        let samples = toy_samples(b, false, 5);
        run_interval(&mut pool, &samples);
        let last = pool.online().w().clone();
        let info = pool.rollover(&interval(1, samples)).unwrap();
        assert_eq!(info.online_final, last);
        assert_eq!(pool.online().w(), &last);
        assert_eq!(pool.online().t(), 1);
    }

    #[test]
    fn outputs_stay_in_ball() {
        let b = 30;
        let mut pool = ExpertPool::new(spec(), PoolConfig::new(b, 5)).unwrap();
        for g in 1..=6 {
            let samples = toy_samples(b, g % 3 == 0, 40 + g as u64);
            for rec in run_interval(&mut pool, &samples) {
                assert!(rec.w_t.norm() <= 1.0 + 1e-12);
                assert!((rec.alpha_after.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(rec.losses_per_expert.iter().all(|l| (0.0..=1.0).contains(l)));
            }
            pool.rollover(&interval(g, samples)).unwrap();
        }
    }
}
