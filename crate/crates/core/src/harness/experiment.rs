//! Seeded CO₂-vs-OGD experiments with per-interval regret accounting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs, ExcessRiskTerms};
use crate::error::{Error, Result};
use crate::harness::erm::erm_oracle;
use crate::harness::ExperimentConfig;
use crate::hypothesis::Sample;
use crate::loss::LossSpec;
use crate::offline::omega;
use crate::online::{init_online, InitPolicy, OnlineExpertState};
use crate::pool::{ExpertPool, PoolConfig, RolloverInfo};
use crate::stream::{build_stream, fresh_samples, StreamMode, StreamSpec};

/// Absolute slack on the deterministic bound checks.
pub const BOUND_SLACK: f64 = 1e-6;
/// Slack on the regret identity, which only suffers rounding.
pub const IDENTITY_SLACK: f64 = 1e-9;
/// Additive slack of the distance diagnostic for trained offline experts.
pub const GAP_SLACK: f64 = 0.05;

/// One labeled step of one seed. Regrets are cumulative within the
/// interval, against that interval's ERM solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub seed: u64,
    pub g: usize,
    pub t: usize,
    pub loss_co2: f64,
    pub loss_ogd: f64,
    pub regret_co2: f64,
    pub regret_ogd: f64,
    /// Meta weights after the step, online expert last.
    pub alpha: Vec<f64>,
}

/// Cumulative losses over the first few steps of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyLosses {
    pub horizon: usize,
    pub co2: f64,
    /// OGD restarted from the origin at the interval start.
    pub ogd_fresh: f64,
    /// OGD running over the whole stream.
    pub ogd_stream: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalBounds {
    /// `√(T ln K)`.
    pub meta: f64,
    /// `6D√(Tβ)`.
    pub ogd: f64,
    pub co2_general: f64,
    pub co2_worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub g: usize,
    pub k: usize,
    /// Labeled steps in the interval.
    pub t: usize,
    /// `Σ f_t(w_t)`.
    pub loss_co2: f64,
    /// `Σ_t Σ_k α_t^k f_t(w_t^k)`.
    pub loss_weighted: f64,
    /// `Σ_t f_t(w_t^k)` per expert, online expert last.
    pub expert_losses: Vec<f64>,
    /// `Σ f_t(ŵ)` for the interval's ERM solution.
    pub loss_erm: f64,
    /// Mean loss of the ERM solution.
    pub erm_objective: f64,
    pub loss_ogd_stream: f64,
    pub loss_ogd_fresh: f64,
    pub regret_co2: f64,
    pub regret_me: f64,
    pub regret_ke: f64,
    pub regret_oe: f64,
    /// Weighted loss minus the best expert's loss.
    pub regret_meta_weighted: f64,
    pub regret_ogd_stream: f64,
    pub regret_ogd_fresh: f64,
    /// `Σ f_t(w*)` for the large-sample proxy of the population minimizer
    /// (synthetic mode only).
    pub loss_w_star: Option<f64>,
    pub early: EarlyLosses,
    pub k_condition: f64,
    pub k_condition_holds: bool,
    pub bounds: IntervalBounds,
}

/// Distance of a trained offline expert to the population minimizer proxy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDiagnostic {
    pub distance: f64,
    pub omega_star: f64,
    pub bound: f64,
    /// `distance ≤ bound + 0.05`.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineSummary {
    /// Interval the expert was trained on.
    pub g: usize,
    pub gamma: f64,
    pub weighted_loss: f64,
    pub omega: f64,
    /// `weighted_loss / γ + 10·tol`.
    pub omega_cap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap: Option<GapDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskReport {
    pub inputs: BoundInputs,
    pub terms: ExcessRiskTerms,
    pub total: f64,
    pub rademacher: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub steps: Vec<StepRow>,
    pub intervals: Vec<IntervalSummary>,
    pub offline: Vec<OfflineSummary>,
    /// Excess-risk bound evaluated on the final interval.
    pub excess_risk: ExcessRiskReport,
}

impl SeedReport {
    pub fn final_interval(&self) -> &IntervalSummary {
        self.intervals.last().expect("a run has at least one interval")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    /// Fraction of seeds where CO₂'s early cumulative loss on the final
    /// interval is at most fresh OGD's.
    pub early_win_rate: f64,
    /// Fraction of seeds where CO₂'s final-interval regret is at most the
    /// whole-stream OGD baseline's.
    pub final_regret_win_rate: f64,
    /// Same comparison against OGD restarted at the interval start.
    pub final_regret_win_rate_fresh: f64,
    /// Pass rate of the distance diagnostic over all trained experts.
    pub gap_pass_rate: Option<f64>,
    pub k_condition_rate: f64,
    pub mean_final_regret_co2: f64,
    pub mean_final_regret_ogd: f64,
    pub mean_final_regret_ogd_fresh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedReport>,
    pub aggregate: Aggregate,
}

/// Runs every seed of `config` in parallel. Dataset mode reads its samples
/// from `dataset`.
pub fn run_experiment(config: &ExperimentConfig, dataset: Option<&[Sample]>) -> Result<RunReport> {
    config.validate()?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed, dataset))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&runs);
    Ok(RunReport {
        config: config.clone(),
        runs,
        aggregate,
    })
}

struct Tally {
    co2: f64,
    weighted: f64,
    experts: Vec<f64>,
    ogd_stream: f64,
    ogd_fresh: f64,
    early: EarlyLosses,
}

fn run_seed(config: &ExperimentConfig, seed: u64, dataset: Option<&[Sample]>) -> Result<SeedReport> {
    let stream_spec = StreamSpec { seed, ..config.stream.clone() };
    let stream = build_stream(&stream_spec, dataset).map_err(|e| e.in_run(seed, 0))?;
    let spec = LossSpec::new(stream_spec.d, config.r, stream_spec.dim)?;
    let b = stream_spec.b;

    let pool_cfg = PoolConfig {
        b,
        k_max: config.k_max,
        strategy: config.strategy,
        init: config.init,
        gamma_floor: config.gamma_floor,
        solver_tol: config.solver_tol,
    };
    let mut pool = ExpertPool::new(spec, pool_cfg)?;
    let mut ogd_stream = init_online(InitPolicy::Cold, None, &spec.constants)?;

    let mut steps = Vec::with_capacity(stream_spec.g * b);
    let mut intervals = Vec::with_capacity(stream_spec.g);
    let mut offline = Vec::new();
    let last = stream.intervals.len();

    for (idx, interval) in stream.intervals.iter().enumerate() {
        let g = interval.interval_index;
        let ctx = |e: Error| e.in_run(seed, g);
        let samples = &interval.samples;
        let erm = erm_oracle(samples, &spec, config.erm_tol).map_err(ctx)?;
        let k = pool.k();
        let mut ogd_fresh = init_online(InitPolicy::Cold, None, &spec.constants)?;

        let mut tally = Tally {
            co2: 0.0,
            weighted: 0.0,
            experts: vec![0.0; k],
            ogd_stream: 0.0,
            ogd_fresh: 0.0,
            early: EarlyLosses {
                horizon: config.early_horizon.min(b),
                co2: 0.0,
                ogd_fresh: 0.0,
                ogd_stream: 0.0,
            },
        };
        let mut loss_erm = 0.0;
        for s in samples {
            let rec = pool.process_labeled(s).map_err(ctx)?;
            let l_stream = step_ogd(&mut ogd_stream, s, &spec).map_err(ctx)?;
            let l_fresh = step_ogd(&mut ogd_fresh, s, &spec).map_err(ctx)?;
            let l_erm = spec.loss(&erm.w, s)?;

            tally.co2 += rec.loss_meta;
            tally.weighted += rec.alpha_before.iter().zip(&rec.losses_per_expert).map(|(a, l)| a * l).sum::<f64>();
            tally.experts.iter_mut().zip(&rec.losses_per_expert).for_each(|(t, l)| *t += l);
            tally.ogd_stream += l_stream;
            tally.ogd_fresh += l_fresh;
            loss_erm += l_erm;
            if rec.t <= tally.early.horizon {
                tally.early.co2 = tally.co2;
                tally.early.ogd_fresh = tally.ogd_fresh;
                tally.early.ogd_stream = tally.ogd_stream;
            }
            steps.push(StepRow {
                seed,
                g,
                t: rec.t,
                loss_co2: rec.loss_meta,
                loss_ogd: l_stream,
                regret_co2: tally.co2 - loss_erm,
                regret_ogd: tally.ogd_stream - loss_erm,
                alpha: rec.alpha_after,
            });
        }

        let loss_w_star = if stream_spec.mode == StreamMode::Synthetic {
            let w_star = w_star_proxy(&stream_spec, &stream.means[idx], g, &spec, config.erm_tol).map_err(ctx)?;
            Some(samples.iter().map(|s| spec.loss(&w_star, s)).sum::<Result<f64>>()?)
        } else {
            None
        };
        let summary = summarize(g, k, samples.len(), &tally, loss_erm, erm.risk, loss_w_star, &spec);
        check_interval(&summary).map_err(ctx)?;
        intervals.push(summary);

        if idx + 1 < last {
            let info = pool.rollover(interval).map_err(ctx)?;
            let gap = match stream_spec.mode {
                StreamMode::Synthetic => Some(
                    gap_diagnostic(&info, &stream_spec, &stream.means[idx], g, &spec, config.erm_tol).map_err(ctx)?,
                ),
                StreamMode::Libsvm => None,
            };
            let summary = OfflineSummary {
                g,
                gamma: info.gamma,
                weighted_loss: info.anchor.weighted_loss,
                omega: info.omega,
                omega_cap: info.anchor.weighted_loss / info.gamma + 10.0 * info.solver_tol,
                iterations: info.trained.iterations,
                converged: info.trained.converged,
                gap,
            };
            if summary.omega > summary.omega_cap {
                return Err(ctx(Error::InvariantViolation(format!(
                    "regularizer {} exceeds weighted_loss/gamma cap {}",
                    summary.omega, summary.omega_cap
                ))));
            }
            offline.push(summary);
        }
    }

    let final_interval = &stream.intervals[last - 1];
    let excess_risk = excess_risk_report(
        config,
        &spec,
        pool.k(),
        intervals.last().expect("non-empty"),
        offline.last(),
        &final_interval.samples,
    )
    .map_err(|e| e.in_run(seed, final_interval.interval_index))?;

    Ok(SeedReport {
        seed,
        steps,
        intervals,
        offline,
        excess_risk,
    })
}

/// Loss at the current iterate, then one OGD step.
fn step_ogd(state: &mut OnlineExpertState, s: &Sample, spec: &LossSpec) -> Result<f64> {
    let loss = spec.loss(state.w(), s)?;
    let grad = spec.grad_loss(state.w(), s)?;
    *state = state.ogd_step(&grad)?;
    Ok(loss)
}

fn w_star_proxy(
    stream_spec: &StreamSpec,
    means: &crate::stream::ClassMeans,
    g: usize,
    spec: &LossSpec,
    tol: f64,
) -> Result<crate::hypothesis::HypothesisVector> {
    let fresh = fresh_samples(stream_spec, means, g, 10 * stream_spec.b)?;
    Ok(erm_oracle(&fresh, spec, tol)?.w)
}

fn gap_diagnostic(
    info: &RolloverInfo,
    stream_spec: &StreamSpec,
    means: &crate::stream::ClassMeans,
    g: usize,
    spec: &LossSpec,
    tol: f64,
) -> Result<GapDiagnostic> {
    let w_star = w_star_proxy(stream_spec, means, g, spec, tol)?;
    let omega_star = omega(&w_star, &info.anchor);
    let bound = bounds::gap_bound_thm2(omega_star, spec.beta(), info.gamma, info.anchor.weighted_loss)?;
    let distance = crate::hypothesis::dist_sq(info.trained.w.as_slice(), w_star.as_slice()).sqrt();
    Ok(GapDiagnostic {
        distance,
        omega_star,
        bound,
        holds: distance <= bound + GAP_SLACK,
    })
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    g: usize,
    k: usize,
    t: usize,
    tally: &Tally,
    loss_erm: f64,
    erm_objective: f64,
    loss_w_star: Option<f64>,
    spec: &LossSpec,
) -> IntervalSummary {
    let best = tally.experts.iter().cloned().fold(f64::INFINITY, f64::min);
    let online = *tally.experts.last().expect("online expert present");
    let regret_ke = best - loss_erm;
    let (d, beta) = (spec.d(), spec.beta());
    let co2 = bounds::co2_regret_bounds(t, k, d, beta, regret_ke);
    let k_condition = bounds::k_condition(t, d, beta, regret_ke);
    IntervalSummary {
        g,
        k,
        t,
        loss_co2: tally.co2,
        loss_weighted: tally.weighted,
        expert_losses: tally.experts.clone(),
        loss_erm,
        erm_objective,
        loss_ogd_stream: tally.ogd_stream,
        loss_ogd_fresh: tally.ogd_fresh,
        regret_co2: tally.co2 - loss_erm,
        regret_me: tally.co2 - best,
        regret_ke,
        regret_oe: online - loss_erm,
        regret_meta_weighted: tally.weighted - best,
        regret_ogd_stream: tally.ogd_stream - loss_erm,
        regret_ogd_fresh: tally.ogd_fresh - loss_erm,
        loss_w_star,
        early: tally.early,
        k_condition,
        k_condition_holds: k as f64 <= k_condition,
        bounds: IntervalBounds {
            meta: bounds::meta_regret_bound(t, k),
            ogd: bounds::ogd_regret_bound(t, d, beta),
            co2_general: co2.general,
            co2_worst: co2.worst,
        },
    }
}

/// Deterministic guarantees that must hold on every interval.
pub fn check_interval(s: &IntervalSummary) -> Result<()> {
    let violation = |what: &str, lhs: f64, rhs: f64| {
        Err(Error::InvariantViolation(format!("{what}: measured {lhs} exceeds bound {rhs}")))
    };
    if s.regret_meta_weighted > s.bounds.meta + BOUND_SLACK {
        return violation("meta-expert regret", s.regret_meta_weighted, s.bounds.meta);
    }
    if s.regret_oe > s.bounds.ogd + BOUND_SLACK {
        return violation("online expert regret", s.regret_oe, s.bounds.ogd);
    }
    if s.regret_co2 > s.bounds.co2_general + BOUND_SLACK {
        return violation("CO2 regret (general form)", s.regret_co2, s.bounds.co2_general);
    }
    if s.regret_co2 > s.bounds.co2_worst + BOUND_SLACK {
        return violation("CO2 regret (worst-case form)", s.regret_co2, s.bounds.co2_worst);
    }
    if s.regret_ke > s.regret_oe + IDENTITY_SLACK {
        return violation("best-expert regret vs online expert regret", s.regret_ke, s.regret_oe);
    }
    let gap = (s.regret_me + s.regret_ke - s.regret_co2).abs();
    if gap > IDENTITY_SLACK {
        return Err(Error::InvariantViolation(format!(
            "regret decomposition off by {gap:e}"
        )));
    }
    Ok(())
}

fn excess_risk_report(
    config: &ExperimentConfig,
    spec: &LossSpec,
    k: usize,
    last: &IntervalSummary,
    last_offline: Option<&OfflineSummary>,
    samples: &[Sample],
) -> Result<ExcessRiskReport> {
    let eigenvalues = bounds::estimate_eigenvalues(samples)?;
    let inputs = BoundInputs {
        t: last.t,
        k,
        b: config.stream.b,
        d: spec.d(),
        r: spec.r(),
        beta: spec.beta(),
        gamma: last_offline.map_or(config.gamma_floor, |o| o.gamma),
        delta: config.delta,
        regret_ke: last.regret_ke,
        omega_star: last_offline.and_then(|o| o.gap).map_or(0.0, |g| g.omega_star),
        weighted_loss: last_offline.map_or(0.0, |o| o.weighted_loss),
        eigenvalues,
    };
    let terms = bounds::excess_risk_terms(&inputs)?;
    let rademacher = bounds::rademacher_bound(inputs.t, inputs.d, inputs.r, &inputs.eigenvalues)?;
    Ok(ExcessRiskReport {
        total: terms.total(),
        terms,
        rademacher,
        inputs,
    })
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn aggregate(runs: &[SeedReport]) -> Aggregate {
    let n = runs.len();
    let finals: Vec<&IntervalSummary> = runs.iter().map(SeedReport::final_interval).collect();
    let early_wins = finals.iter().filter(|s| s.early.co2 <= s.early.ogd_fresh).count();
    let regret_wins = finals.iter().filter(|s| s.regret_co2 <= s.regret_ogd_stream).count();
    let fresh_wins = finals.iter().filter(|s| s.regret_co2 <= s.regret_ogd_fresh).count();
    let gaps: Vec<bool> = runs
        .iter()
        .flat_map(|r| r.offline.iter().filter_map(|o| o.gap.map(|g| g.holds)))
        .collect();
    let all: Vec<&IntervalSummary> = runs.iter().flat_map(|r| r.intervals.iter()).collect();
    let mean = |f: fn(&IntervalSummary) -> f64| finals.iter().map(|s| f(s)).sum::<f64>() / n.max(1) as f64;
    Aggregate {
        seeds: n,
        early_win_rate: rate(early_wins, n),
        final_regret_win_rate: rate(regret_wins, n),
        final_regret_win_rate_fresh: rate(fresh_wins, n),
        gap_pass_rate: (!gaps.is_empty()).then(|| rate(gaps.iter().filter(|h| **h).count(), gaps.len())),
        k_condition_rate: rate(all.iter().filter(|s| s.k_condition_holds).count(), all.len()),
        mean_final_regret_co2: mean(|s| s.regret_co2),
        mean_final_regret_ogd: mean(|s| s.regret_ogd_stream),
        mean_final_regret_ogd_fresh: mean(|s| s.regret_ogd_fresh),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seeds: Vec<u64>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::synthetic(StreamSpec::synthetic(4, 40, 2, 0), seeds);
        cfg.k_max = 3;
        cfg
    }

    #[test]
    fn step_rows_count_and_identity() {
        let report = run_experiment(&small_config(vec![1, 2]), None).unwrap();
        assert_eq!(report.runs.len(), 2);
        for run in &report.runs {
            assert_eq!(run.steps.len(), 4 * 40);
            assert_eq!(run.offline.len(), 3);
            for s in &run.intervals {
                assert!((s.regret_me + s.regret_ke - s.regret_co2).abs() <= 1e-9);
                let last = run.steps.iter().rfind(|r| r.g == s.g).unwrap();
                assert!((last.regret_co2 - s.regret_co2).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn seeds_are_independent_of_scheduling() {
        let both = run_experiment(&small_config(vec![5, 6]), None).unwrap();
        let single = run_experiment(&small_config(vec![6]), None).unwrap();
        assert_eq!(both.runs[1], single.runs[0]);
    }

    #[test]
    fn single_interval_matches_stream_ogd() {
        let mut cfg = ExperimentConfig::synthetic(StreamSpec::synthetic(1, 50, 2, 3), vec![3]);
        cfg.k_max = 2;
        let report = run_experiment(&cfg, None).unwrap();
        for row in &report.runs[0].steps {
            assert_eq!(row.loss_co2, row.loss_ogd);
            assert_eq!(row.regret_co2, row.regret_ogd);
        }
    }

    #[test]
    fn interval_check_flags_violations() {
        let report = run_experiment(&small_config(vec![9]), None).unwrap();
        let mut s = report.runs[0].intervals[1].clone();
        assert!(check_interval(&s).is_ok());
        s.regret_meta_weighted = s.bounds.meta + 1.0;
        assert!(matches!(check_interval(&s), Err(Error::InvariantViolation(_))));
        let mut s = report.runs[0].intervals[1].clone();
        s.regret_me += 1e-6;
        assert!(check_interval(&s).is_err());
    }

    #[test]
    fn dataset_mode_requires_samples() {
        let mut spec = StreamSpec::synthetic(2, 10, 2, 0);
        spec.mode = StreamMode::Libsvm;
        let cfg = ExperimentConfig::synthetic(spec, vec![1]);
        let err = run_experiment(&cfg, None).unwrap_err();
        assert!(matches!(err.root(), Error::InvalidArgument(_)));
    }
}
