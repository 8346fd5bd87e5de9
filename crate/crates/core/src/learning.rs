//! Cross-agent learning: trainer flights, composition of the target's
//! learning signal, the target flight and the closed-form error prediction.
//!
//! Trainer `k` contributes
//!
//! `sₖ = Λₖ⁻¹ M̂ₖ⁻¹ (αₖ{sₖ'} + Lₖ{hₖ})`
//!
//! where `sₖ'` and `hₖ` are the learning signal the trainer flew with and
//! its tracking error. The target receives `s = Σₖ sₖ`. Trainers fly
//! `head_start` samples ahead of the target, which bounds the total filter
//! advance any trainer chain may use.

use serde::{Deserialize, Serialize};

use crate::agents::{derive_dynamics_map, AgentModel, DynamicsMap};
use crate::error::{Error, Result};
use crate::filter_design::{
    convergence_report, design_learning_filter, ConvergenceReport, LearningFilter, LearningFilterSet,
};
use crate::lti::{simulate, simulate_over, FrequencyGrid, Signal, TransferFunction, TransferMatrix};
use crate::reference::{apply_scenario, ReferenceTrajectory, ScenarioMap};
use crate::scalar::Scalar;

/// Which convergence bound must hold before a run proceeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundPolicy {
    /// margin < 1/N
    #[default]
    Strict,
    /// margin < 1
    Unified,
    None,
}

impl BoundPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BoundPolicy::Strict => "strict",
            BoundPolicy::Unified => "unified",
            BoundPolicy::None => "none",
        }
    }
}

/// What learning signal trainers themselves fly with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chaining {
    /// Every trainer flies with `s = 0`.
    #[default]
    Parallel,
    /// Trainer `j` flies with the signal composed from trainers `< j`,
    /// scaled into its own scenario frame.
    Sequential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningConfig<S> {
    /// Error gate: `Lₖ{hₖ}` only sees samples with `‖hₖ(t)‖ > delta_h`.
    pub delta_h: S,
    /// Signal gate: `αₖ{sₖ}` only sees samples with `‖sₖ(t)‖ > delta_s`.
    pub delta_s: S,
    /// Samples by which trainers lead the target.
    pub head_start: usize,
    pub enforce: BoundPolicy,
    pub chaining: Chaining,
}

impl<S: Scalar> Default for LearningConfig<S> {
    fn default() -> Self {
        Self {
            delta_h: S::zero(),
            delta_s: S::zero(),
            head_start: 1,
            enforce: BoundPolicy::Strict,
            chaining: Chaining::Parallel,
        }
    }
}

/// One trainer flight.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord<S> {
    pub trainer: String,
    /// Learning signal the trainer flew with.
    pub s_k: Signal<S>,
    /// Trainer tracking error.
    pub h_k: Signal<S>,
    pub reference: ReferenceTrajectory<S>,
}

impl<S: Scalar> TrainingRecord<S> {
    fn truncated(&self, len: usize) -> Self {
        Self {
            trainer: self.trainer.clone(),
            s_k: self.s_k.truncated(len),
            h_k: self.h_k.truncated(len),
            reference: self.reference.truncated(len),
        }
    }
}

/// Flies `agent` along `reference` with feedforward `s`, starting at rest on
/// the first reference sample. Returns the tracking error
/// `h = T{r_d − r_d(0)} + F{s}` and the realized trajectory `r_d − h`.
pub fn run_closed_loop<S: Scalar>(
    agent: &AgentModel<S>,
    reference: &ReferenceTrajectory<S>,
    s: &Signal<S>,
) -> Result<(Signal<S>, Signal<S>)> {
    let r = &reference.signal;
    if s.len() != r.len() || s.channels() != r.channels() {
        return Err(Error::DimensionMismatch(format!(
            "learning signal is {}x{} but reference is {}x{}",
            s.len(),
            s.channels(),
            r.len(),
            r.channels()
        )));
    }
    if s.sample_period() != r.sample_period() || agent.sample_period != r.sample_period() {
        return Err(Error::DimensionMismatch(format!(
            "sample periods differ: agent {}, reference {}, signal {}",
            agent.sample_period,
            r.sample_period(),
            s.sample_period()
        )));
    }
    let h = simulate(&agent.t, &reference.relative())?.add(&simulate(&agent.f, s)?)?;
    let realized = r.sub(&h)?;
    Ok((h, realized))
}

/// `M̂⁻¹ Lₖ` and `M̂⁻¹ αₖ I` for one trainer.
fn trainer_chains<S: Scalar>(
    map: &DynamicsMap<S>,
    filter: &LearningFilter<S>,
) -> Result<(TransferMatrix<S>, TransferMatrix<S>)> {
    let on_h = map.m_inverse.series(&filter.l)?;
    let on_s = map
        .m_inverse
        .series(&TransferMatrix::scalar_identity(&filter.alpha, 3))?;
    Ok((on_h, on_s))
}

/// Preview a trainer's chain consumes.
pub fn required_preview<S: Scalar>(map: &DynamicsMap<S>, filter: &LearningFilter<S>) -> Result<usize> {
    let (on_h, on_s) = trainer_chains(map, filter)?;
    Ok(on_h.max_lead().max(on_s.max_lead()))
}

fn check_counts<S>(
    records: usize,
    scenario_maps: &[ScenarioMap<S>],
    dynamics_maps: &[DynamicsMap<S>],
    filters: &LearningFilterSet<S>,
) -> Result<()> {
    if scenario_maps.len() != records || dynamics_maps.len() != records || filters.len() != records {
        return Err(Error::DimensionMismatch(format!(
            "{records} training records but {} scenario maps, {} dynamics maps and {} filters",
            scenario_maps.len(),
            dynamics_maps.len(),
            filters.len()
        )));
    }
    Ok(())
}

fn common_length<S: Scalar>(records: &[TrainingRecord<S>]) -> Result<(usize, S)> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidParameter("no training records".into()))?;
    let n = first.h_k.len();
    let period = first.h_k.sample_period();
    for r in records {
        if r.h_k.len() != n || r.s_k.len() != n || r.reference.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "training record `{}` is not aligned with the others",
                r.trainer
            )));
        }
        if r.h_k.sample_period() != period || r.s_k.sample_period() != period {
            return Err(Error::DimensionMismatch(format!(
                "training record `{}` has a different sample period",
                r.trainer
            )));
        }
    }
    Ok((n, period))
}

/// Composes the target's learning signal from trainer records.
///
/// Records must extend `head_start` samples beyond the target horizon; the
/// result has `len − head_start` samples. The `delta_h` / `delta_s` gates apply to
/// the inputs of each chain.
pub fn compose_learning_signal<S: Scalar>(
    records: &[TrainingRecord<S>],
    scenario_maps: &[ScenarioMap<S>],
    dynamics_maps: &[DynamicsMap<S>],
    filters: &LearningFilterSet<S>,
    cfg: &LearningConfig<S>,
) -> Result<Signal<S>> {
    check_counts(records.len(), scenario_maps, dynamics_maps, filters)?;
    let (n_in, period) = common_length(records)?;
    let horizon = n_in
        .checked_sub(cfg.head_start)
        .ok_or(Error::InsufficientFuture {
            needed: cfg.head_start,
            available: n_in,
            lead: cfg.head_start,
        })?;
    let mut total = Signal::zeros(period, 3, horizon)?;
    for (k, record) in records.iter().enumerate() {
        let (on_h, on_s) = trainer_chains(&dynamics_maps[k], &filters.filters[k])?;
        let required = on_h.max_lead().max(on_s.max_lead());
        if required > cfg.head_start {
            return Err(Error::Causality {
                trainer: k,
                required,
                head_start: cfg.head_start,
            });
        }
        let from_h = simulate_over(&on_h, &record.h_k.gated(cfg.delta_h), horizon)?;
        let from_s = simulate_over(&on_s, &record.s_k.gated(cfg.delta_s), horizon)?;
        let part = from_h
            .add(&from_s)?
            .scaled_channels(&scenario_maps[k].scale_inverse())?;
        total = total.add(&part)?;
    }
    Ok(total)
}

/// Closed-form target error `Σₖ Λₖ⁻¹ M̂ₖ⁻¹ (αₖI + F Lₖ){hₖ}` over `horizon`
/// samples, gates off.
///
/// `F` acts on the output of `M̂ₖ⁻¹ Lₖ` from `t = 0` on, as in flight: a
/// filter with lead ≥ 2 would otherwise feed `F` learning signal from before
/// the target started.
pub fn predicted_error<S: Scalar>(
    records: &[TrainingRecord<S>],
    scenario_maps: &[ScenarioMap<S>],
    dynamics_maps: &[DynamicsMap<S>],
    filters: &LearningFilterSet<S>,
    f: &TransferMatrix<S>,
    horizon: usize,
) -> Result<Signal<S>> {
    check_counts(records.len(), scenario_maps, dynamics_maps, filters)?;
    let (_, period) = common_length(records)?;
    let mut total = Signal::zeros(period, 3, horizon)?;
    for (k, record) in records.iter().enumerate() {
        let (on_h, on_s) = trainer_chains(&dynamics_maps[k], &filters.filters[k])?;
        let learned = simulate(f, &simulate_over(&on_h, &record.h_k, horizon)?)?;
        let part = simulate_over(&on_s, &record.h_k, horizon)?
            .add(&learned)?
            .scaled_channels(&scenario_maps[k].scale_inverse())?;
        total = total.add(&part)?;
    }
    Ok(total)
}

/// How a trainer's `M̂⁻¹` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsSource<S> {
    /// Trainer shares the target's dynamics.
    Identity,
    /// User-supplied FIR `M̂⁻¹`.
    Explicit(TransferMatrix<S>),
    /// Least-squares fit to `Gₖ / G`.
    Derived { taps: usize, lead: usize },
}

/// Everything needed to fly one trainer and design its filters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerSetup<S> {
    pub agent: AgentModel<S>,
    pub scenario: ScenarioMap<S>,
    pub dynamics: DynamicsSource<S>,
    pub alpha: TransferFunction<S>,
    pub taps: usize,
    pub lead: usize,
}

/// A resolved experiment: built agents, sampled target reference, trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment<S> {
    pub grid: FrequencyGrid<S>,
    pub target: AgentModel<S>,
    pub reference: ReferenceTrajectory<S>,
    pub trainers: Vec<TrainerSetup<S>>,
    pub learning: LearningConfig<S>,
}

/// Filters, maps and convergence blocks derived from an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared<S> {
    pub maps: Vec<DynamicsMap<S>>,
    pub filters: LearningFilterSet<S>,
    /// `Λₖ⁻¹ M̂ₖ⁻¹ (αₖI + F Lₖ)`
    pub blocks: Vec<TransferMatrix<S>>,
    /// `None` for a run without trainers.
    pub convergence: Option<ConvergenceReport<S>>,
}

/// `Λ⁻¹ M̂⁻¹ (αI + F L)`
pub fn convergence_block<S: Scalar>(
    scenario: &ScenarioMap<S>,
    map: &DynamicsMap<S>,
    filter: &LearningFilter<S>,
    f: &TransferMatrix<S>,
) -> Result<TransferMatrix<S>> {
    let inv = scenario.scale_inverse();
    #[rustfmt::skip]
    let lambda_inv = [
        inv[0], S::zero(), S::zero(),
        S::zero(), inv[1], S::zero(),
        S::zero(), S::zero(), inv[2],
    ];
    map.m_inverse
        .series(&filter.residual_operator(f)?)?
        .scale_by(&lambda_inv, 3)
}

/// Designs every trainer's map and filters and evaluates convergence.
pub fn prepare<S: Scalar>(exp: &Experiment<S>) -> Result<Prepared<S>> {
    let mut maps = Vec::with_capacity(exp.trainers.len());
    let mut filters = Vec::with_capacity(exp.trainers.len());
    let mut blocks = Vec::with_capacity(exp.trainers.len());
    for (k, tr) in exp.trainers.iter().enumerate() {
        let stage = |what: &str| format!("trainer {k} (`{}`): {what}", tr.agent.name);
        let map = match &tr.dynamics {
            DynamicsSource::Identity => DynamicsMap::identity(),
            DynamicsSource::Explicit(m) => {
                DynamicsMap::explicit(&exp.target, &tr.agent, m.clone(), &exp.grid)
                    .map_err(|e| e.in_stage(stage("dynamics map")))?
            }
            DynamicsSource::Derived { taps, lead } => {
                derive_dynamics_map(&exp.target, &tr.agent, *taps, *lead, &exp.grid)
                    .map_err(|e| e.in_stage(stage("dynamics map")))?
            }
        };
        let filter = design_learning_filter(&exp.target.f, &tr.alpha, tr.taps, tr.lead, &exp.grid)
            .map_err(|e| e.in_stage(stage("learning filter")))?;
        let required = required_preview(&map, &filter)?;
        if required > exp.learning.head_start {
            return Err(Error::Causality {
                trainer: k,
                required,
                head_start: exp.learning.head_start,
            });
        }
        blocks.push(convergence_block(&tr.scenario, &map, &filter, &exp.target.f)?);
        maps.push(map);
        filters.push(filter);
    }
    let convergence = if blocks.is_empty() {
        None
    } else {
        Some(convergence_report(&blocks, &exp.grid).map_err(|e| e.in_stage("convergence report"))?)
    };
    Ok(Prepared {
        maps,
        filters: LearningFilterSet { filters },
        blocks,
        convergence,
    })
}

/// Refuses a report that violates the policy's bound.
pub fn enforce_bound<S: Scalar>(report: &ConvergenceReport<S>, policy: BoundPolicy) -> Result<()> {
    let (ok, bound) = match policy {
        BoundPolicy::Strict => (report.satisfied_strict, report.bound_strict),
        BoundPolicy::Unified => (report.satisfied_unified, report.bound_unified),
        BoundPolicy::None => return Ok(()),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::ConvergenceRefused {
            margin: report.margin.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
            policy: policy.name().into(),
        })
    }
}

/// Per-axis and overall error statistics, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics<S> {
    pub rms: [S; 3],
    pub max: [S; 3],
    pub rms_total: S,
    pub max_total: S,
}

impl<S: Scalar> ErrorMetrics<S> {
    pub fn of(h: &Signal<S>) -> Self {
        let rms = h.channel_rms();
        let max = h.channel_max_abs();
        Self {
            rms: [rms[0], rms[1], rms[2]],
            max: [max[0], max[1], max[2]],
            rms_total: h.rms(),
            max_total: h.max_abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics<S> {
    pub target: ErrorMetrics<S>,
    pub baseline: ErrorMetrics<S>,
    /// Trainers over the target's horizon.
    pub trainers: Vec<ErrorMetrics<S>>,
    /// Target RMS over no-learning baseline RMS.
    pub target_vs_baseline: S,
    /// Target RMS over each trainer's RMS.
    pub target_vs_trainers: Vec<S>,
}

/// Full record of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<S> {
    pub reference: ReferenceTrajectory<S>,
    pub target_h: Signal<S>,
    pub target_r: Signal<S>,
    pub composed_s: Signal<S>,
    /// Target error with `s = 0`.
    pub baseline_h: Signal<S>,
    pub per_trainer: Vec<TrainingRecord<S>>,
    pub predicted_h: Signal<S>,
    pub convergence: Option<ConvergenceReport<S>>,
    pub filters: LearningFilterSet<S>,
    pub maps: Vec<DynamicsMap<S>>,
    pub metrics: RunMetrics<S>,
}

/// Designs, checks the enforced bound, and simulates.
pub fn run_experiment<S: Scalar>(exp: &Experiment<S>) -> Result<RunResult<S>> {
    let prepared = prepare(exp).map_err(|e| e.in_stage("design"))?;
    if let Some(report) = &prepared.convergence {
        enforce_bound(report, exp.learning.enforce)?;
    }
    execute(exp, &prepared)
}

/// Target flight with no learning.
pub fn run_baseline<S: Scalar>(exp: &Experiment<S>) -> Result<RunResult<S>> {
    let bare = Experiment {
        trainers: Vec::new(),
        ..exp.clone()
    };
    execute(&bare, &prepare(&bare)?)
}

fn ratio<S: Scalar>(num: S, den: S) -> S {
    if den > S::zero() {
        num / den
    } else if num > S::zero() {
        S::infinity()
    } else {
        S::zero()
    }
}

/// Simulates an experiment with already designed filters and maps.
pub fn execute<S: Scalar>(exp: &Experiment<S>, prepared: &Prepared<S>) -> Result<RunResult<S>> {
    let n = exp.reference.len();
    let period = exp.reference.signal.sample_period();
    let hs = exp.learning.head_start;
    let count = exp.trainers.len();
    if prepared.maps.len() != count || prepared.filters.len() != count {
        return Err(Error::DimensionMismatch(
            "prepared filters do not match the trainer list".into(),
        ));
    }
    let scenarios: Vec<ScenarioMap<S>> = exp.trainers.iter().map(|t| t.scenario).collect();

    let zeros = Signal::zeros(period, 3, n)?;
    let (baseline_h, _) =
        run_closed_loop(&exp.target, &exp.reference, &zeros).map_err(|e| e.in_stage("baseline flight"))?;

    // Trainer j flies (count - j) head starts ahead of the target when chained.
    let mut records: Vec<TrainingRecord<S>> = Vec::with_capacity(count);
    for (j, tr) in exp.trainers.iter().enumerate() {
        let len = match exp.learning.chaining {
            Chaining::Parallel => n + hs,
            Chaining::Sequential => n + (count - j) * hs,
        };
        let reference = apply_scenario(&tr.scenario, &exp.reference.extended(len - n));
        let s_k = match exp.learning.chaining {
            Chaining::Sequential if j > 0 => {
                let upstream: Vec<TrainingRecord<S>> =
                    records.iter().map(|r| r.truncated(len + hs)).collect();
                let filters = LearningFilterSet {
                    filters: prepared.filters.filters[..j].to_vec(),
                };
                compose_learning_signal(
                    &upstream,
                    &scenarios[..j],
                    &prepared.maps[..j],
                    &filters,
                    &exp.learning,
                )
                .map_err(|e| e.in_stage(format!("chained signal for trainer {j}")))?
                .scaled_channels(&tr.scenario.scale)?
            }
            _ => Signal::zeros(period, 3, len)?,
        };
        let (h_k, _) = run_closed_loop(&tr.agent, &reference, &s_k)
            .map_err(|e| e.in_stage(format!("trainer {j} flight")))?;
        records.push(TrainingRecord {
            trainer: tr.agent.name.clone(),
            s_k,
            h_k,
            reference,
        });
    }
    let aligned: Vec<TrainingRecord<S>> = records.iter().map(|r| r.truncated(n + hs)).collect();

    let composed_s = if count == 0 {
        zeros.clone()
    } else {
        compose_learning_signal(
            &aligned,
            &scenarios,
            &prepared.maps,
            &prepared.filters,
            &exp.learning,
        )
        .map_err(|e| e.in_stage("learning signal"))?
    };
    let (target_h, target_r) =
        run_closed_loop(&exp.target, &exp.reference, &composed_s).map_err(|e| e.in_stage("target flight"))?;

    // Σ αₖ ≠ 1 leaves (1 − Σ αₖ) T{r_d} uncancelled.
    let alpha_sum = prepared
        .filters
        .filters
        .iter()
        .fold(TransferFunction::zero(), |acc, f| acc.parallel(&f.alpha));
    let leftover = TransferFunction::one().parallel(&alpha_sum.neg());
    let mut predicted_h = if count == 0 {
        zeros.clone()
    } else {
        predicted_error(
            &aligned,
            &scenarios,
            &prepared.maps,
            &prepared.filters,
            &exp.target.f,
            n,
        )
        .map_err(|e| e.in_stage("predicted error"))?
    };
    if !leftover.is_zero() {
        let op = TransferMatrix::scalar_identity(&leftover, 3).series(&exp.target.t)?;
        predicted_h = predicted_h.add(&simulate(&op, &exp.reference.relative())?)?;
    }

    let target = ErrorMetrics::of(&target_h);
    let baseline = ErrorMetrics::of(&baseline_h);
    let trainers: Vec<ErrorMetrics<S>> = records
        .iter()
        .map(|r| ErrorMetrics::of(&r.h_k.truncated(n)))
        .collect();
    let metrics = RunMetrics {
        target_vs_baseline: ratio(target.rms_total, baseline.rms_total),
        target_vs_trainers: trainers
            .iter()
            .map(|m| ratio(target.rms_total, m.rms_total))
            .collect(),
        target,
        baseline,
        trainers,
    };

    Ok(RunResult {
        reference: exp.reference.clone(),
        target_h,
        target_r,
        composed_s,
        baseline_h,
        per_trainer: records,
        predicted_h,
        convergence: prepared.convergence.clone(),
        filters: prepared.filters.clone(),
        maps: prepared.maps.clone(),
        metrics,
    })
}
