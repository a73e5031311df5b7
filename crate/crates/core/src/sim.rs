//! Policy/environment interaction with exact pseudo-regret accounting.
//!
//! Regret is accumulated from the true gaps of the pulled arms, not from
//! realized rewards. The running sums use compensated summation, so after
//! `T` steps they agree with `sum_i gap_i * n_i(T)` to within a few ulps.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{gap_profile, BanditInstance, GapProfile, SubsidySetting};
use crate::policy::{build_policy, Policy, PolicyId, PolicyParams, PolicyState};
use crate::rng::{environment_rng, policy_rng};

/// Timesteps at which cumulative regret is recorded. The horizon itself is
/// always added.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum CheckpointSchedule {
    /// This many log-spaced timesteps in `[1, T]`.
    Log(usize),
    Explicit(Vec<u64>),
    /// Every `n` steps.
    Every(u64),
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        CheckpointSchedule::Log(50)
    }
}

impl CheckpointSchedule {
    /// Parses `log:<n>`, `every:<n>` or a comma list of timesteps.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::Validation(format!("bad checkpoint schedule `{text}`"));
        if let Some(n) = text.strip_prefix("log:") {
            return Ok(CheckpointSchedule::Log(n.trim().parse().map_err(|_| bad())?));
        }
        if let Some(n) = text.strip_prefix("every:") {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            return Ok(CheckpointSchedule::Every(n));
        }
        text.split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()
            .map(CheckpointSchedule::Explicit)
    }

    /// Sorted, de-duplicated timesteps in `[1, horizon]`, ending at `horizon`.
    pub fn points(&self, horizon: u64) -> Vec<u64> {
        let mut pts: Vec<u64> = match self {
            CheckpointSchedule::Log(count) => {
                let count = *count;
                let top = (horizon as f64).ln();
                (0..count)
                    .map(|j| {
                        let frac = if count > 1 { j as f64 / (count - 1) as f64 } else { 1.0 };
                        (frac * top).exp().round() as u64
                    })
                    .collect()
            }
            CheckpointSchedule::Explicit(points) => points.clone(),
            CheckpointSchedule::Every(step) => (1..=horizon / step).map(|j| j * step).collect(),
        };
        pts.retain(|&t| (1..=horizon).contains(&t));
        pts.push(horizon);
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// Cumulative regret at one timestep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cost_regret: f64,
    pub quality_regret: f64,
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretTrace {
    pub checkpoints: Vec<Checkpoint>,
    /// Final per-arm pull counts.
    pub pulls: Vec<u64>,
    cost: CompensatedSum,
    quality: CompensatedSum,
}

impl RegretTrace {
    pub fn new(arms: usize) -> Self {
        RegretTrace {
            pulls: vec![0; arms],
            ..Default::default()
        }
    }

    pub fn cost_regret(&self) -> f64 {
        self.cost.value()
    }

    pub fn quality_regret(&self) -> f64 {
        self.quality.value()
    }

    pub fn steps(&self) -> u64 {
        self.pulls.iter().sum()
    }

    fn checkpoint(&mut self, t: u64) {
        self.checkpoints.push(Checkpoint {
            t,
            cost_regret: self.cost_regret(),
            quality_regret: self.quality_regret(),
        });
    }

    /// Regret recorded at checkpoint `t`, if present.
    pub fn at(&self, t: u64) -> Option<Checkpoint> {
        self.checkpoints.iter().find(|c| c.t == t).copied()
    }
}

/// Adds one pull of `arm`: cost `(c_arm - c_a*)^+`, quality
/// `(mu_cs - mu_arm)^+`. Returns the two increments.
pub fn accumulate_regret(trace: &mut RegretTrace, arm: usize, profile: &GapProfile) -> (f64, f64) {
    let (dc, dq) = profile.step_regret(arm);
    trace.pulls[arm] += 1;
    trace.cost.add(dc);
    trace.quality.add(dq);
    (dc, dq)
}

/// `sum_i gap_i * n_i` recomputed from pull counts.
pub fn decomposed_regret(profile: &GapProfile, pulls: &[u64]) -> (f64, f64) {
    pulls.iter().enumerate().fold((0.0, 0.0), |(c, q), (i, &n)| {
        let (dc, dq) = profile.step_regret(i);
        (c + dc * n as f64, q + dq * n as f64)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub run_id: u64,
    pub seed: u64,
    pub policy: PolicyId,
    pub instance: String,
    pub setting: SubsidySetting,
    pub horizon: u64,
    #[serde(skip)]
    pub trace: RegretTrace,
    /// Committed arm, or the last arm pulled by policies that never commit.
    pub terminal_arm: usize,
    /// First step whose pull was the committed arm.
    pub commit_step: Option<u64>,
    /// Regret accrued from `commit_step` on (zero when the commit is correct).
    pub post_commit_regret: (f64, f64),
    pub wall_time: Duration,
}

impl RunResult {
    pub fn cost_regret(&self) -> f64 {
        self.trace.cost_regret()
    }

    pub fn quality_regret(&self) -> f64 {
        self.trace.quality_regret()
    }

    pub fn summed_regret(&self) -> f64 {
        self.cost_regret() + self.quality_regret()
    }

    pub fn committed(&self) -> bool {
        self.commit_step.is_some()
    }
}

/// Horizon, checkpoints and policy knobs shared by every run of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub horizon: u64,
    pub checkpoints: CheckpointSchedule,
    /// Round deviation for asymmetric PE.
    pub kappa: u32,
}

impl SimConfig {
    pub fn new(horizon: u64) -> Self {
        SimConfig {
            horizon,
            checkpoints: CheckpointSchedule::default(),
            kappa: 2,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: CheckpointSchedule) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_kappa(mut self, kappa: u32) -> Self {
        self.kappa = kappa;
        self
    }
}

/// Outcome of [`simulate`] before it is wrapped into a [`RunResult`].
#[derive(Clone, Debug)]
pub struct Episode {
    pub trace: RegretTrace,
    pub terminal_arm: usize,
    pub commit_step: Option<u64>,
    pub post_commit_regret: (f64, f64),
}

/// Per-step hook: `(t, arm, policy state after observe)`.
pub type StepObserver<'a> = dyn FnMut(u64, usize, &PolicyState) + 'a;

/// Runs `policy` for `horizon` steps against `instance`, drawing rewards
/// from `env`. Fails if the policy pulls an invalid arm or abandons a
/// commitment.
pub fn simulate<R: rand::Rng + ?Sized>(
    policy: &mut dyn Policy,
    instance: &BanditInstance,
    profile: &GapProfile,
    horizon: u64,
    checkpoints: &[u64],
    env: &mut R,
    mut observer: Option<&mut StepObserver<'_>>,
) -> Result<Episode> {
    let arms = instance.len();
    let mut trace = RegretTrace::new(arms);
    let mut next_checkpoint = checkpoints.iter().copied().peekable();
    let mut commit: Option<(u64, usize, f64, f64)> = None;
    let mut last_arm = 0;

    for t in 1..=horizon {
        let arm = policy.select(t);
        if arm >= arms {
            return Err(Error::ArmIndex { index: arm, arms });
        }
        match (commit, policy.committed_arm()) {
            (Some((_, committed, _, _)), _) if arm != committed => {
                return Err(Error::Contract(format!(
                    "{} left committed arm {committed} for arm {arm} at step {t}",
                    policy.id()
                )));
            }
            (None, Some(committed)) => {
                if committed != arm {
                    return Err(Error::Contract(format!(
                        "{} committed to arm {committed} but pulled arm {arm} at step {t}",
                        policy.id()
                    )));
                }
                commit = Some((t, committed, trace.cost_regret(), trace.quality_regret()));
            }
            _ => {}
        }
        let reward = instance.sample_reward(arm, env);
        policy.observe(arm, reward)?;
        accumulate_regret(&mut trace, arm, profile);
        last_arm = arm;
        if let Some(obs) = observer.as_deref_mut() {
            obs(t, arm, policy.state());
        }
        while next_checkpoint.next_if(|&c| c <= t).is_some() {
            trace.checkpoint(t);
        }
    }
    // checkpoint lists built by `points` always end at the horizon
    if trace.checkpoints.last().map(|c| c.t) != Some(horizon) {
        trace.checkpoint(horizon);
    }
    let (commit_step, terminal_arm, post_commit_regret) = match commit {
        Some((step, arm, cost, quality)) => (
            Some(step),
            arm,
            (trace.cost_regret() - cost, trace.quality_regret() - quality),
        ),
        None => (None, last_arm, (0.0, 0.0)),
    };
    Ok(Episode {
        trace,
        terminal_arm,
        commit_step,
        post_commit_regret,
    })
}

fn check_horizon(policy: PolicyId, instance: &BanditInstance, horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::Validation("horizon must be at least 1".into()));
    }
    if policy.has_round_robin_init() && horizon < instance.len() as u64 {
        return Err(Error::Validation(format!(
            "{policy} pulls every arm once first: horizon {horizon} < {} arms",
            instance.len()
        )));
    }
    Ok(())
}

/// One seeded run. The seed fixes both the reward stream and the policy's
/// private stream, so equal inputs give identical traces.
pub fn run_single(
    policy: PolicyId,
    instance: &BanditInstance,
    setting: &SubsidySetting,
    config: &SimConfig,
    seed: u64,
) -> Result<RunResult> {
    run_with_id(policy, instance, setting, config, seed, 0)
}

fn run_with_id(
    id: PolicyId,
    instance: &BanditInstance,
    setting: &SubsidySetting,
    config: &SimConfig,
    seed: u64,
    run_id: u64,
) -> Result<RunResult> {
    let started = Instant::now();
    let profile = gap_profile(instance, setting)?;
    check_horizon(id, instance, config.horizon)?;
    let params = PolicyParams::from_setting(setting, config.kappa);
    let mut policy = build_policy(id, instance, &params, config.horizon, policy_rng(seed, id.as_str()))?;
    let mut env = environment_rng(seed);
    let points = config.checkpoints.points(config.horizon);
    let episode = simulate(
        policy.as_mut(),
        instance,
        &profile,
        config.horizon,
        &points,
        &mut env,
        None,
    )?;
    Ok(RunResult {
        run_id,
        seed,
        policy: id,
        instance: instance.name().to_owned(),
        setting: *setting,
        horizon: config.horizon,
        trace: episode.trace,
        terminal_arm: episode.terminal_arm,
        commit_step: episode.commit_step,
        post_commit_regret: episode.post_commit_regret,
        wall_time: started.elapsed(),
    })
}

/// `runs` independent runs with seeds `seed0, seed0 + 1, ...`, executed in
/// parallel on at most `jobs` threads (all cores when `None`). Results come
/// back ordered by run id; the first failing run id is reported.
pub fn run_batch(
    policy: PolicyId,
    instance: &BanditInstance,
    setting: &SubsidySetting,
    config: &SimConfig,
    seed0: u64,
    runs: usize,
    jobs: Option<usize>,
) -> Result<Vec<RunResult>> {
    if runs == 0 {
        return Err(Error::Validation("run count must be at least 1".into()));
    }
    // fail fast on configuration problems before spawning work
    gap_profile(instance, setting)?;
    check_horizon(policy, instance, config.horizon)?;

    let work = || -> Vec<Result<RunResult>> {
        (0..runs as u64)
            .into_par_iter()
            .map(|run_id| {
                let seed = seed0.wrapping_add(run_id);
                run_with_id(policy, instance, setting, config, seed, run_id).map_err(|e| Error::Run {
                    run_id,
                    seed,
                    source: Box::new(e),
                })
            })
            .collect()
    };
    let outcomes = match jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    outcomes.into_iter().collect()
}
