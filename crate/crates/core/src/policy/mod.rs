//! Bandit policies behind a single select/observe contract.
//!
//! Arms are 0-based indices into the cost-sorted instance. Timesteps are
//! 1-based, so the round-robin initialization of the UCB-style policies
//! pulls arm `t - 1` at step `t <= K`.

mod baselines;
mod ft_ucb;
mod pe;
mod pe_cs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{BanditInstance, RewardKind, SubsidySetting};
use crate::rng::StreamRng;
use crate::rounds::RoundSchedule;

pub use baselines::{etc_exploration_budget, EtcCs, TsCs, UcbCs};
pub use ft_ucb::FtUcb;
pub use pe::{asymmetric_pe_decide, asymmetric_rounds, pe_decide, PairwiseElimination, PeDecision};
pub use pe_cs::{bai_decide, BaiStep, PeCs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyId {
    #[serde(rename = "pe")]
    Pe,
    #[serde(rename = "asym-pe")]
    AsymPe,
    #[serde(rename = "pe-cs")]
    PeCs,
    #[serde(rename = "ft-ucb")]
    FtUcb,
    #[serde(rename = "etc-cs")]
    EtcCs,
    #[serde(rename = "ts-cs")]
    TsCs,
    #[serde(rename = "ucb-cs")]
    UcbCs,
    #[serde(rename = "ucb-cs-known-ell")]
    UcbCsKnownEll,
}

impl PolicyId {
    pub const ALL: [PolicyId; 8] = [
        PolicyId::Pe,
        PolicyId::AsymPe,
        PolicyId::PeCs,
        PolicyId::FtUcb,
        PolicyId::EtcCs,
        PolicyId::TsCs,
        PolicyId::UcbCs,
        PolicyId::UcbCsKnownEll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyId::Pe => "pe",
            PolicyId::AsymPe => "asym-pe",
            PolicyId::PeCs => "pe-cs",
            PolicyId::FtUcb => "ft-ucb",
            PolicyId::EtcCs => "etc-cs",
            PolicyId::TsCs => "ts-cs",
            PolicyId::UcbCs => "ucb-cs",
            PolicyId::UcbCsKnownEll => "ucb-cs-known-ell",
        }
    }

    /// Policies that pull every arm once before anything else.
    pub fn has_round_robin_init(self) -> bool {
        matches!(
            self,
            PolicyId::FtUcb | PolicyId::EtcCs | PolicyId::TsCs | PolicyId::UcbCs | PolicyId::UcbCsKnownEll
        )
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownPolicy(s.trim().to_owned()))
    }
}

/// Knobs a policy may need. Which ones are required depends on the policy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolicyParams {
    pub alpha: Option<f64>,
    pub ell: Option<usize>,
    pub mu0: Option<f64>,
    /// Maximum round deviation for asymmetric PE.
    pub kappa: u32,
}

impl PolicyParams {
    pub fn from_setting(setting: &SubsidySetting, kappa: u32) -> Self {
        PolicyParams {
            alpha: setting.alpha(),
            ell: setting.reference_arm(),
            mu0: setting.threshold(),
            kappa,
        }
    }

    fn alpha(&self, id: PolicyId) -> Result<f64> {
        let alpha = self
            .alpha
            .ok_or_else(|| Error::Config(format!("policy `{id}` needs a subsidy factor alpha")))?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Validation(format!("subsidy factor alpha {alpha} outside [0, 1]")));
        }
        Ok(alpha)
    }

    fn ell(&self, id: PolicyId, arms: usize) -> Result<usize> {
        let ell = self
            .ell
            .ok_or_else(|| Error::Config(format!("policy `{id}` needs a known reference arm ell")))?;
        if ell >= arms {
            return Err(Error::ArmIndex { index: ell, arms });
        }
        Ok(ell)
    }

    fn mu0(&self, id: PolicyId) -> Result<f64> {
        self.mu0
            .ok_or_else(|| Error::Config(format!("policy `{id}` needs a fixed threshold mu0")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// Round-robin pull of every arm.
    Init,
    /// PE-CS best-arm-identification stage.
    Bai,
    /// Pairwise elimination episodes.
    Pe,
    /// ETC-CS pure exploration.
    Explore,
    /// Index-based selection after initialization.
    Exploit,
    /// Pulling a declared winner for the rest of the horizon.
    Commit,
}

/// Bookkeeping shared by all policies; fields a policy does not use stay at
/// their initial values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolicyState {
    pub n: Vec<u64>,
    pub mu_hat: Vec<f64>,
    /// Round number reached by each arm.
    pub omega: Vec<u32>,
    /// Current PE episode (candidate arm); `None` once episodes are over.
    pub episode: Option<usize>,
    /// Reference arm used by the PE stage, once known.
    pub reference: Option<usize>,
    /// BAI active set.
    pub active: Vec<usize>,
    pub phase: Phase,
    pub committed_arm: Option<usize>,
    /// Thompson sampling successes / failures.
    pub successes: Vec<u64>,
    pub failures: Vec<u64>,
    /// ETC-CS per-arm exploration budget.
    pub explore_budget: Option<u64>,
}

impl PolicyState {
    pub fn new(arms: usize, phase: Phase) -> Self {
        PolicyState {
            n: vec![0; arms],
            mu_hat: vec![0.0; arms],
            omega: vec![0; arms],
            episode: None,
            reference: None,
            active: Vec::new(),
            phase,
            committed_arm: None,
            successes: vec![0; arms],
            failures: vec![0; arms],
            explore_budget: None,
        }
    }

    pub fn arms(&self) -> usize {
        self.n.len()
    }

    pub fn total_pulls(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Running-mean update of one observation.
    pub fn record(&mut self, arm: usize, reward: f64) {
        let n = self.n[arm] as f64;
        self.mu_hat[arm] = (self.mu_hat[arm] * n + reward) / (n + 1.0);
        self.n[arm] += 1;
    }

    pub(crate) fn commit(&mut self, arm: usize) {
        debug_assert!(self.committed_arm.is_none_or(|a| a == arm));
        self.phase = Phase::Commit;
        self.committed_arm = Some(arm);
        self.episode = None;
    }
}

pub trait Policy: Send {
    fn id(&self) -> PolicyId;

    /// Arm to pull at timestep `t` (1-based).
    fn select(&mut self, t: u64) -> usize;

    fn state(&self) -> &PolicyState;

    fn state_mut(&mut self) -> &mut PolicyState;

    /// Feeds back the reward of the arm returned by the last `select`.
    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.state().arms() {
            return Err(Error::ArmIndex {
                index: arm,
                arms: self.state().arms(),
            });
        }
        self.state_mut().record(arm, reward);
        Ok(())
    }

    fn committed_arm(&self) -> Option<usize> {
        self.state().committed_arm
    }
}

/// Builds a policy for `instance` over `horizon` steps. `rng` is the
/// policy's private stream.
pub fn build_policy(
    id: PolicyId,
    instance: &BanditInstance,
    params: &PolicyParams,
    horizon: u64,
    rng: StreamRng,
) -> Result<Box<dyn Policy>> {
    let arms = instance.len();
    let costs = instance.costs();
    let policy: Box<dyn Policy> = match id {
        PolicyId::Pe | PolicyId::AsymPe => {
            let kappa = (id == PolicyId::AsymPe).then_some(params.kappa);
            Box::new(PairwiseElimination::new(
                arms,
                RoundSchedule::new(horizon)?,
                params.ell(id, arms)?,
                params.alpha(id)?,
                kappa,
            ))
        }
        PolicyId::PeCs => Box::new(PeCs::new(arms, RoundSchedule::new(horizon)?, params.alpha(id)?, rng)),
        PolicyId::FtUcb => Box::new(FtUcb::new(costs, params.mu0(id)?, rng)),
        PolicyId::EtcCs => Box::new(EtcCs::new(costs, horizon, params.alpha(id)?)),
        PolicyId::TsCs => {
            if instance.reward_kind() != RewardKind::Bernoulli {
                return Err(Error::Config(
                    "ts-cs needs Bernoulli rewards (Beta posterior)".into(),
                ));
            }
            Box::new(TsCs::new(costs, params.alpha(id)?, rng))
        }
        PolicyId::UcbCs => Box::new(UcbCs::new(costs, horizon, params.alpha(id)?, None)),
        PolicyId::UcbCsKnownEll => Box::new(UcbCs::new(
            costs,
            horizon,
            params.alpha(id)?,
            Some(params.ell(id, arms)?),
        )),
    };
    Ok(policy)
}

/// Lowest-cost member of `candidates`, lowest index on ties.
pub(crate) fn cheapest(costs: &[f64], candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in candidates {
        match best {
            Some(b) if costs[i] > costs[b] || (costs[i] == costs[b] && i > b) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in PolicyId::ALL {
            assert_eq!(id.as_str().parse::<PolicyId>().unwrap(), id);
        }
        assert!(matches!("greedy".parse::<PolicyId>(), Err(Error::UnknownPolicy(_))));
    }

    #[test]
    fn running_mean() {
        let mut s = PolicyState::new(1, Phase::Init);
        s.record(0, 0.7);
        assert_eq!((s.mu_hat[0], s.n[0]), (0.7, 1));
        let mut s = PolicyState::new(1, Phase::Init);
        s.record(0, 0.0);
        s.record(0, 1.0);
        s.record(0, 1.0);
        assert!((s.mu_hat[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.n[0], 3);
    }

    #[test]
    fn cheapest_breaks_ties_low() {
        let costs = [0.05, 0.9, 0.9, 1.0];
        assert_eq!(cheapest(&costs, [3, 2, 1]), Some(1));
        assert_eq!(cheapest(&costs, []), None);
    }

    #[test]
    fn missing_params_are_config_errors() {
        let inst = crate::instance::toy_instance(0.6).unwrap();
        let rng = crate::rng::policy_rng(1, "x");
        let p = PolicyParams::default();
        assert!(matches!(
            build_policy(PolicyId::Pe, &inst, &p, 100, rng.clone()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_policy(PolicyId::FtUcb, &inst, &p, 100, rng.clone()),
            Err(Error::Config(_))
        ));
        let p = PolicyParams {
            alpha: Some(0.1),
            ell: Some(9),
            ..Default::default()
        };
        assert!(matches!(
            build_policy(PolicyId::UcbCsKnownEll, &inst, &p, 100, rng.clone()),
            Err(Error::ArmIndex { .. })
        ));
        let g = inst.with_reward_kind(RewardKind::Gaussian { sigma: 1.0 }).unwrap();
        assert!(matches!(
            build_policy(PolicyId::TsCs, &g, &p, 100, rng),
            Err(Error::Config(_))
        ));
    }
}
