//! Cost-subsidized adaptations of explore-then-commit, Thompson sampling
//! and UCB. All three estimate a reference reward, keep the arms whose index
//! clears `(1 - alpha)` of it and pull the cheapest of those.

use rand_distr::{Beta, Distribution};

use super::{cheapest, Phase, Policy, PolicyId, PolicyState};
use crate::error::{Error, Result};
use crate::instance::argmax_first;
use crate::rng::StreamRng;

/// Per-arm exploration budget `ceil(5 (T/K)^(2/3))` of ETC-CS.
///
/// Computed in integers as the smallest `m` with `m^3 K^2 >= 125 T^2`, so
/// no rounding of the cube root can move the ceiling.
pub fn etc_exploration_budget(horizon: u64, arms: usize) -> u64 {
    assert!(arms > 0, "ETC-CS needs at least one arm");
    let t = horizon as u128;
    let k2 = (arms as u128) * (arms as u128);
    let target = 125 * t * t;
    let fits = |m: u128| m * m * m * k2 >= target;
    let estimate = 5.0 * (horizon as f64 / arms as f64).powf(2.0 / 3.0);
    let mut m = (estimate.ceil() as u128).max(1);
    while m > 1 && fits(m - 1) {
        m -= 1;
    }
    while !fits(m) {
        m += 1;
    }
    m as u64
}

/// Cheapest arm whose index clears `(1 - alpha) * index[reference]`.
///
/// The reference clears its own threshold whenever its index is
/// non-negative; a negative UCB (unbounded rewards) falls back to it.
fn cheapest_feasible(costs: &[f64], index: &[f64], alpha: f64, reference: usize) -> usize {
    let threshold = (1.0 - alpha) * index[reference];
    cheapest(costs, (0..costs.len()).filter(|&i| index[i] >= threshold)).unwrap_or(reference)
}

#[derive(Clone, Debug)]
pub struct EtcCs {
    state: PolicyState,
    costs: Vec<f64>,
    alpha: f64,
    log_horizon: f64,
}

impl EtcCs {
    pub fn new(costs: Vec<f64>, horizon: u64, alpha: f64) -> Self {
        let mut state = PolicyState::new(costs.len(), Phase::Explore);
        state.explore_budget = Some(etc_exploration_budget(horizon, costs.len()));
        EtcCs {
            state,
            costs,
            alpha,
            log_horizon: (horizon as f64).ln(),
        }
    }

    pub fn budget(&self) -> u64 {
        self.state.explore_budget.unwrap_or(0)
    }
}

impl Policy for EtcCs {
    fn id(&self) -> PolicyId {
        PolicyId::EtcCs
    }

    fn select(&mut self, t: u64) -> usize {
        let k = self.costs.len() as u64;
        if t <= k * self.budget() {
            return ((t - 1) % k) as usize;
        }
        self.state.phase = Phase::Exploit;
        let (ucb, lcb): (Vec<f64>, Vec<f64>) = (0..self.costs.len())
            .map(|i| {
                let bonus = (2.0 * self.log_horizon / self.state.n[i] as f64).sqrt();
                let mu = self.state.mu_hat[i];
                ((mu + bonus).min(1.0), (mu - bonus).max(0.0))
            })
            .unzip();
        let reference = argmax_first(lcb.iter().copied());
        // LCB_ref >= 0 so the reference itself is feasible
        let threshold = (1.0 - self.alpha) * lcb[reference];
        cheapest(&self.costs, (0..self.costs.len()).filter(|&i| ucb[i] >= threshold)).unwrap_or(reference)
    }

    fn state(&self) -> &PolicyState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut PolicyState {
        &mut self.state
    }
}

/// Thompson sampling with uniform Beta priors. Posterior draws use
/// `rand_distr::Beta`.
#[derive(Clone, Debug)]
pub struct TsCs {
    state: PolicyState,
    costs: Vec<f64>,
    alpha: f64,
    rng: StreamRng,
}

impl TsCs {
    pub fn new(costs: Vec<f64>, alpha: f64, rng: StreamRng) -> Self {
        TsCs {
            state: PolicyState::new(costs.len(), Phase::Init),
            costs,
            alpha,
            rng,
        }
    }
}

impl Policy for TsCs {
    fn id(&self) -> PolicyId {
        PolicyId::TsCs
    }

    fn select(&mut self, t: u64) -> usize {
        let k = self.costs.len() as u64;
        if t <= k {
            return (t - 1) as usize;
        }
        self.state.phase = Phase::Exploit;
        let theta: Vec<f64> = (0..self.costs.len())
            .map(|i| {
                let a = self.state.successes[i] as f64 + 1.0;
                let b = self.state.failures[i] as f64 + 1.0;
                Beta::new(a, b)
                    .expect("Beta parameters are at least one")
                    .sample(&mut self.rng)
            })
            .collect();
        let reference = argmax_first(theta.iter().copied());
        cheapest_feasible(&self.costs, &theta, self.alpha, reference)
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.state.arms() {
            return Err(Error::ArmIndex {
                index: arm,
                arms: self.state.arms(),
            });
        }
        if reward != 0.0 && reward != 1.0 {
            return Err(Error::Contract(format!(
                "ts-cs observed reward {reward}; Beta posteriors need rewards in {{0, 1}}"
            )));
        }
        self.state.record(arm, reward);
        if reward == 1.0 {
            self.state.successes[arm] += 1;
        } else {
            self.state.failures[arm] += 1;
        }
        Ok(())
    }

    fn state(&self) -> &PolicyState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut PolicyState {
        &mut self.state
    }
}

/// UCB-CS. With `known_ell` the reference index is fixed instead of being
/// the arm with the largest UCB.
#[derive(Clone, Debug)]
pub struct UcbCs {
    state: PolicyState,
    costs: Vec<f64>,
    alpha: f64,
    log_horizon: f64,
    known_ell: Option<usize>,
}

impl UcbCs {
    pub fn new(costs: Vec<f64>, horizon: u64, alpha: f64, known_ell: Option<usize>) -> Self {
        UcbCs {
            state: PolicyState::new(costs.len(), Phase::Init),
            costs,
            alpha,
            log_horizon: (horizon as f64).ln(),
            known_ell,
        }
    }

    fn ucb(&self) -> Vec<f64> {
        (0..self.costs.len())
            .map(|i| {
                let bonus = (2.0 * self.log_horizon / self.state.n[i] as f64).sqrt();
                (self.state.mu_hat[i] + bonus).min(1.0)
            })
            .collect()
    }
}

impl Policy for UcbCs {
    fn id(&self) -> PolicyId {
        if self.known_ell.is_some() {
            PolicyId::UcbCsKnownEll
        } else {
            PolicyId::UcbCs
        }
    }

    fn select(&mut self, t: u64) -> usize {
        let k = self.costs.len() as u64;
        if t <= k {
            return (t - 1) as usize;
        }
        self.state.phase = Phase::Exploit;
        let ucb = self.ucb();
        let reference = self.known_ell.unwrap_or_else(|| argmax_first(ucb.iter().copied()));
        cheapest_feasible(&self.costs, &ucb, self.alpha, reference)
    }

    fn state(&self) -> &PolicyState {
        &self.state
    }

    fn state_mut(&mut self) -> &mut PolicyState {
        &mut self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::policy_rng;

    #[test]
    fn etc_budget_values() {
        // 5 * (1.25e6)^(2/3) = 58019.86
        assert_eq!(etc_exploration_budget(5_000_000, 4), 58_020);
        assert_eq!(etc_exploration_budget(100_000, 4), 4_275);
        // exact cube: T/K = 8000 gives 5 * 400
        assert_eq!(etc_exploration_budget(32_000, 4), 2_000);
        assert_eq!(etc_exploration_budget(1, 1), 5);
    }

    #[test]
    fn etc_explores_round_robin() {
        let mut p = EtcCs::new(vec![0.1, 0.2, 0.3], 3_000, 0.1);
        let budget = p.budget();
        for t in 1..=3 * budget {
            let arm = p.select(t);
            assert_eq!(arm, ((t - 1) % 3) as usize);
            p.observe(arm, 0.5).unwrap();
        }
    }

    #[test]
    fn etc_alpha_one_picks_cheapest() {
        let mut p = EtcCs::new(vec![0.1, 0.2], 1_000, 1.0);
        let end = 2 * p.budget();
        for t in 1..=end {
            let arm = p.select(t);
            p.observe(arm, if arm == 1 { 1.0 } else { 0.0 }).unwrap();
        }
        assert_eq!(p.select(end + 1), 0);
    }

    #[test]
    fn ts_rejects_fractional_rewards() {
        let mut p = TsCs::new(vec![0.1, 0.2], 0.1, policy_rng(0, "ts-cs"));
        assert!(matches!(p.observe(0, 0.5), Err(Error::Contract(_))));
        p.observe(0, 1.0).unwrap();
        p.observe(1, 0.0).unwrap();
        assert_eq!(p.state().successes, vec![1, 0]);
        assert_eq!(p.state().failures, vec![0, 1]);
    }

    #[test]
    fn ts_alpha_zero_pulls_an_argmax() {
        let mut p = TsCs::new(vec![0.1, 0.2, 0.3], 0.0, policy_rng(4, "ts-cs"));
        for t in 1..=3 {
            let arm = p.select(t);
            p.observe(arm, 1.0).unwrap();
        }
        // with alpha = 0 only arms tying the max draw are feasible
        for t in 4..50 {
            let arm = p.select(t);
            p.observe(arm, (t % 2) as f64).unwrap();
        }
    }

    #[test]
    fn ucb_symmetric_state_picks_cheapest() {
        let mut p = UcbCs::new(vec![0.1, 0.2, 0.3], 10_000, 0.0, None);
        for t in 1..=3 {
            let arm = p.select(t);
            p.observe(arm, 0.5).unwrap();
        }
        assert_eq!(p.select(4), 0);
    }

    #[test]
    fn ucb_known_ell_uses_fixed_reference() {
        let mut p = UcbCs::new(vec![0.1, 0.2, 0.3], 10_000, 0.0, Some(1));
        for (arm, r) in [(0, 0.0), (1, 1.0), (2, 1.0)] {
            p.select(arm as u64 + 1);
            p.observe(arm, r).unwrap();
        }
        // arm 0's UCB of min(0 + 4.29, 1) = 1 clears UCB_1 = 1
        assert_eq!(p.select(4), 0);
        assert_eq!(p.id(), PolicyId::UcbCsKnownEll);
    }
}
