//! Fixed-threshold UCB: pull the cheapest arm whose optimistic mean still
//! clears the threshold `mu0`.

use rand::Rng;

use super::{cheapest, Phase, Policy, PolicyId, PolicyState};
use crate::rng::StreamRng;

#[derive(Clone, Debug)]
pub struct FtUcb {
    state: PolicyState,
    costs: Vec<f64>,
    mu0: f64,
    rng: StreamRng,
}

impl FtUcb {
    pub fn new(costs: Vec<f64>, mu0: f64, rng: StreamRng) -> Self {
        FtUcb {
            state: PolicyState::new(costs.len(), Phase::Init),
            costs,
            mu0,
            rng,
        }
    }

    /// Arms whose UCB at step `t` reaches the threshold.
    pub fn candidates(&self, t: u64) -> Vec<usize> {
        let log_t = (t as f64).ln();
        (0..self.costs.len())
            .filter(|&k| {
                let n = self.state.n[k] as f64;
                self.state.mu_hat[k] + (2.0 * log_t / n).sqrt() >= self.mu0
            })
            .collect()
    }
}

impl Policy for FtUcb {
    fn id(&self) -> PolicyId {
        PolicyId::FtUcb
    }

    fn select(&mut self, t: u64) -> usize {
        let arms = self.costs.len() as u64;
        if t <= arms {
            return (t - 1) as usize;
        }
        self.state.phase = Phase::Exploit;
        match cheapest(&self.costs, self.candidates(t)) {
            Some(arm) => arm,
            None => self.rng.random_range(0..self.costs.len()),
        }
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
    fn init_is_round_robin() {
        let mut p = FtUcb::new(vec![0.1, 0.2, 0.3], 0.5, policy_rng(1, "ft-ucb"));
        for t in 1..=3 {
            assert_eq!(p.select(t), (t - 1) as usize);
            p.observe((t - 1) as usize, 0.0).unwrap();
        }
    }

    #[test]
    fn zero_threshold_picks_cheapest() {
        let mut p = FtUcb::new(vec![0.1, 0.2, 0.3], 0.0, policy_rng(1, "ft-ucb"));
        for t in 1..=3 {
            let arm = p.select(t);
            p.observe(arm, 0.0).unwrap();
        }
        for t in 4..100 {
            assert_eq!(p.select(t), 0);
            p.observe(0, 0.0).unwrap();
        }
    }

    #[test]
    fn empty_candidate_set_draws_uniformly() {
        // mu0 above every possible UCB: fallback covers all arms
        let mut p = FtUcb::new(vec![0.1, 0.2, 0.3], 1e9, policy_rng(7, "ft-ucb"));
        let mut seen = [0u32; 3];
        for t in 1..=600 {
            let arm = p.select(t);
            p.observe(arm, 0.0).unwrap();
            seen[arm] += 1;
        }
        assert!(seen.iter().all(|&c| c > 100), "{seen:?}");
    }
}
