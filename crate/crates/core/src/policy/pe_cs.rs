//! PE-CS: a best-arm-identification stage that picks the reference arm,
//! followed by the pairwise elimination stage against it.

use rand::Rng;

use super::pe::{enter_pe_stage, pe_stage_select};
use super::{Phase, Policy, PolicyId, PolicyState};
use crate::rng::StreamRng;
use crate::rounds::RoundSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaiStep {
    /// An active arm is below the round quota.
    Sample(usize),
    /// The round closed: `state.active` now holds the survivors and their
    /// rounds were bumped. `tentative` is the suggested next pull.
    RoundEnd { tentative: usize },
}

/// One call of the elimination-round BAI rule over `state.active`.
///
/// The presumed gap comes from the largest round over all arms. Survivors
/// are the active arms whose upper bound reaches the best lower bound.
/// Below the round cap the tentative arm is drawn uniformly from the
/// survivors; at the cap rounds stop growing and the least-sampled survivor
/// is suggested instead, which cycles the set.
pub fn bai_decide<R: Rng + ?Sized>(state: &mut PolicyState, schedule: &RoundSchedule, rng: &mut R) -> BaiStep {
    debug_assert!(state.active.len() >= 2);
    let round = schedule.clamp(state.omega.iter().copied().max().unwrap_or(0));
    let tau = schedule.quota(round);
    if let Some(&k) = state.active.iter().find(|&&k| state.n[k] < tau) {
        return BaiStep::Sample(k);
    }
    let beta = schedule.bonus(round);
    let best_lcb = state
        .active
        .iter()
        .map(|&j| state.mu_hat[j] - beta)
        .fold(f64::NEG_INFINITY, f64::max);
    let survivors: Vec<usize> = state
        .active
        .iter()
        .copied()
        .filter(|&i| state.mu_hat[i] + beta >= best_lcb)
        .collect();

    let tentative = if schedule.at_cap(round) {
        *survivors
            .iter()
            .min_by_key(|&&i| state.n[i])
            .expect("the best arm always survives")
    } else {
        survivors[rng.random_range(0..survivors.len())]
    };
    for &i in &survivors {
        if !schedule.at_cap(state.omega[i]) {
            state.omega[i] += 1;
        }
    }
    state.active = survivors;
    BaiStep::RoundEnd { tentative }
}

#[derive(Clone, Debug)]
pub struct PeCs {
    state: PolicyState,
    schedule: RoundSchedule,
    alpha: f64,
    rng: StreamRng,
}

impl PeCs {
    pub fn new(arms: usize, schedule: RoundSchedule, alpha: f64, rng: StreamRng) -> Self {
        let mut state = PolicyState::new(arms, Phase::Bai);
        state.active = (0..arms).collect();
        if arms == 1 {
            enter_pe_stage(&mut state, 0);
        }
        PeCs {
            state,
            schedule,
            alpha,
            rng,
        }
    }

    /// Reference arm picked by the BAI stage, once it has collapsed.
    pub fn reference(&self) -> Option<usize> {
        self.state.reference
    }
}

impl Policy for PeCs {
    fn id(&self) -> PolicyId {
        PolicyId::PeCs
    }

    fn select(&mut self, _t: u64) -> usize {
        loop {
            match self.state.phase {
                Phase::Commit => return self.state.committed_arm.expect("commit phase has an arm"),
                Phase::Pe => return pe_stage_select(&mut self.state, &self.schedule, self.alpha, None),
                Phase::Bai => match bai_decide(&mut self.state, &self.schedule, &mut self.rng) {
                    BaiStep::Sample(arm) => return arm,
                    BaiStep::RoundEnd { .. } if self.state.active.len() == 1 => {
                        // the collapsing step's suggestion is dropped
                        let reference = self.state.active[0];
                        enter_pe_stage(&mut self.state, reference);
                    }
                    BaiStep::RoundEnd { tentative } => return tentative,
                },
                other => unreachable!("PE-CS never enters {other:?}"),
            }
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

    fn bai_state(mu: &[f64], n: u64) -> PolicyState {
        let mut s = PolicyState::new(mu.len(), Phase::Bai);
        s.active = (0..mu.len()).collect();
        s.mu_hat = mu.to_vec();
        s.n = vec![n; mu.len()];
        s
    }

    #[test]
    fn samples_lowest_index_below_quota() {
        let sched = RoundSchedule::new(5_000_000).unwrap();
        let mut s = bai_state(&[0.0, 0.0, 0.0], 0);
        s.n[0] = 31;
        let mut rng = policy_rng(0, "pe-cs");
        assert_eq!(bai_decide(&mut s, &sched, &mut rng), BaiStep::Sample(1));
    }

    #[test]
    fn deterministic_gap_eliminates_after_round_zero() {
        // beta(0) ~ 0.4988 < 0.5, so a unit gap separates after round 0
        let sched = RoundSchedule::new(5_000_000).unwrap();
        let mut s = bai_state(&[1.0, 0.0], 31);
        let mut rng = policy_rng(0, "pe-cs");
        assert_eq!(bai_decide(&mut s, &sched, &mut rng), BaiStep::RoundEnd { tentative: 0 });
        assert_eq!(s.active, vec![0]);
        assert_eq!(s.omega, vec![1, 0]);
    }

    #[test]
    fn identical_means_keep_everyone() {
        let sched = RoundSchedule::new(100_000).unwrap();
        let tau = sched.quota(0);
        let mut s = bai_state(&[0.4, 0.4, 0.4], tau);
        let mut rng = policy_rng(3, "pe-cs");
        assert!(matches!(bai_decide(&mut s, &sched, &mut rng), BaiStep::RoundEnd { .. }));
        assert_eq!(s.active, vec![0, 1, 2]);
        assert_eq!(s.omega, vec![1, 1, 1]);
    }

    #[test]
    fn single_arm_commits() {
        let mut p = PeCs::new(1, RoundSchedule::new(100).unwrap(), 0.2, policy_rng(0, "pe-cs"));
        assert_eq!(p.select(1), 0);
        assert_eq!(p.committed_arm(), Some(0));
    }

    #[test]
    fn collapse_hands_over_to_pe_with_rounds() {
        let sched = RoundSchedule::new(5_000_000).unwrap();
        let mut p = PeCs::new(2, sched, 0.0, policy_rng(0, "pe-cs"));
        // arm 1 best: deterministic rewards 0 for arm 0, 1 for arm 1
        let mut t = 1;
        while p.reference().is_none() {
            let arm = p.select(t);
            p.observe(arm, arm as f64).unwrap();
            t += 1;
        }
        assert_eq!(p.reference(), Some(1));
        // BAI bumped only the survivor; the PE episode for arm 0 reuses
        // the round-0 samples, eliminates it at once and commits
        assert_eq!(p.state().omega, vec![0, 1]);
        assert_eq!(p.state().n, vec![31, 32]);
        assert_eq!(p.committed_arm(), Some(1));
    }

    #[test]
    fn pe_stage_continues_from_bai_rounds() {
        let sched = RoundSchedule::new(5_000_000).unwrap();
        let mut p = PeCs::new(3, sched, 0.5, policy_rng(0, "pe-cs"));
        let rewards = [0.5, 0.0, 1.0];
        let mut t = 1;
        while p.reference().is_none() {
            let arm = p.select(t);
            p.observe(arm, rewards[arm]).unwrap();
            t += 1;
        }
        // arm 1 fell in round 0 and arm 0 in round 1
        assert_eq!(p.reference(), Some(2));
        assert_eq!(p.state().phase, Phase::Pe);
        assert_eq!(p.state().episode, Some(0));
        assert_eq!(p.state().omega, vec![2, 0, 2]);
    }
}
