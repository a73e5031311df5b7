//! Pairwise elimination against a reference arm.
//!
//! Candidate arms are visited cheapest first; each episode compares one
//! candidate `i` with the reference `ell` in rounds until one of them is
//! eliminated. Reference samples are never discarded, so later episodes
//! reuse them.

use super::{Phase, Policy, PolicyId, PolicyState};
use crate::rounds::RoundSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeDecision {
    /// Quota not met yet: pull this arm.
    Sample(usize),
    /// The candidate beat the reference; commit to it.
    Winner(usize),
    /// The reference eliminated the candidate; move to this episode.
    Advance(usize),
    /// No elimination; the candidate's round was bumped (unless capped).
    NextRound,
}

/// One call of the symmetric PE rule for episode `candidate`.
///
/// Both arms are held to the quota of the candidate's round. On
/// [`PeDecision::NextRound`] only `omega[candidate]` increments, and not at
/// all once it reaches the schedule's cap.
pub fn pe_decide(
    state: &mut PolicyState,
    schedule: &RoundSchedule,
    candidate: usize,
    reference: usize,
    alpha: f64,
) -> PeDecision {
    let round = schedule.clamp(state.omega[candidate]);
    let tau = schedule.quota(round);
    for k in [candidate, reference] {
        if state.n[k] < tau {
            return PeDecision::Sample(k);
        }
    }
    let beta = schedule.bonus(round);
    eliminate(state, schedule, candidate, reference, alpha, beta, beta, false)
}

/// Effective rounds `(candidate, reference)` for asymmetric PE: the
/// reference may run ahead of the candidate by at most `kappa` rounds.
pub fn asymmetric_rounds(omega_candidate: u32, omega_reference: u32, kappa: u32) -> (u32, u32) {
    (
        omega_candidate,
        omega_candidate.saturating_add(kappa).min(omega_reference),
    )
}

/// Asymmetric PE: each arm gets its own quota and bonus, so a well-sampled
/// reference contributes a smaller bonus. `kappa = 0` reduces to
/// [`pe_decide`] whenever the two rounds agree.
pub fn asymmetric_pe_decide(
    state: &mut PolicyState,
    schedule: &RoundSchedule,
    candidate: usize,
    reference: usize,
    alpha: f64,
    kappa: u32,
) -> PeDecision {
    let (round_c, round_r) = asymmetric_rounds(state.omega[candidate], state.omega[reference], kappa);
    let (round_c, round_r) = (schedule.clamp(round_c), schedule.clamp(round_r));
    for (k, round) in [(candidate, round_c), (reference, round_r)] {
        if state.n[k] < schedule.quota(round) {
            return PeDecision::Sample(k);
        }
    }
    let beta_c = schedule.bonus(round_c);
    let beta_r = schedule.bonus(round_r);
    eliminate(state, schedule, candidate, reference, alpha, beta_c, beta_r, true)
}

#[allow(clippy::too_many_arguments)]
fn eliminate(
    state: &mut PolicyState,
    schedule: &RoundSchedule,
    candidate: usize,
    reference: usize,
    alpha: f64,
    beta_c: f64,
    beta_r: f64,
    track_reference: bool,
) -> PeDecision {
    let keep = 1.0 - alpha;
    let mu_c = state.mu_hat[candidate];
    let mu_r = state.mu_hat[reference];
    if keep * (mu_r + beta_r) < mu_c - beta_c {
        PeDecision::Winner(candidate)
    } else if mu_c + beta_c < keep * (mu_r - beta_r) {
        PeDecision::Advance(candidate + 1)
    } else {
        if !schedule.at_cap(state.omega[candidate]) {
            state.omega[candidate] += 1;
        }
        if track_reference {
            state.omega[reference] = state.omega[reference].max(state.omega[candidate]);
        }
        PeDecision::NextRound
    }
}

/// Runs one PE-stage step on `state` (phase `Pe`, episode and reference
/// set) and returns the arm to pull. Handles commit on a winner or when the
/// episodes reach the reference. After an advance or a round bump the rule
/// is applied again, so samples an arm already holds are reused.
pub(crate) fn pe_stage_select(
    state: &mut PolicyState,
    schedule: &RoundSchedule,
    alpha: f64,
    kappa: Option<u32>,
) -> usize {
    let reference = state.reference.expect("PE stage has a reference arm");
    loop {
        let candidate = state.episode.expect("PE stage has an episode");
        let was_capped = schedule.at_cap(state.omega[candidate]);
        let decision = match kappa {
            None => pe_decide(state, schedule, candidate, reference, alpha),
            Some(kappa) => asymmetric_pe_decide(state, schedule, candidate, reference, alpha, kappa),
        };
        match decision {
            PeDecision::Sample(arm) => return arm,
            PeDecision::Winner(arm) => {
                state.commit(arm);
                return arm;
            }
            PeDecision::Advance(next) if next >= reference => {
                state.commit(reference);
                return reference;
            }
            PeDecision::Advance(next) => state.episode = Some(next),
            // at the cap the pair is pulled round-robin
            PeDecision::NextRound if was_capped => {
                return if state.n[reference] < state.n[candidate] {
                    reference
                } else {
                    candidate
                };
            }
            PeDecision::NextRound => {}
        }
    }
}

/// Starts the PE stage: first episode is arm 0, or an immediate commit when
/// the reference is itself the cheapest arm.
pub(crate) fn enter_pe_stage(state: &mut PolicyState, reference: usize) {
    state.reference = Some(reference);
    if reference == 0 {
        state.commit(reference);
    } else {
        state.phase = Phase::Pe;
        state.episode = Some(0);
    }
}

/// PE (and asymmetric PE when `kappa` is set) for the known reference arm
/// setting. Arms costlier than the reference are never pulled.
#[derive(Clone, Debug)]
pub struct PairwiseElimination {
    state: PolicyState,
    schedule: RoundSchedule,
    alpha: f64,
    kappa: Option<u32>,
}

impl PairwiseElimination {
    pub fn new(arms: usize, schedule: RoundSchedule, reference: usize, alpha: f64, kappa: Option<u32>) -> Self {
        let mut state = PolicyState::new(arms, Phase::Pe);
        enter_pe_stage(&mut state, reference);
        PairwiseElimination {
            state,
            schedule,
            alpha,
            kappa,
        }
    }

    pub fn schedule(&self) -> &RoundSchedule {
        &self.schedule
    }
}

impl Policy for PairwiseElimination {
    fn id(&self) -> PolicyId {
        if self.kappa.is_some() {
            PolicyId::AsymPe
        } else {
            PolicyId::Pe
        }
    }

    fn select(&mut self, _t: u64) -> usize {
        match self.state.committed_arm {
            Some(arm) => arm,
            None => pe_stage_select(&mut self.state, &self.schedule, self.alpha, self.kappa),
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

    const T: u64 = 5_000_000;

    fn state_with(n: [u64; 2], mu: [f64; 2], omega: [u32; 2]) -> PolicyState {
        let mut s = PolicyState::new(2, Phase::Pe);
        s.n = n.to_vec();
        s.mu_hat = mu.to_vec();
        s.omega = omega.to_vec();
        s
    }

    #[test]
    fn samples_candidate_first() {
        let sched = RoundSchedule::new(T).unwrap();
        let mut s = state_with([0, 0], [0.0, 0.0], [0, 0]);
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::Sample(0));
        s.n = vec![31, 5];
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::Sample(1));
    }

    #[test]
    fn clear_winner_at_round_zero() {
        // beta(5e6, 1, 31) ~ 0.4988 so 1 - beta > beta
        let sched = RoundSchedule::new(T).unwrap();
        let mut s = state_with([31, 31], [1.0, 0.0], [0, 0]);
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::Winner(0));
        let mut s = state_with([31, 31], [0.0, 1.0], [0, 0]);
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::Advance(1));
    }

    #[test]
    fn tie_moves_to_next_round() {
        let sched = RoundSchedule::new(T).unwrap();
        let mut s = state_with([31, 31], [0.5, 0.5], [0, 0]);
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::NextRound);
        assert_eq!(s.omega, vec![1, 0]);
    }

    #[test]
    fn rounds_stop_at_cap() {
        let sched = RoundSchedule::new(T).unwrap();
        let cap = sched.max_round();
        let tau = sched.quota(cap);
        let mut s = state_with([tau, tau], [0.5, 0.5], [cap, 0]);
        assert_eq!(pe_decide(&mut s, &sched, 0, 1, 0.0), PeDecision::NextRound);
        assert_eq!(s.omega[0], cap);
    }

    #[test]
    fn asymmetric_kappa_zero_matches_symmetric() {
        let sched = RoundSchedule::new(100_000).unwrap();
        for (n, mu, w) in [
            ([280u64, 280u64], [0.6, 0.5], [2u32, 2u32]),
            ([280, 400], [0.9, 0.2], [2, 2]),
            ([10, 400], [0.9, 0.2], [1, 1]),
            ([1000, 1000], [0.55, 0.5], [3, 3]),
        ] {
            let mut a = state_with(n, mu, w);
            let mut b = a.clone();
            assert_eq!(
                pe_decide(&mut a, &sched, 0, 1, 0.1),
                asymmetric_pe_decide(&mut b, &sched, 0, 1, 0.1, 0)
            );
            // the asymmetric rule also drags the reference round along
            assert_eq!(a.omega[0], b.omega[0]);
        }
    }

    #[test]
    fn asymmetric_rounds_capped_by_kappa() {
        assert_eq!(asymmetric_rounds(3, 8, 2), (3, 5));
        assert_eq!(asymmetric_rounds(3, 4, 2), (3, 4));
        assert_eq!(asymmetric_rounds(3, 3, 0), (3, 3));
    }

    #[test]
    fn asymmetric_reference_bonus_is_smaller() {
        let sched = RoundSchedule::new(1_000_000).unwrap();
        for wi in 0..sched.max_round() {
            for ahead in 1..=(sched.max_round() - wi) {
                let (rc, rr) = asymmetric_rounds(wi, wi + ahead, 10);
                assert!(sched.bonus(rr) < sched.bonus(rc));
            }
        }
    }

    #[test]
    fn asymmetric_next_round_drags_reference() {
        let sched = RoundSchedule::new(100_000).unwrap();
        let tau = sched.quota(0);
        let mut s = state_with([tau, tau], [0.5, 0.5], [0, 0]);
        assert_eq!(asymmetric_pe_decide(&mut s, &sched, 0, 1, 0.0, 1), PeDecision::NextRound);
        assert_eq!(s.omega, vec![1, 1]);
    }

    #[test]
    fn cheapest_reference_commits_immediately() {
        let mut pe = PairwiseElimination::new(3, RoundSchedule::new(1000).unwrap(), 0, 0.0, None);
        assert_eq!(pe.committed_arm(), Some(0));
        assert_eq!(pe.select(1), 0);
    }

    #[test]
    fn single_arm_always_pulls_it() {
        let mut pe = PairwiseElimination::new(1, RoundSchedule::new(1000).unwrap(), 0, 0.3, None);
        for t in 1..=20 {
            assert_eq!(pe.select(t), 0);
            pe.observe(0, 1.0).unwrap();
        }
    }
}
