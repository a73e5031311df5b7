//! Multi-armed bandits with cost subsidy.
//!
//! Every arm has a known sampling cost and an unknown expected reward. A
//! feasibility threshold `mu_cs` on the reward is set by one of three rules
//! ([`SubsidySetting`]); the goal is to keep pulling the cheapest arm whose
//! mean clears the threshold. Performance is measured with two regrets:
//! cost regret (excess cost over the optimal arm) and quality regret
//! (shortfall of the mean below `mu_cs`).
//!
//! The crate provides:
//! - [`instance`]: bandit instances, subsidy settings and the derived
//!   [`GapProfile`].
//! - [`rounds`]: the round schedule (presumed gap, sample quota, exploration
//!   bonus) shared by the elimination policies.
//! - [`policy`]: pairwise elimination (PE), asymmetric PE, PE-CS, FT-UCB and
//!   the ETC-CS / TS-CS / UCB-CS baselines behind one [`Policy`] trait.
//! - [`sim`]: seeded simulation with exact pseudo-regret accounting.
//! - [`bounds`]: closed-form lower and upper bound evaluators.
//! - [`experiment`]: configuration, sweeps and CSV persistence.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod instance;
pub mod policy;
pub mod rng;
pub mod rounds;
pub mod sim;

pub use error::{Error, Result};
pub use instance::{Arm, BanditInstance, GapProfile, RewardKind, SubsidySetting};
pub use policy::{Policy, PolicyId, PolicyParams};
pub use rounds::RoundSchedule;
pub use sim::{run_batch, run_single, CheckpointSchedule, RegretTrace, RunResult};
