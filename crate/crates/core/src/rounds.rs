//! Round arithmetic shared by the elimination policies.
//!
//! Round `w` presumes a gap of `2^-w`, asks for
//! `tau = ceil(2 ln(T gap^2) / gap^2)` samples per arm and uses the bonus
//! `beta = sqrt(ln(T gap^2) / (2 tau))`. Both need `T gap^2 > 1`, so rounds
//! are capped at [`max_round`], the last round with `T gap^2 > e`.

// `!(x > y)` below is deliberate: it also rejects NaN inputs
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `2^-omega`, exact.
pub fn presumed_gap(omega: u32) -> f64 {
    // powi is exact for powers of two inside the normal range
    2f64.powi(-(omega as i32))
}

/// `ceil(2 ln(T gap^2) / gap^2)` (natural log).
pub fn sample_quota(horizon: f64, gap: f64) -> Result<u64> {
    let log_arg = horizon * gap * gap;
    if !(log_arg > 1.0) || !(gap > 0.0) {
        return Err(Error::RoundOverflow {
            horizon: horizon as u64,
            gap,
        });
    }
    Ok((2.0 * log_arg.ln() / (gap * gap)).ceil() as u64)
}

/// `sqrt(ln(T gap^2) / (2 tau))`, with `tau` the integer quota actually enforced.
pub fn exploration_bonus(horizon: f64, gap: f64, tau: u64) -> Result<f64> {
    let log_arg = horizon * gap * gap;
    if !(log_arg > 1.0) {
        return Err(Error::RoundOverflow {
            horizon: horizon as u64,
            gap,
        });
    }
    if tau == 0 {
        return Err(Error::Validation("exploration bonus needs tau >= 1".into()));
    }
    Ok((log_arg.ln() / (2.0 * tau as f64)).sqrt())
}

/// Largest round with `T * 4^-omega > e`: `floor(log2(sqrt(T / e)))`.
pub fn max_round(horizon: u64) -> Result<u32> {
    if horizon < 3 {
        return Err(Error::DegenerateHorizon(horizon));
    }
    let t = horizon as f64;
    let mut omega = (0.5 * (t / E).log2()).floor().max(0.0) as u32;
    // guard the float estimate against off-by-one at the boundary
    while omega > 0 && !(t * presumed_gap(omega) * presumed_gap(omega) > E) {
        omega -= 1;
    }
    while t * presumed_gap(omega + 1) * presumed_gap(omega + 1) > E {
        omega += 1;
    }
    Ok(omega)
}

/// Precomputed quotas and bonuses for rounds `0..=max_round` of one horizon.
#[derive(Clone, Debug)]
pub struct RoundSchedule {
    horizon: u64,
    max_round: u32,
    quotas: Vec<u64>,
    bonuses: Vec<f64>,
}

impl RoundSchedule {
    pub fn new(horizon: u64) -> Result<Self> {
        let max_round = max_round(horizon)?;
        let t = horizon as f64;
        let mut quotas = Vec::with_capacity(max_round as usize + 1);
        let mut bonuses = Vec::with_capacity(max_round as usize + 1);
        for omega in 0..=max_round {
            let gap = presumed_gap(omega);
            let tau = sample_quota(t, gap)?;
            quotas.push(tau);
            bonuses.push(exploration_bonus(t, gap, tau)?);
        }
        Ok(RoundSchedule {
            horizon,
            max_round,
            quotas,
            bonuses,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn max_round(&self) -> u32 {
        self.max_round
    }

    pub fn clamp(&self, omega: u32) -> u32 {
        omega.min(self.max_round)
    }

    pub fn at_cap(&self, omega: u32) -> bool {
        omega >= self.max_round
    }

    /// Quota of round `omega`, clamped to the cap.
    pub fn quota(&self, omega: u32) -> u64 {
        self.quotas[self.clamp(omega) as usize]
    }

    /// Bonus of round `omega`, clamped to the cap.
    pub fn bonus(&self, omega: u32) -> f64 {
        self.bonuses[self.clamp(omega) as usize]
    }
}
