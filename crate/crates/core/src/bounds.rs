//! Closed-form regret bounds.
//!
//! Lower bounds are per-arm coefficients `c_i` in
//! `liminf E[n_i(T)] / ln T >= c_i` for unit-variance Gaussian rewards.
//! Upper bounds are totals for cost and quality regret at a horizon, kept
//! as labeled terms so a report can show where the regret comes from.
//!
//! Conventions shared by every evaluator:
//! - the gap of `a*` is negative for a feasible `a*`; its magnitude is used
//!   wherever it is squared or divides;
//! - a term whose outer factor is exactly zero (a zero cost gap, an empty
//!   max or sum, a vanishing `(1 - alpha)`) is zero without evaluating the
//!   gaps inside it;
//! - a gap that has to divide but is zero, or a log argument `T gap^2 <= 1`,
//!   is a [`Error::DegenerateGap`] naming the arm (1-based).

// the formulas index several per-arm vectors with the same arm number
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{GapProfile, SubsidySetting};

const PI2_6: f64 = PI * PI / 6.0;

fn degenerate(arm: usize, reason: impl Into<String>) -> Error {
    Error::DegenerateGap {
        arm: arm + 1,
        reason: reason.into(),
    }
}

/// `|gap|`, rejecting zero.
fn nonzero(gap: f64, arm: usize, what: &str) -> Result<f64> {
    let g = gap.abs();
    if g > 0.0 && g.is_finite() {
        Ok(g)
    } else {
        Err(degenerate(arm, format!("{what} is {gap}")))
    }
}

/// `ln(T gap^2) / gap^2`, rejecting log arguments at or below one.
fn log_over_sq(horizon: u64, gap: f64, arm: usize) -> Result<f64> {
    let g = nonzero(gap, arm, "gap")?;
    let arg = horizon as f64 * g * g;
    if arg <= 1.0 {
        return Err(degenerate(
            arm,
            format!("T * gap^2 = {arg} <= 1 (gap {g} too small for horizon {horizon})"),
        ));
    }
    Ok(arg.ln() / (g * g))
}

/// `weight * f()` with `f` skipped when the weight is zero.
fn weighted(weight: f64, f: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if weight == 0.0 {
        Ok(0.0)
    } else {
        Ok(weight * f()?)
    }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn expect_setting(profile: &GapProfile, kind: &str) -> Result<()> {
    if profile.setting.kind_name() == kind {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "bound needs the `{kind}` setting, got `{}`",
            profile.setting.kind_name()
        )))
    }
}

/// Per-arm lower-bound coefficients (multiples of `ln T`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub setting: &'static str,
    pub coefficients: Vec<f64>,
}

/// Lower bound with a known reference arm: `2 / gap_Q,i^2` for arms
/// cheaper than `a*`, `max_{i <= a*} 2 (1 - alpha)^2 / gap_Q,i^2` for the
/// reference, zero elsewhere.
pub fn lb_known_ref(profile: &GapProfile) -> Result<LowerBound> {
    expect_setting(profile, "known-ell")?;
    let SubsidySetting::KnownReferenceArm { ell, alpha } = profile.setting else {
        unreachable!()
    };
    let a = profile.a_star;
    let mut coefficients = vec![0.0; profile.arms()];
    for (i, c) in coefficients.iter_mut().enumerate().take(a) {
        *c = 2.0 / nonzero(profile.delta_q[i], i, "quality gap")?.powi(2);
    }
    let keep = (1.0 - alpha).powi(2);
    coefficients[ell] = weighted(keep, || {
        (0..=a).try_fold(0.0, |m: f64, i| {
            Ok::<f64, Error>(m.max(2.0 / nonzero(profile.delta_q[i], i, "quality gap")?.powi(2)))
        })
    })?;
    Ok(LowerBound {
        setting: "known-ell",
        coefficients,
    })
}

/// Lower bound in the subsidized best reward setting.
pub fn lb_subsidized(profile: &GapProfile) -> Result<LowerBound> {
    expect_setting(profile, "subsidized")?;
    let alpha = profile.setting.alpha().unwrap_or(0.0);
    let (a, best) = (profile.a_star, profile.i_star);
    let keep = 1.0 - alpha;
    let mut coefficients = vec![0.0; profile.arms()];
    for i in 0..a {
        if i != best {
            coefficients[i] = 2.0 / nonzero(profile.delta_q[i], i, "quality gap")?.powi(2);
        }
    }
    for i in (a + 1)..profile.arms() {
        if i == best {
            continue;
        }
        if keep == 0.0 {
            return Err(degenerate(i, "alpha = 1 leaves mu_a* / (1 - alpha) undefined"));
        }
        let gap = profile.means[a] / keep - profile.means[i];
        coefficients[i] = 2.0 / nonzero(gap, i, "mu_a*/(1-alpha) - mu_i")?.powi(2);
    }
    coefficients[best] = weighted(keep * keep, || {
        let own = 1.0 / nonzero(profile.delta_q[a], a, "quality gap of a*")?.powi(2);
        let cheap: Vec<usize> = (0..a).collect();
        let min_cheap = cheap.iter().map(|&i| profile.delta_q[i]).fold(f64::INFINITY, f64::min);
        let delta_min = profile.delta_min.unwrap_or(f64::INFINITY);
        let active = !cheap.is_empty() && min_cheap <= keep * delta_min;
        let low = if active {
            cheap.iter().try_fold(0.0, |m: f64, &i| {
                Ok::<f64, Error>(m.max(1.0 / nonzero(profile.delta_q[i], i, "quality gap")?.powi(2)))
            })?
        } else {
            0.0
        };
        Ok(2.0 * own.max(low))
    })?;
    Ok(LowerBound {
        setting: "subsidized",
        coefficients,
    })
}

/// Lower bound with a fixed threshold: `2 / gap_Q,i^2` for arms cheaper than
/// `a*`; nothing for the others.
pub fn lb_fixed_threshold(profile: &GapProfile) -> Result<LowerBound> {
    expect_setting(profile, "fixed")?;
    let mut coefficients = vec![0.0; profile.arms()];
    for (i, c) in coefficients.iter_mut().enumerate().take(profile.a_star) {
        *c = 2.0 / nonzero(profile.delta_q[i], i, "quality gap")?.powi(2);
    }
    Ok(LowerBound {
        setting: "fixed",
        coefficients,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTerm {
    pub label: &'static str,
    pub value: f64,
}

/// Upper bound on expected cost and quality regret at one horizon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    pub policy: &'static str,
    pub horizon: u64,
    pub cost_terms: Vec<BoundTerm>,
    pub quality_terms: Vec<BoundTerm>,
    pub cost_total: f64,
    pub quality_total: f64,
}

impl UpperBound {
    fn new(
        policy: &'static str,
        horizon: u64,
        cost_terms: Vec<BoundTerm>,
        quality_terms: Vec<BoundTerm>,
    ) -> Self {
        let cost_total = cost_terms.iter().map(|t| t.value).sum();
        let quality_total = quality_terms.iter().map(|t| t.value).sum();
        UpperBound {
            policy,
            horizon,
            cost_terms,
            quality_terms,
            cost_total,
            quality_total,
        }
    }
}

fn term(label: &'static str, value: f64) -> BoundTerm {
    BoundTerm { label, value }
}

/// Coefficient of `ln T` in the PE sample bound of a cheap arm `i < a*`:
/// `32 / gap_Q,i^2`.
pub fn pe_log_coefficient(profile: &GapProfile, arm: usize) -> Result<f64> {
    if arm >= profile.a_star {
        return Err(Error::Validation(format!(
            "arm {} is not cheaper than a* = {}",
            arm + 1,
            profile.a_star + 1
        )));
    }
    Ok(32.0 / nonzero(profile.delta_q[arm], arm, "quality gap")?.powi(2))
}

/// PE bound on the expected pulls of an arm `i < a*`:
/// `1 + 32 ln(T gap^2) / gap^2 + 43 / gap^2`.
pub fn pe_low_cost_sample_bound(profile: &GapProfile, arm: usize, horizon: u64) -> Result<f64> {
    pe_log_coefficient(profile, arm)?;
    let g = profile.delta_q[arm];
    Ok(1.0 + 32.0 * log_over_sq(horizon, g, arm)? + 43.0 / (g * g))
}

/// Upper bound for PE in the known reference arm setting.
pub fn ub_pe(profile: &GapProfile, horizon: u64) -> Result<UpperBound> {
    expect_setting(profile, "known-ell")?;
    let ell = profile.setting.reference_arm().expect("known-ell setting");
    let a = profile.a_star;
    let dq = &profile.delta_q;
    let dc_ell = profile.delta_c[ell];

    let cost1 = weighted(dc_ell, || {
        let worst = (0..=a).try_fold(0.0, |m: f64, i| Ok::<f64, Error>(m.max(32.0 * log_over_sq(horizon, dq[i], i)?)))?;
        Ok(1.0 + worst)
    })?;
    let cost2 = weighted(dc_ell, || {
        (0..=a).try_fold(0.0, |s, i| Ok::<f64, Error>(s + 43.0 / nonzero(dq[i], i, "quality gap")?.powi(2)))
    })?;
    let high_cost = max_of(((a + 1)..=ell).map(|i| profile.delta_c[i]));
    let inv_a = || Ok(43.0 / nonzero(dq[a], a, "quality gap of a*")?.powi(2));
    let cost3 = weighted(high_cost, inv_a)?;

    let mut quality1 = 0.0;
    let mut quality2 = 0.0;
    for i in 0..a {
        let g = nonzero(dq[i], i, "quality gap")?;
        quality1 += g + 32.0 * log_over_sq(horizon, g, i)? * g;
        quality2 += 43.0 / g;
    }
    let high_quality = max_of(((a + 1)..ell).map(|i| profile.delta_q_plus(i)));
    let quality3 = weighted(high_quality, inv_a)?;

    Ok(UpperBound::new(
        "pe",
        horizon,
        vec![
            term("arm ell under nominal termination in PE episode a*", cost1),
            term("arm ell under mis-termination in PE episode <= a*", cost2),
            term("episodes > a* in case of mis-termination during episode a*", cost3),
        ],
        vec![
            term("arms i < a* under nominal termination in PE episode a*", quality1),
            term("arms i < a* under mis-termination in PE episode <= a*", quality2),
            term("episodes > a* in case of mis-termination during episode a*", quality3),
        ],
    ))
}

/// Upper bound for PE-CS in the subsidized best reward setting.
pub fn ub_pe_cs(profile: &GapProfile, horizon: u64) -> Result<UpperBound> {
    expect_setting(profile, "subsidized")?;
    let k = profile.arms();
    let (a, best) = (profile.a_star, profile.i_star);
    let dq = &profile.delta_q;
    let conv = &profile.delta_conv;
    if (0..k).any(|j| j != best && conv[j] == 0.0) {
        return Err(degenerate(best, "best-reward arm is not unique"));
    }
    let dc_best = profile.delta_c[best];

    // i* samples are bounded through the gap set {delta_min} u {|gap_Q,j|, j <= a*}
    let cost1 = weighted(dc_best, || {
        let delta_min = profile
            .delta_min
            .ok_or_else(|| degenerate(best, "delta_min undefined for a single arm"))?;
        let mut worst = 32.0 * log_over_sq(horizon, delta_min, best)?;
        for j in 0..=a {
            worst = worst.max(32.0 * log_over_sq(horizon, dq[j], j)?);
        }
        Ok(1.0 + worst)
    })?;
    // 32 / gap_a*^2 + 43 / gap_Q,a*^2
    let tail_a = || -> Result<f64> {
        Ok(32.0 / nonzero(conv[a], a, "conventional gap of a*")?.powi(2)
            + 43.0 / nonzero(dq[a], a, "quality gap of a*")?.powi(2))
    };
    let cost2 = weighted(dc_best, || {
        let cheap = (0..a).try_fold(0.0, |s, i| Ok::<f64, Error>(s + 43.0 / nonzero(dq[i], i, "quality gap")?.powi(2)))?;
        Ok(cheap + tail_a()?)
    })?;
    let high_sum = |gap: &dyn Fn(usize) -> f64| -> Result<f64> {
        ((a + 1)..k).filter(|&i| i != best).try_fold(0.0, |s, i| {
            let v = weighted(gap(i), || Ok(1.0 + 32.0 * log_over_sq(horizon, conv[i], i)?))?;
            Ok::<f64, Error>(s + v)
        })
    };
    let improper = || -> Result<f64> {
        let delta_min = profile
            .delta_min
            .ok_or_else(|| degenerate(best, "delta_min undefined for a single arm"))?;
        let mut s = 11.0 / nonzero(delta_min, best, "delta_min")?.powi(2);
        for j in (0..k).filter(|&j| j != best) {
            s += 32.0 / nonzero(conv[j], j, "conventional gap")?.powi(2);
        }
        Ok(s)
    };

    let cost3 = weighted(max_of(((a + 1)..k).map(|i| profile.delta_c[i])), tail_a)?;
    let cost4 = high_sum(&|i| profile.delta_c[i])?;
    let cost5 = weighted(max_of(profile.delta_c.iter().copied()), improper)?;

    let mut quality1 = 0.0;
    let mut quality2 = 0.0;
    for i in 0..a {
        let g = nonzero(dq[i], i, "quality gap")?;
        quality1 += g + 32.0 * log_over_sq(horizon, g, i)? * g;
        quality2 += 43.0 / g;
    }
    let quality3 = weighted(max_of(((a + 1)..k).map(|i| profile.delta_q_plus(i))), tail_a)?;
    let quality4 = high_sum(&|i| profile.delta_q_plus(i))?;
    let quality5 = weighted(max_of((0..k).map(|i| profile.delta_q_plus(i))), improper)?;

    Ok(UpperBound::new(
        "pe-cs",
        horizon,
        vec![
            term("i* under nominal termination in PE-stage episode a*", cost1),
            term("i* under mis-termination in PE-stage episode <= a*", cost2),
            term("PE-stage episodes > a* in case of mis-termination during episode a*", cost3),
            term("high-cost arms with a proper end to the BAI-stage", cost4),
            term("improper end to BAI stage", cost5),
        ],
        vec![
            term("i < a* under nominal termination in PE-stage episode a*", quality1),
            term("i < a* under mis-termination in PE-stage episode <= a*", quality2),
            term("PE-stage episodes > a* in case of mis-termination during episode a*", quality3),
            term("high-cost arms with a proper end to the BAI-stage", quality4),
            term("improper end to BAI stage", quality5),
        ],
    ))
}

/// Upper bound for FT-UCB in the fixed threshold setting. The cost part
/// does not depend on the horizon.
pub fn ub_ft_ucb(profile: &GapProfile, horizon: u64) -> Result<UpperBound> {
    expect_setting(profile, "fixed")?;
    let k = profile.arms();
    let a = profile.a_star;
    let high: Vec<f64> = ((a + 1)..k).map(|i| profile.delta_c[i]).collect();
    let cost1: f64 = high.iter().sum();
    let cost2 = PI2_6 * max_of(high.iter().copied());

    if horizon < 1 {
        return Err(Error::Validation("horizon must be at least 1".into()));
    }
    let log_t = (horizon as f64).ln();
    let mut quality1 = 0.0;
    let mut cheap_sum = 0.0;
    for i in 0..a {
        let g = profile.delta_q_plus(i);
        quality1 += 8.0 * log_t / nonzero(g, i, "quality gap")?;
        cheap_sum += g;
    }
    let quality2 = (1.0 + PI2_6) * cheap_sum;
    let quality3 = PI2_6 * max_of((0..k).map(|i| profile.delta_q_plus(i)));

    Ok(UpperBound::new(
        "ft-ucb",
        horizon,
        vec![
            term("one initial pull of each high-cost arm", cost1),
            term("high-cost pulls after initialization", cost2),
        ],
        vec![
            term("low-cost arms, logarithmic part", quality1),
            term("low-cost arms, constant part", quality2),
            term("pulls while the optimal arm looks infeasible", quality3),
        ],
    ))
}

/// Lower and upper bounds matching the profile's setting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub instance: String,
    pub setting: SubsidySetting,
    pub horizon: u64,
    pub mu_cs: f64,
    /// 1-based, like every arm number in reports.
    pub a_star: usize,
    pub i_star: usize,
    pub lower: LowerBound,
    pub upper: UpperBound,
}

pub fn bound_report(instance: &str, profile: &GapProfile, horizon: u64) -> Result<BoundReport> {
    let (lower, upper) = match profile.setting {
        SubsidySetting::FixedThreshold { .. } => (lb_fixed_threshold(profile)?, ub_ft_ucb(profile, horizon)?),
        SubsidySetting::KnownReferenceArm { .. } => (lb_known_ref(profile)?, ub_pe(profile, horizon)?),
        SubsidySetting::SubsidizedBestReward { .. } => (lb_subsidized(profile)?, ub_pe_cs(profile, horizon)?),
    };
    Ok(BoundReport {
        instance: instance.to_owned(),
        setting: profile.setting,
        horizon,
        mu_cs: profile.mu_cs,
        a_star: profile.a_star + 1,
        i_star: profile.i_star + 1,
        lower,
        upper,
    })
}
