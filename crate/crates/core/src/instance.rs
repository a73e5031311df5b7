//! Bandit instances, subsidy settings and derived gap quantities.
//!
//! Arms are always stored in non-decreasing cost order. Ties keep input
//! order, and every arg-min / arg-max in the crate breaks ties toward the
//! lowest index.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reward distribution family shared by all arms of an instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RewardKind {
    Bernoulli,
    /// `mean + sigma * N(0, 1)`; `sigma = 0` is deterministic.
    Gaussian { sigma: f64 },
}

impl RewardKind {
    /// Parses `bernoulli`, `gaussian` (sigma 1) or `gaussian:<sigma>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        match text.split_once(':') {
            None if text.eq_ignore_ascii_case("bernoulli") => Ok(RewardKind::Bernoulli),
            None if text.eq_ignore_ascii_case("gaussian") => Ok(RewardKind::Gaussian { sigma: 1.0 }),
            Some((kind, sigma)) if kind.eq_ignore_ascii_case("gaussian") => {
                let sigma: f64 = sigma
                    .trim()
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad gaussian sigma `{sigma}`")))?;
                if !sigma.is_finite() || sigma < 0.0 {
                    return Err(Error::Validation(format!("gaussian sigma must be >= 0, got {sigma}")));
                }
                Ok(RewardKind::Gaussian { sigma })
            }
            _ => Err(Error::Validation(format!("unknown reward kind `{text}`"))),
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardKind::Bernoulli => write!(f, "bernoulli"),
            RewardKind::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub mean: f64,
    pub cost: f64,
}

impl Arm {
    pub fn new(label: impl Into<String>, mean: f64, cost: f64) -> Self {
        Arm {
            label: label.into(),
            mean,
            cost,
        }
    }
}

/// The environment: arm means and costs plus the reward family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    name: String,
    arms: Vec<Arm>,
    reward: RewardKind,
}

impl BanditInstance {
    /// Validates the arms and stable-sorts them by cost.
    pub fn new(name: impl Into<String>, mut arms: Vec<Arm>, reward: RewardKind) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Validation("an instance needs at least one arm".into()));
        }
        if let RewardKind::Gaussian { sigma } = reward {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::Validation(format!("gaussian sigma must be >= 0, got {sigma}")));
            }
        }
        for arm in &arms {
            validate_arm(arm, reward)?;
        }
        arms.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        Ok(BanditInstance {
            name: name.into(),
            arms,
            reward,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.arms[arm].mean
    }

    pub fn cost(&self, arm: usize) -> f64 {
        self.arms[arm].cost
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.mean).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.cost).collect()
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward
    }

    pub fn with_reward_kind(self, reward: RewardKind) -> Result<Self> {
        BanditInstance::new(self.name, self.arms, reward)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Lowest index attaining the largest mean.
    pub fn best_arm(&self) -> usize {
        argmax_first(self.arms.iter().map(|a| a.mean))
    }

    /// Draws one reward from `arm`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        let mean = self.arms[arm].mean;
        match self.reward {
            RewardKind::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Gaussian { sigma: 0.0 } => mean,
            RewardKind::Gaussian { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z
            }
        }
    }
}

fn validate_arm(arm: &Arm, reward: RewardKind) -> Result<()> {
    if !arm.mean.is_finite() {
        return Err(Error::Validation(format!("arm `{}`: mean must be finite", arm.label)));
    }
    if reward == RewardKind::Bernoulli && !(0.0..=1.0).contains(&arm.mean) {
        return Err(Error::Validation(format!(
            "arm `{}`: Bernoulli mean {} outside [0, 1]",
            arm.label, arm.mean
        )));
    }
    if !arm.cost.is_finite() || arm.cost < 0.0 {
        return Err(Error::Validation(format!(
            "arm `{}`: cost must be finite and >= 0, got {}",
            arm.label, arm.cost
        )));
    }
    Ok(())
}

/// First index of the maximum; NaN never wins.
pub(crate) fn argmax_first(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

pub const INSTANCE_HEADER: &str = "label,mean,cost";
pub const SUMMARY_HEADER: &str = "genre,mean_rating";

/// Loads an instance CSV (Bernoulli rewards).
///
/// Rows are `label,mean,cost` or `mean,cost`; in the second form the
/// 1-based input row number becomes the label. An optional header line and
/// `#` comment lines are skipped.
pub fn load_instance(path: impl AsRef<Path>) -> Result<BanditInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    parse_instance(&text, &name, &path.display().to_string())
}

pub fn parse_instance(text: &str, name: &str, source: &str) -> Result<BanditInstance> {
    let mut arms = Vec::new();
    let mut last_line = 1;
    for record in csv_records(text) {
        let (line, fields) = record.map_err(|e| parse_err(source, e.0, e.1))?;
        last_line = line;
        if arms.is_empty() && is_header(&fields, &["label", "mean", "cost"], &["mean", "cost"]) {
            continue;
        }
        let (label, mean, cost) = match fields.as_slice() {
            [label, mean, cost] => (label.clone(), mean, cost),
            [mean, cost] => ((arms.len() + 1).to_string(), mean, cost),
            _ => {
                return Err(parse_err(
                    source,
                    line,
                    format!("expected `label,mean,cost` or `mean,cost`, got {} fields", fields.len()),
                ))
            }
        };
        let mean = parse_number(mean, "mean").map_err(|m| parse_err(source, line, m))?;
        let cost = parse_number(cost, "cost").map_err(|m| parse_err(source, line, m))?;
        let arm = Arm::new(label, mean, cost);
        validate_arm(&arm, RewardKind::Bernoulli).map_err(|e| parse_err(source, line, e.to_string()))?;
        arms.push(arm);
    }
    if arms.is_empty() {
        return Err(parse_err(source, last_line, "no arms found".into()));
    }
    BanditInstance::new(name, arms, RewardKind::Bernoulli)
}

/// Serializes in cost order with the canonical header.
pub fn instance_to_csv(instance: &BanditInstance) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["label", "mean", "cost"])?;
    for arm in instance.arms() {
        writer.write_record([arm.label.clone(), arm.mean.to_string(), arm.cost.to_string()])?;
    }
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_instance(instance: &BanditInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, instance_to_csv(instance)?).map_err(|e| Error::io(path, e))
}

/// Loads a `genre,mean_rating` summary.
pub fn load_dataset_summary(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset_summary(&text, &path.display().to_string())
}

pub fn parse_dataset_summary(text: &str, source: &str) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    let mut last_line = 1;
    for record in csv_records(text) {
        let (line, fields) = record.map_err(|e| parse_err(source, e.0, e.1))?;
        last_line = line;
        if rows.is_empty() && is_header(&fields, &["genre", "mean_rating"], &[]) {
            continue;
        }
        let [genre, rating] = fields.as_slice() else {
            return Err(parse_err(source, line, format!("expected `genre,mean_rating`, got {} fields", fields.len())));
        };
        let rating = parse_number(rating, "mean_rating").map_err(|m| parse_err(source, line, m))?;
        rows.push((genre.clone(), rating));
    }
    if rows.is_empty() {
        return Err(parse_err(source, last_line, "no genres found".into()));
    }
    Ok(rows)
}

/// Turns per-genre mean ratings (5-point scale) into a Bernoulli instance:
/// mean = rating / 5, cost ~ Uniform(0, 1) seeded by `cost_seed`.
pub fn build_dataset_instance(
    name: impl Into<String>,
    summary: &[(String, f64)],
    cost_seed: u64,
) -> Result<BanditInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(cost_seed);
    let mut arms = Vec::with_capacity(summary.len());
    for (genre, rating) in summary {
        if !(0.0..=5.0).contains(rating) {
            return Err(Error::Validation(format!(
                "genre `{genre}`: mean rating {rating} outside [0, 5]"
            )));
        }
        let cost: f64 = rng.random();
        arms.push(Arm::new(genre.clone(), rating / 5.0, cost));
    }
    BanditInstance::new(name, arms, RewardKind::Bernoulli)
}

/// Four-arm family: means (mu1, 0.81, 0.95, 0.8), costs (0.05, 0.9, 0.9, 1.0).
pub fn toy_instance(mu1: f64) -> Result<BanditInstance> {
    if !(0.0..=1.0).contains(&mu1) {
        return Err(Error::Validation(format!("toy mu1 {mu1} outside [0, 1]")));
    }
    BanditInstance::new(
        format!("toy-mu1={mu1}"),
        vec![
            Arm::new("1", mu1, 0.05),
            Arm::new("2", 0.81, 0.9),
            Arm::new("3", 0.95, 0.9),
            Arm::new("4", 0.8, 1.0),
        ],
        RewardKind::Bernoulli,
    )
}

pub fn toy_family(mu1_grid: &[f64]) -> Result<Vec<BanditInstance>> {
    mu1_grid.iter().map(|&mu1| toy_instance(mu1)).collect()
}

/// The four-arm instance used to compare symmetric and asymmetric PE.
pub fn asymmetric_pe_instance() -> BanditInstance {
    BanditInstance::new(
        "asym-pe",
        vec![
            Arm::new("1", 0.74, 0.15),
            Arm::new("2", 0.5, 0.2),
            Arm::new("3", 0.8, 0.21),
            Arm::new("4", 0.75, 0.25),
        ],
        RewardKind::Bernoulli,
    )
    .expect("static instance is valid")
}

/// `n` evenly spaced points from `start` to `end` inclusive.
pub fn uniform_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| {
                let x = start + (end - start) * k as f64 / (n - 1) as f64;
                // snap to 12 decimals so grid labels stay readable
                (x * 1e12).round() / 1e12
            })
            .collect(),
    }
}

type RecordResult = std::result::Result<(u64, Vec<String>), (u64, String)>;

fn csv_records(text: &str) -> impl Iterator<Item = RecordResult> + '_ {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    reader.into_records().filter_map(|rec| match rec {
        Ok(rec) => {
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                None
            } else {
                Some(Ok((line, rec.iter().map(str::to_owned).collect())))
            }
        }
        Err(e) => {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Some(Err((line, e.to_string())))
        }
    })
}

fn is_header(fields: &[String], full: &[&str], short: &[&str]) -> bool {
    let lower: Vec<String> = fields.iter().map(|f| f.to_ascii_lowercase()).collect();
    let matches = |names: &[&str]| !names.is_empty() && lower.iter().map(String::as_str).eq(names.iter().copied());
    matches(full) || matches(short)
}

fn parse_number(field: &str, what: &str) -> std::result::Result<f64, String> {
    field
        .parse::<f64>()
        .map_err(|_| format!("{what} `{field}` is not a number"))
}

fn parse_err(source: &str, line: u64, message: String) -> Error {
    Error::Parse {
        path: source.to_owned(),
        line,
        message,
    }
}

// ---------------------------------------------------------------------------
// Settings and gaps
// ---------------------------------------------------------------------------

/// Rule that fixes the feasibility threshold `mu_cs`.
///
/// `ell` is a 0-based index into the cost-sorted arms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "kebab-case")]
pub enum SubsidySetting {
    /// `mu_cs = mu0`
    FixedThreshold { mu0: f64 },
    /// `mu_cs = (1 - alpha) * mu_ell`
    KnownReferenceArm { ell: usize, alpha: f64 },
    /// `mu_cs = (1 - alpha) * max_i mu_i`
    SubsidizedBestReward { alpha: f64 },
}

impl SubsidySetting {
    pub fn validate(&self, instance: &BanditInstance) -> Result<()> {
        match *self {
            SubsidySetting::FixedThreshold { mu0 } => {
                if !mu0.is_finite() {
                    return Err(Error::Validation(format!("threshold mu0 must be finite, got {mu0}")));
                }
            }
            SubsidySetting::KnownReferenceArm { ell, alpha } => {
                if ell >= instance.len() {
                    return Err(Error::ArmIndex {
                        index: ell,
                        arms: instance.len(),
                    });
                }
                validate_alpha(alpha)?;
            }
            SubsidySetting::SubsidizedBestReward { alpha } => validate_alpha(alpha)?,
        }
        Ok(())
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            SubsidySetting::FixedThreshold { .. } => None,
            SubsidySetting::KnownReferenceArm { alpha, .. } | SubsidySetting::SubsidizedBestReward { alpha } => {
                Some(alpha)
            }
        }
    }

    pub fn reference_arm(&self) -> Option<usize> {
        match *self {
            SubsidySetting::KnownReferenceArm { ell, .. } => Some(ell),
            _ => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match *self {
            SubsidySetting::FixedThreshold { mu0 } => Some(mu0),
            _ => None,
        }
    }

    /// Short name used in CLI flags and result files.
    pub fn kind_name(&self) -> &'static str {
        match self {
            SubsidySetting::FixedThreshold { .. } => "fixed",
            SubsidySetting::KnownReferenceArm { .. } => "known-ell",
            SubsidySetting::SubsidizedBestReward { .. } => "subsidized",
        }
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Validation(format!("subsidy factor alpha {alpha} outside [0, 1]")))
    }
}

pub fn feasibility_threshold(instance: &BanditInstance, setting: &SubsidySetting) -> Result<f64> {
    setting.validate(instance)?;
    Ok(match *setting {
        SubsidySetting::FixedThreshold { mu0 } => mu0,
        SubsidySetting::KnownReferenceArm { ell, alpha } => (1.0 - alpha) * instance.mean(ell),
        SubsidySetting::SubsidizedBestReward { alpha } => (1.0 - alpha) * instance.mean(instance.best_arm()),
    })
}

/// Everything regret accounting and the bound evaluators need about an
/// instance under a setting. Arm indices are 0-based, in cost order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapProfile {
    pub setting: SubsidySetting,
    pub means: Vec<f64>,
    pub costs: Vec<f64>,
    pub mu_cs: f64,
    /// Cheapest feasible arm.
    pub a_star: usize,
    /// Best-reward arm.
    pub i_star: usize,
    pub mu_star: f64,
    /// Clipped cost gaps `(c_i - c_a*)^+`.
    pub delta_c: Vec<f64>,
    /// Signed quality gaps `mu_cs - mu_i`.
    pub delta_q: Vec<f64>,
    /// Conventional gaps `mu* - mu_i`.
    pub delta_conv: Vec<f64>,
    /// `min_{i != i*} delta_conv[i]`; `None` for a single arm.
    pub delta_min: Option<f64>,
    pub feasible: Vec<usize>,
}

impl GapProfile {
    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn delta_q_plus(&self, arm: usize) -> f64 {
        self.delta_q[arm].max(0.0)
    }

    /// Per-step (cost, quality) regret increments for pulling `arm`.
    pub fn step_regret(&self, arm: usize) -> (f64, f64) {
        (self.delta_c[arm], self.delta_q_plus(arm))
    }

    pub fn is_feasible(&self, arm: usize) -> bool {
        self.means[arm] >= self.mu_cs
    }
}

pub fn gap_profile(instance: &BanditInstance, setting: &SubsidySetting) -> Result<GapProfile> {
    let mu_cs = feasibility_threshold(instance, setting)?;
    let means = instance.means();
    let costs = instance.costs();
    let feasible: Vec<usize> = (0..means.len()).filter(|&i| means[i] >= mu_cs).collect();

    let mut a_star = None::<usize>;
    for &i in &feasible {
        match a_star {
            Some(a) if costs[i] >= costs[a] => {}
            _ => a_star = Some(i),
        }
    }
    let a_star = a_star.ok_or(Error::Infeasible { mu_cs })?;

    let i_star = argmax_first(means.iter().copied());
    let mu_star = means[i_star];
    let delta_c = costs.iter().map(|c| (c - costs[a_star]).max(0.0)).collect();
    let delta_q = means.iter().map(|m| mu_cs - m).collect();
    let delta_conv: Vec<f64> = means.iter().map(|m| mu_star - m).collect();
    let delta_min = (0..means.len())
        .filter(|&i| i != i_star)
        .map(|i| delta_conv[i])
        .min_by(f64::total_cmp);

    Ok(GapProfile {
        setting: *setting,
        means,
        costs,
        mu_cs,
        a_star,
        i_star,
        mu_star,
        delta_c,
        delta_q,
        delta_conv,
        delta_min,
        feasible,
    })
}
