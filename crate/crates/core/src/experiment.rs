//! Experiment configuration, sweeps and CSV persistence.
//!
//! A config is a flat TOML table whose keys mirror the CLI flags. Arm
//! numbers in configs and output files are 1-based in cost order; the
//! library converts them at this boundary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    build_dataset_instance, load_dataset_summary, load_instance, toy_instance, BanditInstance, RewardKind,
    SubsidySetting,
};
use crate::policy::PolicyId;
use crate::sim::{run_batch, CheckpointSchedule, RunResult, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUT_ENV: &str = "CS_BANDITS_OUT";
pub const RESULTS_HEADER: [&str; 10] = [
    "policy",
    "instance",
    "setting",
    "alpha",
    "ell",
    "horizon",
    "seed",
    "cost_regret",
    "quality_regret",
    "terminal_arm",
];
pub const TRACE_HEADER: [&str; 5] = ["policy", "seed", "t", "cost_regret", "quality_regret"];
pub const SWEEP_HEADER: [&str; 6] = [
    "axis_value",
    "policy",
    "seed",
    "cost_regret",
    "quality_regret",
    "summed_regret",
];

fn default_setting() -> String {
    "subsidized".into()
}
fn default_kappa() -> u32 {
    2
}
fn default_horizon() -> u64 {
    200_000
}
fn default_runs() -> usize {
    25
}
fn default_checkpoints() -> String {
    "log:50".into()
}
fn default_reward() -> String {
    "bernoulli".into()
}

/// Everything needed to reproduce a run or sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Instance CSV path, `toy:<mu1>`, or `dataset:<summary csv>`.
    pub instance: String,
    /// Seed for dataset cost draws.
    #[serde(default)]
    pub cost_seed: u64,
    /// `fixed`, `known-ell` or `subsidized`.
    #[serde(default = "default_setting")]
    pub setting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    /// Reference arm, 1-based in cost order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: u32,
    /// Empty means the default set for the setting.
    #[serde(default)]
    pub policies: Vec<PolicyId>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// `log:<n>`, `every:<n>` or a comma list of timesteps.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: String,
    /// `bernoulli`, `gaussian` or `gaussian:<sigma>`.
    #[serde(default = "default_reward")]
    pub reward: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    /// Sweep axis: `alpha`, `ell` or `mu1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(instance: impl Into<String>) -> Self {
        ExperimentConfig {
            instance: instance.into(),
            cost_seed: 0,
            setting: default_setting(),
            mu0: None,
            ell: None,
            alpha: None,
            kappa: default_kappa(),
            policies: Vec::new(),
            horizon: default_horizon(),
            runs: default_runs(),
            seed: 0,
            checkpoints: default_checkpoints(),
            reward: default_reward(),
            out: None,
            jobs: None,
            axis: None,
            values: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Validation("runs must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be at least 1".into()));
        }
        CheckpointSchedule::parse(&self.checkpoints)?;
        RewardKind::parse(&self.reward)?;
        Ok(())
    }

    /// Builds the instance named by `instance`, with the configured rewards.
    pub fn load_instance(&self) -> Result<BanditInstance> {
        let reward = RewardKind::parse(&self.reward)?;
        let instance = if let Some(mu1) = self.instance.strip_prefix("toy:") {
            let mu1: f64 = mu1
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad toy parameter in `{}`", self.instance)))?;
            toy_instance(mu1)?
        } else if let Some(path) = self.instance.strip_prefix("dataset:") {
            let path = Path::new(path.trim());
            let summary = load_dataset_summary(path)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            build_dataset_instance(name, &summary, self.cost_seed)?
        } else {
            load_instance(&self.instance)?
        };
        instance.with_reward_kind(reward)
    }

    /// The subsidy setting, with `ell` converted to a 0-based index.
    pub fn subsidy_setting(&self) -> Result<SubsidySetting> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Config(format!("setting `{}` needs --{what}", self.setting)))
        };
        match self.setting.as_str() {
            "fixed" => Ok(SubsidySetting::FixedThreshold {
                mu0: need(self.mu0, "mu0")?,
            }),
            "known-ell" => {
                let ell = self
                    .ell
                    .ok_or_else(|| Error::Config("setting `known-ell` needs --ell".into()))?;
                if ell == 0 {
                    return Err(Error::Validation("ell is 1-based; 0 is not an arm".into()));
                }
                Ok(SubsidySetting::KnownReferenceArm {
                    ell: ell - 1,
                    alpha: need(self.alpha, "alpha")?,
                })
            }
            "subsidized" => Ok(SubsidySetting::SubsidizedBestReward {
                alpha: need(self.alpha, "alpha")?,
            }),
            other => Err(Error::Config(format!(
                "unknown setting `{other}` (expected fixed, known-ell or subsidized)"
            ))),
        }
    }

    /// Configured policies, or the default set for the setting.
    pub fn policy_list(&self) -> Vec<PolicyId> {
        if !self.policies.is_empty() {
            return self.policies.clone();
        }
        match self.setting.as_str() {
            "fixed" => vec![PolicyId::FtUcb],
            "known-ell" => vec![PolicyId::Pe, PolicyId::AsymPe, PolicyId::UcbCsKnownEll],
            _ => vec![PolicyId::PeCs, PolicyId::EtcCs, PolicyId::TsCs, PolicyId::UcbCs],
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        Ok(SimConfig::new(self.horizon)
            .with_checkpoints(CheckpointSchedule::parse(&self.checkpoints)?)
            .with_kappa(self.kappa))
    }

    /// `out`, else `$CS_BANDITS_OUT`, else `./results`.
    pub fn output_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

fn schema_line(kind: &str) -> String {
    format!("# cs-bandits {kind} schema v{SCHEMA_VERSION}\n")
}

fn csv_text<I, R>(kind: &str, header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    let mut text = schema_line(kind);
    text.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    Ok(text)
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per run.
pub fn results_csv(results: &[RunResult]) -> Result<String> {
    csv_text(
        "results",
        &RESULTS_HEADER,
        results.iter().map(|r| {
            vec![
                r.policy.to_string(),
                r.instance.clone(),
                r.setting.kind_name().to_owned(),
                opt_to_string(r.setting.alpha()),
                opt_to_string(r.setting.reference_arm().map(|l| l + 1)),
                r.horizon.to_string(),
                r.seed.to_string(),
                r.cost_regret().to_string(),
                r.quality_regret().to_string(),
                (r.terminal_arm + 1).to_string(),
            ]
        }),
    )
}

/// Long format: one row per run and checkpoint.
pub fn traces_csv(results: &[RunResult]) -> Result<String> {
    csv_text(
        "trace",
        &TRACE_HEADER,
        results.iter().flat_map(|r| {
            r.trace.checkpoints.iter().map(move |c| {
                vec![
                    r.policy.to_string(),
                    r.seed.to_string(),
                    c.t.to_string(),
                    c.cost_regret.to_string(),
                    c.quality_regret.to_string(),
                ]
            })
        }),
    )
}

/// One terminal-regret row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub policy: PolicyId,
    pub seed: u64,
    pub cost_regret: f64,
    pub quality_regret: f64,
}

impl SweepRow {
    pub fn summed_regret(&self) -> f64 {
        self.cost_regret + self.quality_regret
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_text(
        "sweep",
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.axis_value.to_string(),
                r.policy.to_string(),
                r.seed.to_string(),
                r.cost_regret.to_string(),
                r.quality_regret.to_string(),
                r.summed_regret().to_string(),
            ]
        }),
    )
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs every configured policy on one instance and setting.
pub fn run_all(config: &ExperimentConfig, instance: &BanditInstance) -> Result<Vec<RunResult>> {
    config.validate()?;
    let setting = config.subsidy_setting()?;
    let sim = config.sim_config()?;
    let mut results = Vec::new();
    for policy in config.policy_list() {
        results.extend(run_batch(
            policy,
            instance,
            &setting,
            &sim,
            config.seed,
            config.runs,
            config.jobs,
        )?);
    }
    Ok(results)
}

/// Files written by [`run_experiment`] or [`run_sweep`].
#[derive(Clone, Debug, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

/// `run`: all policies, then `results.csv`, `traces.csv` and the
/// `config.toml` echo in `dir`.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path) -> Result<(Vec<RunResult>, Written)> {
    let instance = config.load_instance()?;
    let results = run_all(config, &instance)?;
    ensure_dir(dir)?;
    let mut written = Written::default();
    for (name, text) in [
        ("results.csv", results_csv(&results)?),
        ("traces.csv", traces_csv(&results)?),
        ("config.toml", config.to_toml()?),
    ] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.files.push(path);
    }
    Ok((results, written))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Alpha,
    Ell,
    Mu1,
}

impl SweepAxis {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "alpha" => Ok(SweepAxis::Alpha),
            "ell" => Ok(SweepAxis::Ell),
            "mu1" => Ok(SweepAxis::Mu1),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected alpha, ell or mu1)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Alpha => "alpha",
            SweepAxis::Ell => "ell",
            SweepAxis::Mu1 => "mu1",
        }
    }

    /// `config` with this axis set to `value`.
    pub fn apply(self, config: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut point = config.clone();
        point.axis = None;
        point.values = Vec::new();
        match self {
            SweepAxis::Alpha => point.alpha = Some(value),
            SweepAxis::Ell => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Validation(format!("ell value {value} is not a 1-based arm number")));
                }
                point.ell = Some(value as usize);
            }
            SweepAxis::Mu1 => point.instance = format!("toy:{value}"),
        }
        Ok(point)
    }
}

/// Sweep output: terminal-regret rows in grid order.
pub fn sweep_rows(config: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<(f64, Vec<RunResult>)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one axis value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let point = || -> Result<Vec<RunResult>> {
                let cfg = axis.apply(config, value)?;
                let instance = cfg.load_instance()?;
                run_all(&cfg, &instance)
            };
            point().map(|r| (value, r)).map_err(|e| Error::SweepPoint {
                axis: axis.as_str().into(),
                value,
                source: Box::new(e),
            })
        })
        .collect()
}

fn point_dir_name(axis: SweepAxis, value: f64) -> String {
    let mut name = String::new();
    let _ = write!(name, "{}={}", axis.as_str(), value);
    name
}

/// `sweep`: one `results.csv` per grid point under `<axis>=<value>/`, a
/// combined `sweep.csv` and the config echo.
pub fn run_sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    dir: &Path,
) -> Result<(Vec<SweepRow>, Written)> {
    let points = sweep_rows(config, axis, values)?;
    ensure_dir(dir)?;
    let mut written = Written::default();
    let mut rows = Vec::new();
    for (value, results) in &points {
        let sub = dir.join(point_dir_name(axis, *value));
        ensure_dir(&sub)?;
        let path = sub.join("results.csv");
        write_file(&path, &results_csv(results)?)?;
        written.files.push(path);
        rows.extend(results.iter().map(|r| SweepRow {
            axis_value: *value,
            policy: r.policy,
            seed: r.seed,
            cost_regret: r.cost_regret(),
            quality_regret: r.quality_regret(),
        }));
    }
    let mut echo = config.clone();
    echo.axis = Some(axis.as_str().into());
    echo.values = values.to_vec();
    for (name, text) in [("sweep.csv", sweep_csv(&rows)?), ("config.toml", echo.to_toml()?)] {
        let path = dir.join(name);
        write_file(&path, &text)?;
        written.files.push(path);
    }
    Ok((rows, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new("toy:0.6");
        cfg.alpha = Some(0.2);
        cfg.horizon = 1_000;
        cfg.runs = 2;
        cfg.checkpoints = "log:5".into();
        cfg
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = small();
        cfg.policies = vec![PolicyId::PeCs, PolicyId::UcbCs];
        cfg.axis = Some("alpha".into());
        cfg.values = vec![0.1, 0.2];
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_and_policies_rejected() {
        assert!(ExperimentConfig::from_toml("instance = \"toy:0.6\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("instance = \"toy:0.6\"\npolicies = [\"greedy\"]\n").is_err());
    }

    #[test]
    fn settings_convert_ell() {
        let mut cfg = small();
        cfg.setting = "known-ell".into();
        cfg.ell = Some(3);
        assert_eq!(
            cfg.subsidy_setting().unwrap(),
            SubsidySetting::KnownReferenceArm { ell: 2, alpha: 0.2 }
        );
        cfg.ell = Some(0);
        assert!(cfg.subsidy_setting().is_err());
        cfg.setting = "fixed".into();
        assert!(matches!(cfg.subsidy_setting(), Err(Error::Config(_))));
    }

    #[test]
    fn results_have_schema_line_and_rows() {
        let cfg = small();
        let inst = cfg.load_instance().unwrap();
        let results = run_all(&cfg, &inst).unwrap();
        assert_eq!(results.len(), 4 * 2);
        let text = results_csv(&results).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# cs-bandits results schema v1"));
        assert_eq!(lines.next(), Some(RESULTS_HEADER.join(",").as_str()));
        assert_eq!(lines.count(), 8);
    }

    #[test]
    fn sweep_row_count() {
        let mut cfg = small();
        cfg.policies = vec![PolicyId::PeCs, PolicyId::EtcCs];
        let dir = tempfile::tempdir().unwrap();
        let (rows, written) = run_sweep(&cfg, SweepAxis::Mu1, &[0.6, 0.7, 0.93], dir.path()).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 2);
        assert!(written.files.iter().all(|f| f.exists()));
        assert!(dir.path().join("mu1=0.7").join("results.csv").exists());
    }

    #[test]
    fn sweep_errors_name_the_point() {
        let cfg = small();
        let err = sweep_rows(&cfg, SweepAxis::Mu1, &[0.6, 1.5]).unwrap_err();
        match err {
            Error::SweepPoint { axis, value, .. } => assert_eq!((axis.as_str(), value), ("mu1", 1.5)),
            other => panic!("unexpected {other}"),
        }
    }
}
