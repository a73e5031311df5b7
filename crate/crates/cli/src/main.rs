use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cs_bandits::bounds::bound_report;
use cs_bandits::experiment::{run_experiment, run_sweep, ExperimentConfig, SweepAxis, OUT_ENV};
use cs_bandits::instance::{build_dataset_instance, gap_profile, load_dataset_summary, write_instance};
use cs_bandits::{Error, PolicyId};

#[derive(Parser, Debug)]
#[command(name = "cs-bandits", version, about = "Multi-armed bandits with cost subsidy: simulations, sweeps and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every configured policy and write results.csv, traces.csv and config.toml.
    Run(ExperimentArgs),
    /// Repeat `run` over a grid of alpha, ell or mu1 values.
    Sweep {
        #[command(flatten)]
        common: ExperimentArgs,
        /// alpha, ell or mu1
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Print lower and upper regret bounds for an instance as JSON.
    Bounds(ExperimentArgs),
    /// Turn a `genre,mean_rating` summary into an instance CSV with random costs.
    GenInstance {
        /// Dataset summary CSV.
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value_t = 0)]
        cost_seed: u64,
        /// Output instance CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags shared by `run`, `sweep` and `bounds`. Each one overrides the
/// matching key of `--config`.
#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// Flat TOML file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance CSV, `toy:<mu1>` or `dataset:<summary csv>`.
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    cost_seed: Option<u64>,
    /// fixed, known-ell or subsidized
    #[arg(long)]
    setting: Option<String>,
    #[arg(long)]
    mu0: Option<f64>,
    /// Reference arm, 1-based in cost order.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Asymmetric-PE round offset.
    #[arg(long)]
    kappa: Option<u32>,
    /// Comma-separated policy ids.
    #[arg(long, value_delimiter = ',')]
    policies: Vec<PolicyId>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// log:<n>, every:<n> or a comma list of timesteps.
    #[arg(long)]
    checkpoints: Option<String>,
    /// bernoulli, gaussian or gaussian:<sigma>
    #[arg(long)]
    reward: Option<String>,
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(
                self.instance
                    .clone()
                    .ok_or_else(|| Error::Config("--instance is required without --config".into()))?,
            ),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() { cfg.$field = self.$field; }
            )*};
        }
        set!(instance, cost_seed, setting, kappa, horizon, runs, seed, checkpoints, reward);
        set_opt!(mu0, ell, alpha, out, jobs);
        if !self.policies.is_empty() {
            cfg.policies = self.policies;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_written(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let dir = cfg.output_dir();
            let (results, written) = run_experiment(&cfg, &dir)?;
            eprintln!("{} runs finished", results.len());
            print_written(&written.files);
        }
        Command::Sweep { common, axis, values } => {
            let cfg = common.resolve()?;
            let axis = axis
                .or_else(|| cfg.axis.clone())
                .ok_or_else(|| Error::Config("sweep needs --axis".into()))?;
            let values = if values.is_empty() { cfg.values.clone() } else { values };
            let dir = cfg.output_dir();
            let (rows, written) = run_sweep(&cfg, SweepAxis::parse(&axis)?, &values, &dir)?;
            eprintln!("{} sweep rows", rows.len());
            print_written(&written.files);
        }
        Command::Bounds(args) => {
            let cfg = args.resolve()?;
            let instance = cfg.load_instance()?;
            let profile = gap_profile(&instance, &cfg.subsidy_setting()?)?;
            let report = bound_report(instance.name(), &profile, cfg.horizon)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::GenInstance { summary, cost_seed, out } => {
            let rows = load_dataset_summary(&summary)?;
            let name = stem(&summary);
            let instance = build_dataset_instance(name, &rows, cost_seed)?;
            write_instance(&instance, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // every message already embeds its underlying cause
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
