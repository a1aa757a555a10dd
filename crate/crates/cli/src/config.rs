use std::path::PathBuf;

use barw_core::{LevelMode, LevelSpec, ModelParams};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{config, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "barw",
    version,
    about = "Mean-field branching-annihilating random walk experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hitting profile ln φ(x) → phi.csv
    Profile(RawArgs),
    /// log10 h(x) in window mode → logh.csv
    Figure1(RawArgs),
    /// Full tilted kernel → kernel.csv
    Figure2(RawArgs),
    /// Conditional expected extinction time → t.csv
    CondTime(RawArgs),
    /// Unconditional expected extinction time over an n sweep → T.csv
    UncondTime(RawArgs),
    /// Conditional occupation time above δn → h_occ.csv
    Occupation(RawArgs),
    /// Monte Carlo estimate of φ(x0) → est.csv
    McHitting(RawArgs),
    /// Monte Carlo conditioned path length from x0 → est.csv
    McCondPath(RawArgs),
    /// Particle-level one-step count vs Bin(n, b(x)) → tv.csv
    Equivalence(RawArgs),
    /// Analytic bound checks → report.txt
    BoundsReport(RawArgs),
}

impl Command {
    pub fn split(self) -> (Experiment, RawArgs) {
        use Command::*;
        match self {
            Profile(a) => (Experiment::Profile, a),
            Figure1(a) => (Experiment::Figure1, a),
            Figure2(a) => (Experiment::Figure2, a),
            CondTime(a) => (Experiment::CondTime, a),
            UncondTime(a) => (Experiment::UncondTime, a),
            Occupation(a) => (Experiment::Occupation, a),
            McHitting(a) => (Experiment::McHitting, a),
            McCondPath(a) => (Experiment::McCondPath, a),
            Equivalence(a) => (Experiment::Equivalence, a),
            BoundsReport(a) => (Experiment::BoundsReport, a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Profile,
    Figure1,
    Figure2,
    CondTime,
    UncondTime,
    Occupation,
    McHitting,
    McCondPath,
    Equivalence,
    BoundsReport,
}

impl Experiment {
    pub fn id(self) -> &'static str {
        match self {
            Experiment::Profile => "profile",
            Experiment::Figure1 => "figure1",
            Experiment::Figure2 => "figure2",
            Experiment::CondTime => "cond-time",
            Experiment::UncondTime => "uncond-time",
            Experiment::Occupation => "occupation",
            Experiment::McHitting => "mc-hitting",
            Experiment::McCondPath => "mc-cond-path",
            Experiment::Equivalence => "equivalence",
            Experiment::BoundsReport => "bounds-report",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Experiment::McHitting | Experiment::McCondPath | Experiment::Equivalence
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Low,
    Window,
    Custom,
}

impl From<ModeArg> for LevelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Low => LevelMode::Low,
            ModeArg::Window => LevelMode::Window,
            ModeArg::Custom => LevelMode::Custom,
        }
    }
}

/// Flags shared by every subcommand, as typed on the command line.
#[derive(Args, Clone, Debug, Default)]
pub struct RawArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub x0: Option<usize>,
    #[arg(long)]
    pub u: Option<usize>,
    /// Level mode; defaults to window, or custom when --u is given.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Graph file, or complete:<n>.
    #[arg(long)]
    pub graph: Option<String>,
    /// Whether complete:<n> lets offspring stay on their own vertex.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub self_loops: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Worker threads for Monte Carlo experiments; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated n values for uncond-time.
    #[arg(long, value_delimiter = ',')]
    pub n_sweep: Vec<usize>,
}

/// A validated experiment request.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub lambda: f64,
    pub n: usize,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub x0: Option<usize>,
    pub u: Option<usize>,
    pub mode: LevelMode,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub graph: Option<String>,
    pub self_loops: bool,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n_sweep: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_args(experiment: Experiment, raw: RawArgs) -> CliResult<Self> {
        let lambda = raw.lambda.ok_or_else(|| config("--lambda is required"))?;
        let n = match (raw.n, experiment) {
            (Some(n), _) => n,
            (None, Experiment::UncondTime) if !raw.n_sweep.is_empty() => raw.n_sweep[0],
            (None, _) => return Err(config("--n is required")),
        };
        let mode = match (raw.mode, raw.u) {
            (Some(m), _) => m.into(),
            (None, Some(_)) => LevelMode::Custom,
            (None, None) => LevelMode::Window,
        };
        if raw.u.is_some() && mode != LevelMode::Custom {
            return Err(config("--u requires --mode custom"));
        }
        if matches!(experiment, Experiment::Figure1 | Experiment::Figure2)
            && mode != LevelMode::Window
        {
            return Err(config(format!(
                "{} always uses window mode",
                experiment.id()
            )));
        }
        if experiment.is_stochastic() {
            if raw.seed.is_none() {
                return Err(config(format!("{} needs --seed", experiment.id())));
            }
            if raw.trials.is_none() {
                return Err(config(format!("{} needs --trials", experiment.id())));
            }
        }
        if experiment == Experiment::Occupation && raw.delta.is_none() {
            return Err(config("occupation needs --delta"));
        }
        if matches!(
            experiment,
            Experiment::McHitting | Experiment::McCondPath | Experiment::Equivalence
        ) && raw.x0.is_none()
        {
            return Err(config(format!("{} needs --x0", experiment.id())));
        }
        if raw.workers == Some(0) {
            return Err(config("--workers must be at least 1"));
        }
        Ok(ExperimentConfig {
            experiment,
            lambda,
            n,
            epsilon: raw.epsilon,
            delta: raw.delta,
            x0: raw.x0,
            u: raw.u,
            mode,
            trials: raw.trials,
            seed: raw.seed,
            graph: raw.graph,
            self_loops: raw.self_loops,
            out_dir: raw.out,
            cache_dir: raw.cache,
            workers: raw.workers,
            n_sweep: if raw.n_sweep.is_empty() {
                vec![n]
            } else {
                raw.n_sweep
            },
        })
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.lambda, self.n)?)
    }

    pub fn level(&self, params: &ModelParams) -> CliResult<LevelSpec> {
        Ok(LevelSpec::resolve(params, self.epsilon, self.mode, self.u)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CliResult<ExperimentConfig> {
        let cli = Cli::try_parse_from(args).expect("clap accepts");
        let (exp, raw) = cli.command.split();
        ExperimentConfig::from_args(exp, raw)
    }

    #[test]
    fn defaults() {
        let c = parse(&["barw", "profile", "--lambda", "2", "--n", "50"]).unwrap();
        assert_eq!(c.mode, LevelMode::Window);
        assert_eq!(c.epsilon, 0.05);
        assert_eq!(c.n_sweep, vec![50]);
        let c = parse(&["barw", "profile", "--lambda", "2", "--n", "50", "--u", "1"]).unwrap();
        assert_eq!(c.mode, LevelMode::Custom);
    }

    #[test]
    fn stochastic_needs_seed() {
        let err = parse(&[
            "barw",
            "mc-hitting",
            "--lambda",
            "2",
            "--n",
            "50",
            "--x0",
            "3",
            "--trials",
            "10",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn inconsistent_level_flags() {
        assert!(parse(&[
            "barw", "profile", "--lambda", "2", "--n", "50", "--u", "4", "--mode", "low"
        ])
        .is_err());
        assert!(
            parse(&["barw", "figure1", "--lambda", "2", "--n", "50", "--mode", "low"]).is_err()
        );
        assert!(parse(&["barw", "profile", "--n", "50"]).is_err());
    }

    #[test]
    fn sweep_supplies_n() {
        let c = parse(&["barw", "uncond-time", "--lambda", "2", "--n-sweep", "20,30"]).unwrap();
        assert_eq!((c.n, c.n_sweep.clone()), (20, vec![20, 30]));
    }
}
