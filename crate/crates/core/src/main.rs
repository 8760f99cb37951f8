use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use teachrisk::experiments::{self, Command, ExperimentConfig, Scenario};
use teachrisk::Error;

#[derive(Parser)]
#[command(name = "teachrisk", version, about = "Teaching-risk experiments on gridworld apprenticeship learners")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learner relative performance against teaching risk for random worldviews.
    SweepRisk(Common),
    /// TRGreedy, Random and PerfGreedy from identical starting points.
    Compare(Common),
    /// Which features get taught first and second.
    Histogram(Common),
    /// Check both bounds, the basic estimate, Penrose identities and the witness on random instances.
    VerifyBounds(Common),
    /// A single teaching session with a printed round table.
    Teach(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; its keys override the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin scenario name (fig1-chain, fig4-obstacles, random-grid).
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Discount factor; repeat for several.
    #[arg(long)]
    gamma: Vec<f64>,
    #[arg(long)]
    budget: Option<usize>,
    /// Strategy name; repeat for several.
    #[arg(long)]
    strategy: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long, env = "TEACHRISK_OUT_DIR")]
    out: Option<PathBuf>,
    /// Write 0 for elapsed times so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

impl Common {
    fn config(&self, command: Command) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(command, self.config.as_deref())?;
        if let Some(name) = &self.scenario {
            cfg.scenario = Scenario::builtin(name);
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.gamma.is_empty() {
            cfg.gammas = self.gamma.clone();
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if !self.strategy.is_empty() {
            cfg.strategies = self.strategy.clone();
        }
        if let Some(t) = self.threshold {
            cfg.threshold = t;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.out.is_some() {
            cfg.output = self.out.clone();
        }
        if self.no_timing {
            cfg.record_timing = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(command: Command, common: &Common) -> Result<usize, Error> {
    let cfg = common.config(command)?;
    let outcome = experiments::run(command, &cfg)?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    for table in &outcome.tables {
        let path = dir.join(table.file_name());
        let file = fs::File::create(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        table.write(file)?;
        eprintln!("wrote {}", path.display());
    }
    print!("{}", outcome.summary);
    Ok(outcome.violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::SweepRisk(c) => (Command::SweepRisk, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::Histogram(c) => (Command::Histogram, c),
        Cmd::VerifyBounds(c) => (Command::VerifyBounds, c),
        Cmd::Teach(c) => (Command::Teach, c),
    };
    match execute(command, common) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(violations) => {
            eprintln!("{violations} property violations");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
