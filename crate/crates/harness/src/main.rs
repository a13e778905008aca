use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unfolded_pgd::formats::write_dataset;
use unfolded_pgd::scenarios::mode_name;
use unfolded_pgd::{ExperimentConfig, HarnessError, RayonExecutor, Result, Runner, Scenario};
use unfolded_pgd_core::train::CsiMode;

#[derive(Parser)]
#[command(name = "unfolded-pgd", version, about = "Unfolded projected-gradient power allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in the config file.
    Run(Common),
    /// Mean min-rate per iteration for the unfolded and fixed-step optimizers.
    IterCurve(Common),
    /// Final min-rate against noise level.
    NoiseSweep(Common),
    /// Clean- versus noise-trained schedules under full and estimated CSI.
    NoisyRobustness(Common),
    /// A schedule trained on one topology applied to others.
    Transfer(Common),
    /// Unfolded and fixed-step optimizers against the grid oracle.
    OracleCompare(Common),
    /// Train step schedules for every configured noise level.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModeArg::Full)]
        mode: ModeArg,
    },
    /// Write the train and test datasets for every configured noise level.
    Dataset(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// No progress output on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Noisy,
    Both,
}

impl ModeArg {
    fn modes(self) -> &'static [CsiMode] {
        match self {
            ModeArg::Full => &[CsiMode::Full],
            ModeArg::Noisy => &[CsiMode::Noisy],
            ModeArg::Both => &[CsiMode::Full, CsiMode::Noisy],
        }
    }
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, RayonExecutor)> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(o) = &self.out {
            config.out_dir = o.clone();
        }
        Ok((config, RayonExecutor::new(self.threads)?))
    }
}

fn run_scenario(common: &Common, scenario: Option<Scenario>) -> Result<()> {
    let (config, exec) = common.load()?;
    let scenario = scenario
        .or(config.scenario)
        .ok_or_else(|| HarnessError::Config("the config names no scenario; use a scenario subcommand".into()))?;
    let mut runner = Runner::new(&config, &exec)?;
    runner.verbose = !common.quiet;
    let (_, manifest) = runner.run(scenario)?;
    for f in &manifest.outputs {
        println!("{}", config.out_dir.join(&f.file).display());
    }
    println!("{}", config.out_dir.join("manifest.json").display());
    Ok(())
}

fn run_train(common: &Common, mode: ModeArg) -> Result<()> {
    let (config, exec) = common.load()?;
    let mut runner = Runner::new(&config, &exec)?;
    runner.verbose = !common.quiet;
    let topology = config.topology()?;
    for &db in &config.noise_db {
        for &m in mode.modes() {
            let artifact = runner.schedule(&topology, db, m, None)?;
            let path = config.out_dir.join(format!("mu_{topology}_{db}db_{}.json", mode_name(m)));
            artifact.write(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn run_dataset(common: &Common) -> Result<()> {
    let (config, exec) = common.load()?;
    let runner = Runner::new(&config, &exec)?;
    let topology = config.topology()?;
    for &db in &config.noise_db {
        let data = runner.datasets(&topology, &runner.noise(&topology, db)?)?;
        for (name, d) in [("train", &data.train), ("test", &data.test)] {
            let path = config.out_dir.join(format!("{name}_{topology}_{db}db.json"));
            write_dataset(&path, d)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run_scenario(c, None),
        Command::IterCurve(c) => run_scenario(c, Some(Scenario::IterCurve)),
        Command::NoiseSweep(c) => run_scenario(c, Some(Scenario::NoiseSweep)),
        Command::NoisyRobustness(c) => run_scenario(c, Some(Scenario::NoisyRobustness)),
        Command::Transfer(c) => run_scenario(c, Some(Scenario::Transfer)),
        Command::OracleCompare(c) => run_scenario(c, Some(Scenario::OracleCompare)),
        Command::Train { common, mode } => run_train(common, *mode),
        Command::Dataset(c) => run_dataset(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
