use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mcmc_sigtest::experiments::{self, Experiment, ExperimentConfig, PinftyChain, VERSION};
use mcmc_sigtest::par::Execution;
use mcmc_sigtest::pvalue::Alpha;
use mcmc_sigtest::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;

/// Exchangeable MCMC significance test experiments. Output is CSV.
#[derive(Parser)]
#[command(name = "mcmc-sigtest", version = VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rejection rates by sampler on the bimodal target.
    BimodalTable(Flags),
    /// Parallel-method power on AR(1) against a mean shift.
    PowerCurve(Flags),
    /// |p_mc - p_A| versus M at a fixed observed state.
    Consistency(Flags),
    /// Binary matrix goodness of fit given margins.
    MatrixGof(Flags),
    /// Conditional permutation test demo.
    CptDemo(Flags),
    /// Sequential runs with the sqrt(2p) correction.
    SqrtEps(Flags),
    /// Limiting parallel p-value atoms and a simulation.
    Pinfty(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChainArg {
    TwoState,
    Bimodal,
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Draws per test; a comma list for `consistency`.
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Kernel steps per draw; a comma list for `power-curve`.
    #[arg(long = "L", value_delimiter = ',')]
    step: Option<Vec<usize>>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma list of levels, decimal or `a/b`.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Observed label for `consistency` and `pinfty`.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<i64>,
    /// Alternative effect size for `matrix-gof` and `cpt-demo`.
    #[arg(long)]
    effect: Option<f64>,
    /// Swap steps drawing each null matrix.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, value_enum)]
    chain: Option<ChainArg>,
    /// Run replications on one thread.
    #[arg(long)]
    sequential: bool,
    /// Exit with status 3 if any threshold is missed.
    #[arg(long)]
    check: bool,
}

impl Flags {
    fn config(&self, experiment: Experiment) -> Result<ExperimentConfig, Error> {
        let mut c = ExperimentConfig::new(experiment);
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.reps {
            c.reps = v;
        }
        if let Some(v) = &self.m {
            c.m = v.clone();
        }
        if let Some(v) = &self.step {
            c.step = v.clone();
        }
        if let Some(v) = &self.alpha {
            c.alphas = v.iter().map(|s| s.parse::<Alpha>()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &self.rho {
            c.rho = v.clone();
        }
        if let Some(v) = self.mu {
            c.mu = v;
        }
        if let Some(v) = self.rows {
            c.rows = v;
        }
        if let Some(v) = self.cols {
            c.cols = v;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.x0 {
            c.x0 = v;
        }
        if let Some(v) = self.effect {
            c.effect = v;
        }
        if let Some(v) = self.warmup {
            c.warmup = v;
        }
        if let Some(v) = self.chain {
            c.chain = match v {
                ChainArg::TwoState => PinftyChain::TwoState,
                ChainArg::Bimodal => PinftyChain::Bimodal,
            };
        }
        if self.sequential {
            c.execution = Execution::Sequential;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::BimodalTable(f) => (Experiment::BimodalTable, f),
        Command::PowerCurve(f) => (Experiment::PowerCurve, f),
        Command::Consistency(f) => (Experiment::Consistency, f),
        Command::MatrixGof(f) => (Experiment::MatrixGof, f),
        Command::CptDemo(f) => (Experiment::CptDemo, f),
        Command::SqrtEps(f) => (Experiment::SqrtEpsilon, f),
        Command::Pinfty(f) => (Experiment::PInfinity, f),
    };
    let config = match flags.config(experiment) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let artifact = match experiments::run(&config) {
        Ok(a) => a,
        Err(e @ Error::Argument(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let written = match &flags.out {
        Some(path) => File::create(path)
            .map_err(Error::from)
            .and_then(|f| experiments::write_csv(artifact.as_ref(), &config, BufWriter::new(f))),
        None => experiments::write_csv(artifact.as_ref(), &config, io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    if flags.check {
        let checks = artifact.checks();
        let mut err = io::stderr().lock();
        for c in &checks {
            let _ = writeln!(err, "{c}");
        }
        if checks.iter().any(|c| !c.passed) {
            return ExitCode::from(EXIT_THRESHOLD);
        }
    }
    ExitCode::SUCCESS
}
