use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectral_recovery::experiments::{
    run_norm, run_study, spot_check, ExperimentConfig, MeasureSpec, Study, ORACLE_ROWS,
};
use spectral_recovery::measures::Exponent;
use spectral_recovery::{Error, Result};

#[derive(Parser)]
#[command(
    version,
    about = "Recover measures on the torus from noisy Fourier data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noiseless recovery rate.
    Rate(Common),
    /// Rate against the smoothness of a lacunary density.
    Converse(Common),
    /// Full and high-pass errors under noisy measurement.
    Noise(Common),
    /// High-pass errors only.
    Highpass(Common),
    /// Width constant of kernel combinations on a lattice.
    Width(Common),
    /// Shrinking dipoles.
    Dipole(Common),
    /// Kernel norm of a single measure.
    Norm {
        /// Measure literal: a generator such as `bump`, or JSON like
        /// `{"atoms": [[0.0, 1.0]]}`.
        measure: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Norm exponent, a number >= 1 or `inf`.
    #[arg(long)]
    p: Option<Exponent>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    /// Accept kernels with beta <= q, bounding the tail empirically.
    #[arg(long)]
    allow_slow_decay: bool,
}

impl Common {
    fn resolve(&self, study: Study) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let config = ExperimentConfig::from_json(&text)?;
                if config.study != study {
                    return Err(Error::Config(format!(
                        "configuration is for the {} study, not {}",
                        config.study.name(),
                        study.name()
                    )));
                }
                config
            }
            None => ExperimentConfig::defaults(study),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(grid) = self.grid {
            config.system.grid_size = grid;
        }
        if let Some(beta) = self.beta {
            config.kernel.beta = beta;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(n) = self.n_min {
            config.n_range[0] = n;
        }
        if let Some(n) = self.n_max {
            config.n_range[1] = n;
        }
        if self.allow_slow_decay {
            config.kernel.allow_slow_decay = true;
        }
        if let Some(out) = &self.out {
            config.output_path = Some(out.display().to_string());
        }
        Ok(config)
    }
}

fn emit(text: &str, path: Option<&str>) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<bool> {
    let (study, common) = match command {
        Command::Rate(c) => (Study::Rate, c),
        Command::Converse(c) => (Study::Converse, c),
        Command::Noise(c) => (Study::Noise, c),
        Command::Highpass(c) => (Study::Highpass, c),
        Command::Width(c) => (Study::WidthConstant, c),
        Command::Dipole(c) => (Study::Dipole, c),
        Command::Norm { measure, common } => {
            let mut config = common.resolve(Study::Rate)?;
            if let Some(text) = measure {
                config.measure_spec = MeasureSpec::parse(&text)?;
            }
            config.validate()?;
            let report = run_norm(&config)?;
            emit(&report.to_csv(), config.output_path.as_deref())?;
            return Ok(true);
        }
    };
    let config = common.resolve(study)?;
    let report = run_study(&config)?;
    let check = spot_check(&config, &report, ORACLE_ROWS)?;
    emit(&report.to_csv(Some(&check)), config.output_path.as_deref())?;
    Ok(report.summary().pass && check.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
