use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dimtrunc::experiment::{self, ExperimentConfig, OracleCheckSpec};
use dimtrunc::plot::render_svg;
use dimtrunc::{Error, ErrorTable};

/// Dimension truncation experiments for a parametric diffusion problem.
#[derive(Parser)]
#[command(name = "dimtrunc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment configuration; desk-scale defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the lattice shift seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Start from the full-scale setup (m = 32, 2^20 nodes, s' = 2048).
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Predicted rates, constants and truncation bounds.
    Predict {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for prediction.csv.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Estimate truncation errors and write one CSV per decay and quantity.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_name = "DIR", default_value = "results")]
        out: PathBuf,
    },
    /// Least-squares rate of an error table.
    Fit {
        table: PathBuf,
        /// Smallest s used in the fit; upper half of the table by default.
        #[arg(long, value_name = "INT")]
        s_min: Option<usize>,
    },
    /// Log-log SVG of one or more error tables.
    Plot {
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        #[arg(long, value_name = "PATH", default_value = "truncation.svg")]
        out: PathBuf,
    },
    /// Compare lattice estimates with the tensor quadrature oracle.
    OracleCheck {
        /// JSON oracle spec; defaults when omitted.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
    },
}

enum Failure {
    Error(Error),
    Gap,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match (&args.config, args.paper_scale) {
        (Some(path), false) => ExperimentConfig::load(path)?,
        (None, true) => ExperimentConfig::full_scale(),
        (None, false) => ExperimentConfig::default(),
        (Some(_), true) => {
            return Err(Error::Config(
                "--config and --paper-scale are mutually exclusive".into(),
            ))
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Predict { config, out } => {
            let config = load_config(&config)?;
            let report = experiment::predict(&config)?;
            print!("{report}");
            if let Some(dir) = out {
                let path = dir.join("prediction.csv");
                write_file(&path, &report.to_csv())?;
                println!("\nwrote {}", path.display());
            }
        }
        Command::Run { config, out } => {
            let config = load_config(&config)?;
            let results = experiment::run(&config)?;
            let paths = experiment::write_tables(&results, config.transform, &out)?;
            for (r, path) in results.iter().zip(&paths) {
                let fit = experiment::fit_table(&r.table, None);
                match fit {
                    Ok(f) => println!(
                        "{} (slope {:.3}, expected {:.3})",
                        path.display(),
                        f.fit.slope,
                        f.expected_rate.unwrap_or(f64::NAN)
                    ),
                    Err(_) => println!("{}", path.display()),
                }
            }
            write_file(&out.join("config.json"), &config.to_json()?)?;
        }
        Command::Fit { table, s_min } => {
            let table = ErrorTable::read(&table)?;
            print!("{}", experiment::fit_table(&table, s_min)?);
        }
        Command::Plot { tables, out } => {
            let tables = tables
                .iter()
                .map(|p| ErrorTable::read(p))
                .collect::<Result<Vec<_>, _>>()?;
            let svg = render_svg(&tables, "dimension truncation error")?;
            write_file(&out, &svg)?;
            println!("wrote {}", out.display());
        }
        Command::OracleCheck { config, seed } => {
            let mut spec = match config {
                Some(path) => OracleCheckSpec::load(&path)?,
                None => OracleCheckSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let report = experiment::oracle_check(&spec)?;
            print!("{report}");
            if !report.passed() {
                return Err(Failure::Gap);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Gap) => ExitCode::from(4),
        Err(Failure::Error(e)) => {
            let top = e.to_string();
            eprintln!("error: {top}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let msg = s.to_string();
                if !top.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                }
                source = s.source();
            }
            log::debug!("{e:?}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
