//! Command-line driver: argument parsing, file I/O and exit-code mapping.
//!
//! Exit codes: 0 on success (feasible synthesis), 2 on infeasible or failed
//! synthesis, 1 on usage or parse errors. `PLATOON_HINF_THREADS` sets the
//! worker-thread count for multi-start stages.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use platoon_hinf_cli::commands::{
    cmd_pade_error, cmd_simulate, cmd_sweep, cmd_synth, cmd_verify, CmdError, OutputFormat,
    EXIT_USAGE,
};
use platoon_hinf_cli::docs::{
    parse_axis_spec, parse_gains_doc, parse_gains_inline, parse_run_config, parse_scenario,
    RunConfig,
};

#[derive(Parser)]
#[command(
    name = "platoon-hinf",
    version,
    about = "Banded peak-gain controller synthesis for vehicle platoons under communication delay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the two-stage synthesis and write the result document.
    Synth {
        /// Flat key-value JSON configuration (defaults when omitted).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output path for the result JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate stability margins and peak norms for a gain vector.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Inline gains "k1,k2,k3,k4".
        #[arg(long, allow_hyphen_values = true)]
        gains: Option<String>,
        /// JSON gain file (`[k1,k2,k3,k4]` or `{"k1":..,...}`).
        #[arg(long)]
        gains_file: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the branch objective over a parameter grid.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Axis specification "index:min:max:count", repeatable up to 3.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Grid center "k1,k2,k3,k4" in chart coordinates; a fresh synthesis
        /// optimum when omitted.
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Emit relative-error series of the delay approximations.
    PadeError {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        gains: Option<String>,
        #[arg(long)]
        gains_file: Option<PathBuf>,
        /// Samples on the comparison band.
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Integrate a platoon scenario and report per-link amplification.
    Simulate {
        /// Scenario JSON document.
        #[arg(long)]
        config: PathBuf,
        /// Output path for the trajectory CSV.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
        /// Output path for the amplification report JSON (stdout when
        /// omitted).
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn read_file(path: &Path) -> Result<String, CmdError> {
    std::fs::read_to_string(path)
        .map_err(|e| CmdError::usage(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, CmdError> {
    match path {
        Some(p) => Ok(parse_run_config(&read_file(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_gains(
    inline: &Option<String>,
    file: &Option<PathBuf>,
) -> Result<platoon_hinf::model::Gains, CmdError> {
    match (inline, file) {
        (Some(_), Some(_)) => Err(CmdError::usage("--gains and --gains-file are exclusive")),
        (Some(text), None) => Ok(parse_gains_inline(text)?),
        (None, Some(path)) => Ok(parse_gains_doc(&read_file(path)?)?),
        (None, None) => Err(CmdError::usage(
            "gains required: pass --gains or --gains-file",
        )),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CmdError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CmdError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_count() -> Result<usize, CmdError> {
    match std::env::var("PLATOON_HINF_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(|| {
            CmdError::usage(format!(
                "PLATOON_HINF_THREADS={v:?} is not a positive integer"
            ))
        }),
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

fn run(cli: Cli) -> Result<u8, (CmdError, Option<PathBuf>)> {
    let threads = thread_count().map_err(|e| (e, None))?;
    match cli.command {
        Command::Synth { config, seed, out } => {
            let cfg = load_config(&config).map_err(|e| (e, out.clone()))?;
            let (doc, code) = cmd_synth(&cfg, seed, threads).map_err(|e| (e, out.clone()))?;
            emit(&doc, &out).map_err(|e| (e, None))?;
            Ok(code)
        }
        Command::Verify {
            config,
            gains,
            gains_file,
            out,
        } => {
            let cfg = load_config(&config).map_err(|e| (e, out.clone()))?;
            let g = load_gains(&gains, &gains_file).map_err(|e| (e, out.clone()))?;
            let (doc, code) = cmd_verify(&cfg, g, threads).map_err(|e| (e, out.clone()))?;
            emit(&doc, &out).map_err(|e| (e, None))?;
            Ok(code)
        }
        Command::Sweep {
            config,
            axes,
            center,
            seed,
            out,
            format,
        } => {
            let cfg = load_config(&config).map_err(|e| (e, out.clone()))?;
            let mut specs = Vec::new();
            for a in &axes {
                specs.push(parse_axis_spec(a).map_err(|e| (CmdError::from(e), out.clone()))?);
            }
            let center = match &center {
                Some(text) => Some(
                    parse_gains_inline(text)
                        .map_err(|e| (CmdError::from(e), out.clone()))?
                        .as_array(),
                ),
                None => None,
            };
            let (doc, code) = cmd_sweep(&cfg, &specs, center, seed, format.into(), threads)
                .map_err(|e| (e, out.clone()))?;
            emit(&doc, &out).map_err(|e| (e, None))?;
            Ok(code)
        }
        Command::PadeError {
            config,
            gains,
            gains_file,
            points,
            out,
            format,
        } => {
            let cfg = load_config(&config).map_err(|e| (e, out.clone()))?;
            let g = load_gains(&gains, &gains_file).map_err(|e| (e, out.clone()))?;
            let (doc, code) = cmd_pade_error(&cfg, g, points, format.into(), threads)
                .map_err(|e| (e, out.clone()))?;
            emit(&doc, &out).map_err(|e| (e, None))?;
            Ok(code)
        }
        Command::Simulate {
            config,
            out,
            report,
        } => {
            let text = read_file(&config).map_err(|e| (e, None))?;
            let doc = parse_scenario(&text).map_err(|e| (CmdError::from(e), None))?;
            let scenario = doc.to_scenario().map_err(|e| (CmdError::from(e), None))?;
            let (csv, report_doc) = cmd_simulate(&scenario).map_err(|e| (e, None))?;
            emit(&csv, &Some(out)).map_err(|e| (e, None))?;
            emit(&report_doc, &report).map_err(|e| (e, None))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((err, out)) => {
            // failure documents go to the output sink; the message also goes
            // to stderr for interactive use
            let _ = emit(&err.document(), &out);
            eprintln!("error[{}]: {}", err.class, err.message);
            ExitCode::from(err.exit)
        }
    }
}
