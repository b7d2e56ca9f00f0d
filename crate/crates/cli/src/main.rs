use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use causet_core::experiment::{self, ExperimentConfig, ExperimentError, OutputFormat, COMMANDS};
use clap::{Parser, Subcommand, ValueEnum};

/// Random causal sets: sprinklings, sequential growth and order invariance.
#[derive(Parser)]
#[command(name = "causet", version)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run a named experiment, e.g. `causet run sprinkle-height d=2 n=10000 replicas=50`.
    Run {
        command: String,
        /// Parameters as key=value.
        params: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Rerun a saved JSON record and check that it reproduces exactly.
    Replay { record: PathBuf },
    /// List experiments and their parameter defaults.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn fail(e: &ExperimentError) -> ExitCode {
    if matches!(e, ExperimentError::Io(io) if io.kind() == io::ErrorKind::BrokenPipe) {
        return ExitCode::SUCCESS;
    }
    let body = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{body}");
    ExitCode::from(e.exit_code() as u8)
}

fn sink(output: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    causet_core::rng::configure_threads_from_env();
    match cli.action {
        Action::List => {
            for c in COMMANDS {
                let params: Vec<String> = c.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<18} {}\n{:<18} {}", c.name, c.summary, "", params.join(" "));
            }
            ExitCode::SUCCESS
        }
        Action::Run {
            command,
            params,
            seed,
            output,
            format,
        } => {
            let result = ExperimentConfig::parse_params(&command, seed, &params)
                .and_then(|cfg| experiment::run(&cfg))
                .and_then(|rec| {
                    let format = match format {
                        Format::Json => OutputFormat::Json,
                        Format::Csv => OutputFormat::Csv,
                    };
                    let mut out = sink(&output)?;
                    rec.write(format, &mut out)?;
                    out.flush()?;
                    Ok(())
                });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Action::Replay { record } => {
            let result = std::fs::read_to_string(&record)
                .map_err(ExperimentError::from)
                .and_then(|text| experiment::replay(&text));
            match result {
                Ok(outcome) => {
                    for w in &outcome.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!(
                        "{}",
                        serde_json::json!({
                            "status": "match",
                            "command": outcome.record.command,
                            "seed": outcome.record.seed,
                            "statistics": outcome.record.statistics.len(),
                        })
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
