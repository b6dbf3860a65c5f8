use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seedstab::analysis::SizeTransform;
use seedstab::cli::{cmd_correlate, cmd_eval, cmd_heatmap, cmd_validate, CliFailure, CmdOutput};
use seedstab::report::ReportFormat;

/// Seed-sensitivity analysis for model predictions.
#[derive(Parser)]
#[command(name = "seedstab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one manifest: per-seed metric, VAR, pairwise CON/CCON.
    Eval {
        /// Evaluation manifest (JSON).
        #[arg(long)]
        manifest: PathBuf,
        /// Where to write the rendered report; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format: md, csv or json.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Correlate training size with VAR/CON/CCON across task reports.
    Correlate {
        /// Report files (JSON, one or an array per file).
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// JSON map from task name to training-set size.
        #[arg(long)]
        sizes: PathBuf,
        /// Size transform before correlating: raw or log10.
        #[arg(long, default_value = "log10")]
        transform: String,
        /// Where to write the per-task CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a per-task min-max normalized matrix of per-seed values.
    Heatmap {
        /// Report files sharing one seed set.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Output CSV matrix path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the relational invariants of a report file.
    Validate {
        /// Report file (JSON, one report or an array).
        report: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<CmdOutput, CliFailure> {
    match command {
        Command::Eval { manifest, out, format } => {
            let format: ReportFormat = format
                .parse()
                .map_err(|e: String| CliFailure { code: "SchemaError", message: e })?;
            cmd_eval(&manifest, out.as_deref(), format)
        }
        Command::Correlate { reports, sizes, transform, out } => {
            let transform: SizeTransform = transform
                .parse()
                .map_err(|e: String| CliFailure { code: "SchemaError", message: e })?;
            let paths: Vec<&std::path::Path> = reports.iter().map(PathBuf::as_path).collect();
            cmd_correlate(&paths, &sizes, transform, out.as_deref())
        }
        Command::Heatmap { reports, out } => {
            let paths: Vec<&std::path::Path> = reports.iter().map(PathBuf::as_path).collect();
            cmd_heatmap(&paths, &out)
        }
        Command::Validate { report } => cmd_validate(&report),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(output) => {
            print!("{}", output.stdout);
            ExitCode::from(output.exit_code)
        }
        Err(failure) => {
            eprintln!("error: {}: {}", failure.code, failure.message);
            ExitCode::from(1)
        }
    }
}
