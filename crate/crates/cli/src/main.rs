use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use shrinkdim_cli::{run, CliError, Command, Overrides, Product, RunSettings};

/// Shrinking-target dimension toolkit driven by a TOML document.
#[derive(Parser, Debug)]
#[command(name = "shrinkdim", version)]
struct Args {
    /// Subcommand; falls back to `run.command` in the document.
    #[arg(value_enum)]
    command: Option<Command>,
    /// Configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output file; falls back to `run.out`, then standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable the thread pool. Results are identical either way.
    #[arg(long)]
    seq: bool,
    /// Work budget in evaluated words; overrides `run.budget`.
    #[arg(long)]
    budget: Option<u64>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let settings = RunSettings::from_document(&text, &args.config)?;
    let command = match (args.command, settings.command.as_deref()) {
        (Some(c), _) => c,
        (None, Some(name)) => Command::from_str(name, false).map_err(|_| {
            CliError::Config(format!("run.command = \"{name}\" is not a subcommand"))
        })?,
        (None, None) => {
            return Err(CliError::Config(
                "no subcommand given and no run.command in the document".into(),
            ))
        }
    };
    let out = args.out.clone().or_else(|| {
        let base = args.config.parent().unwrap_or(Path::new("."));
        settings.out.map(|p| base.join(p))
    });
    let over = Overrides {
        sequential: args.seq,
        budget: args.budget,
    };
    let product = run(command, &text, &args.config, over)?;
    let mut sink: Box<dyn Write> = match &out {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match product {
        Product::Csv(table) => table.write(&mut sink, &text)?,
        Product::Document(doc) => sink.write_all(doc.as_bytes())?,
    }
    sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shrinkdim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
