use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use emofit_cli::{evaluate, neighbors, retrofit};

#[derive(Parser, Debug)]
#[command(
    name = "emofit",
    version,
    about = "Emotional retrofitting of word embeddings"
)]
struct Cli {
    /// Log progress to stderr (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Retrofit an embedding file against an emotion lexicon.
    Retrofit(retrofit::RetrofitArgs),
    /// Score emotional similarity of one space, or of a space before and after retrofitting.
    Evaluate(evaluate::EvaluateArgs),
    /// Inspect epsilon-ball neighborhoods.
    Neighbors(neighbors::NeighborsArgs),
}

const EXIT_FAILURE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp
            | ErrorKind::DisplayVersion
            | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(EXIT_FAILURE)
                } else {
                    ExitCode::SUCCESS
                };
            }
            _ => {
                eprintln!("{}", one_line(&e.to_string()));
                return ExitCode::from(EXIT_FAILURE);
            }
        },
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Retrofit(args) => retrofit::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Neighbors(args) => neighbors::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{:#}", e)));
            let numerical = e.chain().any(|c| {
                matches!(
                    c.downcast_ref::<emofit::Error>(),
                    Some(emofit::Error::NumericalAbort { .. })
                )
            });
            ExitCode::from(if numerical {
                EXIT_NUMERICAL
            } else {
                EXIT_FAILURE
            })
        }
    }
}

/// Collapses a multi-line message into one line, dropping clap's usage hints.
fn one_line(message: &str) -> String {
    message
        .lines()
        .map(str::trim)
        .filter(|l| {
            !l.is_empty() && !l.starts_with("Usage:") && !l.starts_with("For more information")
        })
        .collect::<Vec<_>>()
        .join(" ")
}
