use clap::{Parser, Subcommand, ValueEnum};
use sheafmod::Field;
use sheafmod_cli::checks::{run_checks, run_fuzz};
use sheafmod_cli::explain::{explain, known_tags};
use sheafmod_cli::parse::parse_instance;
use sheafmod_cli::report::{Report, Tag};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sheafmod", about = "Exact checker for module presheaves, pairings, and their sheafifications on finite spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks requested by an instance document
    Check {
        /// Path to the instance document
        file: String,
        /// Seed for the randomized sub-checks
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the document's field: `q` or `fp:P` with P prime
        #[arg(long)]
        field: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        /// Write the report to a file instead of stdout
        #[arg(long)]
        out: Option<String>,
    },
    /// Run the whole battery on seeded random instances
    Fuzz {
        /// Number of points in each random space
        #[arg(long, default_value_t = 4)]
        points: usize,
        /// Upper bound on the number of opens per space
        #[arg(long, default_value_t = 16)]
        opens: usize,
        /// Number of random instances
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the statement verified under a report tag
    Explain {
        /// One of the report tags, e.g. Thm1.1 or Eq2
        tag: String,
    },
}

fn parse_field(s: &str) -> Result<Field, String> {
    if s == "q" {
        return Ok(Field::Rational);
    }
    if let Some(p) = s.strip_prefix("fp:") {
        let p: u64 = p
            .parse()
            .map_err(|_| format!("`{p}` is not a number"))?;
        Field::validate_prime(p).map_err(|e| e.to_string())?;
        return Ok(Field::Prime(p));
    }
    Err(format!("unknown field `{s}`; use `q` or `fp:P`"))
}

fn emit(report: &Report, format: Format, out: Option<&str>) -> Result<(), String> {
    let text = match format {
        Format::Human => report.human(),
        Format::Structured => report.structured(),
    };
    match out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {path}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<bool, String> {
    match Cli::parse().command {
        Command::Check {
            file,
            seed,
            field,
            format,
            out,
        } => {
            let text =
                std::fs::read_to_string(&file).map_err(|e| format!("cannot read {file}: {e}"))?;
            let doc = parse_instance(&text).map_err(|e| e.to_string())?;
            let field = field.as_deref().map(parse_field).transpose()?;
            let report = run_checks(&doc, seed, field);
            emit(&report, format, out.as_deref())?;
            Ok(report.all_pass())
        }
        Command::Fuzz {
            points,
            opens,
            trials,
            seed,
            format,
            out,
        } => {
            if points == 0 || points > 16 {
                return Err("--points must be between 1 and 16".into());
            }
            let report = run_fuzz(points, opens, trials, seed);
            emit(&report, format, out.as_deref())?;
            Ok(report.all_pass())
        }
        Command::Explain { tag } => match Tag::from_label(&tag) {
            Some(t) => {
                println!("{}", explain(t));
                Ok(true)
            }
            None => Err(format!("unknown tag `{tag}`; known tags: {}", known_tags())),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
