use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gsoliton::contact::DConvention;
use gsoliton::manifest::{bundled_source, BUNDLED};
use gsoliton::report::{run_source, Command, Format, RunOptions};

const GRAMMAR: &str = "\
Expressions in manifests use + - * / ^, parentheses, the functions
exp ln sin cos tan cot sqrt and the constants pi and e. `^` is
right-associative and binds tighter than unary minus, so -x^2 is -(x^2)
and 2^3^2 is 2^9.

Exit status: 0 all checks pass, 1 a check failed, 2 the manifest is
invalid, 3 an expression left its domain at a sample point.";

#[derive(Parser)]
#[command(name = "gsoliton", version, about = "Verify generalised Ricci solitons on coordinate charts", after_help = GRAMMAR)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Soliton equation residual (fits "fit" constants first)
    CheckSoliton(RunArgs),
    /// Almost contact metric axioms and the Sasakian ladder
    CheckStructure(RunArgs),
    /// The zeta condition and the identities behind it
    CheckTheorem(RunArgs),
    /// Least-squares fit of c1, c2, lambda
    Fit(RunArgs),
    /// Every suite the manifest has data for
    All(RunArgs),
    /// Print a bundled manifest
    Example {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUNDLED))]
        name: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Manifest file
    #[arg(long, conflicts_with = "example", required_unless_present = "example")]
    manifest: Option<PathBuf>,
    /// Use a bundled manifest instead of a file
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(BUNDLED))]
    example: Option<String>,
    /// Number of sample points
    #[arg(long)]
    points: Option<usize>,
    /// Sampling seed
    #[arg(long)]
    seed: Option<u64>,
    /// Relative residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value = "table", value_parser = ["json", "csv", "table"])]
    format: String,
    /// Factor convention of the exterior derivative
    #[arg(long, default_value = "half", value_parser = ["half", "plain"])]
    d_convention: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::CheckSoliton(a) => (Command::CheckSoliton, a),
        Cmd::CheckStructure(a) => (Command::CheckStructure, a),
        Cmd::CheckTheorem(a) => (Command::CheckTheorem, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::All(a) => (Command::All, a),
        Cmd::Example { name } => {
            print!("{}", bundled_source(&name).expect("validated by clap"));
            return ExitCode::SUCCESS;
        }
    };
    let source = match (&args.manifest, &args.example) {
        (Some(path), _) => match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        (None, Some(name)) => bundled_source(name).expect("validated by clap").to_string(),
        (None, None) => unreachable!("clap requires one of --manifest and --example"),
    };
    let format: Format = args.format.parse().expect("validated by clap");
    let opts = RunOptions {
        points: args.points,
        seed: args.seed,
        tolerance: args.tol,
        d_convention: args
            .d_convention
            .parse::<DConvention>()
            .expect("validated by clap"),
    };
    match run_source(&source, command, opts) {
        Ok(report) => {
            print!("{}", report.render(format));
            if format == Format::Csv {
                for d in &report.diagnostics {
                    eprintln!("note: {d}");
                }
            }
            ExitCode::from(report.outcome().exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
