//! `treeck`: analyze a tree-lattice description and report the K-theoretic
//! invariants of its boundary algebra.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use treeck_core::parse::{SpecSource, TreeModelChoice};
use treeck_core::report::{analyze, emit, exit_code, AnalyzeOptions, EmitFormat};

#[derive(Parser)]
#[command(
    name = "treeck",
    version,
    about = "K-theory of boundary algebras of acylindrical uniform tree lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeModelArg {
    Edge,
    Star,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a .tk file and print a report.
    Analyze {
        /// Input file describing the groups and the action.
        file: PathBuf,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Include the transition matrix with a letter legend.
        #[arg(long)]
        emit_matrix: bool,
        /// Include a Graphviz dump of the radius-R ball around the first
        /// fundamental vertex.
        #[arg(long, value_name = "R")]
        emit_ball: Option<usize>,
        /// Override the segment length constant (must be >= the model's k_min).
        #[arg(long, value_name = "N")]
        k: Option<usize>,
        /// Tree model for free products: edge (2 factors) or star.
        #[arg(long, value_name = "MODEL")]
        tree_model: Option<TreeModelArg>,
        /// Largest m for the orbit-count/word-count cross-check.
        #[arg(long, value_name = "M", default_value_t = 3)]
        max_l1_check: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            file,
            json,
            emit_matrix,
            emit_ball,
            k,
            tree_model,
            max_l1_check,
        } => {
            let bytes = match std::fs::read(&file) {
                Ok(b) => b,
                Err(e) => {
                    eprintln!("treeck: cannot read {}: {e}", file.display());
                    return ExitCode::from(3);
                }
            };
            let source = match SpecSource::from_bytes(file.display().to_string(), bytes) {
                Ok(s) => s,
                Err(d) => {
                    eprintln!("{d}");
                    return ExitCode::from(3);
                }
            };
            let ball_cap = std::env::var("TREECK_BALL_CAP")
                .ok()
                .and_then(|v| v.parse::<usize>().ok());
            let options = AnalyzeOptions {
                k,
                tree_model: tree_model.map(|m| match m {
                    TreeModelArg::Edge => TreeModelChoice::Edge,
                    TreeModelArg::Star => TreeModelChoice::Star,
                }),
                emit_matrix,
                emit_ball,
                max_l1_check,
                ball_cap,
            };
            let report = analyze(&source, &options);
            let format = if json { EmitFormat::Json } else { EmitFormat::Text };
            print!("{}", emit(&report, format));
            let code = exit_code(&report);
            if code != 0 {
                if let Some(err) = &report.error {
                    eprintln!("treeck: {}", err.message);
                }
            }
            ExitCode::from(code as u8)
        }
    }
}
