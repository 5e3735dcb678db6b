use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resmin::cli::{self, ConfigOverrides};
use resmin::problems::BENCHMARKS;

#[derive(Parser)]
#[command(
    name = "resmin",
    version,
    about = "Adaptive residual-minimization FEM studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an adaptive convergence study and write CSV/SVG/JSON artifacts.
    Run(RunArgs),
    /// List the available benchmarks.
    List,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Plain-text `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<String>,
    /// Comma-separated polynomial degrees.
    #[arg(long, value_delimiter = ',')]
    degree: Vec<usize>,
    #[arg(long)]
    levels: Option<usize>,
    /// Dörfler marking fraction.
    #[arg(long)]
    eta_ref: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    newton_max_iter: Option<usize>,
    #[arg(long)]
    plots: bool,
    #[arg(long)]
    dg_reference: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Cli::parse().command {
        Command::List => {
            for b in BENCHMARKS {
                println!("{b}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run(a) => a,
    };
    let flags = ConfigOverrides {
        benchmark: args.benchmark,
        degrees: (!args.degree.is_empty()).then_some(args.degree),
        levels: args.levels,
        eta_ref: args.eta_ref,
        newton_tolerance: args.newton_tol,
        newton_max_iterations: args.newton_max_iter,
        out_dir: args.out,
        plots: args.plots.then_some(true),
        dg_reference: args.dg_reference.then_some(true),
    };
    let result = cli::parse_config(args.config.as_deref(), flags).and_then(|cfg| {
        let runs = cli::run(&cfg)?;
        for r in &runs {
            let last = r.records.last().expect("at least one level");
            println!(
                "{} p={}: {} levels, {} dofs, estimate {:.3e}, {:.1}s",
                cfg.benchmark,
                r.degree,
                r.records.len(),
                last.dofs,
                last.estimate,
                r.seconds
            );
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("resmin: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
