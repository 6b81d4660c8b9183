use std::process::ExitCode;

use clap::Parser;
use simcim::SolverRegistry;
use simcim_cli::args::Args;
use simcim_cli::{dispatch, CliError, Outcome};

fn main() -> ExitCode {
    let args = Args::parse();
    let settings = match args.to_settings() {
        Ok(s) => s,
        Err(message) => return fail(CliError::Config(message)),
    };
    match dispatch(&settings, &SolverRegistry::builtin()) {
        Ok(Outcome::Single(summary)) => {
            let s = &summary.stats;
            println!(
                "{} on {} (n = {}): {} runs, best cut {} (run {}), mean {:.3}, std {:.3}, {:.1} ms",
                summary.solver,
                summary.problem.name,
                summary.problem.n,
                summary.runs,
                s.max,
                summary.best.run_index,
                s.mean,
                s.std,
                summary.timing.total_wall_ms
            );
            ExitCode::SUCCESS
        }
        Ok(Outcome::Suite(report)) => {
            for a in &report.aggregates {
                println!(
                    "{}: {} problems, mean of means {}, mean of maxes {}",
                    a.solver,
                    a.problems,
                    a.mean_of_means.map_or("-".into(), |v| format!("{v:.3}")),
                    a.mean_of_maxes.map_or("-".into(), |v| format!("{v:.3}"))
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("simcim: {e}");
    e.exit_code()
}
