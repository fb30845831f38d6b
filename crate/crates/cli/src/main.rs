use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use liesphere_cli::{load_config, run, Pipeline};

/// Run a liesphere pipeline from a JSON configuration.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
/// or configuration errors, 3 when outputs cannot be written.
#[derive(Parser)]
#[command(name = "liesphere", version)]
struct Args {
    pipeline: Pipeline,
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load_config(&args.config, args.pipeline) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = match run(&cfg, &args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let report = &out.report;
    for c in &report.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        if args.verbose || !c.pass {
            match (&c.max_residual, &c.error) {
                (_, Some(e)) => eprintln!("{status} {:<14} error: {e}", c.name),
                (Some(r), None) => eprintln!("{status} {:<14} {r:.3e} (tol {:.1e})", c.name, c.tolerance),
                (None, None) => eprintln!("{status} {:<14}", c.name),
            }
        }
    }
    if args.verbose {
        for a in &report.artifacts {
            eprintln!("wrote {} {}", a.kind, args.out.join(&a.path).display());
        }
        eprintln!("total {:.2}s", out.timings.total);
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    println!("{} {}: {passed}/{} checks passed", report.pipeline, report.label, report.checks.len());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
