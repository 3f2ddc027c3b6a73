use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wavefront_cli::{deserialize_scenario, run_scenario, RunOptions};

/// Propagates wavefronts through the medium described by a scenario file.
#[derive(Debug, Parser)]
#[command(name = "wavefront", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving trajectories.csv, fronts.csv and diagnostics.json.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// Launch points per epoch.
    #[arg(long)]
    points: Option<usize>,
    /// Integrator step.
    #[arg(long)]
    step: Option<f64>,
    /// Only run the strong convexity diagnostics.
    #[arg(long)]
    check_convexity: bool,
    /// Compare a few final-epoch rays against the Fermat oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: read {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut scenario = match deserialize_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: scenario {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(epochs) = args.epochs {
        scenario.time.epochs = epochs;
    }
    if let Some(points) = args.points {
        scenario.discretization.points = points;
    }
    if let Some(step) = args.step {
        scenario.discretization.step = step;
    }
    if let Err(e) = scenario.validate() {
        eprintln!("error: scenario {e}");
        return ExitCode::from(2);
    }

    let opts = RunOptions {
        check_convexity_only: args.check_convexity,
        oracle: args.oracle,
    };
    match run_scenario(&scenario, &args.out_dir, opts) {
        Ok(summary) => {
            if !args.quiet {
                let d = &summary.diagnostics;
                println!(
                    "convexity: {} ({} points, min eigenvalue {:.3e})",
                    if d.convexity.passed { "ok" } else { "FAILED" },
                    d.convexity.points,
                    d.convexity.min_eigenvalue
                );
                for e in &d.epochs {
                    println!(
                        "epoch {}: t = {} -> {}, {} of {} endpoints kept, max |F - 1| {:.2e}{}",
                        e.epoch,
                        e.launch_time,
                        e.final_time,
                        e.surviving,
                        e.launches,
                        e.max_f_drift,
                        if e.dispersion_warning {
                            ", dispersion warning"
                        } else {
                            ""
                        }
                    );
                }
                for o in d.oracle.iter().flatten() {
                    println!(
                        "oracle: launch {} geodesic {:.6} oracle {:.6} ({:+.2e})",
                        o.launch_index, o.geodesic_time, o.oracle_time, o.relative_gap
                    );
                }
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
