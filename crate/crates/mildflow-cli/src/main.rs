//! Command-line surface for the mildflow solver: simulate scenarios,
//! re-run diagnostics on stored runs, zoom stored trajectories, and run
//! the quick invariant suite.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mildflow", version, about = "Mild-solution solver and blow-up diagnostics for the simplified Ericksen-Leslie system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write its artifacts.
    Simulate(SimulateArgs),
    /// Re-run diagnostics on a stored run without re-solving.
    Diagnose(DiagnoseArgs),
    /// Apply the parabolic zoom to a stored trajectory.
    Rescale(RescaleArgs),
    /// Run the built-in invariant suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario configuration file (TOML).
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's output.directory or
    /// runs/<scenario-stem>.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Directory written by `simulate`.
    run_dir: PathBuf,
    /// Override the vorticity threshold sigma.
    #[arg(long)]
    sigma: Option<f64>,
    /// Override the time exponent a.
    #[arg(long)]
    a: Option<f64>,
    /// Override the space exponent b.
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct RescaleArgs {
    /// Directory written by `simulate` with store_trajectory = true.
    run_dir: PathBuf,
    /// Magnification M > 0 (integer M maps period to period).
    #[arg(long)]
    m: f64,
    /// Zoom center coordinates, comma separated (e.g. --xk 0.5,3.1);
    /// defaults to the argmax of |u| + |grad d| at the latest node.
    #[arg(long, value_delimiter = ',', num_args = 1..=3)]
    xk: Option<Vec<f64>>,
    /// Time origin of the parabolic rescaling; defaults to the latest
    /// node time.
    #[arg(long)]
    tk: Option<f64>,
    /// Output directory; defaults to <run-dir>/rescaled.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trim seeds and resolutions.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> mildflow::Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => {
            let scenario = mildflow::scenario::load_scenario(&args.scenario)?;
            let out_dir = args
                .out
                .or_else(|| scenario.output.directory.clone())
                .unwrap_or_else(|| {
                    let stem = args
                        .scenario
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "run".into());
                    PathBuf::from("runs").join(stem)
                });
            let outcome = mildflow::run::run(&scenario, &out_dir)?;
            println!("run written to {}", outcome.out_dir.display());
            for w in &outcome.manifest.windows {
                println!(
                    "  window [{:.6}, {:.6}] iterations {} contraction {}",
                    w.t_start,
                    w.t_end,
                    w.record.iterations,
                    w.record
                        .contraction_ratio()
                        .map(|r| format!("{r:.3}"))
                        .unwrap_or_else(|| "-".into())
                );
            }
            if let Some(b) = &outcome.blowup {
                println!(
                    "blow-up flag at t = {:.6} (window estimate {:.3e} below minimum)",
                    b.t_reached, b.t0_estimate
                );
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose(args) => {
            let report = mildflow::run::diagnose(&args.run_dir, args.sigma, args.a, args.b)?;
            println!(
                "diagnostics rerun written to {}",
                args.run_dir.join("diagnostics_rerun.toml").display()
            );
            if let Some(t1) = &report.type_one {
                println!(
                    "type-I estimate C = {:.6e} ({:?})",
                    t1.c_est, t1.classification
                );
            }
            if let Some(di) = &report.direction_integral {
                println!("direction-gradient integral = {:.6e}", di.value);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Rescale(args) => {
            let center = args.xk.map(|xs| {
                let mut c = [0.0f64; 3];
                for (slot, v) in c.iter_mut().zip(&xs) {
                    *slot = *v;
                }
                c
            });
            let out = args.out.unwrap_or_else(|| args.run_dir.join("rescaled"));
            let report =
                mildflow::run::rescale_run(&args.run_dir, args.m, center, args.tk, &out)?;
            println!("rescaled trajectory written to {}", out.display());
            println!(
                "residual source {:.3e} -> zoomed {:.3e}{}",
                report.residual_source,
                report.residual_zoomed,
                if report.aperiodic_local {
                    " (aperiodic window - valid locally)"
                } else {
                    ""
                }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let results = mildflow::verify::run_verify(args.quick);
            let mut failures = 0;
            for r in &results {
                let status = if r.pass { "PASS" } else { "FAIL" };
                if r.detail.is_empty() {
                    println!("{status} {}", r.name);
                } else {
                    println!("{status} {} ({})", r.name, r.detail);
                }
                if !r.pass {
                    failures += 1;
                }
            }
            println!("{} checks, {} failures", results.len(), failures);
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
