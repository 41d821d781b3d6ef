use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nematic_core::norms::{divergence_residual, energy, h0, snapshot_unit_drift};
use nematic_core::runner::{self, exit_code, RunConfig, EXIT_OK, OUTPUT_DIR_ENV};
use nematic_core::{Error, NormConfig, NormReport};

#[derive(Parser)]
#[command(name = "nematic", version, about = "Ericksen-Leslie nematic solver and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse a config and check the scenario's preconditions.
    Validate { config: PathBuf },
    /// Recompute the trajectory functional of a field dump.
    Norms {
        dump: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, default_value_t = 8.0)]
        q: f64,
        /// Reference director `ex,ey,ez`; defaults to the corner value.
        #[arg(long, value_parser = parse_vec3)]
        reference: Option<[f64; 3]>,
    },
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output_dir } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = output_dir
                .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| cfg.output.dir.clone());
            match runner::run(&cfg, &dir) {
                Ok(s) => {
                    println!(
                        "converged={} windows={} sweeps={} H={:.6e} drift={:.3e} div={:.3e} energy={:.6e}",
                        s.converged,
                        s.windows_completed,
                        s.total_sweeps,
                        s.final_h_total,
                        s.unit_drift,
                        s.max_divergence_residual,
                        s.final_energy.total
                    );
                    if !s.failure.is_empty() {
                        eprintln!("solver failure: {}", s.failure);
                    }
                    if !s.flags.is_empty() {
                        eprintln!("invariant flags: {}", s.flags.join(", "));
                    }
                    println!("artifacts in {}", dir.display());
                    ExitCode::from(s.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { config } => {
            let result = RunConfig::load(&config).and_then(|cfg| {
                let init = runner::validate(&cfg)?;
                Ok((cfg, init))
            });
            match result {
                Ok((cfg, init)) => {
                    let en = energy(&init);
                    println!("scenario={} n={}", cfg.scenario.kind, cfg.grid.n);
                    println!("h0={:.6e}", h0(&init, cfg.scenario.reference, &cfg.norms));
                    println!("unit_drift={:.3e}", snapshot_unit_drift(&init.d));
                    println!("divergence_residual={:.3e}", divergence_residual(&init));
                    println!("energy kinetic={:.6e} elastic={:.6e}", en.kinetic, en.elastic);
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Norms {
            dump,
            p,
            q,
            reference,
        } => {
            match NormConfig::new(p, q).and_then(|cfg| runner::offline_norms(&dump, &cfg, reference)) {
                Ok(r) => {
                    println!("{}", NormReport::CSV_HEADER);
                    println!("{}", r.csv_row());
                    ExitCode::from(EXIT_OK as u8)
                }
                Err(e) => fail(&e),
            }
        }
    }
}
