use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ksflux_cli::config::parse_config;
use ksflux_cli::sweep::{Range, SweepSpec};
use ksflux_cli::{convergence, run, sweep, verify};

/// Radial chemotaxis simulations with blow-up diagnostics.
#[derive(Parser)]
#[command(name = "simulate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Refuse to write into an existing directory.
        #[arg(long)]
        no_clobber: bool,
    },
    /// Classify a grid of (alpha, M) values and bisect the M threshold.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// START:STOP:COUNT
        #[arg(long, allow_hyphen_values = true)]
        alpha: Range,
        /// START:STOP:COUNT
        #[arg(long)]
        m: Range,
        /// Space M geometrically.
        #[arg(long)]
        log_m: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a run directory through the checkers and write report.json.
    Verify {
        #[arg(long)]
        run: PathBuf,
    },
    /// Grid refinement study at N, 2N, 4N, ...
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run {
            config,
            out,
            no_clobber,
        } => {
            let config = parse_config(&config)?;
            let record = run::cmd_run(&config, &out, no_clobber)?;
            let t = record
                .t_detect
                .map_or_else(|| format!("t_end {}", record.final_t), |t| format!("t_detect {t:e}"));
            println!(
                "{} ({t}, peak {:e}, {} steps)",
                record.verdict.kind, record.peak_linf, record.steps
            );
            Ok(run::exit_code(record.verdict.kind))
        }
        Command::Sweep {
            config,
            alpha,
            m,
            log_m,
            out,
        } => {
            let spec = SweepSpec {
                alpha,
                m,
                log_m,
                base: parse_config(&config)?,
            };
            let result = sweep::cmd_sweep(&spec, &out, sweep::worker_count()?)?;
            for t in &result.thresholds {
                println!(
                    "alpha {}: threshold in [{}, {}] ({})",
                    t.alpha, t.m_lo, t.m_hi, t.status
                );
            }
            let errors = result
                .phase
                .iter()
                .filter(|r| r.verdict == sweep::Outcome::Error)
                .count();
            println!("{} points, {errors} errors", result.phase.len());
            Ok(if errors == 0 { 0 } else { 2 })
        }
        Command::Verify { run } => {
            let report = verify::cmd_verify(&run)?;
            for c in &report.checks {
                let tag = if c.required { "" } else { " (advisory)" };
                println!("{:?}\t{}{tag}: {}", c.status, c.name, c.detail);
            }
            Ok(if report.pass { 0 } else { 2 })
        }
        Command::Convergence { config, levels, out } => {
            let config = parse_config(&config)?;
            let rows = convergence::cmd_convergence(&config, levels, &out)?;
            println!("cells\tbessel_order\tgradient_order\tw_order\tself_difference");
            for r in rows {
                println!(
                    "{}\t{:.3}\t{:.3}\t{:.3}\t{:.3e}",
                    r.cells, r.bessel_order, r.gradient_order, r.w_order, r.self_difference
                );
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
