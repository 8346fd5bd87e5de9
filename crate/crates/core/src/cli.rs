//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::agents::approximation_report;
use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::export::export_results;
use crate::filter_design::ConvergenceReport;
use crate::learning::{prepare, run_baseline, run_experiment, BoundPolicy, RunResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "xilc",
    version,
    about = "Cross-agent learning feedforward experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the config and print the convergence margin against both bounds.
    Check(Args),
    /// Run the experiment and export results.
    Run(Args),
    /// Print designed filters, dynamics maps and approximation quality.
    Design(Args),
    /// Fly the target without learning and export results.
    Baseline(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    config: PathBuf,
    /// Frequency grid size.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence bound a run must satisfy.
    #[arg(long, value_enum)]
    enforce: Option<Enforce>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Enforce {
    Strict,
    Unified,
    None,
}

impl From<Enforce> for BoundPolicy {
    fn from(e: Enforce) -> Self {
        match e {
            Enforce::Strict => BoundPolicy::Strict,
            Enforce::Unified => BoundPolicy::Unified,
            Enforce::None => BoundPolicy::None,
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e.root() {
                Error::ConvergenceRefused { .. } => EXIT_REFUSED,
                _ => EXIT_INVALID,
            }
        }
    }
}

fn load(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(n) = args.grid_points {
        cfg.grid.points = n;
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.display().to_string();
    }
    if let Some(e) = args.enforce {
        cfg.learning.enforce = e.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Check(args) => {
            let cfg = load(&args)?;
            let exp = cfg.resolve::<f64>()?;
            let prepared = prepare(&exp)?;
            writeln!(out, "config: {}", args.config.display()).map_err(io)?;
            writeln!(out, "trainers: {}", exp.trainers.len()).map_err(io)?;
            match &prepared.convergence {
                Some(report) => print_report(out, report)?,
                None => writeln!(out, "no trainers: baseline run, no convergence condition").map_err(io)?,
            }
            Ok(())
        }
        Command::Design(args) => {
            let cfg = load(&args)?;
            let exp = cfg.resolve::<f64>()?;
            let prepared = prepare(&exp)?;
            for (k, (tr, (filter, map))) in exp
                .trainers
                .iter()
                .zip(prepared.filters.filters.iter().zip(&prepared.maps))
                .enumerate()
            {
                writeln!(out, "trainer {} (`{}`)", k + 1, tr.agent.name).map_err(io)?;
                writeln!(
                    out,
                    "  learning filter: taps {}, lead {}, residual {:.6}",
                    filter.taps, filter.lead, filter.design_residual
                )
                .map_err(io)?;
                for (axis, l) in filter.l.diagonal()?.iter().enumerate() {
                    writeln!(out, "    L[{}] = {:?}", ["x", "y", "z"][axis], l.num()).map_err(io)?;
                }
                writeln!(out, "  dynamics map fit residual {:.6}", map.fit_residual).map_err(io)?;
                let approx = approximation_report(&exp.target, &tr.agent, map, &exp.grid)?;
                writeln!(
                    out,
                    "  max |T - G^-1| {:.4}, max |Tk - T M| {:.4}, max |Fk - F| {:.4}",
                    approx.max_t_vs_g_inverse, approx.max_tk_vs_t_m, approx.max_fk_vs_f
                )
                .map_err(io)?;
            }
            if let Some(report) = &prepared.convergence {
                print_report(out, report)?;
            }
            Ok(())
        }
        Command::Run(args) => {
            let cfg = load(&args)?;
            let exp = cfg.resolve::<f64>()?;
            let run = run_experiment(&exp)?;
            finish(out, &cfg, &run, PathBuf::from(&cfg.output.dir))
        }
        Command::Baseline(args) => {
            let cfg = load(&args)?;
            let exp = cfg.resolve::<f64>()?;
            let run = run_baseline(&exp)?;
            finish(out, &cfg, &run, PathBuf::from(&cfg.output.dir).join("baseline"))
        }
    }
}

fn print_report(out: &mut dyn Write, r: &ConvergenceReport<f64>) -> Result<()> {
    let verdict = |ok: bool| if ok { "satisfied" } else { "violated" };
    writeln!(out, "margin: {:.6}", r.margin).map_err(io)?;
    for (k, n) in r.per_block_norms.iter().enumerate() {
        writeln!(out, "  block {}: {:.6}", k + 1, n).map_err(io)?;
    }
    writeln!(
        out,
        "strict bound (1/N = {:.6}): {}",
        r.bound_strict,
        verdict(r.satisfied_strict)
    )
    .map_err(io)?;
    writeln!(
        out,
        "unified bound ({:.6}): {}",
        r.bound_unified,
        verdict(r.satisfied_unified)
    )
    .map_err(io)?;
    Ok(())
}

fn finish(out: &mut dyn Write, cfg: &ExperimentConfig, run: &RunResult<f64>, dir: PathBuf) -> Result<()> {
    let manifest = export_results(run, &cfg.target.agent, &dir, cfg.output.convergence)?;
    if let Some(report) = &run.convergence {
        print_report(out, report)?;
    }
    let m = &run.metrics;
    writeln!(
        out,
        "target rms {:.6} m, max {:.6} m",
        m.target.rms_total, m.target.max_total
    )
    .map_err(io)?;
    writeln!(
        out,
        "baseline rms {:.6} m (ratio {:.4})",
        m.baseline.rms_total, m.target_vs_baseline
    )
    .map_err(io)?;
    for (k, (t, r)) in m.trainers.iter().zip(&m.target_vs_trainers).enumerate() {
        writeln!(
            out,
            "trainer {} rms {:.6} m (target ratio {:.4})",
            k + 1,
            t.rms_total,
            r
        )
        .map_err(io)?;
    }
    writeln!(
        out,
        "wrote {} files to {}",
        manifest.files.len() + 1,
        dir.display()
    )
    .map_err(io)?;
    Ok(())
}
