use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opmcool::config::load_config;
use opmcool::stability::routh_hurwitz;
use opmcool::steady_state::solve_branches;
use opmcool::sweep::{
    dump_spectrum, format_float, min_from_rows, stability_boundaries, write_spectrum_csv, write_sweep_csv,
    write_sweep_json, OmegaGrid, OutputTarget,
};
use opmcool::{run_sweep, Error, Model, SweepConfig};

/// Cooling a cavity mirror by radiation pressure with an intracavity
/// parametric amplifier.
#[derive(Parser)]
#[command(name = "opmcool", version)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a configuration and print the derived constants and stability map.
    Check { config: PathBuf },
    /// Sweep the detuning grid and write the per-branch table.
    Sweep {
        config: PathBuf,
        /// Write CSV here instead of the configured targets ("-" for stdout).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Locate the coldest stable operating point and the stability boundaries.
    Min { config: PathBuf },
    /// Tabulate the fluctuation spectra at one detuning.
    Spectrum {
        config: PathBuf,
        /// Bare detuning, rad/s (default: `spectrum_delta0` from the config).
        #[arg(long, allow_negative_numbers = true)]
        delta0: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        omega_start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        omega_stop: Option<f64>,
        #[arg(long)]
        omega_steps: Option<usize>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Io(_) => 2,
        Error::NoStablePoint | Error::Unstable { .. } => 3,
        _ => 4,
    }
}

fn open(path: &Path) -> opmcool::Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn check(cfg: &SweepConfig) -> opmcool::Result<()> {
    let model = Model::new(cfg.system)?;
    let d = model.derived;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "# omega_l = {}", format_float(d.omega_l))?;
    writeln!(out, "# chi = {}", format_float(d.chi))?;
    writeln!(out, "# kappa = {}", format_float(d.kappa))?;
    writeln!(out, "# gamma_m = {}", format_float(d.gamma_m))?;
    writeln!(out, "# epsilon = {}", format_float(d.epsilon))?;
    writeln!(out, "delta0,branch,delta,stable,marginal,max_real_eig")?;
    for delta0 in cfg.grid() {
        let states = match solve_branches(delta0, &model, &cfg.search) {
            Ok(s) => s,
            Err(e) => {
                writeln!(out, "# error delta0={}: {e}", format_float(delta0))?;
                continue;
            }
        };
        for b in &states.branches {
            let r = routh_hurwitz(b, &model)?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                format_float(delta0),
                b.branch_index,
                format_float(b.delta),
                r.eig_stable,
                r.marginal,
                format_float(r.max_real_eig)
            )?;
        }
    }
    Ok(())
}

fn sweep(mut cfg: SweepConfig, csv: Option<PathBuf>, json: Option<PathBuf>) -> opmcool::Result<()> {
    if csv.is_some() || json.is_some() {
        cfg.outputs.clear();
        cfg.outputs.extend(csv.map(OutputTarget::Csv));
        cfg.outputs.extend(json.map(OutputTarget::Json));
    }
    if cfg.outputs.is_empty() {
        cfg.outputs.push(OutputTarget::Csv(PathBuf::from("-")));
    }
    let rows = run_sweep(&cfg)?;
    for target in &cfg.outputs {
        match target {
            OutputTarget::Csv(p) => {
                let mut w = open(p)?;
                write_sweep_csv(&mut w, &cfg, &rows)?;
                w.flush()?;
            }
            OutputTarget::Json(p) => {
                let mut w = open(p)?;
                write_sweep_json(&mut w, &cfg, &rows)?;
                w.flush()?;
            }
        }
    }
    let failed = rows.iter().filter(|r| r.branch_index.is_none()).count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} detunings failed; see the error comment lines",
            cfg.delta0_steps
        );
    }
    if rows.iter().any(|r| r.t_eff.is_some()) {
        Ok(())
    } else {
        Err(Error::NoStablePoint)
    }
}

fn min(cfg: SweepConfig) -> opmcool::Result<()> {
    let rows = run_sweep(&cfg)?;
    let mut out = io::stdout().lock();
    for b in stability_boundaries(&cfg, &rows)? {
        let kind = if b.becomes_stable {
            "stable above"
        } else {
            "unstable above"
        };
        writeln!(out, "boundary delta0 = {} ({kind})", format_float(b.delta0))?;
    }
    let m = min_from_rows(&cfg, &rows)?;
    writeln!(out, "delta0 = {}", format_float(m.delta0))?;
    writeln!(out, "t_eff_K = {}", format_float(m.t_eff))?;
    writeln!(out, "r = {}", format_float(m.r))?;
    writeln!(out, "branch = {}", m.branch_index)?;
    writeln!(out, "integration_error = {}", format_float(m.integration_error))?;
    if m.flat {
        writeln!(out, "flat = true")?;
    }
    Ok(())
}

fn spectrum(
    cfg: SweepConfig,
    delta0: Option<f64>,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
    out: Option<PathBuf>,
) -> opmcool::Result<()> {
    let configured = cfg.spectrum_dump;
    let delta0 = delta0.or(configured.map(|d| d.delta0)).ok_or_else(|| Error::Config {
        field: "spectrum_delta0".into(),
        message: "give --delta0 or set spectrum_delta0".into(),
        line: None,
    })?;
    let base = configured.map(|d| d.grid).unwrap_or(OmegaGrid {
        start: 0.0,
        stop: 4.0 * cfg.system.mirror.omega_m,
        steps: 1000,
    });
    let grid = OmegaGrid {
        start: start.unwrap_or(base.start),
        stop: stop.unwrap_or(base.stop),
        steps: steps.unwrap_or(base.steps),
    };
    if grid.stop.partial_cmp(&grid.start) != Some(std::cmp::Ordering::Greater) || grid.steps < 2 {
        return Err(Error::Config {
            field: "omega_stop".into(),
            message: "frequency grid needs stop > start and at least two steps".into(),
            line: None,
        });
    }
    let points = dump_spectrum(&cfg, delta0, &grid)?;
    let mut w = open(out.as_deref().unwrap_or(Path::new("-")))?;
    write_spectrum_csv(&mut w, &cfg, delta0, &points)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> opmcool::Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config {
                field: "workers".into(),
                message: "must be at least 1".into(),
                line: None,
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(io::Error::other)?;
    }
    match cli.command {
        Command::Check { config } => check(&load_config(&config)?),
        Command::Sweep { config, csv, json } => sweep(load_config(&config)?, csv, json),
        Command::Min { config } => min(load_config(&config)?),
        Command::Spectrum {
            config,
            delta0,
            omega_start,
            omega_stop,
            omega_steps,
            out,
        } => spectrum(load_config(&config)?, delta0, omega_start, omega_stop, omega_steps, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
