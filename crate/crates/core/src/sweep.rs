//! Detuning sweeps, minimum search and table output.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Model, SystemConfig};
use crate::spectrum::{Spectrum, SpectrumPoint};
use crate::stability::routh_hurwitz;
use crate::steady_state::{golden_min, solve_branches, BranchSearch};
use crate::thermo::{variances_with, QuadOptions};

/// Which steady state represents an operating point when several coexist.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// The branch with the smallest radiation-pressure shift `χq_s`.
    #[default]
    LowestChiQs,
    /// Every stable branch; the coldest wins.
    AllStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl OmegaGrid {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumDump {
    pub delta0: f64,
    pub grid: OmegaGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OutputTarget {
    Csv(PathBuf),
    Json(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub system: SystemConfig,
    pub delta0_start: f64,
    pub delta0_stop: f64,
    pub delta0_steps: usize,
    pub branch_policy: BranchPolicy,
    pub outputs: Vec<OutputTarget>,
    pub spectrum_dump: Option<SpectrumDump>,
    pub search: BranchSearch,
    pub quad: QuadOptions,
}

impl SweepConfig {
    pub fn new(system: SystemConfig, delta0_start: f64, delta0_stop: f64, delta0_steps: usize) -> Self {
        Self {
            system,
            delta0_start,
            delta0_stop,
            delta0_steps,
            branch_policy: BranchPolicy::LowestChiQs,
            outputs: Vec::new(),
            spectrum_dump: None,
            search: BranchSearch::default(),
            quad: QuadOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<Model> {
        if !(self.delta0_start.is_finite() && self.delta0_stop.is_finite()) {
            return Err(Error::config("delta0_start", "detuning range must be finite"));
        }
        if self.delta0_start >= self.delta0_stop {
            return Err(Error::config(
                "delta0_start",
                format!(
                    "must be below delta0_stop ({} >= {})",
                    self.delta0_start, self.delta0_stop
                ),
            ));
        }
        if self.delta0_steps < 2 {
            return Err(Error::config("delta0_steps", "at least two points are required"));
        }
        if !(self.quad.tol > 0.0 && self.quad.tol < 1.0) {
            return Err(Error::config("quad_tol", "must lie in (0, 1)"));
        }
        if self.search.samples < 16 {
            return Err(Error::config("root_samples", "at least 16 samples are required"));
        }
        Model::new(self.system)
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(self.delta0_start, self.delta0_stop, self.delta0_steps)
    }
}

fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![start];
    }
    let n = (steps - 1) as f64;
    (0..steps).map(|i| start + (stop - start) * (i as f64 / n)).collect()
}

/// One branch at one detuning, or a failed detuning (`branch_index = None`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta0: f64,
    pub branch_index: Option<usize>,
    pub chi_qs: f64,
    pub delta: f64,
    /// All eigenvalues have negative real parts.
    pub stable: bool,
    pub marginal: bool,
    pub t_eff: Option<f64>,
    pub r: Option<f64>,
    pub cond1: f64,
    pub cond2: f64,
    pub cond3: f64,
    pub max_real_eig: f64,
    pub integration_error: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(delta0: f64, err: &Error) -> Self {
        Self {
            delta0,
            branch_index: None,
            chi_qs: f64::NAN,
            delta: f64::NAN,
            stable: false,
            marginal: false,
            t_eff: None,
            r: None,
            cond1: f64::NAN,
            cond2: f64::NAN,
            cond3: f64::NAN,
            max_real_eig: f64::NAN,
            integration_error: None,
            error: Some(err.to_string()),
        }
    }

    /// Stable outside the marginal band.
    pub fn strictly_stable(&self) -> bool {
        self.stable && !self.marginal
    }
}

/// Every branch at one detuning, with stability and, for strictly stable
/// branches, the effective temperature.
pub fn evaluate_point(delta0: f64, model: &Model, cfg: &SweepConfig) -> Vec<SweepRow> {
    let states = match solve_branches(delta0, model, &cfg.search) {
        Ok(s) => s,
        Err(e) => return vec![SweepRow::failed(delta0, &e)],
    };
    states
        .branches
        .iter()
        .map(|b| {
            let mut row = SweepRow {
                delta0,
                branch_index: Some(b.branch_index),
                chi_qs: b.chi_qs,
                delta: b.delta,
                stable: false,
                marginal: false,
                t_eff: None,
                r: None,
                cond1: f64::NAN,
                cond2: f64::NAN,
                cond3: f64::NAN,
                max_real_eig: f64::NAN,
                integration_error: None,
                error: None,
            };
            let report = match routh_hurwitz(b, model) {
                Ok(r) => r,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            };
            row.cond1 = report.cond1;
            row.cond2 = report.cond2;
            row.cond3 = report.cond3;
            row.max_real_eig = report.max_real_eig;
            row.stable = report.eig_stable;
            row.marginal = report.marginal;
            if report.is_stable() {
                match variances_with(b, model, &report, &cfg.quad) {
                    Ok(tr) => {
                        row.t_eff = Some(tr.t_eff);
                        row.r = Some(tr.r);
                        row.integration_error = Some(tr.integration_error_estimate);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            row
        })
        .collect()
}

/// Evaluates every grid detuning. Rows are ordered by `(delta0, branch)`
/// regardless of how the work is scheduled.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let model = cfg.validate()?;
    let grid = cfg.grid();
    let per_point: Vec<Vec<SweepRow>> = grid.par_iter().map(|&d0| evaluate_point(d0, &model, cfg)).collect();
    Ok(per_point.into_iter().flatten().collect())
}

/// The row that represents a detuning under `policy`, if it is usable.
fn policy_pick(rows: &[SweepRow], policy: BranchPolicy) -> Option<&SweepRow> {
    match policy {
        BranchPolicy::LowestChiQs => rows
            .iter()
            .find(|r| r.branch_index == Some(0))
            .filter(|r| r.t_eff.is_some()),
        BranchPolicy::AllStable => rows
            .iter()
            .filter(|r| r.t_eff.is_some())
            .min_by(|a, b| a.t_eff.unwrap().total_cmp(&b.t_eff.unwrap())),
    }
}

fn policy_stable(rows: &[SweepRow], policy: BranchPolicy) -> bool {
    match policy {
        BranchPolicy::LowestChiQs => rows
            .iter()
            .find(|r| r.branch_index == Some(0))
            .is_some_and(SweepRow::strictly_stable),
        BranchPolicy::AllStable => rows.iter().any(SweepRow::strictly_stable),
    }
}

fn group_by_point(rows: &[SweepRow]) -> Vec<&[SweepRow]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].delta0.to_bits() != rows[start].delta0.to_bits() {
            groups.push(&rows[start..i]);
            start = i;
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinResult {
    pub delta0: f64,
    pub t_eff: f64,
    pub r: f64,
    pub branch_index: usize,
    /// The objective is constant over the grid; any detuning is optimal.
    pub flat: bool,
    pub integration_error: f64,
}

/// Coldest strictly stable operating point: grid minimum, then golden-section
/// refinement within the neighbouring grid cells to relative precision 1e-4.
pub fn find_min_teff(cfg: &SweepConfig) -> Result<MinResult> {
    let rows = run_sweep(cfg)?;
    min_from_rows(cfg, &rows)
}

pub fn min_from_rows(cfg: &SweepConfig, rows: &[SweepRow]) -> Result<MinResult> {
    let model = cfg.validate()?;
    let grid = cfg.grid();
    let groups = group_by_point(rows);
    let picks: Vec<Option<&SweepRow>> = groups.iter().map(|g| policy_pick(g, cfg.branch_policy)).collect();

    let (k, best) = picks
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|row| (i, row)))
        .min_by(|a, b| a.1.t_eff.unwrap().total_cmp(&b.1.t_eff.unwrap()))
        .ok_or(Error::NoStablePoint)?;
    let to_result = |row: &SweepRow, flat: bool| MinResult {
        delta0: row.delta0,
        t_eff: row.t_eff.unwrap(),
        r: row.r.unwrap_or(f64::NAN),
        branch_index: row.branch_index.unwrap_or(0),
        flat,
        integration_error: row.integration_error.unwrap_or(f64::NAN),
    };

    let values: Vec<f64> = picks.iter().flatten().map(|r| r.t_eff.unwrap()).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let flat = picks.iter().all(Option::is_some) && hi - lo <= cfg.quad.tol * lo;
    if flat {
        return Ok(to_result(best, true));
    }

    // Refine inside the cells adjacent to the grid minimum.
    let group_delta0: Vec<f64> = groups.iter().map(|g| g[0].delta0).collect();
    let idx = grid
        .iter()
        .position(|d| d.to_bits() == group_delta0[k].to_bits())
        .unwrap_or(0);
    let a = grid[idx.saturating_sub(1)];
    let b = grid[(idx + 1).min(grid.len() - 1)];
    let objective = |d0: f64| {
        let rows = evaluate_point(d0, &model, cfg);
        policy_pick(&rows, cfg.branch_policy)
            .and_then(|r| r.t_eff)
            .unwrap_or(f64::INFINITY)
    };
    let (refined, _) = golden_min(objective, a, b, 1e-4);
    let rows = evaluate_point(refined, &model, cfg);
    match policy_pick(&rows, cfg.branch_policy) {
        Some(row) if row.t_eff.unwrap() < best.t_eff.unwrap() => Ok(to_result(row, false)),
        _ => Ok(to_result(best, false)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityBoundary {
    pub delta0: f64,
    /// Stability sets in when `delta0` increases through the boundary.
    pub becomes_stable: bool,
}

/// Detunings where the represented branch changes stability, located by
/// bisection between grid points to relative precision 1e-6.
pub fn stability_boundaries(cfg: &SweepConfig, rows: &[SweepRow]) -> Result<Vec<StabilityBoundary>> {
    let model = cfg.validate()?;
    let groups = group_by_point(rows);
    let flags: Vec<bool> = groups.iter().map(|g| policy_stable(g, cfg.branch_policy)).collect();
    let stable_at = |d0: f64| -> bool {
        let Ok(states) = solve_branches(d0, &model, &cfg.search) else {
            return false;
        };
        let reports: Vec<bool> = states
            .branches
            .iter()
            .map(|b| routh_hurwitz(b, &model).map(|r| r.is_stable()).unwrap_or(false))
            .collect();
        match cfg.branch_policy {
            BranchPolicy::LowestChiQs => reports.first().copied().unwrap_or(false),
            BranchPolicy::AllStable => reports.iter().any(|&s| s),
        }
    };
    let mut out = Vec::new();
    for i in 1..groups.len() {
        if flags[i] == flags[i - 1] {
            continue;
        }
        let (mut lo, mut hi) = (groups[i - 1][0].delta0, groups[i][0].delta0);
        let lo_flag = flags[i - 1];
        while (hi - lo) > 1e-6 * lo.abs().max(hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if stable_at(mid) == lo_flag {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(StabilityBoundary {
            delta0: 0.5 * (lo + hi),
            becomes_stable: flags[i],
        });
    }
    Ok(out)
}

/// Spectrum of the represented branch at `delta0` on `grid`.
pub fn dump_spectrum(cfg: &SweepConfig, delta0: f64, grid: &OmegaGrid) -> Result<Vec<SpectrumPoint>> {
    let model = Model::new(cfg.system)?;
    if grid.steps < 1 || !(grid.start.is_finite() && grid.stop.is_finite()) {
        return Err(Error::config("spectrum_omega_steps", "invalid frequency grid"));
    }
    let states = solve_branches(delta0, &model, &cfg.search)?;
    let mut chosen = None;
    let mut worst = f64::NEG_INFINITY;
    for b in &states.branches {
        let report = routh_hurwitz(b, &model)?;
        if report.is_stable() {
            chosen = Some(*b);
            break;
        }
        worst = worst.max(report.max_real_eig);
        if cfg.branch_policy == BranchPolicy::LowestChiQs {
            return Err(Error::Unstable {
                max_real_eig: report.max_real_eig,
                marginal: report.marginal,
            });
        }
    }
    let branch = chosen.ok_or(Error::Unstable {
        max_real_eig: worst,
        marginal: false,
    })?;
    let spectrum = Spectrum::new(&branch, &model);
    grid.points().into_iter().map(|w| spectrum.point(w)).collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:e}")
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub const SWEEP_COLUMNS: &str = "delta0,branch,chi_qs,delta,stable,marginal,t_eff_K,r,cond1,cond2,cond3,max_real_eig";
pub const SPECTRUM_COLUMNS: &str = "omega_rad_s,s_q,s_q_thermal,s_q_radiation,s_p";

/// `#`-prefixed block with the full resolved parameter set.
pub fn write_header(out: &mut impl Write, title: &str, cfg: &SweepConfig) -> Result<()> {
    let model = Model::new(cfg.system)?;
    let s = &cfg.system;
    let d = &model.derived;
    writeln!(out, "# opmcool {title}")?;
    let fields: [(&str, f64); 17] = [
        ("mass_kg", s.mirror.mass),
        ("omega_m_rad_s", s.mirror.omega_m),
        ("quality", s.mirror.quality),
        ("length_m", s.cavity.length),
        ("finesse", s.cavity.finesse),
        ("wavelength_m", s.drive.wavelength),
        ("power_w", s.drive.power),
        ("opa_gain", s.opa.gain),
        ("opa_theta", s.opa.theta),
        ("bath_temperature_k", s.bath.temperature),
        ("omega_l", d.omega_l),
        ("chi", d.chi),
        ("kappa", d.kappa),
        ("gamma_m", d.gamma_m),
        ("epsilon", d.epsilon),
        ("delta0_start", cfg.delta0_start),
        ("delta0_stop", cfg.delta0_stop),
    ];
    for (k, v) in fields {
        writeln!(out, "# {k} = {}", format_float(v))?;
    }
    let coth = match s.bath.coth_mode {
        crate::params::CothMode::Exact => "exact",
        crate::params::CothMode::HighTemperature => "high_temperature",
    };
    let policy = match cfg.branch_policy {
        BranchPolicy::LowestChiQs => "lowest_chi_qs",
        BranchPolicy::AllStable => "all_stable",
    };
    writeln!(out, "# coth_mode = {coth}")?;
    writeln!(out, "# delta0_steps = {}", cfg.delta0_steps)?;
    writeln!(out, "# branch_policy = {policy}")?;
    writeln!(out, "# quad_tol = {}", format_float(cfg.quad.tol))?;
    Ok(())
}

/// Sweep table. Failed points and branch-level errors appear as
/// `# error ...` comment lines in grid order.
pub fn write_sweep_csv(out: &mut impl Write, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    write_header(out, "sweep", cfg)?;
    writeln!(out, "{SWEEP_COLUMNS}")?;
    for row in rows {
        match row.branch_index {
            None => {
                writeln!(
                    out,
                    "# error delta0={}: {}",
                    format_float(row.delta0),
                    row.error.as_deref().unwrap_or("unknown")
                )?;
            }
            Some(branch) => {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    format_float(row.delta0),
                    branch,
                    format_float(row.chi_qs),
                    format_float(row.delta),
                    row.stable,
                    row.marginal,
                    format_opt(row.t_eff),
                    format_opt(row.r),
                    format_float(row.cond1),
                    format_float(row.cond2),
                    format_float(row.cond3),
                    format_float(row.max_real_eig),
                )?;
                if let Some(err) = &row.error {
                    writeln!(
                        out,
                        "# error delta0={} branch={branch}: {err}",
                        format_float(row.delta0)
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonSweep<'a> {
    parameters: &'a SystemConfig,
    derived: &'a crate::params::DerivedParams,
    delta0_start: f64,
    delta0_stop: f64,
    delta0_steps: usize,
    branch_policy: BranchPolicy,
    rows: &'a [SweepRow],
}

pub fn write_sweep_json(out: &mut impl Write, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    let model = Model::new(cfg.system)?;
    let doc = JsonSweep {
        parameters: &cfg.system,
        derived: &model.derived,
        delta0_start: cfg.delta0_start,
        delta0_stop: cfg.delta0_stop,
        delta0_steps: cfg.delta0_steps,
        branch_policy: cfg.branch_policy,
        rows,
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(std::io::Error::other)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_spectrum_csv(
    out: &mut impl Write,
    cfg: &SweepConfig,
    delta0: f64,
    points: &[SpectrumPoint],
) -> Result<()> {
    write_header(out, "spectrum", cfg)?;
    writeln!(out, "# spectrum_delta0 = {}", format_float(delta0))?;
    writeln!(out, "{SPECTRUM_COLUMNS}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_float(p.omega),
            format_float(p.s_q),
            format_float(p.s_q_thermal),
            format_float(p.s_q_radiation),
            format_float(p.s_p)
        )?;
    }
    Ok(())
}
