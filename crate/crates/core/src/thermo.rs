//! Mirror variances and effective temperature.
//!
//! `⟨q²⟩ = (1/2π)∫S_q dω`, `⟨p²⟩ = (1/2π)∫S_p dω`, and the effective
//! temperature is the total mean energy, `k_B T_eff = ½mω_m²⟨q²⟩ + ⟨p²⟩/2m`.
//!
//! The spectra carry resonances whose widths range from the bare mechanical
//! damping (tens of s⁻¹) to the cavity linewidth (1e8 s⁻¹). Quadrature
//! panels are cut at the resonances predicted by the drift-matrix
//! eigenvalues and at the peaks found by a dense scan, so the adaptive
//! refinement starts with every feature resolved by at least one panel edge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{CothMode, Model};
use crate::quadrature::{integrate, Integral, Segment};
use crate::spectrum::Spectrum;
use crate::stability::{routh_hurwitz, StabilityReport};
use crate::steady_state::SteadyStateBranch;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadOptions {
    /// Relative tolerance on both variances.
    pub tol: f64,
    pub max_evaluations: usize,
    /// Panels cover `[0, Ω]` with `Ω = cutoff_factor · max(ω_m, κ, |Δ|)`.
    pub cutoff_factor: f64,
    /// Number of samples used to locate spectral peaks.
    pub peak_scan_samples: usize,
    /// Integrate over `[0, ∞)` and double (the spectra are even), or over
    /// the whole line.
    pub fold_even: bool,
    /// Contribution of the outermost doubling panel, relative to the
    /// variances, below which a truncated integral stops growing. Only used
    /// when the integral has no closed tail.
    pub truncation_tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_evaluations: 2_000_000,
            cutoff_factor: 8.0,
            peak_scan_samples: 1 << 14,
            fold_even: true,
            truncation_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoResult {
    /// `⟨q²⟩`, m².
    pub q2: f64,
    /// `⟨p²⟩`, kg²·m²/s².
    pub p2: f64,
    pub t_eff: f64,
    pub r: f64,
    /// Relative error estimate of `t_eff`.
    pub integration_error_estimate: f64,
    pub n_evaluations: usize,
    /// Boundary between resolved panels and the tail, rad/s.
    pub omega_cut: f64,
    pub mass: f64,
    pub omega_m: f64,
    pub k_b: f64,
}

/// `(½mω_m²⟨q²⟩ + ⟨p²⟩/2m) / k_B`.
pub fn effective_temperature(tr: &ThermoResult) -> f64 {
    (0.5 * tr.mass * tr.omega_m * tr.omega_m * tr.q2 + tr.p2 / (2.0 * tr.mass)) / tr.k_b
}

/// `m²ω_m²⟨q²⟩ / ⟨p²⟩`: unity in thermal equilibrium.
pub fn ratio_r(tr: &ThermoResult) -> Result<f64> {
    if tr.p2 == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(tr.mass * tr.mass * tr.omega_m * tr.omega_m * tr.q2 / tr.p2)
}

/// Variances and effective temperature of a strictly stable branch.
pub fn variances(branch: &SteadyStateBranch, model: &Model, opts: &QuadOptions) -> Result<ThermoResult> {
    let report = routh_hurwitz(branch, model)?;
    variances_with(branch, model, &report, opts)
}

/// As [`variances`], reusing an existing stability report.
pub fn variances_with(
    branch: &SteadyStateBranch,
    model: &Model,
    report: &StabilityReport,
    opts: &QuadOptions,
) -> Result<ThermoResult> {
    if !report.is_stable() {
        return Err(Error::Unstable {
            max_real_eig: report.max_real_eig,
            marginal: report.marginal,
        });
    }
    let spectrum = Spectrum::new(branch, model);
    let d = &model.derived;
    let omega_cut = opts.cutoff_factor * model.omega_m().max(d.kappa).max(branch.delta.abs());

    let breaks = breakpoints(&spectrum, report, omega_cut, opts.peak_scan_samples)?;
    let mut scan_evals = opts.peak_scan_samples;

    let closed_tail = model.config.bath.coth_mode == CothMode::HighTemperature;
    let mut segments: Vec<Segment> = breaks.windows(2).map(|w| Segment::linear(w[0], w[1])).collect();
    if closed_tail {
        segments.push(Segment::tail(omega_cut));
    }
    if !opts.fold_even {
        let mirrored: Vec<Segment> = segments
            .iter()
            .map(|s| match s.mapping {
                crate::quadrature::Mapping::Linear => Segment::linear(-s.hi, -s.lo),
                crate::quadrature::Mapping::Reciprocal { scale } => Segment::tail(-scale),
            })
            .collect();
        segments.extend(mirrored);
    }

    let integrand = |w: f64| -> Result<[f64; 2]> {
        let p = spectrum.point(w)?;
        Ok([p.s_q, p.s_p])
    };
    let mut total: Integral<2> = integrate(integrand, &segments, opts.tol, opts.max_evaluations)?;

    // Without a closed tail, extend in doubling panels until the outermost
    // one no longer matters.
    let mut truncation = [0.0; 2];
    if !closed_tail {
        let mut lo = omega_cut;
        loop {
            let hi = 2.0 * lo;
            let mut segs = vec![Segment::linear(lo, hi)];
            if !opts.fold_even {
                segs.push(Segment::linear(-hi, -lo));
            }
            let budget = opts.max_evaluations.saturating_sub(total.evaluations);
            let part: Integral<2> = integrate(integrand, &segs, opts.tol, budget)?;
            for k in 0..2 {
                total.value[k] += part.value[k];
                total.error[k] += part.error[k];
            }
            total.evaluations += part.evaluations;
            let small = (0..2).all(|k| part.value[k] <= opts.truncation_tol * total.value[k]);
            if small {
                truncation = part.value;
                break;
            }
            lo = hi;
            if !lo.is_finite() {
                return Err(Error::NonFinite("truncation frequency"));
            }
        }
    }
    scan_evals += total.evaluations;

    let norm = if opts.fold_even {
        1.0 / std::f64::consts::PI
    } else {
        0.5 / std::f64::consts::PI
    };
    let q2 = total.value[0] * norm;
    let p2 = total.value[1] * norm;
    let q2_err = (total.error[0] + truncation[0]) * norm;
    let p2_err = (total.error[1] + truncation[1]) * norm;

    let m = model.mass();
    let wm = model.omega_m();
    let k_b = model.config.constants.k_b;
    let mut tr = ThermoResult {
        q2,
        p2,
        t_eff: 0.0,
        r: 0.0,
        integration_error_estimate: 0.0,
        n_evaluations: scan_evals,
        omega_cut,
        mass: m,
        omega_m: wm,
        k_b,
    };
    if !(q2 > 0.0 && p2 > 0.0) {
        return Err(Error::NonFinite("variances"));
    }
    tr.t_eff = effective_temperature(&tr);
    tr.r = ratio_r(&tr)?;
    tr.integration_error_estimate = (0.5 * m * wm * wm * q2_err + p2_err / (2.0 * m)) / (k_b * tr.t_eff);
    Ok(tr)
}

/// Sorted panel edges on `[0, omega_cut]`.
fn breakpoints(spectrum: &Spectrum, report: &StabilityReport, omega_cut: f64, scan: usize) -> Result<Vec<f64>> {
    let mut pts = vec![0.0, omega_cut];
    let push = |x: f64, pts: &mut Vec<f64>| {
        if x > 0.0 && x < omega_cut {
            pts.push(x);
        }
    };

    // Each eigenvalue λ shows up as a resonance at |Im λ| with half-width
    // |Re λ|; cut a ladder of panels that widen geometrically away from it.
    for z in &report.eigenvalues {
        let center = z.im.abs();
        let width = z.re.abs().max(1e-12 * omega_cut);
        let radius = z.norm();
        push(center, &mut pts);
        let mut step = width;
        while step < omega_cut {
            push(center - step, &mut pts);
            push(center + step, &mut pts);
            step *= 4.0;
        }
        for k in -4..=4 {
            push(radius * 2f64.powi(k), &mut pts);
        }
    }

    // Dense scan for peaks: half linear, half logarithmic.
    let half = (scan / 2).max(2);
    let log_lo = (omega_cut * 1e-8).ln();
    let log_hi = omega_cut.ln();
    let mut grid: Vec<f64> = (0..half)
        .map(|i| omega_cut * (i as f64) / ((half - 1) as f64))
        .chain((0..half).map(|i| (log_lo + (log_hi - log_lo) * (i as f64) / ((half - 1) as f64)).exp()))
        .collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let values: Vec<f64> = grid
        .iter()
        .map(|&w| spectrum.point(w).map(|p| p.s_q))
        .collect::<Result<_>>()?;
    for i in 1..grid.len() - 1 {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] {
            push(grid[i - 1], &mut pts);
            push(grid[i], &mut pts);
            push(grid[i + 1], &mut pts);
        }
    }

    pts.sort_by(|a, b| a.total_cmp(b));
    let min_gap = 1e-12 * omega_cut;
    pts.dedup_by(|a, b| (*a - *b).abs() <= min_gap);
    if let Some(last) = pts.last_mut() {
        *last = omega_cut;
    }
    Ok(pts)
}
