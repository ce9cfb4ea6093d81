//! Self-consistent steady states of the driven cavity and mirror.
//!
//! The mirror displacement shifts the cavity detuning, `Δ = Δ₀ − χq_s`, and
//! the displacement itself depends on the intracavity photon number `|c_s|²`,
//! which depends on `Δ`. Clearing denominators gives a quintic in `Δ`, so up
//! to five steady states can coexist for one bare detuning `Δ₀`.
//!
//! Roots are isolated by a dense sign-change scan of the residual
//! `Δ − Δ₀ + ħχ²|c_s(Δ)|²/(mω_m²)`, refined inside each bracket. Cells where
//! the residual has a same-sign local extremum are searched for a hidden pair
//! of roots, which happens close to saddle-node points of the branch diagram.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{DerivedParams, Model, OpaParams};

/// Relative closeness to `κ² + Δ² − 4G² = 0` at which a root is rejected.
const THRESHOLD_EXCLUSION: f64 = 1e-9;
/// Relative distance below which two roots are merged.
const DEDUP_REL: f64 = 1e-9;

/// One self-consistent steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateBranch {
    /// Ordinal after sorting all branches at this `Δ₀` by ascending `χq_s`.
    pub branch_index: usize,
    /// Bare detuning this branch belongs to, rad/s.
    pub delta0: f64,
    /// Effective detuning `Δ`, rad/s.
    pub delta: f64,
    /// Intracavity amplitude (√photons).
    pub c_s: Complex64,
    /// Mirror displacement, m.
    pub q_s: f64,
    /// Mirror momentum, always zero.
    pub p_s: f64,
    /// Radiation-pressure detuning shift `χq_s`, s⁻¹.
    pub chi_qs: f64,
    /// Residual of the self-consistency equation at `delta`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BranchSearch {
    /// Uniform samples of the residual over the search interval.
    pub samples: usize,
    /// Acceptance tolerance on |residual|, relative to `max(|Δ₀|, κ)`.
    pub tol_rel: f64,
    /// Initial search margin below `Δ₀`; `None` uses the photon-number bound.
    pub margin: Option<f64>,
}

impl Default for BranchSearch {
    fn default() -> Self {
        Self {
            samples: 4096,
            tol_rel: 1e-6,
            margin: None,
        }
    }
}

/// All steady states at one bare detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStates {
    pub delta0: f64,
    /// Sorted by ascending `χq_s`.
    pub branches: Vec<SteadyStateBranch>,
    /// Roots found within the exclusion band of the parametric threshold.
    pub rejected_at_threshold: Vec<f64>,
    /// Interval that was searched.
    pub interval: (f64, f64),
}

/// `κ² + Δ² − 4G²`; positive below the parametric oscillation threshold.
pub fn threshold_margin(kappa: f64, delta: f64, gain: f64) -> f64 {
    kappa * kappa + delta * delta - 4.0 * gain * gain
}

/// Steady intracavity amplitude at effective detuning `delta`.
pub fn steady_field(delta: f64, dp: &DerivedParams, opa: &OpaParams) -> Result<Complex64> {
    let kappa = dp.kappa;
    let g = opa.gain;
    let den = threshold_margin(kappa, delta, g);
    let scale = kappa * kappa + delta * delta + 4.0 * g * g;
    if den.abs() <= 1e-12 * scale {
        return Err(Error::Threshold {
            kappa,
            delta,
            gain: g,
            margin: den,
        });
    }
    Ok(field_unchecked(delta, dp, opa, den))
}

fn field_unchecked(delta: f64, dp: &DerivedParams, opa: &OpaParams, den: f64) -> Complex64 {
    let num = Complex64::new(dp.kappa, -delta) + 2.0 * opa.gain * Complex64::from_polar(1.0, opa.theta);
    num * (dp.epsilon / den)
}

/// `|c_s|²` through the modulus identity, without forming the complex amplitude.
fn photon_number(delta: f64, dp: &DerivedParams, opa: &OpaParams) -> f64 {
    let g2 = 2.0 * opa.gain;
    let re = dp.kappa + g2 * opa.theta.cos();
    let im = delta - g2 * opa.theta.sin();
    let den = threshold_margin(dp.kappa, delta, opa.gain);
    dp.epsilon * dp.epsilon * (re * re + im * im) / (den * den)
}

/// `Δ − Δ₀ + ħχ²|c_s(Δ)|²/(mω_m²)`; zero at a self-consistent steady state.
pub fn residual(delta: f64, delta0: f64, model: &Model) -> Result<f64> {
    let c = steady_field(delta, &model.derived, &model.config.opa)?;
    Ok(delta - delta0 + model.shift_per_photon() * c.norm_sqr())
}

struct Residual<'a> {
    model: &'a Model,
    delta0: f64,
    shift: f64,
}

impl Residual<'_> {
    fn eval(&self, delta: f64) -> f64 {
        delta - self.delta0 + self.shift * photon_number(delta, &self.model.derived, &self.model.config.opa)
    }
}

/// Enumerates every steady state at bare detuning `delta0`.
pub fn solve_branches(delta0: f64, model: &Model, search: &BranchSearch) -> Result<SteadyStates> {
    if !delta0.is_finite() {
        return Err(Error::NonFinite("delta0"));
    }
    let dp = &model.derived;
    let opa = &model.config.opa;
    let kappa = dp.kappa;
    let gain = opa.gain;
    let scale = delta0.abs().max(kappa);
    let tol_abs = search.tol_rel * scale;
    let shift = model.shift_per_photon();
    let drive = shift * dp.epsilon * dp.epsilon;

    let f = Residual { model, delta0, shift };

    // Uncoupled or undriven: Δ = Δ₀ is the only solution.
    if drive == 0.0 {
        let margin = threshold_margin(kappa, delta0, gain);
        if margin <= THRESHOLD_EXCLUSION * (kappa * kappa + delta0 * delta0 + 4.0 * gain * gain) {
            return Err(Error::NoRoot {
                delta0,
                lo: delta0,
                hi: delta0,
                samples: 1,
                rejected: 1,
            });
        }
        let branch = make_branch(0, delta0, delta0, model, margin)?;
        return Ok(SteadyStates {
            delta0,
            branches: vec![branch],
            rejected_at_threshold: Vec::new(),
            interval: (delta0, delta0),
        });
    }

    // Every root satisfies Δ ≤ Δ₀ because χq_s ≥ 0.
    let hi = delta0;
    let lo = lower_bound(delta0, kappa, gain, drive, search.margin);

    // Allowed sub-intervals: outside the band |Δ| ≤ edge where κ² + Δ² ≤ 4G².
    let band_edge = threshold_band_edge(kappa, gain);
    let mut pieces: Vec<(f64, f64, bool, bool)> = Vec::new();
    match band_edge {
        None => pieces.push((lo, hi, false, false)),
        Some(edge) => {
            if lo < -edge {
                pieces.push((lo, hi.min(-edge), false, hi > -edge));
            }
            if hi > edge {
                pieces.push((lo.max(edge), hi, lo < edge, false));
            }
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut rejected = Vec::new();
    let total_width: f64 = pieces.iter().map(|p| p.1 - p.0).sum();
    for &(a, b, left_is_edge, right_is_edge) in &pieces {
        if b <= a {
            continue;
        }
        let n = ((search.samples as f64) * (b - a) / total_width).ceil().max(16.0) as usize;
        let xs = sample_points(a, b, n, left_is_edge, right_is_edge);
        let fs: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
        if fs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("steady-state residual"));
        }
        // Approaching the threshold |c_s|² grows without bound, so the residual
        // is positive there; a negative first sample means a root hides inside
        // the exclusion band.
        if left_is_edge && fs[0] < 0.0 {
            rejected.push(xs[0]);
        }
        if right_is_edge && fs[fs.len() - 1] < 0.0 {
            rejected.push(xs[xs.len() - 1]);
        }
        scan_roots(&f, &xs, &fs, tol_abs, &mut roots);
    }

    roots.sort_by(|a, b| a.total_cmp(b));
    let dedup_tol = DEDUP_REL * scale;
    roots.dedup_by(|a, b| (*a - *b).abs() < dedup_tol);

    let mut branches = Vec::with_capacity(roots.len());
    for delta in roots {
        let margin = threshold_margin(kappa, delta, gain);
        if margin <= THRESHOLD_EXCLUSION * (kappa * kappa + delta * delta + 4.0 * gain * gain) {
            rejected.push(delta);
            continue;
        }
        branches.push(make_branch(0, delta0, delta, model, margin)?);
    }

    if branches.is_empty() {
        return Err(Error::NoRoot {
            delta0,
            lo,
            hi,
            samples: search.samples,
            rejected: rejected.len(),
        });
    }
    if branches.len() > 5 {
        return Err(Error::RootCount {
            delta0,
            count: branches.len(),
        });
    }
    branches.sort_by(|a, b| a.chi_qs.total_cmp(&b.chi_qs));
    for (i, b) in branches.iter_mut().enumerate() {
        b.branch_index = i;
        if b.residual.abs() >= tol_abs {
            return Err(Error::NoRoot {
                delta0,
                lo,
                hi,
                samples: search.samples,
                rejected: rejected.len(),
            });
        }
    }

    Ok(SteadyStates {
        delta0,
        branches,
        rejected_at_threshold: rejected,
        interval: (lo, hi),
    })
}

fn make_branch(index: usize, delta0: f64, delta: f64, model: &Model, margin: f64) -> Result<SteadyStateBranch> {
    let c_s = field_unchecked(delta, &model.derived, &model.config.opa, margin);
    let q_s = model.hbar() * model.derived.chi * c_s.norm_sqr() / (model.mass() * model.omega_m() * model.omega_m());
    let chi_qs = model.derived.chi * q_s;
    let residual = delta - delta0 + chi_qs;
    if !residual.is_finite() {
        return Err(Error::NonFinite("steady state"));
    }
    Ok(SteadyStateBranch {
        branch_index: index,
        delta0,
        delta,
        c_s,
        q_s,
        p_s: 0.0,
        chi_qs,
        residual,
    })
}

/// Smallest `|Δ|` at which the threshold margin exceeds the exclusion band,
/// or `None` when the gain is below `κ/2` and every detuning is allowed.
fn threshold_band_edge(kappa: f64, gain: f64) -> Option<f64> {
    let excess = 4.0 * gain * gain - kappa * kappa;
    if excess < 0.0 {
        return None;
    }
    // Solve κ² + Δ² − 4G² = ρ(κ² + Δ² + 4G²) for Δ².
    let rho = THRESHOLD_EXCLUSION;
    let d2 = (excess + rho * (kappa * kappa + 4.0 * gain * gain)) / (1.0 - rho);
    Some(d2.sqrt().max(rho * kappa))
}

/// A detuning below which no steady state can exist.
///
/// For `|Δ| > 2G`, `|c_s|² ≤ ε²/(|Δ| − 2G)²`, so the residual is negative for
/// every `Δ ≤ lo` once `(Δ₀ − lo)(|lo| − 2G)² > ħχ²ε²/(mω_m²)` with `lo < 0`.
fn lower_bound(delta0: f64, kappa: f64, gain: f64, drive: f64, margin: Option<f64>) -> f64 {
    let below = kappa * kappa - 4.0 * gain * gain;
    let estimate = if below > 0.0 {
        2.0 * drive / below
    } else {
        2.0 * drive / (kappa * kappa)
    };
    let margin = margin.unwrap_or(estimate).max(kappa);
    let mut lo = (delta0 - margin).min(0.0);
    let certified = |lo: f64| {
        lo < 0.0 && lo < delta0 && {
            let r = -lo - 2.0 * gain;
            r > 0.0 && (delta0 - lo) * r * r > drive
        }
    };
    while !certified(lo) {
        lo = 2.0 * lo.min(-kappa);
    }
    lo
}

/// Uniform samples on `[a, b]`, densified geometrically towards ends that
/// touch the threshold band, where the residual varies on ever finer scales.
fn sample_points(a: f64, b: f64, n: usize, left_edge: bool, right_edge: bool) -> Vec<f64> {
    let n = n.max(2);
    let width = b - a;
    let mut xs: Vec<f64> = (0..n).map(|i| a + width * (i as f64) / ((n - 1) as f64)).collect();
    xs[n - 1] = b;
    let decades = 40;
    for k in 1..=decades {
        let offset = width * 10f64.powf(-(k as f64) / 4.0);
        if left_edge {
            xs.push(a + offset);
        }
        if right_edge {
            xs.push(b - offset);
        }
    }
    xs.sort_by(|x, y| x.total_cmp(y));
    xs.dedup();
    xs
}

fn scan_roots(f: &Residual<'_>, xs: &[f64], fs: &[f64], tol_abs: f64, roots: &mut Vec<f64>) {
    let n = xs.len();
    for i in 0..n {
        if fs[i] == 0.0 {
            roots.push(xs[i]);
        }
    }
    for i in 0..n - 1 {
        let (fa, fb) = (fs[i], fs[i + 1]);
        if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
            roots.push(refine(|x| f.eval(x), xs[i], xs[i + 1], fa, fb));
        }
    }
    // Same-sign local extrema of the residual may hide a pair of roots.
    for i in 1..n - 1 {
        let (fl, fm, fr) = (fs[i - 1], fs[i], fs[i + 1]);
        if fl == 0.0 || fm == 0.0 || fr == 0.0 {
            continue;
        }
        let s = fm.signum();
        if fl.signum() != s || fr.signum() != s {
            continue;
        }
        if !(s * fm <= s * fl && s * fm <= s * fr) {
            continue;
        }
        let (xm, gm) = golden_min(|x| s * f.eval(x), xs[i - 1], xs[i + 1], 1e-13);
        if gm < 0.0 {
            let fmid = s * gm;
            roots.push(refine(|x| f.eval(x), xs[i - 1], xm, fl, fmid));
            roots.push(refine(|x| f.eval(x), xm, xs[i + 1], fmid, fr));
        } else if gm <= tol_abs {
            // Tangential double root.
            roots.push(xm);
        }
    }
}

/// Root of `f` in a sign-changing bracket: Illinois false position with a
/// bisection step whenever the bracket fails to halve.
pub(crate) fn refine(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    let mut side = 0i8;
    let mut last_width = (b - a).abs();
    for iter in 0..200 {
        let width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) + f64::MIN_POSITIVE {
            break;
        }
        let bisect = iter % 3 == 2 && width > 0.5 * last_width;
        if iter % 3 == 2 {
            last_width = width;
        }
        let mut x = if bisect {
            0.5 * (a + b)
        } else {
            (a * fb - b * fa) / (fb - fa)
        };
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if fa.abs() < fb.abs() {
        a
    } else {
        b
    }
}

/// Golden-section minimization over `[a, b]` to relative width `rel_tol`; returns the best abscissa and value.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..100 {
        if (b - a).abs() <= rel_tol * a.abs().max(b.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
