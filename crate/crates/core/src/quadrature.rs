//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector integrands.
//!
//! Each panel is integrated with the 15-point Kronrod rule; the difference
//! to the embedded 7-point Gauss rule is taken as the panel's error, without
//! the usual heuristic rescaling. The panel with the largest relative error
//! contribution is bisected until every component meets the tolerance.
//!
//! A panel may live in a reciprocal variable: `x ∈ (0, 1]` maps to
//! `ω = scale / x`, which turns a semi-infinite tail `[scale, ∞)` into a
//! finite panel whose integrand stays bounded for algebraically decaying
//! functions.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mapping {
    /// Integrate directly in the variable.
    Linear,
    /// `x ↦ scale / x`, with Jacobian `|scale| / x²`. A negative scale
    /// covers `(−∞, scale]`.
    Reciprocal { scale: f64 },
}

impl Mapping {
    fn to_omega(self, x: f64) -> f64 {
        match self {
            Mapping::Linear => x,
            Mapping::Reciprocal { scale } => scale / x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub mapping: Mapping,
}

impl Segment {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            mapping: Mapping::Linear,
        }
    }

    /// `[start, ∞)` through the reciprocal map, or `(−∞, start]` when
    /// `start` is negative.
    pub fn tail(start: f64) -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            mapping: Mapping::Reciprocal { scale: start },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    /// Absolute error estimate per component.
    pub error: [f64; N],
    pub evaluations: usize,
    pub panels: usize,
}

impl<const N: usize> Integral<N> {
    pub fn relative_error(&self, k: usize) -> f64 {
        if self.value[k] == 0.0 {
            self.error[k]
        } else {
            self.error[k] / self.value[k].abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    lo: f64,
    hi: f64,
    mapping: Mapping,
    value: [f64; N],
    error: [f64; N],
}

fn kronrod<const N: usize, F>(f: &mut F, lo: f64, hi: f64, mapping: Mapping) -> Result<Panel<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<[f64; N]> {
        match mapping {
            Mapping::Linear => f(x),
            Mapping::Reciprocal { scale } => {
                let mut v = f(scale / x)?;
                let jac = scale.abs() / (x * x);
                for c in v.iter_mut() {
                    *c *= jac;
                }
                Ok(v)
            }
        }
    };

    let mut res_k = [0.0; N];
    let mut res_g = [0.0; N];
    let mut res_abs = [0.0; N];
    let fc = eval(center)?;
    for k in 0..N {
        res_k[k] = WGK[7] * fc[k];
        res_g[k] = WG[3] * fc[k];
        res_abs[k] = (WGK[7] * fc[k]).abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        for k in 0..N {
            let s = f1[k] + f2[k];
            res_k[k] += WGK[j] * s;
            res_abs[k] += WGK[j] * (f1[k].abs() + f2[k].abs());
            if j % 2 == 1 {
                res_g[k] += WG[j / 2] * s;
            }
        }
    }

    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        value[k] = res_k[k] * half;
        let roundoff = 50.0 * f64::EPSILON * res_abs[k] * half.abs();
        error[k] = ((res_k[k] - res_g[k]) * half).abs().max(roundoff);
        if !value[k].is_finite() || !error[k].is_finite() {
            return Err(Error::NonFinite("quadrature panel"));
        }
    }
    Ok(Panel {
        lo,
        hi,
        mapping,
        value,
        error,
    })
}

/// Integrates `f` over the union of `segments` to relative tolerance `tol`
/// in every component.
pub fn integrate<const N: usize, F>(
    mut f: F,
    segments: &[Segment],
    tol: f64,
    max_evaluations: usize,
) -> Result<Integral<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    const EVALS_PER_PANEL: usize = 15;
    let mut panels: Vec<Panel<N>> = Vec::with_capacity(segments.len() * 4);
    for s in segments {
        if s.hi > s.lo {
            panels.push(kronrod(&mut f, s.lo, s.hi, s.mapping)?);
        }
    }
    let mut evaluations = panels.len() * EVALS_PER_PANEL;

    let totals = |panels: &[Panel<N>]| {
        let mut v = [0.0; N];
        let mut e = [0.0; N];
        for p in panels {
            for k in 0..N {
                v[k] += p.value[k];
                e[k] += p.error[k];
            }
        }
        (v, e)
    };

    loop {
        let (value, error) = totals(&panels);
        let converged = (0..N).all(|k| error[k] <= tol * value[k].abs() || error[k] == 0.0);
        if converged {
            return Ok(Integral {
                value,
                error,
                evaluations,
                panels: panels.len(),
            });
        }

        let score = |p: &Panel<N>| {
            (0..N)
                .map(|k| {
                    if value[k] != 0.0 {
                        p.error[k] / value[k].abs()
                    } else {
                        p.error[k]
                    }
                })
                .fold(0.0f64, f64::max)
        };
        let (worst, _) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, score(p)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

        let p = panels[worst];
        let mid = 0.5 * (p.lo + p.hi);
        let too_narrow = !(mid > p.lo && mid < p.hi) || (p.hi - p.lo) <= 1e-13 * p.lo.abs().max(p.hi.abs());
        if too_narrow || evaluations + 2 * EVALS_PER_PANEL > max_evaluations {
            let rel = (0..N)
                .map(|k| {
                    if value[k] != 0.0 {
                        error[k] / value[k].abs()
                    } else {
                        error[k]
                    }
                })
                .fold(0.0f64, f64::max);
            let (a, b) = (p.mapping.to_omega(p.lo), p.mapping.to_omega(p.hi));
            return Err(Error::Quadrature {
                evaluations,
                error: rel,
                worst_lo: a.min(b),
                worst_hi: a.max(b),
            });
        }
        let left = kronrod(&mut f, p.lo, mid, p.mapping)?;
        let right = kronrod(&mut f, mid, p.hi, p.mapping)?;
        evaluations += 2 * EVALS_PER_PANEL;
        panels[worst] = left;
        panels.insert(worst + 1, right);
    }
}
