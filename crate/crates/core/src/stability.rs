//! Linearized dynamics around a steady state and its stability.
//!
//! Fluctuations `(δq, δp, δx, δy)` obey `ḟ = A f + noise`, with `δx`, `δy` the
//! amplitude and phase quadratures of the cavity field. The steady state is
//! stable iff every eigenvalue of `A` has a negative real part. Two routes
//! decide this: the closed-form Routh–Hurwitz inequalities, and the
//! eigenvalues themselves. The eigenvalues are authoritative.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Model;
use crate::steady_state::{threshold_margin, SteadyStateBranch};

/// Linearized drift matrix in the order `(δq, δp, δx, δy)`, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix {
    pub a: [[f64; 4]; 4],
}

impl DriftMatrix {
    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.a[i][i]).sum()
    }
}

/// Eigenvalue verdict for a drift matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenVerdict {
    pub eig_stable: bool,
    pub max_real_eig: f64,
    pub eigenvalues: [Complex64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Left-hand sides of the three Routh–Hurwitz inequalities.
    pub cond1: f64,
    pub cond2: f64,
    pub cond3: f64,
    /// `(2ħχ²/m)[Δ|c_s|² − 2G·Im(e^{−iθ}c_s²)]`, shared by conditions 2 and 3.
    pub sigma: f64,
    pub rh_stable: bool,
    pub eig_stable: bool,
    pub max_real_eig: f64,
    /// Largest real part lies within the marginal band around zero.
    pub marginal: bool,
    pub eigenvalues: [Complex64; 4],
}

impl StabilityReport {
    /// Strictly stable: all eigenvalues in the open left half-plane, outside the
    /// marginal band.
    pub fn is_stable(&self) -> bool {
        self.eig_stable && !self.marginal
    }
}

/// `κ² + Δ² − 4G² > 0`.
pub fn below_threshold(kappa: f64, delta: f64, gain: f64) -> bool {
    threshold_margin(kappa, delta, gain) > 0.0
}

pub fn drift_matrix(branch: &SteadyStateBranch, model: &Model) -> DriftMatrix {
    let m = model.mass();
    let wm = model.omega_m();
    let hbar = model.hbar();
    let d = &model.derived;
    let (gain, theta) = (model.config.opa.gain, model.config.opa.theta);
    let c = branch.c_s;
    let delta = branch.delta;
    let (s, co) = theta.sin_cos();

    let a = [
        [0.0, 1.0 / m, 0.0, 0.0],
        [-m * wm * wm, -d.gamma_m, hbar * d.chi * c.re, hbar * d.chi * c.im],
        [
            -2.0 * d.chi * c.im,
            0.0,
            -(d.kappa - 2.0 * gain * co),
            delta + 2.0 * gain * s,
        ],
        [
            2.0 * d.chi * c.re,
            0.0,
            -delta + 2.0 * gain * s,
            -(d.kappa + 2.0 * gain * co),
        ],
    ];
    DriftMatrix { a }
}

/// `(2ħχ²/m)[Δ|c_s|² − 2G·Im(e^{−iθ}c_s²)]`.
pub fn sigma(branch: &SteadyStateBranch, model: &Model) -> f64 {
    let d = &model.derived;
    let (gain, theta) = (model.config.opa.gain, model.config.opa.theta);
    let c = branch.c_s;
    let rotated = Complex64::from_polar(1.0, -theta) * c * c;
    2.0 * model.hbar() * d.chi * d.chi / model.mass() * (branch.delta * c.norm_sqr() - 2.0 * gain * rotated.im)
}

/// Half-width of the band around zero in which the largest real part counts
/// as marginal.
pub fn marginal_band(model: &Model) -> f64 {
    1e-6 * model.derived.kappa.min(model.derived.gamma_m)
}

pub fn routh_hurwitz(branch: &SteadyStateBranch, model: &Model) -> Result<StabilityReport> {
    let d = &model.derived;
    let (kappa, gm) = (d.kappa, d.gamma_m);
    let wm2 = model.omega_m() * model.omega_m();
    let gain = model.config.opa.gain;
    let delta = branch.delta;
    let g2 = 4.0 * gain * gain;
    let k = kappa * kappa - g2 + delta * delta;
    let sig = sigma(branch, model);

    let cond1 = 2.0 * kappa * (k + 2.0 * kappa * gm) + gm * (2.0 * kappa * gm + wm2);
    let cond2 = (2.0 * kappa + gm).powi(2) * sig
        + 2.0
            * kappa
            * gm
            * (k * k
                + (2.0 * kappa * gm + gm * gm) * k
                + wm2 * (2.0 * (kappa * kappa + g2 - delta * delta) + wm2 + 2.0 * kappa * gm));
    let cond3 = wm2 * k - sig;
    let rh_stable = cond1 > 0.0 && cond2 > 0.0 && cond3 > 0.0;

    let verdict = eigen_check(&drift_matrix(branch, model))?;
    let marginal = verdict.max_real_eig.abs() < marginal_band(model);
    Ok(StabilityReport {
        cond1,
        cond2,
        cond3,
        sigma: sig,
        rh_stable,
        eig_stable: verdict.eig_stable,
        max_real_eig: verdict.max_real_eig,
        marginal,
        eigenvalues: verdict.eigenvalues,
    })
}

/// Eigenvalues of the drift matrix after diagonal balancing.
///
/// The raw matrix mixes entries from `1/m ~ 1e11` down to `ħχ ~ 1e-17`;
/// balancing by powers of two is a similarity transform that leaves the
/// spectrum unchanged and brings row and column norms together.
pub fn eigen_check(a: &DriftMatrix) -> Result<EigenVerdict> {
    if a.a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("drift matrix"));
    }
    let mut m = a.a;
    balance(&mut m);
    let norm = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if norm == 0.0 {
        return Ok(EigenVerdict {
            eig_stable: false,
            max_real_eig: 0.0,
            eigenvalues: [Complex64::new(0.0, 0.0); 4],
        });
    }
    let mat = Matrix4::from_fn(|i, j| m[i][j] / norm);
    let ev = mat.complex_eigenvalues();
    let mut eigenvalues = [Complex64::new(0.0, 0.0); 4];
    for (slot, v) in eigenvalues.iter_mut().zip(ev.iter()) {
        *slot = Complex64::new(v.re * norm, v.im * norm);
    }
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("eigenvalues"));
    }
    let max_real_eig = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(EigenVerdict {
        eig_stable: max_real_eig < 0.0,
        max_real_eig,
        eigenvalues,
    })
}

#[allow(clippy::needless_range_loop)]
fn balance(m: &mut [[f64; 4]; 4]) {
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..4 {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..4 {
                if j != i {
                    c += m[j][i].abs();
                    r += m[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..4 {
                    m[i][j] /= f;
                    m[j][i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}
