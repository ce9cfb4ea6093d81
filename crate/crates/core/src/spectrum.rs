//! Position and momentum fluctuation spectra of the mirror.
//!
//! `S_q(ω) = ħ/|d(ω)|² · { radiation(ω) + thermal(ω) }`, where the radiation
//! part comes from the vacuum noise entering the cavity and the thermal part
//! from the Brownian force of the bath. Both parts are kept separately.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{CothMode, Model};
use crate::steady_state::SteadyStateBranch;

/// Below this `|ħω/2k_BT|` the coth factor is evaluated from its series.
const COTH_SERIES_BELOW: f64 = 1e-6;
/// `|d|` below this fraction of its natural magnitude counts as divergent.
const DIVERGENCE_RATIO: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub s_q_thermal: f64,
    pub s_q_radiation: f64,
    pub d_abs2: f64,
}

/// Branch-dependent constants of the spectrum, precomputed once so the
/// spectrum can be evaluated cheaply at many frequencies.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum {
    mass: f64,
    omega_m: f64,
    gamma_m: f64,
    kappa: f64,
    delta: f64,
    gain: f64,
    hbar: f64,
    /// `2k_BT / ħ`.
    thermal_rate: f64,
    /// `ħ / (2k_BT)`.
    inv_thermal_rate: f64,
    coth_mode: CothMode,
    /// `2ħχ²(Δ|c_s|² + iGe^{−iθ}c_s² − iGe^{iθ}c_s*²)`.
    coupling: Complex64,
    /// `2κħχ²`.
    radiation_prefactor: f64,
    photons: f64,
    /// `2Ge^{iθ}c_s*²(κ − iΔ) + 2Ge^{−iθ}c_s²(κ + iΔ)`.
    cross: Complex64,
}

impl Spectrum {
    pub fn new(branch: &SteadyStateBranch, model: &Model) -> Self {
        let d = &model.derived;
        let hbar = model.hbar();
        let (gain, theta) = (model.config.opa.gain, model.config.opa.theta);
        let c = branch.c_s;
        let cc = c.conj();
        let delta = branch.delta;
        let photons = c.norm_sqr();
        let i = Complex64::i();

        let w = Complex64::from_polar(1.0, -theta) * c * c;
        let bracket = delta * photons + i * gain * w - i * gain * w.conj();
        let coupling = 2.0 * hbar * d.chi * d.chi * bracket;

        let e_pos = Complex64::from_polar(1.0, theta);
        let e_neg = Complex64::from_polar(1.0, -theta);
        let cross = 2.0 * gain * e_pos * cc * cc * Complex64::new(d.kappa, -delta)
            + 2.0 * gain * e_neg * c * c * Complex64::new(d.kappa, delta);

        let kt = model.config.constants.k_b * model.config.bath.temperature;
        Self {
            mass: model.mass(),
            omega_m: model.omega_m(),
            gamma_m: d.gamma_m,
            kappa: d.kappa,
            delta,
            gain,
            hbar,
            thermal_rate: 2.0 * kt / hbar,
            inv_thermal_rate: hbar / (2.0 * kt),
            coth_mode: model.config.bath.coth_mode,
            coupling,
            radiation_prefactor: 2.0 * d.kappa * hbar * d.chi * d.chi,
            photons,
            cross,
        }
    }

    fn cavity_factor(&self, omega: f64) -> Complex64 {
        // Δ² + (κ − iω)² − 4G²
        let re = self.delta * self.delta + self.kappa * self.kappa - 4.0 * self.gain * self.gain - omega * omega;
        Complex64::new(re, -2.0 * self.kappa * omega)
    }

    fn mechanical_factor(&self, omega: f64) -> Complex64 {
        Complex64::new((omega - self.omega_m) * (omega + self.omega_m), omega * self.gamma_m)
    }

    /// Spectrum denominator `d(ω)`.
    pub fn denominator(&self, omega: f64) -> Complex64 {
        self.coupling + self.mass * self.mechanical_factor(omega) * self.cavity_factor(omega)
    }

    /// `ω·coth(ħω / 2k_BT)`, continuous through ω = 0.
    pub fn omega_coth(&self, omega: f64) -> f64 {
        match self.coth_mode {
            CothMode::HighTemperature => self.thermal_rate,
            CothMode::Exact => {
                let x = omega * self.inv_thermal_rate;
                if x.abs() < COTH_SERIES_BELOW {
                    self.thermal_rate * (1.0 + x * x / 3.0)
                } else {
                    omega / x.tanh()
                }
            }
        }
    }

    pub fn point(&self, omega: f64) -> Result<SpectrumPoint> {
        if !omega.is_finite() {
            return Err(Error::NonFinite("omega"));
        }
        let d = self.denominator(omega);
        let d_abs2 = d.norm_sqr();
        let natural = self.mass
            * (omega * omega + self.omega_m * self.omega_m + omega.abs() * self.gamma_m)
            * (self.delta * self.delta + self.kappa * self.kappa + 4.0 * self.gain * self.gain + omega * omega)
            + self.coupling.norm();
        if d_abs2.sqrt().partial_cmp(&(DIVERGENCE_RATIO * natural)) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Divergent { omega, d_abs2 });
        }

        let bracket = (self.kappa * self.kappa + omega * omega + self.delta * self.delta + 4.0 * self.gain * self.gain)
            * self.photons
            + self.cross.re;
        let s_q_radiation = self.hbar * self.radiation_prefactor * bracket / d_abs2;
        let cav = self.cavity_factor(omega).norm_sqr();
        let s_q_thermal = self.hbar * self.mass * self.gamma_m * self.omega_coth(omega) * cav / d_abs2;
        let s_q = s_q_thermal + s_q_radiation;
        Ok(SpectrumPoint {
            omega,
            s_q,
            s_p: self.mass * self.mass * omega * omega * s_q,
            s_q_thermal,
            s_q_radiation,
            d_abs2,
        })
    }
}

/// `d(ω)`, the common denominator of the mirror response.
pub fn denominator_d(omega: f64, branch: &SteadyStateBranch, model: &Model) -> Complex64 {
    Spectrum::new(branch, model).denominator(omega)
}

/// Position spectrum at `omega`, with its thermal and radiation parts.
pub fn s_q(omega: f64, branch: &SteadyStateBranch, model: &Model) -> Result<SpectrumPoint> {
    Spectrum::new(branch, model).point(omega)
}

/// Momentum spectrum `m²ω²S_q(ω)`.
pub fn s_p(omega: f64, branch: &SteadyStateBranch, model: &Model) -> Result<f64> {
    Ok(s_q(omega, branch, model)?.s_p)
}
