//! Physical inputs and the constants derived from them.
//!
//! Everything here is in SI units. Human-friendly units (ng, kHz, nm, mW)
//! only appear in the config file and are converted in [`crate::config`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light in vacuum, m/s.
    pub c_light: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_8e-34,
            k_b: 1.380_649e-23,
            c_light: 2.997_924_58e8,
        }
    }
}

/// The movable mirror, modelled as a damped harmonic oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorParams {
    /// Effective mass, kg.
    pub mass: f64,
    /// Mechanical angular frequency, rad/s.
    pub omega_m: f64,
    /// Mechanical quality factor `omega_m / gamma_m`.
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Cavity length, m.
    pub length: f64,
    /// Finesse (dimensionless).
    pub finesse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Laser wavelength, m.
    pub wavelength: f64,
    /// Input power, W.
    pub power: f64,
}

/// Degenerate parametric amplifier inside the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpaParams {
    /// Nonlinear gain G, s⁻¹.
    pub gain: f64,
    /// Pump phase θ, rad. Normalized to [0, 2π) by [`OpaParams::new`].
    pub theta: f64,
}

impl OpaParams {
    pub fn new(gain: f64, theta: f64) -> Self {
        Self {
            gain,
            theta: theta.rem_euclid(2.0 * PI),
        }
    }

    pub fn off() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// How `ω·coth(ħω / 2k_BT)` is evaluated in the thermal noise term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CothMode {
    /// Full quantum expression.
    Exact,
    /// `k_BT ≫ ħω`: `ω·coth(ħω / 2k_BT)` is replaced by `2k_BT / ħ`.
    #[default]
    HighTemperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    /// Bath temperature, K.
    pub temperature: f64,
    pub coth_mode: CothMode,
}

/// Every raw physical input of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub constants: PhysicalConstants,
    pub mirror: MirrorParams,
    pub cavity: CavityParams,
    pub drive: DriveParams,
    pub opa: OpaParams,
    pub bath: BathParams,
}

impl SystemConfig {
    /// Mirror, cavity and laser used throughout the cooling scenarios:
    /// 1064 nm, 25 mm cavity, 4 mW, 15 ng, 275 kHz, Q = 2.1e4, 300 K.
    /// Only the finesse has to be chosen.
    pub fn reference(finesse: f64) -> Self {
        Self {
            constants: PhysicalConstants::default(),
            mirror: MirrorParams {
                mass: 15e-12,
                omega_m: 2.0 * PI * 275e3,
                quality: 2.1e4,
            },
            cavity: CavityParams { length: 25e-3, finesse },
            drive: DriveParams {
                wavelength: 1064e-9,
                power: 4e-3,
            },
            opa: OpaParams::off(),
            bath: BathParams {
                temperature: 300.0,
                coth_mode: CothMode::HighTemperature,
            },
        }
    }

    pub fn with_opa(mut self, gain: f64, theta: f64) -> Self {
        self.opa = OpaParams::new(gain, theta);
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.bath.temperature = temperature;
        self
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.drive.power = power;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, value: f64) -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and > 0, got {value}")))
            }
        }
        fn non_negative(field: &str, value: f64) -> Result<()> {
            if value.is_finite() && value >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be finite and >= 0, got {value}")))
            }
        }

        let c = &self.constants;
        positive("hbar", c.hbar)?;
        positive("k_b", c.k_b)?;
        positive("c_light", c.c_light)?;
        positive("mass", self.mirror.mass)?;
        positive("omega_m", self.mirror.omega_m)?;
        positive("quality", self.mirror.quality)?;
        positive("length", self.cavity.length)?;
        positive("finesse", self.cavity.finesse)?;
        positive("wavelength", self.drive.wavelength)?;
        non_negative("power", self.drive.power)?;
        non_negative("opa_gain", self.opa.gain)?;
        if !self.opa.theta.is_finite() {
            return Err(Error::config("opa_theta", "must be finite"));
        }
        positive("bath_temperature", self.bath.temperature)?;
        Ok(())
    }
}

/// Secondary constants consumed by every formula downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Laser angular frequency `2πc/λ`, rad/s.
    pub omega_l: f64,
    /// Optomechanical coupling `ω_L / L`, s⁻¹·m⁻¹.
    pub chi: f64,
    /// Cavity decay rate `πc / (2FL)`, s⁻¹.
    pub kappa: f64,
    /// Mechanical damping `ω_m / Q`, s⁻¹.
    pub gamma_m: f64,
    /// Drive amplitude `√(2κP / ħω_L)`, s⁻¹.
    pub epsilon: f64,
}

pub fn derive_parameters(config: &SystemConfig) -> Result<DerivedParams> {
    config.validate()?;
    let c = &config.constants;
    let omega_l = 2.0 * PI * c.c_light / config.drive.wavelength;
    // The cavity resonance differs from the laser frequency by the detuning,
    // a relative correction of order 1e-7 here, so the laser frequency
    // stands in for the cavity frequency in the coupling.
    let chi = omega_l / config.cavity.length;
    let kappa = PI * c.c_light / (2.0 * config.cavity.finesse * config.cavity.length);
    let gamma_m = config.mirror.omega_m / config.mirror.quality;
    let epsilon = (2.0 * kappa * config.drive.power / (c.hbar * omega_l)).sqrt();
    Ok(DerivedParams {
        omega_l,
        chi,
        kappa,
        gamma_m,
        epsilon,
    })
}

/// A validated configuration together with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Model {
    pub config: SystemConfig,
    pub derived: DerivedParams,
}

impl Model {
    pub fn new(config: SystemConfig) -> Result<Self> {
        let derived = derive_parameters(&config)?;
        Ok(Self { config, derived })
    }

    pub fn hbar(&self) -> f64 {
        self.config.constants.hbar
    }

    pub fn mass(&self) -> f64 {
        self.config.mirror.mass
    }

    pub fn omega_m(&self) -> f64 {
        self.config.mirror.omega_m
    }

    /// `ħχ² / (mω_m²)`: detuning shift per intracavity photon.
    pub fn shift_per_photon(&self) -> f64 {
        let d = &self.derived;
        self.hbar() * d.chi * d.chi / (self.mass() * self.omega_m() * self.omega_m())
    }
}
