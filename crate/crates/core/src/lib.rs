//! Radiation-pressure cooling of a micromechanical mirror in a Fabry–Perot
//! cavity that contains a degenerate optical parametric amplifier.
//!
//! The pipeline for one operating point:
//!
//! 1. [`steady_state::solve_branches`] finds every self-consistent steady
//!    state (up to five) for a bare detuning `Δ₀`.
//! 2. [`stability::routh_hurwitz`] linearizes around each one and decides
//!    stability, cross-checked against the drift-matrix eigenvalues.
//! 3. [`spectrum::Spectrum`] evaluates the mirror's position and momentum
//!    fluctuation spectra.
//! 4. [`thermo::variances`] integrates them into `⟨q²⟩`, `⟨p²⟩` and the
//!    effective temperature.
//!
//! [`sweep`] runs that pipeline over a grid of detunings and locates the
//! coldest stable operating point.
//!
//! ```
//! use opmcool::params::{Model, SystemConfig};
//! use opmcool::steady_state::{solve_branches, BranchSearch};
//! use opmcool::thermo::{variances, QuadOptions};
//!
//! let model = Model::new(SystemConfig::reference(188.4)).unwrap();
//! let states = solve_branches(4.9e7, &model, &BranchSearch::default()).unwrap();
//! let thermo = variances(&states.branches[0], &model, &QuadOptions::default()).unwrap();
//! assert!(thermo.t_eff > 14.0 && thermo.t_eff < 17.0);
//! ```

pub mod config;
pub mod error;
pub mod params;
pub mod quadrature;
pub mod spectrum;
pub mod stability;
pub mod steady_state;
pub mod sweep;
pub mod thermo;

pub use error::{Error, Result};
pub use params::{derive_parameters, DerivedParams, Model, SystemConfig};
pub use sweep::{find_min_teff, run_sweep, BranchPolicy, SweepConfig, SweepRow};
