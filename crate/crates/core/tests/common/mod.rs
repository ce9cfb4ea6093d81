//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use opmcool::params::{Model, SystemConfig};
use opmcool::steady_state::{steady_field, SteadyStateBranch};
use rand::Rng;

pub const C_LIGHT: f64 = 2.99792458e8;
pub const HBAR: f64 = 1.0545718e-34;
pub const K_B: f64 = 1.380649e-23;

/// Finesse giving linewidth `kappa` for the reference 25 mm cavity.
pub fn finesse_for(kappa: f64) -> f64 {
    PI * C_LIGHT / (2.0 * kappa * 25e-3)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Reference mirror and laser with a random linewidth, drive power and
/// amplifier below threshold at zero detuning.
pub fn random_model(rng: &mut impl Rng) -> Model {
    let kappa = log_uniform(rng, 1e6, 1e9);
    let gain = rng.random_range(0.0..0.5) * kappa;
    let theta = rng.random_range(0.0..2.0 * PI);
    let power = log_uniform(rng, 1e-6, 1e-2);
    Model::new(
        SystemConfig::reference(finesse_for(kappa))
            .with_opa(gain, theta)
            .with_power(power),
    )
    .unwrap()
}

/// The steady state whose effective detuning is `delta`, with the bare
/// detuning that produces it.
pub fn branch_at(delta: f64, model: &Model) -> SteadyStateBranch {
    let c_s = steady_field(delta, &model.derived, &model.config.opa).unwrap();
    let chi = model.derived.chi;
    let q_s = HBAR * chi * c_s.norm_sqr() / (model.mass() * model.omega_m().powi(2));
    SteadyStateBranch {
        branch_index: 0,
        delta0: delta + chi * q_s,
        delta,
        c_s,
        q_s,
        p_s: 0.0,
        chi_qs: chi * q_s,
        residual: 0.0,
    }
}

/// Real roots of the quintic obtained by clearing the denominators of the
/// self-consistency condition, via companion-matrix eigenvalues polished by
/// Newton steps. Roots inside the threshold band are dropped.
pub fn quintic_roots(delta0: f64, model: &Model) -> Vec<f64> {
    let d = &model.derived;
    let (g, theta) = (model.config.opa.gain, model.config.opa.theta);
    let kk = HBAR * d.chi * d.chi / (model.mass() * model.omega_m().powi(2));
    let s = d.kappa.max(delta0.abs());
    let a = (d.kappa * d.kappa - 4.0 * g * g) / (s * s);
    let d0 = delta0 / s;
    let k = kk * d.epsilon * d.epsilon / s.powi(3);
    let b = (d.kappa + 2.0 * g * theta.cos()).powi(2) / (s * s);
    let gs = 2.0 * g * theta.sin() / s;
    // x⁵ + c4 x⁴ + c3 x³ + c2 x² + c1 x + c0
    let coef = [
        k * (b + gs * gs) - a * a * d0,
        a * a - 2.0 * k * gs,
        k - 2.0 * a * d0,
        2.0 * a,
        -d0,
    ];
    let mut m = DMatrix::<f64>::zeros(5, 5);
    for i in 1..5 {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..5 {
        m[(i, 4)] = -coef[i];
    }
    let p = |x: f64| (((((x + coef[4]) * x + coef[3]) * x + coef[2]) * x + coef[1]) * x) + coef[0];
    let dp = |x: f64| ((((5.0 * x + 4.0 * coef[4]) * x + 3.0 * coef[3]) * x + 2.0 * coef[2]) * x) + coef[1];
    let mut roots: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .filter(|z: &&Complex64| z.im.abs() <= 1e-7 * z.norm().max(1.0))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..20 {
                let step = p(x) / dp(x);
                if !step.is_finite() {
                    break;
                }
                x -= step;
            }
            x * s
        })
        .filter(|&delta| d.kappa * d.kappa + delta * delta - 4.0 * g * g > 1e-9 * (d.kappa * d.kappa + delta * delta))
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * s);
    roots
}

/// Position spectrum without the amplifier, coded from the textbook
/// optomechanical susceptibility with a classical bath.
pub fn s_q_without_gain(omega: f64, delta: f64, photons: f64, model: &Model) -> f64 {
    let d = &model.derived;
    let (m, wm, gm) = (model.mass(), model.omega_m(), d.gamma_m);
    let kappa = d.kappa;
    let t = model.config.bath.temperature;
    let coupling = 2.0 * HBAR * d.chi * d.chi * delta * photons;
    let cav = Complex64::new(delta * delta + kappa * kappa - omega * omega, -2.0 * kappa * omega);
    let mech = Complex64::new(omega * omega - wm * wm, omega * gm);
    let den = (coupling + m * mech * cav).norm_sqr();
    let radiation = 2.0 * kappa * HBAR * d.chi * d.chi * (kappa * kappa + omega * omega + delta * delta) * photons;
    let thermal = m * gm * 2.0 * K_B * t / HBAR * cav.norm_sqr();
    HBAR * (radiation + thermal) / den
}
