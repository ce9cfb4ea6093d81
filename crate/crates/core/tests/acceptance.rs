//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::{branch_at, log_uniform, random_model, s_q_without_gain};
use opmcool::params::{Model, SystemConfig};
use opmcool::spectrum::{denominator_d, Spectrum};
use opmcool::stability::routh_hurwitz;
use opmcool::steady_state::{solve_branches, BranchSearch, SteadyStateBranch};
use opmcool::sweep::{min_from_rows, stability_boundaries, MinResult};
use opmcool::thermo::{variances, QuadOptions};
use opmcool::{run_sweep, SweepConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const GRID_POINTS: usize = 200;
/// Relative tolerance on the location of a minimum or boundary.
const LOCATION_TOL: f64 = 0.02;
const ONSET_TOL: f64 = 0.01;
const EQUIPARTITION_TOL: f64 = 1e-6;
const STABILITY_SAMPLES: usize = 10_000;
const MARGINAL_BAND: f64 = 1e-6;
const SIGN_ZERO_TOL: f64 = 1e-10;
const SPECTRUM_SAMPLES: usize = 1000;
const EVENNESS_TOL: f64 = 1e-10;
const NO_GAIN_TOL: f64 = 1e-10;
const CUTOFF_TOL: f64 = 1e-5;

struct Scenario {
    name: &'static str,
    system: SystemConfig,
    range: (f64, f64),
    t_eff: f64,
    t_tol: f64,
    delta0: f64,
}

fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "room-temperature cooling without amplifier",
            system: SystemConfig::reference(188.4),
            range: (1e7, 1e8),
            t_eff: 15.23,
            t_tol: 0.03,
            delta0: 4.9e7,
        },
        Scenario {
            name: "room-temperature cooling with amplifier",
            system: SystemConfig::reference(188.4).with_opa(3.5e7, 0.0),
            range: (5e7, 1e8),
            t_eff: 0.65,
            t_tol: 0.05,
            delta0: 6.7e7,
        },
        Scenario {
            name: "multistable cavity, lowest-shift branch",
            system: SystemConfig::reference(1884.0).with_opa(5e6, 0.75 * PI),
            range: (2.0e7, 3.0e7),
            t_eff: 0.265,
            t_tol: 0.05,
            delta0: 2.0e7,
        },
        Scenario {
            name: "gain above half the linewidth",
            system: SystemConfig::reference(3768.0).with_opa(1e7, 0.2467 + FRAC_PI_2),
            range: (2.0e7, 3.0e7),
            t_eff: 0.092,
            t_tol: 0.05,
            delta0: 2.13e7,
        },
        Scenario {
            name: "cryogenic cooling without amplifier",
            system: SystemConfig::reference(188.4).with_temperature(1.0),
            range: (1e7, 1e8),
            t_eff: 0.051,
            t_tol: 0.05,
            delta0: 4.9e7,
        },
        Scenario {
            name: "cryogenic cooling with amplifier",
            system: SystemConfig::reference(188.4)
                .with_opa(3.5e7, 0.0)
                .with_temperature(1.0),
            range: (5e7, 1e8),
            t_eff: 0.0044,
            t_tol: 0.10,
            delta0: 7.9e7,
        },
    ]
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want) / want
}

fn sweep_config(s: &Scenario, range: (f64, f64)) -> SweepConfig {
    SweepConfig::new(s.system, range.0, range.1, GRID_POINTS)
}

struct Solved {
    cfg: SweepConfig,
    rows: Vec<opmcool::SweepRow>,
    min: Option<MinResult>,
}

fn solve(s: &Scenario) -> Solved {
    let cfg = sweep_config(s, s.range);
    let rows = run_sweep(&cfg).expect("sweep");
    let min = min_from_rows(&cfg, &rows).ok();
    Solved { cfg, rows, min }
}

fn check_minimum(s: &Scenario, solved: &Solved) -> Outcome {
    let Some(m) = solved.min else {
        return Outcome {
            pass: false,
            detail: "no stable point in range".into(),
        };
    };
    let dt = rel(m.t_eff, s.t_eff);
    let dx = rel(m.delta0, s.delta0);
    Outcome {
        pass: dt.abs() <= s.t_tol && dx.abs() <= LOCATION_TOL,
        detail: format!(
            "min T_eff = {:.4e} K at delta0 = {:.4e} (want {:.4e} K ±{:.0}%, {:.3e} ±{:.0}%; off by {:+.2}%, {:+.2}%)",
            m.t_eff,
            m.delta0,
            s.t_eff,
            100.0 * s.t_tol,
            s.delta0,
            100.0 * LOCATION_TOL,
            100.0 * dt,
            100.0 * dx
        ),
    }
}

fn combine(parts: Vec<Outcome>) -> Outcome {
    Outcome {
        pass: parts.iter().all(|o| o.pass),
        detail: parts.into_iter().map(|o| o.detail).collect::<Vec<_>>().join("; "),
    }
}

fn amplified_room(s: &Scenario, solved: &Solved) -> Outcome {
    let min = check_minimum(s, solved);
    let boundary = match stability_boundaries(&solved.cfg, &solved.rows) {
        Ok(b) => match b.iter().find(|b| b.becomes_stable) {
            Some(b) => {
                let d = rel(b.delta0, 5.7e7);
                Outcome {
                    pass: d.abs() <= LOCATION_TOL && b.delta0 > solved.cfg.delta0_start,
                    detail: format!(
                        "stable above {:.4e} (want 5.7e7 ±2%; off by {:+.2}%)",
                        b.delta0,
                        100.0 * d
                    ),
                }
            }
            None => Outcome {
                pass: false,
                detail: "no stability onset".into(),
            },
        },
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    };
    let stable: Vec<(f64, f64)> = solved.rows.iter().filter_map(|r| r.r.map(|x| (r.delta0, x))).collect();
    let below = stable.iter().filter(|p| p.1 <= 1.0).count();
    let worst = stable
        .iter()
        .cloned()
        .fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let ratio = Outcome {
        pass: !stable.is_empty() && below == 0,
        detail: format!(
            "r <= 1 on {below} of {} stable points (min r = 1 {:+.3e} at delta0 = {:.5e})",
            stable.len(),
            worst.1 - 1.0,
            worst.0
        ),
    };
    combine(vec![min, boundary, ratio])
}

fn multistable(s: &Scenario, solved: &Solved) -> Outcome {
    let min = check_minimum(s, solved);
    let wide = sweep_config(s, (1.8e7, 3.0e7));
    let rows = run_sweep(&wide).expect("sweep");
    let most = rows.iter().filter_map(|r| r.branch_index).max().map_or(0, |i| i + 1);
    let multi = Outcome {
        pass: most >= 3,
        detail: format!("up to {most} coexisting branches over [1.8e7, 3.0e7]"),
    };
    let onset = match stability_boundaries(&wide, &rows) {
        Ok(b) => match b.iter().find(|b| b.becomes_stable) {
            Some(b) => {
                let d = rel(b.delta0, 1.847e7);
                Outcome {
                    pass: d.abs() <= ONSET_TOL,
                    detail: format!(
                        "lowest branch stable above {:.5e} (want 1.847e7 ±1%; off by {:+.2}%)",
                        b.delta0,
                        100.0 * d
                    ),
                }
            }
            None => Outcome {
                pass: false,
                detail: "no stability onset".into(),
            },
        },
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    };
    combine(vec![min, multi, onset])
}

fn equipartition() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..10 {
        let mut cfg = SystemConfig::reference(188.4).with_power(0.0);
        cfg.mirror.mass = log_uniform(&mut rng, 1e-15, 1e-9);
        cfg.mirror.omega_m = 2.0 * PI * log_uniform(&mut rng, 1e3, 1e7);
        cfg.mirror.quality = log_uniform(&mut rng, 10.0, 1e6);
        cfg.bath.temperature = log_uniform(&mut rng, 1e-3, 1e3);
        let model = Model::new(cfg).unwrap();
        let delta0 = rng.random_range(-1e8..1e8);
        let branch = solve_branches(delta0, &model, &BranchSearch::default())
            .unwrap()
            .branches[0];
        match variances(&branch, &model, &QuadOptions::default()) {
            Ok(tr) => {
                let e = rel(tr.t_eff, cfg.bath.temperature).abs().max((tr.r - 1.0).abs());
                worst = worst.max(e);
                if e > EQUIPARTITION_TOL {
                    failures.push(format!("{:?}: T_eff {} r {}", cfg.mirror, tr.t_eff, tr.r));
                }
            }
            Err(e) => failures.push(format!("{:?}: {e}", cfg.mirror)),
        }
    }
    for f in &failures {
        eprintln!("  equipartition failure: {f}");
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!("10 draws, worst relative deviation {worst:.2e} (tolerance {EQUIPARTITION_TOL:e})"),
    }
}

/// Random steady states used by the stability and sign criteria.
fn stability_samples() -> Vec<(Model, SteadyStateBranch)> {
    let mut rng = StdRng::seed_from_u64(2024);
    (0..STABILITY_SAMPLES)
        .map(|_| {
            let model = random_model(&mut rng);
            let delta = rng.random_range(-1e8..1e8);
            let branch = branch_at(delta, &model);
            (model, branch)
        })
        .collect()
}

fn stability_equivalence(samples: &[(Model, SteadyStateBranch)]) -> Outcome {
    let (mut compared, mut banded, mut disagreements) = (0, 0, 0);
    for (model, b) in samples {
        let r = routh_hurwitz(b, model).unwrap();
        if r.max_real_eig.abs() < MARGINAL_BAND * model.derived.kappa {
            banded += 1;
            continue;
        }
        compared += 1;
        if r.rh_stable != r.eig_stable {
            disagreements += 1;
            eprintln!(
                "  disagreement: config {:?} delta {:e} c_s {} cond ({:e}, {:e}, {:e}) max Re {:e}",
                model.config, b.delta, b.c_s, r.cond1, r.cond2, r.cond3, r.max_real_eig
            );
        }
    }
    Outcome {
        pass: disagreements == 0 && compared > 0,
        detail: format!("{compared} compared, {banded} inside the marginal band, {disagreements} disagreements"),
    }
}

fn static_sign(samples: &[(Model, SteadyStateBranch)]) -> Outcome {
    let (mut compared, mut mismatches) = (0, 0);
    for (model, b) in samples {
        let r = routh_hurwitz(b, model).unwrap();
        let d0 = denominator_d(0.0, b, model).re;
        let wm2 = model.omega_m().powi(2);
        let k = model.derived.kappa.powi(2) + b.delta.powi(2) - 4.0 * model.config.opa.gain.powi(2);
        let scale = wm2 * k.abs() + r.sigma.abs();
        if r.cond3.abs() <= SIGN_ZERO_TOL * scale {
            continue;
        }
        compared += 1;
        if r.cond3.signum() != -d0.signum() {
            mismatches += 1;
            eprintln!("  sign mismatch: delta {:e} cond3 {:e} d(0) {:e}", b.delta, r.cond3, d0);
        }
    }
    Outcome {
        pass: mismatches == 0 && compared > 0,
        detail: format!("{compared} compared, {mismatches} mismatches"),
    }
}

fn optimal_branch(s: &Scenario, m: &MinResult) -> (Model, SteadyStateBranch) {
    let model = Model::new(s.system).unwrap();
    let states = solve_branches(m.delta0, &model, &BranchSearch::default()).unwrap();
    (model, states.branches[m.branch_index])
}

fn spectrum_properties(list: &[Scenario], solved: &[Solved]) -> Outcome {
    let mut rng = StdRng::seed_from_u64(99);
    let (mut worst_even, mut worst_oracle, mut negatives, mut missing) = (0.0f64, 0.0f64, 0, 0);
    for (s, sol) in list.iter().zip(solved) {
        let Some(m) = sol.min else {
            missing += 1;
            continue;
        };
        let (model, branch) = optimal_branch(s, &m);
        let sp = Spectrum::new(&branch, &model);
        let scale = model.omega_m().max(model.derived.kappa).max(branch.delta.abs());
        for _ in 0..SPECTRUM_SAMPLES {
            let w = scale * log_uniform(&mut rng, 1e-4, 1e2);
            let (p, n) = (sp.point(w).unwrap(), sp.point(-w).unwrap());
            if p.s_q < 0.0 || n.s_q < 0.0 {
                negatives += 1;
            }
            worst_even = worst_even.max((p.s_q - n.s_q).abs() / p.s_q);
        }

        // Same operating detuning with the amplifier switched off, and
        // switched almost off.
        for gain in [0.0, 1e-12 * model.derived.kappa] {
            let mut cfg = s.system;
            cfg.opa.gain = gain;
            let plain = Model::new(cfg).unwrap();
            let b = solve_branches(m.delta0, &plain, &BranchSearch::default())
                .unwrap()
                .branches[0];
            let sp = Spectrum::new(&b, &plain);
            for _ in 0..SPECTRUM_SAMPLES {
                let w = scale * log_uniform(&mut rng, 1e-4, 1e2) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let got = sp.point(w).unwrap().s_q;
                let want = s_q_without_gain(w, b.delta, b.c_s.norm_sqr(), &plain);
                worst_oracle = worst_oracle.max(((got - want) / want).abs());
            }
        }
    }
    Outcome {
        pass: missing == 0 && negatives == 0 && worst_even < EVENNESS_TOL && worst_oracle < NO_GAIN_TOL,
        detail: format!(
            "worst evenness {worst_even:.1e}, {negatives} negative values, worst deviation from the gain-free spectrum {worst_oracle:.1e}"
        ),
    }
}

fn quadrature_convergence(list: &[Scenario], solved: &[Solved]) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (s, sol) in list.iter().zip(solved) {
        let Some(m) = sol.min else {
            pass = false;
            continue;
        };
        let (model, branch) = optimal_branch(s, &m);
        let base = QuadOptions::default();
        let a = variances(&branch, &model, &base).unwrap();
        let b = variances(
            &branch,
            &model,
            &QuadOptions {
                tol: 0.5 * base.tol,
                ..base
            },
        )
        .unwrap();
        let c = variances(
            &branch,
            &model,
            &QuadOptions {
                cutoff_factor: 2.0 * base.cutoff_factor,
                ..base
            },
        )
        .unwrap();
        let tight = variances(
            &branch,
            &model,
            &QuadOptions {
                tol: 1e-3 * base.tol,
                ..base
            },
        )
        .unwrap();
        let allowed = a.integration_error_estimate * a.t_eff;
        let d_half = (b.t_eff - a.t_eff).abs();
        let d_tight = (tight.t_eff - a.t_eff).abs();
        let d_cut = rel(c.t_eff, a.t_eff).abs();
        let ok = d_half <= allowed && d_tight <= allowed && d_cut < CUTOFF_TOL;
        pass &= ok;
        lines.push(format!(
            "{:.1e} {:.1e} / {:.1e}, {:.1e}",
            d_half / a.t_eff,
            d_tight / a.t_eff,
            a.integration_error_estimate,
            d_cut
        ));
    }
    Outcome {
        pass,
        detail: format!(
            "(change at tol/2, change at tol/1000 / error estimate, cutoff change) per scenario: {}",
            lines.join(" | ")
        ),
    }
}

fn main() {
    let list = scenarios();
    let solved: Vec<Solved> = list.iter().map(solve).collect();
    let cryo = check_minimum(&list[5], &solved[5]);
    let ratio = match (solved[4].min, solved[5].min) {
        (Some(a), Some(b)) => {
            let q = a.t_eff / b.t_eff;
            let d = rel(q, 12.0);
            Outcome {
                pass: d.abs() <= 0.15,
                detail: format!("improvement over the plain cavity {q:.2}x (want 12 ±15%)"),
            }
        }
        _ => Outcome {
            pass: false,
            detail: "missing minimum".into(),
        },
    };
    let samples = stability_samples();
    let results: Vec<(usize, String, Outcome)> = vec![
        (1, list[0].name.into(), check_minimum(&list[0], &solved[0])),
        (2, list[1].name.into(), amplified_room(&list[1], &solved[1])),
        (3, list[2].name.into(), multistable(&list[2], &solved[2])),
        (4, list[3].name.into(), check_minimum(&list[3], &solved[3])),
        (5, list[4].name.into(), check_minimum(&list[4], &solved[4])),
        (6, list[5].name.into(), combine(vec![cryo, ratio])),
        (7, "equipartition without optical coupling".into(), equipartition()),
        (
            8,
            "Routh-Hurwitz agrees with eigenvalues".into(),
            stability_equivalence(&samples),
        ),
        (9, "static response sign identity".into(), static_sign(&samples)),
        (
            10,
            "spectrum evenness, positivity, gain-free limit".into(),
            spectrum_properties(&list, &solved),
        ),
        (
            11,
            "quadrature convergence".into(),
            quadrature_convergence(&list, &solved),
        ),
    ];

    let mut failed = 0;
    for (n, name, o) in &results {
        println!(
            "{} criterion {n:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
