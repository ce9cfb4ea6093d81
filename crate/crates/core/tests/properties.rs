mod common;

use common::{branch_at, finesse_for, s_q_without_gain};
use opmcool::params::{Model, SystemConfig};
use opmcool::spectrum::{denominator_d, Spectrum};
use opmcool::stability::{drift_matrix, eigen_check, routh_hurwitz};
use opmcool::steady_state::SteadyStateBranch;
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = (Model, SteadyStateBranch)> {
    (
        6.0f64..9.0,
        0.0f64..0.5,
        0.0f64..std::f64::consts::TAU,
        -6.0f64..-2.0,
        -1e8f64..1e8,
    )
        .prop_map(|(lk, gf, theta, lp, delta)| {
            let kappa = 10f64.powf(lk);
            let cfg = SystemConfig::reference(finesse_for(kappa))
                .with_opa(gf * kappa, theta)
                .with_power(10f64.powf(lp));
            let model = Model::new(cfg).unwrap();
            let branch = branch_at(delta, &model);
            (model, branch)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn routh_hurwitz_agrees_with_eigenvalues((model, b) in sample()) {
        let r = routh_hurwitz(&b, &model).unwrap();
        prop_assume!(r.max_real_eig.abs() >= 1e-6 * model.derived.kappa);
        prop_assert_eq!(r.rh_stable, r.eig_stable, "{:?} {:?}", model, r);
    }

    #[test]
    fn eigenvalues_sum_to_trace((model, b) in sample()) {
        let a = drift_matrix(&b, &model);
        let v = eigen_check(&a).unwrap();
        let sum: f64 = v.eigenvalues.iter().map(|z| z.re).sum();
        let scale = 2.0 * model.derived.kappa + model.derived.gamma_m;
        prop_assert!((sum - a.trace()).abs() <= 1e-9 * scale);
    }

    #[test]
    fn static_denominator_sign((model, b) in sample()) {
        let r = routh_hurwitz(&b, &model).unwrap();
        let d0 = denominator_d(0.0, &b, &model);
        prop_assert_eq!(d0.im, 0.0);
        // d(0) = −m·cond3
        let expected = -model.mass() * r.cond3;
        prop_assert!((d0.re - expected).abs() <= 1e-9 * d0.re.abs().max(expected.abs()));
    }

    #[test]
    fn spectrum_even_and_positive((model, b) in sample(), w in 0.0f64..1e9) {
        let sp = Spectrum::new(&b, &model);
        let (p, n) = (sp.point(w).unwrap(), sp.point(-w).unwrap());
        prop_assert!(p.s_q >= 0.0 && p.s_p >= 0.0);
        prop_assert!((p.s_q - n.s_q).abs() <= 1e-10 * p.s_q);
    }

    #[test]
    fn no_gain_matches_textbook_spectrum(lk in 6.0f64..9.0, lp in -6.0f64..-2.0, delta in -1e8f64..1e8, w in -1e9f64..1e9) {
        let kappa = 10f64.powf(lk);
        let model = Model::new(SystemConfig::reference(finesse_for(kappa)).with_power(10f64.powf(lp))).unwrap();
        let b = branch_at(delta, &model);
        let got = Spectrum::new(&b, &model).point(w).unwrap().s_q;
        let expected = s_q_without_gain(w, b.delta, b.c_s.norm_sqr(), &model);
        prop_assert!((got - expected).abs() <= 1e-10 * expected, "{} vs {}", got, expected);
    }
}
