use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rabi_zigzag::criticality::{self, DEFAULT_BISECTION_TOL};
use rabi_zigzag::meanfield::{self, Displacements, MinimizeOptions};
use rabi_zigzag::model::{self, MomentumGrid};
use rabi_zigzag::observables::{self, Phase};
use rabi_zigzag::scan::{self, Axis, AxisSpec, GridSpec};
use rabi_zigzag::{bogoliubov, ModelParams};

fn params(g1: f64, ratio: f64, theta: f64, n: usize) -> ModelParams {
    ModelParams::new(1.0, 50.0, g1, ratio * 0.05, 0.05, theta, n).unwrap()
}

fn chain() -> impl Strategy<Value = usize> {
    prop_oneof![Just(6usize), Just(8), Just(10)]
}

fn config(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-6.0f64..6.0, 2 * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_symmetries(n in chain(), g1 in 0.3f64..0.9, ratio in 0.0f64..1.5, theta in -PI..PI, seed in config(10)) {
        let p = params(g1, ratio, theta, n);
        let d = Displacements::from_flat(&seed[..2 * n]);
        let e = meanfield::energy(&p, &d);
        prop_assert!((meanfield::energy(&p, &d.negated()) - e).abs() <= 1e-9 * e.abs());
        prop_assert!((meanfield::energy(&p.with_theta(-theta), &d.conjugated()) - e).abs() <= 1e-9 * e.abs());
        prop_assert!((meanfield::energy(&p, &d.shifted(2)) - e).abs() <= 1e-9 * e.abs());
    }

    #[test]
    fn currents_reverse_with_conjugation(n in chain(), seed in config(10)) {
        let d = Displacements::from_flat(&seed[..2 * n]);
        let (c, r) = (observables::currents(&d), observables::currents(&d.conjugated()));
        prop_assert!((c.i_odd + r.i_odd).abs() <= 1e-12 * c.max_abs().max(1.0));
        prop_assert!((c.i_even + r.i_even).abs() <= 1e-12 * c.max_abs().max(1.0));
        prop_assert!((c.i_total + r.i_total).abs() <= 1e-12 * c.max_abs().max(1.0));
        prop_assert_eq!(c.i_chiral, c.i_odd - c.i_even);
    }

    #[test]
    fn normal_phase_spectrum_is_positive_below_threshold(n in chain(), ratio in 0.0f64..2.0, theta in -PI..PI, frac in 0.05f64..0.95) {
        let p = params(0.0, ratio, theta, n);
        let g1c = criticality::critical_coupling_numeric(&p, DEFAULT_BISECTION_TOL).unwrap();
        let p = p.with_g1(frac * g1c);
        let form = model::realspace_np_form(&p);
        let s = bogoliubov::positive_spectrum(&form).unwrap();
        prop_assert_eq!(s.epsilons.len(), n);
        prop_assert!(s.lowest() > 0.0);
        let schur = bogoliubov::diagonalize_default(&form).unwrap();
        for (a, b) in s.epsilons.iter().zip(&schur.epsilons) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        // The quadratic zero-point energy is never above the classical minimum.
        prop_assert!(bogoliubov::ground_energy(&form, &s).unwrap() <= 1e-12);
    }

    #[test]
    fn closed_form_bands_on_every_sector(n in chain(), ratio in 0.0f64..2.0, frac in 0.0f64..0.99) {
        let p = params(0.0, ratio, FRAC_PI_2, n);
        let g1c = criticality::critical_coupling_numeric(&p, DEFAULT_BISECTION_TOL).unwrap();
        let p = p.with_g1(frac * g1c);
        for &k in MomentumGrid::new(n).ks() {
            let s = bogoliubov::diagonalize_default(&model::momentum_form(&p, k)).unwrap();
            let (plus, minus) = model::analytic_bands(&p, k).unwrap();
            prop_assert!((0.5 * s.epsilons[0] - plus).abs() <= 1e-10);
            prop_assert!((0.5 * s.epsilons[1] - minus).abs() <= 1e-10);
        }
    }
}

#[test]
fn minimizer_is_stationary_and_labels_are_sign_blind() {
    for (theta, ratio) in [(FRAC_PI_2, 0.05), (FRAC_PI_2, 0.8), (0.3, 0.2)] {
        let p = params(0.65, ratio, theta, 6);
        let s = meanfield::minimize(&p, &MinimizeOptions::default()).unwrap();
        let g = meanfield::gradient(&p, &s.displacements);
        assert!(g.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-6);
        let d = &s.displacements;
        let a = observables::classify(&p, d, &observables::currents(d)).map(|l| l.phase).ok();
        let b = observables::classify(&p, &d.negated(), &observables::currents(&d.negated())).map(|l| l.phase).ok();
        assert_eq!(a, b);
    }
}

#[test]
fn coarse_scan_has_expected_regions() {
    let spec = GridSpec::new(
        AxisSpec::new(Axis::J1OverJ2, 0.0, 0.3, 4),
        AxisSpec::new(Axis::G1, 0.3, 0.7, 5),
        params(0.65, 0.05, FRAC_PI_2, 6),
    );
    let d = scan::scan(&spec).unwrap();
    assert_eq!(d.cell(0, 0).label, Some(Phase::NP));
    assert_eq!(d.cell(0, 4).label, Some(Phase::MSR));
    assert_eq!(d.cell(3, 4).label, Some(Phase::FSR));
    assert!(d.boundaries.iter().any(|b| b.labels.0 == Phase::NP || b.labels.1 == Phase::NP));
    let tp = d.special.triple_point.unwrap();
    assert_abs_diff_eq!(tp, model::triple_point(&spec.template), epsilon = 1e-6);
}
