//! Photon currents, photon-number profiles and phase classification.
//!
//! Cavity `i` (0-based) is site `n = i + 1`; odd `n` belongs to the lower
//! species, even `n` to the upper one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::Displacements;
use crate::model::ModelParams;

pub const PHOTON_TOL: f64 = 1e-8;
pub const CURRENT_REL_TOL: f64 = 1e-6;
pub const ANGLE_TOL: f64 = 1e-6;
/// A species current below this fraction of the other species' current counts
/// as absent when telling OCSR and ECSR apart. The NN bonds leak a small
/// induced current into the passive species (about 2e-6 of the active one at
/// `J1/J2 = 0.05`), so the absolute current threshold alone is too strict.
pub const DOMINANCE_RATIO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub i_odd: f64,
    pub i_even: f64,
    pub i_chiral: f64,
    pub i_total: f64,
}

impl CurrentReport {
    pub fn max_abs(&self) -> f64 {
        [self.i_odd, self.i_even, self.i_chiral, self.i_total].iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// `-2 (A_i B_j - B_i A_j)`, the mean-field value of `-2 Im<a_i^dag a_j>`.
fn bond(d: &Displacements, i: usize, j: usize) -> f64 {
    -2.0 * (d.a[i] * d.b[j] - d.b[i] * d.a[j])
}

pub fn currents(d: &Displacements) -> CurrentReport {
    let n = d.len();
    let (mut i_odd, mut i_even, mut i_total) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let c = bond(d, i, (i + 2) % n);
        if (i + 1) % 2 == 1 {
            i_odd += c;
        } else {
            i_even += c;
        }
        i_total += bond(d, i, (i + 1) % n);
    }
    CurrentReport { i_odd, i_even, i_chiral: i_odd - i_even, i_total }
}

pub fn photon_numbers(d: &Displacements) -> Vec<f64> {
    (0..d.len()).map(|i| d.photon_number(i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    NP,
    FSR,
    MSR,
    OCSR,
    ECSR,
    OAFSR,
    EAFSR,
}

impl Phase {
    pub const ALL: [Phase; 7] = [Phase::NP, Phase::FSR, Phase::MSR, Phase::OCSR, Phase::ECSR, Phase::OAFSR, Phase::EAFSR];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::NP => "NP",
            Phase::FSR => "FSR",
            Phase::MSR => "MSR",
            Phase::OCSR => "OCSR",
            Phase::ECSR => "ECSR",
            Phase::OAFSR => "OAFSR",
            Phase::EAFSR => "EAFSR",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown phase label {s:?}")))
    }
}

/// Thresholds actually applied in one classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub photon: f64,
    pub current: f64,
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub thresholds: Thresholds,
}

/// Angular distance on the circle.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

fn collinear_same_sign(d: &Displacements, angle_tol: f64) -> bool {
    let phi0 = d.phase(0);
    (0..d.len()).all(|i| d.photon_number(i) > 0.0 && angle_gap(d.phase(i), phi0) <= angle_tol)
}

/// Real amplitudes along one species whose signs alternate from site to site.
fn species_alternates(d: &Displacements, parity: usize, angle_tol: f64) -> bool {
    let sites: Vec<usize> = (0..d.len()).filter(|i| (i + 1) % 2 == parity).collect();
    if sites.len() < 2 || sites.len() % 2 == 1 {
        return false;
    }
    let real = sites.iter().all(|&i| d.b[i].abs() <= angle_tol * d.a[i].abs() && d.a[i] != 0.0);
    real && sites.iter().zip(sites.iter().cycle().skip(1)).all(|(&i, &j)| d.a[i] * d.a[j] < 0.0)
}

/// Decision tree over the photon profile and the current pattern.
pub fn classify(params: &ModelParams, d: &Displacements, c: &CurrentReport) -> Result<PhaseLabel> {
    if d.len() != params.n_cavities {
        return Err(Error::InvalidParams(format!(
            "displacements have length {}, expected {}",
            d.len(),
            params.n_cavities
        )));
    }
    let thresholds =
        Thresholds { photon: PHOTON_TOL, current: CURRENT_REL_TOL * c.max_abs().max(1.0), angle: ANGLE_TOL };
    let ct = thresholds.current;
    let label = |phase| Ok(PhaseLabel { phase, thresholds });

    if d.max_photon_number() < thresholds.photon {
        return label(Phase::NP);
    }
    if collinear_same_sign(d, thresholds.angle) && c.i_chiral.abs() < ct {
        return label(Phase::FSR);
    }
    if c.i_even * c.i_odd < 0.0 && c.i_even.abs() >= ct && c.i_odd.abs() >= ct && c.i_total.abs() < ct {
        return label(Phase::MSR);
    }
    if c.i_odd.abs() >= ct && c.i_even.abs() < ct.max(DOMINANCE_RATIO * c.i_odd.abs()) {
        return label(Phase::OCSR);
    }
    if c.i_even.abs() >= ct && c.i_odd.abs() < ct.max(DOMINANCE_RATIO * c.i_even.abs()) {
        return label(Phase::ECSR);
    }
    if c.i_odd.abs() < ct && c.i_even.abs() < ct && c.i_total.abs() < ct {
        let odd = species_alternates(d, 1, thresholds.angle);
        let even = species_alternates(d, 0, thresholds.angle);
        match (odd, even) {
            (true, false) => return label(Phase::OAFSR),
            (false, true) => return label(Phase::EAFSR),
            _ => {}
        }
    }
    Err(Error::UnclassifiedPhase(format!(
        "i_odd={:.6e} i_even={:.6e} i_total={:.6e} max|alpha|^2={:.6e}",
        c.i_odd,
        c.i_even,
        c.i_total,
        d.max_photon_number()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{minimize, MinimizeOptions};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn solve(theta: f64, ratio: f64, n: usize) -> (ModelParams, Displacements) {
        let p = ModelParams::new(1.0, 50.0, 0.65, ratio * 0.05, 0.05, theta, n).unwrap();
        let s = minimize(&p, &MinimizeOptions::default()).unwrap();
        (p, s.displacements)
    }

    #[test]
    fn real_configuration_carries_no_current() {
        let d = Displacements { a: vec![1.0, -2.0, 3.0, 0.5, 0.1, 4.0], b: vec![0.0; 6] };
        let c = currents(&d);
        assert_eq!(c, CurrentReport { i_odd: 0.0, i_even: 0.0, i_chiral: 0.0, i_total: 0.0 });
    }

    #[test]
    fn chiral_identity_and_parity() {
        let alphas: Vec<Complex64> = (0..8).map(|i| Complex64::from_polar(1.0 + i as f64, 0.7 * i as f64)).collect();
        let d = Displacements::from_alphas(&alphas);
        let c = currents(&d);
        assert_eq!(c.i_chiral, c.i_odd - c.i_even);
        assert_eq!(currents(&d.negated()), c);
        let r = currents(&d.conjugated());
        assert_abs_diff_eq!(r.i_odd, -c.i_odd, epsilon = 1e-12);
        assert_abs_diff_eq!(r.i_total, -c.i_total, epsilon = 1e-12);
    }

    #[test]
    fn zero_is_normal_phase() {
        let p = ModelParams::default();
        let d = Displacements::zeros(6);
        assert!(photon_numbers(&d).iter().all(|x| *x == 0.0));
        assert_eq!(classify(&p, &d, &currents(&d)).unwrap().phase, Phase::NP);
    }

    #[test]
    fn phase_labels_round_trip() {
        for p in Phase::ALL {
            assert_eq!(p.as_str().parse::<Phase>().unwrap(), p);
        }
        assert!("XYZ".parse::<Phase>().is_err());
    }

    #[test]
    fn prototype_phases_n6() {
        let cases = [
            (FRAC_PI_4, 0.05, Phase::OCSR),
            (FRAC_PI_2, 0.05, Phase::MSR),
            (3.0 * FRAC_PI_4, 0.05, Phase::ECSR),
            (FRAC_PI_4, 0.8, Phase::FSR),
            (FRAC_PI_2, 0.8, Phase::FSR),
        ];
        for (theta, ratio, want) in cases {
            let (p, d) = solve(theta, ratio, 6);
            let c = currents(&d);
            assert_eq!(classify(&p, &d, &c).unwrap().phase, want, "theta={theta} ratio={ratio} {c:?}");
        }
    }

    #[test]
    fn current_patterns_n6() {
        let (_, d) = solve(FRAC_PI_2, 0.05, 6);
        let c = currents(&d);
        assert!(c.i_even * c.i_odd < 0.0);
        assert!(c.i_total.abs() <= 1e-8 * c.i_odd.abs().max(1.0));

        let (_, d) = solve(FRAC_PI_4, 0.05, 6);
        let c = currents(&d);
        assert!(c.i_odd < 0.0);
        assert!(c.i_even.abs() <= DOMINANCE_RATIO * c.i_odd.abs());

        let (_, d) = solve(FRAC_PI_2, 0.8, 6);
        let n = photon_numbers(&d);
        let odd: f64 = n.iter().step_by(2).sum();
        let even: f64 = n.iter().skip(1).step_by(2).sum();
        assert_abs_diff_eq!(odd, even, epsilon = 1e-6 * odd);
    }

    #[test]
    fn flux_reversal_flips_currents() {
        for theta in [FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4] {
            let (_, d) = solve(theta, 0.05, 6);
            let (_, e) = solve(-theta, 0.05, 6);
            let (c, r) = (currents(&d), currents(&e));
            let tol = 1e-6 * c.max_abs().max(1.0);
            assert!((c.i_odd + r.i_odd).abs() < tol, "theta={theta}");
            assert!((c.i_even + r.i_even).abs() < tol, "theta={theta}");
        }
    }
}
