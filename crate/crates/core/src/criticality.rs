//! Fluctuation spectra around mean-field minimizers, critical couplings and
//! scaling exponents of the vanishing excitation energies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bogoliubov::{self, Spectrum};
use crate::error::{Error, Result};
use crate::meanfield::{self, Displacements, MeanFieldSolution, MinimizeOptions};
use crate::model::{momentum_form, realspace_form, realspace_np_form, ModelParams, QuadraticForm};

/// Quadratic form of the fluctuations `a_n = alpha_n + a~_n` with the atom
/// adiabatically following the local field.
#[derive(Clone, Debug, PartialEq)]
pub struct SrForm {
    /// `sqrt(Delta^2 + 16 g^2 A_n^2)`.
    pub delta_prime: Vec<f64>,
    /// `g Delta / Delta'_n`.
    pub lambda: Vec<f64>,
    pub form: QuadraticForm,
}

/// Each cavity carries `-lambda_n^2 / Delta'_n (a~ + a~^dag)^2` on top of the
/// bare photon energy and the hoppings.
pub fn sr_form(p: &ModelParams, d: &Displacements) -> SrForm {
    let g = p.g();
    let delta_prime: Vec<f64> = d.a.iter().map(|a| (p.delta * p.delta + 16.0 * g * g * a * a).sqrt()).collect();
    let lambda: Vec<f64> = delta_prime.iter().map(|dp| g * p.delta / dp).collect();
    let squeeze: Vec<f64> = lambda.iter().zip(&delta_prime).map(|(l, dp)| l * l / dp).collect();
    SrForm { form: realspace_form(p, &squeeze), delta_prime, lambda }
}

/// Excitation energies of a form: the Hermitian route when `M` is positive
/// definite, the general `M Lambda` eigenproblem otherwise.
pub fn form_spectrum(form: &QuadraticForm) -> Result<Spectrum> {
    match bogoliubov::positive_spectrum(form) {
        Some(s) => Ok(s),
        None => bogoliubov::diagonalize_default(form),
    }
}

/// Minimize, expand around the minimizer and diagonalize.
pub fn spectrum_at(p: &ModelParams) -> Result<Spectrum> {
    spectrum_with(p, &MinimizeOptions::default()).map(|(_, s)| s)
}

pub fn spectrum_with(p: &ModelParams, opts: &MinimizeOptions) -> Result<(MeanFieldSolution, Spectrum)> {
    let sol = meanfield::minimize(p, opts)?;
    let spec = form_spectrum(&sr_form(p, &sol.displacements).form)?;
    Ok((sol, spec))
}

pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;

/// Bisect the sign change of `f` on `[lo, hi]`, expanding `hi` by doubling
/// when needed. `f(lo)` must be positive.
fn bisect_sign(f: impl Fn(f64) -> f64, lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut lo = lo;
    if !(f(lo) > 0.0) {
        return Err(Error::BisectionAmbiguous { lo, hi });
    }
    let mut tries = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 6 {
            return Err(Error::BisectionAmbiguous { lo, hi });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupling at which the lowest normal-phase excitation of the finite chain
/// closes, by bisection on the smallest eigenvalue of `M`.
pub fn critical_coupling_numeric(p: &ModelParams, tol: f64) -> Result<f64> {
    p.validate()?;
    bisect_sign(|g1| bogoliubov::min_form_eigenvalue(&realspace_np_form(&p.with_g1(g1))), 0.0, 0.5, tol)
}

/// Gap-closing coupling of the single momentum sector `k`.
pub fn sector_critical_coupling(p: &ModelParams, k: f64, tol: f64) -> Result<f64> {
    p.validate()?;
    bisect_sign(|g1| bogoliubov::min_form_eigenvalue(&momentum_form(&p.with_g1(g1), k)), 0.0, 0.5, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Below => -1.0,
            Side::Above => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub g1c_est: f64,
    pub gamma: f64,
    /// Intercept of `ln eps` against `ln |g1 - g1c|`.
    pub log_prefactor: f64,
    pub side: Side,
    pub window: (f64, f64),
    /// Largest deviation of a fitted point from the line, in `ln eps`.
    pub residual: f64,
    pub mode_index: usize,
    /// `(|g1 - g1c|, eps)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fitted exponents below this value describe a mode that stays gapped.
pub const CLOSING_GAMMA_MIN: f64 = 0.25;

impl ExponentFit {
    /// The mode softens as a power law toward the critical point.
    pub fn is_closing(&self) -> bool {
        self.gamma >= CLOSING_GAMMA_MIN
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitSpec {
    pub window: (f64, f64),
    pub n_points: usize,
    /// Known critical coupling; located by bisection when `None`.
    pub g1c: Option<f64>,
    pub minimize: MinimizeOptions,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self { window: (1e-4, 1e-2), n_points: 12, g1c: None, minimize: MinimizeOptions::default() }
    }
}

pub const MIN_FIT_POINTS: usize = 8;

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Least-squares slope and intercept of `y` against `x`, plus the largest residual.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let res = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).abs()).fold(0.0, f64::max);
    (slope, icpt, res)
}

/// Ascending excitation energies at `g1c + side * delta` for every delta in the window.
pub fn sweep_spectra(p: &ModelParams, side: Side, spec: &FitSpec) -> Result<(f64, Vec<(f64, Vec<f64>)>)> {
    let (lo, hi) = spec.window;
    if !(lo > 0.0 && hi > lo) || spec.n_points < 2 {
        return Err(Error::InvalidParams(format!("bad fit window ({lo}, {hi}) with {} points", spec.n_points)));
    }
    let g1c = match spec.g1c {
        Some(g) => g,
        None => critical_coupling_numeric(p, DEFAULT_BISECTION_TOL)?,
    };
    let rows: Result<Vec<(f64, Vec<f64>)>> = log_space(lo, hi, spec.n_points)
        .into_par_iter()
        .map(|d| {
            let q = p.with_g1(g1c + side.sign() * d);
            let (_, s) = spectrum_with(&q, &spec.minimize)?;
            Ok((d, s.ascending()))
        })
        .collect();
    Ok((g1c, rows?))
}

fn fit_mode(p: &ModelParams, g1c: f64, side: Side, spec: &FitSpec, rows: &[(f64, Vec<f64>)], mode: usize) -> Result<ExponentFit> {
    let floor = 1e-12 * p.delta;
    let points: Vec<(f64, f64)> =
        rows.iter().filter_map(|(d, e)| e.get(mode).copied().filter(|v| *v > floor).map(|v| (*d, v))).collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::FitError(format!(
            "only {} of {} points above the floor {floor:e} for mode {mode}",
            points.len(),
            rows.len()
        )));
    }
    let x: Vec<f64> = points.iter().map(|(d, _)| d.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let (gamma, log_prefactor, residual) = linear_fit(&x, &y);
    Ok(ExponentFit { g1c_est: g1c, gamma, log_prefactor, side, window: spec.window, residual, mode_index: mode, points })
}

/// Fit `eps_mode ~ |g1 - g1c|^gamma` for the `mode_index`-th lowest excitation.
pub fn fit_exponent(p: &ModelParams, side: Side, window: Option<(f64, f64)>, mode_index: usize) -> Result<ExponentFit> {
    let spec = FitSpec { window: window.unwrap_or((1e-4, 1e-2)), ..FitSpec::default() };
    let mut fits = fit_exponents(p, side, &spec, mode_index + 1)?;
    Ok(fits.swap_remove(mode_index))
}

/// Fits for the `n_modes` lowest excitations from one shared sweep.
pub fn fit_exponents(p: &ModelParams, side: Side, spec: &FitSpec, n_modes: usize) -> Result<Vec<ExponentFit>> {
    let (g1c, rows) = sweep_spectra(p, side, spec)?;
    (0..n_modes).map(|m| fit_mode(p, g1c, side, spec, &rows, m)).collect()
}

/// Number of excitations below `threshold` at `p`.
pub fn closing_modes(p: &ModelParams, threshold: f64) -> Result<usize> {
    Ok(spectrum_at(p)?.epsilons.iter().filter(|e| **e < threshold).count())
}
