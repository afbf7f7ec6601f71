//! Symplectic diagonalization of bosonic quadratic forms.
//!
//! Excitation energies are the eigenvalues of `M Lambda` with
//! `Lambda = diag(+1 x m, -1 x m)`. They are reported as-is (physical mode
//! energies). The closed-form band expressions in [`crate::model`] are half of
//! these values.

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuadraticForm;

/// Relative tolerance used when matching `+eps` with `-eps`.
pub const PAIRING_TOL: f64 = 1e-8;
/// Default imaginary-part tolerance, relative to the spectral norm of `M`.
pub const DEFAULT_IMAG_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Non-increasing excitation energies, one per mode.
    pub epsilons: Vec<f64>,
    pub stable: bool,
    pub max_imag: f64,
}

impl Spectrum {
    pub fn lowest(&self) -> f64 {
        self.epsilons.last().copied().unwrap_or(f64::NAN)
    }

    /// Energies sorted ascending.
    pub fn ascending(&self) -> Vec<f64> {
        let mut v = self.epsilons.clone();
        v.reverse();
        v
    }
}

/// `M Lambda`.
pub fn m_lambda(form: &QuadraticForm) -> DMatrix<Complex64> {
    let m = form.modes;
    let mut ml = form.matrix.clone();
    for j in m..2 * m {
        for i in 0..2 * m {
            ml[(i, j)] = -ml[(i, j)];
        }
    }
    ml
}

/// All `2m` eigenvalues of `M Lambda`, sorted by real part then imaginary part.
pub fn mlambda_eigenvalues(form: &QuadraticForm) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m_lambda(form), f64::EPSILON, 100_000).ok_or(Error::EigenSolver)?;
    let ev = schur.eigenvalues().ok_or(Error::EigenSolver)?;
    let mut v: Vec<Complex64> = ev.iter().copied().collect();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(v)
}

/// Spectral norm of the Hermitian matrix `M`.
pub fn spectral_norm(form: &QuadraticForm) -> f64 {
    let eig = SymmetricEigen::new(form.matrix.clone());
    eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Diagonalize with the default imaginary tolerance.
pub fn diagonalize_default(form: &QuadraticForm) -> Result<Spectrum> {
    diagonalize(form, None)
}

/// Diagonalize `form`. `tol_imag` defaults to `1e-9 * ||M||`.
///
/// Dynamical instability is reported through `stable = false`, not as an
/// error. A stable spectrum whose eigenvalues do not come in `+-` pairs is a
/// [`Error::PairingFailure`].
pub fn diagonalize(form: &QuadraticForm, tol_imag: Option<f64>) -> Result<Spectrum> {
    let m = form.modes;
    let norm = spectral_norm(form);
    let tol = tol_imag.unwrap_or(DEFAULT_IMAG_TOL * norm.max(f64::MIN_POSITIVE));
    let ev = mlambda_eigenvalues(form)?;
    let max_imag = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let stable = max_imag <= tol;

    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);

    if stable {
        let pair_tol = PAIRING_TOL * norm.max(1.0);
        let mismatch = (0..m).map(|i| (re[i] + re[2 * m - 1 - i]).abs()).fold(0.0, f64::max);
        if mismatch > pair_tol {
            return Err(Error::PairingFailure { mismatch });
        }
    }

    // Upper half of the sorted real parts; for a stable paired spectrum these
    // are the non-negative representatives.
    let mut epsilons: Vec<f64> = re[m..].iter().map(|x| if stable { x.max(0.0) } else { *x }).collect();
    epsilons.sort_by(|a, b| b.total_cmp(a));
    Ok(Spectrum { epsilons, stable, max_imag })
}

/// `1/2 (sum eps - sum_i Re A_ii)`: the ground energy of the normal-ordered form.
pub fn zero_point_offset(form: &QuadraticForm, spectrum: &Spectrum) -> Result<f64> {
    if !spectrum.stable {
        return Err(Error::Instability { max_imag: spectrum.max_imag });
    }
    let trace: f64 = (0..form.modes).map(|i| form.matrix[(i, i)].re).sum();
    Ok(0.5 * (spectrum.epsilons.iter().sum::<f64>() - trace))
}

/// Ground energy of `1/2 psi^dag M psi + offset`.
pub fn ground_energy(form: &QuadraticForm, spectrum: &Spectrum) -> Result<f64> {
    if !spectrum.stable {
        return Err(Error::Instability { max_imag: spectrum.max_imag });
    }
    Ok(0.5 * spectrum.epsilons.iter().sum::<f64>() + form.offset)
}

/// Smallest eigenvalue of the Hermitian matrix `M`. An excitation energy
/// reaches zero exactly where this crosses zero.
pub fn min_form_eigenvalue(form: &QuadraticForm) -> f64 {
    SymmetricEigen::new(form.matrix.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Spectrum of a positive-definite form through the Hermitian matrix
/// `L^dag Lambda L` with `M = L L^dag`, which is similar to `M Lambda`.
/// Small excitation energies come out with absolute rather than square-root
/// accuracy. Returns `None` when `M` is not positive definite.
pub fn positive_spectrum(form: &QuadraticForm) -> Option<Spectrum> {
    let m = form.modes;
    let eig = SymmetricEigen::new(form.matrix.clone());
    if eig.eigenvalues.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let mut l = eig.eigenvectors;
    for (j, v) in eig.eigenvalues.iter().enumerate() {
        l.column_mut(j).scale_mut(v.sqrt());
    }
    let mut ll = l.clone();
    for i in m..2 * m {
        for j in 0..2 * m {
            ll[(i, j)] = -ll[(i, j)];
        }
    }
    let h = l.adjoint() * ll;
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.truncate(m);
    Some(Spectrum { epsilons: ev, stable: true, max_imag: 0.0 })
}

/// True when every eigenvalue of `M Lambda` is real to `rel_tol * ||M||`.
/// Needs no pairing, so it also applies to single-momentum forms at generic flux.
pub fn is_dynamically_stable(form: &QuadraticForm, rel_tol: f64) -> Result<bool> {
    let norm = spectral_norm(form);
    let ev = mlambda_eigenvalues(form)?;
    Ok(ev.iter().all(|z| z.im.abs() <= rel_tol * norm.max(f64::MIN_POSITIVE)))
}
