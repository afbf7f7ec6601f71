//! Model parameters and the quadratic (normal-phase) representations of the
//! zigzag chain Hamiltonian.
//!
//! Cavities are labelled `n = 1..N` in the physics and stored 0-based, so the
//! cavity at slice index `i` has label `n = i + 1`. Odd labels form the lower
//! species, even labels the upper species. The staggered next-nearest-neighbour
//! hopping carries the phase `(-1)^n e^{i theta}` and all index arithmetic is
//! periodic.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the chain. Energies are in units of `omega` by
/// convention, but nothing here assumes `omega = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    /// Scaled coupling `g / sqrt(delta * omega)`.
    pub g1: f64,
    pub j1: f64,
    pub j2: f64,
    /// Staggered flux, wrapped into `(-pi, pi]`.
    pub theta: f64,
    pub n_cavities: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            delta: 50.0,
            g1: 0.3,
            j1: 0.0025,
            j2: 0.05,
            theta: FRAC_PI_2,
            n_cavities: 6,
        }
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    // rem_euclid maps -pi to +pi already; keep +pi as is.
    t
}

impl ModelParams {
    pub fn new(
        omega: f64,
        delta: f64,
        g1: f64,
        j1: f64,
        j2: f64,
        theta: f64,
        n_cavities: usize,
    ) -> Result<Self> {
        let p = Self { omega, delta, g1, j1, j2, theta: wrap_angle(theta), n_cavities };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.delta, self.g1, self.j1, self.j2, self.theta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.omega <= 0.0 || self.delta <= 0.0 {
            return Err(Error::InvalidParams("omega and delta must be positive".into()));
        }
        if self.j1 < 0.0 || self.j2 < 0.0 {
            return Err(Error::InvalidParams("hoppings must be non-negative".into()));
        }
        if self.g1 < 0.0 {
            return Err(Error::InvalidParams("g1 must be non-negative".into()));
        }
        if self.n_cavities < 6 || self.n_cavities % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "n_cavities must be even and >= 6, got {}",
                self.n_cavities
            )));
        }
        Ok(())
    }

    /// Bare coupling `g = g1 sqrt(delta omega)`.
    pub fn g(&self) -> f64 {
        self.g1 * (self.delta * self.omega).sqrt()
    }

    pub fn hopping_ratio(&self) -> f64 {
        self.j1 / self.j2
    }

    pub fn with_g1(mut self, g1: f64) -> Self {
        self.g1 = g1;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = wrap_angle(theta);
        self
    }

    /// Set `j1 = ratio * j2`.
    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.j1 = ratio * self.j2;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n_cavities = n;
        self
    }

    /// Sign `(-1)^n` of the NNN hopping leaving the cavity at 0-based index `i`.
    pub fn stagger(i: usize) -> f64 {
        if (i + 1) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Complex NNN amplitude `-j2 (-1)^n e^{i theta}` multiplying `a_n^dag a_{n+2}`.
    pub fn nnn_amplitude(&self, i: usize) -> Complex64 {
        -self.j2 * Self::stagger(i) * Complex64::from_polar(1.0, self.theta)
    }
}

/// Branch selector for the two intraspecies dispersion bands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Momenta `2 pi m / N` inside the reduced zone `(-pi/2, pi/2]`. The zone edge
/// `pi/2` appears once when `N` is a multiple of four.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    ks: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(n_cavities: usize) -> Self {
        let n = n_cavities as i64;
        let lo = -(n / 4) + if n % 4 == 0 { 1 } else { 0 };
        let hi = n / 4;
        let ks = (lo..=hi).map(|m| 2.0 * PI * m as f64 / n as f64).collect();
        Self { ks }
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn spacing(&self, n_cavities: usize) -> f64 {
        2.0 * PI / n_cavities as f64
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }
}

/// Bosonic quadratic form `H = 1/2 psi^dag M psi + offset` with
/// `psi = [a_1..a_m, a_1^dag..a_m^dag]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub modes: usize,
    pub matrix: DMatrix<Complex64>,
    pub offset: f64,
}

impl QuadraticForm {
    /// Assemble `[[A, B], [conj B, conj A]]` from its normal block `A` and
    /// anomalous block `B`.
    pub fn from_blocks(normal: &DMatrix<Complex64>, anomalous: &DMatrix<Complex64>, offset: f64) -> Self {
        let m = normal.nrows();
        assert_eq!(normal.shape(), (m, m));
        assert_eq!(anomalous.shape(), (m, m));
        let mut matrix = DMatrix::zeros(2 * m, 2 * m);
        matrix.view_mut((0, 0), (m, m)).copy_from(normal);
        matrix.view_mut((0, m), (m, m)).copy_from(anomalous);
        matrix.view_mut((m, 0), (m, m)).copy_from(&anomalous.map(|z| z.conj()));
        matrix.view_mut((m, m), (m, m)).copy_from(&normal.map(|z| z.conj()));
        Self { modes: m, matrix, offset }
    }

    pub fn normal_block(&self) -> DMatrix<Complex64> {
        self.matrix.view((0, 0), (self.modes, self.modes)).into_owned()
    }

    pub fn anomalous_block(&self) -> DMatrix<Complex64> {
        self.matrix.view((0, self.modes), (self.modes, self.modes)).into_owned()
    }

    fn scale(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
    }

    /// Largest `|M_ij - conj(M_ji)|` relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst / self.scale()
    }

    /// Largest relative violation of the particle-hole block structure.
    pub fn particle_hole_defect(&self) -> f64 {
        let m = self.modes;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let a = self.matrix[(i, j)];
                let b = self.matrix[(i, j + m)];
                worst = worst.max((self.matrix[(i + m, j + m)] - a.conj()).norm());
                worst = worst.max((self.matrix[(i + m, j)] - b.conj()).norm());
                worst = worst.max((b - self.matrix[(j, i + m)]).norm());
            }
        }
        worst / self.scale()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn has_particle_hole_structure(&self, tol: f64) -> bool {
        self.particle_hole_defect() <= tol
    }

    /// Block-diagonal direct sum of two forms; offsets add.
    pub fn direct_sum(&self, other: &QuadraticForm) -> QuadraticForm {
        let (m1, m2) = (self.modes, other.modes);
        let m = m1 + m2;
        let mut normal = DMatrix::zeros(m, m);
        let mut anomalous = DMatrix::zeros(m, m);
        normal.view_mut((0, 0), (m1, m1)).copy_from(&self.normal_block());
        normal.view_mut((m1, m1), (m2, m2)).copy_from(&other.normal_block());
        anomalous.view_mut((0, 0), (m1, m1)).copy_from(&self.anomalous_block());
        anomalous.view_mut((m1, m1), (m2, m2)).copy_from(&other.anomalous_block());
        QuadraticForm::from_blocks(&normal, &anomalous, self.offset + other.offset)
    }

    /// Relabel modes: new mode `i` is old mode `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> QuadraticForm {
        let m = self.modes;
        assert_eq!(perm.len(), m);
        let idx = |k: usize| if k < m { perm[k] } else { perm[k - m] + m };
        let matrix = DMatrix::from_fn(2 * m, 2 * m, |i, j| self.matrix[(idx(i), idx(j))]);
        QuadraticForm { modes: m, matrix, offset: self.offset }
    }
}

/// Intraspecies band `omega (1 - 2 g1^2) +/- 2 j2 cos(theta - 2k)`.
pub fn dispersion(p: &ModelParams, k: f64, branch: Branch) -> f64 {
    p.omega * (1.0 - 2.0 * p.g1 * p.g1) + branch.sign() * 2.0 * p.j2 * (p.theta - 2.0 * k).cos()
}

/// The 4x4 two-species form at momentum `k`, basis `[a_k, b_k, a_{-k}^dag, b_{-k}^dag]`.
///
/// The lower-right block holds the `-k` dispersions, so the particle-hole
/// block structure holds only where `omega_{k,+-} = omega_{-k,+-}` (k = 0, the
/// zone edge, or theta in {0, pi}). Summed over the grid the offsets reproduce
/// the real-space offset.
pub fn momentum_form(p: &ModelParams, k: f64) -> QuadraticForm {
    let hop = Complex64::new(-2.0 * p.j1 * k.cos(), 0.0);
    let pair = Complex64::new(-2.0 * p.omega * p.g1 * p.g1, 0.0);
    let d = [
        dispersion(p, k, Branch::Plus),
        dispersion(p, k, Branch::Minus),
        dispersion(p, -k, Branch::Plus),
        dispersion(p, -k, Branch::Minus),
    ];
    let z = Complex64::new(0.0, 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);
    #[rustfmt::skip]
    let matrix = DMatrix::from_row_slice(4, 4, &[
        c(d[0]), hop,    pair,   z,
        hop,    c(d[1]), z,      pair,
        pair,   z,      c(d[2]), hop,
        z,      pair,   hop,    c(d[3]),
    ]);
    let trace: f64 = d.iter().sum();
    let offset = -0.25 * trace - 2.0 * p.omega * p.g1 * p.g1;
    QuadraticForm { modes: 2, matrix, offset }
}

/// Real-space normal-phase form over all `N` cavities.
pub fn realspace_np_form(p: &ModelParams) -> QuadraticForm {
    let squeeze = vec![p.omega * p.g1 * p.g1; p.n_cavities];
    realspace_form(p, &squeeze)
}

/// Shared real-space builder: per-cavity term `omega a^dag a - c_n (a + a^dag)^2`
/// plus the NN and staggered NNN hoppings. The `(a + a^dag)^2` constant goes
/// into the offset.
pub(crate) fn realspace_form(p: &ModelParams, squeeze: &[f64]) -> QuadraticForm {
    let n = p.n_cavities;
    assert_eq!(squeeze.len(), n);
    let mut normal = DMatrix::<Complex64>::zeros(n, n);
    let mut anomalous = DMatrix::<Complex64>::zeros(n, n);
    for (i, &c) in squeeze.iter().enumerate() {
        normal[(i, i)] += Complex64::new(p.omega - 2.0 * c, 0.0);
        anomalous[(i, i)] += Complex64::new(-2.0 * c, 0.0);
        let j = (i + 1) % n;
        normal[(i, j)] -= p.j1;
        normal[(j, i)] -= p.j1;
        let l = (i + 2) % n;
        let t = p.nnn_amplitude(i);
        normal[(i, l)] += t;
        normal[(l, i)] += t.conj();
    }
    let trace: f64 = (0..n).map(|i| normal[(i, i)].re).sum();
    let offset = -0.5 * trace - squeeze.iter().sum::<f64>();
    QuadraticForm::from_blocks(&normal, &anomalous, offset)
}

fn is_half_pi(theta: f64) -> bool {
    (theta - FRAC_PI_2).abs() <= 1e-12
}

/// Closed-form bands at `theta = pi/2`, returned as `(eps_plus, eps_minus)`:
///
/// `4 eps^2 = omega^2 (1 - 4 g1^2) + 4 j1^2 cos^2 k + 4 j2^2 sin^2 2k
///            +/- 4 omega sqrt(j1^2 (1 - 2 g1^2)^2 cos^2 k + j2^2 (1 - 4 g1^2) sin^2 2k)`.
///
/// These are half the Bogoliubov eigenvalues of [`momentum_form`].
pub fn analytic_bands(p: &ModelParams, k: f64) -> Result<(f64, f64)> {
    if !is_half_pi(p.theta) {
        return Err(Error::Domain(format!("closed-form bands need theta = pi/2, got {}", p.theta)));
    }
    let (w, g2) = (p.omega, p.g1 * p.g1);
    let (c2, s2) = (k.cos().powi(2), (2.0 * k).sin().powi(2));
    let base = w * w * (1.0 - 4.0 * g2) + 4.0 * p.j1 * p.j1 * c2 + 4.0 * p.j2 * p.j2 * s2;
    let inner = p.j1 * p.j1 * (1.0 - 2.0 * g2).powi(2) * c2 + p.j2 * p.j2 * (1.0 - 4.0 * g2) * s2;
    let floor = -1e-14 * (w * w).max(base.abs());
    if inner < floor {
        return Err(Error::EvanescentMode { k, radicand: inner });
    }
    let split = 4.0 * w * inner.max(0.0).sqrt();
    let (plus, minus) = (base + split, base - split);
    if minus < floor {
        return Err(Error::EvanescentMode { k, radicand: minus });
    }
    Ok((0.5 * plus.max(0.0).sqrt(), 0.5 * minus.max(0.0).sqrt()))
}

/// Coupling at which the lower band closes at momentum `k` (theta = pi/2 line):
/// `sqrt[(omega^2 - 4(j1^2 cos^2 k + j2^2 sin^2 2k)) / (4 omega (omega + 2 j1 cos k))]`.
pub fn critical_coupling(p: &ModelParams, k: f64) -> Result<f64> {
    let w = p.omega;
    let num = w * w - 4.0 * (p.j1 * p.j1 * k.cos().powi(2) + p.j2 * p.j2 * (2.0 * k).sin().powi(2));
    let den = 4.0 * w * (w + 2.0 * p.j1 * k.cos());
    if num <= 0.0 || den <= 0.0 {
        return Err(Error::Domain(format!(
            "critical coupling radicand non-positive at k = {k} (num {num:e}, den {den:e})"
        )));
    }
    Ok((num / den).sqrt())
}

/// Hopping ratio `j1/j2` where the `k = 0` and `k = pi/3` closure lines meet:
/// `[sqrt(omega^2 + 12 j2^2) - omega] / (2 j2)`.
pub fn triple_point(p: &ModelParams) -> f64 {
    let w = p.omega;
    // Rationalized form avoids cancellation as j2 -> 0.
    6.0 * p.j2 / ((w * w + 12.0 * p.j2 * p.j2).sqrt() + w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_3;

    fn p(g1: f64, j1: f64, j2: f64, theta: f64) -> ModelParams {
        ModelParams::new(1.0, 50.0, g1, j1, j2, theta, 6).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        for n in [3, 4, 5, 7] {
            assert!(matches!(
                ModelParams::new(1.0, 50.0, 0.3, 0.1, 0.05, 0.0, n),
                Err(Error::InvalidParams(_))
            ));
        }
        assert!(ModelParams::new(1.0, 50.0, 0.3, -0.1, 0.05, 0.0, 6).is_err());
        assert!(ModelParams::new(0.0, 50.0, 0.3, 0.1, 0.05, 0.0, 6).is_err());
    }

    #[test]
    fn theta_is_wrapped() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
    }

    #[test]
    fn grid_points() {
        let g6 = MomentumGrid::new(6);
        assert_eq!(g6.len(), 3);
        for (a, b) in g6.ks().iter().zip([-FRAC_PI_3, 0.0, FRAC_PI_3]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        let g8 = MomentumGrid::new(8);
        let want = [-PI / 4.0, 0.0, PI / 4.0, FRAC_PI_2];
        assert_eq!(g8.len(), 4);
        for (a, b) in g8.ks().iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for n in [10, 12, 14, 16] {
            assert_eq!(MomentumGrid::new(n).len(), n / 2);
        }
    }

    #[test]
    fn dispersion_examples() {
        let a = p(0.0, 0.0, 0.05, 0.0);
        assert_abs_diff_eq!(dispersion(&a, 0.0, Branch::Plus), 1.1, epsilon = 1e-15);
        let b = p(0.0, 0.0, 0.05, FRAC_PI_2);
        assert_abs_diff_eq!(dispersion(&b, 0.0, Branch::Plus), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion(&b, 0.0, Branch::Minus), 1.0, epsilon = 1e-15);
        let c = p(0.3, 0.0, 0.05, FRAC_PI_2);
        let want = 0.82 - 0.1 * (FRAC_PI_2 - 2.0 * FRAC_PI_3).cos();
        assert_abs_diff_eq!(dispersion(&c, FRAC_PI_3, Branch::Minus), want, epsilon = 1e-14);
        assert_abs_diff_eq!(want, 0.733397, epsilon = 5e-7);
    }

    #[test]
    fn momentum_form_entries() {
        let f = momentum_form(&p(0.3, 0.1, 0.05, FRAC_PI_2), 0.0);
        for i in 0..4 {
            assert_abs_diff_eq!(f.matrix[(i, i)].re, 0.82, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(f.matrix[(0, 1)].re, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(f.matrix[(2, 3)].re, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(f.matrix[(0, 2)].re, -0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(f.matrix[(1, 3)].re, -0.18, epsilon = 1e-15);
        assert!(f.is_hermitian(1e-12));
        assert!(f.has_particle_hole_structure(1e-12));

        let free = momentum_form(&p(0.0, 0.1, 0.05, 0.4), 0.3);
        assert!(free.anomalous_block().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn realspace_limits() {
        let f = realspace_np_form(&p(0.3, 0.0, 0.0, 0.7));
        let a = f.normal_block();
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert_eq!(a[(i, j)].norm(), 0.0);
                }
            }
            assert_abs_diff_eq!(a[(i, i)].re, 0.82, epsilon = 1e-15);
        }
        let real = realspace_np_form(&p(0.3, 0.1, 0.05, 0.0));
        assert!(real.matrix.iter().all(|z| z.im == 0.0));
        assert!(real.has_particle_hole_structure(1e-12));
        assert!(real.is_hermitian(1e-12));
    }

    #[test]
    fn closed_form_examples() {
        let q = p(0.3, 0.1, 0.05, FRAC_PI_2);
        let (plus, minus) = analytic_bands(&q, 0.0).unwrap();
        assert_abs_diff_eq!(plus, 1.008f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(minus, 0.352f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(minus, 0.296648, epsilon = 1e-6);

        let free = p(0.0, 0.0, 0.0, FRAC_PI_2);
        let (a, b) = analytic_bands(&free, 0.4).unwrap();
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.5, epsilon = 1e-15);

        assert!(matches!(analytic_bands(&p(0.3, 0.1, 0.05, 0.3), 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            analytic_bands(&p(0.6, 0.1, 0.05, FRAC_PI_2), 0.0),
            Err(Error::EvanescentMode { .. })
        ));
    }

    #[test]
    fn band_closes_at_critical_coupling() {
        for k in [0.0, FRAC_PI_3, -FRAC_PI_3] {
            let q = p(0.3, 0.1, 0.05, FRAC_PI_2);
            let gc = critical_coupling(&q, k).unwrap();
            let (_, minus) = analytic_bands(&q.with_g1(gc), k).unwrap();
            assert!(minus < 1e-7, "k={k} minus={minus}");
        }
    }

    #[test]
    fn critical_coupling_examples() {
        assert_abs_diff_eq!(critical_coupling(&p(0.3, 0.0, 0.0, FRAC_PI_2), 0.0).unwrap(), 0.5, epsilon = 1e-15);
        let v = critical_coupling(&p(0.3, 0.1, 0.05, FRAC_PI_2), 0.0).unwrap();
        assert_abs_diff_eq!(v, (0.96f64 / 4.8).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.447214, epsilon = 1e-6);
        let w = critical_coupling(&p(0.3, 0.0025, 0.05, FRAC_PI_2), FRAC_PI_3).unwrap();
        assert_abs_diff_eq!(w, (0.99249375f64 / 4.01).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(w, 0.497498, epsilon = 1e-6);
        assert!(critical_coupling(&p(0.3, 0.6, 0.05, FRAC_PI_2), 0.0).is_err());
    }

    #[test]
    fn triple_point_examples() {
        let a = p(0.3, 0.0, 0.05, FRAC_PI_2);
        let r = triple_point(&a);
        assert_abs_diff_eq!(r, ((1.0f64 + 12.0 * 0.0025).sqrt() - 1.0) / 0.1, epsilon = 1e-13);
        assert_abs_diff_eq!(r, 0.148892, epsilon = 1e-6);
        let at = a.with_ratio(r);
        let g0 = critical_coupling(&at, 0.0).unwrap();
        let g3 = critical_coupling(&at, FRAC_PI_3).unwrap();
        assert_abs_diff_eq!(g0, g3, epsilon = 1e-10);

        let tiny = p(0.3, 0.0, 1e-6, FRAC_PI_2);
        assert_abs_diff_eq!(triple_point(&tiny), 3e-6, epsilon = 1e-15);
        let b = p(0.3, 0.0, 0.1, FRAC_PI_2);
        assert_abs_diff_eq!(triple_point(&b), (1.12f64.sqrt() - 1.0) / 0.2, epsilon = 1e-13);
    }

    #[test]
    fn band_sum_rule() {
        for theta in [0.0, 0.4, FRAC_PI_2, 2.5] {
            let q = p(0.37, 0.1, 0.05, theta);
            for k in MomentumGrid::new(8).ks() {
                let s = dispersion(&q, *k, Branch::Plus) + dispersion(&q, *k, Branch::Minus);
                assert_abs_diff_eq!(s, 2.0 * (1.0 - 2.0 * 0.37 * 0.37), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn critical_coupling_is_even() {
        let q = p(0.3, 0.07, 0.05, FRAC_PI_2);
        for k in [0.1, 0.5, 1.0, 1.4] {
            assert_eq!(critical_coupling(&q, k).unwrap(), critical_coupling(&q, -k).unwrap());
        }
    }
}
