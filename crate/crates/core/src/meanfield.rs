//! Mean-field ground-state energy of the displaced chain and its minimization.
//!
//! The order parameter is one complex displacement `alpha_n = A_n + i B_n` per
//! cavity. The energy functional is
//!
//! ```text
//! E_g = sum_n [ omega (A_n^2 + B_n^2) - 1/2 sqrt(Delta^2 + 16 g^2 A_n^2) ]
//!     - 2 J1 sum_n (A_n A_{n+1} + B_n B_{n+1})
//!     - 2 J2 sum_n (-1)^n [ cos(theta) (A_n A_{n+2} + B_n B_{n+2})
//!                         + sin(theta) (B_n A_{n+2} - B_{n+2} A_n) ]
//! ```
//!
//! with every sum running over all `N` cavities and periodic indices.
//! Minimization is multi-start BFGS with a backtracking line search, followed
//! by Newton polishing on the analytic Hessian.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, MomentumGrid};

pub const DEFAULT_RNG_SEED: u64 = 0x5eed_2024;

/// Per-cavity displacements `alpha_n = A_n + i B_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Displacements {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Displacements {
    pub fn zeros(n: usize) -> Self {
        Self { a: vec![0.0; n], b: vec![0.0; n] }
    }

    pub fn from_alphas(alphas: &[Complex64]) -> Self {
        Self { a: alphas.iter().map(|z| z.re).collect(), b: alphas.iter().map(|z| z.im).collect() }
    }

    /// Inverse of [`Displacements::to_flat`]: `[A_1..A_N, B_1..B_N]`.
    pub fn from_flat(x: &[f64]) -> Self {
        let n = x.len() / 2;
        Self { a: x[..n].to_vec(), b: x[n..].to_vec() }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.a.iter().chain(self.b.iter()).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn alpha(&self, i: usize) -> Complex64 {
        Complex64::new(self.a[i], self.b[i])
    }

    pub fn alphas(&self) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.alpha(i)).collect()
    }

    pub fn phase(&self, i: usize) -> f64 {
        self.b[i].atan2(self.a[i])
    }

    pub fn photon_number(&self, i: usize) -> f64 {
        self.a[i] * self.a[i] + self.b[i] * self.b[i]
    }

    pub fn max_photon_number(&self) -> f64 {
        (0..self.len()).map(|i| self.photon_number(i)).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(|x| x.is_finite())
    }

    pub fn negated(&self) -> Self {
        Self { a: self.a.iter().map(|x| -x).collect(), b: self.b.iter().map(|x| -x).collect() }
    }

    pub fn conjugated(&self) -> Self {
        Self { a: self.a.clone(), b: self.b.iter().map(|x| -x).collect() }
    }

    /// Cyclic relabelling `n -> n + shift`: entry `i` of the result is entry
    /// `i + shift` of `self`.
    pub fn shifted(&self, shift: usize) -> Self {
        let n = self.len();
        Self {
            a: (0..n).map(|i| self.a[(i + shift) % n]).collect(),
            b: (0..n).map(|i| self.b[(i + shift) % n]).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: self.a.iter().map(|x| s * x).collect(), b: self.b.iter().map(|x| s * x).collect() }
    }
}

/// Energy evaluated term by term from the functional in the module docs.
pub fn energy(p: &ModelParams, d: &Displacements) -> f64 {
    let n = p.n_cavities;
    assert_eq!(d.len(), n, "displacement length must equal n_cavities");
    let g2 = p.g() * p.g();
    let (cos_t, sin_t) = (p.theta.cos(), p.theta.sin());
    let (a, b) = (&d.a, &d.b);
    let mut e = 0.0;
    for i in 0..n {
        e += p.omega * (a[i] * a[i] + b[i] * b[i]) - 0.5 * (p.delta * p.delta + 16.0 * g2 * a[i] * a[i]).sqrt();
        let j = (i + 1) % n;
        e -= 2.0 * p.j1 * (a[i] * a[j] + b[i] * b[j]);
        let l = (i + 2) % n;
        e -= 2.0
            * p.j2
            * ModelParams::stagger(i)
            * (cos_t * (a[i] * a[l] + b[i] * b[l]) + sin_t * (b[i] * a[l] - b[l] * a[i]));
    }
    e
}

/// Analytic gradient `[dE/dA_1.., dE/dB_1..]`.
pub fn gradient(p: &ModelParams, d: &Displacements) -> Vec<f64> {
    Landscape::new(p).gradient(&d.to_flat())
}

/// Analytic Hessian in the flat `[A.., B..]` layout.
pub fn hessian(p: &ModelParams, d: &Displacements) -> DMatrix<f64> {
    Landscape::new(p).hessian(&d.to_flat())
}

/// `E_g = x^T Q x - 1/2 sum_n sqrt(Delta^2 + 16 g^2 A_n^2)` on flat vectors.
pub(crate) struct Landscape {
    n: usize,
    quad: DMatrix<f64>,
    delta2: f64,
    g2: f64,
}

impl Landscape {
    pub(crate) fn new(p: &ModelParams) -> Self {
        let n = p.n_cavities;
        let mut q = DMatrix::<f64>::zeros(2 * n, 2 * n);
        let (cos_t, sin_t) = (p.theta.cos(), p.theta.sin());
        let mut add = |r: usize, c: usize, v: f64| {
            q[(r, c)] += 0.5 * v;
            q[(c, r)] += 0.5 * v;
        };
        for i in 0..n {
            add(i, i, p.omega);
            add(n + i, n + i, p.omega);
            let j = (i + 1) % n;
            add(i, j, -2.0 * p.j1);
            add(n + i, n + j, -2.0 * p.j1);
            let l = (i + 2) % n;
            let s = -2.0 * p.j2 * ModelParams::stagger(i);
            add(i, l, s * cos_t);
            add(n + i, n + l, s * cos_t);
            // s sin(theta) (B_i A_l - B_l A_i)
            add(n + i, l, s * sin_t);
            add(n + l, i, -s * sin_t);
        }
        Self { n, quad: q, delta2: p.delta * p.delta, g2: p.g() * p.g() }
    }

    fn root(&self, a: f64) -> f64 {
        (self.delta2 + 16.0 * self.g2 * a * a).sqrt()
    }

    /// Energy of the all-zero configuration, `-N Delta / 2`.
    pub(crate) fn baseline(&self) -> f64 {
        -0.5 * self.n as f64 * self.delta2.sqrt()
    }

    /// `E_g - baseline`, written so that small condensation energies keep
    /// full relative precision.
    pub(crate) fn excess(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let quad = v.dot(&(&self.quad * &v));
        let delta = self.delta2.sqrt();
        let atomic: f64 = x[..self.n]
            .iter()
            .map(|&a| {
                let s = 16.0 * self.g2 * a * a;
                s / (self.root(a) + delta)
            })
            .sum();
        quad - 0.5 * atomic
    }

    #[cfg(test)]
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.baseline() + self.excess(x)
    }

    pub(crate) fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        let mut g = (&self.quad * &v) * 2.0;
        for i in 0..self.n {
            g[i] -= 8.0 * self.g2 * x[i] / self.root(x[i]);
        }
        g.as_slice().to_vec()
    }

    pub(crate) fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = &self.quad * 2.0;
        for i in 0..self.n {
            let r = self.root(x[i]);
            h[(i, i)] -= 8.0 * self.g2 * self.delta2 / (r * r * r);
        }
        h
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
struct LocalResult {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
}

/// BFGS with Armijo backtracking; plain gradient steps when the line search stalls.
fn bfgs(l: &Landscape, x0: &[f64], tol: f64, max_iter: usize) -> LocalResult {
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut f = l.excess(&x);
    let mut g = l.gradient(&x);
    let mut h = DMatrix::<f64>::identity(dim, dim);
    let mut first = true;
    let mut gd_step = 0.1;

    for _ in 0..max_iter {
        let gn = norm(&g);
        if gn <= tol {
            break;
        }
        let gv = DVector::from_column_slice(&g);
        let mut dir: Vec<f64> = (-(&h * &gv)).as_slice().to_vec();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 || !slope.is_finite() {
            h.fill_with_identity();
            dir = g.iter().map(|v| -v).collect();
            slope = -gn * gn;
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + t * di).collect();
            let ft = l.excess(&trial);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }

        let (xn, fnew) = match accepted {
            Some(v) => v,
            None => {
                // Fallback: adaptive steepest descent.
                let mut found = None;
                while gd_step > 1e-16 {
                    let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gd_step * gi).collect();
                    let ft = l.excess(&trial);
                    if ft < f {
                        found = Some((trial, ft));
                        gd_step *= 2.0;
                        break;
                    }
                    gd_step *= 0.25;
                }
                h.fill_with_identity();
                first = true;
                match found {
                    Some(v) => v,
                    None => break,
                }
            }
        };

        let gn_new = l.gradient(&xn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 && sy > 1e-14 * norm(&s) * norm(&y) {
            if first {
                h.fill_with_identity();
                h *= sy / dot(&y, &y);
                first = false;
            }
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H+ = H - rho (s y^T H + H y s^T) + (rho^2 y^T H y + rho) s s^T
            h -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            h += (&sv * sv.transpose()) * (rho * rho * yhy + rho);
        }
        x = xn;
        f = fnew;
        g = gn_new;
    }
    newton_polish(l, x)
}

/// Damped Newton iterations on the analytic Hessian while they keep reducing the gradient.
fn newton_polish(l: &Landscape, mut x: Vec<f64>) -> LocalResult {
    let mut g = l.gradient(&x);
    let mut gn = norm(&g);
    // Runs until the gradient stops shrinking: quadratic minima finish in a
    // few steps, quartic ones (exactly at a threshold) need many.
    for _ in 0..200 {
        if gn == 0.0 {
            break;
        }
        let h = l.hessian(&x);
        let Some(chol) = h.cholesky() else { break };
        let step = chol.solve(&DVector::from_column_slice(&g));
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-6 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - t * b).collect();
            let gt = l.gradient(&trial);
            let gtn = norm(&gt);
            if gtn < gn {
                accepted = Some((trial, gt, gtn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, gt, gtn)) = accepted else { break };
        x = xn;
        g = gt;
        gn = gtn;
    }
    let value = l.excess(&x);
    LocalResult { x, value, grad_norm: gn }
}

/// Smallest Hessian eigenvalue and its eigenvector.
fn softest_direction(l: &Landscape, x: &[f64]) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(l.hessian(x));
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// A labelled starting configuration.
#[derive(Clone, Debug)]
pub struct Seed {
    pub kind: String,
    pub displacements: Displacements,
}

/// Seed amplitude: the stationary displacement of a single cavity whose
/// frequency is lowered by the largest possible hopping gain `2(J1 + J2)`.
/// Reduces to the isolated-cavity value when both hoppings vanish.
pub fn seed_amplitude(p: &ModelParams) -> f64 {
    let w_eff = p.omega - 2.0 * (p.j1 + p.j2);
    let g2 = p.g() * p.g();
    if w_eff <= 0.0 || g2 == 0.0 {
        return 0.0;
    }
    let a2 = (16.0 * g2 * g2 / (w_eff * w_eff) - p.delta * p.delta) / (16.0 * g2);
    a2.max(0.0).sqrt()
}

/// Stationary `A^2` of an isolated cavity: `Delta (16 g1^4 - 1) / (16 g1^2 omega)`.
pub fn single_cavity_photon_number(p: &ModelParams) -> f64 {
    if p.g1 == 0.0 {
        return 0.0;
    }
    let g1sq = p.g1 * p.g1;
    (p.delta * (16.0 * g1sq * g1sq - 1.0) / (16.0 * g1sq * p.omega)).max(0.0)
}

/// Standard seed list: zero first, then the ordered structured ansatzes and
/// `n_random` uniform draws in the disk `|alpha| <= 2 A*`.
pub fn labelled_seeds(p: &ModelParams, n_random: usize, rng_seed: u64) -> Vec<Seed> {
    let n = p.n_cavities;
    let amp = seed_amplitude(p);
    let mut seeds = vec![Seed { kind: "zero".into(), displacements: Displacements::zeros(n) }];
    let is_even = |i: usize| (i + 1) % 2 == 0;
    let label = |i: usize| (i + 1) as f64;
    let push = |kind: String, f: &dyn Fn(usize) -> Complex64, seeds: &mut Vec<Seed>| {
        let alphas: Vec<Complex64> = (0..n).map(f).collect();
        seeds.push(Seed { kind, displacements: Displacements::from_alphas(&alphas) });
    };

    if amp > 0.0 {
        push("uniform+".into(), &|_| Complex64::new(amp, 0.0), &mut seeds);
        push("uniform-".into(), &|_| Complex64::new(-amp, 0.0), &mut seeds);

        let mut ks: Vec<f64> = Vec::new();
        for &k in MomentumGrid::new(n).ks() {
            for kk in [k, -k] {
                if !ks.iter().any(|q| (q - kk).abs() < 1e-12) {
                    ks.push(kk);
                }
            }
        }
        for &k in &ks {
            let wave = move |i: usize| Complex64::from_polar(amp, k * label(i));
            let flat = Complex64::new(amp, 0.0);
            push(format!("joint k={k:.6}"), &wave, &mut seeds);
            push(format!("even k={k:.6}"), &|i| if is_even(i) { wave(i) } else { flat }, &mut seeds);
            push(format!("odd k={k:.6}"), &|i| if is_even(i) { flat } else { wave(i) }, &mut seeds);
            push(
                format!("counter k={k:.6}"),
                &|i| if is_even(i) { wave(i) } else { wave(i).conj() },
                &mut seeds,
            );
        }

        // Alternating sign along one species, the other species uniform.
        let alt = |i: usize| if (i / 2) % 2 == 0 { amp } else { -amp };
        push("stagger odd".into(), &|i| Complex64::new(if is_even(i) { amp } else { alt(i) }, 0.0), &mut seeds);
        push("stagger even".into(), &|i| Complex64::new(if is_even(i) { alt(i) } else { amp }, 0.0), &mut seeds);
    }

    let radius = 2.0 * if amp > 0.0 { amp } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for r in 0..n_random {
        let alphas: Vec<Complex64> = (0..n)
            .map(|_| {
                let rad = radius * rng.gen::<f64>().sqrt();
                let ang = 2.0 * PI * rng.gen::<f64>();
                Complex64::from_polar(rad, ang)
            })
            .collect();
        seeds.push(Seed { kind: format!("random {r}"), displacements: Displacements::from_alphas(&alphas) });
    }
    seeds
}

/// Seed configurations without labels.
pub fn ansatz_seeds(p: &ModelParams, n_random: usize, rng_seed: u64) -> Vec<Displacements> {
    labelled_seeds(p, n_random, rng_seed).into_iter().map(|s| s.displacements).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Gradient-norm convergence threshold; `None` means `1e-10 * Delta`.
    pub tol_grad: Option<f64>,
    pub max_iter: usize,
    pub n_random: usize,
    pub rng_seed: u64,
    /// Energy window inside which minima count as degenerate; `None` means `1e-9 * Delta`.
    pub degeneracy_tol: Option<f64>,
    /// Skip the structured ansatz list and use only the zero seed plus random draws.
    pub random_only: bool,
    pub parallel: bool,
    /// Extra starting points appended after the standard seeds (warm starts).
    #[serde(skip)]
    pub extra_seeds: Vec<Displacements>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol_grad: None,
            max_iter: 10_000,
            n_random: 20,
            rng_seed: DEFAULT_RNG_SEED,
            degeneracy_tol: None,
            random_only: false,
            parallel: true,
            extra_seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub displacements: Displacements,
    pub energy: f64,
    pub grad_norm: f64,
    pub seed_id: usize,
    pub seed_kind: String,
    pub n_restarts: usize,
    pub rng_seed: u64,
}

/// Multi-start minimization of the mean-field energy.
///
/// Every seed is descended independently. Among converged results within the
/// degeneracy window of the lowest energy (the smaller of `degeneracy_tol` and
/// `1e-8` of the condensation energy), local minima are preferred and the
/// one with the largest `sum A_n` is reported, ties going to the lowest seed
/// index. A winner with a negative Hessian direction is pushed off the saddle
/// and re-descended.
pub fn minimize(p: &ModelParams, opts: &MinimizeOptions) -> Result<MeanFieldSolution> {
    p.validate()?;
    let tol = opts.tol_grad.unwrap_or(1e-10 * p.delta);
    let deg_tol = opts.degeneracy_tol.unwrap_or(1e-9 * p.delta);
    let land = Landscape::new(p);

    let mut seeds = if opts.random_only {
        let mut s = labelled_seeds(p, opts.n_random, opts.rng_seed);
        s.retain(|s| s.kind == "zero" || s.kind.starts_with("random"));
        s
    } else {
        labelled_seeds(p, opts.n_random, opts.rng_seed)
    };
    for (i, d) in opts.extra_seeds.iter().enumerate() {
        if d.len() == p.n_cavities && d.is_finite() {
            seeds.push(Seed { kind: format!("warm {i}"), displacements: d.clone() });
        }
    }

    let run = |s: &Seed| bfgs(&land, &s.displacements.to_flat(), tol, opts.max_iter);
    let mut results: Vec<LocalResult> = if opts.parallel {
        seeds.par_iter().map(run).collect()
    } else {
        seeds.iter().map(run).collect()
    };
    let mut kinds: Vec<String> = seeds.iter().map(|s| s.kind.clone()).collect();

    let hess_scale = land.hessian(&vec![0.0; 2 * p.n_cavities]).norm().max(1.0);
    let neg_tol = 1e-11 * hess_scale;

    for _round in 0..6 {
        let winner = select(&results, tol, deg_tol, &land, neg_tol)?;
        let (lowest, dir) = softest_direction(&land, &results[winner].x);
        if lowest >= -neg_tol {
            let r = &results[winner];
            return Ok(MeanFieldSolution {
                displacements: Displacements::from_flat(&r.x),
                energy: land.baseline() + r.value,
                grad_norm: r.grad_norm,
                seed_id: winner,
                seed_kind: kinds[winner].clone(),
                n_restarts: seeds.len(),
                rng_seed: opts.rng_seed,
            });
        }
        // Saddle: step off along the unstable direction both ways.
        let base = results[winner].x.clone();
        let eta = 1e-3 * (1.0 + norm(&base));
        for sign in [1.0, -1.0] {
            let start: Vec<f64> = base.iter().zip(&dir).map(|(x, v)| x + sign * eta * v).collect();
            results.push(bfgs(&land, &start, tol, opts.max_iter));
            kinds.push(format!("{} escape", kinds[winner]));
        }
        // Do not pick the saddle again.
        results[winner].value = f64::INFINITY;
    }
    let winner = select(&results, tol, deg_tol, &land, neg_tol)?;
    let r = &results[winner];
    Ok(MeanFieldSolution {
        displacements: Displacements::from_flat(&r.x),
        energy: land.baseline() + r.value,
        grad_norm: r.grad_norm,
        seed_id: winner,
        seed_kind: kinds[winner].clone(),
        n_restarts: seeds.len(),
        rng_seed: opts.rng_seed,
    })
}

fn select(results: &[LocalResult], tol: f64, deg_tol: f64, land: &Landscape, neg_tol: f64) -> Result<usize> {
    let converged: Vec<usize> =
        (0..results.len()).filter(|&i| results[i].grad_norm <= tol && results[i].value.is_finite()).collect();
    if converged.is_empty() {
        let best = results.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min);
        return Err(Error::ConvergenceFailure { best_grad_norm: best });
    }
    // Values are energies above the normal state. Near a threshold the whole
    // condensation energy can be smaller than `deg_tol`, so the window shrinks
    // with it.
    let e_min = converged.iter().map(|&i| results[i].value).fold(f64::INFINITY, f64::min);
    let deg_tol = deg_tol.min(1e-8 * e_min.abs());
    let window: Vec<usize> = converged.iter().copied().filter(|&i| results[i].value <= e_min + deg_tol).collect();
    let minima: Vec<usize> =
        window.iter().copied().filter(|&i| softest_direction(land, &results[i].x).0 >= -neg_tol).collect();
    let pool = if minima.is_empty() { &window } else { &minima };

    let n = results[0].x.len() / 2;
    let sum_a = |i: usize| results[i].x[..n].iter().sum::<f64>();
    let mut best = pool[0];
    for &i in &pool[1..] {
        let (si, sb) = (sum_a(i), sum_a(best));
        if si > sb + 1e-9 * (1.0 + sb.abs()) {
            best = i;
        }
    }
    Ok(best)
}
