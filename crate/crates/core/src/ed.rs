//! Exact diagonalization of the full chain with its two-level atoms.
//!
//! Each cavity has the local basis `l = 2 n + s` with photon number
//! `n = 0..=n_max` and spin `s` (0 down, 1 up), so the local dimension is
//! `2 (n_max + 1)`. A many-body index is `sum_c l_c d^c`: cavity-major,
//! spin-minor, little-endian (cavity 0 varies fastest).
//!
//! The Hamiltonian, with periodic boundaries, is
//!
//! ```text
//! sum_n [Delta/2 sigma_z + omega a^dag a + g (a + a^dag) sigma_x]
//!   - J1 sum_n (a_n^dag a_{n+1} + h.c.)
//!   - J2 sum_n ((-1)^n e^{i theta} a_n^dag a_{n+2} + h.c.)
//! ```
//!
//! It is never stored for large spaces; rows are gathered on the fly and
//! processed in parallel.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DEFAULT_DIM_CAP: u64 = 500_000;
pub const VECTOR_MAGIC: &[u8; 4] = b"RZED";
pub const VECTOR_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense below `dense_max`, Lanczos above.
    Auto,
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub n_max: usize,
    pub solver: Solver,
    /// Residual tolerance `||H v - E v|| <= tol * max(1, |E|)`.
    pub tol: f64,
    pub dim_cap: u64,
    pub dense_max: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Also compute the first excited state, to expose near-degenerate doublets.
    pub second_state: bool,
    /// Two states closer than this count as one degenerate ground level.
    pub degeneracy_tol: f64,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            n_max: 3,
            solver: Solver::Auto,
            tol: 1e-9,
            dim_cap: DEFAULT_DIM_CAP,
            dense_max: 2048,
            krylov_dim: 30,
            max_restarts: 400,
            second_state: false,
            degeneracy_tol: 1e-8,
        }
    }
}

/// `(2 (n_max + 1))^N`, or `None` on overflow.
pub fn hilbert_dimension(n_cavities: usize, n_max: usize) -> Option<u64> {
    let d = 2u64.checked_mul(n_max as u64 + 1)?;
    (0..n_cavities).try_fold(1u64, |acc, _| acc.checked_mul(d))
}

/// Matrix-free Hamiltonian on the truncated Fock space.
#[derive(Clone, Debug)]
pub struct FockOperator {
    n_cavities: usize,
    n_max: usize,
    local: usize,
    dim: usize,
    strides: Vec<usize>,
    omega: f64,
    half_delta: f64,
    g: f64,
    /// `(i, j, t)` for every term `t a_i^dag a_j`, both directions listed.
    hops: Vec<(usize, usize, Complex64)>,
}

impl FockOperator {
    pub fn new(p: &ModelParams, n_max: usize, dim_cap: u64) -> Result<Self> {
        p.validate()?;
        Self::chain(p, p.n_cavities, n_max, dim_cap)
    }

    fn chain(p: &ModelParams, n: usize, n_max: usize, dim_cap: u64) -> Result<Self> {
        let mut hops = Vec::with_capacity(4 * n);
        for i in 0..n {
            let j = (i + 1) % n;
            hops.push((i, j, Complex64::new(-p.j1, 0.0)));
            hops.push((j, i, Complex64::new(-p.j1, 0.0)));
            let l = (i + 2) % n;
            let t = p.nnn_amplitude(i);
            hops.push((i, l, t));
            hops.push((l, i, t.conj()));
        }
        Self::build(p, n, n_max, dim_cap, hops)
    }

    /// One isolated Rabi cavity with the couplings of `p`.
    pub fn single_cavity(p: &ModelParams, n_max: usize) -> Result<Self> {
        Self::build(p, 1, n_max, DEFAULT_DIM_CAP, Vec::new())
    }

    fn build(p: &ModelParams, n: usize, n_max: usize, cap: u64, hops: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        let dim = hilbert_dimension(n, n_max).unwrap_or(u64::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let local = 2 * (n_max + 1);
        let strides = (0..n).map(|c| local.pow(c as u32)).collect();
        Ok(Self {
            n_cavities: n,
            n_max,
            local,
            dim: dim as usize,
            strides,
            omega: p.omega,
            half_delta: 0.5 * p.delta,
            g: p.g(),
            hops,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn local_state(&self, idx: usize, c: usize) -> (usize, usize) {
        let l = (idx / self.strides[c]) % self.local;
        (l / 2, l % 2)
    }

    /// Photon number of cavity `c` in basis state `idx`.
    pub fn photons(&self, idx: usize, c: usize) -> usize {
        self.local_state(idx, c).0
    }

    /// Nonzero entries `(col, H[row, col])` of one row.
    fn row(&self, r: usize, out: &mut Vec<(usize, Complex64)>) {
        out.clear();
        let mut diag = 0.0;
        for c in 0..self.n_cavities {
            let (n, s) = self.local_state(r, c);
            let st = self.strides[c];
            diag += self.omega * n as f64 + if s == 1 { self.half_delta } else { -self.half_delta };
            // g (a + a^dag) sigma_x: flip the spin and move one photon.
            let flipped = if s == 1 { r - st } else { r + st };
            if n > 0 {
                out.push((flipped - 2 * st, Complex64::new(self.g * (n as f64).sqrt(), 0.0)));
            }
            if n < self.n_max {
                out.push((flipped + 2 * st, Complex64::new(self.g * ((n + 1) as f64).sqrt(), 0.0)));
            }
        }
        out.push((r, Complex64::new(diag, 0.0)));
        for &(i, j, t) in &self.hops {
            // <r| a_i^dag a_j |c>: c has one photon fewer at i and one more at j.
            let (ni, nj) = (self.photons(r, i), self.photons(r, j));
            if i == j || ni == 0 || nj == self.n_max {
                continue;
            }
            let c = r - 2 * self.strides[i] + 2 * self.strides[j];
            out.push((c, t * ((ni * (nj + 1)) as f64).sqrt()));
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_chunks_mut(4096).enumerate().for_each_init(Vec::new, |buf, (chunk, ys)| {
            let base = chunk * 4096;
            for (k, yr) in ys.iter_mut().enumerate() {
                self.row(base + k, buf);
                *yr = buf.iter().fold(Complex64::new(0.0, 0.0), |acc, (c, h)| acc + h * x[*c]);
            }
        });
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        let mut buf = Vec::new();
        for r in 0..self.dim {
            self.row(r, &mut buf);
            for &(c, h) in &buf {
                m[(r, c)] += h;
            }
        }
        m
    }

    /// `<v| a_i^dag a_j |v>`.
    pub fn correlator(&self, v: &[Complex64], i: usize, j: usize) -> Complex64 {
        (0..self.dim)
            .into_par_iter()
            .map(|r| {
                if i == j {
                    return v[r].norm_sqr() * self.photons(r, i) as f64 * Complex64::new(1.0, 0.0);
                }
                let (ni, nj) = (self.photons(r, i), self.photons(r, j));
                if ni == 0 || nj == self.n_max {
                    return Complex64::new(0.0, 0.0);
                }
                let c = r - 2 * self.strides[i] + 2 * self.strides[j];
                v[r].conj() * v[c] * ((ni * (nj + 1)) as f64).sqrt()
            })
            .reduce(|| Complex64::new(0.0, 0.0), |a, b| a + b)
    }

    /// `<v| sigma_z |v>` summed over cavities.
    pub fn total_sigma_z(&self, v: &[Complex64]) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|r| {
                let s: f64 = (0..self.n_cavities).map(|c| if self.local_state(r, c).1 == 1 { 1.0 } else { -1.0 }).sum();
                s * v[r].norm_sqr()
            })
            .sum()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x.conj() * y).reduce(|| Complex64::new(0.0, 0.0), |p, q| p + q)
}

fn norm(a: &[Complex64]) -> f64 {
    a.par_iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(alpha: f64, x: &mut [Complex64]) {
    x.par_iter_mut().for_each(|v| *v *= alpha);
}

fn orthogonalize(w: &mut [Complex64], against: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

/// Real, deterministic start vector with weight on every basis state.
fn start_vector(dim: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..dim).map(|i| Complex64::new(1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).sin(), 0.0)).collect();
    let n = norm(&v);
    scale(1.0 / n, &mut v);
    v
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Lowest eigenpair orthogonal to `deflate`, by explicitly restarted Lanczos
/// with full reorthogonalization inside each cycle.
pub fn lanczos_lowest(op: &FockOperator, deflate: &[Vec<Complex64>], cfg: &FockConfig) -> Result<Eigenpair> {
    let dim = op.dim();
    let m = cfg.krylov_dim.max(2).min(dim);
    let mut v = start_vector(dim);
    orthogonalize(&mut v, deflate);
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);

    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut iterations = 0;
    let mut last_residual = f64::INFINITY;
    for _ in 0..cfg.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w).re;
            alphas.push(a);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, deflate);
            let b = norm(&w);
            if j + 1 == m || b <= 1e-13 * a.abs().max(1.0) {
                break;
            }
            betas.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let k = alphas.len();
        let t = DMatrix::<f64>::from_fn(k, k, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, theta) =
            eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, v)| (i, *v)).unwrap();
        let y = eig.eigenvectors.column(idx);

        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        for (q, yq) in basis.iter().zip(y.iter()) {
            axpy(Complex64::new(*yq, 0.0), q, &mut x);
        }
        orthogonalize(&mut x, deflate);
        let nx = norm(&x);
        scale(1.0 / nx, &mut x);

        op.apply(&x, &mut w);
        iterations += 1;
        let rq = dot(&x, &w).re;
        axpy(Complex64::new(-rq, 0.0), &x, &mut w);
        orthogonalize(&mut w, deflate);
        last_residual = norm(&w);
        if last_residual <= cfg.tol * rq.abs().max(1.0) {
            return Ok(Eigenpair { value: rq, vector: x, iterations, residual: last_residual });
        }
        let _ = theta;
        v = x;
    }
    Err(Error::NoConvergence { iterations, residual: last_residual })
}

/// The `count` lowest eigenpairs of the dense matrix.
fn dense_lowest(op: &FockOperator, count: usize) -> Vec<Eigenpair> {
    let eig = SymmetricEigen::new(op.to_dense());
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    order
        .into_iter()
        .take(count)
        .map(|i| {
            let mut vector: Vec<Complex64> = eig.eigenvectors.column(i).iter().copied().collect();
            // Fix the global phase: largest component real and positive.
            let big = vector.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
            let ph = big.conj() / big.norm();
            vector.iter_mut().for_each(|z| *z *= ph);
            Eigenpair { value: eig.eigenvalues[i], vector, iterations: 0, residual: 0.0 }
        })
        .collect()
}

fn use_dense(op: &FockOperator, cfg: &FockConfig) -> bool {
    match cfg.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => op.dim() <= cfg.dense_max,
    }
}

/// Lowest one or two eigenpairs according to `cfg`.
pub fn lowest_states(op: &FockOperator, cfg: &FockConfig) -> Result<Vec<Eigenpair>> {
    let count = if cfg.second_state { 2 } else { 1 }.min(op.dim());
    if use_dense(op, cfg) {
        return Ok(dense_lowest(op, count));
    }
    let first = lanczos_lowest(op, &[], cfg)?;
    let mut out = vec![first];
    if count == 2 {
        let second = lanczos_lowest(op, &[out[0].vector.clone()], cfg)?;
        out.push(second);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateObservables {
    pub energy: f64,
    pub photon_numbers: Vec<f64>,
    /// `-2 Im <a_n^dag a_{n+1}>` for each of the `N` bonds.
    pub nn_currents: Vec<f64>,
    pub i_odd: f64,
    pub i_even: f64,
    pub i_chiral: f64,
    pub i_total: f64,
    pub sigma_z: f64,
}

pub fn observables(op: &FockOperator, energy: f64, v: &[Complex64]) -> StateObservables {
    let n = op.n_cavities();
    let photon_numbers: Vec<f64> = (0..n).map(|c| op.correlator(v, c, c).re).collect();
    let bond = |i: usize, j: usize| -2.0 * op.correlator(v, i, j).im;
    let nn_currents: Vec<f64> = (0..n).map(|i| if n > 1 { bond(i, (i + 1) % n) } else { 0.0 }).collect();
    let (mut i_odd, mut i_even) = (0.0, 0.0);
    if n > 2 {
        for i in 0..n {
            let c = bond(i, (i + 2) % n);
            if (i + 1) % 2 == 1 {
                i_odd += c;
            } else {
                i_even += c;
            }
        }
    }
    StateObservables {
        energy,
        photon_numbers,
        i_total: nn_currents.iter().sum(),
        nn_currents,
        i_odd,
        i_even,
        i_chiral: i_odd - i_even,
        sigma_z: op.total_sigma_z(v),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdReport {
    pub n_cavities: usize,
    pub n_max: usize,
    pub dim: u64,
    pub solver: String,
    pub iterations: usize,
    pub residual: f64,
    pub ground: StateObservables,
    /// First excited state, when requested.
    pub excited: Option<StateObservables>,
    /// Ground level treated as a doublet; the observables below then average both states.
    pub degenerate: bool,
    /// Observables of the ground level (the doublet average when degenerate).
    pub level: StateObservables,
    /// `E(n_max) - E(n_max - 1)`; absent when `n_max = 0`.
    pub convergence_delta: Option<f64>,
}

fn average(a: &StateObservables, b: &StateObservables) -> StateObservables {
    let mean = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect::<Vec<f64>>();
    StateObservables {
        energy: 0.5 * (a.energy + b.energy),
        photon_numbers: mean(&a.photon_numbers, &b.photon_numbers),
        nn_currents: mean(&a.nn_currents, &b.nn_currents),
        i_odd: 0.5 * (a.i_odd + b.i_odd),
        i_even: 0.5 * (a.i_even + b.i_even),
        i_chiral: 0.5 * (a.i_chiral + b.i_chiral),
        i_total: 0.5 * (a.i_total + b.i_total),
        sigma_z: 0.5 * (a.sigma_z + b.sigma_z),
    }
}

/// Ground state, observables and the cutoff convergence delta.
pub fn ground_state(p: &ModelParams, cfg: &FockConfig) -> Result<EdReport> {
    ground_state_with_vector(p, cfg).map(|(r, _)| r)
}

pub fn ground_state_with_vector(p: &ModelParams, cfg: &FockConfig) -> Result<(EdReport, Vec<Complex64>)> {
    let op = FockOperator::new(p, cfg.n_max, cfg.dim_cap)?;
    let (mut report, vector) = solve(&op, cfg)?;
    if cfg.n_max > 0 {
        let lower = FockConfig { n_max: cfg.n_max - 1, second_state: false, ..cfg.clone() };
        let op_lower = FockOperator::new(p, lower.n_max, cfg.dim_cap)?;
        let e_lower = lowest_states(&op_lower, &lower)?[0].value;
        report.convergence_delta = Some(report.ground.energy - e_lower);
    }
    Ok((report, vector))
}

/// Ground state of an arbitrary operator (no cutoff comparison).
pub fn solve(op: &FockOperator, cfg: &FockConfig) -> Result<(EdReport, Vec<Complex64>)> {
    let states = lowest_states(op, cfg)?;
    let dense = use_dense(op, cfg);
    let ground = observables(op, states[0].value, &states[0].vector);
    let excited = states.get(1).map(|s| observables(op, s.value, &s.vector));
    let degenerate = excited
        .as_ref()
        .is_some_and(|e| (e.energy - ground.energy).abs() <= cfg.degeneracy_tol * ground.energy.abs().max(1.0));
    let level = match (&excited, degenerate) {
        (Some(e), true) => average(&ground, e),
        _ => ground.clone(),
    };
    let report = EdReport {
        n_cavities: op.n_cavities(),
        n_max: op.n_max(),
        dim: op.dim() as u64,
        solver: if dense { "dense" } else { "lanczos" }.into(),
        iterations: states.iter().map(|s| s.iterations).sum(),
        residual: states.iter().map(|s| s.residual).fold(0.0, f64::max),
        ground,
        excited,
        degenerate,
        level,
        convergence_delta: None,
    };
    let vector = states.into_iter().next().unwrap().vector;
    Ok((report, vector))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_max: usize,
    pub dim: u64,
    pub energy: f64,
    pub total_photons: f64,
    /// Energy change from the previous cutoff in the sweep.
    pub delta: Option<f64>,
    /// `|delta| <= tol` with respect to the previous cutoff.
    pub converged: bool,
}

/// Ground energy and photon number against the cutoff.
pub fn cutoff_sweep(p: &ModelParams, cfg: &FockConfig, n_maxes: &[usize], tol: f64) -> Result<Vec<SweepRow>> {
    let mut rows: Vec<SweepRow> = Vec::with_capacity(n_maxes.len());
    for &n_max in n_maxes {
        let c = FockConfig { n_max, second_state: false, ..cfg.clone() };
        let op = FockOperator::new(p, n_max, cfg.dim_cap)?;
        let (report, _) = solve(&op, &c)?;
        let delta = rows.last().map(|r| report.ground.energy - r.energy);
        rows.push(SweepRow {
            n_max,
            dim: report.dim,
            energy: report.ground.energy,
            total_photons: report.ground.photon_numbers.iter().sum(),
            delta,
            converged: delta.is_some_and(|d| d.abs() <= tol),
        });
    }
    Ok(rows)
}

/// Write a state vector: `"RZED"`, then version, `N` and `n_max` as
/// little-endian `u32`, then `(re, im)` pairs as little-endian `f64`.
pub fn write_vector<W: Write>(mut w: W, n_cavities: usize, n_max: usize, v: &[Complex64]) -> io::Result<()> {
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&VECTOR_VERSION.to_le_bytes())?;
    w.write_all(&(n_cavities as u32).to_le_bytes())?;
    w.write_all(&(n_max as u32).to_le_bytes())?;
    for z in v {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`write_vector`]: `(N, n_max, vector)`.
pub fn read_vector<R: Read>(mut r: R) -> io::Result<(usize, usize, Vec<Complex64>)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != VECTOR_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let word = |k: usize| u32::from_le_bytes(header[4 * k..4 * k + 4].try_into().unwrap());
    if word(1) != VECTOR_VERSION {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("unsupported version {}", word(1))));
    }
    let (n, n_max) = (word(2) as usize, word(3) as usize);
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 16 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated vector"));
    }
    let v = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
        })
        .collect();
    Ok((n, n_max, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn params(delta: f64, g1: f64, j1: f64, j2: f64, theta: f64, n: usize) -> ModelParams {
        ModelParams { omega: 1.0, delta, g1, j1, j2, theta, n_cavities: n }
    }

    /// Four-site ring: too short for the model proper, small enough for dense checks.
    fn ring(p: &ModelParams, n_max: usize) -> FockOperator {
        FockOperator::chain(p, p.n_cavities, n_max, DEFAULT_DIM_CAP).unwrap()
    }

    #[test]
    fn dimensions_and_cap() {
        assert_eq!(hilbert_dimension(6, 3), Some(262_144));
        assert_eq!(hilbert_dimension(6, 0), Some(64));
        let p = params(10.0, 0.3, 0.1, 0.05, FRAC_PI_2, 6);
        assert!(matches!(FockOperator::new(&p, 4, DEFAULT_DIM_CAP), Err(Error::DimensionCap { dim: 1_000_000, .. })));
    }

    #[test]
    fn assembled_matrix_is_hermitian() {
        let p = params(5.0, 0.4, 0.1, 0.05, 0.9, 4);
        let op = ring(&p, 2);
        let h = op.to_dense();
        assert_eq!((&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0);
        // Matrix-free product agrees with the dense matrix.
        let x: Vec<Complex64> = (0..op.dim()).map(|i| Complex64::new((i as f64).cos(), (i as f64 * 0.3).sin())).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); op.dim()];
        op.apply(&x, &mut y);
        let want = &h * nalgebra::DVector::from_column_slice(&x);
        for (a, b) in y.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn trivial_limits() {
        let cfg = FockConfig { n_max: 0, ..Default::default() };
        let p = params(50.0, 0.65, 0.1, 0.05, FRAC_PI_2, 6);
        let r = ground_state(&p, &cfg).unwrap();
        assert_abs_diff_eq!(r.ground.energy, -150.0, epsilon = 1e-10);

        let free = params(50.0, 0.0, 0.0, 0.0, FRAC_PI_2, 6);
        let r = ground_state(&free, &FockConfig { n_max: 2, ..Default::default() }).unwrap();
        assert_abs_diff_eq!(r.ground.energy, -150.0, epsilon = 1e-9);
        assert!(r.ground.photon_numbers.iter().all(|n| n.abs() < 1e-12));
        assert_abs_diff_eq!(r.convergence_delta.unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn single_rabi_cavity_normal_regime() {
        let p = params(10.0, 0.3, 0.0, 0.0, 0.0, 6);
        let op = FockOperator::single_cavity(&p, 20).unwrap();
        let (r, _) = solve(&op, &FockConfig { n_max: 20, ..Default::default() }).unwrap();
        assert!(r.ground.photon_numbers[0] < 0.1);
        // Adiabatic estimate: -Delta/2 + (sqrt(1 - 4 g1^2) - 1) omega / 2, corrected at O(omega/Delta).
        let estimate = -5.0 + 0.5 * ((1.0f64 - 0.36).sqrt() - 1.0);
        assert!((r.ground.energy - estimate).abs() < 0.1 * estimate.abs().min(1.0));
    }

    #[test]
    fn lanczos_matches_dense() {
        let p = params(5.0, 0.4, 0.1, 0.05, 0.7, 4);
        let op = ring(&p, 2);
        let dense = FockConfig { solver: Solver::Dense, second_state: true, ..Default::default() };
        let lanczos = FockConfig { solver: Solver::Lanczos, second_state: true, ..Default::default() };
        let (a, _) = solve(&op, &dense).unwrap();
        let (b, _) = solve(&op, &lanczos).unwrap();
        assert_abs_diff_eq!(a.ground.energy, b.ground.energy, epsilon = 1e-9);
        assert_abs_diff_eq!(a.excited.unwrap().energy, b.excited.unwrap().energy, epsilon = 1e-7);
        for (x, y) in a.ground.photon_numbers.iter().zip(&b.ground.photon_numbers) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-7);
        }
    }

    #[test]
    fn flux_reversal_flips_currents() {
        // A four-site ring has no net flux, so this needs six sites.
        let cfg = FockConfig { n_max: 1, solver: Solver::Lanczos, ..Default::default() };
        let p = params(5.0, 0.6, 0.02, 0.2, 0.8, 6);
        let (a, _) = solve(&FockOperator::new(&p, 1, DEFAULT_DIM_CAP).unwrap(), &cfg).unwrap();
        let (b, _) = solve(&FockOperator::new(&p.with_theta(-0.8), 1, DEFAULT_DIM_CAP).unwrap(), &cfg).unwrap();
        assert_abs_diff_eq!(a.ground.energy, b.ground.energy, epsilon = 1e-9);
        assert!(a.ground.i_odd.abs() > 1e-6);
        assert_abs_diff_eq!(a.ground.i_odd, -b.ground.i_odd, epsilon = 1e-7);
        assert_abs_diff_eq!(a.ground.i_even, -b.ground.i_even, epsilon = 1e-7);
    }

    #[test]
    fn cutoff_sweep_is_variational() {
        let p = params(5.0, 0.45, 0.1, 0.05, FRAC_PI_2, 6);
        let rows = cutoff_sweep(&p, &FockConfig::default(), &[0, 1, 2], 1e-6).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-9);
        }
        let free = params(5.0, 0.0, 0.1, 0.05, FRAC_PI_2, 6);
        let rows = cutoff_sweep(&free, &FockConfig::default(), &[0, 1], 1e-9).unwrap();
        assert!(rows[1].converged);
    }

    #[test]
    fn vector_round_trip() {
        let v: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, -0.5 * i as f64)).collect();
        let mut buf = Vec::new();
        write_vector(&mut buf, 6, 3, &v).unwrap();
        assert_eq!(&buf[..4], b"RZED");
        assert_eq!(buf.len(), 16 + 16 * 10);
        let (n, m, w) = read_vector(&buf[..]).unwrap();
        assert_eq!((n, m), (6, 3));
        assert_eq!(v, w);
        assert!(read_vector(&b"XXXX0000000000000000"[..]).is_err());
    }
}
