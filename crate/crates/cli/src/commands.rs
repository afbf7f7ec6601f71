use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rabi_zigzag::criticality::{self, ExponentFit, FitSpec, Side};
use rabi_zigzag::ed::{self, FockConfig, Solver};
use rabi_zigzag::meanfield::{self, MinimizeOptions};
use rabi_zigzag::model::{self, MomentumGrid};
use rabi_zigzag::observables;
use rabi_zigzag::scan::{self, Axis, AxisSpec, GridSpec};
use rabi_zigzag::{bogoliubov, ModelParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::failure::Failure;

/// More errored points than this fraction fails a sweep.
pub const MAX_ERROR_FRACTION: f64 = 0.01;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self, Failure> {
        let out = PathBuf::from(cfg.raw("out_dir"));
        fs::create_dir_all(&out)?;
        fs::write(out.join("resolved.conf"), cfg.echo())?;
        Ok(Self { cfg, out })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}

fn model(cfg: &RunConfig) -> Result<ModelParams, Failure> {
    Ok(ModelParams::new(
        cfg.get("omega")?,
        cfg.get("delta")?,
        cfg.get("g1")?,
        cfg.get("j1")?,
        cfg.get("j2")?,
        cfg.angle("theta")?,
        cfg.get("n_cavities")?,
    )?)
}

fn minimize_options(cfg: &RunConfig) -> Result<MinimizeOptions, Failure> {
    Ok(MinimizeOptions {
        n_random: cfg.get("n_random")?,
        max_iter: cfg.get("max_iter")?,
        rng_seed: cfg.get("seed")?,
        ..MinimizeOptions::default()
    })
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn error_budget(what: &str, errored: usize, total: usize) -> Result<(), Failure> {
    if errored as f64 > MAX_ERROR_FRACTION * total as f64 {
        return Err(Failure::Numerical(format!("{errored} of {total} {what} failed")));
    }
    Ok(())
}

fn is_half_pi(theta: f64) -> bool {
    (theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12
}

pub fn bands(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let p = model(&ctx.cfg)?;
    let count: usize = ctx.cfg.get("bands_k_count")?;
    let ks: Vec<f64> = if count == 0 {
        MomentumGrid::new(p.n_cavities).ks().to_vec()
    } else {
        let h = std::f64::consts::FRAC_PI_2;
        (1..=count).map(|i| -h + 2.0 * h * i as f64 / count as f64).collect()
    };
    let analytic = is_half_pi(p.theta);
    let mut csv = String::from("k,eps_plus,eps_minus");
    if analytic {
        csv.push_str(",analytic_plus,analytic_minus,deviation");
    }
    csv.push('\n');
    for k in ks {
        // Positive-definite M: the upper half of the MLambda spectrum belongs to momentum k.
        let s = bogoliubov::positive_spectrum(&model::momentum_form(&p, k)).ok_or_else(|| {
            Failure::Numerical(format!("normal phase unstable at k = {k}: g1 = {} is past the critical coupling", p.g1))
        })?;
        let (plus, minus) = (s.epsilons[0], s.epsilons[1]);
        let _ = write!(csv, "{},{},{}", num(k), num(plus), num(minus));
        if analytic {
            let (a, b) = model::analytic_bands(&p, k)?;
            let (a, b) = (2.0 * a, 2.0 * b);
            let dev = (plus - a).abs().max((minus - b).abs());
            let _ = write!(csv, ",{},{},{}", num(a), num(b), num(dev));
        }
        csv.push('\n');
    }
    Ok(vec![ctx.write("bands.csv", &csv)?])
}

fn axis_spec(cfg: &RunConfig, prefix: &str) -> Result<AxisSpec, Failure> {
    let axis: Axis = cfg.get(prefix)?;
    let bound = |key: &str| -> Result<f64, Failure> {
        let key = format!("{prefix}_{key}");
        if axis == Axis::Theta {
            cfg.angle(&key)
        } else {
            cfg.get(&key)
        }
    };
    Ok(AxisSpec::new(axis, bound("min")?, bound("max")?, cfg.get(&format!("{prefix}_count"))?))
}

pub fn scan(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let cfg = &ctx.cfg;
    let mut spec = GridSpec::new(axis_spec(cfg, "axis1")?, axis_spec(cfg, "axis2")?, model(cfg)?);
    spec.minimize = minimize_options(cfg)?;
    spec.warm_start = cfg.bool("warm_start")?;
    spec.refine = cfg.bool("refine")?;
    let diagram = scan::scan(&spec)?;
    let files = vec![ctx.write("phase_diagram.csv", &diagram.to_csv())?, ctx.write("phase_diagram.json", &(diagram.to_json()? + "\n"))?];
    let errored = diagram.cells.iter().filter(|c| c.label_str() == "ERROR").count();
    error_budget("cells", errored, diagram.cells.len())?;
    Ok(files)
}

pub fn currents(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let cfg = &ctx.cfg;
    let p = model(cfg)?;
    let opts = minimize_options(cfg)?;
    let ratios = AxisSpec::new(
        Axis::J1OverJ2,
        cfg.get("currents_ratio_min")?,
        cfg.get("currents_ratio_max")?,
        cfg.get("currents_ratio_count")?,
    )
    .values();
    let points: Vec<(f64, f64)> =
        cfg.angle_list("currents_thetas")?.into_iter().flat_map(|t| ratios.iter().map(move |r| (t, *r))).collect();
    let rows: Vec<(String, f64, observables::CurrentReport)> = points
        .par_iter()
        .map(|&(theta, ratio)| {
            let q = p.with_theta(theta).with_ratio(ratio);
            match meanfield::minimize(&q, &opts) {
                Ok(s) => {
                    let c = observables::currents(&s.displacements);
                    let label = match observables::classify(&q, &s.displacements, &c) {
                        Ok(l) => l.phase.to_string(),
                        Err(_) => "UNCLASSIFIED".into(),
                    };
                    (label, s.energy, c)
                }
                Err(_) => ("ERROR".into(), f64::NAN, observables::CurrentReport { i_odd: f64::NAN, i_even: f64::NAN, i_chiral: f64::NAN, i_total: f64::NAN }),
            }
        })
        .collect();
    let mut csv = String::from("theta,j1_over_j2,label,E_g,I_O,I_E,I_C,I_T\n");
    for ((theta, ratio), (label, e, c)) in points.iter().zip(&rows) {
        let _ = writeln!(
            csv,
            "{},{},{label},{},{},{},{},{}",
            num(*theta),
            num(*ratio),
            num(*e),
            num(c.i_odd),
            num(c.i_even),
            num(c.i_chiral),
            num(c.i_total)
        );
    }
    let files = vec![ctx.write("currents.csv", &csv)?];
    let errored = rows.iter().filter(|r| r.0 == "ERROR").count();
    error_budget("points", errored, rows.len())?;
    Ok(files)
}

fn parse_side(s: &str) -> Result<Side, Failure> {
    match s.to_ascii_lowercase().as_str() {
        "below" => Ok(Side::Below),
        "above" => Ok(Side::Above),
        other => Err(Failure::Config(format!("key \"exp_sides\": unknown side {other:?}"))),
    }
}

pub fn exponents(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let cfg = &ctx.cfg;
    let mut p = model(cfg)?;
    match cfg.raw("exp_ratio") {
        "config" => {}
        "triple_point" => p = p.with_ratio(scan::locate_triple_point(&p)?),
        _ => p = p.with_ratio(cfg.get("exp_ratio")?),
    }
    let spec = FitSpec {
        window: (cfg.get("exp_window_lo")?, cfg.get("exp_window_hi")?),
        n_points: cfg.get("exp_points")?,
        g1c: Some(criticality::critical_coupling_numeric(&p, criticality::DEFAULT_BISECTION_TOL)?),
        minimize: minimize_options(cfg)?,
    };
    let modes: usize = cfg.get("exp_modes")?;
    let sides: Vec<Side> = cfg.list::<String>("exp_sides")?.iter().map(|s| parse_side(s)).collect::<Result<_, _>>()?;

    let mut csv = String::from("side,mode,g1c,gamma,log_prefactor,residual,closing\n");
    let mut per_side = Vec::new();
    for side in sides {
        let fits: Vec<ExponentFit> = criticality::fit_exponents(&p, side, &spec, modes)?;
        for f in &fits {
            let side_name = if f.side == Side::Below { "below" } else { "above" };
            let _ = writeln!(
                csv,
                "{side_name},{},{},{},{},{},{}",
                f.mode_index,
                num(f.g1c_est),
                num(f.gamma),
                num(f.log_prefactor),
                num(f.residual),
                f.is_closing()
            );
        }
        let closing = fits.iter().filter(|f| f.is_closing()).count();
        per_side.push(json!({ "side": side, "closing_modes": closing, "fits": fits }));
    }
    let doc = json!({
        "j1_over_j2": p.hopping_ratio(),
        "g1c": spec.g1c,
        "window": spec.window,
        "sides": per_side,
    });
    Ok(vec![ctx.write("exponents.csv", &csv)?, ctx.write_json("exponents.json", &doc)?])
}

fn fock_config(cfg: &RunConfig) -> Result<FockConfig, Failure> {
    let solver = match cfg.raw("ed_solver") {
        "auto" => Solver::Auto,
        "dense" => Solver::Dense,
        "lanczos" => Solver::Lanczos,
        other => return Err(Failure::Config(format!("key \"ed_solver\": unknown solver {other:?}"))),
    };
    Ok(FockConfig {
        n_max: cfg.get("ed_n_max")?,
        solver,
        tol: cfg.get("ed_tol")?,
        dim_cap: cfg.get("ed_dim_cap")?,
        second_state: cfg.bool("ed_second_state")?,
        ..FockConfig::default()
    })
}

/// `-N Delta / 2` plus the quadratic zero-point energy, when the normal phase is stable.
pub fn np_prediction(p: &ModelParams) -> Option<f64> {
    let form = model::realspace_np_form(p);
    let s = bogoliubov::positive_spectrum(&form)?;
    let e0 = bogoliubov::ground_energy(&form, &s).ok()?;
    Some(-0.5 * p.n_cavities as f64 * p.delta + e0)
}

pub fn ed(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let cfg = &ctx.cfg;
    let p = model(cfg)?;
    let fock = fock_config(cfg)?;
    let sweep_list: Vec<usize> = cfg.list("ed_sweep")?;
    let sweep = ed::cutoff_sweep(&p, &fock, &sweep_list, cfg.get("ed_sweep_tol")?)?;
    let (report, vector) = ed::ground_state_with_vector(&p, &fock)?;
    let monotone = sweep.windows(2).all(|w| w[1].energy <= w[0].energy + fock.tol * w[0].energy.abs().max(1.0));

    let mut csv = String::from("n_max,dim,energy,total_photons,delta,converged\n");
    for r in &sweep {
        let delta = r.delta.map(num).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{delta},{}", r.n_max, r.dim, num(r.energy), num(r.total_photons), r.converged);
    }
    let doc = json!({
        "report": report,
        "sweep": sweep,
        "variational_monotone": monotone,
        "np_prediction": np_prediction(&p),
    });
    let mut files = vec![ctx.write_json("ed_report.json", &doc)?, ctx.write("ed_sweep.csv", &csv)?];
    if cfg.bool("ed_dump_vector")? {
        let path = ctx.out.join("ed_ground.bin");
        let mut buf = Vec::with_capacity(16 + 16 * vector.len());
        ed::write_vector(&mut buf, p.n_cavities, fock.n_max, &vector)?;
        fs::write(&path, buf)?;
        files.push(path);
    }
    Ok(files)
}

pub fn triple_point(ctx: &Context) -> Result<Vec<PathBuf>, Failure> {
    let p = model(&ctx.cfg)?;
    let numeric = scan::locate_triple_point(&p)?;
    let at = p.with_ratio(numeric);
    let doc = json!({
        "n_cavities": p.n_cavities,
        "omega": p.omega,
        "j2": p.j2,
        "closed_form": model::triple_point(&p),
        "numeric": numeric,
        "g1c": criticality::sector_critical_coupling(&at, 0.0, criticality::DEFAULT_BISECTION_TOL)?,
        "meissner_momentum": scan::meissner_momentum(&at)?,
    });
    Ok(vec![ctx.write_json("triple_point.json", &doc)?])
}

pub fn relative(files: &[PathBuf], base: &Path) -> Vec<String> {
    files.iter().map(|f| f.strip_prefix(base).unwrap_or(f).display().to_string()).collect()
}
