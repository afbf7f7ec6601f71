//! Two-parameter grid scans, boundary refinement and special points.
//!
//! Cells are evaluated by anti-diagonal wavefronts: every cell on a wavefront
//! depends only on its left and lower neighbours, which sit on the previous
//! one. The result is therefore independent of the number of worker threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{form_spectrum, sector_critical_coupling, sr_form, DEFAULT_BISECTION_TOL};
use crate::error::{Error, Result};
use crate::meanfield::{minimize, Displacements, MinimizeOptions};
use crate::model::{ModelParams, MomentumGrid};
use crate::observables::{classify, currents, CurrentReport, Phase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    G1,
    J1OverJ2,
    Theta,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::G1 => "g1",
            Axis::J1OverJ2 => "j1_over_j2",
            Axis::Theta => "theta",
        }
    }

    pub fn apply(self, p: &ModelParams, value: f64) -> ModelParams {
        match self {
            Axis::G1 => p.with_g1(value),
            Axis::J1OverJ2 => p.with_ratio(value),
            Axis::Theta => p.with_theta(value),
        }
    }

    pub fn read(self, p: &ModelParams) -> f64 {
        match self {
            Axis::G1 => p.g1,
            Axis::J1OverJ2 => p.hopping_ratio(),
            Axis::Theta => p.theta,
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g1" => Ok(Axis::G1),
            "j1_over_j2" => Ok(Axis::J1OverJ2),
            "theta" => Ok(Axis::Theta),
            other => Err(Error::InvalidParams(format!("unknown axis {other:?}; expected g1, j1_over_j2 or theta"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(axis: Axis, min: f64, max: f64, count: usize) -> Self {
        Self { axis, min, max, count }
    }

    /// Point `i` of an evenly spaced axis; a single-point axis sits at `min`.
    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            return self.min;
        }
        if i + 1 == self.count {
            return self.max;
        }
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub template: ModelParams,
    pub minimize: MinimizeOptions,
    pub warm_start: bool,
    pub refine: bool,
}

impl GridSpec {
    pub fn new(axis1: AxisSpec, axis2: AxisSpec, template: ModelParams) -> Self {
        Self { axis1, axis2, template, minimize: MinimizeOptions::default(), warm_start: true, refine: true }
    }

    pub fn validate(&self) -> Result<()> {
        for a in [&self.axis1, &self.axis2] {
            if a.count == 0 {
                return Err(Error::InvalidParams(format!("axis {} needs at least 1 point", a.axis.name())));
            }
            if !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidParams(format!("axis {} has a non-finite range", a.axis.name())));
            }
        }
        if self.axis1.axis == self.axis2.axis {
            return Err(Error::InvalidParams("the two axes must differ".into()));
        }
        self.template.validate()?;
        for (a, b) in [(&self.axis1, &self.axis2), (&self.axis2, &self.axis1)] {
            for v in [a.min, a.max] {
                a.axis.apply(&b.axis.apply(&self.template, b.min), v).validate()?;
            }
        }
        Ok(())
    }

    pub fn params_at(&self, i1: usize, i2: usize) -> ModelParams {
        let p = self.axis1.axis.apply(&self.template, self.axis1.value(i1));
        self.axis2.axis.apply(&p, self.axis2.value(i2))
    }

    /// Same grid with the axes swapped.
    pub fn transposed(&self) -> Self {
        Self { axis1: self.axis2, axis2: self.axis1, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub i1: usize,
    pub i2: usize,
    pub x1: f64,
    pub x2: f64,
    pub label: Option<Phase>,
    pub error: Option<String>,
    pub energy: f64,
    pub max_alpha_sq: f64,
    pub currents: CurrentReport,
    pub min_eps: f64,
    pub displacements: Option<Displacements>,
}

impl Cell {
    /// Label as written to tables.
    pub fn label_str(&self) -> &str {
        match (&self.label, &self.error) {
            (Some(p), _) => p.as_str(),
            (None, Some(e)) if e.starts_with("no phase matched") => "UNCLASSIFIED",
            _ => "ERROR",
        }
    }

    pub fn max_alpha(&self) -> f64 {
        self.max_alpha_sq.sqrt()
    }
}

/// Everything computed at one parameter point.
#[derive(Clone, Debug)]
struct PointResult {
    label: std::result::Result<Phase, Error>,
    energy: f64,
    max_alpha_sq: f64,
    currents: CurrentReport,
    min_eps: f64,
    displacements: Option<Displacements>,
}

fn nan_currents() -> CurrentReport {
    CurrentReport { i_odd: f64::NAN, i_even: f64::NAN, i_chiral: f64::NAN, i_total: f64::NAN }
}

fn evaluate(p: &ModelParams, opts: &MinimizeOptions) -> PointResult {
    let sol = match minimize(p, opts) {
        Ok(s) => s,
        Err(e) => {
            return PointResult {
                label: Err(e),
                energy: f64::NAN,
                max_alpha_sq: f64::NAN,
                currents: nan_currents(),
                min_eps: f64::NAN,
                displacements: None,
            }
        }
    };
    let d = sol.displacements;
    let c = currents(&d);
    let min_eps = form_spectrum(&sr_form(p, &d).form).map(|s| s.lowest()).unwrap_or(f64::NAN);
    PointResult {
        label: classify(p, &d, &c).map(|l| l.phase),
        energy: sol.energy,
        max_alpha_sq: d.max_photon_number(),
        currents: c,
        min_eps,
        displacements: Some(d),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    /// Axis along which the boundary was bisected.
    pub axis: Axis,
    /// Value of the other axis.
    pub fixed: f64,
    pub location: f64,
    /// Final bracketing interval along `axis`.
    pub interval: (f64, f64),
    pub labels: (Phase, Phase),
    pub order: Order,
    /// `max |alpha_n|` on either side of the final interval.
    pub max_alpha: (f64, f64),
    /// `I_C` on either side of the final interval.
    pub i_chiral: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpecialPoints {
    pub triple_point: Option<f64>,
    pub theta_c1: Option<f64>,
    pub theta_c2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub labels: (Phase, Phase),
    pub points: Vec<BoundaryPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub spec: GridSpec,
    /// Row-major in `(i1, i2)`.
    pub cells: Vec<Cell>,
    pub boundaries: Vec<Boundary>,
    /// Boundary refinements that failed, with their reason.
    pub refinement_errors: Vec<String>,
    pub special: SpecialPoints,
}

impl PhaseDiagram {
    pub fn cell(&self, i1: usize, i2: usize) -> &Cell {
        &self.cells[i1 * self.spec.axis2.count + i2]
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{},{},label,E_g,max_alpha_sq,I_O,I_E,I_C,I_T,min_eps\n",
            self.spec.axis1.axis.name(),
            self.spec.axis2.axis.name()
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.x1,
                c.x2,
                c.label_str(),
                c.energy,
                c.max_alpha_sq,
                c.currents.i_odd,
                c.currents.i_even,
                c.currents.i_chiral,
                c.currents.i_total,
                c.min_eps
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParams(format!("serialization failed: {e}")))
    }
}

fn cell_from(spec: &GridSpec, i1: usize, i2: usize, r: PointResult) -> Cell {
    let (label, error) = match r.label {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Cell {
        i1,
        i2,
        x1: spec.axis1.value(i1),
        x2: spec.axis2.value(i2),
        label,
        error,
        energy: r.energy,
        max_alpha_sq: r.max_alpha_sq,
        currents: r.currents,
        min_eps: r.min_eps,
        displacements: r.displacements,
    }
}

/// Minimize, classify and record every grid cell, then refine boundaries.
pub fn scan(spec: &GridSpec) -> Result<PhaseDiagram> {
    spec.validate()?;
    let (n1, n2) = (spec.axis1.count, spec.axis2.count);
    let mut cells: Vec<Option<Cell>> = vec![None; n1 * n2];

    for wave in 0..(n1 + n2 - 1) {
        let members: Vec<(usize, usize)> =
            (0..n1).filter(|&i1| wave >= i1 && wave - i1 < n2).map(|i1| (i1, wave - i1)).collect();
        let done: Vec<Cell> = members
            .par_iter()
            .map(|&(i1, i2)| {
                let mut opts = spec.minimize.clone();
                if spec.warm_start {
                    let neighbours = [(i1.checked_sub(1), Some(i2)), (Some(i1), i2.checked_sub(1))];
                    for (a, b) in neighbours {
                        if let (Some(a), Some(b)) = (a, b) {
                            if let Some(d) = cells[a * n2 + b].as_ref().and_then(|c| c.displacements.clone()) {
                                opts.extra_seeds.push(d);
                            }
                        }
                    }
                }
                cell_from(spec, i1, i2, evaluate(&spec.params_at(i1, i2), &opts))
            })
            .collect();
        for c in done {
            let idx = c.i1 * n2 + c.i2;
            cells[idx] = Some(c);
        }
    }
    let cells: Vec<Cell> = cells.into_iter().map(|c| c.expect("every cell evaluated")).collect();

    let mut diagram = PhaseDiagram {
        spec: spec.clone(),
        cells,
        boundaries: Vec::new(),
        refinement_errors: Vec::new(),
        special: SpecialPoints::default(),
    };
    if spec.refine {
        refine_all(&mut diagram);
    }
    diagram.special = special_points(&diagram);
    Ok(diagram)
}

fn refine_all(diagram: &mut PhaseDiagram) {
    let spec = &diagram.spec;
    let (n1, n2) = (spec.axis1.count, spec.axis2.count);
    let mut pairs = Vec::new();
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let here = diagram.cell(i1, i2);
            for (j1, j2) in [(i1 + 1, i2), (i1, i2 + 1)] {
                if j1 < n1 && j2 < n2 {
                    let there = diagram.cell(j1, j2);
                    if let (Some(a), Some(b)) = (here.label, there.label) {
                        if a != b {
                            pairs.push((here.clone(), there.clone()));
                        }
                    }
                }
            }
        }
    }
    let results: Vec<Result<BoundaryPoint>> = pairs.par_iter().map(|(a, b)| refine_boundary(spec, a, b)).collect();
    let mut groups: BTreeMap<(String, String), Vec<BoundaryPoint>> = BTreeMap::new();
    for (r, (a, b)) in results.into_iter().zip(&pairs) {
        match r {
            Ok(bp) => {
                let (x, y) = (bp.labels.0.as_str().to_string(), bp.labels.1.as_str().to_string());
                let key = if x <= y { (x, y) } else { (y, x) };
                groups.entry(key).or_default().push(bp);
            }
            Err(e) => diagram.refinement_errors.push(format!(
                "({}, {}) -> ({}, {}): {e}",
                a.i1, a.i2, b.i1, b.i2
            )),
        }
    }
    diagram.boundaries = groups
        .into_values()
        .map(|mut points| {
            points.sort_by(|p, q| p.fixed.total_cmp(&q.fixed).then(p.location.total_cmp(&q.location)));
            let labels = points[0].labels;
            Boundary { labels, points }
        })
        .collect();
}

/// Points at which the bisection stops once the 12 locating steps are done.
pub const ORDER_INTERVAL: f64 = 1e-6;
pub const LOCATE_STEPS: usize = 12;
pub const JUMP_FRACTION: f64 = 0.1;

/// Bisect between two adjacent cells with different labels.
///
/// Twelve steps locate the boundary; the bisection then continues until the
/// bracket is `1e-6` wide, and the transition is tagged first order when
/// `max |alpha_n|` or `I_C` differs across that bracket by more than 10% of
/// the larger of the two cell values.
pub fn refine_boundary(spec: &GridSpec, a: &Cell, b: &Cell) -> Result<BoundaryPoint> {
    let (la, lb) = match (a.label, b.label) {
        (Some(x), Some(y)) if x != y => (x, y),
        _ => return Err(Error::InvalidParams("refine_boundary needs two differently labelled cells".into())),
    };
    let (axis, fixed_axis, lo0, hi0, fixed) = if a.i1 != b.i1 && a.i2 == b.i2 {
        (spec.axis1.axis, spec.axis2.axis, a.x1, b.x1, a.x2)
    } else if a.i2 != b.i2 && a.i1 == b.i1 {
        (spec.axis2.axis, spec.axis1.axis, a.x2, b.x2, a.x1)
    } else {
        return Err(Error::InvalidParams("cells are not adjacent along one axis".into()));
    };
    let base = fixed_axis.apply(&spec.template, fixed);
    let mut opts = spec.minimize.clone();
    opts.extra_seeds.extend(a.displacements.iter().cloned());
    opts.extra_seeds.extend(b.displacements.iter().cloned());

    let (mut lo, mut hi) = (lo0, hi0);
    let mut r_lo = None;
    let mut r_hi = None;
    let mut steps = 0;
    while steps < LOCATE_STEPS || (hi - lo).abs() > ORDER_INTERVAL {
        let mid = 0.5 * (lo + hi);
        let r = evaluate(&axis.apply(&base, mid), &opts);
        match &r.label {
            Ok(l) if *l == la => {
                lo = mid;
                r_lo = Some(r);
            }
            Ok(l) if *l == lb => {
                hi = mid;
                r_hi = Some(r);
            }
            _ => return Err(Error::BisectionAmbiguous { lo, hi }),
        }
        steps += 1;
        if steps > 200 {
            return Err(Error::BisectionAmbiguous { lo, hi });
        }
    }
    let side = |r: Option<PointResult>, c: &Cell| match r {
        Some(r) => (r.max_alpha_sq.sqrt(), r.currents.i_chiral),
        None => (c.max_alpha(), c.currents.i_chiral),
    };
    let (alpha_lo, ic_lo) = side(r_lo, a);
    let (alpha_hi, ic_hi) = side(r_hi, b);
    let scale_alpha = a.max_alpha().max(b.max_alpha());
    let scale_ic = a.currents.i_chiral.abs().max(b.currents.i_chiral.abs());
    let jump_alpha = (alpha_hi - alpha_lo).abs() > JUMP_FRACTION * scale_alpha && scale_alpha > 0.0;
    let jump_ic = (ic_hi - ic_lo).abs() > JUMP_FRACTION * scale_ic && scale_ic > 0.0;
    Ok(BoundaryPoint {
        axis,
        fixed,
        location: 0.5 * (lo + hi),
        interval: (lo.min(hi), lo.max(hi)),
        labels: (la, lb),
        order: if jump_alpha || jump_ic { Order::First } else { Order::Second },
        max_alpha: (alpha_lo, alpha_hi),
        i_chiral: (ic_lo, ic_hi),
    })
}

/// Nonzero grid momentum whose sector goes soft first when `J1 = 0`.
pub fn meissner_momentum(p: &ModelParams) -> Result<f64> {
    let q = p.with_ratio(0.0);
    let mut best: Option<(f64, f64)> = None;
    for &k in MomentumGrid::new(p.n_cavities).ks() {
        if k <= 1e-12 {
            continue;
        }
        let g = sector_critical_coupling(&q, k, DEFAULT_BISECTION_TOL)?;
        if best.is_none_or(|(_, bg)| g < bg - 1e-12) {
            best = Some((k, g));
        }
    }
    best.map(|(k, _)| k).ok_or_else(|| Error::InvalidParams("momentum grid has no nonzero momentum".into()))
}

pub const TRIPLE_POINT_SEARCH_MAX: f64 = 4.0;

/// Ratio `J1/J2` in `[0, 4]` at which the `k = 0` and Meissner-sector critical lines cross.
pub fn locate_triple_point(template: &ModelParams) -> Result<f64> {
    template.validate()?;
    let k = meissner_momentum(template)?;
    let gap = |r: f64| -> Result<f64> {
        let p = template.with_ratio(r);
        Ok(sector_critical_coupling(&p, 0.0, 1e-13)? - sector_critical_coupling(&p, k, 1e-13)?)
    };
    let (mut lo, mut hi) = (0.0, TRIPLE_POINT_SEARCH_MAX);
    let (f_lo, f_hi) = (gap(lo)?, gap(hi)?);
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoIntersection { lo, hi });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn special_points(d: &PhaseDiagram) -> SpecialPoints {
    let spec = &d.spec;
    let axes = [spec.axis1.axis, spec.axis2.axis];
    let mut out = SpecialPoints::default();
    if !axes.contains(&Axis::Theta) && (spec.template.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
        out.triple_point = locate_triple_point(&spec.template).ok();
    }
    // Flux thresholds: chiral-to-Meissner and Meissner-to-chiral crossings on the
    // smallest fixed value that shows both.
    let entering = [Phase::OCSR, Phase::OAFSR];
    let leaving = [Phase::ECSR, Phase::EAFSR];
    let mut by_fixed: BTreeMap<u64, (Option<f64>, Option<f64>, f64)> = BTreeMap::new();
    for b in &d.boundaries {
        for p in &b.points {
            if p.axis != Axis::Theta {
                continue;
            }
            let (x, y) = p.labels;
            let e = by_fixed.entry(p.fixed.to_bits()).or_insert((None, None, p.fixed));
            let has = |l: Phase| x == l || y == l;
            if has(Phase::MSR) && entering.iter().any(|l| has(*l)) {
                e.0 = Some(e.0.map_or(p.location, |v: f64| v.min(p.location)));
            }
            if has(Phase::MSR) && leaving.iter().any(|l| has(*l)) {
                e.1 = Some(e.1.map_or(p.location, |v: f64| v.max(p.location)));
            }
        }
    }
    let mut rows: Vec<_> = by_fixed.into_values().collect();
    rows.sort_by(|a, b| a.2.total_cmp(&b.2));
    if let Some((c1, c2, _)) = rows.into_iter().find(|(a, b, _)| a.is_some() && b.is_some()) {
        out.theta_c1 = c1;
        out.theta_c2 = c2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{critical_coupling, triple_point};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn template(n: usize) -> ModelParams {
        ModelParams::new(1.0, 50.0, 0.65, 0.0025, 0.05, FRAC_PI_2, n).unwrap()
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [Axis::G1, Axis::J1OverJ2, Axis::Theta] {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
        assert!("omega".parse::<Axis>().is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        let t = template(6);
        let good = GridSpec::new(AxisSpec::new(Axis::G1, 0.4, 0.6, 3), AxisSpec::new(Axis::J1OverJ2, 0.0, 0.3, 3), t);
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.axis1.count = 0;
        assert!(bad.validate().is_err());
        let mut single = good.clone();
        single.axis1.count = 1;
        assert!(single.validate().is_ok());
        assert_eq!(single.axis1.value(0), 0.4);
        let mut bad = good.clone();
        bad.axis2.axis = Axis::G1;
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.axis1.max = f64::NAN;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn triple_point_matches_closed_form() {
        let t = template(6);
        let r = locate_triple_point(&t).unwrap();
        assert_abs_diff_eq!(r, triple_point(&t), epsilon = 1e-6);
        assert_abs_diff_eq!(r, 0.148892, epsilon = 1e-3);
        let p = t.with_ratio(r);
        assert_abs_diff_eq!(critical_coupling(&p, 0.0).unwrap(), critical_coupling(&p, FRAC_PI_3).unwrap(), epsilon = 1e-6);

        let wide = ModelParams::new(1.0, 50.0, 0.65, 0.01, 0.1, FRAC_PI_2, 6).unwrap();
        assert_abs_diff_eq!(locate_triple_point(&wide).unwrap(), 0.291503, epsilon = 1e-3);
    }

    #[test]
    fn small_scan_is_worker_independent_and_transposable() {
        let t = template(6);
        let spec = GridSpec {
            refine: false,
            ..GridSpec::new(AxisSpec::new(Axis::J1OverJ2, 0.0, 0.3, 4), AxisSpec::new(Axis::G1, 0.4, 0.6, 3), t)
        };
        let a = scan(&spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| scan(&spec).unwrap());
        assert_eq!(a.to_csv(), b.to_csv());

        let tr = scan(&spec.transposed()).unwrap();
        for i1 in 0..4 {
            for i2 in 0..3 {
                let (x, y) = (a.cell(i1, i2), tr.cell(i2, i1));
                assert_eq!(x.label, y.label);
                assert_abs_diff_eq!(x.energy, y.energy, epsilon = 1e-9);
            }
        }
        assert!(a.cells.iter().all(|c| c.label.is_some()));
        assert!(a.to_csv().starts_with("j1_over_j2,g1,label,E_g,max_alpha_sq,I_O,I_E,I_C,I_T,min_eps\n"));
        assert_eq!(a.to_csv().lines().count(), 13);
    }

    #[test]
    fn ferromagnetic_boundary_is_second_order_at_closed_form() {
        let t = template(6).with_ratio(0.8);
        let spec = GridSpec::new(AxisSpec::new(Axis::G1, 0.45, 0.5, 2), AxisSpec::new(Axis::J1OverJ2, 0.8, 0.9, 2), t);
        let cells: Vec<Cell> = [0, 1]
            .iter()
            .map(|&i| cell_from(&spec, i, 0, evaluate(&spec.params_at(i, 0), &spec.minimize)))
            .collect();
        assert_eq!(cells[0].label, Some(Phase::NP));
        assert_eq!(cells[1].label, Some(Phase::FSR));
        let bp = refine_boundary(&spec, &cells[0], &cells[1]).unwrap();
        assert_abs_diff_eq!(bp.location, critical_coupling(&t, 0.0).unwrap(), epsilon = 1e-4);
        assert_eq!(bp.order, Order::Second);
        assert!(bp.interval.1 - bp.interval.0 <= ORDER_INTERVAL);
    }

    #[test]
    fn meissner_to_ferromagnetic_is_first_order() {
        let t = template(6);
        let spec = GridSpec::new(AxisSpec::new(Axis::J1OverJ2, 0.05, 0.2, 2), AxisSpec::new(Axis::G1, 0.65, 0.7, 2), t);
        let cells: Vec<Cell> = [0, 1]
            .iter()
            .map(|&i| cell_from(&spec, i, 0, evaluate(&spec.params_at(i, 0), &spec.minimize)))
            .collect();
        assert_eq!(cells[0].label, Some(Phase::MSR));
        assert_eq!(cells[1].label, Some(Phase::FSR));
        let bp = refine_boundary(&spec, &cells[0], &cells[1]).unwrap();
        assert_eq!(bp.order, Order::First);
    }
}
