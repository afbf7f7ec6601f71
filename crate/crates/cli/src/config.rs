//! `key = value` run configuration with defaults, environment overrides and
//! a resolved echo.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::failure::Failure;

/// Environment variables `RZ_<KEY>` override file values.
pub const ENV_PREFIX: &str = "RZ_";

/// Every accepted key with its default. `None` marks a required key.
const KEYS: &[(&str, Option<&str>)] = &[
    ("omega", None),
    ("delta", None),
    ("g1", None),
    ("j1", None),
    ("j2", None),
    ("theta", None),
    ("n_cavities", None),
    ("seed", Some("1592598564")),
    ("workers", Some("0")),
    ("out_dir", Some("out")),
    ("n_random", Some("20")),
    ("max_iter", Some("10000")),
    ("bands_k_count", Some("0")),
    ("axis1", Some("j1_over_j2")),
    ("axis1_min", Some("0")),
    ("axis1_max", Some("0.3")),
    ("axis1_count", Some("61")),
    ("axis2", Some("g1")),
    ("axis2_min", Some("0.3")),
    ("axis2_max", Some("0.8")),
    ("axis2_count", Some("61")),
    ("warm_start", Some("true")),
    ("refine", Some("true")),
    ("currents_ratio_min", Some("0")),
    ("currents_ratio_max", Some("0.3")),
    ("currents_ratio_count", Some("31")),
    ("currents_thetas", Some("0, pi/4, -pi/4, pi/2, -pi/2, 3pi/4, -3pi/4")),
    ("exp_ratio", Some("config")),
    ("exp_sides", Some("below, above")),
    ("exp_modes", Some("4")),
    ("exp_window_lo", Some("1e-6")),
    ("exp_window_hi", Some("1e-4")),
    ("exp_points", Some("12")),
    ("ed_n_max", Some("3")),
    ("ed_sweep", Some("1, 2, 3")),
    ("ed_solver", Some("auto")),
    ("ed_tol", Some("1e-9")),
    ("ed_dim_cap", Some("500000")),
    ("ed_second_state", Some("false")),
    ("ed_sweep_tol", Some("1e-6")),
    ("ed_dump_vector", Some("false")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
        let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
        if !known(&k) {
            return Err(Failure::Config(format!("line {}: unknown key {k:?}", n + 1)));
        }
        if out.insert(k.clone(), v).is_some() {
            return Err(Failure::Config(format!("line {}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the file, then `RZ_*` variables from `env`.
    pub fn resolve<I>(file: &BTreeMap<String, String>, env: I) -> Result<Self, Failure>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().filter_map(|(k, d)| d.map(|d| (k.to_string(), d.to_string()))).collect();
        values.extend(file.iter().map(|(k, v)| (k.clone(), v.clone())));
        let mut env: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        env.sort();
        for (k, v) in env {
            let key = k[ENV_PREFIX.len()..].to_ascii_lowercase();
            if !known(&key) {
                return Err(Failure::Config(format!("environment variable {k} names unknown key {key:?}")));
            }
            values.insert(key, v.trim().to_string());
        }
        if let Some((k, _)) = KEYS.iter().find(|(k, d)| d.is_none() && !values.contains_key(*k)) {
            return Err(Failure::Config(format!("missing required key {k:?}")));
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::resolve(&parse_text(&text)?, std::env::vars())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        assert!(known(key), "unknown key {key}");
        self.values.insert(key.to_string(), value.into());
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key {key} not resolved"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| Failure::Config(format!("key {key:?}: cannot parse {raw:?}")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, Failure> {
        match self.raw(key).to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            other => Err(Failure::Config(format!("key {key:?}: expected a boolean, got {other:?}"))),
        }
    }

    pub fn angle(&self, key: &str) -> Result<f64, Failure> {
        parse_angle(self.raw(key)).ok_or_else(|| Failure::Config(format!("key {key:?}: bad angle {:?}", self.raw(key))))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, Failure> {
        split_list(self.raw(key))
            .map(|s| s.parse().map_err(|_| Failure::Config(format!("key {key:?}: cannot parse item {s:?}"))))
            .collect()
    }

    pub fn angle_list(&self, key: &str) -> Result<Vec<f64>, Failure> {
        split_list(self.raw(key))
            .map(|s| parse_angle(s).ok_or_else(|| Failure::Config(format!("key {key:?}: bad angle {s:?}"))))
            .collect()
    }

    /// One `key = value` line per key, sorted.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

/// A number, or a multiple of `pi` such as `pi/2`, `-3pi/4`, `3*pi/4`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let coeff = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let coeff = if coeff.is_empty() { 1.0 } else { coeff.parse::<f64>().ok()? };
    (den != 0.0).then(|| sign * coeff * std::f64::consts::PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const MODEL: &str = "omega = 1\ndelta = 50\ng1 = 0.65\nj1 = 0.0025\nj2 = 0.05\ntheta = pi/2\nn_cavities = 6\n";

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_angle("3pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_angle("-3*pi/4"), Some(-3.0 * PI / 4.0));
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("0.25"), Some(0.25));
        assert_eq!(parse_angle("pie"), None);
        assert_eq!(parse_angle("pi/0"), None);
    }

    #[test]
    fn parse_and_resolve() {
        let file = parse_text(&format!("# comment\n{MODEL}axis1_count = 5 # trailing\n")).unwrap();
        let cfg = RunConfig::resolve(&file, vec![("RZ_G1".into(), "0.7".into()), ("HOME".into(), "/".into())]).unwrap();
        assert_eq!(cfg.get::<usize>("axis1_count").unwrap(), 5);
        assert_eq!(cfg.get::<f64>("g1").unwrap(), 0.7);
        assert_eq!(cfg.angle("theta").unwrap(), PI / 2.0);
        assert_eq!(cfg.angle_list("currents_thetas").unwrap().len(), 7);
        assert!(cfg.echo().contains("g1 = 0.7\n"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_text("bogus = 1"), Err(Failure::Config(m)) if m.contains("bogus")));
        assert!(parse_text("g1 = 1\ng1 = 2").is_err());
        assert!(parse_text("no equals sign").is_err());
        let missing = parse_text(&MODEL.replace("delta = 50\n", "")).unwrap();
        assert!(matches!(RunConfig::resolve(&missing, vec![]), Err(Failure::Config(m)) if m.contains("delta")));
        let file = parse_text(MODEL).unwrap();
        assert!(RunConfig::resolve(&file, vec![("RZ_NOPE".into(), "1".into())]).is_err());
        let cfg = RunConfig::resolve(&file, vec![]).unwrap();
        assert!(cfg.get::<f64>("axis1").is_err());
        assert!(cfg.bool("axis1").is_err());
    }
}
