//! Experiment configuration: sectioned `key = value` text, command-line
//! overrides, defaults per experiment, validation and a canonical echo.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DiskSweep,
    TorusHodge,
    TorusDiffuse,
    MinmaxSurface,
    OracleSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 5] =
        [Self::DiskSweep, Self::TorusHodge, Self::TorusDiffuse, Self::MinmaxSurface, Self::OracleSuite];

    pub fn name(&self) -> &'static str {
        match self {
            Self::DiskSweep => "disk-sweep",
            Self::TorusHodge => "torus-hodge",
            Self::TorusDiffuse => "torus-diffuse",
            Self::MinmaxSurface => "minmax-surface",
            Self::OracleSuite => "oracle-suite",
        }
    }

    fn is_torus(&self) -> bool {
        matches!(self, Self::TorusHodge | Self::TorusDiffuse)
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}'; expected one of {}", names(&Self::ALL.map(|e| e.name()))))
    }
}

fn names(v: &[&str]) -> String {
    v.join(", ")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
    /// No boundary condition: nothing is solved on the domain.
    Free,
}

impl BoundaryKind {
    fn name(&self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Periodic => "periodic",
            Self::Free => "free",
        }
    }
}

/// Penalty scale for the relaxed energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsPolicy {
    /// Constrained (phase) mode, no penalty.
    Off,
    /// `eps = h`.
    GridSpacing,
    Value(f64),
}

impl EpsPolicy {
    pub fn resolve(&self, h: f64) -> Option<f64> {
        match self {
            Self::Off => None,
            Self::GridSpacing => Some(h),
            Self::Value(v) => Some(*v),
        }
    }
}

impl fmt::Display for EpsPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Off => f.write_str("none"),
            Self::GridSpacing => f.write_str("h"),
            Self::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub threads: usize,
    pub out: PathBuf,
    /// Cells per unit length: `h = 1/n` on the disk and the unit torus,
    /// `n x n` cells on the min-max square.
    pub n: usize,
    pub radius: f64,
    pub p: Vec<f64>,
    pub eps: EpsPolicy,
    pub delta_reg: Vec<f64>,
    pub boundary: BoundaryKind,
    pub k: i32,
    pub max_iterations: usize,
    pub rel_tol: f64,
    pub init_noise: f64,
    /// Coarser disk grids (each halving `n`, down to 32) solved first for the
    /// first stage and interpolated up as the initial field.
    pub coarse_levels: usize,
    pub q: f64,
    /// Plane-wave windings for the diffuse experiment; `None` picks them from `p`.
    pub m: Option<Vec<i64>>,
    pub radii: usize,
    pub rings: usize,
    pub angles: usize,
}

/// Every recognised key, in echo order.
pub const KEYS: [(&str, &str); 20] = [
    ("experiment", "name"),
    ("experiment", "seed"),
    ("experiment", "threads"),
    ("experiment", "out"),
    ("grid", "n"),
    ("grid", "radius"),
    ("schedule", "p"),
    ("schedule", "eps"),
    ("schedule", "delta_reg"),
    ("boundary", "kind"),
    ("boundary", "k"),
    ("solver", "max_iterations"),
    ("solver", "rel_tol"),
    ("solver", "init_noise"),
    ("solver", "coarse_levels"),
    ("diagnostics", "q"),
    ("diagnostics", "m"),
    ("diagnostics", "radii"),
    ("minmax", "rings"),
    ("minmax", "angles"),
];

/// Keys that do not change results and stay out of the config hash.
const RUNTIME_KEYS: [&str; 2] = ["experiment.threads", "experiment.out"];

fn known_keys() -> impl Iterator<Item = String> {
    KEYS.iter().map(|(s, k)| format!("{s}.{k}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub key: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
pub struct ConfigErrors {
    pub errors: Vec<FieldError>,
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", e.key, e.message)?;
        }
        Ok(())
    }
}

impl ConfigErrors {
    fn one(key: &str, message: impl Into<String>) -> Self {
        Self { errors: vec![FieldError { key: key.into(), message: message.into() }] }
    }
}

/// Unresolved `section.key -> value` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn from_ini_str(text: &str) -> Result<Self, ConfigErrors> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigErrors::one("config", e.to_string()))?;
        let mut raw = Self::default();
        let mut errors = Vec::new();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let full = match section {
                    Some(s) => format!("{s}.{key}"),
                    None => key.to_string(),
                };
                if let Err(e) = raw.set(&full, value) {
                    errors.extend(e.errors);
                }
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigErrors { errors })
        }
    }

    /// Sets `section.key` or a bare `key` that names exactly one entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrors> {
        let full = if key.contains('.') {
            known_keys().find(|k| k == key)
        } else {
            let hits: Vec<String> = known_keys().filter(|k| k.rsplit('.').next() == Some(key)).collect();
            (hits.len() == 1).then(|| hits[0].clone())
        };
        let full = full.ok_or_else(|| ConfigErrors::one(key, "unknown key"))?;
        self.values.insert(full, value.trim().to_string());
        Ok(())
    }

    /// Parses a command-line `key=value` override.
    pub fn apply_override(&mut self, arg: &str) -> Result<(), ConfigErrors> {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| ConfigErrors::one(arg, "expected key=value"))?;
        self.set(k.trim(), v)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

struct Defaults {
    n: usize,
    p: &'static [f64],
    eps: EpsPolicy,
    boundary: BoundaryKind,
    k: i32,
}

fn defaults(e: Experiment) -> Defaults {
    match e {
        Experiment::DiskSweep => Defaults {
            n: 128,
            p: &[1.5, 1.7, 1.9],
            eps: EpsPolicy::GridSpacing,
            boundary: BoundaryKind::Dirichlet,
            k: 1,
        },
        Experiment::TorusHodge => {
            Defaults { n: 128, p: &[1.5, 1.7, 1.8, 1.9], eps: EpsPolicy::Off, boundary: BoundaryKind::Periodic, k: 0 }
        }
        Experiment::TorusDiffuse => {
            Defaults { n: 64, p: &[1.5, 1.7, 1.9], eps: EpsPolicy::Off, boundary: BoundaryKind::Periodic, k: 0 }
        }
        Experiment::MinmaxSurface => Defaults {
            n: 63,
            p: &[1.5, 1.7, 1.9],
            eps: EpsPolicy::GridSpacing,
            boundary: BoundaryKind::Free,
            k: 0,
        },
        Experiment::OracleSuite => {
            Defaults { n: 256, p: &[1.5, 1.9], eps: EpsPolicy::Off, boundary: BoundaryKind::Free, k: 0 }
        }
    }
}

struct Parser<'a> {
    raw: &'a RawConfig,
    errors: Vec<FieldError>,
}

impl Parser<'_> {
    fn err(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(FieldError { key: key.into(), message: message.into() });
    }

    fn scalar<T: FromStr>(&mut self, key: &str, default: T) -> T {
        match self.raw.get(key) {
            None => default,
            Some(s) => s.parse().unwrap_or_else(|_| {
                self.err(key, format!("cannot parse '{s}'"));
                default
            }),
        }
    }

    fn list<T: FromStr + Clone>(&mut self, key: &str, default: &[T]) -> Vec<T> {
        match self.raw.get(key) {
            None => default.to_vec(),
            Some(s) => {
                let parsed: Result<Vec<T>, _> = s.split(',').map(|t| t.trim().parse()).collect();
                parsed.unwrap_or_else(|_| {
                    self.err(key, format!("cannot parse list '{s}'"));
                    default.to_vec()
                })
            }
        }
    }
}

/// Resolves defaults and checks every field; all problems are reported at once.
pub fn validate(raw: &RawConfig) -> Result<ExperimentConfig, ConfigErrors> {
    let mut ps = Parser { raw, errors: Vec::new() };
    let experiment = match raw.get("experiment.name") {
        None => Experiment::DiskSweep,
        Some(s) => s.parse().unwrap_or_else(|e: String| {
            ps.err("experiment.name", e);
            Experiment::DiskSweep
        }),
    };
    let d = defaults(experiment);
    let eps = match raw.get("schedule.eps") {
        None => d.eps,
        Some("none") => EpsPolicy::Off,
        Some("h") => EpsPolicy::GridSpacing,
        Some(s) => match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => EpsPolicy::Value(v),
            _ => {
                ps.err("schedule.eps", format!("'{s}' is not none, h, or a positive number"));
                d.eps
            }
        },
    };
    let boundary = match raw.get("boundary.kind") {
        None => d.boundary,
        Some("dirichlet") => BoundaryKind::Dirichlet,
        Some("periodic") => BoundaryKind::Periodic,
        Some("free") => BoundaryKind::Free,
        Some(s) => {
            ps.err("boundary.kind", format!("'{s}' is not dirichlet, periodic, or free"));
            d.boundary
        }
    };
    let m = match raw.get("diagnostics.m") {
        None | Some("auto") => None,
        Some(_) => Some(ps.list::<i64>("diagnostics.m", &[])),
    };
    let cfg = ExperimentConfig {
        experiment,
        seed: ps.scalar("experiment.seed", 0),
        threads: ps.scalar("experiment.threads", 1),
        out: PathBuf::from(ps.scalar("experiment.out", "out".to_string())),
        n: ps.scalar("grid.n", d.n),
        radius: ps.scalar("grid.radius", 1.0),
        p: ps.list("schedule.p", d.p),
        eps,
        delta_reg: ps.list("schedule.delta_reg", &[1e-1, 1e-2, 1e-3]),
        boundary,
        k: ps.scalar("boundary.k", d.k),
        max_iterations: ps.scalar("solver.max_iterations", 20000),
        rel_tol: ps.scalar("solver.rel_tol", 1e-5),
        init_noise: ps.scalar("solver.init_noise", 0.0),
        coarse_levels: ps.scalar("solver.coarse_levels", 2),
        q: ps.scalar("diagnostics.q", 1.4),
        m,
        radii: ps.scalar("diagnostics.radii", 40),
        rings: ps.scalar("minmax.rings", 32),
        angles: ps.scalar("minmax.angles", 32),
    };
    let mut errors = ps.errors;
    let mut err = |key: &str, msg: String| errors.push(FieldError { key: key.into(), message: msg });

    for &p in &cfg.p {
        if !(p > 1.0 && p <= 2.0) {
            err("schedule.p", format!("p = {p} outside the range p in (1, 2]"));
        }
    }
    if cfg.p.is_empty() {
        err("schedule.p", "empty p schedule".into());
    }
    if cfg.p.windows(2).any(|w| w[1] < w[0]) {
        err("schedule.p", "p schedule must be nondecreasing".into());
    }
    if cfg.delta_reg.is_empty()
        || cfg.delta_reg.iter().any(|d| !(*d >= 0.0 && d.is_finite()))
        || cfg.delta_reg.windows(2).any(|w| w[1] > w[0])
    {
        err("schedule.delta_reg", "delta_reg schedule must be nonempty, nonnegative and decreasing".into());
    }
    let conflict = match experiment {
        e if e.is_torus() => boundary != BoundaryKind::Periodic,
        Experiment::DiskSweep => boundary != BoundaryKind::Dirichlet,
        _ => boundary != BoundaryKind::Free,
    };
    if conflict {
        let want = match experiment {
            e if e.is_torus() => "periodic",
            Experiment::DiskSweep => "dirichlet",
            _ => "free",
        };
        err(
            "boundary.kind",
            format!("topology conflict: {} needs a {want} boundary, got {}", experiment.name(), boundary.name()),
        );
    }
    if cfg.n < 8 || cfg.n > 4096 {
        err("grid.n", format!("n = {} outside 8..=4096", cfg.n));
    }
    if experiment == Experiment::MinmaxSurface && cfg.n % 2 == 0 {
        err("grid.n", "the min-max square needs an odd cell count so the y = 0 vortex avoids nodes".into());
    }
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        err("grid.radius", format!("radius = {} must be positive", cfg.radius));
    }
    if cfg.k.abs() > 8 {
        err("boundary.k", format!("|k| = {} exceeds 8", cfg.k.abs()));
    }
    if cfg.threads == 0 {
        err("experiment.threads", "need at least one thread".into());
    }
    if cfg.max_iterations == 0 {
        err("solver.max_iterations", "must be positive".into());
    }
    if !(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0) {
        err("solver.rel_tol", format!("rel_tol = {} outside (0, 1)", cfg.rel_tol));
    }
    if !(cfg.init_noise >= 0.0 && cfg.init_noise.is_finite()) {
        err("solver.init_noise", format!("init_noise = {} must be >= 0", cfg.init_noise));
    }
    if cfg.coarse_levels > 6 {
        err("solver.coarse_levels", format!("coarse_levels = {} exceeds 6", cfg.coarse_levels));
    }
    if experiment == Experiment::TorusHodge {
        if cfg.p.len() < 3 {
            err("schedule.p", "the scaling table needs at least three p values".into());
        }
        let pmin = cfg.p.iter().copied().fold(f64::INFINITY, f64::min);
        if !(cfg.q >= 1.0 && cfg.q < pmin) {
            err("diagnostics.q", format!("q = {} must lie in [1, min p)", cfg.q));
        }
    }
    if let Some(m) = &cfg.m {
        if m.len() != cfg.p.len() {
            err("diagnostics.m", format!("{} windings for {} p values", m.len(), cfg.p.len()));
        }
    }
    if cfg.radii < 2 {
        err("diagnostics.radii", "need at least two radii".into());
    }
    if cfg.rings < 1 || cfg.angles < 4 {
        err("minmax", format!("polar grid {} x {} too coarse", cfg.rings, cfg.angles));
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors { errors })
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// `section.key -> value` for every key, defaults included.
    pub fn entries(&self) -> Vec<(String, String)> {
        let v = |k: &str| -> String {
            match k {
                "experiment.name" => self.experiment.name().into(),
                "experiment.seed" => self.seed.to_string(),
                "experiment.threads" => self.threads.to_string(),
                "experiment.out" => self.out.display().to_string(),
                "grid.n" => self.n.to_string(),
                "grid.radius" => self.radius.to_string(),
                "schedule.p" => join(&self.p),
                "schedule.eps" => self.eps.to_string(),
                "schedule.delta_reg" => join(&self.delta_reg),
                "boundary.kind" => self.boundary.name().into(),
                "boundary.k" => self.k.to_string(),
                "solver.max_iterations" => self.max_iterations.to_string(),
                "solver.rel_tol" => self.rel_tol.to_string(),
                "solver.init_noise" => self.init_noise.to_string(),
                "solver.coarse_levels" => self.coarse_levels.to_string(),
                "diagnostics.q" => self.q.to_string(),
                "diagnostics.m" => self.m.as_ref().map_or("auto".into(), |m| join(m)),
                "diagnostics.radii" => self.radii.to_string(),
                "minmax.rings" => self.rings.to_string(),
                "minmax.angles" => self.angles.to_string(),
                _ => unreachable!("unknown key {k}"),
            }
        };
        known_keys().map(|k| {
            let val = v(&k);
            (k, val)
        })
        .collect()
    }

    /// Canonical sectioned text; `runtime` includes the output directory and thread count.
    pub fn to_ini_string(&self, runtime: bool) -> String {
        let mut out = String::new();
        let mut section = String::new();
        for (key, value) in self.entries() {
            if !runtime && RUNTIME_KEYS.contains(&key.as_str()) {
                continue;
            }
            let (s, k) = key.split_once('.').expect("keys are sectioned");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{s}]\n"));
                section = s.to_string();
            }
            out.push_str(&format!("{k} = {value}\n"));
        }
        out
    }

    /// SHA-256 of the canonical text without runtime keys.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_ini_string(false).as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Result-affecting entries, for embedding in reports.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.entries().into_iter().filter(|(k, _)| !RUNTIME_KEYS.contains(&k.as_str())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_echoes_all_defaults() {
        let cfg = validate(&RawConfig::default()).unwrap();
        assert_eq!(cfg.experiment, Experiment::DiskSweep);
        let text = cfg.to_ini_string(true);
        for key in known_keys() {
            let k = key.split_once('.').unwrap().1;
            assert!(text.contains(&format!("\n{k} = ")) || text.starts_with(&format!("[experiment]\n{k} = ")), "{key}");
        }
        // the echo parses back to the same configuration
        let again = validate(&RawConfig::from_ini_str(&text).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_ini_string(true), text);
    }

    #[test]
    fn out_of_range_p_is_reported() {
        let mut raw = RawConfig::default();
        raw.apply_override("p=1.5,2.5").unwrap();
        let e = validate(&raw).unwrap_err();
        assert_eq!(e.errors.len(), 1);
        assert_eq!(e.errors[0].key, "schedule.p");
        assert!(e.errors[0].message.contains("(1, 2]"));
    }

    #[test]
    fn torus_with_dirichlet_is_a_topology_conflict() {
        let raw = RawConfig::from_ini_str("[experiment]\nname = torus-hodge\n[boundary]\nkind = dirichlet\n").unwrap();
        let e = validate(&raw).unwrap_err();
        assert!(e.errors.iter().any(|f| f.key == "boundary.kind" && f.message.contains("topology conflict")));
    }

    #[test]
    fn errors_are_itemized() {
        let raw = RawConfig::from_ini_str("[grid]\nn = 4\n[solver]\nrel_tol = 2\n[schedule]\neps = fat\n").unwrap();
        let keys: Vec<String> = validate(&raw).unwrap_err().errors.into_iter().map(|e| e.key).collect();
        assert_eq!(keys, ["schedule.eps", "grid.n", "solver.rel_tol"]);
    }

    #[test]
    fn unknown_and_ambiguous_keys_are_rejected() {
        let mut raw = RawConfig::default();
        assert!(raw.apply_override("bogus=1").is_err());
        assert!(raw.apply_override("grid.bogus=1").is_err());
        assert!(raw.apply_override("nothing").is_err());
        assert!(RawConfig::from_ini_str("[grid]\nwidth = 3\n").is_err());
        raw.apply_override("grid.n=64").unwrap();
        assert_eq!(validate(&raw).unwrap().n, 64);
    }

    #[test]
    fn hash_ignores_runtime_keys_only() {
        let mut a = RawConfig::default();
        a.apply_override("out=/tmp/a").unwrap();
        let mut b = RawConfig::default();
        b.apply_override("out=/tmp/b").unwrap();
        b.apply_override("threads=4").unwrap();
        let (ca, cb) = (validate(&a).unwrap(), validate(&b).unwrap());
        assert_eq!(ca.hash(), cb.hash());
        b.apply_override("seed=3").unwrap();
        assert_ne!(ca.hash(), validate(&b).unwrap().hash());
        assert_eq!(ca.hash().len(), 64);
    }

    #[test]
    fn experiment_defaults_differ() {
        let mut raw = RawConfig::default();
        raw.apply_override("name=torus-hodge").unwrap();
        let c = validate(&raw).unwrap();
        assert_eq!(c.p, vec![1.5, 1.7, 1.8, 1.9]);
        assert_eq!(c.boundary, BoundaryKind::Periodic);
        assert_eq!(c.eps, EpsPolicy::Off);
        raw.apply_override("name=minmax-surface").unwrap();
        raw.apply_override("n=64").unwrap();
        assert!(validate(&raw).is_err());
    }
}
