//! Run configuration: JSON ingestion and validation.

use std::fmt;
use std::path::PathBuf;

use qtherm_core::{
    build_profile, Boundary, FitWindow, GeometryKind, GeometrySpec, HoppingProfile, QuenchOptions,
    Sites, SolverRoute, ZeroModePolicy,
};
use serde_json::{json, Map, Value};

pub const DEFAULT_MU: f64 = 0.5;
pub const DEFAULT_G: f64 = 0.1;
pub const DEFAULT_T_MAX: f64 = 100.0;
pub const DEFAULT_SAMPLES: usize = 1001;
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// User-supplied fit window; unset fields are unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub strict: bool,
    pub edge_fraction: f64,
}

impl WindowConfig {
    pub fn resolve(&self, sites: usize) -> FitWindow {
        let cut = (self.edge_fraction * sites as f64).floor() as usize;
        FitWindow {
            sites: (cut > 0).then_some((cut + 1, sites - cut)),
            t_min: self.t_min.unwrap_or(f64::NEG_INFINITY),
            strict_min: self.strict,
            t_max: self.t_max.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    pub mu: f64,
    pub g: Vec<f64>,
    pub positions: Sites,
    /// Attachment site of single-site commands.
    pub site: usize,
    pub t_max: f64,
    pub samples: usize,
    pub weight_floor: f64,
    pub bin_width: Option<f64>,
    pub fit_window: Option<WindowConfig>,
    pub quench: QuenchOptions,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    profile: HoppingProfile,
}

impl RunConfig {
    pub fn profile(&self) -> &HoppingProfile {
        &self.profile
    }

    /// Fully resolved configuration, defaults included. Keys are sorted.
    pub fn to_json(&self) -> Value {
        let g = &self.geometry;
        let mut geometry = Map::new();
        let boundary = match g.boundary {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        };
        geometry.insert("boundary".into(), json!(boundary));
        match &g.kind {
            GeometryKind::Homogeneous { t0 } => {
                geometry.insert("type".into(), json!("homogeneous"));
                geometry.insert("t0".into(), json!(t0));
            }
            GeometryKind::Rindler { dt } => {
                geometry.insert("type".into(), json!("rindler"));
                geometry.insert("dt".into(), json!(dt));
            }
            GeometryKind::Rainbow { alpha } => {
                geometry.insert("type".into(), json!("rainbow"));
                geometry.insert("alpha".into(), json!(alpha));
            }
            GeometryKind::Sinusoidal { t0, amplitude } => {
                geometry.insert("type".into(), json!("sine"));
                geometry.insert("t0".into(), json!(t0));
                geometry.insert("A".into(), json!(amplitude));
            }
            GeometryKind::Affine { t0, slope } => {
                geometry.insert("type".into(), json!("affine"));
                geometry.insert("t0".into(), json!(t0));
                geometry.insert("slope".into(), json!(slope));
            }
            GeometryKind::Custom { amplitudes } => {
                geometry.insert("type".into(), json!("custom"));
                geometry.insert("amplitudes".into(), json!(amplitudes));
            }
        }
        let positions = match &self.positions {
            Sites::All => json!("all"),
            Sites::List(v) => json!(v),
        };
        let fit_window = match &self.fit_window {
            None => Value::Null,
            Some(w) => json!({
                "t_min": w.t_min,
                "t_max": w.t_max,
                "strict": w.strict,
                "edge_fraction": w.edge_fraction,
            }),
        };
        let zero_modes = match self.quench.zero_modes {
            ZeroModePolicy::Reject => "reject",
            ZeroModePolicy::Half => "half",
        };
        let solver = match self.quench.solver {
            SolverRoute::Update => "update",
            SolverRoute::Dense => "dense",
        };
        json!({
            "geometry": Value::Object(geometry),
            "L": g.sites,
            "mu": self.mu,
            "g": self.g,
            "positions": positions,
            "site": self.site,
            "t_max": self.t_max,
            "samples": self.samples,
            "weight_floor": self.weight_floor,
            "bin_width": self.bin_width,
            "fit_window": fit_window,
            "degeneracy_tol": self.quench.degeneracy_tol,
            "zero_mode_tol": self.quench.zero_mode_tol,
            "zero_modes": zero_modes,
            "solver": solver,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse {
                line,
                column,
                message,
            } => {
                write!(
                    f,
                    "config parse error at line {line}, column {column}: {message}"
                )
            }
            ConfigError::Invalid(issues) => {
                write!(f, "invalid config:")?;
                for i in issues {
                    write!(f, "\n  {i}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

const TOP_KEYS: &[&str] = &[
    "geometry",
    "L",
    "mu",
    "g",
    "positions",
    "site",
    "t_max",
    "samples",
    "weight_floor",
    "bin_width",
    "fit_window",
    "degeneracy_tol",
    "zero_mode_tol",
    "zero_modes",
    "solver",
    "output",
    "format",
];

struct Reader<'a> {
    obj: &'a Map<String, Value>,
    path: String,
    issues: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn at(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn issue(&mut self, key: &str, msg: impl fmt::Display) {
        let at = self.at(key);
        self.issues.push(format!("{at}: {msg}"));
    }

    fn reject_unknown(&mut self, allowed: &[&str]) {
        let unknown: Vec<String> = self
            .obj
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .cloned()
            .collect();
        for k in unknown {
            self.issue(&k, "unknown key");
        }
    }

    fn present(&self, key: &str) -> Option<&'a Value> {
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let v = self.present(key)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.issue(key, "expected a finite number");
                None
            }
        }
    }

    fn required_number(&mut self, key: &str) -> Option<f64> {
        if self.present(key).is_none() {
            self.issue(key, "missing");
            return None;
        }
        self.number(key)
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key)?;
        if x <= 0.0 {
            self.issue(key, format!("must be positive, got {x}"));
            return None;
        }
        Some(x)
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        let v = self.present(key)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.issue(key, "expected a non-negative integer");
                None
            }
        }
    }

    fn string(&mut self, key: &str, choices: &[&str]) -> Option<&'a str> {
        let v = self.present(key)?;
        match v.as_str() {
            Some(s) if choices.is_empty() || choices.contains(&s) => Some(s),
            Some(s) => {
                self.issue(key, format!("expected one of {choices:?}, got {s:?}"));
                None
            }
            None => {
                self.issue(key, "expected a string");
                None
            }
        }
    }
}

fn parse_geometry(
    v: &Value,
    sites: Option<usize>,
    issues: &mut Vec<String>,
) -> Option<GeometrySpec> {
    let Some(obj) = v.as_object() else {
        issues.push("geometry: expected an object".into());
        return None;
    };
    let mut r = Reader {
        obj,
        path: "geometry".into(),
        issues,
    };
    let kind_name = match r.present("type") {
        None => {
            r.issue("type", "missing");
            None
        }
        Some(_) => r.string(
            "type",
            &[
                "homogeneous",
                "rindler",
                "rainbow",
                "sine",
                "affine",
                "custom",
            ],
        ),
    };
    let boundary = match r.string("boundary", &["open", "periodic"]) {
        Some("periodic") => Boundary::Periodic,
        _ => Boundary::Open,
    };
    let kind = match kind_name? {
        "homogeneous" => {
            r.reject_unknown(&["type", "boundary", "t0"]);
            GeometryKind::Homogeneous {
                t0: r.number("t0").unwrap_or(1.0),
            }
        }
        "rindler" => {
            r.reject_unknown(&["type", "boundary", "dt"]);
            GeometryKind::Rindler {
                dt: r.required_number("dt")?,
            }
        }
        "rainbow" => {
            r.reject_unknown(&["type", "boundary", "alpha"]);
            GeometryKind::Rainbow {
                alpha: r.required_number("alpha")?,
            }
        }
        "sine" => {
            r.reject_unknown(&["type", "boundary", "t0", "A"]);
            let t0 = r.number("t0").unwrap_or(1.0);
            GeometryKind::Sinusoidal {
                t0,
                amplitude: r.required_number("A")?,
            }
        }
        "affine" => {
            r.reject_unknown(&["type", "boundary", "t0", "slope"]);
            let t0 = r.required_number("t0");
            let slope = r.required_number("slope");
            GeometryKind::Affine {
                t0: t0?,
                slope: slope?,
            }
        }
        "custom" => {
            r.reject_unknown(&["type", "boundary", "amplitudes"]);
            let Some(list) = r.present("amplitudes") else {
                r.issue("amplitudes", "missing");
                return None;
            };
            let Some(items) = list.as_array() else {
                r.issue("amplitudes", "expected an array of numbers");
                return None;
            };
            let mut amplitudes = Vec::with_capacity(items.len());
            for (i, x) in items.iter().enumerate() {
                match x.as_f64() {
                    Some(a) => amplitudes.push(a),
                    None => r.issue(&format!("amplitudes[{i}]"), "expected a number"),
                }
            }
            GeometryKind::Custom { amplitudes }
        }
        _ => unreachable!(),
    };
    Some(GeometrySpec::new(kind, sites?, boundary))
}

fn parse_couplings(v: &Value, issues: &mut Vec<String>) -> Vec<f64> {
    let items: Vec<(String, &Value)> = match v {
        Value::Array(a) if a.is_empty() => {
            issues.push("g: empty list".into());
            return Vec::new();
        }
        Value::Array(a) => a
            .iter()
            .enumerate()
            .map(|(i, x)| (format!("g[{i}]"), x))
            .collect(),
        other => vec![("g".to_string(), other)],
    };
    let mut out = Vec::new();
    for (path, x) in items {
        match x.as_f64() {
            Some(g) if g.is_finite() && g >= 0.0 => out.push(g),
            _ => issues.push(format!("{path}: expected a finite non-negative number")),
        }
    }
    out
}

fn parse_positions(v: &Value, sites: Option<usize>, issues: &mut Vec<String>) -> Sites {
    match v {
        Value::String(s) if s == "all" => Sites::All,
        Value::Array(a) if !a.is_empty() => {
            let mut out = Vec::new();
            for (i, x) in a.iter().enumerate() {
                match x.as_u64() {
                    Some(p) if sites.is_none_or(|l| (1..=l as u64).contains(&p)) => {
                        out.push(p as usize)
                    }
                    _ => issues.push(format!(
                        "positions[{i}]: expected a site in 1..={}",
                        sites.map_or("L".to_string(), |l| l.to_string())
                    )),
                }
            }
            Sites::List(out)
        }
        _ => {
            issues.push("positions: expected \"all\" or a non-empty list of sites".into());
            Sites::All
        }
    }
}

fn parse_window(v: &Value, issues: &mut Vec<String>) -> Option<WindowConfig> {
    let Some(obj) = v.as_object() else {
        issues.push("fit_window: expected an object".into());
        return None;
    };
    let mut r = Reader {
        obj,
        path: "fit_window".into(),
        issues,
    };
    r.reject_unknown(&["t_min", "t_max", "strict", "edge_fraction"]);
    let t_min = r.number("t_min");
    let t_max = r.number("t_max");
    let strict = match r.present("strict") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            r.issue("strict", "expected a boolean");
            false
        }
    };
    let edge_fraction = r.number("edge_fraction").unwrap_or(0.0);
    if !(0.0..0.5).contains(&edge_fraction) {
        r.issue(
            "edge_fraction",
            format!("must lie in [0, 0.5), got {edge_fraction}"),
        );
    }
    if let (Some(a), Some(b)) = (t_min, t_max) {
        if a > b {
            r.issue("t_max", format!("must not be below t_min = {a}"));
        }
    }
    Some(WindowConfig {
        t_min,
        t_max,
        strict,
        edge_fraction,
    })
}

/// Parses and validates a JSON configuration, reporting every violation.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Some(obj) = root.as_object() else {
        return Err(ConfigError::Invalid(vec![
            "<root>: expected an object".into()
        ]));
    };
    let mut issues = Vec::new();
    let mut r = Reader {
        obj,
        path: String::new(),
        issues: &mut issues,
    };
    r.reject_unknown(TOP_KEYS);

    let sites = match r.present("L") {
        None => {
            r.issue("L", "missing");
            None
        }
        Some(_) => match r.integer("L") {
            Some(l) if l < 2 => {
                r.issue("L", format!("must be at least 2, got {l}"));
                None
            }
            Some(l) if l % 2 != 0 => {
                r.issue("L", format!("must be even, got {l}"));
                None
            }
            Some(l) => Some(l as usize),
            None => None,
        },
    };
    let mu = match r.present("mu") {
        None => Some(DEFAULT_MU),
        Some(_) => r.positive("mu"),
    };
    let site = r.integer("site").map(|p| p as usize);
    let t_max = if r.present("t_max").is_some() {
        r.positive("t_max")
    } else {
        Some(DEFAULT_T_MAX)
    };
    let samples = match r.integer("samples") {
        Some(n) if n < 2 => {
            r.issue("samples", format!("must be at least 2, got {n}"));
            None
        }
        Some(n) => Some(n as usize),
        None if r.present("samples").is_some() => None,
        None => Some(DEFAULT_SAMPLES),
    };
    let weight_floor = match r.number("weight_floor") {
        Some(w) if w < 0.0 => {
            r.issue("weight_floor", "must be non-negative");
            None
        }
        Some(w) => Some(w),
        None => Some(DEFAULT_WEIGHT_FLOOR),
    };
    let bin_width = r.positive("bin_width");
    let degeneracy_tol = r.positive("degeneracy_tol");
    let zero_mode_tol = r.positive("zero_mode_tol");
    let zero_modes = match r.string("zero_modes", &["reject", "half"]) {
        Some("half") => ZeroModePolicy::Half,
        _ => ZeroModePolicy::Reject,
    };
    let solver = match r.string("solver", &["update", "dense"]) {
        Some("dense") => SolverRoute::Dense,
        _ => SolverRoute::Update,
    };
    let format = match r.string("format", &["csv", "json"]) {
        Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        _ => None,
    };
    let output = r.string("output", &[]).map(PathBuf::from);

    let geometry = match obj.get("geometry") {
        None => {
            issues.push("geometry: missing".into());
            None
        }
        Some(v) => parse_geometry(v, sites, &mut issues),
    };
    let g = match obj.get("g") {
        None => vec![DEFAULT_G],
        Some(v) => parse_couplings(v, &mut issues),
    };
    let positions = match obj.get("positions") {
        None => Sites::All,
        Some(v) => parse_positions(v, sites, &mut issues),
    };
    let fit_window = obj
        .get("fit_window")
        .filter(|v| !v.is_null())
        .and_then(|v| parse_window(v, &mut issues));
    if let (Some(p), Some(l)) = (site, sites) {
        if !(1..=l).contains(&p) {
            issues.push(format!("site: must lie in 1..={l}, got {p}"));
        }
    }

    let profile = geometry
        .as_ref()
        .and_then(|spec| match build_profile(spec) {
            Ok(p) => Some(p),
            Err(e) => {
                issues.push(format!("geometry: {e}"));
                None
            }
        });

    if !issues.is_empty() {
        return Err(ConfigError::Invalid(issues));
    }
    let (geometry, profile, sites) = (geometry.unwrap(), profile.unwrap(), sites.unwrap());
    Ok(RunConfig {
        geometry,
        mu: mu.unwrap(),
        g,
        positions,
        site: site.unwrap_or(sites / 2),
        t_max: t_max.unwrap(),
        samples: samples.unwrap(),
        weight_floor: weight_floor.unwrap(),
        bin_width,
        fit_window,
        quench: QuenchOptions {
            zero_mode_tol,
            degeneracy_tol,
            zero_modes,
            solver,
        },
        output,
        format,
        profile,
    })
}
