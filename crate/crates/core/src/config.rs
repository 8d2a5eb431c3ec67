//! Run configuration and its validation.
//!
//! A config is a JSON document:
//!
//! ```json
//! {
//!   "scenario": "certify",
//!   "system": { "alpha": 0.5, "beta": 1.0, "b": 1.0, "zeta_pert": 0.0 },
//!   "spectrum": { "example": "dirichlet:N=64" },
//!   "initial_data": "spread_1_over_n",
//!   "time": { "t_end": 200.0, "n_steps": 2000, "t_min": 1.0 },
//!   "outputs": "out",
//!   "seed": 0
//! }
//! ```
//!
//! `spectrum` may instead be `{ "file": "path.json" }` holding
//! `{"label": ..., "eigenvalues": [...]}`, and `initial_data` may be
//! `{ "file": "coeffs.json" }` holding one `[u, v, u', v']` row per mode.
//! The `scalar` scenario reads `"scalar": { "lambda", "mu", "c", "eps" }`
//! instead of `system` and `spectrum`. The `sweep` scenario reads
//! `"sweep": { "betas", "alpha_fractions", "control", "ceiling" }` and takes
//! `b` and `zeta_pert` from `system` when present.
//!
//! Defaults: `b = 1`, `zeta_pert = 0`, `initial_data = spread_1_over_n`,
//! `t_end = 200`, `n_steps = 2000`, `t_min = 1` (scalar: `t_end = 40`,
//! `n_steps = 4000`), `outputs = "out"`, `seed = 0`,
//! `grid = { "max_factor": 1e6, "per_decade": 20 }`,
//! sweep `betas = [0, 0.5, 1, 1.25, 1.5]`, `alpha_fractions = [0.5]`,
//! `control = true`, `ceiling = {"rule": "certified"}`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::catalog::ExampleSpec;
use crate::decay::{CeilingRule, InitRecipe};
use crate::lyapunov::{DEFAULT_GRID_MAX_FACTOR, DEFAULT_GRID_PER_DECADE};
use crate::spectral::{SystemParams, BETA_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Scalar,
    Simulate,
    Certify,
    Sweep,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Scalar, Scenario::Simulate, Scenario::Certify, Scenario::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Scalar => "scalar",
            Scenario::Simulate => "simulate",
            Scenario::Certify => "certify",
            Scenario::Sweep => "sweep",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<_> = Scenario::ALL.iter().map(|x| x.name()).collect();
            format!("unknown scenario '{s}'; valid scenarios: {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSection {
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub zeta_pert: f64,
}

impl SystemSection {
    pub fn params(&self) -> SystemParams {
        SystemParams { alpha: self.alpha, beta: self.beta, damping_b: self.b, zeta_pert: self.zeta_pert }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Example(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialData {
    Preset(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub t_end: f64,
    pub n_steps: usize,
    pub t_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarSection {
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
    /// `None` selects `ε` automatically.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub betas: Vec<f64>,
    pub alpha_fractions: Vec<f64>,
    /// Append an `α = 0` control cell with `v`-only data.
    pub control: bool,
    pub ceiling: CeilingRule,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            betas: vec![0.0, 0.5, 1.0, 1.25, 1.5],
            alpha_fractions: vec![0.5],
            control: true,
            ceiling: CeilingRule::Certified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub max_factor: f64,
    pub per_decade: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { max_factor: DEFAULT_GRID_MAX_FACTOR, per_decade: DEFAULT_GRID_PER_DECADE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub system: Option<SystemSection>,
    pub spectrum: Option<SpectrumSource>,
    pub initial_data: InitialData,
    pub time: TimeConfig,
    pub outputs: PathBuf,
    pub seed: u64,
    pub scalar: Option<ScalarSection>,
    pub sweep: Option<SweepSection>,
    pub grid: GridConfig,
}

/// One validation failure, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker {
    errors: Vec<ConfigError>,
}

impl Checker {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError { path: path.into(), message: message.into() });
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            self.err(path, "expected an object");
        }
        o
    }

    fn unknown_keys(&mut self, obj: &Map<String, Value>, path: &str, known: &[&str]) {
        for k in obj.keys().filter(|k| !known.contains(&k.as_str())) {
            self.err(join(path, k), format!("unknown field (known: {})", known.join(", ")));
        }
    }

    /// A finite number satisfying `ok`, or the default when absent.
    fn number(
        &mut self,
        obj: &Map<String, Value>,
        path: &str,
        key: &str,
        default: Option<f64>,
        ok: impl Fn(f64) -> Result<(), String>,
    ) -> Option<f64> {
        let p = join(path, key);
        match obj.get(key) {
            None | Some(Value::Null) => {
                if default.is_none() {
                    self.err(p, "required field is missing");
                }
                default
            }
            Some(v) => match v.as_f64().filter(|x| x.is_finite()) {
                None => {
                    self.err(p, format!("expected a finite number, got {v}"));
                    None
                }
                Some(x) => match ok(x) {
                    Ok(()) => Some(x),
                    Err(m) => {
                        self.err(p, m);
                        None
                    }
                },
            },
        }
    }

    fn integer(&mut self, obj: &Map<String, Value>, path: &str, key: &str, default: u64, min: u64) -> Option<u64> {
        let p = join(path, key);
        match obj.get(key) {
            None | Some(Value::Null) => Some(default),
            Some(v) => match v.as_u64() {
                Some(x) if x >= min => Some(x),
                _ => {
                    self.err(p, format!("expected an integer >= {min}, got {v}"));
                    None
                }
            },
        }
    }

    fn number_list(&mut self, obj: &Map<String, Value>, path: &str, key: &str, default: Vec<f64>) -> Option<Vec<f64>> {
        let p = join(path, key);
        match obj.get(key) {
            None | Some(Value::Null) => Some(default),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                let before = self.errors.len();
                for (i, v) in items.iter().enumerate() {
                    match v.as_f64().filter(|x| x.is_finite()) {
                        Some(x) => out.push(x),
                        None => self.err(format!("{p}[{i}]"), format!("expected a finite number, got {v}")),
                    }
                }
                (self.errors.len() == before).then_some(out)
            }
            Some(v) => {
                self.err(p, format!("expected an array of numbers, got {v}"));
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn positive(x: f64) -> Result<(), String> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn nonnegative(x: f64) -> Result<(), String> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(format!("must be >= 0, got {x}"))
    }
}

fn beta_range(x: f64) -> Result<(), String> {
    if (0.0..=BETA_MAX).contains(&x) {
        Ok(())
    } else {
        Err(format!("must lie in [0, {BETA_MAX}], got {x}"))
    }
}

fn any(_: f64) -> Result<(), String> {
    Ok(())
}

const TOP_KEYS: [&str; 10] =
    ["scenario", "system", "spectrum", "initial_data", "time", "outputs", "seed", "scalar", "sweep", "grid"];

/// Checks the whole document and reports every violation at once.
pub fn validate_config(doc: &Value) -> Result<RunConfig, Vec<ConfigError>> {
    let mut ck = Checker { errors: Vec::new() };
    let Some(top) = ck.object(doc, "<root>") else {
        return Err(ck.errors);
    };
    ck.unknown_keys(top, "", &TOP_KEYS);

    let scenario = match top.get("scenario") {
        None => {
            ck.err("scenario", "required field is missing");
            None
        }
        Some(Value::String(s)) => match s.parse::<Scenario>() {
            Ok(x) => Some(x),
            Err(m) => {
                ck.err("scenario", m);
                None
            }
        },
        Some(v) => {
            ck.err("scenario", format!("expected a string, got {v}"));
            None
        }
    };

    let system_needed = matches!(scenario, Some(Scenario::Simulate | Scenario::Certify));
    let system = match top.get("system") {
        None if system_needed => {
            ck.err("system", "required for this scenario");
            None
        }
        None => None,
        Some(v) => ck.object(v, "system").and_then(|o| {
            ck.unknown_keys(o, "system", &["alpha", "beta", "b", "zeta_pert"]);
            // sweep takes α and β from its grid
            let grid_owned = scenario == Some(Scenario::Sweep);
            let d = |x: f64| grid_owned.then_some(x);
            let alpha = ck.number(o, "system", "alpha", d(0.0), any);
            let beta = ck.number(o, "system", "beta", d(0.0), beta_range);
            let b = ck.number(o, "system", "b", Some(1.0), positive);
            let zeta = ck.number(o, "system", "zeta_pert", Some(0.0), nonnegative);
            Some(SystemSection { alpha: alpha?, beta: beta?, b: b?, zeta_pert: zeta? })
        }),
    };

    let spectrum_needed = matches!(scenario, Some(Scenario::Simulate | Scenario::Certify | Scenario::Sweep));
    let spectrum = match top.get("spectrum") {
        None if spectrum_needed => {
            ck.err("spectrum", "required for this scenario");
            None
        }
        None => None,
        Some(v) => ck.object(v, "spectrum").and_then(|o| {
            ck.unknown_keys(o, "spectrum", &["example", "file"]);
            match (o.get("example"), o.get("file")) {
                (Some(Value::String(s)), None) => match s.parse::<ExampleSpec>() {
                    Ok(_) => Some(SpectrumSource::Example(s.clone())),
                    Err(e) => {
                        ck.err("spectrum.example", e.to_string());
                        None
                    }
                },
                (None, Some(Value::String(f))) => Some(SpectrumSource::File(PathBuf::from(f))),
                _ => {
                    ck.err("spectrum", "expected exactly one of {\"example\": string} or {\"file\": string}");
                    None
                }
            }
        }),
    };

    let initial_data = match top.get("initial_data") {
        None | Some(Value::Null) => Some(InitialData::Preset(InitRecipe::SpreadOneOverN.to_string())),
        Some(Value::String(s)) => match s.parse::<InitRecipe>() {
            Ok(_) => Some(InitialData::Preset(s.clone())),
            Err(e) => {
                ck.err("initial_data", e.to_string());
                None
            }
        },
        Some(Value::Object(o)) => match o.get("file") {
            Some(Value::String(f)) if o.len() == 1 => Some(InitialData::File { file: PathBuf::from(f) }),
            _ => {
                ck.err("initial_data", "expected a preset name or {\"file\": string}");
                None
            }
        },
        Some(v) => {
            ck.err("initial_data", format!("expected a preset name or object, got {v}"));
            None
        }
    };

    let is_scalar = scenario == Some(Scenario::Scalar);
    let (t_end_default, steps_default) = if is_scalar { (40.0, 4000) } else { (200.0, 2000) };
    let empty = Map::new();
    let time = {
        let o = match top.get("time") {
            None => Some(&empty),
            Some(v) => ck.object(v, "time"),
        };
        o.and_then(|o| {
            ck.unknown_keys(o, "time", &["t_end", "n_steps", "t_min"]);
            let t_end = ck.number(o, "time", "t_end", Some(t_end_default), positive);
            let n_steps = ck.integer(o, "time", "n_steps", steps_default, 1);
            let t_min = ck.number(o, "time", "t_min", Some(1.0), positive);
            if let (Some(a), Some(b)) = (t_min, t_end) {
                if a > b && !is_scalar {
                    ck.err("time.t_min", format!("t_min = {a} exceeds t_end = {b}"));
                }
            }
            Some(TimeConfig { t_end: t_end?, n_steps: n_steps? as usize, t_min: t_min? })
        })
    };

    let outputs = match top.get("outputs") {
        None => Some(PathBuf::from("out")),
        Some(Value::String(s)) if !s.trim().is_empty() => Some(PathBuf::from(s)),
        Some(v) => {
            ck.err("outputs", format!("expected a nonempty directory path, got {v}"));
            None
        }
    };

    let seed = match top.get("seed") {
        None => Some(0),
        Some(v) => v.as_u64().or_else(|| {
            ck.err("seed", format!("expected a nonnegative integer, got {v}"));
            None
        }),
    };

    let scalar = match top.get("scalar") {
        None if is_scalar => {
            ck.err("scalar", "required for this scenario");
            None
        }
        None => None,
        Some(v) => ck.object(v, "scalar").and_then(|o| {
            ck.unknown_keys(o, "scalar", &["lambda", "mu", "c", "eps"]);
            let lambda = ck.number(o, "scalar", "lambda", None, positive);
            let mu = ck.number(o, "scalar", "mu", None, positive);
            let c = ck.number(o, "scalar", "c", None, |c| {
                if c != 0.0 {
                    Ok(())
                } else {
                    Err("coupling c must be nonzero".into())
                }
            });
            let eps = match o.get("eps") {
                None | Some(Value::Null) => Some(None),
                Some(_) => ck.number(o, "scalar", "eps", None, nonnegative).map(Some),
            };
            if let (Some(l), Some(m), Some(c)) = (lambda, mu, c) {
                if c * c >= l * m {
                    ck.err("scalar.c", format!("need c^2 < lambda*mu, got {} >= {}", c * c, l * m));
                }
            }
            Some(ScalarSection { lambda: lambda?, mu: mu?, c: c?, eps: eps? })
        }),
    };

    let sweep = match top.get("sweep") {
        None if scenario == Some(Scenario::Sweep) => Some(SweepSection::default()),
        None => None,
        Some(v) => ck.object(v, "sweep").and_then(|o| {
            ck.unknown_keys(o, "sweep", &["betas", "alpha_fractions", "control", "ceiling"]);
            let d = SweepSection::default();
            let betas = ck.number_list(o, "sweep", "betas", d.betas);
            if let Some(bs) = &betas {
                for (i, &b) in bs.iter().enumerate() {
                    if let Err(m) = beta_range(b) {
                        ck.err(format!("sweep.betas[{i}]"), m);
                    }
                }
            }
            let fractions = ck.number_list(o, "sweep", "alpha_fractions", d.alpha_fractions);
            let control = match o.get("control") {
                None => Some(true),
                Some(Value::Bool(b)) => Some(*b),
                Some(v) => {
                    ck.err("sweep.control", format!("expected a boolean, got {v}"));
                    None
                }
            };
            let ceiling = match o.get("ceiling") {
                None => Some(CeilingRule::Certified),
                Some(v) => match serde_json::from_value::<CeilingRule>(v.clone()) {
                    Ok(CeilingRule::EnergyMultiple { k }) if !(k > 0.0 && k.is_finite()) => {
                        ck.err("sweep.ceiling.k", format!("must be > 0, got {k}"));
                        None
                    }
                    Ok(r) => Some(r),
                    Err(_) => {
                        ck.err(
                            "sweep.ceiling",
                            "expected {\"rule\": \"certified\"} or {\"rule\": \"energy_multiple\", \"k\": number}",
                        );
                        None
                    }
                },
            };
            Some(SweepSection { betas: betas?, alpha_fractions: fractions?, control: control?, ceiling: ceiling? })
        }),
    };

    let grid = match top.get("grid") {
        None => Some(GridConfig::default()),
        Some(v) => ck.object(v, "grid").and_then(|o| {
            ck.unknown_keys(o, "grid", &["max_factor", "per_decade"]);
            let max_factor = ck.number(o, "grid", "max_factor", Some(DEFAULT_GRID_MAX_FACTOR), |x| {
                if x >= 1.0 {
                    Ok(())
                } else {
                    Err(format!("must be >= 1, got {x}"))
                }
            });
            let per_decade = ck.integer(o, "grid", "per_decade", DEFAULT_GRID_PER_DECADE as u64, 1);
            Some(GridConfig { max_factor: max_factor?, per_decade: per_decade? as usize })
        }),
    };

    if !ck.errors.is_empty() {
        return Err(ck.errors);
    }
    match (scenario, initial_data, time, outputs, seed, grid) {
        (Some(scenario), Some(initial_data), Some(time), Some(outputs), Some(seed), Some(grid)) => Ok(RunConfig {
            scenario,
            system,
            spectrum,
            initial_data,
            time,
            outputs,
            seed,
            scalar,
            sweep,
            grid,
        }),
        _ => Err(vec![ConfigError { path: "<root>".into(), message: "incomplete configuration".into() }]),
    }
}

/// Parses and validates a JSON config text.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| vec![ConfigError { path: "<root>".into(), message: format!("invalid JSON: {e}") }])?;
    validate_config(&doc)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("config serializes")
    }

    /// The document form accepted by [`validate_config`].
    pub fn to_document(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(o) = &mut v {
            o.retain(|_, x| !x.is_null());
        }
        v
    }
}
