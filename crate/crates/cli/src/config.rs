//! Flat `section.key = value` run configuration.
//!
//! Lines are trimmed; blank lines and lines starting with `#` are ignored, and
//! a `#` after a value starts a comment. Every key may appear once. Unknown
//! keys are rejected, and every error names its line and key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ruelle_core::potentials::BuiltinPotential;
use ruelle_core::{builtin_system, Potential, SystemSpec};

/// A configuration problem, located by line (when it comes from the file) and key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// 1-based line number, `None` for missing keys and command-line overrides.
    pub line: Option<usize>,
    /// The offending key (or flag).
    pub key: String,
    /// What is wrong.
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(
                f,
                "config line {line}, key `{}`: {}",
                self.key, self.message
            ),
            None => write!(f, "config key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parameters of the `curve` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig {
    /// First sample.
    pub t_min: f64,
    /// Last sample.
    pub t_max: f64,
    /// Number of samples.
    pub t_steps: usize,
}

/// Initial bracket of the Bowen-root bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenConfig {
    /// Lower end.
    pub t_lo: f64,
    /// Upper end (expanded automatically when too small).
    pub t_hi: f64,
}

/// Cylinder-measure construction settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    /// Cells lighter than this fraction of the total are not refined.
    pub cell_floor: f64,
    /// Largest word count enumerated exhaustively.
    pub word_budget: usize,
}

/// A validated run configuration with all defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// The dynamical system.
    pub system: SystemSpec,
    /// The potential.
    pub potential: Potential,
    /// Grid nodes for operators and eigenfunctions.
    pub grid_size: usize,
    /// Word depth `n`.
    pub depth: usize,
    /// Anchor point; the hull midpoint when absent.
    pub anchor: Option<f64>,
    /// Allowed branch-tail error for countable families.
    pub trunc_epsilon: f64,
    /// Eigen-solver tolerance.
    pub tol: f64,
    /// Tolerance on the Bowen root.
    pub tol_t: f64,
    /// Power-iteration cap.
    pub max_iter: usize,
    /// Worker threads; the library default when absent.
    pub threads: Option<usize>,
    /// Output file for CSV results.
    pub output_path: Option<PathBuf>,
    /// `curve` settings.
    pub curve: CurveConfig,
    /// `dimension` settings.
    pub bowen: BowenConfig,
    /// `measure` and `gibbs` settings.
    pub measure: MeasureConfig,
}

impl RunConfig {
    /// The anchor actually used.
    pub fn anchor_or_midpoint(&self) -> f64 {
        self.anchor.unwrap_or_else(|| self.system.hull.midpoint())
    }
}

const KEYS: &[&str] = &[
    "system.name",
    "system.N",
    "system.r",
    "system.epsilon",
    "potential.kind",
    "potential.t",
    "potential.values",
    "potential.name",
    "run.grid_size",
    "run.depth",
    "run.anchor",
    "run.trunc_epsilon",
    "run.tol",
    "run.tol_t",
    "run.max_iter",
    "run.threads",
    "output.path",
    "curve.t_min",
    "curve.t_max",
    "curve.t_steps",
    "bowen.t_lo",
    "bowen.t_hi",
    "measure.cell_floor",
    "measure.word_budget",
];

/// Raw entries: key → (line, value).
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.0)
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn string(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|e| e.1.as_str())
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, v)) => parse_real(v)
                .map(Some)
                .map_err(|m| ConfigError::new(Some(*line), key, m)),
        }
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn integer_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.0.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse::<usize>().map_err(|_| {
                ConfigError::new(
                    Some(*line),
                    key,
                    format!("`{v}` is not a nonnegative integer"),
                )
            }),
        }
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.line(key), key, message)
    }
}

fn parse_real(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(format!("`{v}` is not finite")),
        Err(_) => Err(format!("`{v}` is not a number")),
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::new(Some(line), content, "expected `section.key = value`")
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::new(Some(line), key, "unknown key"));
        }
        if value.is_empty() {
            return Err(ConfigError::new(Some(line), key, "missing value"));
        }
        if let Some((first, _)) = map.get(key) {
            return Err(ConfigError::new(
                Some(line),
                key,
                format!("duplicate key (first set on line {first})"),
            ));
        }
        map.insert(key.to_string(), (line, value.to_string()));
    }
    Ok(Entries(map))
}

fn build_system(e: &Entries) -> Result<SystemSpec, ConfigError> {
    let name = e
        .string("system.name")
        .ok_or_else(|| ConfigError::new(None, "system.name", "required key is missing"))?;
    let param_keys: &[&str] = match name {
        "linear_cantor" => &["system.N", "system.r"],
        "perturbed_doubling" => &["system.epsilon"],
        _ => &[],
    };
    for key in ["system.N", "system.r", "system.epsilon"] {
        if e.has(key) && !param_keys.contains(&key) {
            return Err(e.error(key, format!("not a parameter of system `{name}`")));
        }
    }
    let mut params = Vec::with_capacity(param_keys.len());
    for key in param_keys {
        let v = e
            .real(key)?
            .ok_or_else(|| ConfigError::new(None, key, format!("required by system `{name}`")))?;
        params.push(v);
    }
    builtin_system(name, &params).map_err(|err| {
        let key = match &err {
            ruelle_core::Error::InvalidParameter { name: p, .. } => {
                let candidate = format!("system.{p}");
                if e.has(&candidate) {
                    candidate
                } else {
                    "system.name".to_string()
                }
            }
            _ => "system.name".to_string(),
        };
        e.error(&key, err.to_string())
    })
}

fn build_potential(e: &Entries, sys: &SystemSpec) -> Result<Potential, ConfigError> {
    let kind = e.string("potential.kind").unwrap_or("geometric");
    let allowed: &[&str] = match kind {
        "geometric" => &["potential.t"],
        "per_branch_constant" => &["potential.values"],
        "builtin" => &["potential.name"],
        other => {
            return Err(e.error(
                "potential.kind",
                format!(
                    "unknown potential kind `{other}` (geometric, per_branch_constant, builtin)"
                ),
            ))
        }
    };
    for key in ["potential.t", "potential.values", "potential.name"] {
        if e.has(key) && !allowed.contains(&key) {
            return Err(e.error(key, format!("not used by potential kind `{kind}`")));
        }
    }
    match kind {
        "geometric" => Ok(Potential::geometric(e.real_or("potential.t", 1.0)?)),
        "per_branch_constant" => {
            let text = e.string("potential.values").ok_or_else(|| {
                ConfigError::new(None, "potential.values", "required by per_branch_constant")
            })?;
            let values = text
                .split(',')
                .map(|v| parse_real(v.trim()))
                .collect::<Result<Vec<f64>, String>>()
                .map_err(|m| e.error("potential.values", m))?;
            match sys.finite_count() {
                Some(count) if count == values.len() => Ok(Potential::per_branch_constant(values)),
                Some(count) => Err(e.error(
                    "potential.values",
                    format!("{} values for {count} branches", values.len()),
                )),
                None => Err(e.error(
                    "potential.values",
                    "per-branch constants need a finite branch family",
                )),
            }
        }
        _ => {
            let name = e
                .string("potential.name")
                .ok_or_else(|| ConfigError::new(None, "potential.name", "required by builtin"))?;
            let b = BuiltinPotential::from_name(name)
                .map_err(|err| e.error("potential.name", err.to_string()))?;
            Ok(Potential::builtin(b))
        }
    }
}

/// Parse and validate configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;
    let system = build_system(&e)?;
    let potential = build_potential(&e, &system)?;
    let cfg = RunConfig {
        grid_size: e.integer_or("run.grid_size", 257)?,
        depth: e.integer_or("run.depth", 12)?,
        anchor: e.real("run.anchor")?,
        trunc_epsilon: e.real_or("run.trunc_epsilon", 1e-10)?,
        tol: e.real_or("run.tol", 1e-9)?,
        tol_t: e.real_or("run.tol_t", 1e-8)?,
        max_iter: e.integer_or("run.max_iter", 10_000)?,
        threads: match e.has("run.threads") {
            true => Some(e.integer_or("run.threads", 0)?),
            false => None,
        },
        output_path: e.string("output.path").map(PathBuf::from),
        curve: CurveConfig {
            t_min: e.real_or("curve.t_min", 0.0)?,
            t_max: e.real_or("curve.t_max", 1.5)?,
            t_steps: e.integer_or("curve.t_steps", 21)?,
        },
        bowen: BowenConfig {
            t_lo: e.real_or("bowen.t_lo", 0.0)?,
            t_hi: e.real_or("bowen.t_hi", 2.0)?,
        },
        measure: MeasureConfig {
            cell_floor: e.real_or("measure.cell_floor", 1e-3)?,
            word_budget: e.integer_or("measure.word_budget", 1 << 18)?,
        },
        system,
        potential,
    };
    validate(&cfg, &|key| e.line(key))?;
    Ok(cfg)
}

/// Command-line values that replace configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// `--t`: the geometric parameter.
    pub t: Option<f64>,
    /// `--t-min`.
    pub t_min: Option<f64>,
    /// `--t-max`.
    pub t_max: Option<f64>,
    /// `--t-steps`.
    pub t_steps: Option<usize>,
    /// `--depth`.
    pub depth: Option<usize>,
    /// `--out`.
    pub out: Option<PathBuf>,
    /// `--threads`.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Apply command-line overrides and re-validate.
    pub fn apply(mut self, o: &Overrides) -> Result<RunConfig, ConfigError> {
        if let Some(t) = o.t {
            if self.potential.geometric_t().is_none() {
                return Err(ConfigError::new(
                    None,
                    "--t",
                    "needs potential.kind = geometric",
                ));
            }
            if !t.is_finite() {
                return Err(ConfigError::new(None, "--t", "must be finite"));
            }
            self.potential = Potential::geometric(t);
        }
        if let Some(v) = o.t_min {
            self.curve.t_min = v;
        }
        if let Some(v) = o.t_max {
            self.curve.t_max = v;
        }
        if let Some(v) = o.t_steps {
            self.curve.t_steps = v;
        }
        if let Some(v) = o.depth {
            self.depth = v;
        }
        if let Some(v) = &o.out {
            self.output_path = Some(v.clone());
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        validate(&self, &|_| None)?;
        Ok(self)
    }
}

fn validate(cfg: &RunConfig, line: &dyn Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
    let fail = |key: &str, m: &str| Err(ConfigError::new(line(key), key, m));
    if cfg.grid_size < 2 {
        return fail("run.grid_size", "must be at least 2");
    }
    if cfg.depth < 1 {
        return fail("run.depth", "must be at least 1");
    }
    for (key, v) in [
        ("run.trunc_epsilon", cfg.trunc_epsilon),
        ("run.tol", cfg.tol),
        ("run.tol_t", cfg.tol_t),
        ("measure.cell_floor", cfg.measure.cell_floor),
    ] {
        if !(v > 0.0) {
            return fail(key, "must be positive");
        }
    }
    if cfg.max_iter < 1 {
        return fail("run.max_iter", "must be at least 1");
    }
    if cfg.threads == Some(0) {
        return fail("run.threads", "must be at least 1");
    }
    if let Some(a) = cfg.anchor {
        if !cfg.system.hull.contains(a) {
            return fail("run.anchor", "must lie in the hull of the system");
        }
    }
    if !(cfg.curve.t_max > cfg.curve.t_min) {
        return fail("curve.t_max", "must exceed curve.t_min");
    }
    if cfg.curve.t_steps < 2 {
        return fail("curve.t_steps", "must be at least 2");
    }
    if !(cfg.bowen.t_lo >= 0.0 && cfg.bowen.t_hi >= cfg.bowen.t_lo) {
        return fail("bowen.t_hi", "need 0 ≤ bowen.t_lo ≤ bowen.t_hi");
    }
    if let Some(t) = cfg.potential.geometric_t() {
        if !t.is_finite() {
            return fail("potential.t", "must be finite");
        }
    }
    Ok(())
}
