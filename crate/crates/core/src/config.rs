//! Run configuration: a flat `[section]` / `key = value` text format with
//! `#` comments.
//!
//! ```text
//! [run]
//! experiment = simulate
//! t_end = 2.0
//!
//! [params]
//! gamma = 0.5
//!
//! [initial]
//! recipe = cosine
//! amplitude = 0.05
//! ```
//!
//! Every key has a default, so only the values that differ need to appear.
//! [`RunConfig::serialize`] writes all of them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiments::{MmsStudy, PulseConfig, Recipe, ReflectionSetup};
use crate::grid::Grid;
use crate::model::PhysicalParams;
use crate::stepper::{BoundaryKind, Scheme, StepperConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExperimentKind {
    #[default]
    Simulate,
    Reflection,
    CompatCheck,
    Mms,
}

impl ExperimentKind {
    pub const NAMES: [&'static str; 4] = ["simulate", "reflection", "compat-check", "mms"];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Reflection => "reflection",
            ExperimentKind::CompatCheck => "compat-check",
            ExperimentKind::Mms => "mms",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simulate" => Some(ExperimentKind::Simulate),
            "reflection" => Some(ExperimentKind::Reflection),
            "compat-check" => Some(ExperimentKind::CompatCheck),
            "mms" => Some(ExperimentKind::Mms),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            nx: 65,
            ny: 65,
            x: (0.0, 1.0),
            y: (0.0, 1.0),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        match self.dim {
            1 => Grid::interval(self.x.0, self.x.1, self.nx),
            _ => Grid::rectangle(self.x, self.y, self.nx, self.ny),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsSpec {
    pub eps: f64,
    pub rate: f64,
    pub resolutions: Vec<usize>,
    pub dt: f64,
    pub dts: Vec<f64>,
    pub temporal_n: usize,
}

impl Default for MmsSpec {
    fn default() -> Self {
        Self {
            eps: 0.01,
            rate: 1.0,
            resolutions: vec![33, 65, 129],
            dt: 1e-3,
            dts: vec![0.1, 0.05, 0.025],
            temporal_n: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub t_end: f64,
    pub seed: u64,
    pub output: String,
    pub params: PhysicalParams,
    pub boundary: BoundaryKind,
    pub grid: GridSpec,
    pub stepper: StepperConfig,
    pub recipe: Recipe,
    pub enforce_compatibility: bool,
    pub mms: MmsSpec,
    /// Positions are measured from `grid.x.0`.
    pub pulse: PulseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Simulate,
            t_end: 1.0,
            seed: 0,
            output: "out".into(),
            params: PhysicalParams::new(1.0, 1.0, 0.5).expect("default parameters are valid"),
            boundary: BoundaryKind::Absorbing,
            grid: GridSpec::default(),
            stepper: StepperConfig::default(),
            recipe: Recipe::Equilibrium { r: 0.0 },
            enforce_compatibility: false,
            mms: MmsSpec::default(),
            pulse: PulseConfig::default(),
        }
    }
}

/// One problem found while reading a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    /// `section.key`, or just the section.
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 7] = [
    ("run", &["experiment", "t_end", "seed", "output"]),
    ("params", &["c", "beta", "gamma", "boundary"]),
    ("grid", &["dim", "nx", "ny", "x_min", "x_max", "y_min", "y_max"]),
    ("stepper", &["dt", "scheme", "newton_tol", "newton_max_iter", "eps_deg"]),
    ("initial", &["recipe", "enforce_compatibility"]),
    ("mms", &["eps", "rate", "resolutions", "dt", "dts", "temporal_n"]),
    ("reflection", &["amplitude", "center", "width", "probe"]),
];

fn nearest<'a>(word: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates.into_iter().min_by_key(|c| strsim::levenshtein(word, c))
}

struct Entry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

struct Reader {
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: Option<usize>, field: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            field: field.into(),
            message: message.into(),
        });
    }

    fn float(&mut self, e: &Entry) -> Option<f64> {
        match e.value.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.issue(
                    Some(e.line),
                    field(e),
                    format!("expected a finite number, got {:?}", e.value),
                );
                None
            }
        }
    }

    fn uint<T: std::str::FromStr>(&mut self, e: &Entry) -> Option<T> {
        match e.value.parse::<T>() {
            Ok(x) => Some(x),
            Err(_) => {
                self.issue(
                    Some(e.line),
                    field(e),
                    format!("expected a non-negative integer, got {:?}", e.value),
                );
                None
            }
        }
    }

    fn list<T: std::str::FromStr>(&mut self, e: &Entry) -> Option<Vec<T>> {
        let items: std::result::Result<Vec<T>, _> = e.value.split(',').map(|s| s.trim().parse::<T>()).collect();
        match items {
            Ok(v) if !v.is_empty() => Some(v),
            _ => {
                self.issue(
                    Some(e.line),
                    field(e),
                    format!("expected a comma-separated list, got {:?}", e.value),
                );
                None
            }
        }
    }
}

fn field(e: &Entry) -> String {
    format!("{}.{}", e.section, e.key)
}

fn lex(text: &str, r: &mut Reader) -> Vec<Entry> {
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = match rest.strip_suffix(']') {
                Some(n) => n.trim(),
                None => {
                    r.issue(Some(line), content, "unterminated section header");
                    section = None;
                    continue;
                }
            };
            if SECTIONS.iter().any(|(s, _)| *s == name) {
                section = Some(name.to_string());
            } else {
                let hint = nearest(name, SECTIONS.iter().map(|(s, _)| *s)).unwrap_or("run");
                r.issue(
                    Some(line),
                    name,
                    format!("unknown section (nearest valid section: [{hint}])"),
                );
                section = None;
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            r.issue(Some(line), content, "expected `key = value`");
            continue;
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let Some(sec) = section.clone() else {
            r.issue(Some(line), key, "key outside of a known section");
            continue;
        };
        if !seen.insert((sec.clone(), key.clone())) {
            r.issue(Some(line), format!("{sec}.{key}"), "duplicate key");
            continue;
        }
        entries.push(Entry {
            line,
            section: sec,
            key,
            value,
        });
    }
    entries
}

/// Parses and validates a config, reporting every problem found.
pub fn parse_config_detailed(text: &str) -> std::result::Result<RunConfig, Vec<ConfigIssue>> {
    let mut r = Reader { issues: Vec::new() };
    let entries = lex(text, &mut r);
    let mut cfg = RunConfig::default();
    let (mut c, mut beta, mut gamma) = (1.0, 1.0, 0.5);
    let mut eps_deg_line = None;
    let mut recipe_id: Option<(usize, String)> = None;
    let mut recipe_params: Vec<&Entry> = Vec::new();
    let mut line_of = std::collections::BTreeMap::new();

    for e in &entries {
        line_of.insert(field(e), e.line);
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == e.section)
            .map(|(_, keys)| *keys)
            .unwrap_or(&[]);
        match (e.section.as_str(), e.key.as_str()) {
            ("run", "experiment") => match ExperimentKind::parse(&e.value) {
                Some(k) => cfg.experiment = k,
                None => r.issue(
                    Some(e.line),
                    field(e),
                    format!(
                        "unknown experiment {:?} (expected one of: {})",
                        e.value,
                        ExperimentKind::NAMES.join(", ")
                    ),
                ),
            },
            ("run", "t_end") => {
                if let Some(x) = r.float(e) {
                    cfg.t_end = x;
                }
            }
            ("run", "seed") => {
                if let Some(x) = r.uint(e) {
                    cfg.seed = x;
                }
            }
            ("run", "output") => cfg.output = e.value.clone(),
            ("params", "c") => c = r.float(e).unwrap_or(c),
            ("params", "beta") => beta = r.float(e).unwrap_or(beta),
            ("params", "gamma") => gamma = r.float(e).unwrap_or(gamma),
            ("params", "boundary") => match BoundaryKind::parse(&e.value) {
                Some(b) => cfg.boundary = b,
                None => r.issue(
                    Some(e.line),
                    field(e),
                    format!("unknown boundary {:?} (expected abc, neumann or dirichlet-v)", e.value),
                ),
            },
            ("grid", "dim") => {
                if let Some(x) = r.uint(e) {
                    cfg.grid.dim = x;
                }
            }
            ("grid", "nx") => {
                if let Some(x) = r.uint(e) {
                    cfg.grid.nx = x;
                }
            }
            ("grid", "ny") => {
                if let Some(x) = r.uint(e) {
                    cfg.grid.ny = x;
                }
            }
            ("grid", "x_min") => cfg.grid.x.0 = r.float(e).unwrap_or(cfg.grid.x.0),
            ("grid", "x_max") => cfg.grid.x.1 = r.float(e).unwrap_or(cfg.grid.x.1),
            ("grid", "y_min") => cfg.grid.y.0 = r.float(e).unwrap_or(cfg.grid.y.0),
            ("grid", "y_max") => cfg.grid.y.1 = r.float(e).unwrap_or(cfg.grid.y.1),
            ("stepper", "dt") => cfg.stepper.dt = r.float(e).unwrap_or(cfg.stepper.dt),
            ("stepper", "scheme") => match Scheme::parse(&e.value) {
                Some(s) => cfg.stepper.scheme = s,
                None => r.issue(
                    Some(e.line),
                    field(e),
                    format!("unknown scheme {:?} (expected tr-bdf2 or backward-euler)", e.value),
                ),
            },
            ("stepper", "newton_tol") => cfg.stepper.newton_tol = r.float(e).unwrap_or(cfg.stepper.newton_tol),
            ("stepper", "newton_max_iter") => {
                if let Some(x) = r.uint(e) {
                    cfg.stepper.newton_max_iter = x;
                }
            }
            ("stepper", "eps_deg") => {
                eps_deg_line = Some(e.line);
                cfg.stepper.eps_deg = r.float(e);
            }
            ("initial", "recipe") => recipe_id = Some((e.line, e.value.clone())),
            ("initial", "enforce_compatibility") => match e.value.as_str() {
                "true" => cfg.enforce_compatibility = true,
                "false" => cfg.enforce_compatibility = false,
                _ => r.issue(
                    Some(e.line),
                    field(e),
                    format!("expected true or false, got {:?}", e.value),
                ),
            },
            ("initial", _) => recipe_params.push(e),
            ("mms", "eps") => cfg.mms.eps = r.float(e).unwrap_or(cfg.mms.eps),
            ("mms", "rate") => cfg.mms.rate = r.float(e).unwrap_or(cfg.mms.rate),
            ("mms", "resolutions") => {
                if let Some(v) = r.list(e) {
                    cfg.mms.resolutions = v;
                }
            }
            ("mms", "dt") => cfg.mms.dt = r.float(e).unwrap_or(cfg.mms.dt),
            ("mms", "dts") => {
                if let Some(v) = r.list(e) {
                    cfg.mms.dts = v;
                }
            }
            ("mms", "temporal_n") => {
                if let Some(x) = r.uint(e) {
                    cfg.mms.temporal_n = x;
                }
            }
            ("reflection", "amplitude") => cfg.pulse.amplitude = r.float(e).unwrap_or(cfg.pulse.amplitude),
            ("reflection", "center") => cfg.pulse.center = r.float(e).unwrap_or(cfg.pulse.center),
            ("reflection", "width") => cfg.pulse.width = r.float(e).unwrap_or(cfg.pulse.width),
            ("reflection", "probe") => cfg.pulse.probe = r.float(e).unwrap_or(cfg.pulse.probe),
            _ => {
                let hint = nearest(&e.key, known.iter().copied()).unwrap_or("");
                r.issue(
                    Some(e.line),
                    field(e),
                    format!("unknown key {:?} (nearest valid key: {hint})", e.key),
                );
            }
        }
    }

    let at = |f: &str| line_of.get(f).copied();

    // Recipe and its parameters.
    if let Some((line, id)) = &recipe_id {
        match Recipe::with_defaults(id) {
            Some(rec) => cfg.recipe = rec,
            None => {
                let hint = nearest(id, Recipe::IDS).unwrap_or("equilibrium");
                r.issue(
                    Some(*line),
                    "initial.recipe",
                    format!("unknown recipe {id:?} (nearest: {hint})"),
                );
            }
        }
    }
    for e in recipe_params {
        let Some(value) = r.float(e) else { continue };
        if let Err(msg) = cfg.recipe.set(&e.key, value) {
            let names = cfg.recipe.parameter_names();
            let hint =
                nearest(&e.key, names.iter().copied().chain(["recipe", "enforce_compatibility"])).unwrap_or("recipe");
            r.issue(Some(e.line), field(e), format!("{msg} (nearest valid key: {hint})"));
        }
    }

    // Physical parameters.
    if !(c > 0.0) {
        r.issue(at("params.c"), "params.c", format!("must be > 0 (got {c})"));
    }
    if !(beta > 0.0) {
        r.issue(at("params.beta"), "params.beta", format!("must be > 0 (got {beta})"));
    }
    if !(gamma >= 0.0) {
        r.issue(
            at("params.gamma"),
            "params.gamma",
            format!("must be >= 0 (got {gamma}); use 0 for the linear problem"),
        );
    }
    if c > 0.0 && beta > 0.0 && gamma >= 0.0 {
        let params = if gamma == 0.0 {
            PhysicalParams::linear(c, beta)
        } else {
            PhysicalParams::new(c, beta, gamma)
        };
        match params {
            Ok(p) => cfg.params = p,
            Err(e) => r.issue(at("params.c"), "params", e.to_string()),
        }
    }

    // Run.
    if !(cfg.t_end > 0.0) {
        r.issue(at("run.t_end"), "run.t_end", format!("must be > 0 (got {})", cfg.t_end));
    }
    if cfg.output.is_empty() {
        r.issue(at("run.output"), "run.output", "must not be empty");
    }

    // Grid.
    let g = cfg.grid;
    if !(g.dim == 1 || g.dim == 2) {
        r.issue(at("grid.dim"), "grid.dim", format!("must be 1 or 2 (got {})", g.dim));
    }
    if g.nx < 3 {
        r.issue(at("grid.nx"), "grid.nx", format!("must be >= 3 (got {})", g.nx));
    }
    if g.ny < 3 {
        r.issue(at("grid.ny"), "grid.ny", format!("must be >= 3 (got {})", g.ny));
    }
    if !(g.x.1 > g.x.0) {
        r.issue(
            at("grid.x_max"),
            "grid.x_max",
            format!("must exceed x_min (got {} <= {})", g.x.1, g.x.0),
        );
    }
    if !(g.y.1 > g.y.0) {
        r.issue(
            at("grid.y_max"),
            "grid.y_max",
            format!("must exceed y_min (got {} <= {})", g.y.1, g.y.0),
        );
    }

    // Stepper.
    let s = cfg.stepper;
    if !(s.dt > 0.0) {
        r.issue(at("stepper.dt"), "stepper.dt", format!("must be > 0 (got {})", s.dt));
    }
    if !(s.newton_tol > 0.0) {
        r.issue(
            at("stepper.newton_tol"),
            "stepper.newton_tol",
            format!("must be > 0 (got {})", s.newton_tol),
        );
    }
    if s.newton_max_iter < 1 {
        r.issue(at("stepper.newton_max_iter"), "stepper.newton_max_iter", "must be >= 1");
    }
    if let Some(e) = s.eps_deg {
        if !(e >= 0.0) {
            r.issue(eps_deg_line, "stepper.eps_deg", format!("must be >= 0 (got {e})"));
        }
    }

    // Manufactured solutions.
    let m = &cfg.mms;
    if !(m.rate > 0.0) {
        r.issue(at("mms.rate"), "mms.rate", format!("must be > 0 (got {})", m.rate));
    }
    if !(m.dt > 0.0) {
        r.issue(at("mms.dt"), "mms.dt", format!("must be > 0 (got {})", m.dt));
    }
    if m.resolutions.len() < 2 || m.resolutions.iter().any(|&n| n < 3) {
        r.issue(
            at("mms.resolutions"),
            "mms.resolutions",
            "need at least two entries, each >= 3",
        );
    }
    if m.dts.len() < 3 || m.dts.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        r.issue(at("mms.dts"), "mms.dts", "need at least three positive entries");
    }
    if m.temporal_n < 3 {
        r.issue(at("mms.temporal_n"), "mms.temporal_n", "must be >= 3");
    }

    // Reflection.
    let p = cfg.pulse;
    let length = g.x.1 - g.x.0;
    if !(p.width > 0.0) {
        r.issue(
            at("reflection.width"),
            "reflection.width",
            format!("must be > 0 (got {})", p.width),
        );
    }
    if !(0.0 < p.center && p.center < p.probe && p.probe < length) {
        r.issue(
            at("reflection.probe"),
            "reflection.probe",
            format!(
                "need 0 < center < probe < x_max - x_min (got {}, {}, {length})",
                p.center, p.probe
            ),
        );
    }

    if r.issues.is_empty() {
        Ok(cfg)
    } else {
        r.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(r.issues)
    }
}

/// Parses a config; all problems are joined into one [`Error::Config`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_detailed(text)
        .map_err(|issues| Error::Config(issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n")))
}

fn join<T: std::fmt::Debug>(items: &[T]) -> String {
    items.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Full text form; `parse_config(cfg.serialize()) == cfg`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let g = &self.grid;
        let st = &self.stepper;
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {}", self.output);
        let _ = writeln!(s, "\n[params]");
        let _ = writeln!(s, "c = {:?}", p.c());
        let _ = writeln!(s, "beta = {:?}", p.beta());
        let _ = writeln!(s, "gamma = {:?}", p.gamma());
        let _ = writeln!(s, "boundary = {}", self.boundary.name());
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "dim = {}", g.dim);
        let _ = writeln!(s, "nx = {}", g.nx);
        let _ = writeln!(s, "ny = {}", g.ny);
        let _ = writeln!(s, "x_min = {:?}", g.x.0);
        let _ = writeln!(s, "x_max = {:?}", g.x.1);
        let _ = writeln!(s, "y_min = {:?}", g.y.0);
        let _ = writeln!(s, "y_max = {:?}", g.y.1);
        let _ = writeln!(s, "\n[stepper]");
        let _ = writeln!(s, "dt = {:?}", st.dt);
        let _ = writeln!(s, "scheme = {}", st.scheme.name());
        let _ = writeln!(s, "newton_tol = {:?}", st.newton_tol);
        let _ = writeln!(s, "newton_max_iter = {}", st.newton_max_iter);
        if let Some(e) = st.eps_deg {
            let _ = writeln!(s, "eps_deg = {e:?}");
        }
        let _ = writeln!(s, "\n[initial]");
        let _ = writeln!(s, "recipe = {}", self.recipe.id());
        let _ = writeln!(s, "enforce_compatibility = {}", self.enforce_compatibility);
        for (k, v) in self.recipe.parameters() {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let m = &self.mms;
        let _ = writeln!(s, "\n[mms]");
        let _ = writeln!(s, "eps = {:?}", m.eps);
        let _ = writeln!(s, "rate = {:?}", m.rate);
        let _ = writeln!(s, "resolutions = {}", join(&m.resolutions));
        let _ = writeln!(s, "dt = {:?}", m.dt);
        let _ = writeln!(s, "dts = {}", join(&m.dts));
        let _ = writeln!(s, "temporal_n = {}", m.temporal_n);
        let q = &self.pulse;
        let _ = writeln!(s, "\n[reflection]");
        let _ = writeln!(s, "amplitude = {:?}", q.amplitude);
        let _ = writeln!(s, "center = {:?}", q.center);
        let _ = writeln!(s, "width = {:?}", q.width);
        let _ = writeln!(s, "probe = {:?}", q.probe);
        s
    }

    pub fn mms_study(&self) -> MmsStudy {
        MmsStudy {
            params: self.params,
            dim: self.grid.dim,
            eps: self.mms.eps,
            rate: self.mms.rate,
            t_end: self.t_end,
            scheme: self.stepper.scheme,
            resolutions: self.mms.resolutions.clone(),
            dt: self.mms.dt,
            dts: self.mms.dts.clone(),
            temporal_n: self.mms.temporal_n,
        }
    }

    pub fn reflection_setup(&self) -> ReflectionSetup {
        ReflectionSetup {
            params: self.params,
            length: self.grid.x.1 - self.grid.x.0,
            n: self.grid.nx,
            dt: self.stepper.dt,
            scheme: self.stepper.scheme,
        }
    }
}
