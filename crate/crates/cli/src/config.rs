//! Flat `key = value` configuration with `[section]` headers.
//!
//! A header `[sim]` prefixes the keys below it, so `dt = 0.1` under it is
//! the key `sim.dt`. `#` starts a comment. Lists are comma separated and may
//! be wrapped in brackets. Later assignments win, and `--set key=value`
//! overrides are applied after the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fieldroad_core::csvio::fmt_f64;
use fieldroad_core::discrete::MIN_NODES;
use fieldroad_core::model::{ModelParams, PeriodicCoefficient, ReactionSpec};
use fieldroad_core::simulate::{simulation_grid, Scheme, SimConfig};
use fieldroad_core::speed::Direction;

use crate::error::{CliError, CliResult};

/// Every key accepted outside `sweep.*`.
pub const KEYS: &[&str] = &[
    "command",
    "output_dir",
    "threads",
    "seed",
    "dump_operator",
    "D",
    "d",
    "mu",
    "nu",
    "L",
    "R",
    "reaction.type",
    "reaction.mean",
    "reaction.cos_amps",
    "reaction.sin_amps",
    "reaction.table",
    "grid.nx",
    "grid.ny",
    "sim.dt",
    "sim.T",
    "sim.scheme",
    "sim.record_every",
    "sim.record_from",
    "sim.domain_copies",
    "sim.edge_guard",
    "init.center",
    "init.width",
    "init.amp_u",
    "init.amp_v",
    "spectral.alpha",
    "spectral.alpha_range",
    "spectral.r0",
    "spectral.r_max",
    "spectral.dy",
    "spectral.tol",
    "spectral.tol_alpha",
    "spectral.tol_limit",
    "spectral.halfplane",
    "spectral.with_strips",
    "spectral.direction",
    "steady.tol",
    "front.level",
    "front.window",
    "front.snapshots",
    "front.pulsating",
    "front.steps_per_period",
    "sweep.quantity",
    "sweep.cap",
];

/// Parameters a sweep can range over, in cross-product order.
pub const SWEEP_AXES: &[&str] = &["D", "d", "mu", "nu", "L", "R", "alpha", "reaction.mean", "reaction.amp"];

/// Common spellings mapped to the key they most likely mean.
const ALIASES: &[(&str, &str)] = &[
    ("diffusivity", "D"),
    ("diffusion", "D"),
    ("road_diffusivity", "D"),
    ("field_diffusivity", "d"),
    ("width", "R"),
    ("period", "L"),
    ("nx", "grid.nx"),
    ("ny", "grid.ny"),
    ("dt", "sim.dt"),
    ("T", "sim.T"),
    ("t_final", "sim.T"),
    ("alpha", "spectral.alpha"),
    ("tol", "spectral.tol"),
    ("threads", "threads"),
    ("out", "output_dir"),
];

fn suggestion(key: &str) -> Option<&'static str> {
    let tail = key.rsplit('.').next().unwrap_or(key);
    let lower = tail.to_ascii_lowercase();
    if let Some((_, to)) = ALIASES.iter().find(|(from, _)| *from == tail || *from == lower) {
        return Some(to);
    }
    KEYS.iter()
        .map(|k| (strsim::jaro_winkler(key, k), *k))
        .filter(|(score, _)| *score >= 0.85)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
}

fn unknown_key(key: &str) -> CliError {
    match suggestion(key) {
        Some(s) => CliError::Config(format!("unknown key \"{key}\" (did you mean \"{s}\"?)")),
        None => CliError::Config(format!("unknown key \"{key}\"")),
    }
}

/// Canonical spelling of `key`, or an error naming it.
pub fn canonical_key(key: &str) -> CliResult<String> {
    let key = key.trim();
    let key = key.strip_prefix("model.").unwrap_or(key);
    let key = key.strip_suffix("[]").unwrap_or(key);
    if KEYS.contains(&key) {
        return Ok(key.to_string());
    }
    if let Some(axis) = key.strip_prefix("sweep.") {
        if SWEEP_AXES.contains(&axis) {
            return Ok(key.to_string());
        }
    }
    Err(unknown_key(key))
}

/// Raw assignments after file and overrides, keyed by canonical name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = canonical_key(key)?;
        self.values.insert(key, unquote(value.trim()).to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, flag: &str) -> CliResult<()> {
        let (key, value) = flag
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override \"{flag}\" is not of the form key=value")))?;
        if key.trim().is_empty() {
            return Err(CliError::Config(format!("override \"{flag}\" has an empty key")));
        }
        self.set(key, value)
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

fn unquote(v: &str) -> &str {
    for q in ['"', '\''] {
        if v.len() >= 2 && v.starts_with(q) && v.ends_with(q) {
            return &v[1..v.len() - 1];
        }
    }
    v
}

/// Parses config text into raw assignments.
pub fn parse_text(text: &str) -> CliResult<RawConfig> {
    let mut raw = RawConfig::default();
    let mut section = String::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {line_no}: unterminated section header")))?
                .trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(CliError::Config(format!("line {line_no}: bad section name \"{name}\"")));
            }
            section = format!("{name}.");
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {line_no}: expected key = value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {line_no}: empty key")));
        }
        raw.set(&format!("{section}{key}"), value)
            .map_err(|e| match e {
                CliError::Config(msg) => CliError::Config(format!("line {line_no}: {msg}")),
                other => other,
            })?;
    }
    Ok(raw)
}

pub fn read_raw(path: &Path) -> CliResult<RawConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Steady,
    Eigen,
    Speed,
    Sweep,
    Front,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Self::Simulate,
        Self::Steady,
        Self::Eigen,
        Self::Speed,
        Self::Sweep,
        Self::Front,
        Self::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Steady => "steady",
            Self::Eigen => "eigen",
            Self::Speed => "speed",
            Self::Sweep => "sweep",
            Self::Front => "front",
            Self::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("command must be one of simulate, steady, eigen, speed, sweep, front, verify (got \"{s}\")")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Directions {
    Right,
    Left,
    Both,
}

impl Directions {
    pub fn list(self) -> Vec<Direction> {
        match self {
            Self::Right => vec![Direction::Right],
            Self::Left => vec![Direction::Left],
            Self::Both => vec![Direction::Right, Direction::Left],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Right => "right",
            Self::Left => "left",
            Self::Both => "both",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Fourier { mean: f64, cos_amps: Vec<f64>, sin_amps: Vec<f64> },
    Table(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitConfig {
    pub center: f64,
    pub width: f64,
    pub amp_u: f64,
    pub amp_v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConfig {
    pub alphas: Vec<f64>,
    pub r0: f64,
    pub r_max: f64,
    pub dy: f64,
    pub tol: f64,
    pub tol_alpha: f64,
    pub tol_limit: f64,
    pub halfplane: bool,
    pub with_strips: bool,
    pub directions: Directions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontConfig {
    pub level: f64,
    pub window: f64,
    pub snapshots: Option<PathBuf>,
    pub pulsating: bool,
    pub steps_per_period: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Lambda,
    Speed,
    SpeedHalfplane,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::Speed => "speed",
            Self::SpeedHalfplane => "speed_halfplane",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Swept axes in cross-product order.
    pub axes: Vec<(String, Vec<f64>)>,
    pub quantity: Quantity,
    pub cap: usize,
}

impl SweepConfig {
    pub fn size(&self) -> usize {
        if self.axes.is_empty() {
            return 0;
        }
        self.axes.iter().map(|(_, v)| v.len()).product()
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelParams,
    pub coefficient: Coefficient,
    pub grid: GridConfig,
    pub sim: SimConfig,
    pub init: InitConfig,
    pub spectral: SpectralConfig,
    pub steady_tol: f64,
    pub front: FrontConfig,
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    pub threads: usize,
    pub seed: u64,
    pub dump_operator: bool,
}

fn num(raw: &RawConfig, key: &str, default: f64) -> CliResult<f64> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => parse_f64(key, v),
    }
}

pub fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key} must be a number (got \"{v}\")")))?;
    if !x.is_finite() {
        return Err(CliError::Config(format!("{key} must be finite (got \"{v}\")")));
    }
    Ok(x)
}

fn int(raw: &RawConfig, key: &str, default: usize) -> CliResult<usize> {
    match raw.get(key) {
        None => Ok(default),
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{key} must be a nonnegative integer (got \"{v}\")"))),
    }
}

fn flag(raw: &RawConfig, key: &str, default: bool) -> CliResult<bool> {
    match raw.get(key).map(str::trim) {
        None => Ok(default),
        Some("true" | "yes" | "on" | "1") => Ok(true),
        Some("false" | "no" | "off" | "0") => Ok(false),
        Some(v) => Err(CliError::Config(format!("{key} must be true or false (got \"{v}\")"))),
    }
}

/// Comma-separated numbers, optionally bracketed; an empty value is an empty list.
pub fn parse_list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')).unwrap_or(v).trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| parse_f64(key, item)).collect()
}

fn list(raw: &RawConfig, key: &str) -> CliResult<Vec<f64>> {
    raw.get(key).map_or(Ok(Vec::new()), |v| parse_list(key, v))
}

fn positive(key: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{key} must be > 0 (got {x})")))
    }
}

impl RunConfig {
    /// Minimal inputs: the default command is `eigen` at `α = 0` on the
    /// reference model `D = d = μ = ν = L = 1`, `R = 10`.
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let command = Command::parse(raw.get("command").unwrap_or("eigen").trim())?;
        let model = ModelParams {
            d_road: num(raw, "D", 1.0)?,
            d_field: num(raw, "d", 1.0)?,
            mu: num(raw, "mu", 1.0)?,
            nu: num(raw, "nu", 1.0)?,
            period: num(raw, "L", 1.0)?,
            width: num(raw, "R", 10.0)?,
        };
        model.validate()?;

        match raw.get("reaction.type").map(str::trim) {
            None | Some("logistic") => {}
            Some(other) => {
                return Err(CliError::Config(format!(
                    "reaction.type must be logistic (got \"{other}\")"
                )))
            }
        }
        let table = list(raw, "reaction.table")?;
        let coefficient = if table.is_empty() {
            Coefficient::Fourier {
                mean: num(raw, "reaction.mean", 1.0)?,
                cos_amps: list(raw, "reaction.cos_amps")?,
                sin_amps: list(raw, "reaction.sin_amps")?,
            }
        } else {
            for key in ["reaction.mean", "reaction.cos_amps", "reaction.sin_amps"] {
                if raw.get(key).is_some() {
                    return Err(CliError::Config(format!("{key} cannot be combined with reaction.table")));
                }
            }
            Coefficient::Table(table)
        };

        let grid = GridConfig {
            nx: int(raw, "grid.nx", 64)?,
            ny: int(raw, "grid.ny", 64)?,
        };
        for (key, n) in [("grid.nx", grid.nx), ("grid.ny", grid.ny)] {
            if n < MIN_NODES {
                return Err(CliError::Config(format!("{key} must be >= {MIN_NODES} (got {n})")));
            }
        }

        let scheme = match raw.get("sim.scheme").map(str::trim) {
            None | Some("imex") | Some("imex_be") => Scheme::ImexBe,
            Some("explicit") => Scheme::Explicit,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "sim.scheme must be imex or explicit (got \"{other}\")"
                )))
            }
        };
        let defaults = SimConfig::default();
        let sim = SimConfig {
            dt: num(raw, "sim.dt", defaults.dt)?,
            t_final: num(raw, "sim.T", defaults.t_final)?,
            scheme,
            record_every: int(raw, "sim.record_every", defaults.record_every)?,
            record_from: num(raw, "sim.record_from", defaults.record_from)?,
            domain_copies: int(raw, "sim.domain_copies", defaults.domain_copies)?.max(1),
            edge_guard: flag(raw, "sim.edge_guard", defaults.edge_guard)?,
        };

        let (cap_u, cap_v) = model.carrying_capacity();
        let window = model.period * sim.domain_copies as f64;
        let init = InitConfig {
            center: num(raw, "init.center", 0.5 * window)?,
            width: positive("init.width", num(raw, "init.width", (0.25 * window).min(5.0))?)?,
            amp_u: num(raw, "init.amp_u", cap_u)?,
            amp_v: num(raw, "init.amp_v", cap_v)?,
        };

        let mut alphas = match raw.get("spectral.alpha") {
            None => vec![0.0],
            Some(v) => parse_list("spectral.alpha", v)?,
        };
        if let Some(v) = raw.get("spectral.alpha_range") {
            let r = parse_list("spectral.alpha_range", v)?;
            if r.len() != 3 || r[2] < 1.0 || r[2].fract() != 0.0 {
                return Err(CliError::Config(format!(
                    "spectral.alpha_range must be lo, hi, n with integer n >= 1 (got \"{v}\")"
                )));
            }
            let n = r[2] as usize;
            alphas = (0..n)
                .map(|k| if n == 1 { r[0] } else { r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64 })
                .collect();
        }
        let directions = match raw.get("spectral.direction").map(str::trim) {
            None | Some("right") => Directions::Right,
            Some("left") => Directions::Left,
            Some("both") => Directions::Both,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "spectral.direction must be right, left or both (got \"{other}\")"
                )))
            }
        };
        let spectral = SpectralConfig {
            alphas,
            r0: positive("spectral.r0", num(raw, "spectral.r0", 5.0)?)?,
            r_max: positive("spectral.r_max", num(raw, "spectral.r_max", 40.0)?)?,
            dy: positive("spectral.dy", num(raw, "spectral.dy", model.width / grid.ny as f64)?)?,
            tol: positive("spectral.tol", num(raw, "spectral.tol", 1e-10)?)?,
            tol_alpha: positive("spectral.tol_alpha", num(raw, "spectral.tol_alpha", 1e-4)?)?,
            tol_limit: positive("spectral.tol_limit", num(raw, "spectral.tol_limit", 1e-12)?)?,
            halfplane: flag(raw, "spectral.halfplane", false)?,
            with_strips: flag(raw, "spectral.with_strips", false)?,
            directions,
        };
        if spectral.r_max < spectral.r0 {
            return Err(CliError::Config(format!(
                "spectral.r_max must be >= spectral.r0 (got {} < {})",
                spectral.r_max, spectral.r0
            )));
        }

        let front = FrontConfig {
            level: num(raw, "front.level", 0.1 * cap_u)?,
            window: num(raw, "front.window", 0.5)?,
            snapshots: raw.get("front.snapshots").filter(|s| !s.is_empty()).map(PathBuf::from),
            pulsating: flag(raw, "front.pulsating", false)?,
            steps_per_period: int(raw, "front.steps_per_period", 6)?,
        };
        if !(front.level > 0.0 && front.level < cap_u) {
            return Err(CliError::Config(format!(
                "front.level must lie in (0, {cap_u}) (got {})",
                front.level
            )));
        }
        if !(front.window > 0.0 && front.window <= 1.0) {
            return Err(CliError::Config(format!("front.window must lie in (0, 1] (got {})", front.window)));
        }
        if front.steps_per_period < 1 {
            return Err(CliError::Config("front.steps_per_period must be >= 1".into()));
        }

        let quantity = match raw.get("sweep.quantity").map(str::trim) {
            None | Some("lambda") => Quantity::Lambda,
            Some("speed") => Quantity::Speed,
            Some("speed_halfplane") => Quantity::SpeedHalfplane,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "sweep.quantity must be lambda, speed or speed_halfplane (got \"{other}\")"
                )))
            }
        };
        let mut axes = Vec::new();
        for axis in SWEEP_AXES {
            let key = format!("sweep.{axis}");
            if let Some(v) = raw.get(&key) {
                axes.push((axis.to_string(), parse_list(&key, v)?));
            }
        }
        let sweep = SweepConfig {
            axes,
            quantity,
            cap: int(raw, "sweep.cap", 10_000)?,
        };
        if command == Command::Sweep && sweep.axes.is_empty() {
            return Err(CliError::Config("sweep needs at least one sweep.<axis> list".into()));
        }
        if sweep.size() > sweep.cap {
            return Err(CliError::Config(format!(
                "sweep has {} points, above sweep.cap = {}",
                sweep.size(),
                sweep.cap
            )));
        }

        let config = Self {
            command,
            model,
            coefficient,
            grid,
            sim,
            init,
            spectral,
            steady_tol: positive("steady.tol", num(raw, "steady.tol", 1e-8)?)?,
            front,
            sweep,
            output_dir: PathBuf::from(raw.get("output_dir").unwrap_or("out")),
            threads: int(raw, "threads", 0)?,
            seed: raw
                .get("seed")
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("seed must be a nonnegative integer (got \"{v}\")")))
                })
                .transpose()?
                .unwrap_or(0),
            dump_operator: flag(raw, "dump_operator", false)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn reaction(&self) -> ReactionSpec {
        let period = self.model.period;
        ReactionSpec::Logistic(match &self.coefficient {
            Coefficient::Fourier {
                mean,
                cos_amps,
                sin_amps,
            } => PeriodicCoefficient::Fourier {
                mean: *mean,
                cos_amps: cos_amps.clone(),
                sin_amps: sin_amps.clone(),
                period,
            },
            Coefficient::Table(values) => PeriodicCoefficient::Table {
                values: values.clone(),
                period,
            },
        })
    }

    /// Checks every invariant that needs more than one key.
    pub fn validate(&self) -> CliResult<()> {
        let spec = self.reaction();
        spec.validate()?;
        let (m, _) = spec.rate_bounds();
        if m.is_nan() || m <= 0.0 {
            return Err(CliError::Config(format!(
                "the growth rate a(x) must be > 0 everywhere (min {m})"
            )));
        }
        let grid = simulation_grid(&self.model, self.grid.nx, self.grid.ny, self.sim.domain_copies)?;
        self.sim.validate(&self.model, &spec, &grid)?;
        let (cap_u, cap_v) = self.model.carrying_capacity();
        if !(0.0..=cap_u).contains(&self.init.amp_u) || !(0.0..=cap_v).contains(&self.init.amp_v) {
            return Err(CliError::Config(format!(
                "init.amp_u, init.amp_v must lie in [0, {cap_u}] x [0, {cap_v}] (got {}, {})",
                self.init.amp_u, self.init.amp_v
            )));
        }
        Ok(())
    }

    /// Reads `path` (if any), applies overrides and resolves defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut raw = match path {
            Some(p) => read_raw(p)?,
            None => RawConfig::default(),
        };
        for o in overrides {
            raw.apply_override(o)?;
        }
        Self::from_raw(&raw)
    }

    /// The resolved configuration in config syntax; parsing it back yields
    /// an identical `RunConfig`.
    pub fn to_manifest(&self) -> String {
        let f = |x: f64| fmt_f64(x);
        let l = |xs: &[f64]| xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(&mut s, "command", self.command.name().into());
        kv(&mut s, "output_dir", self.output_dir.display().to_string());
        kv(&mut s, "threads", self.threads.to_string());
        kv(&mut s, "seed", self.seed.to_string());
        kv(&mut s, "dump_operator", self.dump_operator.to_string());
        kv(&mut s, "D", f(self.model.d_road));
        kv(&mut s, "d", f(self.model.d_field));
        kv(&mut s, "mu", f(self.model.mu));
        kv(&mut s, "nu", f(self.model.nu));
        kv(&mut s, "L", f(self.model.period));
        kv(&mut s, "R", f(self.model.width));

        s.push_str("\n[reaction]\n");
        kv(&mut s, "type", "logistic".into());
        match &self.coefficient {
            Coefficient::Fourier {
                mean,
                cos_amps,
                sin_amps,
            } => {
                kv(&mut s, "mean", f(*mean));
                kv(&mut s, "cos_amps", l(cos_amps));
                kv(&mut s, "sin_amps", l(sin_amps));
            }
            Coefficient::Table(values) => kv(&mut s, "table", l(values)),
        }

        s.push_str("\n[grid]\n");
        kv(&mut s, "nx", self.grid.nx.to_string());
        kv(&mut s, "ny", self.grid.ny.to_string());

        s.push_str("\n[sim]\n");
        kv(&mut s, "dt", f(self.sim.dt));
        kv(&mut s, "T", f(self.sim.t_final));
        let scheme = match self.sim.scheme {
            Scheme::ImexBe => "imex",
            Scheme::Explicit => "explicit",
        };
        kv(&mut s, "scheme", scheme.into());
        kv(&mut s, "record_every", self.sim.record_every.to_string());
        kv(&mut s, "record_from", f(self.sim.record_from));
        kv(&mut s, "domain_copies", self.sim.domain_copies.to_string());
        kv(&mut s, "edge_guard", self.sim.edge_guard.to_string());

        s.push_str("\n[init]\n");
        kv(&mut s, "center", f(self.init.center));
        kv(&mut s, "width", f(self.init.width));
        kv(&mut s, "amp_u", f(self.init.amp_u));
        kv(&mut s, "amp_v", f(self.init.amp_v));

        s.push_str("\n[spectral]\n");
        let sp = &self.spectral;
        kv(&mut s, "alpha", l(&sp.alphas));
        kv(&mut s, "r0", f(sp.r0));
        kv(&mut s, "r_max", f(sp.r_max));
        kv(&mut s, "dy", f(sp.dy));
        kv(&mut s, "tol", f(sp.tol));
        kv(&mut s, "tol_alpha", f(sp.tol_alpha));
        kv(&mut s, "tol_limit", f(sp.tol_limit));
        kv(&mut s, "halfplane", sp.halfplane.to_string());
        kv(&mut s, "with_strips", sp.with_strips.to_string());
        kv(&mut s, "direction", sp.directions.name().into());

        s.push_str("\n[steady]\n");
        kv(&mut s, "tol", f(self.steady_tol));

        s.push_str("\n[front]\n");
        kv(&mut s, "level", f(self.front.level));
        kv(&mut s, "window", f(self.front.window));
        if let Some(p) = &self.front.snapshots {
            kv(&mut s, "snapshots", p.display().to_string());
        }
        kv(&mut s, "pulsating", self.front.pulsating.to_string());
        kv(&mut s, "steps_per_period", self.front.steps_per_period.to_string());

        s.push_str("\n[sweep]\n");
        kv(&mut s, "quantity", self.sweep.quantity.name().into());
        kv(&mut s, "cap", self.sweep.cap.to_string());
        for (axis, values) in &self.sweep.axes {
            kv(&mut s, axis, l(values));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let raw = parse_text("D = 2 # road\n[sim]\ndt = 0.1\n[reaction]\ncos_amps = [0.5, 0.1]\n").unwrap();
        assert_eq!(raw.values["D"], "2");
        assert_eq!(raw.values["sim.dt"], "0.1");
        assert_eq!(raw.values["reaction.cos_amps"], "[0.5, 0.1]");
    }

    #[test]
    fn bracket_suffix_and_model_prefix_are_accepted() {
        let raw = parse_text("reaction.cos_amps[] = 0.5\nmodel.mu = 2\n").unwrap();
        assert_eq!(raw.values["reaction.cos_amps"], "0.5");
        assert_eq!(raw.values["mu"], "2");
    }

    #[test]
    fn malformed_lines_name_the_line() {
        for (text, needle) in [
            ("D 1\n", "line 1"),
            ("\n[sim\n", "line 2"),
            ("= 3\n", "empty key"),
            ("[a b]\n", "bad section"),
        ] {
            let err = parse_text(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn suggestions() {
        assert_eq!(suggestion("diffusivity"), Some("D"));
        assert_eq!(suggestion("sim.dtt"), Some("sim.dt"));
        assert_eq!(suggestion("zzzzzz"), None);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("k", "").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_list("k", "[]").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_list("k", "1, 2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
        assert!(parse_list("k", "1,,2").is_err());
        assert!(parse_list("k", "nan").is_err());
    }

    #[test]
    fn alpha_range_expands() {
        let mut raw = RawConfig::default();
        raw.set("spectral.alpha_range", "0, 1, 5").unwrap();
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(c.spectral.alphas, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        raw.set("spectral.alpha_range", "0, 1, 2.5").unwrap();
        assert!(RunConfig::from_raw(&raw).is_err());
    }
}
