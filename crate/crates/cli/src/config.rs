//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment. Times accept a unit suffix:
//! `5t0`, `0.5tc`, `0.25tH` or a bare number in units of `hbar / energy`.

use std::fmt;
use std::str::FromStr;

use qdecay_core::spectral_kernel::{core_border_gamma0, wigner_time};
use qdecay_core::{CutoffKind, EntryDistribution, ModelKind, QuartileMode, SpectralParams64};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Propagate,
    Ldos,
    Theory,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Propagate => "propagate",
            Command::Ldos => "ldos",
            Command::Theory => "theory",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "propagate" => Ok(Command::Propagate),
            "ldos" => Ok(Command::Ldos),
            "theory" => Ok(Command::Theory),
            other => Err(format!("unknown command `{other}` (expected propagate|ldos|theory)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Absolute,
    WignerTime,
    CorrelationTime,
    HeisenbergTime,
}

/// A time given either absolutely or as a multiple of a model time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpec {
    pub value: f64,
    pub unit: TimeUnit,
}

impl TimeSpec {
    pub fn resolve(&self, scales: &Scales) -> Result<f64, String> {
        let unit = match self.unit {
            TimeUnit::Absolute => 1.0,
            TimeUnit::CorrelationTime => scales.tc,
            TimeUnit::HeisenbergTime => scales.th,
            TimeUnit::WignerTime => scales.t0.ok_or_else(|| format!("`{self}` needs t0, which does not exist for s >= 2"))?,
        };
        let t = self.value * unit;
        if t.is_finite() {
            Ok(t)
        } else {
            Err(format!("`{self}` is not a finite time (t_c = {:e})", scales.tc))
        }
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = match self.unit {
            TimeUnit::Absolute => "",
            TimeUnit::WignerTime => "t0",
            TimeUnit::CorrelationTime => "tc",
            TimeUnit::HeisenbergTime => "tH",
        };
        write!(f, "{}{suffix}", self.value)
    }
}

impl FromStr for TimeSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (num, unit) = if let Some(v) = s.strip_suffix("t0") {
            (v, TimeUnit::WignerTime)
        } else if let Some(v) = s.strip_suffix("tc") {
            (v, TimeUnit::CorrelationTime)
        } else if let Some(v) = s.strip_suffix("tH").or_else(|| s.strip_suffix("th")) {
            (v, TimeUnit::HeisenbergTime)
        } else {
            (s, TimeUnit::Absolute)
        };
        let value = if num.is_empty() { 1.0 } else { num.trim().parse::<f64>().map_err(|_| format!("bad time `{s}`"))? };
        if !(value >= 0.0) || !value.is_finite() {
            return Err(format!("time `{s}` must be finite and >= 0"));
        }
        Ok(TimeSpec { value, unit })
    }
}

/// Band edge: a level count `b` (with `w_c = b / rho`) or `w_c` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Levels(usize),
    Omega(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Logarithmic, as `Log`.
    Auto,
    /// `nt + 1` points on `[0, tmax]`.
    Linear,
    /// `t = 0` followed by `nt` log-spaced points on `[tmin, tmax]`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Propagate,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Open,
    Closed,
}

/// Model time and energy scales derived from the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub tc: f64,
    pub th: f64,
    pub t0: Option<f64>,
    pub gamma0: Option<f64>,
}

impl Scales {
    pub fn of(params: &SpectralParams64) -> Self {
        let t0 = wigner_time(params).ok().map(|t| t.t0);
        let gamma0 = core_border_gamma0(params).ok();
        Scales { tc: params.correlation_time(), th: params.heisenberg_time(), t0, gamma0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub command: Command,
    pub model: ModelKind,
    pub s: f64,
    pub eps: f64,
    pub band: Option<Band>,
    pub rho: f64,
    pub cutoff: CutoffKind,
    pub distribution: EntryDistribution,
    pub jitter: f64,
    pub realizations: usize,
    pub seed: u64,
    /// Matrix dimension `N`; the realization spans `n = -N/2 ..= N/2`.
    pub size: Option<usize>,
    pub boundary: BoundaryKind,
    pub method: Method,
    pub tgrid: GridKind,
    pub tmin: Option<TimeSpec>,
    pub tmax: TimeSpec,
    pub nt: usize,
    /// Propagation step override (default: sized to the norm budget over the run).
    pub max_step: Option<TimeSpec>,
    pub quartiles: QuartileMode,
    pub bootstrap: usize,
    pub cache: bool,
    pub bins_core: usize,
    pub core_range_gamma0: f64,
    pub bins_tail: usize,
    pub all: bool,
}

pub const KEYS: &[&str] = &[
    "command",
    "model",
    "s",
    "eps",
    "b",
    "omega_c",
    "rho",
    "cutoff",
    "distribution",
    "jitter",
    "realizations",
    "seed",
    "size",
    "boundary",
    "method",
    "tgrid",
    "tmin",
    "tmax",
    "nt",
    "max_step",
    "quartiles",
    "bootstrap",
    "cache",
    "bins_core",
    "core_range_gamma0",
    "bins_tail",
    "all",
];

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true|false, got `{v}`")),
    }
}

fn parse_omega(v: &str) -> Result<f64, String> {
    if v == "inf" {
        return Ok(f64::INFINITY);
    }
    v.parse::<f64>().map_err(|e| e.to_string())
}

impl Config {
    pub fn defaults(command: Command) -> Self {
        Config {
            command,
            model: ModelKind::Wigner,
            s: f64::NAN,
            eps: f64::NAN,
            band: None,
            rho: 1.0,
            cutoff: CutoffKind::Sharp,
            distribution: EntryDistribution::Gaussian,
            jitter: 0.0,
            realizations: 1,
            seed: 0,
            size: None,
            boundary: BoundaryKind::Open,
            method: Method::Propagate,
            tgrid: GridKind::Linear,
            tmin: None,
            tmax: TimeSpec { value: 5.0, unit: TimeUnit::WignerTime },
            nt: 100,
            max_step: None,
            quartiles: QuartileMode::AveragedProfile,
            bootstrap: 200,
            cache: false,
            bins_core: 60,
            core_range_gamma0: 5.0,
            bins_tail: 40,
            all: false,
        }
    }

    /// Applies `pairs` in order (later keys win) on top of the defaults and
    /// validates. Every problem is reported, not just the first.
    pub fn from_pairs(command: Command, pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut c = Config::defaults(command);
        let mut errors = Vec::new();
        let mut seen_s = false;
        let mut seen_eps = false;
        for (key, raw) in pairs {
            let v = raw.trim();
            let r: Result<(), String> = (|| {
                match key.as_str() {
                    "command" => {
                        let cmd: Command = v.parse()?;
                        if cmd != command {
                            return Err(format!("manifest is for `{}`, not `{}`", cmd.name(), command.name()));
                        }
                    }
                    "model" => c.model = v.parse()?,
                    "s" => {
                        c.s = v.parse::<f64>().map_err(|e| e.to_string())?;
                        seen_s = true;
                    }
                    "eps" => {
                        c.eps = v.parse::<f64>().map_err(|e| e.to_string())?;
                        seen_eps = true;
                    }
                    "b" => c.band = Some(Band::Levels(v.parse::<usize>().map_err(|e| e.to_string())?)),
                    "omega_c" => c.band = Some(Band::Omega(parse_omega(v)?)),
                    "rho" => c.rho = v.parse::<f64>().map_err(|e| e.to_string())?,
                    "cutoff" => c.cutoff = v.parse()?,
                    "distribution" => c.distribution = v.parse()?,
                    "jitter" => c.jitter = v.parse::<f64>().map_err(|e| e.to_string())?,
                    "realizations" => c.realizations = v.parse::<usize>().map_err(|e| e.to_string())?,
                    "seed" => c.seed = v.parse::<u64>().map_err(|e| e.to_string())?,
                    "size" => c.size = Some(v.parse::<usize>().map_err(|e| e.to_string())?),
                    "boundary" => {
                        c.boundary = match v {
                            "open" => BoundaryKind::Open,
                            "closed" => BoundaryKind::Closed,
                            _ => return Err(format!("expected open|closed, got `{v}`")),
                        }
                    }
                    "method" => {
                        c.method = match v {
                            "propagate" => Method::Propagate,
                            "eigen" => Method::Eigen,
                            _ => return Err(format!("expected propagate|eigen, got `{v}`")),
                        }
                    }
                    "tgrid" => {
                        c.tgrid = match v {
                            "auto" => GridKind::Auto,
                            "linear" => GridKind::Linear,
                            "log" => GridKind::Log,
                            _ => return Err(format!("expected auto|linear|log, got `{v}`")),
                        }
                    }
                    "tmin" => c.tmin = Some(v.parse()?),
                    "tmax" => c.tmax = v.parse()?,
                    "nt" => c.nt = v.parse::<usize>().map_err(|e| e.to_string())?,
                    "max_step" => c.max_step = Some(v.parse()?),
                    "quartiles" => {
                        c.quartiles = match v {
                            "averaged" => QuartileMode::AveragedProfile,
                            "per_realization" => QuartileMode::PerRealization,
                            _ => return Err(format!("expected averaged|per_realization, got `{v}`")),
                        }
                    }
                    "bootstrap" => c.bootstrap = v.parse::<usize>().map_err(|e| e.to_string())?,
                    "cache" => c.cache = parse_bool(v)?,
                    "bins_core" => c.bins_core = v.parse::<usize>().map_err(|e| e.to_string())?,
                    "core_range_gamma0" => c.core_range_gamma0 = v.parse::<f64>().map_err(|e| e.to_string())?,
                    "bins_tail" => c.bins_tail = v.parse::<usize>().map_err(|e| e.to_string())?,
                    "all" => c.all = parse_bool(v)?,
                    _ => return Err("unknown key".into()),
                }
                Ok(())
            })();
            if let Err(e) = r {
                errors.push(format!("{key} = {v}: {e}"));
            }
        }
        if !seen_s {
            errors.push("s: required".into());
        }
        if !seen_eps {
            errors.push("eps: required".into());
        }
        // the cross-key checks run even after parse errors so that one pass
        // reports every problem
        errors.extend(c.problems());
        if errors.is_empty() {
            Ok(c)
        } else {
            Err(CliError::Config(errors))
        }
    }

    /// Parses the text format (a manifest or a hand-written file).
    pub fn parse(command: Command, text: &str) -> Result<Self, CliError> {
        Self::from_pairs(command, &parse_pairs(text)?)
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = self.params() {
            out.push(e.to_string());
        }
        if self.command != Command::Theory {
            match self.band {
                None => out.push("b: required (or omega_c)".into()),
                Some(Band::Omega(w)) if !w.is_finite() => out.push("omega_c: must be finite for simulations".into()),
                Some(Band::Levels(0)) => out.push("b: must be >= 1".into()),
                _ => {}
            }
            if self.realizations == 0 {
                out.push("realizations: must be >= 1".into());
            }
        }
        if !(0.0..1.0).contains(&self.jitter) {
            out.push(format!("jitter: must lie in [0, 1), got {}", self.jitter));
        }
        if self.nt < 2 {
            out.push("nt: must be >= 2".into());
        }
        if self.command == Command::Ldos {
            if self.size.is_none() {
                out.push("size: required for ldos".into());
            }
            if self.bins_core == 0 || !(self.core_range_gamma0 > 0.0) {
                out.push("bins_core and core_range_gamma0 must be positive".into());
            }
        }
        if self.method == Method::Eigen && self.boundary == BoundaryKind::Open && self.command == Command::Propagate {
            out.push("method = eigen needs boundary = closed".into());
        }
        if let (Some(b), Some(n)) = (self.band, self.size) {
            if let Band::Levels(b) = b {
                if n / 2 < 1 || (self.boundary == BoundaryKind::Closed && n / 2 < b) {
                    out.push(format!("size: N = {n} is smaller than the band (b = {b})"));
                }
            }
        }
        out
    }

    pub fn omega_c(&self) -> f64 {
        match self.band {
            Some(Band::Levels(b)) => b as f64 / self.rho,
            Some(Band::Omega(w)) => w,
            None => f64::INFINITY,
        }
    }

    pub fn params(&self) -> qdecay_core::Result<SpectralParams64> {
        SpectralParams64::new(self.s, self.eps, self.omega_c(), self.rho, self.cutoff)
    }

    pub fn scales(&self) -> Result<Scales, CliError> {
        Ok(Scales::of(&self.params()?))
    }

    /// Time grid described by `tgrid`, `tmin`, `tmax` and `nt`.
    pub fn time_grid(&self) -> Result<Vec<f64>, CliError> {
        let sc = self.scales()?;
        let tmax = self.tmax.resolve(&sc).map_err(|e| CliError::Config(vec![format!("tmax: {e}")]))?;
        if !(tmax > 0.0) {
            return Err(CliError::Config(vec!["tmax: must be > 0".into()]));
        }
        let n = self.nt;
        Ok(match self.tgrid {
            GridKind::Linear => (0..=n).map(|k| tmax * k as f64 / n as f64).collect(),
            GridKind::Auto | GridKind::Log => {
                let tmin = match self.tmin {
                    Some(t) => t.resolve(&sc).map_err(|e| CliError::Config(vec![format!("tmin: {e}")]))?,
                    None => {
                        let scale = sc.t0.map_or(sc.tc, |t0| t0.min(sc.tc));
                        if scale > 0.0 { scale / 10.0 } else { tmax * 1e-3 }
                    }
                };
                if !(tmin > 0.0 && tmin < tmax) {
                    return Err(CliError::Config(vec![format!("tmin: need 0 < tmin < tmax (got {tmin:e}, {tmax:e})")]));
                }
                let r = (tmax / tmin).ln();
                std::iter::once(0.0).chain((0..n).map(|k| tmin * (r * k as f64 / (n - 1) as f64).exp())).collect()
            }
        })
    }

    /// Canonical text: every key in schema order, one per line.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("command = {}", self.command.name()),
            format!("model = {}", self.model.name()),
            format!("s = {}", self.s),
            format!("eps = {}", self.eps),
        ];
        match self.band {
            Some(Band::Levels(b)) => lines.push(format!("b = {b}")),
            Some(Band::Omega(w)) if w.is_infinite() => lines.push("omega_c = inf".into()),
            Some(Band::Omega(w)) => lines.push(format!("omega_c = {w}")),
            None => {}
        }
        lines.push(format!("rho = {}", self.rho));
        lines.push(format!("cutoff = {}", self.cutoff.name()));
        lines.push(format!("distribution = {}", self.distribution.name()));
        lines.push(format!("jitter = {}", self.jitter));
        lines.push(format!("realizations = {}", self.realizations));
        lines.push(format!("seed = {}", self.seed));
        if let Some(n) = self.size {
            lines.push(format!("size = {n}"));
        }
        lines.push(format!("boundary = {}", if self.boundary == BoundaryKind::Open { "open" } else { "closed" }));
        lines.push(format!("method = {}", if self.method == Method::Propagate { "propagate" } else { "eigen" }));
        let grid = match self.tgrid {
            GridKind::Auto => "auto",
            GridKind::Linear => "linear",
            GridKind::Log => "log",
        };
        lines.push(format!("tgrid = {grid}"));
        if let Some(t) = self.tmin {
            lines.push(format!("tmin = {t}"));
        }
        lines.push(format!("tmax = {}", self.tmax));
        lines.push(format!("nt = {}", self.nt));
        if let Some(h) = self.max_step {
            lines.push(format!("max_step = {h}"));
        }
        let q = match self.quartiles {
            QuartileMode::AveragedProfile => "averaged",
            QuartileMode::PerRealization => "per_realization",
        };
        lines.push(format!("quartiles = {q}"));
        lines.push(format!("bootstrap = {}", self.bootstrap));
        lines.push(format!("cache = {}", self.cache));
        lines.push(format!("bins_core = {}", self.bins_core));
        lines.push(format!("core_range_gamma0 = {}", self.core_range_gamma0));
        lines.push(format!("bins_tail = {}", self.bins_tail));
        lines.push(format!("all = {}", self.all));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

/// `key = value` pairs of a text file, in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => pairs.push((k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(format!("line {}: expected `key = value`, got `{line}`", i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(pairs)
    } else {
        Err(CliError::Config(errors))
    }
}
