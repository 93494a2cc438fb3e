//! Fit and collapse reports over finished run directories.
//!
//! Each report is a one-row CSV plus a `key = value` summary; both embed the
//! fit window, the departure fraction and a SHA-256 of every input read.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;

use qdecay_core::analysis::*;
use qdecay_core::theory::fm_powerlaw_amplitude;

use crate::config::{Scales, TimeSpec};
use crate::rundir::{read_manifest, sha256_hex, Table, MANIFEST, SERIES_CSV};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Stretched,
    PowerLaw,
    Departure,
}

impl FitKind {
    pub fn name(self) -> &'static str {
        match self {
            FitKind::Stretched => "stretched",
            FitKind::PowerLaw => "powerlaw",
            FitKind::Departure => "departure",
        }
    }
}

impl FromStr for FitKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stretched" => Ok(FitKind::Stretched),
            "powerlaw" => Ok(FitKind::PowerLaw),
            "departure" => Ok(FitKind::Departure),
            other => Err(format!("unknown fit `{other}` (expected stretched|powerlaw|departure)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRequest {
    pub kind: FitKind,
    /// Window bounds; when absent a window is suggested and logged.
    pub tmin: Option<TimeSpec>,
    pub tmax: Option<TimeSpec>,
    /// Track used by the departure extraction.
    pub column: String,
    pub fraction: f64,
}

impl FitRequest {
    pub fn new(kind: FitKind) -> Self {
        FitRequest { kind, tmin: None, tmax: None, column: "dE_core".into(), fraction: DEPARTURE_FRACTION }
    }
}

/// Ordered `key = value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    fn put(&mut self, k: &str, v: impl ToString) {
        self.entries.push((k.into(), v.to_string()));
    }

    pub fn get(&self, k: &str) -> Option<&str> {
        self.entries.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str())
    }

    pub fn number(&self, k: &str) -> Option<f64> {
        self.get(k)?.parse().ok()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn csv(&self) -> String {
        let keys: Vec<&str> = self.entries.iter().map(|(k, _)| k.as_str()).collect();
        let vals: Vec<&str> = self.entries.iter().map(|(_, v)| v.as_str()).collect();
        format!("{}\n{}\n", keys.join(","), vals.join(","))
    }

    fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::write(dir.join(format!("{stem}.txt")), self.summary())?;
        fs::write(dir.join(format!("{stem}.csv")), self.csv())?;
        Ok(())
    }
}

fn resolve(spec: Option<TimeSpec>, sc: &Scales, key: &str) -> Result<Option<f64>> {
    spec.map(|t| t.resolve(sc).map_err(|e| CliError::Config(vec![format!("{key}: {e}")]))).transpose()
}

/// Fits the series of one propagate run and writes `fit_<kind>.{txt,csv}`
/// into it.
pub fn run_fit(run: &Path, req: &FitRequest) -> Result<Report> {
    let config = read_manifest(run)?;
    let sc = config.scales()?;
    let series_path = run.join(SERIES_CSV);
    let bytes = fs::read(&series_path).map_err(|_| CliError::MissingInputs(vec![series_path.display().to_string()]))?;
    let manifest = fs::read(run.join(MANIFEST))?;
    let table = Table::read(&series_path)?;
    let t = table.column("t")?;
    let p = table.column("P")?;
    let err = table.column("P_stderr")?;
    // a single realization has no error estimate
    let err = if err.iter().all(|&e| e == 0.0) { None } else { Some(err) };

    let mut r = Report::default();
    r.put("kind", req.kind.name());
    r.put("input", SERIES_CSV);
    r.put("provenance_sha256", sha256_hex(&[&manifest, &bytes, format!("{req:?}").as_bytes()]));
    r.put("s", config.s);
    r.put("eps", config.eps);
    if let Some(t0) = sc.t0 {
        r.put("t0_theory", format!("{t0:e}"));
    }
    let tmin = resolve(req.tmin, &sc, "tmin")?;
    let tmax = resolve(req.tmax, &sc, "tmax")?;

    match req.kind {
        FitKind::Stretched | FitKind::PowerLaw => {
            let window = match (tmin, tmax) {
                (Some(a), Some(b)) => {
                    r.put("window_source", "given");
                    FitWindow::new(a, b)?
                }
                _ => {
                    let floor = tmin.unwrap_or(sc.tc);
                    let w = suggest_window(&t, &p, err.as_deref(), floor, 0.99, 0.1)
                        .map_err(|e| CliError::numeric("window suggestion", e))?;
                    info!("using suggested window [{:e}, {:e}]", w.t_min, w.t_max);
                    r.put("window_source", "suggested");
                    w
                }
            };
            r.put("window_t_min", format!("{:e}", window.t_min));
            r.put("window_t_max", format!("{:e}", window.t_max));
            r.put("window_decades", format!("{:.3}", window.decades()));
            if req.kind == FitKind::Stretched {
                let f = fit_stretched_exponent(&t, &p, err.as_deref(), &window).map_err(|e| CliError::numeric("stretched fit", e))?;
                r.put("beta", f.beta);
                r.put("beta_err", f.beta_err);
                r.put("slope_Y", f.slope);
                r.put("beta_theory", 2.0 - config.s);
                r.put("t0_fit", format!("{:e}", f.t0));
                r.put("n_points", f.line.n_points);
            } else {
                let f = fit_powerlaw_tail(&t, &p, err.as_deref(), &window).map_err(|e| CliError::numeric("power-law fit", e))?;
                r.put("exponent", f.exponent);
                r.put("exponent_err", f.exponent_err);
                r.put("exponent_theory", -2.0 * (2.0 - config.s));
                if let Some(t0) = sc.t0 {
                    r.put("amplitude_t0_units", f.amplitude_in_units(t0));
                }
                r.put("amplitude_theory", fm_powerlaw_amplitude(config.s));
                r.put("n_points", f.line.n_points);
            }
        }
        FitKind::Departure => {
            let w = table.column(&req.column)?;
            let d = extract_departure_and_saturation(&t, &w, req.fraction).map_err(|e| CliError::numeric("departure", e))?;
            r.put("column", &req.column);
            r.put("fraction", req.fraction);
            r.put("plateau_t_min", format!("{:e}", d.plateau_start));
            r.put("t_dep", format!("{:e}", d.t_dep));
            r.put("sat", format!("{:e}", d.sat));
            r.put("t_dep_times_sat", d.t_dep * d.sat);
        }
    }
    r.write(run, &format!("fit_{}", req.kind.name()))?;
    Ok(r)
}

/// Settings of a collapse over runs that differ in `eps` only.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRequest {
    /// Common window in units of each run's `t0`.
    pub x_min: f64,
    pub x_max: f64,
    pub samples: usize,
    pub column: String,
    pub fraction: f64,
}

impl Default for CollapseRequest {
    fn default() -> Self {
        CollapseRequest { x_min: 0.2, x_max: 3.0, samples: 50, column: "dE_core".into(), fraction: DEPARTURE_FRACTION }
    }
}

/// One row per run: departure and saturation of the core width.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseRow {
    pub eps: f64,
    pub t0: f64,
    pub t_dep: f64,
    pub sat: f64,
}

/// `P` versus `t / t0` residual across runs, and the departure/saturation
/// cloud with the log-slope of `t_dep` against `eps`. Writes
/// `collapse.{txt,csv}` and `collapse_runs.csv` into `out`.
pub fn run_collapse(runs: &[PathBuf], req: &CollapseRequest, out: &Path) -> Result<(Report, Vec<CollapseRow>)> {
    let mut missing = Vec::new();
    for r in runs {
        for f in [MANIFEST, SERIES_CSV] {
            if !r.join(f).exists() {
                missing.push(r.join(f).display().to_string());
            }
        }
    }
    if !missing.is_empty() {
        return Err(CliError::MissingInputs(missing));
    }
    let mut hashes: Vec<Vec<u8>> = Vec::new();
    let mut tracks = Vec::new();
    let mut rows = Vec::new();
    let mut s_values = Vec::new();
    for run in runs {
        let config = read_manifest(run)?;
        let sc = config.scales()?;
        let t0 = sc.t0.ok_or_else(|| CliError::Config(vec![format!("{}: no t0 for s = {}", run.display(), config.s)]))?;
        hashes.push(fs::read(run.join(SERIES_CSV))?);
        let table = Table::read(&run.join(SERIES_CSV))?;
        let t = table.column("t")?;
        let p = table.column("P")?;
        let w = table.column(&req.column)?;
        let d = extract_departure_and_saturation(&t, &w, req.fraction)
            .map_err(|e| CliError::numeric(format!("departure in {}", run.display()), e))?;
        rows.push(CollapseRow { eps: config.eps, t0, t_dep: d.t_dep, sat: d.sat });
        tracks.push(ScaledTrack { t0, t, p });
        s_values.push(config.s);
    }
    if s_values.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Config(vec!["collapse needs runs with a common s".into()]));
    }
    let c = scaling_collapse(&tracks, req.x_min, req.x_max, req.samples).map_err(|e| CliError::numeric("collapse", e))?;
    let x: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.t_dep.ln()).collect();
    let slope = linear_fit(&x, &y).map_err(|e| CliError::numeric("t_dep slope", e))?;
    let products: Vec<f64> = rows.iter().map(|r| r.t_dep * r.sat).collect();
    let spread = products.iter().cloned().fold(f64::MIN, f64::max) / products.iter().cloned().fold(f64::MAX, f64::min);

    let refs: Vec<&[u8]> = hashes.iter().map(|h| h.as_slice()).collect();
    let mut r = Report::default();
    r.put("runs", runs.len());
    r.put("provenance_sha256", sha256_hex(&refs));
    r.put("s", s_values[0]);
    r.put("window_x_min", req.x_min);
    r.put("window_x_max", req.x_max);
    r.put("column", &req.column);
    r.put("fraction", req.fraction);
    r.put("collapse_residual", c.residual);
    r.put("collapse_worst_x", c.at);
    r.put("t_dep_log_slope", slope.slope);
    r.put("t_dep_log_slope_err", slope.slope_err);
    r.put("t_dep_log_slope_theory", -2.0 / (2.0 - s_values[0]));
    r.put("t_dep_sat_max_over_min", spread);
    fs::create_dir_all(out)?;
    r.write(out, "collapse")?;
    let mut csv = String::from("eps,t0,t_dep,sat,t_dep_times_sat\n");
    for row in &rows {
        let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{:e}", row.eps, row.t0, row.t_dep, row.sat, row.t_dep * row.sat);
    }
    fs::write(out.join("collapse_runs.csv"), csv)?;
    Ok((r, rows))
}
