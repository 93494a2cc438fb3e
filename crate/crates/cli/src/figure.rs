//! Figures drawn from finished run directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qdecay_core::propagator::fm_reduced_solve;
use qdecay_core::theory::{fm_ldos_analytic, fm_ldos_band, lrt_spread, survival_fm_powerlaw, survival_wm_stretched};
use qdecay_core::{ModelKind, SpectralParams64};

use crate::config::{Band, Config, Scales};
use crate::rundir::{read_manifest, Table, LDOS_CSV, MANIFEST, SERIES_CSV};
use crate::svg::{Plot, Series};
use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    /// Positive-frequency LDoS on log-log axes against `w / gamma0`.
    LdosLoglog,
    /// LDoS core on linear-log axes.
    LdosLinlog,
    /// `P` against `t / t0` on log-linear axes.
    Survival,
    /// `Y = -ln P / t` in units of `1 / t0` against `t / t0`, log-log.
    InsetY,
    /// Core width `dE_core t0` against `t / t0`, log-log.
    CoreScaling,
    /// Spread scaled by `(w_c^s eps^2 / s)^(1/2)` against `w_c t`.
    Spread,
}

pub const FIGURES: &[FigureId] =
    &[FigureId::LdosLoglog, FigureId::LdosLinlog, FigureId::Survival, FigureId::InsetY, FigureId::CoreScaling, FigureId::Spread];

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::LdosLoglog => "ldos_loglog",
            FigureId::LdosLinlog => "ldos_linlog",
            FigureId::Survival => "survival",
            FigureId::InsetY => "inset_Y",
            FigureId::CoreScaling => "core_scaling",
            FigureId::Spread => "spread",
        }
    }

    fn input(self) -> &'static str {
        match self {
            FigureId::LdosLoglog | FigureId::LdosLinlog => LDOS_CSV,
            _ => SERIES_CSV,
        }
    }
}

impl FromStr for FigureId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FIGURES.iter().copied().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<&str> = FIGURES.iter().map(|f| f.name()).collect();
            format!("unknown figure `{s}` (expected {})", names.join("|"))
        })
    }
}

struct Run {
    config: Config,
    params: SpectralParams64,
    scales: Scales,
    table: Table,
}

impl Run {
    fn label(&self) -> String {
        let band = match self.config.band {
            Some(Band::Levels(b)) => format!(" b={b}"),
            _ => String::new(),
        };
        format!("{} s={} eps={}{band}", self.config.model.name(), self.config.s, self.config.eps)
    }

    fn t0(&self) -> Result<f64> {
        self.scales.t0.ok_or_else(|| CliError::Config(vec![format!("no t0 for s = {}", self.config.s)]))
    }
}

fn load(runs: &[PathBuf], id: FigureId) -> Result<Vec<Run>> {
    let mut missing = Vec::new();
    for r in runs {
        for f in [MANIFEST, id.input()] {
            if !r.join(f).exists() {
                missing.push(r.join(f).display().to_string());
            }
        }
    }
    if !missing.is_empty() || runs.is_empty() {
        if runs.is_empty() {
            missing.push(format!("a run directory with {MANIFEST} and {}", id.input()));
        }
        return Err(CliError::MissingInputs(missing));
    }
    runs.iter()
        .map(|r| {
            let config = read_manifest(r)?;
            let params = config.params()?;
            Ok(Run { scales: Scales::of(&params), params, table: Table::read(&r.join(id.input()))?, config })
        })
        .collect()
}

fn survival_overlay(run: &Run, t: &[f64]) -> Option<Series> {
    let t0 = run.scales.t0?;
    let x: Vec<f64> = t.iter().map(|v| v / t0).collect();
    let tmax = t.last().copied()?;
    let y: Vec<f64> = match run.config.model {
        ModelKind::Wigner => t.iter().map(|&v| survival_wm_stretched(&run.params, v).unwrap_or(f64::NAN)).collect(),
        ModelKind::Friedrichs => match fm_reduced_solve(&run.params, tmax, None) {
            Ok(m) if tmax / m.step < 4e5 => t.iter().map(|&v| m.survival(v)).collect(),
            _ => t.iter().map(|&v| survival_fm_powerlaw(&run.params, v).unwrap_or(f64::NAN)).collect(),
        },
    };
    Some(Series::new(format!("theory {}", run.label()), &x, &y).dashed())
}

/// Draws figure `id` from `runs` into `out` (default:
/// `<first run>/figures/<id>.svg`).
pub fn emit_figure(runs: &[PathBuf], id: FigureId, out: Option<&Path>) -> Result<PathBuf> {
    let data = load(runs, id)?;
    let mut plot = Plot::default();
    match id {
        FigureId::LdosLoglog | FigureId::LdosLinlog => {
            let log_x = id == FigureId::LdosLoglog;
            plot.title = "local density of states".into();
            plot.x_label = "w / gamma0".into();
            plot.y_label = "gamma0 rho(w)".into();
            plot.x_log = log_x;
            plot.y_log = true;
            for run in &data {
                let g = run.scales.gamma0.unwrap_or(1.0);
                let c = run.table.column("bin_center")?;
                let d = run.table.column("weight_density")?;
                let keep: Vec<usize> = (0..c.len()).filter(|&k| !log_x || c[k] > 0.0).filter(|&k| log_x || c[k].abs() <= run.config.core_range_gamma0 * g).collect();
                let x: Vec<f64> = keep.iter().map(|&k| c[k] / g).collect();
                let y: Vec<f64> = keep.iter().map(|&k| d[k] * g).collect();
                plot.series.push(Series::new(run.label(), &x, &y));
                if run.config.model == ModelKind::Friedrichs {
                    let theory: Vec<f64> = keep
                        .iter()
                        .map(|&k| fm_ldos_band(&run.params, c[k]).or_else(|_| fm_ldos_analytic(&run.params, c[k])).map_or(f64::NAN, |v| v * g))
                        .collect();
                    plot.series.push(Series::new("analytic", &x, &theory).dashed());
                }
                if log_x {
                    // reference tail slope -(3 - s) anchored at the first bin beyond 3 gamma0
                    if let Some(j) = (0..x.len()).find(|&j| x[j] >= 3.0 && y[j] > 0.0) {
                        let e = -(3.0 - run.config.s);
                        let ref_y: Vec<f64> = x[j..].iter().map(|&v| y[j] * (v / x[j]).powf(e)).collect();
                        plot.series.push(Series::new(format!("slope {e}"), &x[j..], &ref_y).dashed());
                    }
                }
            }
        }
        FigureId::Survival => {
            plot.title = "survival probability".into();
            plot.x_label = "t / t0".into();
            plot.y_label = "P(t)".into();
            plot.y_log = true;
            for run in &data {
                let t0 = run.t0()?;
                let t = run.table.column("t")?;
                let x: Vec<f64> = t.iter().map(|v| v / t0).collect();
                plot.series.push(Series::new(run.label(), &x, &run.table.column("P")?));
                plot.series.extend(survival_overlay(run, &t));
            }
        }
        FigureId::InsetY => {
            plot.title = "Y = -ln P / t".into();
            plot.x_label = "t / t0".into();
            plot.y_label = "Y t0".into();
            plot.x_log = true;
            plot.y_log = true;
            for run in &data {
                let t0 = run.t0()?;
                let t = run.table.column("t")?;
                let p = run.table.column("P")?;
                let x: Vec<f64> = t.iter().map(|v| v / t0).collect();
                let y: Vec<f64> = t.iter().zip(&p).map(|(&t, &p)| -p.ln() / t * t0).collect();
                plot.series.push(Series::new(run.label(), &x, &y));
                let law: Vec<f64> = x.iter().map(|&v| v.powf(1.0 - run.config.s)).collect();
                plot.series.push(Series::new(format!("slope {}", 1.0 - run.config.s), &x, &law).dashed());
            }
        }
        FigureId::CoreScaling => {
            plot.title = "core width".into();
            plot.x_label = "t / t0".into();
            plot.y_label = "dE_core t0".into();
            plot.x_log = true;
            plot.y_log = true;
            for run in &data {
                let t0 = run.t0()?;
                let t = run.table.column("t")?;
                let w = run.table.column("dE_core")?;
                let x: Vec<f64> = t.iter().map(|v| v / t0).collect();
                let y: Vec<f64> = w.iter().map(|v| v * t0).collect();
                plot.series.push(Series::new(run.label(), &x, &y));
            }
        }
        FigureId::Spread => {
            plot.title = "energy spread".into();
            plot.x_label = "w_c t".into();
            plot.y_label = "dE_sprd / (w_c^s eps^2 / s)^(1/2)".into();
            plot.x_log = true;
            for run in &data {
                let wc = run.params.omega_c;
                let scale = (wc.powf(run.config.s) * run.config.eps * run.config.eps / run.config.s).sqrt();
                let t = run.table.column("t")?;
                let x: Vec<f64> = t.iter().map(|v| v * wc).collect();
                let y: Vec<f64> = run.table.column("dE_sprd")?.iter().map(|v| v / scale).collect();
                plot.series.push(Series::new(run.label(), &x, &y));
                let lrt: Vec<f64> = t.iter().map(|&v| lrt_spread(&run.params, v).map_or(f64::NAN, |d| d / scale)).collect();
                plot.series.push(Series::new("linear response", &x, &lrt).dashed());
            }
        }
    }
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => runs[0].join("figures").join(format!("{}.svg", id.name())),
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, plot.render())?;
    Ok(path)
}
