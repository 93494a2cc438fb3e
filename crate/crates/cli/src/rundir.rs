//! Run directories: manifest, per-realization completion markers, cached
//! realizations and CSV outputs.
//!
//! Layout:
//! ```text
//! manifest.txt            full configuration, tool version, timestamps
//! series.csv | ldos.csv | theory.csv
//! parts/NNNNN.bin         finished realization results
//! parts/NNNNN.done        completion marker, written after the result
//! cache/NNNNN.qdrz        realization containers (cache = true)
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use qdecay_core::ensemble::{build, derive_realization_seed};
use qdecay_core::observables::{record_eigen, record_propagation, EnsembleAccumulator, RealizationTrack};
use qdecay_core::propagator::{fm_reduced_solve, PropagationOptions};
use qdecay_core::spectra::{realization_eigen, symmetric_bins};
use qdecay_core::spectral_kernel::correlation_function;
use qdecay_core::theory::*;
use qdecay_core::{EnsembleOptions, LdosHistogram64, ModelKind, Realization64};

use crate::config::{BoundaryKind, Command, Config, Method, Scales};
use crate::{tracks, CliError, Result};

pub const MANIFEST: &str = "manifest.txt";
pub const SERIES_CSV: &str = "series.csv";
pub const LDOS_CSV: &str = "ldos.csv";
pub const THEORY_CSV: &str = "theory.csv";
pub const THEORY_LDOS_CSV: &str = "theory_ldos.csv";
pub const LAWS_TXT: &str = "laws.txt";

// memory-equation solves in `theory` are skipped beyond this many steps
const MAX_MEMORY_STEPS: f64 = 4e5;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_text(config: &Config) -> String {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!(
        "# qdecay run manifest\n# tool_version = {}\n# created_unix = {now}\n# master_seed = {}\n{}",
        tool_version(),
        config.seed,
        config.to_text()
    )
}

/// Command named by a manifest's `command` line.
fn manifest_command(text: &str) -> Result<Command> {
    for (k, v) in crate::config::parse_pairs(text)? {
        if k == "command" {
            return v.parse().map_err(|e: String| CliError::Config(vec![e]));
        }
    }
    Err(CliError::Config(vec!["manifest has no `command` line".into()]))
}

pub fn read_manifest(dir: &Path) -> Result<Config> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|_| CliError::MissingInputs(vec![path.display().to_string()]))?;
    Config::parse(manifest_command(&text)?, &text)
}

/// Writes `bytes` through a temporary file so readers never see a prefix.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    /// Creates `root` with a manifest, or reopens it for resumption when it
    /// already holds a manifest with the same configuration.
    pub fn prepare(root: &Path, config: &Config) -> Result<Self> {
        fs::create_dir_all(root.join("parts"))?;
        let path = root.join(MANIFEST);
        if path.exists() {
            let old = read_manifest(root)?;
            if &old != config {
                return Err(CliError::Config(vec![format!(
                    "{} holds a run with a different configuration; use a new directory",
                    root.display()
                )]));
            }
            info!("resuming run in {}", root.display());
        } else {
            write_atomic(&path, manifest_text(config).as_bytes())?;
        }
        if config.cache {
            fs::create_dir_all(root.join("cache"))?;
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    fn part(&self, i: usize, ext: &str) -> PathBuf {
        self.root.join("parts").join(format!("{i:05}.{ext}"))
    }

    pub fn is_done(&self, i: usize) -> bool {
        self.part(i, "done").exists()
    }

    fn finish_part(&self, i: usize, payload: &[u8]) -> Result<()> {
        write_atomic(&self.part(i, "bin"), payload)?;
        fs::write(self.part(i, "done"), b"")?;
        Ok(())
    }

    fn cache_path(&self, i: usize) -> PathBuf {
        self.root.join("cache").join(format!("{i:05}.qdrz"))
    }
}

/// CSV header block shared by every output of a run.
fn header_lines(config: &Config, sc: &Scales) -> Vec<String> {
    let mut h = vec![format!("qdecay {}", tool_version())];
    h.extend(config.to_text().lines().map(String::from));
    h.push(format!("t_c = {:e}", sc.tc));
    h.push(format!("t_H = {:e}", sc.th));
    if let Some(t0) = sc.t0 {
        h.push(format!("t0 = {t0:e}"));
    }
    if let Some(g) = sc.gamma0 {
        h.push(format!("gamma0 = {g:e}"));
    }
    h
}

/// Runs the experiment described by `config` into `root`.
pub fn run_experiment(config: &Config, root: &Path) -> Result<PathBuf> {
    let dir = RunDir::prepare(root, config)?;
    match config.command {
        Command::Propagate => run_propagate(config, &dir)?,
        Command::Ldos => run_ldos(config, &dir)?,
        Command::Theory => run_theory(config, &dir)?,
    }
    Ok(dir.root)
}

fn realization(config: &Config, dir: &RunDir, i: usize, half: usize) -> Result<Realization64> {
    let params = config.params()?;
    let seed = derive_realization_seed(config.seed, i as u64);
    let cache = dir.cache_path(i);
    if config.cache && cache.exists() {
        let r = Realization64::read_container(&mut BufReader::new(fs::File::open(&cache)?))
            .map_err(|e| CliError::Malformed { path: cache.display().to_string(), reason: e.to_string() })?;
        if r.seed() == seed && r.params() == &params && r.half_size() == half && r.kind() == config.model {
            return Ok(r);
        }
        warn!("ignoring stale cache entry {}", cache.display());
    }
    let opts = EnsembleOptions { distribution: config.distribution, jitter: config.jitter };
    let r = build(config.model, &params, half, seed, &opts).map_err(|e| CliError::numeric(format!("realization {i} (seed {seed:#018x})"), e))?;
    if config.cache {
        let mut buf = Vec::new();
        r.write_container(&mut buf)?;
        write_atomic(&cache, &buf)?;
    }
    Ok(r)
}

/// Runs `work` for every unfinished realization, at most one batch of
/// worker-count tasks in flight, and hands results to `sink` in index order.
fn for_each_realization<T: Send>(
    n: usize,
    dir: &RunDir,
    load: impl Fn(&Path) -> std::io::Result<T> + Sync,
    work: impl Fn(usize) -> Result<(T, Vec<u8>)> + Sync,
    mut sink: impl FnMut(T),
) -> Result<()> {
    let batch = rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < n {
        let idx: Vec<usize> = (start..(start + batch).min(n)).collect();
        let results: Vec<Result<T>> = idx
            .par_iter()
            .map(|&i| {
                if dir.is_done(i) {
                    let path = dir.part(i, "bin");
                    return load(&path).map_err(|e| CliError::Malformed { path: path.display().to_string(), reason: e.to_string() });
                }
                let (value, bytes) = work(i)?;
                dir.finish_part(i, &bytes)?;
                Ok(value)
            })
            .collect();
        for r in results {
            sink(r?);
        }
        start += batch;
    }
    Ok(())
}

fn run_propagate(config: &Config, dir: &RunDir) -> Result<()> {
    let params = config.params()?;
    let sc = Scales::of(&params);
    let b = params.bandwidth()?;
    let t = config.time_grid()?;
    let half = config.size.map_or(4 * b, |n| n / 2);
    let mut opts = PropagationOptions::for_run(&params, t.iter().cloned().fold(0.0, f64::max));
    if config.boundary == BoundaryKind::Closed {
        opts = opts.closed();
    }
    if let Some(h) = config.max_step {
        let h = h.resolve(&sc).map_err(|e| CliError::Config(vec![format!("max_step: {e}")]))?;
        if !(h > 0.0) {
            return Err(CliError::Config(vec!["max_step: must be > 0".into()]));
        }
        opts = opts.with_max_step(h);
    }
    let mut acc = EnsembleAccumulator::new(&t, params.rho, Some(config.model));
    for_each_realization(
        config.realizations,
        dir,
        |path| tracks::read_track(&mut BufReader::new(fs::File::open(path)?)),
        |i| {
            let r = realization(config, dir, i, half)?;
            let ctx = || format!("realization {i} (seed {:#018x})", r.seed());
            let track: RealizationTrack<f64> = match config.method {
                Method::Propagate => record_propagation(&r, &t, &opts),
                Method::Eigen => record_eigen(&r, &t, true),
            }
            .map_err(|e| CliError::numeric(ctx(), e))?;
            let mut bytes = Vec::new();
            tracks::write_track(&mut bytes, &track)?;
            info!("{} done", ctx());
            Ok((track, bytes))
        },
        |track| acc.push(track),
    )?;
    let series = acc.finish(config.quartiles, config.bootstrap, derive_realization_seed(config.seed, u64::MAX));
    let mut out = BufWriter::new(fs::File::create(dir.root.join(SERIES_CSV))?);
    series.write_csv(&mut out, &header_lines(config, &sc))?;
    out.flush()?;
    Ok(())
}

/// Bin edges for an LDoS run: uniform core of `core_range_gamma0 * gamma0`,
/// logarithmic tails out to the band edge.
pub fn ldos_edges(config: &Config, gamma0: f64) -> Result<Vec<f64>> {
    let core = config.core_range_gamma0 * gamma0;
    let wc = config.omega_c();
    let n_tail = if wc > core { config.bins_tail } else { 0 };
    Ok(symmetric_bins(core, config.bins_core, wc, n_tail)?)
}

fn run_ldos(config: &Config, dir: &RunDir) -> Result<()> {
    let params = config.params()?;
    let sc = Scales::of(&params);
    let gamma0 = sc.gamma0.ok_or_else(|| CliError::Config(vec![format!("no core border gamma0 for s = {}", config.s)]))?;
    let edges = ldos_edges(config, gamma0)?;
    let half = config.size.unwrap_or(0) / 2;
    let mut pairs = Vec::with_capacity(config.realizations);
    for_each_realization(
        config.realizations,
        dir,
        |path| tracks::read_pairs(&mut BufReader::new(fs::File::open(path)?)),
        |i| {
            let r = realization(config, dir, i, half)?;
            let p = realization_eigen(&r, false).map_err(|e| CliError::numeric(format!("realization {i}"), e))?;
            let mut bytes = Vec::new();
            tracks::write_pairs(&mut bytes, &p)?;
            Ok((p, bytes))
        },
        |p| pairs.push(p),
    )?;
    let hist = LdosHistogram64::from_pairs(&pairs, &edges, gamma0)?;
    let mut header = header_lines(config, &sc);
    header.push(format!("dim = {}", 2 * half + 1));
    let mut out = BufWriter::new(fs::File::create(dir.root.join(LDOS_CSV))?);
    hist.write_csv(&mut out, &header)?;
    out.flush()?;
    Ok(())
}

fn fmt_cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:e}"),
        _ => "NaN".into(),
    }
}

fn run_theory(config: &Config, dir: &RunDir) -> Result<()> {
    let params = config.params()?;
    let sc = Scales::of(&params);
    let t = config.time_grid()?;
    let tmax = t.last().copied().unwrap_or(0.0);
    let wm = config.all || config.model == ModelKind::Wigner;
    let fm = config.all || config.model == ModelKind::Friedrichs;
    let memory = if fm && sc.tc > 0.0 && tmax / (sc.tc / 25.0) < MAX_MEMORY_STEPS {
        Some(fm_reduced_solve(&params, tmax, None).map_err(|e| CliError::numeric("memory equation", e))?)
    } else {
        if fm {
            warn!("skipping the Friedrichs memory equation (infinite cutoff or too many steps)");
        }
        None
    };
    let mut cols = vec!["t", "C", "dE_lrt"];
    if wm {
        cols.push("P_wm");
    }
    if fm {
        cols.extend(["P_fm", "P_fm_powerlaw", "dE_fm", "dE_fm_asymptotic"]);
        if config.s == 2.0 {
            cols.push("P_fm_loglaw");
        }
    }
    if config.s > 2.0 {
        cols.push("P_partial");
    }
    let mut text = String::new();
    for line in header_lines(config, &sc) {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&cols.join(","));
    text.push('\n');
    for &x in &t {
        let mut row = vec![format!("{x:e}")];
        row.push(fmt_cell(correlation_function(&params, x).ok()));
        row.push(fmt_cell(lrt_spread(&params, x).ok()));
        if wm {
            let p = if params.s == 1.0 || (params.s > 0.0 && params.s < 2.0) { survival_wm_stretched(&params, x).ok() } else { None };
            row.push(fmt_cell(p));
        }
        if fm {
            let (c, cd, cdd) = memory.as_ref().map(|m| m.at(x)).map_or((None, None, None), |(a, b, c)| (Some(a), Some(b), Some(c)));
            row.push(fmt_cell(c.map(|c| c * c)));
            row.push(fmt_cell(survival_fm_powerlaw(&params, x).ok()));
            let exact = match (c, cd, cdd) {
                (Some(c), Some(cd), Some(cdd)) => fm_exact_spread(c, cd, cdd, &params).ok(),
                _ => None,
            };
            row.push(fmt_cell(exact));
            row.push(fmt_cell(c.and_then(|c| fm_asymptotic_spread(c * c, &params).ok())));
            if config.s == 2.0 {
                row.push(fmt_cell(survival_fm_s2_loglaw(&params, x).ok()));
            }
        }
        if config.s > 2.0 {
            row.push(fmt_cell(survival_partial_decay(&params).ok()));
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(&dir.root.join(THEORY_CSV), text.as_bytes())?;

    let mut laws = String::new();
    for (name, wigner, on) in [("wm", true, wm), ("fm", false, fm)] {
        if !on {
            continue;
        }
        for law in decay_laws(&params, wigner).unwrap_or_default() {
            laws.push_str(&format!(
                "{name}: {:?} exponent = {} t0 = {:e} t0_prime = {} window = [{:e}, {:e}]\n",
                law.regime,
                law.exponent,
                law.t0,
                fmt_cell(law.t0_prime),
                law.window.0,
                law.window.1
            ));
        }
    }
    write_atomic(&dir.root.join(LAWS_TXT), laws.as_bytes())?;

    if config.all && params.s > 0.0 && params.s < 2.0 {
        if let Some(g) = sc.gamma0 {
            let free = qdecay_core::SpectralParams64 { omega_c: f64::INFINITY, ..params };
            let mut text = String::new();
            for line in header_lines(config, &sc) {
                text.push_str(&format!("# {line}\n"));
            }
            text.push_str("omega,x,rho_fm,rho_fm_band\n");
            let hi = if sc.tc > 0.0 { config.omega_c().min(1e4 * g) } else { 1e4 * g };
            let n = 400;
            for k in 0..n {
                let w = g * 1e-3 * (hi / (g * 1e-3)).powf(k as f64 / (n - 1) as f64);
                let band = if sc.tc > 0.0 { fm_ldos_band(&params, w).ok() } else { None };
                text.push_str(&format!(
                    "{w:e},{:e},{},{}\n",
                    w / g,
                    fmt_cell(fm_ldos_analytic(&free, w).ok()),
                    fmt_cell(band)
                ));
            }
            write_atomic(&dir.root.join(THEORY_LDOS_CSV), text.as_bytes())?;
        }
    }
    Ok(())
}

/// A CSV written by this tool: `#` comment lines, a header row, numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|_| CliError::MissingInputs(vec![path.display().to_string()]))?;
        Self::parse(&text).map_err(|reason| CliError::Malformed { path: path.display().to_string(), reason })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let comments = text.lines().filter_map(|l| l.strip_prefix('#')).map(|l| l.trim().to_string()).collect();
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let row: std::result::Result<Vec<f64>, String> =
                rec.iter().map(|c| c.trim().parse::<f64>().map_err(|_| format!("bad number `{c}`"))).collect();
            rows.push(row?);
        }
        Ok(Table { comments, header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name).ok_or_else(|| CliError::Malformed {
            path: String::new(),
            reason: format!("no column `{name}` (have {})", self.header.join(",")),
        })?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Value of a `key = value` comment line.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| c.split_once('=').filter(|(k, _)| k.trim() == key).map(|(_, v)| v.trim()))
    }
}
