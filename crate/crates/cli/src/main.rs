use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdecay::config::{parse_pairs, Command};
use qdecay::figure::{emit_figure, FigureId};
use qdecay::fit::{run_collapse, run_fit, CollapseRequest, FitKind, FitRequest};
use qdecay::rundir::run_experiment;
use qdecay::{CliError, Config};

#[derive(Parser)]
#[command(name = "qdecay", version, about = "Decay of a prepared state into a non-flat continuum")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Ensemble survival, spread and quartile tracks (series.csv).
    Propagate(Experiment),
    /// Diagonalization LDoS histogram (ldos.csv).
    Ldos(Experiment),
    /// Closed-form and memory-equation tracks (theory.csv, laws.txt).
    Theory(Experiment),
    /// Fit a finished propagate run.
    Fit {
        run: PathBuf,
        #[arg(long, default_value = "stretched")]
        kind: String,
        /// Window start, e.g. `0.5t0`; omitted bounds are suggested and logged.
        #[arg(long)]
        tmin: Option<String>,
        #[arg(long)]
        tmax: Option<String>,
        #[arg(long, default_value = "dE_core")]
        column: String,
        #[arg(long, default_value_t = qdecay_core::analysis::DEPARTURE_FRACTION)]
        fraction: f64,
    },
    /// Collapse several propagate runs that differ in eps.
    Collapse {
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        x_min: f64,
        #[arg(long, default_value_t = 3.0)]
        x_max: f64,
        #[arg(long, default_value = "dE_core")]
        column: String,
        #[arg(long, default_value_t = qdecay_core::analysis::DEPARTURE_FRACTION)]
        fraction: f64,
    },
    /// Draw a figure from one or more run directories.
    Figure {
        #[arg(long)]
        id: String,
        #[arg(required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Keys come from `--config`, then the flags below, then `--set`; later
/// values win.
#[derive(Args)]
struct Experiment {
    /// Run directory (created, or resumed when its manifest matches).
    #[arg(long)]
    out: PathBuf,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` pairs.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega_c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cutoff: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    realizations: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    size: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tgrid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nt: Option<String>,
    #[arg(long)]
    all: bool,
}

impl Experiment {
    fn config(&self, command: Command) -> Result<Config, CliError> {
        let mut pairs = match &self.config {
            Some(p) => parse_pairs(&std::fs::read_to_string(p).map_err(|_| CliError::MissingInputs(vec![p.display().to_string()]))?)?,
            None => Vec::new(),
        };
        let flags = [
            ("model", &self.model),
            ("s", &self.s),
            ("eps", &self.eps),
            ("b", &self.b),
            ("omega_c", &self.omega_c),
            ("rho", &self.rho),
            ("cutoff", &self.cutoff),
            ("realizations", &self.realizations),
            ("seed", &self.seed),
            ("size", &self.size),
            ("tmax", &self.tmax),
            ("tgrid", &self.tgrid),
            ("nt", &self.nt),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v.clone()));
            }
        }
        if self.all {
            pairs.push(("all".into(), "true".into()));
        }
        let mut bad = Vec::new();
        for kv in &self.set {
            match kv.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
                None => bad.push(format!("--set {kv}: expected KEY=VALUE")),
            }
        }
        if !bad.is_empty() {
            return Err(CliError::Config(bad));
        }
        Config::from_pairs(command, &pairs)
    }
}

fn parse<T: std::str::FromStr<Err = String>>(what: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|e: String| CliError::Config(vec![format!("{what}: {e}")]))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Sub::Propagate(e) => {
            let dir = run_experiment(&e.config(Command::Propagate)?, &e.out)?;
            println!("{}", dir.join(qdecay::rundir::SERIES_CSV).display());
        }
        Sub::Ldos(e) => {
            let dir = run_experiment(&e.config(Command::Ldos)?, &e.out)?;
            println!("{}", dir.join(qdecay::rundir::LDOS_CSV).display());
        }
        Sub::Theory(e) => {
            let dir = run_experiment(&e.config(Command::Theory)?, &e.out)?;
            println!("{}", dir.join(qdecay::rundir::THEORY_CSV).display());
        }
        Sub::Fit { run, kind, tmin, tmax, column, fraction } => {
            let mut req = FitRequest::new(parse::<FitKind>("kind", &kind)?);
            req.tmin = tmin.map(|v| parse("tmin", &v)).transpose()?;
            req.tmax = tmax.map(|v| parse("tmax", &v)).transpose()?;
            req.column = column;
            req.fraction = fraction;
            print!("{}", run_fit(&run, &req)?.summary());
        }
        Sub::Collapse { runs, out, x_min, x_max, column, fraction } => {
            let req = CollapseRequest { x_min, x_max, column, fraction, ..CollapseRequest::default() };
            print!("{}", run_collapse(&runs, &req, &out)?.0.summary());
        }
        Sub::Figure { id, runs, out } => {
            let path = emit_figure(&runs, parse::<FigureId>("id", &id)?, out.as_deref())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
