use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use moyal_core::harness::{log_grid, ParamValue, Params};
use moyal_core::oracle::CLASSICAL_THEOREMS;
use moyal_core::{ClassicalBackend, GridParams, MoyalBackend};
use moyal_cli::commands::{emit, envelope_rates, probe_heat_decay, probe_multiplier_norm, probe_roundtrip, verify};
use moyal_cli::config::OutputSettings;
use moyal_cli::{BackendKind, RunConfig, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "moyal", version, about = "Randomized checks of Fourier-analytic inequalities on the Moyal plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a config and write per-case CSV and summary JSON
    Verify(VerifyArgs),
    /// Single-purpose diagnostics
    Probe {
        #[command(subcommand)]
        probe: Probe,
    },
    /// Print the shipped default config
    DefaultConfig,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for cases.csv and summary.json
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "N")]
    fock_dim: Option<usize>,
}

#[derive(Args, Clone)]
struct SpaceArgs {
    #[arg(long, value_enum, default_value = "moyal")]
    backend: BackendKind,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long = "N", default_value_t = 128)]
    fock_dim: usize,
    /// Grid half width (default 8 on the Moyal plane, 64 classically)
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Grid points per axis (default 128 on the Moyal plane, 4096 classically)
    #[arg(long = "n", id = "grid_points")]
    points: Option<usize>,
}

impl SpaceArgs {
    fn grid(&self) -> anyhow::Result<GridParams> {
        let (dim, l, n) = match self.backend {
            BackendKind::Moyal => (2, 8.0, 128),
            BackendKind::Classical => (1, 64.0, 4096),
        };
        Ok(GridParams::new(dim, self.half_width.unwrap_or(l), self.points.unwrap_or(n))?)
    }
}

#[derive(Subcommand)]
enum Probe {
    /// Sup errors of both Fourier roundtrips on Gaussians
    QuantizeRoundtrip {
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long = "N", default_value_t = 128)]
        fock_dim: usize,
        #[arg(long = "L", default_value_t = 8.0)]
        half_width: f64,
        #[arg(long = "n", default_value_t = 128)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heat-decay curve, envelope and fitted slopes as CSV
    HeatDecay {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.5)]
        tmin: f64,
        #[arg(long, default_value_t = 20.0)]
        tmax: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Rate of the Gaussian symbol exp(-a |s|^2) of the test element
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-search lower bound of ||g(D)||_{p->q} next to the Hormander constant
    MultiplierNorm {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value = "heat")]
        symbol: String,
        /// Heat time, shorthand for --param t=<value>
        #[arg(long)]
        t: Option<f64>,
        /// Bessel order, shorthand for --param s=<value>
        #[arg(long)]
        s: Option<f64>,
        /// Further symbol parameters as key=value
        #[arg(long = "param")]
        param: Vec<String>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn worker_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("{WORKERS_ENV} must be a positive integer");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(b) = args.backend {
        config.backend = b;
        if b == BackendKind::Classical {
            let before = config.suites.len();
            config.suites.retain(|s| CLASSICAL_THEOREMS.contains(&s.theorem));
            if config.suites.len() < before {
                eprintln!("note: skipping {} suites without a classical case", before - config.suites.len());
            }
        }
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(h) = args.h {
        config.moyal.h = h;
    }
    if let Some(n) = args.fock_dim {
        config.moyal.fock_dim = n;
    }
    if let Some(dir) = &args.out {
        config.output = OutputSettings::in_dir(dir);
    }
    let report = worker_pool()?.install(|| verify(&config))?;
    report.write(&config.output)?;
    for s in &report.summary.suites {
        let m = &s.summary;
        println!(
            "{:<4} {:<30} trials={:<4} max={:<10.6} median={:<10.6} failures={}",
            s.theorem.to_string(),
            s.name,
            m.trials,
            m.max_ratio,
            m.median_ratio,
            m.failures
        );
    }
    println!("cases={} failures={} config={}", report.summary.cases, report.failures(), report.summary.config_hash);
    println!("wrote {} and {}", config.output.cases.display(), config.output.summary.display());
    Ok(if report.failures() == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn symbol_params(name: &str, t: Option<f64>, s: Option<f64>, extra: &[String]) -> anyhow::Result<Params> {
    let mut p = Params::new();
    p.insert("g".into(), ParamValue::Text(name.into()));
    for (k, v) in [("t", t), ("s", s)] {
        if let Some(v) = v {
            p.insert(format!("g.{k}"), ParamValue::Num(v));
        }
    }
    for kv in extra {
        let (k, v) = kv.split_once('=').with_context(|| format!("--param expects key=value, got `{kv}`"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("--param {k}: not a number"))?;
        p.insert(format!("g.{}", k.trim()), ParamValue::Num(v));
    }
    Ok(p)
}

fn run_probe(probe: Probe) -> anyhow::Result<ExitCode> {
    match probe {
        Probe::QuantizeRoundtrip { h, fock_dim, half_width, points, out } => {
            let rows = probe_roundtrip(h, fock_dim, GridParams::new(2, half_width, points)?)?;
            let mut text = String::from("symbol,symbol_error,operator_error\n");
            for r in &rows {
                text += &format!("{},{:e},{:e}\n", r.label, r.symbol_error, r.operator_error);
            }
            let sup = rows.iter().map(|r| r.symbol_error.max(r.operator_error)).fold(0.0, f64::max);
            text += &format!("sup_roundtrip_error,{sup:e},\n");
            emit(&text, out.as_deref())?;
        }
        Probe::HeatDecay { space, p, q, tmin, tmax, points, a, out } => {
            let ts = log_grid(tmin, tmax, points);
            let grid = space.grid()?;
            let probe = match space.backend {
                BackendKind::Moyal => probe_heat_decay(&MoyalBackend::new(space.h, space.fock_dim, grid)?, a, p, q, &ts, &envelope_rates(2))?,
                BackendKind::Classical => probe_heat_decay(&ClassicalBackend::new(grid)?, a, p, q, &ts, &envelope_rates(1))?,
            };
            emit(&probe.csv(), out.as_deref())?;
        }
        Probe::MultiplierNorm { space, symbol, t, s, param, p, q, trials, seed, out } => {
            let g = symbol_params(&symbol, t, s, &param)?;
            let grid = space.grid()?;
            let r = worker_pool()?.install(|| match space.backend {
                BackendKind::Moyal => probe_multiplier_norm(MoyalBackend::new(space.h, space.fock_dim, grid)?, &g, p, q, trials, seed),
                BackendKind::Classical => probe_multiplier_norm(ClassicalBackend::new(grid)?, &g, p, q, trials, seed),
            })?;
            let text = format!(
                "lower_bound,hormander_constant,ratio\n{},{},{}\n",
                r.lower_bound,
                r.hormander_constant,
                r.lower_bound / r.hormander_constant
            );
            emit(&text, out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Probe { probe } => run_probe(probe),
        Command::DefaultConfig => {
            print!("{}", moyal_cli::config::DEFAULT_CONFIG);
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
