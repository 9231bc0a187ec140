use std::io::Write;
use std::path::Path;

use moyal_core::calculus::MULTIPLIER_DECAY_LIMIT;
use moyal_core::harness::{
    estimate_norm_ratio, fit_decay_slope, format_params, heat_decay_curve, heat_decay_envelope, log_grid, symbol_from_params, ElementFamily,
    Harness, Params, SuiteResult, SuiteSpec,
};
use moyal_core::symbols::{hormander_constant, level_grid, sample_symbol, GaussianComponent, DEFAULT_LEVEL_POINTS};
use moyal_core::{Backend, ClassicalBackend, Error, GridParams, MoyalBackend, Result, SymbolSpec, C64};

use crate::config::{BackendSettings, OutputSettings, RunConfig};
use crate::report::{canonical_order, write_cases, write_summary, CaseRecord, RunSummary, SuiteReport};

enum AnyHarness {
    Moyal(Harness<MoyalBackend>),
    Classical(Harness<ClassicalBackend>),
}

impl AnyHarness {
    fn build(settings: &BackendSettings, family: &ElementFamily) -> Result<Self> {
        let grid = settings.grid()?;
        Ok(match settings {
            BackendSettings::Moyal(m) => AnyHarness::Moyal(Harness::new(MoyalBackend::new(m.h, m.fock_dim, grid)?, family.clone())?),
            BackendSettings::Classical(_) => AnyHarness::Classical(Harness::new(ClassicalBackend::new(grid)?, family.clone())?),
        })
    }

    fn run_suite(&self, spec: &SuiteSpec, seed: u64) -> Result<SuiteResult> {
        match self {
            AnyHarness::Moyal(h) => h.run_suite(spec, seed),
            AnyHarness::Classical(h) => h.run_suite(spec, seed),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match self {
            AnyHarness::Moyal(h) => h.backend().describe(),
            AnyHarness::Classical(h) => h.backend().describe(),
        }
    }
}

pub struct VerifyReport {
    pub rows: Vec<CaseRecord>,
    pub summary: RunSummary,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.summary.failures
    }

    pub fn write(&self, out: &OutputSettings) -> Result<()> {
        write_cases(&out.cases, &self.rows)?;
        write_summary(&out.summary, &self.summary)
    }
}

/// Runs every suite of a validated config. Suites with identical backend
/// settings share one harness and therefore one element cache.
pub fn verify(config: &RunConfig) -> Result<VerifyReport> {
    config.validate()?;
    let hash = config.hash()?;
    let mut harnesses: Vec<(BackendSettings, AnyHarness)> = vec![];
    let mut rows = vec![];
    let mut suites = vec![];
    for suite in &config.suites {
        let settings = config.settings_for(suite)?;
        let k = match harnesses.iter().position(|(s, _)| s == &settings) {
            Some(k) => k,
            None => {
                harnesses.push((settings.clone(), AnyHarness::build(&settings, &config.family)?));
                harnesses.len() - 1
            }
        };
        let harness = &harnesses[k].1;
        let backend = harness.describe();
        let result = harness.run_suite(&suite.spec(), config.master_seed)?;
        rows.extend(result.cases.iter().map(|c| CaseRecord::new(c, &backend, &hash)));
        // cases come ordered by trial, then parameter set
        let per_trial = result.cases.len() / suite.trials as usize;
        let params = result.cases.iter().take(per_trial).map(|c| format_params(&c.params)).collect();
        suites.push(SuiteReport {
            theorem: suite.theorem,
            name: suite.theorem.info().name,
            backend,
            first_trial: suite.first_trial,
            params,
            summary: result.summary,
        });
    }
    canonical_order(&mut rows);
    let failures = suites.iter().map(|s| s.summary.failures).sum();
    let summary = RunSummary { config_hash: hash, master_seed: config.master_seed, backend: config.backend, cases: rows.len(), failures, suites };
    Ok(VerifyReport { rows, summary })
}

#[derive(Clone, Debug)]
pub struct RoundtripRow {
    pub label: String,
    /// `sup |(lambda(f))^ - f| / sup |f|`
    pub symbol_error: f64,
    /// Largest entry of `lambda(x^) - x` on the leading half block, relative
    /// to the largest entry of `x`.
    pub operator_error: f64,
}

fn gaussian(a: f64, center: [f64; 2], wave: [f64; 2]) -> SymbolSpec {
    let mut g = GaussianComponent::centered(a);
    g.center = center.to_vec();
    if wave != [0.0, 0.0] {
        g.wave = wave.to_vec();
    }
    SymbolSpec::Gaussian(g)
}

/// Both roundtrips on centered, shifted and modulated Gaussians.
pub fn probe_roundtrip(h: f64, fock_dim: usize, grid: GridParams) -> Result<Vec<RoundtripRow>> {
    let space = MoyalBackend::new(h, fock_dim, grid)?;
    let family = [
        ("centered a=0.5", gaussian(0.5, [0.0, 0.0], [0.0, 0.0])),
        ("centered a=1", gaussian(1.0, [0.0, 0.0], [0.0, 0.0])),
        ("centered a=2", gaussian(2.0, [0.0, 0.0], [0.0, 0.0])),
        ("shifted a=1", gaussian(1.0, [0.8, -0.5], [0.0, 0.0])),
        ("modulated a=1", gaussian(1.0, [0.0, 0.0], [0.5, 0.25])),
    ];
    family
        .iter()
        .map(|(label, spec)| {
            let f = sample_symbol(spec, grid)?;
            let x = space.quantize(&f)?;
            let back = space.fourier(&x)?;
            let diff = back.combine(C64::new(1.0, 0.0), &f, C64::new(-1.0, 0.0))?;
            let again = space.quantizer().quantize_gated(&back, MULTIPLIER_DECAY_LIMIT)?;
            let scale = x.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok(RoundtripRow {
                label: label.to_string(),
                symbol_error: diff.max_abs() / f.max_abs(),
                operator_error: x.block_distance(&again, fock_dim / 2)? / scale,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct HeatDecayProbe {
    pub gamma: f64,
    pub curve: Vec<(f64, f64)>,
    pub envelope: Vec<(f64, f64)>,
    pub slope: f64,
    pub envelope_slope: f64,
}

impl HeatDecayProbe {
    pub fn csv(&self) -> String {
        let mut s = String::from("kind,t,value\n");
        for (t, v) in &self.curve {
            s += &format!("curve,{t},{v}\n");
        }
        for (t, v) in &self.envelope {
            s += &format!("envelope,{t},{v}\n");
        }
        s += &format!("slope,,{}\nenvelope_slope,,{}\ngamma,,{}\n", self.slope, self.envelope_slope, self.gamma);
        s
    }
}

/// Heat-decay curve of `lambda(exp(-a |s|^2))` and the envelope over a range
/// of rates, each with its fitted log-log slope.
pub fn probe_heat_decay<B: Backend>(backend: &B, a: f64, p: f64, q: f64, ts: &[f64], rates: &[f64]) -> Result<HeatDecayProbe> {
    let f = sample_symbol(&SymbolSpec::Gaussian(GaussianComponent::centered(a)), *backend.grid())?;
    let curve = heat_decay_curve(backend, &backend.quantize(&f)?, p, q, ts)?;
    let envelope = heat_decay_envelope(backend, p, q, ts, rates)?;
    Ok(HeatDecayProbe {
        gamma: backend.dim() as f64 / 2.0 * (1.0 / p - 1.0 / q),
        slope: fit_decay_slope(&curve)?,
        envelope_slope: fit_decay_slope(&envelope)?,
        curve,
        envelope,
    })
}

/// Rates whose heat-decay envelope is resolved by the backend at its defaults.
pub fn envelope_rates(backend_dim: usize) -> Vec<f64> {
    if backend_dim == 1 {
        log_grid(0.125, 32.0, 9)
    } else {
        log_grid(0.5, 4.0, 7)
    }
}

#[derive(Clone, Debug)]
pub struct MultiplierNormProbe {
    pub lower_bound: f64,
    pub hormander_constant: f64,
}

pub fn probe_multiplier_norm<B: Backend>(backend: B, symbol: &Params, p: f64, q: f64, trials: u64, seed: u64) -> Result<MultiplierNormProbe> {
    let g = symbol_from_params(symbol)?;
    let gs = g.sample(backend.grid())?;
    let hormander = hormander_constant(&gs, p, q, &level_grid(&gs, DEFAULT_LEVEL_POINTS))?;
    let harness = Harness::new(backend, ElementFamily::default())?;
    Ok(MultiplierNormProbe { lower_bound: estimate_norm_ratio(&harness, &g, p, q, trials, seed)?, hormander_constant: hormander })
}

/// Writes `text` to stdout and, when given, to `out`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    std::io::stdout().flush().ok();
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
