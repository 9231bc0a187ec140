//! Randomized verification of the inequality registry. Each trial draws a
//! Schwartz-class element from a seed, evaluates both sides of one inequality
//! and records the ratio; suites aggregate trials into ratio statistics and
//! empirical constants.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use parking_lot::Mutex;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::calculus::MultiplierSymbol;
use crate::error::{Error, Result};
use crate::spectra::{normalized_entropy, schatten_norm, SingularValueProfile};
use crate::symbols::{
    hormander_constant, lebesgue_norm, level_grid, lorentz_norm, paley_weight_constant, sample_symbol,
    weighted_lebesgue_norm, GaussianComponent, SymbolGrid, SymbolSpec, DEFAULT_LEVEL_POINTS,
};
use crate::weyl::QUANTIZE_DECAY_LIMIT;

/// Draws per seed before a decay-gate failure is reported.
pub const MAX_RESAMPLE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
    R13,
    R14,
    R15,
    R16,
    R17,
    R18,
}

impl TheoremId {
    pub const ALL: [TheoremId; 18] = [
        TheoremId::R1,
        TheoremId::R2,
        TheoremId::R3,
        TheoremId::R4,
        TheoremId::R5,
        TheoremId::R6,
        TheoremId::R7,
        TheoremId::R8,
        TheoremId::R9,
        TheoremId::R10,
        TheoremId::R11,
        TheoremId::R12,
        TheoremId::R13,
        TheoremId::R14,
        TheoremId::R15,
        TheoremId::R16,
        TheoremId::R17,
        TheoremId::R18,
    ];

    pub fn info(self) -> &'static TheoremInfo {
        &REGISTRY[self as usize]
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .iter()
            .copied()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown theorem id `{s}`")))
    }
}

/// How the pass threshold of a theorem is determined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// Constant one (or equality); pass iff `ratio <= 1 + tolerance`.
    One,
    /// Unspecified constant; the suite fits it as the largest observed ratio.
    Empirical,
}

#[derive(Clone, Debug)]
pub struct TheoremInfo {
    pub id: TheoremId,
    pub name: &'static str,
    pub constant: ConstantKind,
    pub tolerance: f64,
    /// Ratio is `exp` of a difference of logarithmic terms.
    pub logarithmic: bool,
}

const fn entry(id: TheoremId, name: &'static str, constant: ConstantKind, tolerance: f64, logarithmic: bool) -> TheoremInfo {
    TheoremInfo { id, name, constant, tolerance, logarithmic }
}

use ConstantKind::{Empirical, One};
static REGISTRY: [TheoremInfo; 18] = [
    entry(TheoremId::R1, "plancherel relation", One, 1e-4, false),
    entry(TheoremId::R2, "hausdorff-young", One, 1e-3, false),
    entry(TheoremId::R3, "inverse hausdorff-young", One, 1e-3, false),
    entry(TheoremId::R4, "reverse hausdorff-young", One, 1e-3, false),
    entry(TheoremId::R5, "paley", Empirical, 0.0, false),
    entry(TheoremId::R6, "hardy-littlewood", Empirical, 0.0, false),
    entry(TheoremId::R7, "inverse hardy-littlewood", Empirical, 0.0, false),
    entry(TheoremId::R8, "hausdorff-young-paley", Empirical, 0.0, false),
    entry(TheoremId::R9, "hormander multiplier", Empirical, 0.0, false),
    entry(TheoremId::R10, "heat decay", Empirical, 0.0, false),
    entry(TheoremId::R11, "lorentz hausdorff-young", Empirical, 0.0, false),
    entry(TheoremId::R12, "lorentz hausdorff-young dual", One, 1e-3, false),
    entry(TheoremId::R13, "lorentz multiplier", Empirical, 0.0, false),
    entry(TheoremId::R14, "sobolev embedding", Empirical, 0.0, false),
    entry(TheoremId::R15, "interpolation holder", One, 1e-3, false),
    entry(TheoremId::R16, "logarithmic holder", One, 1e-3, true),
    entry(TheoremId::R17, "logarithmic sobolev", Empirical, 0.0, true),
    entry(TheoremId::R18, "nash", Empirical, 0.0, false),
];

pub fn registry() -> &'static [TheoremInfo] {
    &REGISTRY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// Named case parameters. A multiplier symbol is given by `g = <name>` plus
/// its own parameters under `g.<key>`.
pub type Params = BTreeMap<String, ParamValue>;

pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), ParamValue::Num(*v))).collect()
}

pub fn with_symbol(mut p: Params, name: &str, sub: &[(&str, f64)]) -> Params {
    p.insert("g".into(), ParamValue::Text(name.into()));
    for (k, v) in sub {
        p.insert(format!("g.{k}"), ParamValue::Num(*v));
    }
    p
}

/// `k=v;k=v` in key order.
pub fn format_params(p: &Params) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn num(p: &Params, key: &str) -> Result<f64> {
    match p.get(key) {
        Some(ParamValue::Num(v)) => Ok(*v),
        Some(ParamValue::Text(s)) => s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("parameter `{key}` must be numeric, got `{s}`"))),
        None => Err(Error::InvalidParameter(format!("missing parameter `{key}`"))),
    }
}

fn num_or(p: &Params, key: &str, default: f64) -> Result<f64> {
    if p.contains_key(key) {
        num(p, key)
    } else {
        Ok(default)
    }
}

/// The multiplier symbol named by `g` and `g.*`.
pub fn symbol_from_params(p: &Params) -> Result<MultiplierSymbol> {
    let name = match p.get("g") {
        Some(ParamValue::Text(s)) => s.clone(),
        _ => return Err(Error::InvalidParameter("missing multiplier symbol `g`".into())),
    };
    let mut sub = BTreeMap::new();
    for (k, v) in p {
        if let Some(rest) = k.strip_prefix("g.") {
            match v {
                ParamValue::Num(x) => {
                    sub.insert(rest.to_string(), *x);
                }
                ParamValue::Text(_) => return Err(Error::InvalidParameter(format!("parameter `{k}` must be numeric"))),
            }
        }
    }
    MultiplierSymbol::from_named(&name, &sub)
}

/// `p / (p - 1)`, infinite at `p = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

fn gate(ok: bool, id: TheoremId, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ParameterGate(format!("{id}: {}", msg())))
    }
}

fn hormander_range(p: f64, q: f64) -> bool {
    p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()
}

/// Rejects parameters outside the admissible range of `id` in dimension `d`.
pub fn check_params(id: TheoremId, p: &Params, d: usize) -> Result<()> {
    let d = d as f64;
    use TheoremId::*;
    match id {
        R1 | R18 => Ok(()),
        R2 | R3 => {
            let x = num(p, "p")?;
            gate((1.0..=2.0).contains(&x), id, || format!("need 1 <= p <= 2, got {x}"))
        }
        R4 => {
            let x = num(p, "p")?;
            gate(x >= 2.0, id, || format!("need p >= 2, got {x}"))
        }
        R5 | R11 | R12 => {
            let x = num(p, "p")?;
            gate(x > 1.0 && x <= 2.0, id, || format!("need 1 < p <= 2, got {x}"))
        }
        R6 | R7 => {
            let x = num(p, "p")?;
            let beta = num(p, "beta")?;
            let ok_p = if id == R6 { x > 1.0 && x <= 2.0 } else { x >= 2.0 && x.is_finite() };
            gate(ok_p, id, || format!("p = {x} out of range"))?;
            gate(beta > d / 2.0, id, || format!("need beta > d/2 so that phi^-beta is integrable, got {beta}"))
        }
        R8 => {
            let x = num(p, "p")?;
            let r = num(p, "r")?;
            gate(x > 1.0 && x < 2.0 + 1e-12 && r >= x && r <= conjugate(x), id, || {
                format!("need 1 < p <= r <= p', got p={x}, r={r}")
            })
        }
        R9 | R13 => {
            let (x, q) = (num(p, "p")?, num(p, "q")?);
            gate(hormander_range(x, q), id, || format!("need 1 < p <= 2 <= q < inf, got p={x}, q={q}"))?;
            if id == R13 {
                gate(x != q, id, || "need p != q".into())?;
            }
            symbol_from_params(p).map(|_| ())
        }
        R10 => {
            let (x, q) = (num(p, "p")?, num(p, "q")?);
            gate(hormander_range(x, q), id, || format!("need 1 < p <= 2 <= q < inf, got p={x}, q={q}"))?;
            let (lo, hi) = (num(p, "tmin")?, num(p, "tmax")?);
            let n = num_or(p, "points", 8.0)?;
            gate(lo > 0.0 && hi > lo && (hi / lo).log10() >= 1.5, id, || {
                format!("t range [{lo}, {hi}] must span at least 1.5 decades")
            })?;
            gate(n >= 5.0, id, || "need at least 5 t points".into())
        }
        R14 => {
            let (x, q, s) = (num(p, "p")?, num(p, "q")?, num(p, "s")?);
            gate(hormander_range(x, q) && x != q, id, || format!("need 1 < p <= 2 <= q < inf, p != q, got p={x}, q={q}"))?;
            let need = d * (1.0 / x - 1.0 / q);
            gate(s >= need - 1e-12, id, || format!("need s >= d(1/p - 1/q) = {need}, got {s}"))
        }
        R15 => {
            let (x, q, eta) = (num(p, "p")?, num(p, "q")?, num(p, "eta")?);
            gate(x >= 1.0 && q >= x, id, || format!("need 1 <= p <= q, got p={x}, q={q}"))?;
            gate(eta > 0.0 && eta < 1.0, id, || format!("need 0 < eta < 1, got {eta}"))
        }
        R16 => {
            let (x, q) = (num(p, "p")?, num(p, "q")?);
            gate(x >= 1.0 && q > x && q.is_finite(), id, || format!("need 1 <= p < q < inf, got p={x}, q={q}"))
        }
        R17 => {
            let (x, s) = (num(p, "p")?, num(p, "s")?);
            gate(x > 1.0 && x < 2.0, id, || format!("need 1 < p < 2, got {x}"))?;
            let (lo, hi) = (d * (2.0 - x) / (2.0 * x), d / x);
            gate(s >= lo - 1e-12 && s < hi, id, || format!("need {lo} <= s < {hi}, got {s}"))
        }
    }
}

/// Parameter grid used when a suite does not give one.
pub fn default_params(id: TheoremId, d: usize) -> Vec<Params> {
    use TheoremId::*;
    let df = d as f64;
    let p43 = 4.0 / 3.0;
    match id {
        R1 | R18 => vec![Params::new()],
        R2 | R3 => [1.0, p43, 2.0].iter().map(|&p| params(&[("p", p)])).collect(),
        R4 => [2.0, 3.0, 4.0].iter().map(|&p| params(&[("p", p)])).collect(),
        R5 => [1.25, 1.5].iter().map(|&p| params(&[("p", p)])).collect(),
        R6 => [1.1 * df / 2.0, 2.0 * df].iter().map(|&b| params(&[("p", 1.5), ("beta", b)])).collect(),
        R7 => [2.0, 3.0].iter().map(|&p| params(&[("p", p), ("beta", 1.1 * df / 2.0)])).collect(),
        R8 => {
            let p = 1.5;
            [p, 2.0, conjugate(p)].iter().map(|&r| params(&[("p", p), ("r", r)])).collect()
        }
        R9 => vec![
            with_symbol(params(&[("p", p43), ("q", 4.0)]), "heat", &[("t", 0.5)]),
            with_symbol(params(&[("p", 1.5), ("q", 3.0)]), "bessel", &[("s", -2.0)]),
        ],
        R10 => vec![params(&[("p", p43), ("q", 4.0), ("tmin", 0.5), ("tmax", 20.0), ("points", 8.0)])],
        R11 | R12 => [p43, 1.5].iter().map(|&p| params(&[("p", p)])).collect(),
        R13 => vec![
            with_symbol(params(&[("p", p43), ("q", 4.0)]), "power", &[("r", 2.0)]),
            with_symbol(params(&[("p", 1.5), ("q", 3.0)]), "heat", &[("t", 1.0)]),
        ],
        R14 => {
            let (p, q) = (p43, 4.0);
            let s = df * (1.0 / p - 1.0 / q);
            vec![params(&[("p", p), ("q", q), ("s", s)]), params(&[("p", 1.5), ("q", 3.0), ("s", 1.5 * df / 3.0)])]
        }
        R15 => vec![params(&[("p", 1.0), ("q", 4.0), ("eta", 0.5)]), params(&[("p", 2.0), ("q", f64::INFINITY), ("eta", 0.25)])],
        R16 => vec![params(&[("p", 1.0), ("q", 2.0)]), params(&[("p", 2.0), ("q", 4.0)])],
        R17 => {
            let p = 1.5;
            vec![params(&[("p", p), ("s", df * (2.0 - p) / (2.0 * p))]), params(&[("p", p), ("s", 0.5 * df / p)])]
        }
    }
}

/// Random finite Gaussian mixtures `sum A_k exp(-a_k |s - c_k|^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElementFamily {
    pub max_components: usize,
    /// Range of the decay rates `a_k`.
    pub rate: [f64; 2],
    /// Centers are uniform in the ball of radius `center_fraction * L`.
    pub center_fraction: f64,
}

impl Default for ElementFamily {
    fn default() -> Self {
        ElementFamily { max_components: 3, rate: [0.5, 2.0], center_fraction: 0.125 }
    }
}

impl ElementFamily {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.rate;
        if self.max_components == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) || !(self.center_fraction >= 0.0 && self.center_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("invalid element family {self:?}")));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng, d: usize, half_width: f64) -> SymbolSpec {
        let k = rng.gen_range(1..=self.max_components);
        let radius = self.center_fraction * half_width;
        let components = (0..k)
            .map(|_| {
                let a = rng.gen_range(self.rate[0]..=self.rate[1]);
                let center = if d == 1 {
                    vec![rng.gen_range(-radius..=radius)]
                } else {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let phi = rng.gen_range(0.0..2.0 * PI);
                    vec![r * phi.cos(), r * phi.sin()]
                };
                let modulus = rng.gen_range(0.5..=1.0);
                let phase = rng.gen_range(0.0..2.0 * PI);
                GaussianComponent {
                    amplitude: [modulus * phase.cos(), modulus * phase.sin()],
                    a,
                    center,
                    monomial: vec![],
                    wave: vec![],
                }
            })
            .collect();
        SymbolSpec::Mixture { components }
    }
}

/// A sampled element with everything the registry needs from it.
#[derive(Clone, Debug)]
pub struct RandomElement<E> {
    pub seed: u64,
    pub spec: SymbolSpec,
    pub f: SymbolGrid,
    pub x: E,
    pub xhat: SymbolGrid,
    pub profile: SingularValueProfile,
}

impl<E> RandomElement<E> {
    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({ "seed": self.seed, "spec": self.spec })
    }
}

/// Draws a mixture from `seed`, redrawing deterministically until `f` passes
/// the boundary-decay gate.
pub fn sample_random_element<B: Backend>(backend: &B, family: &ElementFamily, seed: u64) -> Result<RandomElement<B::Element>> {
    family.validate()?;
    let grid = *backend.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..MAX_RESAMPLE {
        let spec = family.draw(&mut rng, backend.dim(), grid.half_width);
        let f = sample_symbol(&spec, grid)?;
        let ratio = f.boundary_ratio();
        if ratio > QUANTIZE_DECAY_LIMIT {
            worst = worst.max(ratio);
            continue;
        }
        let x = backend.quantize(&f)?;
        let xhat = backend.fourier(&x)?;
        let profile = backend.profile(&x)?;
        return Ok(RandomElement { seed, spec, f, x, xhat, profile });
    }
    Err(Error::BoundaryDecay { mass: worst, limit: QUANTIZE_DECAY_LIMIT })
}

/// Seed of trial `index` under `master`: the first word of ChaCha stream `index`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Seed of the `slot`-th element of a trial (pairs use slots 0 and 1).
pub fn element_seed(seed: u64, slot: u64) -> u64 {
    if slot == 0 {
        seed
    } else {
        trial_seed(seed, slot)
    }
}

/// One theorem trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCase {
    pub id: TheoremId,
    pub trial: u64,
    pub params: Params,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
    pub seed: u64,
    /// Seeds and mixture specs of the elements used.
    pub element: serde_json::Value,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub id: TheoremId,
    pub trials: u64,
    pub cases: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Largest observed ratio; the recorded constant for empirical theorems.
    pub fitted_constant: f64,
    pub analytic_constant: Option<f64>,
    pub failures: usize,
}

/// A suite: `trials` trials starting at `first_trial`, each evaluated at every
/// parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub id: TheoremId,
    pub trials: u64,
    #[serde(default)]
    pub first_trial: u64,
    #[serde(default)]
    pub params: Vec<Params>,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub summary: RatioSummary,
    pub cases: Vec<TheoremCase>,
}

pub fn summarize(id: TheoremId, trials: u64, cases: &[TheoremCase]) -> RatioSummary {
    let mut finite: Vec<f64> = cases.iter().map(|c| c.ratio).filter(|r| r.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let max_ratio = finite.last().copied().unwrap_or(f64::NAN);
    let median_ratio = match finite.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => finite[n / 2],
        n => 0.5 * (finite[n / 2 - 1] + finite[n / 2]),
    };
    let analytic_constant = match id.info().constant {
        ConstantKind::One => Some(1.0),
        ConstantKind::Empirical => None,
    };
    RatioSummary {
        id,
        trials,
        cases: cases.len(),
        max_ratio,
        median_ratio,
        fitted_constant: max_ratio,
        analytic_constant,
        failures: cases.iter().filter(|c| !c.pass).count(),
    }
}

/// Least-squares slope of `log value` against `log t`.
pub fn fit_decay_slope(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::InvalidParameter(format!("need at least 5 samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(t, v)| !(t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite())) {
        return Err(Error::InvalidParameter("times and values must be positive and finite".into()));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &(t, _)| (a.min(t), b.max(t)));
    if (hi / lo).log10() < 1.5 {
        return Err(Error::InvalidParameter(format!("t span [{lo}, {hi}] is under 1.5 decades")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// `n` log-uniform points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// `(t, ||e^{t Delta} x||_q / ||x||_p)` over `ts`.
pub fn heat_decay_curve<B: Backend>(backend: &B, x: &B::Element, p: f64, q: f64, ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    let xhat = backend.fourier(x)?;
    let base = schatten_norm(&backend.profile(x)?, p)?;
    ts.iter()
        .map(|&t| {
            let y = backend.multiplier_hat(&MultiplierSymbol::heat(t), &xhat)?;
            Ok((t, schatten_norm(&backend.profile(&y)?, q)? / base))
        })
        .collect()
}

/// Pointwise maximum of the heat-decay curves of the centered Gaussians
/// `lambda(exp(-a |s|^2))` over `rates`: the decay envelope of the family.
pub fn heat_decay_envelope<B: Backend>(backend: &B, p: f64, q: f64, ts: &[f64], rates: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut envelope: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 0.0)).collect();
    for &a in rates {
        let f = sample_symbol(&SymbolSpec::Gaussian(GaussianComponent::centered(a)), *backend.grid())?;
        let curve = heat_decay_curve(backend, &backend.quantize(&f)?, p, q, ts)?;
        for (m, (_, v)) in envelope.iter_mut().zip(curve) {
            m.1 = m.1.max(v);
        }
    }
    Ok(envelope)
}

/// Entropy side and Holder side of the logarithmic Holder inequality.
pub fn log_holder_terms(profile: &SingularValueProfile, p: f64, q: f64) -> Result<(f64, f64)> {
    let lhs = normalized_entropy(profile, p)?;
    let ratio = (schatten_norm(profile, q)? / schatten_norm(profile, p)?).powf(p);
    Ok((lhs, q / (q - p) * ratio.ln()))
}

/// `(W, ||x_W||_q / ||J^s x_W||_p)` for `x_W^ = exp(-|s|^2 / (2 W^2))`.
pub fn sobolev_scale_sweep<B: Backend>(backend: &B, p: f64, q: f64, s: f64, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    scales
        .iter()
        .map(|&w| {
            let spec = SymbolSpec::Gaussian(GaussianComponent::centered(1.0 / (2.0 * w * w)));
            let f = sample_symbol(&spec, *backend.grid())?;
            let x = backend.quantize(&f)?;
            let y = backend.multiplier_hat(&MultiplierSymbol::bessel(s), &backend.fourier(&x)?)?;
            let num = schatten_norm(&backend.profile(&x)?, q)?;
            Ok((w, num / schatten_norm(&backend.profile(&y)?, p)?))
        })
        .collect()
}

/// Registry evaluator over one backend, with a per-seed element cache.
pub struct Harness<B: Backend> {
    backend: B,
    family: ElementFamily,
    cache: Mutex<HashMap<u64, Arc<RandomElement<B::Element>>>>,
    paley: SymbolGrid,
    paley_constant: f64,
    phi: Vec<f64>,
}

struct Outcome {
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

fn plain(lhs: f64, rhs: f64) -> Outcome {
    Outcome { lhs, rhs, ratio: lhs / rhs }
}

impl<B: Backend> Harness<B> {
    pub fn new(backend: B, family: ElementFamily) -> Result<Self> {
        family.validate()?;
        let grid = *backend.grid();
        let d = backend.dim();
        let paley = sample_symbol(&SymbolSpec::PaleyWeight, grid)?;
        let paley_constant = paley_weight_constant(&paley, &level_grid(&paley, DEFAULT_LEVEL_POINTS))?;
        let phi = (0..grid.len())
            .map(|i| 1.0 + grid.coords(i)[..d].iter().map(|v| v * v).sum::<f64>())
            .collect();
        Ok(Harness { backend, family, cache: Mutex::new(HashMap::new()), paley, paley_constant, phi })
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn family(&self) -> &ElementFamily {
        &self.family
    }

    /// `M_h` of the Paley weight `(1 + |s|^d)^{-1}` on the backend grid.
    pub fn paley_constant(&self) -> f64 {
        self.paley_constant
    }

    pub fn element(&self, seed: u64) -> Result<Arc<RandomElement<B::Element>>> {
        if let Some(e) = self.cache.lock().get(&seed) {
            return Ok(e.clone());
        }
        let e = Arc::new(sample_random_element(&self.backend, &self.family, seed)?);
        self.cache.lock().insert(seed, e.clone());
        Ok(e)
    }

    pub fn clear_cache(&self) {
        self.cache.lock().clear();
    }

    fn norm(&self, x: &B::Element, p: f64) -> Result<f64> {
        schatten_norm(&self.backend.profile(x)?, p)
    }

    fn weighted(&self, f: &SymbolGrid, weight: impl Fn(usize) -> f64, p: f64) -> Result<f64> {
        let w: Vec<f64> = (0..f.grid().len()).map(weight).collect();
        weighted_lebesgue_norm(f, &w, p)
    }

    /// `||x||_{W^{1,2}}`: the `L^2` norms of `x` and its first derivatives.
    fn w12_norm(&self, e: &RandomElement<B::Element>) -> Result<f64> {
        let mut total = schatten_norm(&e.profile, 2.0)?;
        for axis in 0..self.backend.dim() {
            let y = self.backend.multiplier_hat(&MultiplierSymbol::derivative(axis), &e.xhat)?;
            total += self.norm(&y, 2.0)?;
        }
        Ok(total)
    }

    fn evaluate(&self, id: TheoremId, p: &Params, seed: u64) -> Result<(Outcome, serde_json::Value)> {
        use TheoremId::*;
        let e = self.element(seed)?;
        let d = self.backend.dim() as f64;
        let mut prov = vec![e.provenance()];
        let out = match id {
            R1 => {
                let y = self.element(element_seed(seed, 1))?;
                prov.push(y.provenance());
                let tau = self.backend.inner(&e.x, &y.x)?;
                let int = e.xhat.inner(&y.xhat)?;
                let scale = lebesgue_norm(&e.xhat, 2.0)? * lebesgue_norm(&y.xhat, 2.0)?;
                let lhs = scale + (tau - int).norm();
                Outcome { lhs, rhs: scale, ratio: lhs / scale }
            }
            R2 => {
                let x = num(p, "p")?;
                plain(lebesgue_norm(&e.xhat, conjugate(x))?, schatten_norm(&e.profile, x)?)
            }
            R3 => {
                let x = num(p, "p")?;
                plain(schatten_norm(&e.profile, conjugate(x))?, lebesgue_norm(&e.f, x)?)
            }
            R4 => {
                let x = num(p, "p")?;
                plain(schatten_norm(&e.profile, x)?, lebesgue_norm(&e.xhat, conjugate(x))?)
            }
            R5 => {
                let x = num(p, "p")?;
                let h = self.paley.samples();
                let lhs = self.weighted(&e.xhat, |i| h[i].re.powf(2.0 - x), x)?;
                plain(lhs, self.paley_constant.powf((2.0 - x) / x) * schatten_norm(&e.profile, x)?)
            }
            R6 => {
                let (x, beta) = (num(p, "p")?, num(p, "beta")?);
                let lhs = self.weighted(&e.xhat, |i| self.phi[i].powf(beta * (x - 2.0)), x)?;
                plain(lhs, schatten_norm(&e.profile, x)?)
            }
            R7 => {
                let (x, beta) = (num(p, "p")?, num(p, "beta")?);
                let xc = conjugate(x);
                let rhs = self.weighted(&e.xhat, |i| self.phi[i].powf(beta * x * (2.0 - xc) / xc), x)?;
                plain(schatten_norm(&e.profile, x)?, rhs)
            }
            R8 => {
                let (x, r) = (num(p, "p")?, num(p, "r")?);
                let xc = conjugate(x);
                let h = self.paley.samples();
                let lhs = self.weighted(&e.xhat, |i| h[i].re.powf(1.0 - r / xc), r)?;
                plain(lhs, self.paley_constant.powf(1.0 / r - 1.0 / xc) * schatten_norm(&e.profile, x)?)
            }
            R9 => {
                let (x, q) = (num(p, "p")?, num(p, "q")?);
                let g = symbol_from_params(p)?;
                let y = self.backend.multiplier_hat(&g, &e.xhat)?;
                let lhs = self.norm(&y, q)? / schatten_norm(&e.profile, x)?;
                let gs = g.sample(self.backend.grid())?;
                plain(lhs, hormander_constant(&gs, x, q, &level_grid(&gs, DEFAULT_LEVEL_POINTS))?)
            }
            R10 => {
                let (x, q) = (num(p, "p")?, num(p, "q")?);
                let n = num_or(p, "points", 8.0)? as usize;
                let ts = log_grid(num(p, "tmin")?, num(p, "tmax")?, n);
                let gamma = d / 2.0 * (1.0 / x - 1.0 / q);
                let curve = heat_decay_curve(&self.backend, &e.x, x, q, &ts)?;
                let worst = curve.iter().map(|(t, v)| v * t.powf(gamma)).fold(0.0, f64::max);
                plain(worst, 1.0)
            }
            R11 => {
                let x = num(p, "p")?;
                let xc = conjugate(x);
                plain(schatten_norm(&e.profile, xc)?, lorentz_norm(&e.f, x, xc)?)
            }
            R12 => {
                let x = num(p, "p")?;
                plain(lorentz_norm(&e.xhat, conjugate(x), x)?, schatten_norm(&e.profile, x)?)
            }
            R13 => {
                let (x, q) = (num(p, "p")?, num(p, "q")?);
                let r = 1.0 / (1.0 / x - 1.0 / q);
                let g = symbol_from_params(p)?;
                let y = self.backend.multiplier_hat(&g, &e.xhat)?;
                let gnorm = lorentz_norm(&g.sample(self.backend.grid())?, r, f64::INFINITY)?;
                plain(self.norm(&y, q)?, gnorm * schatten_norm(&e.profile, x)?)
            }
            R14 => {
                let (x, q, s) = (num(p, "p")?, num(p, "q")?, num(p, "s")?);
                let y = self.backend.multiplier_hat(&MultiplierSymbol::bessel(s), &e.xhat)?;
                plain(schatten_norm(&e.profile, q)?, self.norm(&y, x)?)
            }
            R15 => {
                let (x, q, eta) = (num(p, "p")?, num(p, "q")?, num(p, "eta")?);
                let r = 1.0 / (eta / x + (1.0 - eta) / q);
                let rhs = schatten_norm(&e.profile, x)?.powf(eta) * schatten_norm(&e.profile, q)?.powf(1.0 - eta);
                plain(schatten_norm(&e.profile, r)?, rhs)
            }
            R16 => {
                let (x, q) = (num(p, "p")?, num(p, "q")?);
                let (lhs, rhs) = log_holder_terms(&e.profile, x, q)?;
                Outcome { lhs, rhs, ratio: (lhs - rhs).exp() }
            }
            R17 => {
                let (x, s) = (num(p, "p")?, num(p, "s")?);
                let lhs = normalized_entropy(&e.profile, x)?;
                let y = self.backend.multiplier_hat(&MultiplierSymbol::bessel(s), &e.xhat)?;
                let growth = (self.norm(&y, x)? / schatten_norm(&e.profile, x)?).powf(x);
                let k = d / (s * x);
                let rhs = k * growth.ln();
                Outcome { lhs, rhs, ratio: ((lhs - rhs) / k).exp() }
            }
            R18 => {
                let l2 = schatten_norm(&e.profile, 2.0)?;
                let l1 = schatten_norm(&e.profile, 1.0)?;
                plain(l2.powf(1.0 + 2.0 / d), self.w12_norm(&e)? * l1.powf(2.0 / d))
            }
        };
        Ok((out, serde_json::Value::Array(prov)))
    }

    /// One case. Parameter-gate violations are errors; numerical failures are
    /// recorded in the case as a failed trial with a reason.
    pub fn run_case(&self, id: TheoremId, p: &Params, seed: u64) -> Result<TheoremCase> {
        check_params(id, p, self.backend.dim())?;
        let info = id.info();
        let mut case = TheoremCase {
            id,
            trial: 0,
            params: p.clone(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            ratio: f64::NAN,
            pass: false,
            seed,
            element: serde_json::Value::Null,
            reason: None,
        };
        match self.evaluate(id, p, seed) {
            Ok((out, prov)) => {
                case.lhs = out.lhs;
                case.rhs = out.rhs;
                case.ratio = out.ratio;
                case.element = prov;
                case.pass = out.ratio.is_finite()
                    && match info.constant {
                        ConstantKind::One => out.ratio <= 1.0 + info.tolerance,
                        ConstantKind::Empirical => true,
                    };
                if !out.ratio.is_finite() {
                    case.reason = Some("non-finite ratio".into());
                } else if !case.pass {
                    case.reason = Some("inequality violated".into());
                }
            }
            Err(err) => case.reason = Some(err.to_string()),
        }
        Ok(case)
    }

    /// Runs every (trial, parameter set) pair, in parallel, and returns the
    /// cases ordered by trial then parameter set.
    pub fn run_suite(&self, suite: &SuiteSpec, master_seed: u64) -> Result<SuiteResult> {
        if suite.trials == 0 {
            return Err(Error::InvalidParameter("a suite needs at least one trial".into()));
        }
        let grid = if suite.params.is_empty() { default_params(suite.id, self.backend.dim()) } else { suite.params.clone() };
        for p in &grid {
            check_params(suite.id, p, self.backend.dim())?;
        }
        let jobs: Vec<(u64, usize)> = (suite.first_trial..suite.first_trial + suite.trials)
            .flat_map(|t| (0..grid.len()).map(move |k| (t, k)))
            .collect();
        let mut cases = jobs
            .into_par_iter()
            .map(|(trial, k)| {
                let mut case = self.run_case(suite.id, &grid[k], trial_seed(master_seed, trial))?;
                case.trial = trial;
                Ok((trial, k, case))
            })
            .collect::<Result<Vec<_>>>()?;
        cases.sort_by_key(|(t, k, _)| (*t, *k));
        let cases: Vec<TheoremCase> = cases.into_iter().map(|(_, _, c)| c).collect();
        Ok(SuiteResult { summary: summarize(suite.id, suite.trials, &cases), cases })
    }
}

/// Largest `||g(D) x||_q / ||x||_p` over `n_trials` sampled elements: a lower
/// bound for the `L^p -> L^q` norm of `g(D)`, never the norm itself.
pub fn estimate_norm_ratio<B: Backend>(harness: &Harness<B>, g: &MultiplierSymbol, p: f64, q: f64, n_trials: u64, seed: u64) -> Result<f64> {
    if !hormander_range(p, q) {
        return Err(Error::InvalidParameter(format!("need 1 < p <= 2 <= q < inf, got p={p}, q={q}")));
    }
    let b = harness.backend();
    (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let e = harness.element(trial_seed(seed, t))?;
            let y = b.multiplier_hat(g, &e.xhat)?;
            Ok(schatten_norm(&b.profile(&y)?, q)? / schatten_norm(&e.profile, p)?)
        })
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}
