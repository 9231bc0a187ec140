//! Fourier multipliers `g(D)` and the operators built from them: derivations,
//! heat semigroup, Bessel potentials, translations, Sobolev norms.
//!
//! Every multiplier runs on the Fourier side: `x -> x^ -> g x^ -> lambda(g x^)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::backend::{Backend, MoyalBackend};
use crate::error::{Error, Result};
use crate::spectra::{schatten_norm, singular_profile};
use crate::symbols::{superlevel_measure, GridParams, SymbolGrid, C64};
use crate::weyl::{trace_tau, QuantizedOperator};

/// Relative boundary magnitude of `x^` above which a multiplier is refused.
pub const MULTIPLIER_DECAY_LIMIT: f64 = 1e-8;

/// Allowed relative gap between an analytic superlevel measure and the grid count.
pub const SUPERLEVEL_TOLERANCE: f64 = 0.03;

type Evaluator = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;
type Superlevel = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;

/// A closed-form symbol on R^d, optionally with `u -> |{|g| >= u}|` in closed form.
#[derive(Clone)]
pub struct MultiplierSymbol {
    label: String,
    eval: Evaluator,
    superlevel: Option<Superlevel>,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol").field("label", &self.label).finish()
    }
}

fn norm2(s: &[f64]) -> f64 {
    s.iter().map(|v| v * v).sum()
}

/// Volume of the unit ball in dimension 1 or 2.
fn ball_volume(d: usize) -> f64 {
    if d == 1 {
        2.0
    } else {
        PI
    }
}

impl MultiplierSymbol {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        MultiplierSymbol { label: label.into(), eval: Arc::new(eval), superlevel: None }
    }

    pub fn with_superlevel(mut self, f: impl Fn(f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.superlevel = Some(Arc::new(f));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn evaluate(&self, s: &[f64]) -> C64 {
        (self.eval)(s)
    }

    /// Analytic `|{|g| >= u}|` in dimension `d`, when known.
    pub fn analytic_superlevel(&self, u: f64, d: usize) -> Option<f64> {
        self.superlevel.as_ref().map(|f| f(u, d))
    }

    pub fn sample(&self, grid: &GridParams) -> Result<SymbolGrid> {
        let d = grid.dim;
        SymbolGrid::from_fn(*grid, |c| self.evaluate(&c[..d]))
            .map_err(|_| Error::InvalidParameter(format!("symbol `{}` is not finite on the grid", self.label)))
    }

    pub fn identity() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        let m = c.norm();
        Self::new(format!("constant({c})"), move |_| c).with_superlevel(move |u, _| if u <= m { f64::INFINITY } else { 0.0 })
    }

    /// `e^{-t |s|^2}`
    pub fn heat(t: f64) -> Self {
        Self::new(format!("heat(t={t})"), move |s| C64::new((-t * norm2(s)).exp(), 0.0)).with_superlevel(
            move |u, d| {
                if u > 1.0 {
                    0.0
                } else if t == 0.0 {
                    f64::INFINITY
                } else {
                    let rad = (-u.ln() / t).sqrt();
                    ball_volume(d) * rad.powi(d as i32)
                }
            },
        )
    }

    /// `(1 + |s|^2)^{s/2}`
    pub fn bessel(order: f64) -> Self {
        Self::new(format!("bessel(s={order})"), move |s| C64::new((1.0 + norm2(s)).powf(order / 2.0), 0.0))
            .with_superlevel(move |u, d| {
                if order >= 0.0 {
                    return if order == 0.0 && u > 1.0 { 0.0 } else { f64::INFINITY };
                }
                if u > 1.0 {
                    0.0
                } else {
                    let r2 = u.powf(2.0 / order) - 1.0;
                    ball_volume(d) * r2.max(0.0).powf(d as f64 / 2.0)
                }
            })
    }

    /// `i s_j` (zero-based axis)
    pub fn derivative(axis: usize) -> Self {
        Self::new(format!("derivative({axis})"), move |s| C64::new(0.0, s.get(axis).copied().unwrap_or(0.0)))
    }

    /// `(i s)^alpha`
    pub fn monomial(alpha: &[u32]) -> Self {
        let alpha = alpha.to_vec();
        Self::new(format!("monomial({alpha:?})"), move |s| {
            let mut v = C64::new(1.0, 0.0);
            for (j, &a) in alpha.iter().enumerate() {
                v *= C64::new(0.0, s.get(j).copied().unwrap_or(0.0)).powu(a);
            }
            v
        })
    }

    /// `-|s|^2`
    pub fn laplacian() -> Self {
        Self::new("laplacian", |s| C64::new(-norm2(s), 0.0))
    }

    /// `e^{i (s, a)}`
    pub fn translation(a: Vec<f64>) -> Self {
        Self::new(format!("translation({a:?})"), move |s| {
            let phase: f64 = s.iter().zip(&a).map(|(x, y)| x * y).sum();
            C64::from_polar(1.0, phase)
        })
        .with_superlevel(|u, _| if u <= 1.0 { f64::INFINITY } else { 0.0 })
    }

    /// Indicator of `|s| <= radius`.
    pub fn disc(radius: f64) -> Self {
        Self::new(format!("disc(r={radius})"), move |s| C64::new(if norm2(s) <= radius * radius { 1.0 } else { 0.0 }, 0.0))
            .with_superlevel(move |u, d| if u <= 1.0 { ball_volume(d) * radius.powi(d as i32) } else { 0.0 })
    }

    /// `|s|^{-d/r}`, the model element of `L^{r, inf}`, whose weak norm is
    /// `|B_1|^{1/r}`.
    pub fn power(r: f64) -> Self {
        Self::new(format!("power(r={r})"), move |s| C64::new(norm2(s).powf(-(s.len() as f64) / (2.0 * r)), 0.0))
            .with_superlevel(move |u, d| ball_volume(d) * u.powf(-r))
    }

    pub fn conj(&self) -> Self {
        let eval = self.eval.clone();
        MultiplierSymbol {
            label: format!("conj({})", self.label),
            eval: Arc::new(move |s| eval(s).conj()),
            superlevel: self.superlevel.clone(),
        }
    }

    pub fn product(&self, other: &MultiplierSymbol) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        MultiplierSymbol {
            label: format!("{}*{}", self.label, other.label),
            eval: Arc::new(move |s| a(s) * b(s)),
            superlevel: None,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let a = self.eval.clone();
        MultiplierSymbol { label: format!("{c}*{}", self.label), eval: Arc::new(move |s| a(s) * c), superlevel: None }
    }

    /// Registry lookup by name with named numeric parameters.
    pub fn from_named(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            params
                .get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::InvalidParameter(format!("symbol `{name}` needs `{k}`")))
        };
        Ok(match name {
            "identity" => Self::identity(),
            "constant" => Self::constant(C64::new(get("re", Some(1.0))?, get("im", Some(0.0))?)),
            "heat" => {
                let t = get("t", None)?;
                if !(t >= 0.0) {
                    return Err(Error::InvalidParameter(format!("heat time must be >= 0, got {t}")));
                }
                Self::heat(t)
            }
            "bessel" => Self::bessel(get("s", None)?),
            "resolvent" => Self::bessel(-2.0),
            "derivative" => Self::derivative(get("axis", Some(0.0))? as usize),
            "laplacian" => Self::laplacian(),
            "translation" => Self::translation(vec![get("a1", Some(0.0))?, get("a2", Some(0.0))?]),
            "disc" => Self::disc(get("radius", Some(1.0))?),
            "power" => Self::power(get("r", None)?),
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    /// Largest relative gap between the analytic superlevel measure and the
    /// grid count over `levels`; errors if it exceeds the 3% tolerance.
    pub fn check_superlevel(&self, grid: &GridParams, levels: &[f64]) -> Result<f64> {
        let Some(exact) = &self.superlevel else {
            return Ok(0.0);
        };
        let g = self.sample(grid)?;
        let mut worst: f64 = 0.0;
        for &u in levels {
            let want = exact(u, grid.dim);
            if !want.is_finite() || want == 0.0 {
                continue;
            }
            let got = superlevel_measure(&g, u)?;
            worst = worst.max((got - want).abs() / want);
        }
        if worst > SUPERLEVEL_TOLERANCE {
            return Err(Error::Numerical(format!(
                "symbol `{}`: analytic superlevel measure off by {:.1}%",
                self.label,
                100.0 * worst
            )));
        }
        Ok(worst)
    }
}

/// `g x^` after the boundary-decay gate on `x^`.
pub fn multiply_fourier_side(g: &MultiplierSymbol, xhat: &SymbolGrid) -> Result<SymbolGrid> {
    let ratio = xhat.boundary_ratio();
    if ratio > MULTIPLIER_DECAY_LIMIT {
        return Err(Error::BoundaryDecay { mass: ratio, limit: MULTIPLIER_DECAY_LIMIT });
    }
    let d = xhat.dim();
    xhat.map(|s, z| g.evaluate(&s[..d]) * z)
}

/// `g(D) x`, the operator with Fourier transform `g x^`.
pub fn apply_multiplier(space: &MoyalBackend, g: &MultiplierSymbol, x: &QuantizedOperator) -> Result<QuantizedOperator> {
    let xhat = space.fourier(x)?;
    apply_multiplier_hat(space, g, &xhat)
}

/// `g(D) x` from a precomputed `x^`.
pub fn apply_multiplier_hat(space: &MoyalBackend, g: &MultiplierSymbol, xhat: &SymbolGrid) -> Result<QuantizedOperator> {
    let gx = multiply_fourier_side(g, xhat)?;
    space.quantizer().quantize_gated(&gx, f64::INFINITY)
}

/// `d_j x`, zero-based axis.
pub fn partial_derivative(space: &MoyalBackend, x: &QuantizedOperator, axis: usize) -> Result<QuantizedOperator> {
    if axis >= 2 {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range for d = 2")));
    }
    apply_multiplier(space, &MultiplierSymbol::derivative(axis), x)
}

/// `e^{t Delta} x`
pub fn heat_flow(space: &MoyalBackend, x: &QuantizedOperator, t: f64) -> Result<QuantizedOperator> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("heat time must be >= 0, got {t}")));
    }
    apply_multiplier(space, &MultiplierSymbol::heat(t), x)
}

/// `J^s x = (1 - Delta)^{s/2} x`
pub fn bessel_potential(space: &MoyalBackend, x: &QuantizedOperator, s: f64) -> Result<QuantizedOperator> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter("Bessel order must be finite".into()));
    }
    apply_multiplier(space, &MultiplierSymbol::bessel(s), x)
}

/// `||J^s x||_p`
pub fn sobolev_norm(space: &MoyalBackend, x: &QuantizedOperator, p: f64, s: f64) -> Result<f64> {
    let y = if s == 0.0 { x.clone() } else { bessel_potential(space, x, s)? };
    schatten_norm(&singular_profile(&y)?, p)
}

/// Multi-indices of length 2 with `|alpha| <= m`, in lexicographic order.
pub fn multi_indices(m: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=m - a {
            out.push([a, b]);
        }
    }
    out
}

/// `sum_{|alpha| <= m} ||d^alpha x||_p`
pub fn wm_norm(space: &MoyalBackend, x: &QuantizedOperator, p: f64, m: u32) -> Result<f64> {
    let xhat = space.fourier(x)?;
    let mut total = 0.0;
    for alpha in multi_indices(m) {
        let y = if alpha == [0, 0] { x.clone() } else { apply_multiplier_hat(space, &MultiplierSymbol::monomial(&alpha), &xhat)? };
        total += schatten_norm(&singular_profile(&y)?, p)?;
    }
    Ok(total)
}

/// `T_a x`, the multiplier `e^{i (s, a)}`.
pub fn translate(space: &MoyalBackend, x: &QuantizedOperator, a: [f64; 2]) -> Result<QuantizedOperator> {
    apply_multiplier(space, &MultiplierSymbol::translation(a.to_vec()), x)
}

/// `|tau(g(D)x y^*) - tau(x (conj(g)(D) y)^*)|`
pub fn adjoint_defect(space: &MoyalBackend, g: &MultiplierSymbol, x: &QuantizedOperator, y: &QuantizedOperator) -> Result<f64> {
    let gx = apply_multiplier(space, g, x)?;
    let gy = apply_multiplier(space, &g.conj(), y)?;
    let lhs = trace_tau(&gx.product(&y.adjoint())?);
    let rhs = trace_tau(&x.product(&gy.adjoint())?);
    Ok((lhs - rhs).norm())
}
