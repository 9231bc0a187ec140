//! The commutative case `theta = 0` in one dimension. Elements are functions
//! on the position line, the trace is `(2 pi)^{-1} int ds` and `mu(t, x)` is
//! the decreasing rearrangement of `|x|` against that measure.

use std::f64::consts::PI;

use crate::backend::Backend;
use crate::calculus::{multiply_fourier_side, MultiplierSymbol};
use crate::error::{Error, Result};
use crate::harness::{Harness, Params, TheoremCase, TheoremId};
use crate::spectra::SingularValueProfile;
use crate::symbols::{classical_fourier, GridParams, SymbolGrid, C64};

/// Theorems with a classical counterpart run by the oracle.
pub const CLASSICAL_THEOREMS: [TheoremId; 8] = [
    TheoremId::R1,
    TheoremId::R2,
    TheoremId::R3,
    TheoremId::R4,
    TheoremId::R5,
    TheoremId::R9,
    TheoremId::R10,
    TheoremId::R14,
];

/// `L^inf(R)` with frequencies on `grid` and functions on its reciprocal grid.
#[derive(Clone, Debug)]
pub struct ClassicalBackend {
    grid: GridParams,
    position: GridParams,
}

impl ClassicalBackend {
    pub fn new(grid: GridParams) -> Result<Self> {
        grid.validate()?;
        if grid.dim != 1 {
            return Err(Error::InvalidGrid(format!("the classical backend is one-dimensional, got dim {}", grid.dim)));
        }
        Ok(ClassicalBackend { grid, position: grid.reciprocal() })
    }

    /// Grid on which elements live.
    pub fn position_grid(&self) -> &GridParams {
        &self.position
    }

    fn trace_weight(&self) -> f64 {
        self.position.cell_volume() / (2.0 * PI)
    }

    fn check(&self, x: &SymbolGrid) -> Result<()> {
        if x.grid() != &self.position {
            return Err(Error::Mismatch("element is not sampled on the position grid".into()));
        }
        Ok(())
    }
}

impl Backend for ClassicalBackend {
    type Element = SymbolGrid;

    fn name(&self) -> &'static str {
        "classical"
    }

    fn dim(&self) -> usize {
        1
    }

    fn grid(&self) -> &GridParams {
        &self.grid
    }

    fn quantize(&self, f: &SymbolGrid) -> Result<SymbolGrid> {
        if f.grid() != &self.grid {
            return Err(Error::Mismatch("symbol is not sampled on the frequency grid".into()));
        }
        let x = classical_fourier(f, 1)?;
        SymbolGrid::new(self.position, x.into_samples())
    }

    fn fourier(&self, x: &SymbolGrid) -> Result<SymbolGrid> {
        self.check(x)?;
        let f = classical_fourier(x, -1)?.scale(C64::new(1.0 / (2.0 * PI), 0.0));
        SymbolGrid::new(self.grid, f.into_samples())
    }

    fn profile(&self, x: &SymbolGrid) -> Result<SingularValueProfile> {
        self.check(x)?;
        SingularValueProfile::new(x.samples().iter().map(|z| z.norm()).collect(), self.trace_weight())
    }

    fn trace(&self, x: &SymbolGrid) -> Result<C64> {
        self.check(x)?;
        Ok(x.integral() / (2.0 * PI))
    }

    fn inner(&self, x: &SymbolGrid, y: &SymbolGrid) -> Result<C64> {
        self.check(x)?;
        Ok(x.inner(y)? / (2.0 * PI))
    }

    fn multiplier_hat(&self, g: &MultiplierSymbol, xhat: &SymbolGrid) -> Result<SymbolGrid> {
        self.quantize(&multiply_fourier_side(g, xhat)?)
    }

    fn scale(&self, x: &SymbolGrid, a: C64) -> SymbolGrid {
        x.scale(a)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({ "backend": "classical", "grid": self.grid })
    }
}

/// `g(D) f` through the classical transform pair.
pub fn classical_multiplier(space: &ClassicalBackend, g: &MultiplierSymbol, f: &SymbolGrid) -> Result<SymbolGrid> {
    space.multiplier(g, f)
}

/// One registry case on the classical backend; ids without a commutative
/// counterpart are refused.
pub fn classical_case(harness: &Harness<ClassicalBackend>, id: TheoremId, params: &Params, seed: u64) -> Result<TheoremCase> {
    if !CLASSICAL_THEOREMS.contains(&id) {
        return Err(Error::Unsupported(format!("{id} has no classical case")));
    }
    harness.run_case(id, params, seed)
}
