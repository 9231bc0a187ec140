//! The interface the verification harness is written against, and its
//! Moyal-plane implementation. The classical implementation lives in
//! [`crate::oracle`].

use std::sync::Arc;

use crate::calculus::{apply_multiplier_hat, MultiplierSymbol};
use crate::error::Result;
use crate::spectra::{singular_profile, SingularValueProfile};
use crate::symbols::{GridParams, SymbolGrid, C64};
use crate::weyl::{trace_tau, DeformationMatrix, QuantizedOperator, Quantizer};

/// A semifinite measure space with a Fourier transform onto functions on R^d.
pub trait Backend: Send + Sync {
    type Element: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// Grid carrying symbols `f` and Fourier transforms `x^`.
    fn grid(&self) -> &GridParams;

    /// `lambda(f)`
    fn quantize(&self, f: &SymbolGrid) -> Result<Self::Element>;

    /// `x^`
    fn fourier(&self, x: &Self::Element) -> Result<SymbolGrid>;

    /// `mu(., x)` as a step function.
    fn profile(&self, x: &Self::Element) -> Result<SingularValueProfile>;

    /// `tau(x)`
    fn trace(&self, x: &Self::Element) -> Result<C64>;

    /// `tau(x y^*)`
    fn inner(&self, x: &Self::Element, y: &Self::Element) -> Result<C64>;

    /// `g(D) x` given `x^`.
    fn multiplier_hat(&self, g: &MultiplierSymbol, xhat: &SymbolGrid) -> Result<Self::Element>;

    fn multiplier(&self, g: &MultiplierSymbol, x: &Self::Element) -> Result<Self::Element> {
        self.multiplier_hat(g, &self.fourier(x)?)
    }

    fn scale(&self, x: &Self::Element, a: C64) -> Self::Element;

    /// Parameters identifying the backend in reports.
    fn describe(&self) -> serde_json::Value;
}

/// `L^inf(R^2_theta)` truncated to `N` Fock levels, with symbols on `grid`.
#[derive(Clone, Debug)]
pub struct MoyalBackend {
    quantizer: Arc<Quantizer>,
    grid: GridParams,
}

impl MoyalBackend {
    pub fn new(h: f64, fock_dim: usize, grid: GridParams) -> Result<Self> {
        let quantizer = Arc::new(Quantizer::new(DeformationMatrix::canonical(h)?, fock_dim)?);
        Self::with_quantizer(quantizer, grid)
    }

    pub fn with_quantizer(quantizer: Arc<Quantizer>, grid: GridParams) -> Result<Self> {
        if grid.dim != 2 {
            return Err(crate::Error::InvalidGrid(format!("the Moyal backend needs a 2-d grid, got dim {}", grid.dim)));
        }
        grid.validate()?;
        Ok(MoyalBackend { quantizer, grid })
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn theta(&self) -> &DeformationMatrix {
        self.quantizer.theta()
    }

    pub fn fock_dim(&self) -> usize {
        self.quantizer.fock_dim()
    }
}

impl Backend for MoyalBackend {
    type Element = QuantizedOperator;

    fn name(&self) -> &'static str {
        "moyal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn grid(&self) -> &GridParams {
        &self.grid
    }

    fn quantize(&self, f: &SymbolGrid) -> Result<QuantizedOperator> {
        self.quantizer.quantize(f)
    }

    fn fourier(&self, x: &QuantizedOperator) -> Result<SymbolGrid> {
        self.quantizer.dequantize(x, &self.grid)
    }

    fn profile(&self, x: &QuantizedOperator) -> Result<SingularValueProfile> {
        singular_profile(x)
    }

    fn trace(&self, x: &QuantizedOperator) -> Result<C64> {
        Ok(trace_tau(x))
    }

    fn inner(&self, x: &QuantizedOperator, y: &QuantizedOperator) -> Result<C64> {
        Ok(trace_tau(&x.product(&y.adjoint())?))
    }

    fn multiplier_hat(&self, g: &MultiplierSymbol, xhat: &SymbolGrid) -> Result<QuantizedOperator> {
        apply_multiplier_hat(self, g, xhat)
    }

    fn scale(&self, x: &QuantizedOperator, a: C64) -> QuantizedOperator {
        x.scale(a)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "backend": "moyal",
            "h": self.theta().h(),
            "fock_dim": self.fock_dim(),
            "grid": self.grid,
        })
    }
}
