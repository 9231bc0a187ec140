//! Criterion benchmarks for the quantization pipeline; run with `cargo bench -p moyal-bench`.

use moyal_core::symbols::{sample_symbol, GaussianComponent};
use moyal_core::{GridParams, MoyalBackend, SymbolGrid, SymbolSpec};

/// Backend and a Gaussian symbol at the given truncation and grid size.
pub fn fixture(fock_dim: usize, points: usize) -> (MoyalBackend, SymbolGrid) {
    let grid = GridParams::new(2, 8.0, points).expect("grid");
    let space = MoyalBackend::new(1.0, fock_dim, grid).expect("backend");
    let mut g = GaussianComponent::centered(1.0);
    g.center = vec![0.5, -0.25];
    let f = sample_symbol(&SymbolSpec::Gaussian(g), grid).expect("symbol");
    (space, f)
}
