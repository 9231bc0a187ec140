pub mod backend;
pub mod calculus;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod spectra;
pub mod symbols;
pub mod weyl;
mod step;

pub use backend::{Backend, MoyalBackend};
pub use calculus::MultiplierSymbol;
pub use error::{Error, Result};
pub use harness::{Harness, Params, RatioSummary, SuiteSpec, TheoremCase, TheoremId};
pub use oracle::ClassicalBackend;
pub use spectra::SingularValueProfile;
pub use symbols::{GridParams, SymbolGrid, SymbolSpec, C64};
pub use weyl::{DeformationMatrix, QuantizedOperator, Quantizer};
