//! Semiclassical restriction exponents and the numerical machinery used to
//! check them against model quasimodes.

pub mod error;
pub mod exponent;
pub mod factorization;
pub mod fit;
pub mod grid;
pub mod harmonics;
pub mod propagator;
pub mod quantization;
pub mod restriction;
pub mod scaling;
pub mod symbol;

pub use error::{Error, Result};
pub use exponent::{DeltaResult, ExponentQuery, Lp, StrichartzAssumptions, StrichartzPair, Q};
pub use grid::{GridFunction, PeriodicGrid};
pub use symbol::{PhaseBox, Structure, SymbolField};
