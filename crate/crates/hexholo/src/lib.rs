//! Hexagonator series as 2-holonomies of the Knizhnik–Zamolodchikov 2-connection.
//!
//! The crate is layered bottom-up:
//!
//! - [`coeffring`]: exact and numeric coefficients;
//! - [`dk2`]: the truncated free algebra and relator bimodule;
//! - [`mzv`]: multiple zeta values, polylogarithms, iterated integrals;
//! - [`associator`]: the Drinfeld KZ associator;
//! - [`geometry`]: configuration-space paths, 2-paths and the connection;
//! - [`transport`]: parallel transport and surface holonomy;
//! - [`hexagonator`]: modification series, pre-hexagonator and Breen checks.

pub mod associator;
pub mod coeffring;
pub mod dense;
pub mod dk2;
pub mod error;
pub mod geometry;
pub mod hexagonator;
pub mod mzv;
pub mod ode;
pub mod quad;
pub mod transport;

pub use coeffring::{Coeff, Coefficient, MzvMonomial, NumCoeff, Rational, SymCoeff};
pub use dk2::{AlgebraSeries, BimoduleSeries, ModLetter, ModWord, Perm};
pub use error::{Error, Result};
