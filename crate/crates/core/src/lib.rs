//! Numerical toolkit for fractional Orlicz–Sobolev spaces.
//!
//! * [`nfunction`]: N-functions, conjugates and growth indices.
//! * [`domain`]: grids with an exterior buffer, kernel tables, grid functions.
//! * [`orlicz`]: modulars, Luxemburg norms, Gagliardo seminorms and inequality checks.
//! * [`operator`]: the discrete fractional a-Laplacian and its weak pairing.
//! * [`energy`]: the energy `I = J − H`, its gradient, the minimizer and the λ₁ estimate.
//! * [`cli`]: configuration files and the batch subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod domain;
pub mod energy;
pub mod error;
pub mod nfunction;
pub mod operator;
pub mod orlicz;
pub mod quad;
pub mod reduce;

pub use domain::{GridDomain, GridFunction, KernelTable, Region};
pub use error::{Error, Result};
pub use nfunction::{NFunction, YoungFunction};
pub use reduce::Reduction;
