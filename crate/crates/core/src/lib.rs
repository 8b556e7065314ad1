//! Radial solutions of the Henon problem, their singular eigenvalues and Morse
//! indices, and prediction of nonradial bifurcation.

pub mod acceptance;
pub mod bessel;
pub mod bifurcation;
pub mod cache;
pub mod cli;
pub mod error;
pub mod morse;
pub mod ode;
pub mod params;
pub mod radial;
pub mod roots;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use params::{BaseParams, ProblemParams};
