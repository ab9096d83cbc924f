//! Hilbert-space embeddings of stochastic-process sample paths.
//!
//! The crate embeds pure-jump and piecewise-linear sample paths into l2 via
//! fractional-integral pairings, evaluates the closed-form Gaussian
//! approximation bounds attached to that embedding (Poisson, linear
//! interpolation, Donsker walk, fractional Brownian transfer), and verifies
//! bounds and rates against independent quadrature and Monte Carlo oracles.

pub mod error;
pub mod fractional;
pub mod grid;
pub mod hilbert;
pub mod processes;
pub mod quad;
pub mod special;
pub mod stein;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Endpoint, Grid, GridFunction, SingularExponent};
