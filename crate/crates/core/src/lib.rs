//! Solvable model of a dissipative cavity–oscillator interferometer driven by
//! a weak classical force.
//!
//! * [`params`]: physical parameters, unit systems and derived couplings.
//! * [`kernels`]: the scalar time kernels φ_t, c_t, s_t, c₀, c₁, c₂ and β⁺_n.
//! * [`observables`]: cavity density-matrix elements and detector statistics.
//! * [`sensitivity`]: amplitude-regime bounds and sweep grids.
//! * [`oracle`]: truncated master-equation and stochastic-trajectory oracles.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod kernels;
pub mod observables;
pub mod oracle;
pub mod par;
pub mod params;
pub mod quadrature;
pub mod sensitivity;

pub use error::{Error, ErrorClass, Result};
