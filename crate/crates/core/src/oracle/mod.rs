//! Numerical ground truth for the analytic solution: direct integration of
//! the master equation on a truncated Fock space and a Monte Carlo linear
//! unraveling of it.

mod compare;
mod master;
mod space;
mod stochastic;

pub use compare::*;
pub use master::*;
pub use space::*;
pub use stochastic::*;
