//! Damped Newton solver for the semidiscrete moment measure problem in the
//! plane: given a centered discrete probability measure `nu`, find weights
//! `Phi` such that the moment measure of the convex function `Phi*` is `nu`.

pub mod analysis;
pub mod cli;
pub mod energy;
mod error;
pub mod geometry;
pub mod measure;
mod numeric;
mod point;
pub mod quadrature;
pub mod solver;
mod sparse;

pub use error::{Error, Result};
pub use point::Vec2;
