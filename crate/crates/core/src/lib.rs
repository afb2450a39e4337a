pub mod catalog;
pub mod chart_geometry;
pub mod cli;
pub mod energy;
pub mod error;
pub mod grid;
pub mod invariant_algebra;
pub mod isopara_algebra;
pub mod jet_calculus;
pub mod sum;

pub use error::{Error, Result};
