pub mod cf_real;
pub mod circle_sets;
pub mod constructions;
pub mod criterion;
pub mod error;
pub mod interval;
pub mod laurent;
pub mod montecarlo;
pub mod psi;

pub use error::{Error, Result};
