pub mod bloch;
pub mod bulk;
pub mod cli;
pub mod coupling;
pub mod dirac;
pub mod dirac_line;
pub mod edge;
pub mod error;
pub mod flow;
pub mod ode;
pub mod potential;
pub mod roots;
pub mod scenarios;
pub mod tight_binding;

pub use error::{Error, Result};
