pub mod algebra;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod operators;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
