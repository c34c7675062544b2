pub mod bounds;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod front;
pub mod lattice;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
