pub mod analysis;
pub mod cli_io;
pub mod energy;
pub mod error;
pub mod lattice;
pub mod optimize;
pub mod transitions;

pub use error::{Error, Result};
