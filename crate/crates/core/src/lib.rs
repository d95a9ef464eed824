pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonians;
pub mod hilbert;
pub mod linalg;
pub mod states;
pub mod topology;

pub use error::{Error, Result};
