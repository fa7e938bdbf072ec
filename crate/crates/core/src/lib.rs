pub mod error;
pub mod cli;
pub mod codim2;
pub mod exact;
pub mod generate;
pub mod io;
pub mod lambda;
pub mod moyal;
pub mod orbit;
pub mod sigma;
pub mod symplectic;

pub use error::{Error, Result};
