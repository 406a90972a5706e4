pub mod analysis;
pub mod cli;
pub mod error;
pub mod fea;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod solidify;
pub mod synthetic;
pub mod template;

pub use error::{Error, Result};
