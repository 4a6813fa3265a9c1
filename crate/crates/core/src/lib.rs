pub mod background;
pub mod banded;
pub mod bvp;
mod chart;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod io;
pub mod liouville;
pub mod mesh;
pub mod params;
pub mod plot;
pub mod profile;
pub mod qform;
pub mod system;
pub mod volume;

pub use error::{Error, Result};
