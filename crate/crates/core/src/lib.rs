//! Phase-space transport toolkit for the Chesnavich CH4+ model of roaming.

pub mod config;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod io;
pub mod manifolds;
pub mod model;
pub mod orbits;
pub mod surfaces;
pub mod transport;

pub use error::{Error, Result};
pub use model::{ModelParams, PhasePoint, M_H};
