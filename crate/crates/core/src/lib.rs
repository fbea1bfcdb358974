//! Free boundary curve shortening flow on Riemannian disks.

pub mod chordarc;
pub mod cli;
pub mod config;
pub mod curve;
pub mod eikonal;
pub mod flow;
pub mod error;
pub mod geodesy;
pub mod minmax;
pub mod numerics;
pub mod stability;
pub mod surface;
pub mod types;

pub use error::{Error, Result};
pub use types::{Point, Tensor};
