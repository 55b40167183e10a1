pub mod base_group;
pub mod certify;
pub mod condition_a;
pub mod dim4;
pub mod error;
pub mod exact_angle;
pub mod index_core;
pub mod lattice;
pub mod lp;
pub mod orbit;
pub mod partitions;
pub mod quasimorphism;

pub use error::{Error, Result};
