//! Executable rigidity machinery for actions of abelian-by-cyclic groups
//! near the identity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod group;
pub mod report;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
