//! Exact arithmetic in the abelian-by-cyclic groups `Γ_A`.

mod element;
mod matrix;
mod word;

pub use element::{AbcGroup, GroupElement};
pub use matrix::IntegerMatrix;
pub use word::{Generator, Letter, Word};
