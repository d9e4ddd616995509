//! Closed 2-forms on almost abelian Lie algebras.
//!
//! The Lie algebra is `ℝe ⋉ ℝ^N` with `ad_e` given in real Jordan form. A 2-form is a skew
//! `D×D` matrix (`D = N + 1`); it is closed iff its principal minor `B` solves `B𝒥 + 𝒥ᵗB = 0`.

pub mod cli;
pub mod constructor;
mod error;
pub mod io;
pub mod jordan;
pub mod linalg;
pub mod oracle;
pub mod rank;
pub mod reducer;
pub mod structured;

pub use error::Error;
pub use jordan::{BlockPartition, ComplexBlock, JordanSpec, RealBlock};
pub use linalg::{FloatMatrix, Permutation, Rational, RationalMatrix};
