//! Sparse recovery through column-weighted Gaussian sensing.
//!
//! Measurements are taken as `y = A·W·x` with Gaussian `A` and a random
//! diagonal `W`. [`pipeline::recover_two_stage`] decodes them with a plain
//! ℓ1 pass followed by an ℓ1 pass reweighted toward the largest entries of
//! the first. [`harness`] measures success rates against the plain ℓ1
//! baseline.
//!
//! The guide in `book/` walks through each module; its code listings are
//! compiled and run as doctests of this crate.

pub mod error;
pub mod harness;
mod linalg;
pub mod pipeline;
pub mod sampling;
pub mod sensing;
pub mod signals;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};

// Every chapter of the guide is a doctest module.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    mod recovery {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
