//! Damped Gross-Pitaevskii dynamics on quantics matrix product states.

extern crate blas_src;

mod chain;
mod env;
pub mod apply;
pub mod diagnostics;
pub mod dns;
pub mod elliptic;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod initial;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod mpo;
pub mod mps;
pub mod stencil;
pub mod tdvp;
pub mod tensor;
pub mod truncation;

pub use num_complex::Complex64 as C64;

pub use error::{QgpeError, Result};
pub use grid::{OrderingKind, QuanticsGrid, ScaleOrdering, Slot};
pub use mps::{infidelity, MpsState, SchmidtData};
pub use truncation::TruncationPolicy;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/initial-conditions.md")]
    mod initial_conditions {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
