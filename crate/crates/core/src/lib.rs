//! Complex SUSY partners of the harmonic oscillator and the free particle,
//! and their exact propagators.
//!
//! Units are `ħ = 1`, `2m = 1`: `h = -∂² + V(x)`.
//!
//! - [`susy`] builds partner potentials, eigenfunctions and bound states.
//! - [`kernel`] evaluates the partner kernels and propagates sampled states.
//! - [`oracle`] holds the independent Crank-Nicolson and grid-spectrum solvers.
//! - [`model`], [`specfun`], [`quad`] and [`grid`] are the building blocks.
//!
//! ```
//! use susyprop::kernel::{soliton_kernel_closed, theorem_kernel, QuadratureSpec};
//! use susyprop::susy::{PartnerModel, TransformParams};
//!
//! let pm = PartnerModel::soliton(1.0, 2.0)?;
//! let TransformParams::Soliton { c, .. } = pm.factorization().params() else { unreachable!() };
//! let k = theorem_kernel(&pm, 0.3, -0.4, 1.0, &QuadratureSpec::default())?;
//! let closed = soliton_kernel_closed(1.0, c, 0.3, -0.4, 1.0)?;
//! assert!((k.value - closed.value).norm() < 1e-8);
//! # Ok::<(), susyprop::Error>(())
//! ```

pub mod error;
pub mod specfun;

pub use error::{Error, Result};
pub mod grid;
pub mod quad;
pub mod model;
pub mod susy;
pub mod oracle;
pub mod kernel;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/partners.md")]
    mod partners {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/evolution.md")]
    mod evolution {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
