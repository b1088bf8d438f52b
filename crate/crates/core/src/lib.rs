//! Group-sparse static state-feedback synthesis for infinite-horizon LQ control.
//!
//! The crate assembles the finite-dimensional conic standard form
//!
//! ```text
//! min  f(W) + g(P)   s.t.  A·vec(W) + B·vec(P) = 0
//! ```
//!
//! where `f` is the linear cost `<R, W>` restricted to the stabilizing
//! parameterization set and `g` is a group-ℓ0 penalty on `P = W2ᵀ`, and solves
//! it either with penalty PALM ([`palm`]) or with a direct ADMM baseline
//! ([`admm`]). The nonsmooth convex subproblem is handled by a dual proximal
//! block-coordinate-descent solver ([`fprox`]); the group-sparse subproblem by an
//! exact hard-thresholding operator ([`gprox`]).
//!
//! Gains are recovered as `K = W2ᵀ W1⁻¹` and verified against the closed loop
//! (spectral abscissa, Lyapunov H₂ cost) in [`report`].

pub mod admm;
pub mod cases;
pub mod cli;
pub mod error;
pub mod fprox;
pub mod gprox;
pub mod io;
pub mod model;
pub mod palm;
pub mod report;
pub mod symvec;

pub use error::{Error, Result};
pub use model::{BlockStructure, ForbiddenSet, LtiSystem, StandardForm, VertexSet};
