//! Numerical laboratory for the sine product
//! `P_k(w) = prod_{r=1}^{k} |2 sin(pi r w)|` at
//! `w = (sqrt 5 - 1)/2`.
//!
//! The crate is organised bottom-up:
//!
//! - [`dd`]: double-double arithmetic used by every kernel.
//! - [`fibcore`]: big Fibonacci numbers, modular inverses, Zeckendorf digits.
//! - [`goldenangle`]: fixed-point `{r w}`, powers of `w` and the auxiliary
//!   sequences `s_nt`, `xi_nt`, `h_nt`.
//! - [`sudler`]: the product itself, the renormalisation subsequence
//!   `Q_n = P_{F_n}` and its factorisation `Q_n = A_n B_n C_n`.
//! - [`birkhoff`]: partial sums, discrepancy and cotangent sums, closed-form
//!   trigonometric identities.
//! - [`bounds`]: inequality checks, perturbed products, the Zeckendorf split
//!   and the power-law scan.
//! - [`verify`]: the invariant suite run by `sudler verify`.
//! - [`cli`]: the `sudler` command-line front end.

// `!(x < y)` is used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff;
pub mod bounds;
pub mod cli;
pub mod dd;
pub mod error;
pub mod fibcore;
pub mod goldenangle;
pub mod parallel;
pub mod sudler;
pub mod verify;

pub use dd::Dd;
pub use error::{Error, Result};
pub use goldenangle::{FixedFrac, GoldenCtx};
pub use sudler::{Decomposition, ProductResult};

/// Default fixed-point precision in bits.
pub const DEFAULT_PRECISION_BITS: u32 = 192;
