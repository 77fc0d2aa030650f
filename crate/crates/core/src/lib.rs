//! Factorization norms of sampled Hankel kernels, the Hille–Phillips calculus
//! for matrix semigroups, and scalar Hardy-space utilities.
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration and the
//! experiment runner live in the companion `facnorm` crate.
//!
//! Conventions used throughout:
//! - the semigroup generated by `-A` is `T_t = exp(-tA)`;
//! - the Fourier transform is `ĥ(u) = ∫ h(t) e^{-itu} dt`;
//! - the matrix pairing is the bilinear `⟨M, N⟩ = Σ M[i][j]·N[i][j]`;
//! - vector inner products are linear in the first slot, `⟨x, y⟩ = y* x`.

#![no_std]

extern crate alloc;

mod error;
pub mod fft;
pub mod gamma2;
pub mod hankel;
pub mod hardy;
pub mod linalg;
pub mod quad;
pub mod semigroup;
pub mod symbols;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
