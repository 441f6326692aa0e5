//! Bit-level image scrambling cipher (ISEA) and a workbench of attacks on it.
//!
//! A gray image of `M x N` pixels is viewed as an `M x 8N` bit matrix. The
//! cipher permutes rows and bit-columns of that matrix with permutations
//! derived from a logistic-map key schedule. Because any number of rounds
//! collapses into a single row permutation and a single column permutation
//! (the [`EquivalentKey`]), the cipher falls to:
//!
//! * a ciphertext-only reassembly that chains rows/columns by similarity
//!   ([`coa`]),
//! * a known-plaintext attack that resolves rows and columns iteratively
//!   ([`kpa`]),
//! * a chosen-plaintext attack that recovers the equivalent key exactly with
//!   a handful of queries ([`cpa`]).

pub mod bitplane;
pub mod cipher;
pub mod coa;
pub mod cpa;
mod error;
pub mod imgio;
pub mod keyschedule;
pub mod kpa;
mod perm;

pub use bitplane::{compose, decompose, BitMatrix, GrayImage};
pub use cipher::{
    apply_equivalent, composite_equivalent_key, decrypt, encrypt, Direction, EquivalentKey,
    FixedRounds, RoundPermutations,
};
pub use error::{Error, Result};
pub use keyschedule::SecretKey;
pub use perm::Permutation;

/// Row or column axis of a bit matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Rows,
    Cols,
}
