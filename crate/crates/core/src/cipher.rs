//! Encryption, decryption and the composite (equivalent) key.
//!
//! One round maps the bit matrix `B` to `B'` by
//!
//! ```text
//! B*(i, :) = B(T_M(i), :)      vertical step
//! B'(:, l) = B*(:, T_N(l))     horizontal step
//! ```
//!
//! and rounds are chained through the key schedule. Every round is an
//! independent row permutation and column permutation, so the whole cipher is
//! `B'(i, l) = B(row_perm(i), col_perm(l))` for a single pair of
//! permutations: the [`EquivalentKey`].

use crate::bitplane::{compose, decompose, BitMatrix, GrayImage};
use crate::error::{Error, Result};
use crate::keyschedule::SecretKey;
use crate::perm::Permutation;

/// Source of per-round `(T_M, T_N)` pairs.
///
/// [`SecretKey`] derives them from the logistic map. [`FixedRounds`] lets a
/// caller pin arbitrary permutations.
pub trait RoundPermutations {
    fn round_permutations(&self, height: usize, width: usize) -> Result<Vec<(Permutation, Permutation)>>;
}

impl RoundPermutations for SecretKey {
    fn round_permutations(&self, height: usize, width: usize) -> Result<Vec<(Permutation, Permutation)>> {
        SecretKey::round_permutations(self, height, width)
    }
}

/// Explicit round permutations, checked against the image size on use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedRounds(pub Vec<(Permutation, Permutation)>);

impl RoundPermutations for FixedRounds {
    fn round_permutations(&self, height: usize, width: usize) -> Result<Vec<(Permutation, Permutation)>> {
        if self.0.is_empty() {
            return Err(Error::Parameter("at least one round is required".into()));
        }
        for (r, (rows, cols)) in self.0.iter().enumerate() {
            if rows.len() != height || cols.len() != 8 * width {
                return Err(Error::Dimension(format!(
                    "round {r} permutes {}x{} bits, image has {height}x{}",
                    rows.len(),
                    cols.len(),
                    8 * width
                )));
            }
        }
        Ok(self.0.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Encrypt,
    Decrypt,
}

pub fn encrypt_bits(bits: &BitMatrix, rounds: &[(Permutation, Permutation)]) -> Result<BitMatrix> {
    let mut cur = bits.clone();
    for (t_m, t_n) in rounds {
        let mid = cur.gather_rows(t_m)?;
        cur = mid.gather_cols(t_n)?;
    }
    Ok(cur)
}

pub fn decrypt_bits(bits: &BitMatrix, rounds: &[(Permutation, Permutation)]) -> Result<BitMatrix> {
    let mut cur = bits.clone();
    for (t_m, t_n) in rounds.iter().rev() {
        // B*(:, T_N(l)) = B'(:, l), then B(T_M(i), :) = B*(i, :).
        let mid = cur.gather_cols(&t_n.inverse())?;
        cur = mid.gather_rows(&t_m.inverse())?;
    }
    Ok(cur)
}

pub fn encrypt_with<P: RoundPermutations + ?Sized>(img: &GrayImage, schedule: &P) -> Result<GrayImage> {
    let rounds = schedule.round_permutations(img.height(), img.width())?;
    compose(&encrypt_bits(&decompose(img), &rounds)?)
}

pub fn decrypt_with<P: RoundPermutations + ?Sized>(img: &GrayImage, schedule: &P) -> Result<GrayImage> {
    let rounds = schedule.round_permutations(img.height(), img.width())?;
    compose(&decrypt_bits(&decompose(img), &rounds)?)
}

pub fn encrypt(img: &GrayImage, key: &SecretKey) -> Result<GrayImage> {
    encrypt_with(img, key)
}

pub fn decrypt(img: &GrayImage, key: &SecretKey) -> Result<GrayImage> {
    decrypt_with(img, key)
}

/// Single row permutation and column permutation equivalent to any number
/// of cipher rounds: cipher bit `(i, l)` is plain bit `(row_perm(i), col_perm(l))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EquivalentKey {
    height: usize,
    width: usize,
    row_perm: Permutation,
    col_perm: Permutation,
}

impl EquivalentKey {
    pub fn new(height: usize, width: usize, row_perm: Permutation, col_perm: Permutation) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {height}x{width}"
            )));
        }
        if row_perm.len() != height {
            return Err(Error::Dimension(format!(
                "row permutation has length {}, expected M = {height}",
                row_perm.len()
            )));
        }
        if col_perm.len() != 8 * width {
            return Err(Error::Dimension(format!(
                "column permutation has length {}, expected 8N = {}",
                col_perm.len(),
                8 * width
            )));
        }
        Ok(EquivalentKey {
            height,
            width,
            row_perm,
            col_perm,
        })
    }

    pub fn identity(height: usize, width: usize) -> Result<Self> {
        EquivalentKey::new(
            height,
            width,
            Permutation::identity(height),
            Permutation::identity(8 * width),
        )
    }

    /// Collapses a sequence of rounds.
    pub fn from_rounds(height: usize, width: usize, rounds: &[(Permutation, Permutation)]) -> Result<Self> {
        let mut rows = Permutation::identity(height);
        let mut cols = Permutation::identity(8 * width);
        for (t_m, t_n) in rounds {
            rows = rows.compose(t_m)?;
            cols = cols.compose(t_n)?;
        }
        EquivalentKey::new(height, width, rows, cols)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row_perm(&self) -> &Permutation {
        &self.row_perm
    }

    pub fn col_perm(&self) -> &Permutation {
        &self.col_perm
    }

    pub fn apply_bits(&self, bits: &BitMatrix, direction: Direction) -> Result<BitMatrix> {
        if bits.rows() != self.height || bits.cols() != 8 * self.width {
            return Err(Error::Dimension(format!(
                "key is for {}x{} bits, input is {}x{}",
                self.height,
                8 * self.width,
                bits.rows(),
                bits.cols()
            )));
        }
        match direction {
            Direction::Encrypt => bits.gather_rows(&self.row_perm)?.gather_cols(&self.col_perm),
            Direction::Decrypt => bits
                .gather_rows(&self.row_perm.inverse())?
                .gather_cols(&self.col_perm.inverse()),
        }
    }
}

pub fn composite_equivalent_key_with<P: RoundPermutations + ?Sized>(
    schedule: &P,
    height: usize,
    width: usize,
) -> Result<EquivalentKey> {
    let rounds = schedule.round_permutations(height, width)?;
    EquivalentKey::from_rounds(height, width, &rounds)
}

pub fn composite_equivalent_key(key: &SecretKey, height: usize, width: usize) -> Result<EquivalentKey> {
    composite_equivalent_key_with(key, height, width)
}

pub fn apply_equivalent(img: &GrayImage, key: &EquivalentKey, direction: Direction) -> Result<GrayImage> {
    if img.height() != key.height() || img.width() != key.width() {
        return Err(Error::Dimension(format!(
            "key is for {}x{} images, got {}x{}",
            key.height(),
            key.width(),
            img.height(),
            img.width()
        )));
    }
    compose(&key.apply_bits(&decompose(img), direction)?)
}
