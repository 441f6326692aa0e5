//! Gray images and their bit-matrix representation.
//!
//! Pixel `(i, j)` of an `M x N` image occupies columns `8j..8j+8` of row `i`
//! in the `M x 8N` bit matrix, least-significant bit first.

use std::fmt;

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// An 8-bit gray image, row-major, `height` rows of `width` pixels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {height}x{width}"
            )));
        }
        let expected = height
            .checked_mul(width)
            .ok_or_else(|| Error::Dimension(format!("{height}x{width} overflows")))?;
        if pixels.len() != expected {
            return Err(Error::Dimension(format!(
                "{height}x{width} image needs {expected} pixels, got {}",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            height,
            width,
            pixels,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height.saturating_mul(width));
        for i in 0..height {
            for j in 0..width {
                pixels.push(f(i, j));
            }
        }
        GrayImage::new(height, width, pixels)
    }

    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self> {
        GrayImage::new(height, width, vec![value; height.saturating_mul(width)])
    }

    /// Number of rows, `M`.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixel columns, `N`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.pixels[i * self.width + j]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.pixels[i * self.width..(i + 1) * self.width]
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Dense binary matrix, each row packed little-endian into `u64` words.
///
/// Bits past `cols` in the last word of a row are always zero, so word-wise
/// popcounts and comparisons are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        if self.rows <= 16 && self.cols <= 64 {
            for i in 0..self.rows {
                let line: String = (0..self.cols)
                    .map(|l| if self.get(i, l) { '1' } else { '0' })
                    .collect();
                writeln!(f, "  {line}")?;
            }
        }
        Ok(())
    }
}

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(64)
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BitMatrix::zeros(rows, cols);
        for i in 0..rows {
            for l in 0..cols {
                if f(i, l) {
                    m.set(i, l, true);
                }
            }
        }
        m
    }

    /// Builds a matrix from row-major `0`/`1` values.
    pub fn from_bits(rows: usize, cols: usize, bits: &[u8]) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} bit matrix needs {} entries, got {}",
                rows * cols,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Parameter(format!(
                "entry {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(BitMatrix::from_fn(rows, cols, |i, l| bits[i * cols + l] == 1))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> bool {
        debug_assert!(i < self.rows && l < self.cols);
        (self.words[i * self.words_per_row + l / 64] >> (l % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, l: usize, bit: bool) {
        assert!(i < self.rows && l < self.cols, "bit index out of range");
        let w = &mut self.words[i * self.words_per_row + l / 64];
        let mask = 1u64 << (l % 64);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of row `i`.
    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn row_bits(&self, i: usize) -> Vec<bool> {
        (0..self.cols).map(|l| self.get(i, l)).collect()
    }

    pub fn col_bits(&self, l: usize) -> Vec<bool> {
        (0..self.rows).map(|i| self.get(i, l)).collect()
    }

    pub fn row_ones(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of 1s in every row.
    pub fn row_counts(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.row_ones(i)).collect()
    }

    /// Number of 1s in every column.
    pub fn col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for i in 0..self.rows {
            for (w, &word) in self.row_words(i).iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    let b = word.trailing_zeros() as usize;
                    counts[w * 64 + b] += 1;
                    word &= word - 1;
                }
            }
        }
        counts
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where rows `a` and `b` hold the same bit.
    #[inline]
    pub fn row_agreement(&self, a: usize, b: usize) -> usize {
        let differing: usize = self
            .row_words(a)
            .iter()
            .zip(self.row_words(b))
            .map(|(x, y)| (x ^ y).count_ones() as usize)
            .sum();
        self.cols - differing
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (w, &word) in self.row_words(i).iter().enumerate() {
                let mut word = word;
                while word != 0 {
                    let b = word.trailing_zeros() as usize;
                    t.set(w * 64 + b, i, true);
                    word &= word - 1;
                }
            }
        }
        t
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(rows.len(), self.cols);
        for (dst, &src) in rows.iter().enumerate() {
            let wpr = self.words_per_row;
            out.words[dst * wpr..(dst + 1) * wpr].copy_from_slice(self.row_words(src));
        }
        out
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_cols(&self, cols: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            let src = self.row_words(i);
            let dst = &mut out.words[i * out.words_per_row..(i + 1) * out.words_per_row];
            for (l, &c) in cols.iter().enumerate() {
                let bit = (src[c / 64] >> (c % 64)) & 1;
                dst[l / 64] |= bit << (l % 64);
            }
        }
        out
    }

    /// Output row `i` is input row `perm(i)`.
    pub fn gather_rows(&self, perm: &Permutation) -> Result<BitMatrix> {
        if perm.len() != self.rows {
            return Err(Error::Dimension(format!(
                "row permutation of length {} applied to {} rows",
                perm.len(),
                self.rows
            )));
        }
        Ok(self.select_rows(perm.as_slice()))
    }

    /// Output column `l` is input column `perm(l)`.
    pub fn gather_cols(&self, perm: &Permutation) -> Result<BitMatrix> {
        if perm.len() != self.cols {
            return Err(Error::Dimension(format!(
                "column permutation of length {} applied to {} columns",
                perm.len(),
                self.cols
            )));
        }
        Ok(self.select_cols(perm.as_slice()))
    }

    /// Raw words, used for byte-level conversion.
    fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Splits every pixel into its eight bits, least-significant first.
pub fn decompose(img: &GrayImage) -> BitMatrix {
    let mut bits = BitMatrix::zeros(img.height(), 8 * img.width());
    let wpr = bits.words_per_row;
    for i in 0..img.height() {
        let row = img.row(i);
        let dst = &mut bits.words[i * wpr..(i + 1) * wpr];
        // Pixel j fills byte j of the little-endian packed row.
        for (w, chunk) in row.chunks(8).enumerate() {
            let mut bytes = [0u8; 8];
            bytes[..chunk.len()].copy_from_slice(chunk);
            dst[w] = u64::from_le_bytes(bytes);
        }
    }
    bits
}

/// Inverse of [`decompose`]; the column count must be a multiple of 8.
pub fn compose(bits: &BitMatrix) -> Result<GrayImage> {
    if !bits.cols().is_multiple_of(8) || bits.cols() == 0 || bits.rows() == 0 {
        return Err(Error::Dimension(format!(
            "cannot compose a {}x{} bit matrix: column count must be a positive multiple of 8",
            bits.rows(),
            bits.cols()
        )));
    }
    let width = bits.cols() / 8;
    let mut pixels = Vec::with_capacity(bits.rows() * width);
    let wpr = bits.words_per_row;
    for i in 0..bits.rows() {
        let row = &bits.words()[i * wpr..(i + 1) * wpr];
        let mut remaining = width;
        for w in row {
            let take = remaining.min(8);
            pixels.extend_from_slice(&w.to_le_bytes()[..take]);
            remaining -= take;
        }
    }
    GrayImage::new(bits.rows(), width, pixels)
}
