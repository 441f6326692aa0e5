//! Chosen-plaintext recovery of the equivalent key.
//!
//! For `M <= 8N` the first chosen image has a lower-triangular `M x M` block
//! on the left: its rows have 1-counts `1..=M`, all distinct, and column
//! scrambling preserves them, so the row permutation falls out at once. The
//! remaining images label every bit-column `j` with the binary expansion of
//! `j`, `M` bits per image; once rows are unscrambled each cipher column
//! spells out the plain column it came from.
//!
//! For `M > 8N + 1` the roles of rows and columns swap. When `8N` and `M`
//! differ by at most one the triangular image alone fixes both axes.

use std::collections::HashMap;

use crate::bitplane::{compose, decompose, BitMatrix, GrayImage};
use crate::cipher::{Direction, EquivalentKey};
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Encrypts plaintexts under a fixed, unknown key.
pub trait EncryptionOracle {
    fn query(&mut self, plain: &GrayImage) -> Result<GrayImage>;
}

impl<F> EncryptionOracle for F
where
    F: FnMut(&GrayImage) -> Result<GrayImage>,
{
    fn query(&mut self, plain: &GrayImage) -> Result<GrayImage> {
        self(plain)
    }
}

/// Smallest `e` with `2^e >= x`.
fn ceil_log2(x: usize) -> usize {
    debug_assert!(x > 0);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::Dimension(format!(
            "image must be at least 1x1, got {height}x{width}"
        )));
    }
    Ok(())
}

/// Number of chosen images the attack needs, `n*`.
pub fn required_images(height: usize, width: usize) -> usize {
    let (m, w) = (height, 8 * width);
    if w.abs_diff(m) <= 1 {
        1
    } else if w > m {
        // 1 + ceil(log_{2^M}(8N))
        1 + indexed_image_count(m, w)
    } else {
        // 1 + ceil(log_{2^{8N}}(M))
        1 + indexed_image_count(w, m)
    }
}

/// Images of `bits_per_image` label bits needed to label `labels` indices.
fn indexed_image_count(bits_per_image: usize, labels: usize) -> usize {
    ceil_log2(labels).div_ceil(bits_per_image)
}

/// Plaintext count of the earlier chosen-plaintext attack on the same
/// cipher, for comparison. For `N < M <= 8N` only the bound 9 is known, and
/// that bound is returned.
pub fn prior_estimate(height: usize, width: usize) -> usize {
    let (m, n) = (height, width);
    if m < n {
        (8 * n).div_ceil(m) + 1
    } else if m <= 8 * n {
        9
    } else {
        m.div_ceil(8 * n) + 1
    }
}

/// Lower-triangular `M x M` block followed by zero columns. Row `i` has
/// `i + 1` ones.
pub fn build_triangular_plain(height: usize, width: usize) -> Result<GrayImage> {
    check_dims(height, width)?;
    if height > 8 * width {
        return Err(Error::Parameter(format!(
            "triangular image needs M <= 8N, got M = {height}, 8N = {}",
            8 * width
        )));
    }
    compose(&BitMatrix::from_fn(height, 8 * width, |i, l| l <= i))
}

/// Bit `(i, j)` is bit `M*k + i` of `j`.
pub fn build_indexed_plain(k: usize, height: usize, width: usize) -> Result<GrayImage> {
    check_dims(height, width)?;
    let count = indexed_image_count(height, 8 * width);
    if k >= count {
        return Err(Error::Parameter(format!(
            "indexed image {k} out of range, {height}x{width} uses {count}"
        )));
    }
    compose(&BitMatrix::from_fn(height, 8 * width, |i, j| {
        label_bit(j, height * k + i)
    }))
}

/// Lower-triangular `8N x 8N` block in the top rows, zero rows below.
/// Column `l` has `8N - l` ones.
pub fn build_dual_triangular_plain(height: usize, width: usize) -> Result<GrayImage> {
    check_dims(height, width)?;
    if height < 8 * width {
        return Err(Error::Parameter(format!(
            "dual triangular image needs M >= 8N, got M = {height}, 8N = {}",
            8 * width
        )));
    }
    compose(&BitMatrix::from_fn(height, 8 * width, |i, l| l <= i && i < 8 * width))
}

/// Bit `(i, j)` is bit `8N*k + j` of `i`.
pub fn build_dual_indexed_plain(k: usize, height: usize, width: usize) -> Result<GrayImage> {
    check_dims(height, width)?;
    let count = indexed_image_count(8 * width, height);
    if k >= count {
        return Err(Error::Parameter(format!(
            "dual indexed image {k} out of range, {height}x{width} uses {count}"
        )));
    }
    compose(&BitMatrix::from_fn(height, 8 * width, |i, j| {
        label_bit(i, 8 * width * k + j)
    }))
}

#[inline]
fn label_bit(value: usize, bit: usize) -> bool {
    u32::try_from(bit)
        .ok()
        .and_then(|b| value.checked_shr(b))
        .is_some_and(|v| v & 1 == 1)
}

fn ask<O: EncryptionOracle + ?Sized>(oracle: &mut O, plain: &GrayImage) -> Result<BitMatrix> {
    let c = oracle.query(plain)?;
    if c.height() != plain.height() || c.width() != plain.width() {
        return Err(Error::Protocol(format!(
            "oracle answered a {}x{} query with a {}x{} image",
            plain.height(),
            plain.width(),
            c.height(),
            c.width()
        )));
    }
    Ok(decompose(&c))
}

/// Matches cipher vectors to plain vectors by 1-count; every count must be
/// unique, except that one leftover is resolved by elimination.
fn resolve_by_counts(plain: &[usize], cipher: &[usize], what: &str) -> Result<Permutation> {
    let mut index: HashMap<usize, Vec<usize>> = HashMap::new();
    for (j, &c) in plain.iter().enumerate() {
        index.entry(c).or_default().push(j);
    }
    let mut map = vec![None; cipher.len()];
    let mut used = vec![false; plain.len()];
    for (i, c) in cipher.iter().enumerate() {
        if let Some([j]) = index.get(c).map(Vec::as_slice) {
            if !used[*j] {
                map[i] = Some(*j);
                used[*j] = true;
            }
        }
    }
    let open: Vec<usize> = (0..map.len()).filter(|&i| map[i].is_none()).collect();
    match open.as_slice() {
        [] => {}
        [i] => map[*i] = used.iter().position(|u| !u),
        _ => {
            return Err(Error::Protocol(format!(
                "{} {what} could not be matched by 1-count",
                open.len()
            )))
        }
    }
    Permutation::from_vec(map.into_iter().map(Option::unwrap).collect())
        .map_err(|e| Error::Protocol(format!("{what}: {e}")))
}

/// Decodes per-vector labels spread over `responses`. With `rows_carry_labels`
/// the label of cipher column `l` is read down its rows (bit index given by
/// the plain row); otherwise the label of cipher row `i` is read along its
/// columns.
fn decode_labels(
    responses: &[BitMatrix],
    known: &Permutation,
    rows_carry_labels: bool,
    limit: usize,
) -> Result<Permutation> {
    let first = &responses[0];
    let (targets, carriers) = if rows_carry_labels {
        (first.cols(), first.rows())
    } else {
        (first.rows(), first.cols())
    };
    let mut labels = vec![0usize; targets];
    for (k, resp) in responses.iter().enumerate() {
        for carrier in 0..carriers {
            let bit = k * carriers + known.get(carrier);
            for (t, label) in labels.iter_mut().enumerate() {
                let set = if rows_carry_labels {
                    resp.get(carrier, t)
                } else {
                    resp.get(t, carrier)
                };
                if set {
                    if bit >= usize::BITS as usize {
                        return Err(Error::Protocol(format!("label bit {bit} set")));
                    }
                    *label |= 1 << bit;
                }
            }
        }
    }
    if let Some(bad) = labels.iter().find(|&&v| v >= limit) {
        return Err(Error::Protocol(format!("decoded index {bad} exceeds {limit}")));
    }
    Permutation::from_vec(labels).map_err(|e| Error::Protocol(format!("decoded labels: {e}")))
}

/// Recovers the equivalent key of an `height x width` oracle with exactly
/// [`required_images`] queries, and checks it against every response.
pub fn cpa_attack<O: EncryptionOracle + ?Sized>(
    oracle: &mut O,
    height: usize,
    width: usize,
) -> Result<EquivalentKey> {
    check_dims(height, width)?;
    let (m, w) = (height, 8 * width);
    let mut queries: Vec<(GrayImage, BitMatrix)> = Vec::new();
    let mut send = |oracle: &mut O, plain: GrayImage| -> Result<BitMatrix> {
        let c = ask(oracle, &plain)?;
        queries.push((plain, c.clone()));
        Ok(c)
    };

    let (rows, cols) = if w.abs_diff(m) <= 1 {
        let plain = if m <= w {
            build_triangular_plain(m, width)?
        } else {
            build_dual_triangular_plain(m, width)?
        };
        let pb = decompose(&plain);
        let cb = send(oracle, plain)?;
        (
            resolve_by_counts(&pb.row_counts(), &cb.row_counts(), "rows")?,
            resolve_by_counts(&pb.col_counts(), &cb.col_counts(), "columns")?,
        )
    } else if m < w {
        let plain = build_triangular_plain(m, width)?;
        let pb = decompose(&plain);
        let cb = send(oracle, plain)?;
        let rows = resolve_by_counts(&pb.row_counts(), &cb.row_counts(), "rows")?;
        let responses = (0..indexed_image_count(m, w))
            .map(|k| send(oracle, build_indexed_plain(k, m, width)?))
            .collect::<Result<Vec<_>>>()?;
        let cols = decode_labels(&responses, &rows, true, w)?;
        (rows, cols)
    } else {
        let plain = build_dual_triangular_plain(m, width)?;
        let pb = decompose(&plain);
        let cb = send(oracle, plain)?;
        let cols = resolve_by_counts(&pb.col_counts(), &cb.col_counts(), "columns")?;
        let responses = (0..indexed_image_count(w, m))
            .map(|k| send(oracle, build_dual_indexed_plain(k, m, width)?))
            .collect::<Result<Vec<_>>>()?;
        let rows = decode_labels(&responses, &cols, false, m)?;
        (rows, cols)
    };

    let key = EquivalentKey::new(height, width, rows, cols)?;
    for (n, (plain, cipher)) in queries.iter().enumerate() {
        if &key.apply_bits(&decompose(plain), Direction::Encrypt)? != cipher {
            return Err(Error::Protocol(format!(
                "response {} is not a row/column permutation of its query",
                n + 1
            )));
        }
    }
    Ok(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{apply_equivalent, encrypt};
    use crate::keyschedule::SecretKey;

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(2048), 11);
        assert_eq!(ceil_log2(2049), 12);
    }

    #[test]
    fn required_images_examples() {
        assert_eq!(required_images(1704, 2272), 2);
        assert_eq!(required_images(16, 2), 1);
        assert_eq!(required_images(15, 2), 1);
        assert_eq!(required_images(17, 2), 1);
        assert_eq!(required_images(2, 2), 3);
        assert_eq!(required_images(4, 1), 2);
        assert_eq!(required_images(256, 256), 2);
        assert_eq!(required_images(32, 2), 2);
        assert_eq!(required_images(1, 1), 4);
    }

    #[test]
    fn required_images_matches_real_valued_formula() {
        for m in 1..80usize {
            for n in 1..12usize {
                let w = 8 * n;
                let expected = 1 + if w == m || w == m + 1 || w + 1 == m {
                    0
                } else if w > m + 1 {
                    ((3.0 + (n as f64).log2()) / m as f64).ceil() as usize
                } else {
                    ((m as f64).log2() / w as f64).ceil() as usize
                };
                assert_eq!(required_images(m, n), expected, "M={m} N={n}");
            }
        }
    }

    #[test]
    fn prior_estimate_examples() {
        assert_eq!(prior_estimate(1704, 2272), 12);
        assert_eq!(prior_estimate(64, 64), 9);
        assert_eq!(prior_estimate(32, 2), 3);
        assert_eq!(prior_estimate(16, 4), 9);
    }

    #[test]
    fn triangular_examples() {
        let img = build_triangular_plain(2, 1).unwrap();
        assert_eq!(img.pixels(), &[1, 3]);
        let img = build_triangular_plain(8, 1).unwrap();
        for i in 0..8 {
            assert_eq!(img.get(i, 0) as u32, (1u32 << (i + 1)) - 1);
        }
        assert!(build_triangular_plain(9, 1).is_err());
        let counts = decompose(&build_triangular_plain(13, 3).unwrap()).row_counts();
        assert_eq!(counts, (1..=13).collect::<Vec<_>>());
    }

    #[test]
    fn indexed_examples() {
        let b = decompose(&build_indexed_plain(0, 3, 1).unwrap());
        let row0: Vec<bool> = b.row_bits(0);
        assert!(row0.iter().enumerate().all(|(j, &v)| v == (j % 2 == 1)));
        assert_eq!([b.get(0, 5), b.get(1, 5), b.get(2, 5)], [true, false, true]);
        assert_eq!(indexed_image_count(256, 2048), 1);
        assert!(build_indexed_plain(1, 256, 256).is_err());
        // 2x2: two indexed images; one alone leaves labels ambiguous.
        assert_eq!(indexed_image_count(2, 16), 2);
        let b0 = decompose(&build_indexed_plain(0, 2, 2).unwrap());
        let labels: std::collections::HashSet<_> = (0..16).map(|j| b0.col_bits(j)).collect();
        assert!(labels.len() < 16);
    }

    fn oracle_for(key: SecretKey, calls: &mut usize) -> impl FnMut(&GrayImage) -> Result<GrayImage> + '_ {
        move |p: &GrayImage| {
            *calls += 1;
            encrypt(p, &key)
        }
    }

    #[test]
    fn recovers_keys_in_every_regime() {
        let key = SecretKey::new(11, 29, 2, 0.4242, 3.93).unwrap();
        for (m, n) in [(16, 2), (15, 2), (17, 2), (2, 2), (32, 2), (4, 1), (1, 3), (40, 1)] {
            let mut calls = 0;
            let rec = cpa_attack(&mut oracle_for(key, &mut calls), m, n).unwrap();
            assert_eq!(calls, required_images(m, n), "{m}x{n}");
            let truth = crate::cipher::composite_equivalent_key(&key, m, n).unwrap();
            assert_eq!(rec, truth, "{m}x{n}");
            let img = GrayImage::from_fn(m, n, |i, j| (i * 37 + j * 11) as u8).unwrap();
            let c = encrypt(&img, &key).unwrap();
            assert_eq!(apply_equivalent(&c, &rec, Direction::Decrypt).unwrap(), img);
        }
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let mut oracle = |_: &GrayImage| GrayImage::filled(3, 3, 0);
        assert!(matches!(cpa_attack(&mut oracle, 4, 1), Err(Error::Protocol(_))));
    }

    #[test]
    fn rejects_non_permutation_oracle() {
        let mut oracle = |p: &GrayImage| {
            GrayImage::new(p.height(), p.width(), p.pixels().iter().map(|v| v ^ 1).collect())
        };
        assert!(matches!(cpa_attack(&mut oracle, 4, 1), Err(Error::Protocol(_))));
        let mut zero = |p: &GrayImage| GrayImage::filled(p.height(), p.width(), 0);
        assert!(matches!(cpa_attack(&mut zero, 16, 2), Err(Error::Protocol(_))));
    }
}
