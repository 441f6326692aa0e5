//! Ciphertext-only reassembly.
//!
//! A permutation-only cipher leaves the Hamming distance between any two
//! rows (or two columns) of the bit matrix unchanged, and neighbouring rows
//! of a natural image are strongly correlated. Chaining vectors greedily by
//! their agreement ratio therefore rebuilds an approximation of the plain
//! bit matrix, up to a reversal of each axis.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::bitplane::{decompose, BitMatrix, GrayImage};
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::Axis;

/// Fraction of positions where `u` and `v` agree (Sokal-Michener).
pub fn similarity(u: &[bool], v: &[bool]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Parameter(format!(
            "vectors have different lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    if u.is_empty() {
        return Err(Error::Parameter("similarity of empty vectors".into()));
    }
    let same = u.iter().zip(v).filter(|(a, b)| a == b).count();
    Ok(same as f64 / u.len() as f64)
}

fn oriented(bits: &BitMatrix, axis: Axis) -> std::borrow::Cow<'_, BitMatrix> {
    match axis {
        Axis::Rows => std::borrow::Cow::Borrowed(bits),
        Axis::Cols => std::borrow::Cow::Owned(bits.transpose()),
    }
}

/// Mean similarity of consecutive vectors along one axis.
///
/// `None` when the axis has fewer than two vectors.
pub fn axis_adjacency(bits: &BitMatrix, axis: Axis) -> Option<f64> {
    let m = oriented(bits, axis);
    let (sum, pairs) = adjacent_agreement(&m);
    if pairs == 0 || m.cols() == 0 {
        return None;
    }
    Some(sum as f64 / (pairs * m.cols()) as f64)
}

/// Total agreements between consecutive rows, and the number of pairs.
fn adjacent_agreement(m: &BitMatrix) -> (usize, usize) {
    let pairs = m.rows().saturating_sub(1);
    let sum = (0..pairs).map(|i| m.row_agreement(i, i + 1)).sum();
    (sum, pairs)
}

/// Mean similarity over all adjacent row pairs and all adjacent column
/// pairs, pooled.
pub fn adjacency_score(bits: &BitMatrix) -> Result<f64> {
    if bits.rows() < 2 || bits.cols() < 2 {
        return Err(Error::Parameter(format!(
            "adjacency needs at least 2x2 bits, got {}x{}",
            bits.rows(),
            bits.cols()
        )));
    }
    let (row_sum, row_pairs) = adjacent_agreement(bits);
    let (col_sum, col_pairs) = adjacent_agreement(&bits.transpose());
    let row_part = row_sum as f64 / bits.cols() as f64;
    let col_part = col_sum as f64 / bits.rows() as f64;
    Ok((row_part + col_part) / (row_pairs + col_pairs) as f64)
}

fn agreements_with(m: &BitMatrix, anchor: usize) -> Vec<usize> {
    (0..m.rows())
        .into_par_iter()
        .map(|r| m.row_agreement(anchor, r))
        .collect()
}

/// Unused row with the highest score, lowest index on ties.
fn best_unused(scores: &[usize], used: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (r, (&s, &u)) in scores.iter().zip(used).enumerate() {
        if !u && best.is_none_or(|(_, bs)| s > bs) {
            best = Some((r, s));
        }
    }
    best
}

/// Greedy two-ended chain over the rows of `m`, seeded at row 0.
fn greedy_row_chain(m: &BitMatrix) -> Vec<usize> {
    let n = m.rows();
    let mut used = vec![false; n];
    used[0] = true;
    let mut chain = VecDeque::with_capacity(n);
    chain.push_back(0);
    let mut tail_scores = agreements_with(m, 0);
    let mut head_scores = tail_scores.clone();

    for _ in 1..n {
        let (tail_pick, tail_score) = best_unused(&tail_scores, &used).expect("unused row left");
        let (head_pick, head_score) = best_unused(&head_scores, &used).expect("unused row left");
        if tail_score >= head_score {
            used[tail_pick] = true;
            chain.push_back(tail_pick);
            tail_scores = agreements_with(m, tail_pick);
        } else {
            used[head_pick] = true;
            chain.push_front(head_pick);
            head_scores = agreements_with(m, head_pick);
        }
    }
    chain.into()
}

/// Reorders the vectors along `axis` into one greedy similarity chain.
///
/// Returns the reordered matrix and the order, mapping output position to
/// input position.
pub fn reassemble_axis(bits: &BitMatrix, axis: Axis) -> Result<(BitMatrix, Permutation)> {
    let m = oriented(bits, axis);
    if m.rows() < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 vectors along {axis:?}, got {}",
            m.rows()
        )));
    }
    let order = Permutation::from_vec(greedy_row_chain(&m))?;
    let out = match axis {
        Axis::Rows => bits.gather_rows(&order)?,
        Axis::Cols => bits.gather_cols(&order)?,
    };
    Ok((out, order))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisOrder {
    #[default]
    ColsThenRows,
    RowsThenCols,
}

impl AxisOrder {
    fn axes(self) -> [Axis; 2] {
        match self {
            AxisOrder::ColsThenRows => [Axis::Cols, Axis::Rows],
            AxisOrder::RowsThenCols => [Axis::Rows, Axis::Cols],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoaOptions {
    pub axis_order: AxisOrder,
    /// Number of passes; each pass processes both axes once.
    pub passes: usize,
}

impl Default for CoaOptions {
    fn default() -> Self {
        CoaOptions {
            axis_order: AxisOrder::default(),
            passes: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReassemblyResult {
    pub matrix: BitMatrix,
    /// Output row -> cipher row.
    pub row_order: Permutation,
    /// Output column -> cipher column.
    pub col_order: Permutation,
    pub adjacency_before: f64,
    pub adjacency_after: f64,
}

pub fn coa_attack(cimg: &GrayImage, axis_order: AxisOrder) -> Result<ReassemblyResult> {
    coa_attack_with(
        cimg,
        &CoaOptions {
            axis_order,
            ..CoaOptions::default()
        },
    )
}

pub fn coa_attack_with(cimg: &GrayImage, opts: &CoaOptions) -> Result<ReassemblyResult> {
    coa_attack_bits(&decompose(cimg), opts)
}

pub fn coa_attack_bits(bits: &BitMatrix, opts: &CoaOptions) -> Result<ReassemblyResult> {
    if opts.passes == 0 {
        return Err(Error::Parameter("at least one pass is required".into()));
    }
    let adjacency_before = adjacency_score(bits)?;
    let mut matrix = bits.clone();
    let mut row_order = Permutation::identity(bits.rows());
    let mut col_order = Permutation::identity(bits.cols());
    for _ in 0..opts.passes {
        for axis in opts.axis_order.axes() {
            let (next, order) = reassemble_axis(&matrix, axis)?;
            match axis {
                Axis::Rows => row_order = row_order.compose(&order)?,
                Axis::Cols => col_order = col_order.compose(&order)?,
            }
            matrix = next;
        }
    }
    let adjacency_after = adjacency_score(&matrix)?;
    Ok(ReassemblyResult {
        matrix,
        row_order,
        col_order,
        adjacency_before,
        adjacency_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn similarity_examples() {
        let v = [true, false, true, true];
        assert_eq!(similarity(&v, &v).unwrap(), 1.0);
        let c: Vec<bool> = v.iter().map(|b| !b).collect();
        assert_eq!(similarity(&v, &c).unwrap(), 0.0);
        let u = [false, false, true, true];
        let w = [false, true, false, true];
        assert_eq!(similarity(&u, &w).unwrap(), 0.5);
        assert!(similarity(&u, &w[..3]).is_err());
        assert!(similarity(&[], &[]).is_err());
    }

    #[test]
    fn packed_agreement_matches_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = BitMatrix::from_fn(6, 131, |_, _| rng.gen());
        for a in 0..6 {
            for b in 0..6 {
                let s = similarity(&m.row_bits(a), &m.row_bits(b)).unwrap();
                assert_eq!(m.row_agreement(a, b) as f64 / 131.0, s);
            }
        }
    }

    #[test]
    fn adjacency_examples() {
        assert_eq!(adjacency_score(&BitMatrix::zeros(4, 8)).unwrap(), 1.0);
        let checker = BitMatrix::from_fn(4, 8, |i, l| (i + l) % 2 == 0);
        assert_eq!(adjacency_score(&checker).unwrap(), 0.0);

        let r = [1u8, 0, 0, 1, 1, 0, 1, 0];
        let mut bits = Vec::new();
        bits.extend_from_slice(&r);
        bits.extend_from_slice(&r);
        bits.extend(r.iter().map(|b| 1 - b));
        let m = BitMatrix::from_bits(3, 8, &bits).unwrap();
        assert_eq!(axis_adjacency(&m, Axis::Rows), Some(0.5));
        assert!(adjacency_score(&BitMatrix::zeros(1, 8)).is_err());
    }

    /// Row k holds k leading ones.
    fn gradient(rows: usize, cols: usize) -> BitMatrix {
        BitMatrix::from_fn(rows, cols, |i, l| l < i)
    }

    fn is_order_or_reversal(order: &[usize]) -> bool {
        order.windows(2).all(|w| w[1] == w[0] + 1) || order.windows(2).all(|w| w[0] == w[1] + 1)
    }

    #[test]
    fn gradient_rows_reassemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let g = gradient(20, 24);
            let mut shuffle: Vec<usize> = (0..20).collect();
            shuffle.shuffle(&mut rng);
            let shuffle = Permutation::from_vec(shuffle).unwrap();
            let scrambled = g.gather_rows(&shuffle).unwrap();
            let (out, order) = reassemble_axis(&scrambled, Axis::Rows).unwrap();
            assert_eq!(scrambled.gather_rows(&order).unwrap(), out);
            let recovered = shuffle.compose(&order).unwrap();
            assert!(is_order_or_reversal(recovered.as_slice()), "{recovered:?}");
        }
    }

    #[test]
    fn constant_matrix_is_deterministic() {
        let m = BitMatrix::zeros(5, 16);
        let (_, a) = reassemble_axis(&m, Axis::Rows).unwrap();
        let (_, b) = reassemble_axis(&m, Axis::Rows).unwrap();
        assert_eq!(a, b);
        // Every candidate ties, so the tail takes the lowest index each time.
        assert!(a.is_identity());
    }

    #[test]
    fn reversed_input_gives_reversed_chain() {
        let g = gradient(12, 16);
        let rev = Permutation::from_vec((0..12).rev().collect()).unwrap();
        let (a, _) = reassemble_axis(&g, Axis::Rows).unwrap();
        let (b, _) = reassemble_axis(&g.gather_rows(&rev).unwrap(), Axis::Rows).unwrap();
        assert!(a == b || a == b.gather_rows(&rev).unwrap());
    }

    #[test]
    fn column_axis_uses_columns() {
        let g = gradient(16, 24).transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut shuffle: Vec<usize> = (0..16).collect();
        shuffle.shuffle(&mut rng);
        let shuffle = Permutation::from_vec(shuffle).unwrap();
        let scrambled = g.gather_cols(&shuffle).unwrap();
        let (_, order) = reassemble_axis(&scrambled, Axis::Cols).unwrap();
        assert!(is_order_or_reversal(shuffle.compose(&order).unwrap().as_slice()));
    }

    #[test]
    fn noise_still_yields_valid_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let img = GrayImage::from_fn(16, 4, |_, _| rng.gen()).unwrap();
        for axis_order in [AxisOrder::ColsThenRows, AxisOrder::RowsThenCols] {
            let res = coa_attack(&img, axis_order).unwrap();
            let rebuilt = decompose(&img)
                .gather_rows(&res.row_order)
                .unwrap()
                .gather_cols(&res.col_order)
                .unwrap();
            assert_eq!(rebuilt, res.matrix);
            assert!((0.0..=1.0).contains(&res.adjacency_after));
        }
        let multi = coa_attack_with(
            &img,
            &CoaOptions {
                passes: 3,
                ..CoaOptions::default()
            },
        )
        .unwrap();
        let rebuilt = decompose(&img)
            .gather_rows(&multi.row_order)
            .unwrap()
            .gather_cols(&multi.col_order)
            .unwrap();
        assert_eq!(rebuilt, multi.matrix);
    }

    #[test]
    fn assembled_input_stays_assembled() {
        let img = GrayImage::from_fn(16, 4, |i, j| (i * 16 + j * 2) as u8).unwrap();
        let res = coa_attack(&img, AxisOrder::ColsThenRows).unwrap();
        assert!(res.adjacency_after >= res.adjacency_before - 0.02);
    }
}
