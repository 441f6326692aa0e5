//! Known-plaintext recovery of the equivalent key.
//!
//! The row and column permutations act on orthogonal axes, so they can be
//! peeled off one another:
//!
//! 1. a row whose 1-count is unique among the plain rows is resolved
//!    outright, since column scrambling never changes a row's 1-count;
//!    likewise for columns;
//! 2. with some rows resolved, each cipher column restricted to those rows is
//!    a fragment of a known plain column; a unique fragment resolves the
//!    column. Resolved columns in turn resolve rows the same way;
//! 3. step 2 alternates until neither set grows.
//!
//! More pairs make the measures (count tuples, concatenated fragments) more
//! distinctive. Whatever is still unresolved is assigned to the first unused
//! plain index with the same measure.
//!
//! Maps are stored cipher index -> plain index, matching the cipher's
//! `B'(i, l) = B(row_perm(i), col_perm(l))`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bitplane::{decompose, BitMatrix, GrayImage};
use crate::cipher::EquivalentKey;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::Axis;

/// A known plaintext and its ciphertext, as bit matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPair {
    pub plain: BitMatrix,
    pub cipher: BitMatrix,
}

impl BitPair {
    pub fn new(plain: BitMatrix, cipher: BitMatrix) -> Result<Self> {
        if plain.rows() != cipher.rows() || plain.cols() != cipher.cols() {
            return Err(Error::Dimension(format!(
                "plaintext is {}x{} bits, ciphertext is {}x{}",
                plain.rows(),
                plain.cols(),
                cipher.rows(),
                cipher.cols()
            )));
        }
        Ok(BitPair { plain, cipher })
    }

    pub fn from_images(plain: &GrayImage, cipher: &GrayImage) -> Result<Self> {
        BitPair::new(decompose(plain), decompose(cipher))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
}

/// State of the attack: resolved rows `R`, resolved columns `C`, and the
/// partial maps behind them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoverySets {
    row_map: Vec<Option<usize>>,
    col_map: Vec<Option<usize>>,
    plain_row_used: Vec<bool>,
    plain_col_used: Vec<bool>,
    trace: Vec<TraceRecord>,
    fallback_rows: usize,
    fallback_cols: usize,
}

impl RecoverySets {
    /// Empty state for an `rows x cols` bit matrix.
    pub fn new(rows: usize, cols: usize) -> Self {
        RecoverySets {
            row_map: vec![None; rows],
            col_map: vec![None; cols],
            plain_row_used: vec![false; rows],
            plain_col_used: vec![false; cols],
            trace: Vec::new(),
            fallback_rows: 0,
            fallback_cols: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_map.len()
    }

    pub fn cols(&self) -> usize {
        self.col_map.len()
    }

    /// `|R|`.
    pub fn resolved_row_count(&self) -> usize {
        self.row_map.iter().filter(|m| m.is_some()).count()
    }

    /// `|C|`.
    pub fn resolved_col_count(&self) -> usize {
        self.col_map.iter().filter(|m| m.is_some()).count()
    }

    /// `R`, ascending.
    pub fn resolved_rows(&self) -> Vec<usize> {
        resolved(&self.row_map)
    }

    /// `C`, ascending.
    pub fn resolved_cols(&self) -> Vec<usize> {
        resolved(&self.col_map)
    }

    /// Plain row of cipher row `i`, if resolved.
    pub fn row(&self, i: usize) -> Option<usize> {
        self.row_map[i]
    }

    /// Plain column of cipher column `l`, if resolved.
    pub fn col(&self, l: usize) -> Option<usize> {
        self.col_map[l]
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Rows assigned by the first-available fallback rather than by a
    /// uniqueness step.
    pub fn fallback_rows(&self) -> usize {
        self.fallback_rows
    }

    pub fn fallback_cols(&self) -> usize {
        self.fallback_cols
    }

    fn record(&mut self, label: String) {
        let rec = TraceRecord {
            label,
            rows: self.resolved_row_count(),
            cols: self.resolved_col_count(),
        };
        self.trace.push(rec);
    }

    /// Commits matches; skips cipher indices already resolved and plain
    /// indices already taken. Returns how many were added.
    fn commit(&mut self, axis: Axis, matches: &[(usize, usize)]) -> usize {
        let (map, used) = match axis {
            Axis::Rows => (&mut self.row_map, &mut self.plain_row_used),
            Axis::Cols => (&mut self.col_map, &mut self.plain_col_used),
        };
        let mut added = 0;
        for &(c, p) in matches {
            if map[c].is_none() && !used[p] {
                map[c] = Some(p);
                used[p] = true;
                added += 1;
            }
        }
        added
    }

    /// Trace as a comma-separated table with a header line.
    pub fn trace_table(&self) -> String {
        let mut out = String::from("step_label,R_size,C_size,R_ratio,C_ratio\n");
        let (rows, cols) = (self.rows().max(1) as f64, self.cols().max(1) as f64);
        for rec in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6}",
                rec.label,
                rec.rows,
                rec.cols,
                rec.rows as f64 / rows,
                rec.cols as f64 / cols
            );
        }
        out
    }
}

fn resolved(map: &[Option<usize>]) -> Vec<usize> {
    map.iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|_| i))
        .collect()
}

fn check_pairs(pairs: &[BitPair], state: &RecoverySets) -> Result<()> {
    for p in pairs {
        if p.plain.rows() != state.rows() || p.plain.cols() != state.cols() {
            return Err(Error::Dimension(format!(
                "pair is {}x{} bits, attack state is {}x{}",
                p.plain.rows(),
                p.plain.cols(),
                state.rows(),
                state.cols()
            )));
        }
    }
    Ok(())
}

type Measure = Vec<u64>;

/// Pairs `(cipher, plain)` whose measures are unique on both sides and equal.
fn unique_matches(plain: &[Measure], cipher: &[Measure]) -> Vec<(usize, usize)> {
    let mut plain_index: HashMap<&[u64], (usize, usize)> = HashMap::with_capacity(plain.len());
    for (j, m) in plain.iter().enumerate() {
        plain_index
            .entry(m.as_slice())
            .and_modify(|e| e.0 += 1)
            .or_insert((1, j));
    }
    let mut cipher_count: HashMap<&[u64], usize> = HashMap::with_capacity(cipher.len());
    for m in cipher {
        *cipher_count.entry(m.as_slice()).or_default() += 1;
    }
    cipher
        .iter()
        .enumerate()
        .filter_map(|(i, m)| match plain_index.get(m.as_slice()) {
            Some(&(1, j)) if cipher_count[m.as_slice()] == 1 => Some((i, j)),
            _ => None,
        })
        .collect()
}

fn count_measures(pairs: &[BitPair], axis: Axis, cipher_side: bool) -> Vec<Measure> {
    let per_pair: Vec<Vec<usize>> = pairs
        .par_iter()
        .map(|p| {
            let m = if cipher_side { &p.cipher } else { &p.plain };
            match axis {
                Axis::Rows => m.row_counts(),
                Axis::Cols => m.col_counts(),
            }
        })
        .collect();
    let n = per_pair.first().map_or(0, Vec::len);
    (0..n)
        .map(|idx| per_pair.iter().map(|c| c[idx] as u64).collect())
        .collect()
}

/// Concatenates, across pairs, each row's packed words.
fn joint_rows(mats: &[BitMatrix]) -> Vec<Measure> {
    let n = mats.first().map_or(0, BitMatrix::rows);
    (0..n)
        .into_par_iter()
        .map(|r| mats.iter().flat_map(|m| m.row_words(r).iter().copied()).collect())
        .collect()
}

/// Column fragments over the resolved rows (`axis = Cols`), or row
/// fragments over the resolved columns (`axis = Rows`).
fn fragment_measures(pairs: &[BitPair], state: &RecoverySets, axis: Axis) -> (Vec<Measure>, Vec<Measure>) {
    let (plain, cipher): (Vec<BitMatrix>, Vec<BitMatrix>) = match axis {
        Axis::Cols => {
            let cipher_rows = state.resolved_rows();
            let plain_rows: Vec<usize> = cipher_rows.iter().map(|&i| state.row_map[i].unwrap()).collect();
            pairs
                .par_iter()
                .map(|p| {
                    // Rows R of B* are plain rows row_map(R), per B*(i,:) = B(T_M(i),:).
                    (
                        p.plain.select_rows(&plain_rows).transpose(),
                        p.cipher.select_rows(&cipher_rows).transpose(),
                    )
                })
                .unzip()
        }
        Axis::Rows => {
            let cipher_cols = state.resolved_cols();
            let plain_cols: Vec<usize> = cipher_cols.iter().map(|&l| state.col_map[l].unwrap()).collect();
            pairs
                .par_iter()
                .map(|p| (p.plain.select_cols(&plain_cols), p.cipher.select_cols(&cipher_cols)))
                .unzip()
        }
    };
    (joint_rows(&plain), joint_rows(&cipher))
}

/// Resolves every cipher vector along `axis` whose joint 1-count is unique.
pub fn count_match(pairs: &[BitPair], axis: Axis, state: &mut RecoverySets) -> Result<usize> {
    check_pairs(pairs, state)?;
    let plain = count_measures(pairs, axis, false);
    let cipher = count_measures(pairs, axis, true);
    Ok(state.commit(axis, &unique_matches(&plain, &cipher)))
}

/// Fragment refinement along `axis`.
///
/// `Cols` grows `C` from fragments over `R`; `Rows` grows `R` from
/// fragments over `C`. An empty prerequisite set is a no-op.
pub fn refine(pairs: &[BitPair], axis: Axis, state: &mut RecoverySets) -> Result<usize> {
    check_pairs(pairs, state)?;
    let prerequisite = match axis {
        Axis::Cols => state.resolved_row_count(),
        Axis::Rows => state.resolved_col_count(),
    };
    if prerequisite == 0 || pairs.is_empty() {
        return Ok(0);
    }
    let (plain, cipher) = fragment_measures(pairs, state, axis);
    Ok(state.commit(axis, &unique_matches(&plain, &cipher)))
}

/// Incremental attack: pairs are added one at a time and the state carries
/// over, with every step run on the joint measures of all pairs so far.
#[derive(Debug, Clone)]
pub struct KpaSession {
    height: usize,
    width: usize,
    pairs: Vec<BitPair>,
    state: RecoverySets,
}

impl KpaSession {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image must be at least 1x1, got {height}x{width}"
            )));
        }
        Ok(KpaSession {
            height,
            width,
            pairs: Vec::new(),
            state: RecoverySets::new(height, 8 * width),
        })
    }

    pub fn state(&self) -> &RecoverySets {
        &self.state
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn add_pair(&mut self, plain: &GrayImage, cipher: &GrayImage) -> Result<()> {
        for img in [plain, cipher] {
            if img.height() != self.height || img.width() != self.width {
                return Err(Error::Dimension(format!(
                    "pair image is {}x{}, attack expects {}x{}",
                    img.height(),
                    img.width(),
                    self.height,
                    self.width
                )));
            }
        }
        self.add_bit_pair(BitPair::from_images(plain, cipher)?)
    }

    pub fn add_bit_pair(&mut self, pair: BitPair) -> Result<()> {
        check_pairs(std::slice::from_ref(&pair), &self.state)?;
        self.pairs.push(pair);
        let tag = format!("pair{}", self.pairs.len());
        let pairs = &self.pairs;
        let state = &mut self.state;

        count_match(pairs, Axis::Rows, state)?;
        state.record(format!("{tag}/count-rows"));
        count_match(pairs, Axis::Cols, state)?;
        state.record(format!("{tag}/count-cols"));

        // Each productive alternation adds at least one index.
        let max_iters = state.rows() + state.cols() + 1;
        for iter in 1..=max_iters {
            let cols_added = refine(pairs, Axis::Cols, state)?;
            state.record(format!("{tag}/refine-cols#{iter}"));
            let rows_added = refine(pairs, Axis::Rows, state)?;
            state.record(format!("{tag}/refine-rows#{iter}"));
            if cols_added == 0 && rows_added == 0 {
                break;
            }
        }
        Ok(())
    }

    /// Completes the partial maps by first-available assignment and returns
    /// the key. The returned sets keep only uniquely resolved entries.
    pub fn finish(&self) -> Result<(EquivalentKey, RecoverySets)> {
        let mut state = self.state.clone();
        let rows = complete(&self.pairs, &self.state, Axis::Rows);
        let cols = complete(&self.pairs, &self.state, Axis::Cols);
        state.fallback_rows = state.rows() - state.resolved_row_count();
        state.fallback_cols = state.cols() - state.resolved_col_count();
        let key = EquivalentKey::new(
            self.height,
            self.width,
            Permutation::from_vec(rows)?,
            Permutation::from_vec(cols)?,
        )?;
        Ok((key, state))
    }
}

/// Joint measure used by the fallback: 1-count tuple plus the fragment over
/// the uniquely resolved opposite axis.
fn fallback_measures(pairs: &[BitPair], state: &RecoverySets, axis: Axis) -> (Vec<Measure>, Vec<Measure>) {
    let counts_p = count_measures(pairs, axis, false);
    let counts_c = count_measures(pairs, axis, true);
    let (frag_p, frag_c) = if pairs.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        fragment_measures(pairs, state, axis)
    };
    let join = |counts: Vec<Measure>, frags: Vec<Measure>| -> Vec<Measure> {
        counts
            .into_iter()
            .enumerate()
            .map(|(i, mut m)| {
                if let Some(f) = frags.get(i) {
                    m.extend_from_slice(f);
                }
                m
            })
            .collect()
    };
    (join(counts_p, frag_p), join(counts_c, frag_c))
}

fn complete(pairs: &[BitPair], state: &RecoverySets, axis: Axis) -> Vec<usize> {
    let (map, used) = match axis {
        Axis::Rows => (&state.row_map, &state.plain_row_used),
        Axis::Cols => (&state.col_map, &state.plain_col_used),
    };
    let mut used = used.clone();
    let mut out: Vec<usize> = Vec::with_capacity(map.len());
    if map.iter().all(Option::is_some) {
        return map.iter().map(|m| m.unwrap()).collect();
    }

    let (plain_m, cipher_m) = fallback_measures(pairs, state, axis);
    let counts_p = count_measures(pairs, axis, false);
    let counts_c = count_measures(pairs, axis, true);

    let mut by_measure: HashMap<&[u64], VecDeque<usize>> = HashMap::new();
    let mut by_count: HashMap<&[u64], VecDeque<usize>> = HashMap::new();
    for j in (0..map.len()).filter(|&j| !used[j]) {
        if let Some(m) = plain_m.get(j) {
            by_measure.entry(m.as_slice()).or_default().push_back(j);
        }
        if let Some(m) = counts_p.get(j) {
            by_count.entry(m.as_slice()).or_default().push_back(j);
        }
    }
    let mut next_free = 0;

    fn take(queue: Option<&mut VecDeque<usize>>, used: &[bool]) -> Option<usize> {
        let queue = queue?;
        while let Some(j) = queue.pop_front() {
            if !used[j] {
                return Some(j);
            }
        }
        None
    }

    for (i, m) in map.iter().enumerate() {
        let j = match *m {
            Some(j) => j,
            None => {
                let j = cipher_m
                    .get(i)
                    .and_then(|m| take(by_measure.get_mut(m.as_slice()), &used))
                    .or_else(|| counts_c.get(i).and_then(|m| take(by_count.get_mut(m.as_slice()), &used)))
                    .unwrap_or_else(|| {
                        while used[next_free] {
                            next_free += 1;
                        }
                        next_free
                    });
                used[j] = true;
                j
            }
        };
        out.push(j);
    }
    out
}

/// Runs the whole attack over `pairs`, in order.
pub fn kpa_attack(pairs: &[(GrayImage, GrayImage)]) -> Result<(EquivalentKey, RecoverySets)> {
    let (first, _) = pairs
        .first()
        .ok_or_else(|| Error::Parameter("at least one plaintext/ciphertext pair is required".into()))?;
    let mut session = KpaSession::new(first.height(), first.width())?;
    for (plain, cipher) in pairs {
        session.add_pair(plain, cipher)?;
    }
    session.finish()
}
