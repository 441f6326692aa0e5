//! Logistic-map key schedule.
//!
//! Each round iterates `x <- mu * x * (1 - x)` for `L = max(m + M, n + 8N)`
//! steps from the current state, ranks two windows of the orbit in
//! descending order to obtain the row permutation `T_M` and the column
//! permutation `T_N`, and hands `x_L` to the next round.

use crate::error::{Error, Result};
use crate::perm::Permutation;

/// Lower (exclusive) bound of the control parameter.
pub const MU_MIN: f64 = 3.569945672;
/// Upper (exclusive) bound of the control parameter.
pub const MU_MAX: f64 = 4.0;

/// Secret parameters of the cipher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecretKey {
    /// Offset of the row window in the orbit.
    pub m: usize,
    /// Offset of the column window in the orbit.
    pub n: usize,
    /// Number of rounds, `T_i`.
    pub rounds: usize,
    pub x0: f64,
    pub mu: f64,
}

impl SecretKey {
    pub fn new(m: usize, n: usize, rounds: usize, x0: f64, mu: f64) -> Result<Self> {
        let key = SecretKey {
            m,
            n,
            rounds,
            x0,
            mu,
        };
        key.validate()?;
        Ok(key)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::validation("m", "must be a positive integer"));
        }
        if self.n == 0 {
            return Err(Error::validation("n", "must be a positive integer"));
        }
        if self.rounds == 0 {
            return Err(Error::validation("Ti", "must be a positive integer"));
        }
        check_x0(self.x0)?;
        check_mu(self.mu)
    }

    /// Per-round `(T_M, T_N)` for an `height x width` image.
    pub fn round_permutations(&self, height: usize, width: usize) -> Result<Vec<(Permutation, Permutation)>> {
        self.validate()?;
        let mut x = self.x0;
        let mut rounds = Vec::with_capacity(self.rounds);
        for _ in 0..self.rounds {
            let state = KeyState {
                x,
                mu: self.mu,
                m: self.m,
                n: self.n,
            };
            let round = derive_round_perms(&state, height, width)?;
            x = round.next_x;
            rounds.push((round.row_perm, round.col_perm));
        }
        Ok(rounds)
    }
}

fn check_x0(x0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0 < 1.0) {
        return Err(Error::validation("x0", format!("{x0} is not in (0, 1)")));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > MU_MIN && mu < MU_MAX) {
        return Err(Error::validation(
            "mu",
            format!("{mu} is not in ({MU_MIN}, {MU_MAX})"),
        ));
    }
    Ok(())
}

#[inline]
fn logistic(x: f64, mu: f64) -> f64 {
    mu * (x * (1.0 - x))
}

/// Returns `x_1, ..., x_count` of the logistic orbit starting at `x0`.
pub fn logistic_iterate(x0: f64, mu: f64, count: usize) -> Result<Vec<f64>> {
    check_x0(x0).map_err(|e| Error::Parameter(e.to_string()))?;
    check_mu(mu).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    let mut x = x0;
    for _ in 0..count {
        x = logistic(x, mu);
        out.push(x);
    }
    Ok(out)
}

/// Permutation `T` such that `values[T(i)]` is the `(i+1)`-th largest value.
///
/// Equal values keep their original relative order.
pub fn rank_descending(values: &[f64]) -> Result<Permutation> {
    if values.is_empty() {
        return Err(Error::Parameter("cannot rank an empty sequence".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // sort_by is stable, so ties stay in ascending index order.
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    Permutation::from_vec(idx)
}

/// Map state at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyState {
    pub x: f64,
    pub mu: f64,
    pub m: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundPerms {
    /// `T_M`, length `M`.
    pub row_perm: Permutation,
    /// `T_N`, length `8N`.
    pub col_perm: Permutation,
    /// `x_L`, the seed of the following round.
    pub next_x: f64,
}

/// Orbit length consumed by one round.
pub fn orbit_len(m: usize, n: usize, height: usize, width: usize) -> usize {
    (m + height).max(n + 8 * width)
}

pub fn derive_round_perms(state: &KeyState, height: usize, width: usize) -> Result<RoundPerms> {
    if height == 0 || width == 0 {
        return Err(Error::Dimension(format!(
            "image must be at least 1x1, got {height}x{width}"
        )));
    }
    let len = orbit_len(state.m, state.n, height, width);
    let orbit = logistic_iterate(state.x, state.mu, len)?;
    // orbit[k - 1] holds x_k, so S_M = x_{m+1..=m+M} is orbit[m..m+M].
    let row_perm = rank_descending(&orbit[state.m..state.m + height])?;
    let col_perm = rank_descending(&orbit[state.n..state.n + 8 * width])?;
    Ok(RoundPerms {
        row_perm,
        col_perm,
        next_x: orbit[len - 1],
    })
}
