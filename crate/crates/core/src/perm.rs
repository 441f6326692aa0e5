use std::fmt;

use crate::error::{Error, Result};

/// A bijection on `0..len`, stored as its image vector.
///
/// Applying a permutation `p` to a sequence `xs` *pulls* data: the output at
/// position `i` is `xs[p(i)]`. This is the convention of the cipher's row and
/// column steps, `B*(i, :) = B(T_M(i), :)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&self.map, f)
    }
}

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Permutation {
            map: (0..len).collect(),
        }
    }

    /// Validates that `map` contains every index in `0..map.len()` exactly once.
    pub fn from_vec(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for (pos, &v) in map.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} at position {pos} is out of range for length {n}"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} appears more than once"
                )));
            }
        }
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// `self ∘ other`, i.e. the permutation `i -> self(other(i))`.
    ///
    /// Pulling through `self ∘ other` equals pulling through `self` first and
    /// then through `other`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot compose permutations of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(Permutation {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        })
    }

    /// Returns the reversed order, `i -> self(len - 1 - i)`.
    pub fn reversed(&self) -> Self {
        Permutation {
            map: self.map.iter().rev().copied().collect(),
        }
    }

    /// Output position `i` receives `xs[self(i)]`.
    pub fn gather<T: Clone>(&self, xs: &[T]) -> Vec<T> {
        assert_eq!(xs.len(), self.len(), "permutation length mismatch");
        self.map.iter().map(|&j| xs[j].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(Permutation::from_vec(vec![0, 0]).is_err());
        assert!(Permutation::from_vec(vec![0, 2]).is_err());
        assert!(Permutation::from_vec(vec![]).is_ok());
    }

    #[test]
    fn compose_is_pull_then_pull() {
        let p = Permutation::from_vec(vec![2, 0, 1]).unwrap();
        let q = Permutation::from_vec(vec![1, 2, 0]).unwrap();
        let xs = ['a', 'b', 'c'];
        let two_steps = q.gather(&p.gather(&xs));
        assert_eq!(p.compose(&q).unwrap().gather(&xs), two_steps);
        assert_eq!(p.compose(&q).unwrap().get(0), p.get(q.get(0)));
    }

    fn arb_perm(max: usize) -> impl Strategy<Value = Permutation> {
        (1..max)
            .prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|v| Permutation::from_vec(v).unwrap())
    }

    proptest! {
        #[test]
        fn inverse_cancels(p in arb_perm(40)) {
            let id = Permutation::identity(p.len());
            prop_assert_eq!(p.compose(&p.inverse()).unwrap(), id.clone());
            prop_assert_eq!(p.inverse().compose(&p).unwrap(), id);
        }
    }
}
