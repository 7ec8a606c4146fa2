use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A bijection of `0..n`; `sigma[i]` is the location assigned to facility `i`.
///
/// Indices are 0-based in memory. File formats and the CLI use 1-based
/// indices, converted through [`Permutation::from_one_based`] and
/// [`Permutation::to_one_based`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &p in &mapping {
            if p >= n || seen[p] {
                return Err(Error::Invalid {
                    what: "permutation",
                    reason: format!("{mapping:?} is not a bijection of 0..{n}"),
                });
            }
            seen[p] = true;
        }
        Ok(Self(mapping))
    }

    pub fn from_one_based(mapping: &[usize]) -> Result<Self> {
        if mapping.contains(&0) {
            return Err(Error::Invalid {
                what: "permutation",
                reason: "1-based index 0".into(),
            });
        }
        Self::new(mapping.iter().map(|&p| p - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&p| p + 1).collect()
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Self(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Exchanges the locations of facilities `r` and `s` in place.
    #[inline]
    pub fn swap(&mut self, r: usize, s: usize) {
        self.0.swap(r, s);
    }

    /// `σ ∘ (r s)`.
    pub fn swapped(&self, r: usize, s: usize) -> Self {
        let mut p = self.clone();
        p.swap(r, s);
        p
    }
}

impl std::ops::Index<usize> for Permutation {
    type Output = usize;

    #[inline]
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}
