//! Brute-force ground truth for small universes.
//!
//! Everything here enumerates all `2^n` subsets, so it is only usable with
//! backends whose re-evaluation is free (the synthetic backend), and is
//! capped at [`DEFAULT_CAP`] elements unless configured otherwise.

use serde::Serialize;
use thiserror::Error;

use crate::bisect::{BisectError, TestFn};
use crate::domain::{DomainError, ElementSet};
use crate::Scalar;

pub const DEFAULT_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("universe of {size} elements exceeds the brute-force cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("candidate is not a subset of the universe")]
    NotASubset,
    #[error(transparent)]
    Test(#[from] BisectError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Ground truth for one universe.
#[derive(Debug, Clone, Serialize)]
pub struct OracleVerdict {
    /// All non-benign elements.
    pub av_set: ElementSet,
    /// Minimal sets under `Test'(Y) = [Test(Y) = Test(U)]`.
    pub minimal_sets: Vec<ElementSet>,
    pub unique_minimal: bool,
}

/// Scores of every subset of a universe, indexed by bit mask over the
/// universe's members in canonical order.
pub struct SubsetTable<S> {
    universe: ElementSet,
    scores: Vec<S>,
    epsilon: S,
}

impl<S: Scalar> SubsetTable<S> {
    pub fn build(
        universe: &ElementSet,
        test: &mut TestFn<'_, S>,
        cap: usize,
        epsilon: S,
    ) -> Result<Self, OracleError> {
        let n = universe.len();
        if n > cap || n >= usize::BITS as usize {
            return Err(OracleError::TooLarge { size: n, cap });
        }
        let positions = universe.positions();
        let mut scores = Vec::with_capacity(1 << n);
        for mask in 0usize..(1 << n) {
            let subset = universe
                .universe()
                .from_positions((0..n).filter(|i| mask >> i & 1 == 1).map(|i| positions[i]))?;
            scores.push(test.evaluate(&subset)?);
        }
        Ok(SubsetTable {
            universe: universe.clone(),
            scores,
            epsilon,
        })
    }

    fn n(&self) -> usize {
        self.universe.len()
    }

    fn eq(&self, a: usize, b: usize) -> bool {
        self.scores[a].approx_eq(&self.scores[b], &self.epsilon)
    }

    /// Local mask of a subset of the table's universe.
    pub fn mask_of(&self, set: &ElementSet) -> Result<usize, OracleError> {
        if !set.is_subset(&self.universe) {
            return Err(OracleError::NotASubset);
        }
        let positions = self.universe.positions();
        Ok(set
            .positions()
            .iter()
            .map(|p| 1usize << positions.binary_search(p).expect("subset"))
            .fold(0, |m, b| m | b))
    }

    fn set_of(&self, mask: usize) -> ElementSet {
        let positions = self.universe.positions();
        self.universe
            .universe()
            .from_positions((0..self.n()).filter(|i| mask >> i & 1 == 1).map(|i| positions[i]))
            .expect("positions come from the universe")
    }

    pub fn score(&self, set: &ElementSet) -> Result<&S, OracleError> {
        Ok(&self.scores[self.mask_of(set)?])
    }

    /// `Test(Y) = Test(Y ∪ {x})` for every `Y`.
    pub fn is_benign_local(&self, local: usize) -> bool {
        let bit = 1usize << local;
        (0..self.scores.len())
            .filter(|m| m & bit == 0)
            .all(|m| self.eq(m, m | bit))
    }

    pub fn av_mask(&self) -> usize {
        (0..self.n())
            .filter(|&i| !self.is_benign_local(i))
            .fold(0, |m, i| m | (1 << i))
    }

    /// Minimal sets under `pred`, via "some proper subset satisfies pred".
    fn minimal_masks(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        let size = self.scores.len();
        let sat: Vec<bool> = (0..size).map(&pred).collect();
        let mut below = vec![false; size];
        for m in 1..size {
            let mut rest = m;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                let sub = m ^ bit;
                if sat[sub] || below[sub] {
                    below[m] = true;
                    break;
                }
                rest ^= bit;
            }
        }
        (0..size).filter(|&m| sat[m] && !below[m]).collect()
    }

    pub fn verdict(&self) -> OracleVerdict {
        let full = self.scores.len() - 1;
        let av = self.av_mask();
        let minimal: Vec<usize> = self.minimal_masks(|m| self.eq(m, full));
        OracleVerdict {
            av_set: self.set_of(av),
            unique_minimal: minimal == [av],
            minimal_sets: minimal.into_iter().map(|m| self.set_of(m)).collect(),
        }
    }

    /// `Test(candidate) > 0` and every proper subset scores zero.
    pub fn is_minimal(&self, candidate: &ElementSet) -> Result<bool, OracleError> {
        let c = self.mask_of(candidate)?;
        if !self.scores[c].is_positive_score() {
            return Ok(false);
        }
        // Enumerate proper submasks of c.
        let mut sub = (c.wrapping_sub(1)) & c;
        loop {
            if self.scores[sub].is_positive_score() {
                return Ok(false);
            }
            if sub == 0 {
                return Ok(true);
            }
            sub = (sub - 1) & c;
        }
    }
}

/// Brute-force checks with a configurable cap and score tolerance.
#[derive(Debug, Clone)]
pub struct Oracle<S> {
    pub cap: usize,
    pub epsilon: S,
}

impl<S: Scalar> Default for Oracle<S> {
    fn default() -> Self {
        Oracle {
            cap: DEFAULT_CAP,
            epsilon: S::zero(),
        }
    }
}

impl<S: Scalar> Oracle<S> {
    pub fn table(&self, universe: &ElementSet, test: &mut TestFn<'_, S>) -> Result<SubsetTable<S>, OracleError> {
        SubsetTable::build(universe, test, self.cap, self.epsilon.clone())
    }

    pub fn is_benign(
        &self,
        x: &crate::domain::Element,
        universe: &ElementSet,
        test: &mut TestFn<'_, S>,
    ) -> Result<bool, OracleError> {
        let table = self.table(universe, test)?;
        let single = universe.universe().canonicalize([x])?;
        let mask = table.mask_of(&single)?;
        Ok(table.is_benign_local(mask.trailing_zeros() as usize))
    }

    pub fn compute_av(&self, universe: &ElementSet, test: &mut TestFn<'_, S>) -> Result<ElementSet, OracleError> {
        let table = self.table(universe, test)?;
        Ok(table.set_of(table.av_mask()))
    }

    pub fn is_minimal_set(
        &self,
        candidate: &ElementSet,
        universe: &ElementSet,
        test: &mut TestFn<'_, S>,
    ) -> Result<bool, OracleError> {
        if !candidate.is_subset(universe) {
            return Err(OracleError::NotASubset);
        }
        self.table(universe, test)?.is_minimal(candidate)
    }

    pub fn verdict(&self, universe: &ElementSet, test: &mut TestFn<'_, S>) -> Result<OracleVerdict, OracleError> {
        Ok(self.table(universe, test)?.verdict())
    }
}

pub fn is_benign<S: Scalar>(
    x: &crate::domain::Element,
    universe: &ElementSet,
    test: &mut TestFn<'_, S>,
) -> Result<bool, OracleError> {
    Oracle::default().is_benign(x, universe, test)
}

pub fn compute_av<S: Scalar>(universe: &ElementSet, test: &mut TestFn<'_, S>) -> Result<ElementSet, OracleError> {
    Oracle::default().compute_av(universe, test)
}

pub fn is_minimal_set<S: Scalar>(
    candidate: &ElementSet,
    universe: &ElementSet,
    test: &mut TestFn<'_, S>,
) -> Result<bool, OracleError> {
    Oracle::default().is_minimal_set(candidate, universe, test)
}
