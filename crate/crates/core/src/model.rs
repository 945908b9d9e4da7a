//! Model indicators for both stages, the validity constraint on pairs, and the
//! uniform model prior.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inclusion flags over a fixed list of candidate variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Indicator(Vec<bool>);

impl Indicator {
    pub fn new(include: Vec<bool>) -> Self {
        Self(include)
    }

    pub fn full(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn empty(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, slot: usize) -> bool {
        self.0[slot]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// Number of included variables.
    pub fn size(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of included variables, ascending.
    pub fn active(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn flipped(&self, slot: usize) -> Self {
        let mut v = self.0.clone();
        v[slot] = !v[slot];
        Self(v)
    }

    /// Single-flip neighbour chosen uniformly over all slots.
    ///
    /// The move is symmetric, so proposal densities cancel in the MC3 ratio.
    /// Panics on a zero-length indicator.
    pub fn propose_neighbor<R: Rng + ?Sized>(&self, rng: &mut R) -> (Self, usize) {
        assert!(
            !self.0.is_empty(),
            "cannot propose on an empty candidate set"
        );
        let slot = rng.random_range(0..self.0.len());
        (self.flipped(slot), slot)
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse_bits(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidModel(format!(
                    "unexpected character {other:?} in indicator string"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Outcome-equation model `L`: slot 0 is the endogenous regressor, slots
/// `1..=p` the covariates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SecondStageModel(pub Indicator);

impl SecondStageModel {
    pub fn full(p: usize) -> Self {
        Self(Indicator::full(1 + p))
    }

    pub fn includes_endogenous(&self) -> bool {
        self.0.get(0)
    }

    pub fn includes_covariate(&self, k: usize) -> bool {
        self.0.get(1 + k)
    }

    pub fn n_covariates(&self) -> usize {
        self.0.len() - 1
    }
}

/// Instrument-equation model `M`: slots `0..q` are the instruments, slots
/// `q..q+p` the covariates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FirstStageModel {
    pub include: Indicator,
    pub n_instruments: usize,
}

impl FirstStageModel {
    pub fn new(include: Indicator, n_instruments: usize) -> Result<Self> {
        if n_instruments > include.len() {
            return Err(Error::InvalidModel(format!(
                "{n_instruments} instruments but only {} slots",
                include.len()
            )));
        }
        Ok(Self {
            include,
            n_instruments,
        })
    }

    pub fn full(q: usize, p: usize) -> Self {
        Self {
            include: Indicator::full(q + p),
            n_instruments: q,
        }
    }

    pub fn n_covariates(&self) -> usize {
        self.include.len() - self.n_instruments
    }

    pub fn with_indicator(&self, include: Indicator) -> Self {
        Self {
            include,
            n_instruments: self.n_instruments,
        }
    }
}

/// A pair `(L, M)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelPair {
    pub second: SecondStageModel,
    pub first: FirstStageModel,
}

impl ModelPair {
    pub fn full(p: usize, q: usize) -> Self {
        Self {
            second: SecondStageModel::full(p),
            first: FirstStageModel::full(q, p),
        }
    }

    pub fn is_valid(&self) -> bool {
        is_valid_pair(&self.second, &self.first)
    }
}

/// `(L, M)` is an IV specification iff `M \ L` is non-empty.
///
/// Instruments never appear in `L`, so any included instrument suffices; an
/// included covariate counts only when `L` excludes it. Mismatched covariate
/// counts are treated as invalid.
pub fn is_valid_pair(second: &SecondStageModel, first: &FirstStageModel) -> bool {
    if second.n_covariates() != first.n_covariates() {
        return false;
    }
    let q = first.n_instruments;
    first
        .include
        .as_slice()
        .iter()
        .enumerate()
        .any(|(k, &inc)| inc && (k < q || !second.includes_covariate(k - q)))
}

/// Unnormalised log of the uniform prior over valid pairs.
pub fn log_prior<T: Scalar>(pair: &ModelPair) -> T {
    if pair.is_valid() {
        T::zero()
    } else {
        T::neg_infinity()
    }
}
