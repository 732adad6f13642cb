//! Structure parameters and the level-alpha interval table.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{compare, mul_nat, OrdinalTerm, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Where the rho-side interval sequence stops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theta2Mode {
    Infinite,
    Successor(OrdinalTerm),
}

/// Known maxima of the level-alpha components `I^a_b`, keyed by `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaIntervalOracle {
    entries: Vec<(OrdinalTerm, OrdinalTerm)>,
}

impl AlphaIntervalOracle {
    pub fn empty() -> Self {
        AlphaIntervalOracle { entries: vec![] }
    }

    pub fn insert(&mut self, key: OrdinalTerm, max: OrdinalTerm) {
        self.entries.retain(|(k, _)| *k != key);
        self.entries.push((key, max));
    }

    /// `max I^a_b`; the components at `0` and `a` are always singletons.
    pub fn max_of(&self, key: &OrdinalTerm) -> Option<OrdinalTerm> {
        if key.is_zero() || *key == OrdinalTerm::alpha() {
            return Some(key.clone());
        }
        self.entries.iter().find(|(k, _)| k == key).map(|(_, m)| m.clone())
    }

    pub fn entries(&self) -> &[(OrdinalTerm, OrdinalTerm)] {
        &self.entries
    }
}

impl Default for AlphaIntervalOracle {
    /// Singleton components at `0` and `a*n` for `n <= 8`.
    fn default() -> Self {
        let mut o = Self::empty();
        o.insert(OrdinalTerm::zero(), OrdinalTerm::zero());
        for n in 1..=8 {
            let x = mul_nat(&OrdinalTerm::alpha(), n).expect("finite multiple");
            o.insert(x.clone(), x);
        }
        o
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureParams {
    pub rho: OrdinalTerm,
    pub alpha: OrdinalTerm,
    pub theta2: Theta2Mode,
    /// Only meaningful when `theta2` is a successor.
    pub alpha_plus_one_is_theta1: bool,
    pub oracle: AlphaIntervalOracle,
}

impl Default for StructureParams {
    fn default() -> Self {
        StructureParams {
            rho: OrdinalTerm::rho(),
            alpha: OrdinalTerm::alpha(),
            theta2: Theta2Mode::Infinite,
            alpha_plus_one_is_theta1: false,
            oracle: AlphaIntervalOracle::default(),
        }
    }
}

impl StructureParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.alpha != OrdinalTerm::alpha() {
            return Err(ParamError::Invalid(format!("alpha must be the abstract atom a, got {}", self.alpha)));
        }
        if !self.rho.is_indecomposable() || !(self.rho.is_pure() || self.rho == OrdinalTerm::rho()) {
            return Err(ParamError::Invalid(format!("rho {} must be an indecomposable below a", self.rho)));
        }
        if let Theta2Mode::Successor(th) = &self.theta2 {
            if !th.is_pure() {
                return Err(ParamError::Invalid(format!("theta2 predecessor {th} must be pure")));
            }
        }
        for (k, m) in self.oracle.entries() {
            if !k.is_alpha_sort() || !m.is_alpha_sort() || compare(m, k)?.is_lt() {
                return Err(ParamError::Invalid(format!("oracle entry {k} -> {m} is not a component maximum")));
            }
        }
        Ok(())
    }

    /// Whether `alpha + 1` is the first level-one stable point; ignored for an infinite sequence.
    pub fn theta1_boundary(&self) -> bool {
        matches!(self.theta2, Theta2Mode::Successor(_)) && self.alpha_plus_one_is_theta1
    }

    /// Whether `xi` indexes an interval, i.e. `xi < theta2`.
    pub fn below_theta2(&self, xi: &OrdinalTerm) -> Result<bool, TermError> {
        match &self.theta2 {
            Theta2Mode::Infinite => Ok(true),
            Theta2Mode::Successor(th) => Ok(compare(xi, th)?.is_le()),
        }
    }

    /// Whether `xi` is the last interval index.
    pub fn is_last(&self, xi: &OrdinalTerm) -> bool {
        matches!(&self.theta2, Theta2Mode::Successor(th) if th == xi)
    }
}
