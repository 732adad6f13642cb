//! The collapse of one closed interval `[v[xi], v[xi+1]]` onto an initial segment of level alpha.
//!
//! `iota` sends `a*d + g` to `v[xi] + k[a]*d + k[g]`; `phi` sends `v[xi] + k[a]*d + chi` to
//! `a*d + index(chi)`.

use serde::{Deserialize, Serialize};

pub use crate::constructions::{lift_g_prime, push_h_prime};
use crate::engine::{alpha_times, kappa_alpha, kappa_alpha_times, Engine, EngineError, EngineResult};
use crate::term::{add, compare, index_of, quotient, split_sigma, sub_left, Level, OrdinalTerm};

/// `a*d + index(chi)` for `beta = nu + k[a]*d + chi`.
pub fn phi_raw(nu: &OrdinalTerm, beta: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    let off = sub_left(nu, beta).map_err(|_| EngineError::OutOfInterval(beta.to_string()))?;
    let (mult, chi) = split_sigma(&kappa_alpha(), &off)?;
    let delta = quotient(&kappa_alpha(), &mult)?;
    Ok(add(&alpha_times(&delta)?, &index_of(&chi)?)?)
}

/// `nu + k[a]*d + k[g]` for `lambda = a*d + g`.
pub fn iota_raw(nu: &OrdinalTerm, lambda: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    if !lambda.is_alpha_sort() {
        return Err(EngineError::OutOfDomain(lambda.to_string()));
    }
    let (mult, gamma) = split_sigma(&OrdinalTerm::alpha(), lambda)?;
    let delta = quotient(&OrdinalTerm::alpha(), &mult)?;
    let grid = add(&kappa_alpha_times(&delta)?, &OrdinalTerm::kappa(Level::Rho, gamma)?)?;
    Ok(add(nu, &grid)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomMax {
    Bounded(OrdinalTerm),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseContext {
    pub xi: OrdinalTerm,
    pub nu_xi: OrdinalTerm,
    /// `v[xi+1]`, absent for the last interval.
    pub nu_next: Option<OrdinalTerm>,
    pub dom_max: DomMax,
    /// Largest argument for which `iota` may be used.
    pub verified_prefix: DomMax,
}

impl CollapseContext {
    pub fn new(engine: &Engine, xi: &OrdinalTerm) -> EngineResult<Self> {
        let nu_xi = engine.nu_of(xi)?;
        let (nu_next, dom_max) = if engine.params.is_last(xi) {
            if !engine.params.theta1_boundary() {
                return Err(EngineError::OracleGap(format!(
                    "the last interval v[{xi}] ends at a component maximum that is not tabulated"
                )));
            }
            (None, DomMax::Unbounded)
        } else {
            let next = engine.nu_of(&xi.succ())?;
            let m = phi_raw(&nu_xi, &next)?;
            (Some(next), DomMax::Bounded(m))
        };
        Ok(CollapseContext { xi: xi.clone(), nu_xi, nu_next, verified_prefix: dom_max.clone(), dom_max })
    }

    /// Restricts `iota` to arguments up to `bound`.
    pub fn with_prefix(mut self, bound: OrdinalTerm) -> EngineResult<Self> {
        if let DomMax::Bounded(m) = &self.dom_max {
            if compare(&bound, m)?.is_gt() {
                return Err(EngineError::OutOfDomain(bound.to_string()));
            }
        }
        self.verified_prefix = DomMax::Bounded(bound);
        Ok(self)
    }

    pub fn in_dom(&self, lambda: &OrdinalTerm) -> EngineResult<bool> {
        if !lambda.is_alpha_sort() {
            return Ok(false);
        }
        match &self.verified_prefix {
            DomMax::Unbounded => Ok(true),
            DomMax::Bounded(m) => Ok(compare(lambda, m)?.is_le()),
        }
    }

    pub fn iota(&self, lambda: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        if !self.in_dom(lambda)? {
            return Err(EngineError::OutOfDomain(lambda.to_string()));
        }
        iota_raw(&self.nu_xi, lambda)
    }

    /// Whether `beta` lies in `[v[xi], v[xi+1]]`.
    pub fn contains(&self, beta: &OrdinalTerm) -> EngineResult<bool> {
        if !beta.is_rho_sort() || compare(beta, &self.nu_xi)?.is_lt() {
            return Ok(false);
        }
        match &self.nu_next {
            Some(n) => Ok(compare(beta, n)?.is_le()),
            None => Ok(true),
        }
    }

    pub fn phi(&self, beta: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        if !self.contains(beta)? {
            return Err(EngineError::OutOfInterval(beta.to_string()));
        }
        phi_raw(&self.nu_xi, beta)
    }

    pub fn dom_max(&self) -> &DomMax {
        &self.dom_max
    }

    /// Whether `lambda + 1` is in the domain and `iota(lambda') <=_1 iota(lambda + 1)`.
    pub fn successor_boundary(
        &self,
        engine: &Engine,
        lambda: &OrdinalTerm,
        lambda_prime: &OrdinalTerm,
    ) -> EngineResult<bool> {
        if lambda_prime.is_zero() || compare(lambda_prime, lambda)?.is_gt() || !self.in_dom(lambda)? {
            return Err(EngineError::OutOfDomain(format!("{lambda_prime} .. {lambda}")));
        }
        let next = lambda.succ();
        if !self.in_dom(&next)? {
            return Ok(false);
        }
        let (a, b) = (self.iota(lambda_prime)?, self.iota(&next)?);
        engine.leq_k(Level::Rho, 1, &a, &b).decided().ok_or_else(|| {
            EngineError::TargetRelationUnknown { a: a.to_string(), b: b.to_string(), k: 1, reason: "undecided".into() }
        })
    }
}
