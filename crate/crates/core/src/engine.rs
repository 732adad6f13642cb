//! Three-valued computation of the relations `<=_1` and `<=_2` at level rho and level alpha.
//!
//! Every verdict carries the ids of the rules that produced it. Queries the rule set
//! cannot settle come back as `Unknown` with the missing fact named.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collapse;
use crate::params::{ParamError, StructureParams};
use crate::pattern::{FinitePattern, PatternError, PatternResult, PatternSource, Provenance};
use crate::term::{
    add, compare, index_of, lt, mul_nat, mul_pure, quotient, split_sigma, sub_left, Atom, Level, OrdinalTerm,
    TermError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("beyond bound: {0}")]
    BeyondBound(String),
    #[error("oracle gap: {0}")]
    OracleGap(String),
    #[error("inconsistent axiom table: {0}")]
    InconsistentAxioms(String),
    #[error("relation between {a} and {b} (k={k}) is unknown: {reason}")]
    TargetRelationUnknown { a: String, b: String, k: u8, reason: String },
    #[error("{0} is outside the interval")]
    OutOfInterval(String),
    #[error("{0} is outside the domain")]
    OutOfDomain(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

pub type EngineResult<T> = Result<T, EngineError>;

const ORACLE_GAP: &str = "oracle gap";
const MAX_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub truth: Truth,
    pub trace: Vec<String>,
}

impl Verdict {
    fn new(truth: Truth, rule: &str) -> Self {
        Verdict { truth, trace: vec![rule.to_string()] }
    }

    fn yes(rule: &str) -> Self {
        Self::new(Truth::True, rule)
    }

    fn no(rule: &str) -> Self {
        Self::new(Truth::False, rule)
    }

    fn unknown(reason: impl Into<String>) -> Self {
        Verdict { truth: Truth::Unknown(reason.into()), trace: vec![] }
    }

    fn from_error(e: &EngineError) -> Self {
        Self::unknown(e.to_string())
    }

    fn via(mut self, rule: &str) -> Self {
        self.trace.insert(0, rule.to_string());
        self
    }

    pub fn decided(&self) -> Option<bool> {
        match self.truth {
            Truth::True => Some(true),
            Truth::False => Some(false),
            Truth::Unknown(_) => None,
        }
    }

    pub fn is_oracle_gap(&self) -> bool {
        matches!(&self.truth, Truth::Unknown(r) if r.starts_with(ORACLE_GAP))
    }
}

/// Serialized form of a single query and its verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub a: OrdinalTerm,
    pub b: OrdinalTerm,
    pub level: Level,
    pub k: u8,
    pub verdict: String,
    pub trace: Vec<String>,
}

impl VerdictRecord {
    pub fn new(level: Level, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, v: &Verdict) -> Self {
        let verdict = match &v.truth {
            Truth::True => "True".to_string(),
            Truth::False => "False".to_string(),
            Truth::Unknown(r) => format!("Unknown({r})"),
        };
        VerdictRecord { a: a.clone(), b: b.clone(), level, k, verdict, trace: v.trace.clone() }
    }
}

/// Base facts the engine may use. A disabled rule makes dependent queries `Unknown`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomTable {
    /// `v[m] = k[a] * (m + nu_offset)` for finite `m`.
    pub nu_offset: u64,
    /// `v[x] <=_1 b` for every `b` in the closed interval of `x`.
    pub nu_leq1_all: bool,
    /// Inside the interval of `x`, `v[x] <=_2 m` iff `k[a]` divides `m`.
    pub nu_leq2_iff_divisible: bool,
    /// `k[a] <=_1 b` for every `b >= k[a]` in its component.
    pub kappa_alpha_leq1_all: bool,
    /// `a < v[x] <= b < v[x+1]` implies `a` is not `<=_2 b`.
    pub nu_blocks_leq2: bool,
    /// `v[x'+1] <=_1 v[x]` for limit `x` and `x' < x`.
    pub nu_succ_leq1_limit: bool,
    /// The level-alpha components at `0` and `a` are singletons.
    pub i_alpha_base: bool,
}

impl Default for AxiomTable {
    fn default() -> Self {
        AxiomTable {
            nu_offset: 1,
            nu_leq1_all: true,
            nu_leq2_iff_divisible: true,
            kappa_alpha_leq1_all: true,
            nu_blocks_leq2: true,
            nu_succ_leq1_limit: true,
            i_alpha_base: true,
        }
    }
}

/// Position of a point relative to the interval starts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalLocation {
    pub xi: OrdinalTerm,
    pub offset: OrdinalTerm,
    pub boundary: bool,
}

type MemoKey = (Level, u8, OrdinalTerm, OrdinalTerm);

pub struct Engine {
    pub params: StructureParams,
    pub axioms: AxiomTable,
    allow_level_shift: bool,
    memo: RwLock<HashMap<MemoKey, Verdict>>,
}

impl Clone for Engine {
    fn clone(&self) -> Self {
        Engine {
            params: self.params.clone(),
            axioms: self.axioms.clone(),
            allow_level_shift: self.allow_level_shift,
            memo: RwLock::new(HashMap::new()),
        }
    }
}

pub fn kappa_alpha() -> OrdinalTerm {
    OrdinalTerm::kappa_alpha()
}

/// `a * d` for pure `d`.
pub fn alpha_times(d: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    Ok(mul_pure(&OrdinalTerm::alpha(), d)?)
}

/// `k[a] * d` for pure `d`.
pub fn kappa_alpha_times(d: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    Ok(mul_pure(&kappa_alpha(), d)?)
}

/// A multiple `a * d` with `d` a limit ordinal.
pub fn is_limit_multiple_of_alpha(x: &OrdinalTerm) -> bool {
    let ms = x.monomials();
    !ms.is_empty()
        && ms.iter().all(|m| m.atom == Atom::Alpha)
        && !ms.last().map(|m| m.shift.is_zero()).unwrap_or(true)
}

/// A multiple `a * (d + 1)`.
pub fn is_successor_multiple_of_alpha(x: &OrdinalTerm) -> bool {
    let ms = x.monomials();
    !ms.is_empty()
        && ms.iter().all(|m| m.atom == Atom::Alpha)
        && ms.last().map(|m| m.shift.is_zero()).unwrap_or(false)
}

/// Total length of the intervals with index in `(0, w^e)`, given the length of the
/// interval `b + w^d` for each `d`.
pub fn inner_sum_with(
    e: &OrdinalTerm,
    tail: &dyn Fn(&OrdinalTerm) -> EngineResult<OrdinalTerm>,
) -> EngineResult<OrdinalTerm> {
    let (lim, n) = e.split_finite();
    let mut q = if lim.is_zero() { OrdinalTerm::zero() } else { OrdinalTerm::omega_pow(lim.clone())? };
    let mut cur = lim;
    for _ in 0..n {
        let step = add(&tail(&cur)?, &q)?;
        q = add(&q, &mul_pure(&step, &OrdinalTerm::omega())?)?;
        cur = cur.succ();
    }
    Ok(q)
}

impl Engine {
    pub fn new(params: StructureParams, axioms: AxiomTable) -> EngineResult<Self> {
        params.validate()?;
        Ok(Engine { params, axioms, allow_level_shift: true, memo: RwLock::new(HashMap::new()) })
    }

    pub fn with_defaults() -> Self {
        Self::new(StructureParams::default(), AxiomTable::default()).expect("defaults are valid")
    }

    /// A copy that answers level-rho queries without transferring them to level alpha.
    pub fn without_level_shift(&self) -> Self {
        Engine { allow_level_shift: false, ..self.clone() }
    }

    pub fn level_shift_enabled(&self) -> bool {
        self.allow_level_shift
    }

    fn nu_formula(&self, m: u64) -> EngineResult<OrdinalTerm> {
        Ok(mul_nat(&kappa_alpha(), m + self.axioms.nu_offset)?)
    }

    fn length_units(&self, lo: u64) -> EngineResult<OrdinalTerm> {
        let d = sub_left(&self.nu_formula(lo)?, &self.nu_formula(lo + 1)?)?;
        Ok(quotient(&kappa_alpha(), &d)?)
    }

    /// Length in `k[a]` units of the interval with index `b + w^e`, `b` a multiple of `w^e`.
    pub fn tail_length(&self, e: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        let (lim, n) = e.split_finite();
        let mut len = if lim.is_zero() {
            self.length_units(1)?
        } else {
            let key = alpha_times(&lim)?;
            let m = self
                .params
                .oracle
                .max_of(&key)
                .ok_or_else(|| EngineError::OracleGap(format!("max I^a_{key} is not tabulated")))?;
            let (mult, rest) = split_sigma(&OrdinalTerm::alpha(), &m)?;
            let delta = quotient(&OrdinalTerm::alpha(), &mult)?;
            if rest.is_zero() && delta.is_successor() {
                delta
            } else {
                delta.succ()
            }
        };
        for _ in 0..n {
            len = len.succ();
        }
        Ok(len)
    }

    fn inner_sum(&self, e: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        inner_sum_with(e, &|x| self.tail_length(x))
    }

    /// Sum of interval lengths below index `xi`, given a length function for single steps.
    pub fn length_sum(
        xi: &OrdinalTerm,
        first: &OrdinalTerm,
        tail: &dyn Fn(&OrdinalTerm) -> EngineResult<OrdinalTerm>,
        inner: &dyn Fn(&OrdinalTerm) -> EngineResult<OrdinalTerm>,
    ) -> EngineResult<OrdinalTerm> {
        let mut total = OrdinalTerm::zero();
        let mut beta = OrdinalTerm::zero();
        for m in xi.monomials() {
            let Atom::OmegaPow(e) = &m.atom else {
                return Err(EngineError::Term(TermError::MalformedTerm(format!("index {xi} must be pure"))));
            };
            let step = OrdinalTerm::omega_pow(e.clone())?;
            for _ in 0..m.coeff {
                let ell = match beta.last_exponent() {
                    None => first.clone(),
                    Some(le) => tail(le)?,
                };
                total = add(&total, &add(&ell, &inner(e)?)?)?;
                beta = add(&beta, &step)?;
            }
        }
        Ok(total)
    }

    /// `v[xi]` as a term.
    pub fn nu_of(&self, xi: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        if !xi.is_pure() {
            return Err(TermError::MalformedTerm(format!("index {xi} must be pure")).into());
        }
        if !self.params.below_theta2(xi)? {
            return Err(EngineError::BeyondBound(format!("v[{xi}] lies past the last interval")));
        }
        if let Some(m) = xi.as_nat() {
            return self.nu_formula(m);
        }
        let first = self.length_units(0)?;
        let p = Self::length_sum(xi, &first, &|e| self.tail_length(e), &|e| self.inner_sum(e))?;
        Ok(add(&self.nu_formula(0)?, &kappa_alpha_times(&p)?)?)
    }

    /// Replaces every `v[x]` atom by its value.
    pub fn resolve(&self, x: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
        if !x.has_nu() {
            return Ok(x.clone());
        }
        let mut acc = OrdinalTerm::zero();
        for m in x.monomials() {
            let part = match &m.atom {
                Atom::Nu(arg) => mul_nat(&self.nu_of(arg)?, m.coeff)?,
                _ => x_from_monomial(m),
            };
            acc = add(&acc, &part)?;
        }
        Ok(acc)
    }

    fn check_anchor(&self) -> EngineResult<OrdinalTerm> {
        let nu0 = self.nu_formula(0)?;
        if nu0 != kappa_alpha() {
            return Err(EngineError::InconsistentAxioms(format!(
                "v[0] = {nu0} differs from the component anchor k[a]"
            )));
        }
        Ok(nu0)
    }

    fn fits(&self, xi: &OrdinalTerm, q: &OrdinalTerm, nu0: &OrdinalTerm) -> EngineResult<bool> {
        match self.nu_of(xi) {
            Ok(nu) => Ok(compare(&sub_left(nu0, &nu)?, &kappa_alpha_times(q)?)?.is_le()),
            Err(EngineError::BeyondBound(_)) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// The interval `J_xi = [v[xi], v[xi+1])` containing `beta`.
    pub fn locate_interval(&self, beta: &OrdinalTerm) -> EngineResult<IntervalLocation> {
        let beta = self.resolve(beta)?;
        let nu0 = self.check_anchor()?;
        if !beta.is_rho_sort() || lt(&beta, &nu0)? {
            return Err(EngineError::OutOfInterval(beta.to_string()));
        }
        let rest = sub_left(&nu0, &beta)?;
        let (mult, _) = split_sigma(&kappa_alpha(), &rest)?;
        let q = quotient(&kappa_alpha(), &mult)?;
        let mut exps: Vec<OrdinalTerm> = (0..=4).map(OrdinalTerm::nat).collect();
        for m in q.monomials() {
            if let Atom::OmegaPow(e) = &m.atom {
                exps.push(e.clone());
                exps.push(e.succ());
            }
        }
        exps.sort_by(|x, y| compare(y, x).expect("pure exponents compare"));
        exps.dedup();
        let mut xi = OrdinalTerm::zero();
        for e in &exps {
            let step = OrdinalTerm::omega_pow(e.clone())?;
            for _ in 0..64 {
                let cand = add(&xi, &step)?;
                if compare(&cand, &xi)?.is_le() || !self.fits(&cand, &q, &nu0)? {
                    break;
                }
                xi = cand;
            }
        }
        let nu = self.nu_of(&xi)?;
        if let Ok(next) = self.nu_of(&xi.succ()) {
            if !lt(&beta, &next)? {
                return Err(EngineError::BeyondBound(format!("no interval index found for {beta}")));
            }
        }
        Ok(IntervalLocation { offset: sub_left(&nu, &beta)?, xi, boundary: false })
    }

    /// Whether `beta` lies in the closed interval `[v[xi], v[xi+1]]`.
    pub fn in_closed_interval(&self, beta: &OrdinalTerm, xi: &OrdinalTerm) -> EngineResult<Option<IntervalLocation>> {
        let loc = self.locate_interval(beta)?;
        if loc.xi == *xi {
            return Ok(Some(loc));
        }
        if loc.offset.is_zero() && loc.xi == xi.succ() {
            let nu = self.nu_of(xi)?;
            return Ok(Some(IntervalLocation { xi: xi.clone(), offset: sub_left(&nu, beta)?, boundary: true }));
        }
        Ok(None)
    }

    pub fn leq_k(&self, level: Level, k: u8, a: &OrdinalTerm, b: &OrdinalTerm) -> Verdict {
        let (a, b) = match (self.resolve(a), self.resolve(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Verdict::from_error(&e),
        };
        self.query(level, k, &a, &b, 0)
    }

    fn query(&self, level: Level, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, depth: usize) -> Verdict {
        let key = (level, k, a.clone(), b.clone());
        if let Some(v) = self.memo.read().expect("memo lock").get(&key) {
            return v.clone();
        }
        let v = match level {
            Level::Rho => self.rho(k, a, b, depth),
            Level::Alpha => self.alpha(k, a, b, depth),
        };
        self.memo.write().expect("memo lock").insert(key, v.clone());
        v
    }

    fn common(&self, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, level: Level, depth: usize) -> Option<Verdict> {
        if !(k == 1 || k == 2) {
            return Some(Verdict::unknown(format!("relation order {k} is not supported")));
        }
        if a == b {
            return Some(Verdict::yes("reflexive"));
        }
        match compare(a, b) {
            Err(e) => return Some(Verdict::unknown(e.to_string())),
            Ok(o) if o.is_gt() => return Some(Verdict::no("order")),
            _ => {}
        }
        if depth > MAX_DEPTH {
            return Some(Verdict::unknown("recursion limit reached"));
        }
        if k == 2 {
            let v1 = self.query(level, 1, a, b, depth + 1);
            if v1.decided() == Some(false) {
                return Some(v1.via("leq2_subset_leq1"));
            }
        }
        None
    }

    fn small(&self, a: &OrdinalTerm, b: &OrdinalTerm) -> Verdict {
        match (index_of(a), index_of(b)) {
            (Ok(x), Ok(y)) if x != y => Verdict::no("small.component"),
            (Ok(_), Ok(_)) => Verdict::unknown("both points lie inside one component below k[a]"),
            (Err(e), _) | (_, Err(e)) => Verdict::unknown(e.to_string()),
        }
    }

    fn rho(&self, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, depth: usize) -> Verdict {
        if !a.is_rho_sort() || !b.is_rho_sort() {
            return Verdict::unknown("level-rho query on a level-alpha term");
        }
        if let Some(v) = self.common(k, a, b, Level::Rho, depth) {
            return v;
        }
        match self.rho_rules(k, a, b, depth) {
            Ok(v) => v,
            Err(e) => Verdict::from_error(&e),
        }
    }

    fn rho_rules(&self, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, depth: usize) -> EngineResult<Verdict> {
        let ka = kappa_alpha();
        let (mu_a, chi_a) = split_sigma(&ka, a)?;
        let (mu_b, chi_b) = split_sigma(&ka, b)?;
        if mu_b.is_zero() {
            return Ok(self.small(a, b));
        }
        if mu_a.is_zero() {
            return Ok(Verdict::no("small.component_exit"));
        }
        let la = match self.locate_interval(&mu_a) {
            Ok(l) => l,
            Err(e) => return Ok(Verdict::from_error(&e).via("interval_location")),
        };
        if let Err(e) = self.locate_interval(&mu_b) {
            return Ok(Verdict::from_error(&e).via("interval_location"));
        }
        if !chi_a.is_zero() {
            if mu_a != mu_b {
                return Ok(Verdict::no("rtsi.block_exit"));
            }
            return Ok(self.small(&chi_a, &chi_b).via("rtsi.translate"));
        }
        if !chi_b.is_zero() {
            if k == 2 {
                return Ok(Verdict::no("rtsi.offset_not_leq2"));
            }
            let reduced = add(&mu_b, &OrdinalTerm::kappa(Level::Rho, index_of(&chi_b)?)?)?;
            if reduced != *b {
                return Ok(self.query(Level::Rho, 1, a, &reduced, depth + 1).via("rtsi.index_reduce"));
            }
        }
        let xa = la.xi;
        let nu_a = self.nu_of(&xa)?;
        let next = match self.nu_of(&xa.succ()) {
            Ok(n) => Some(n),
            Err(EngineError::BeyondBound(_)) => None,
            Err(e) => return Err(e),
        };
        let b_at_boundary = next.as_ref() == Some(b);
        let lb = self.locate_interval(b)?;
        let b_in_closure = lb.xi == xa || b_at_boundary;
        let ax = &self.axioms;

        if k == 1 && *a == ka && ax.kappa_alpha_leq1_all {
            return Ok(Verdict::yes("kappa_alpha.leq1_all"));
        }
        if *a == nu_a {
            if k == 1 {
                if b_in_closure && ax.nu_leq1_all {
                    return Ok(Verdict::yes("nu.leq1_all"));
                }
                if !b_in_closure && ax.nu_leq1_all && ax.nu_succ_leq1_limit {
                    return Ok(Verdict::yes("nu.leq1_upward"));
                }
                return Ok(Verdict::unknown("needs nu_leq1_all and nu_succ_leq1_limit"));
            }
            if b_at_boundary && ax.nu_leq2_iff_divisible {
                return Ok(Verdict::no("nu.boundary_not_leq2"));
            }
            if b_in_closure && ax.nu_leq2_iff_divisible {
                return Ok(Verdict::yes("nu.leq2_iff_divisible"));
            }
        }
        if k == 2 && !b_in_closure && ax.nu_blocks_leq2 {
            return Ok(Verdict::no("nu.blocks_leq2"));
        }
        if b_in_closure && self.allow_level_shift {
            let lam_a = collapse::phi_raw(&nu_a, a)?;
            let lam_b = collapse::phi_raw(&nu_a, b)?;
            return Ok(self.query(Level::Alpha, k, &lam_a, &lam_b, depth + 1).via("level_shift.order_reduction"));
        }
        if k == 1 && !b_in_closure {
            if let Some(c) = next {
                let v = self.query(Level::Rho, 1, a, &c, depth + 1);
                if v.decided() == Some(false) {
                    return Ok(v.via("convexity"));
                }
            }
        }
        Ok(Verdict::unknown("no rule decides this pair"))
    }

    fn alpha(&self, k: u8, a: &OrdinalTerm, b: &OrdinalTerm, depth: usize) -> Verdict {
        if !a.is_alpha_sort() || !b.is_alpha_sort() {
            return Verdict::unknown("level-alpha query on a level-rho term");
        }
        if let Some(v) = self.common(k, a, b, Level::Alpha, depth) {
            return v;
        }
        if !is_limit_multiple_of_alpha(a) {
            return Verdict::no("alpha.non_limit_multiple");
        }
        match self.params.oracle.max_of(a) {
            Some(m) if m == *a && (self.axioms.i_alpha_base || !a.is_zero()) => Verdict::no("alpha.singleton_component"),
            Some(_) => Verdict::unknown(format!("component of {a} is not a singleton")),
            None => Verdict::unknown(format!("{ORACLE_GAP}: max I^a_{a} is not tabulated")),
        }
    }

    /// Relations among `points` as a pattern; fails if any pair is undecided.
    pub fn pattern(&self, level: Level, points: &[OrdinalTerm]) -> EngineResult<FinitePattern> {
        let mut carrier = Vec::with_capacity(points.len());
        for p in points {
            carrier.push(self.resolve(p)?);
        }
        let mut err = None;
        carrier.sort_by(|x, y| {
            compare(x, y).unwrap_or_else(|e| {
                err = Some(e);
                std::cmp::Ordering::Equal
            })
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        carrier.dedup();
        let n = carrier.len();
        let mut leq = [vec![vec![false; n]; n], vec![vec![false; n]; n]];
        for i in 0..n {
            for j in i..n {
                for k in [1u8, 2] {
                    let v = self.leq_k(level, k, &carrier[i], &carrier[j]);
                    match v.decided() {
                        Some(x) => leq[k as usize - 1][i][j] = x,
                        None => {
                            let reason = match v.truth {
                                Truth::Unknown(r) => r,
                                _ => unreachable!(),
                            };
                            return Err(EngineError::TargetRelationUnknown {
                                a: carrier[i].to_string(),
                                b: carrier[j].to_string(),
                                k,
                                reason,
                            });
                        }
                    }
                }
            }
        }
        let sigma = match level {
            Level::Rho => self.params.rho.clone(),
            Level::Alpha => self.params.alpha.clone(),
        };
        let [leq1, leq2] = leq;
        Ok(FinitePattern::new(carrier, leq1, leq2, Provenance::ComputedByEngine, Some(sigma))?)
    }
}

impl PatternSource for Engine {
    fn pattern_of(&self, points: &[OrdinalTerm]) -> PatternResult<FinitePattern> {
        self.pattern(Level::Rho, points).map_err(|e| match e {
            EngineError::Pattern(p) => p,
            other => PatternError::Source(other.to_string()),
        })
    }
}

fn x_from_monomial(m: &crate::term::Monomial) -> OrdinalTerm {
    let base = match &m.atom {
        Atom::OmegaPow(e) => OrdinalTerm::omega_pow(e.clone()).expect("pure exponent"),
        Atom::Rho => OrdinalTerm::rho(),
        Atom::Alpha => OrdinalTerm::alpha(),
        Atom::Kappa { level, arg } => OrdinalTerm::kappa(*level, arg.clone()).expect("normalized atom"),
        Atom::Nu(arg) => OrdinalTerm::nu(arg.clone()).expect("normalized atom"),
    };
    let stretched = mul_pure(&base, &OrdinalTerm::omega_pow(m.shift.clone()).expect("pure shift")).expect("shift");
    mul_nat(&stretched, m.coeff).expect("coefficient")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::t;

    fn e() -> Engine {
        Engine::with_defaults()
    }

    #[test]
    fn interval_starts() {
        let e = e();
        assert_eq!(e.nu_of(&t("0")).unwrap(), t("k[a]"));
        assert_eq!(e.nu_of(&t("1")).unwrap(), t("k[a]*2"));
        assert_eq!(e.nu_of(&t("3")).unwrap(), t("k[a]*4"));
        assert_eq!(e.nu_of(&t("w")).unwrap(), t("k[a]*(w)"));
        assert_eq!(e.nu_of(&t("w+1")).unwrap(), t("k[a]*(w+2)"));
        assert_eq!(e.nu_of(&t("w*2")).unwrap(), t("k[a]*(w*2)"));
        assert_eq!(e.nu_of(&t("w*2+1")).unwrap(), t("k[a]*(w*2+2)"));
        assert_eq!(e.nu_of(&t("w^2")).unwrap(), t("k[a]*(w^2)"));
        assert_eq!(e.nu_of(&t("w^w")).unwrap(), t("k[a]*(w^w)"));
        assert!(matches!(e.nu_of(&t("w^w+1")), Err(EngineError::OracleGap(_))));
    }

    #[test]
    fn locating_points() {
        let e = e();
        let l = e.locate_interval(&t("k[a]*2")).unwrap();
        assert_eq!((l.xi, l.offset), (t("1"), t("0")));
        let l = e.locate_interval(&t("k[a]*2+k[1]")).unwrap();
        assert_eq!((l.xi, l.offset), (t("1"), t("k[1]")));
        assert_eq!(e.locate_interval(&t("v[0]")).unwrap().xi, t("0"));
        let l = e.locate_interval(&t("k[a]*(w+3)+k[2]")).unwrap();
        assert_eq!((l.xi, l.offset), (t("w+2"), t("k[2]")));
        let l = e.locate_interval(&t("k[a]*(w+1)")).unwrap();
        assert_eq!((l.xi, l.offset), (t("w"), t("k[a]")));
        let l = e.locate_interval(&t("k[a]*(w^2+w)")).unwrap();
        assert_eq!(l.xi, t("w^2+w"));
        assert!(e.locate_interval(&t("k[3]")).is_err());
    }

    #[test]
    fn rtsi_rules() {
        let e = e();
        let v = e.leq_k(Level::Rho, 1, &t("k[a]*2+k[1]"), &t("k[a]*2+k[2]"));
        assert_eq!(v.truth, Truth::False);
        assert_eq!(v.trace[0], "rtsi.translate");
        let v = e.leq_k(Level::Rho, 2, &t("k[a]*2"), &t("k[a]*2+k[1]"));
        assert_eq!(v.truth, Truth::False);
        let v = e.leq_k(Level::Rho, 1, &t("k[a]*2"), &t("k[a]*2+5"));
        assert_eq!(v.truth, Truth::True);
        assert_eq!(v.trace, vec!["rtsi.index_reduce", "reflexive"]);
        let v = e.leq_k(Level::Rho, 1, &t("k[a]*2+k[1]"), &t("k[a]*3"));
        assert_eq!(v.truth, Truth::False);
    }

    #[test]
    fn interval_axioms() {
        let e = e();
        let yes = |k, a: &str, b: &str| e.leq_k(Level::Rho, k, &t(a), &t(b)).truth;
        assert_eq!(yes(1, "v[1]", "k[a]*3"), Truth::True);
        assert_eq!(yes(2, "v[1]", "k[a]*3"), Truth::False);
        assert_eq!(yes(1, "v[w]", "k[a]*(w+1)"), Truth::True);
        assert_eq!(yes(2, "v[w]", "k[a]*(w+1)"), Truth::True);
        assert_eq!(yes(2, "k[a]", "k[a]*3"), Truth::False);
        assert_eq!(yes(1, "k[a]*2", "k[a]*(w)"), Truth::True);
        assert_eq!(yes(1, "k[a]*(w)+k[a]", "k[a]*(w)+k[a]*2"), Truth::False);
    }

    #[test]
    fn level_shift_and_its_absence() {
        let e = e();
        let a = t("k[a]*(w)+k[a]");
        let b = t("k[a]*(w)+k[a]*2");
        let v = e.leq_k(Level::Rho, 1, &a, &b);
        assert_eq!(v.truth, Truth::False);
        assert_eq!(v.trace[0], "level_shift.order_reduction");
        let plain = e.without_level_shift();
        assert!(plain.leq_k(Level::Rho, 1, &a, &b).decided().is_none());
    }

    #[test]
    fn alpha_level() {
        let e = e();
        assert_eq!(e.leq_k(Level::Alpha, 1, &t("a"), &t("a*2")).truth, Truth::False);
        assert_eq!(e.leq_k(Level::Alpha, 2, &t("w"), &t("a")).truth, Truth::False);
        let v = e.leq_k(Level::Alpha, 1, &t("a*(w)"), &t("a*(w)+1"));
        assert!(v.is_oracle_gap());
    }

    #[test]
    fn mutated_table_is_rejected() {
        let ax = AxiomTable { nu_offset: 2, ..Default::default() };
        let e = Engine::new(StructureParams::default(), ax).unwrap();
        assert_eq!(e.nu_of(&t("1")).unwrap(), t("k[a]*3"));
        assert!(matches!(e.locate_interval(&t("k[a]*3")), Err(EngineError::InconsistentAxioms(_))));
        assert!(e.leq_k(Level::Rho, 1, &t("k[a]*3"), &t("k[a]*3+k[1]")).decided().is_none());
    }
}
