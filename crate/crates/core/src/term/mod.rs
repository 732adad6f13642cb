//! Symbolic ordinal terms over the abstract atoms `r`, `a`, `k[..]` and `v[..]`.
//!
//! A term is stored as a strictly decreasing sum of primitive monomials
//! `atom * w^shift * coeff`. Atoms are totally ordered within a sort and a
//! larger atom dominates any right multiple of a smaller one.

pub mod parse;

pub use parse::{parse, parse_with_bounds, ParseError, RawTerm};

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("malformed term: {0}")]
    MalformedTerm(String),
    #[error("incomparable atoms {0} and {1}")]
    IncomparableAtoms(String, String),
    #[error("{0} is not additively indecomposable")]
    NotIndecomposable(String),
    #[error("{0} is out of range: {1}")]
    OutOfRange(String, String),
    #[error("{0} is not divisible by {1}")]
    NotDivisible(String, String),
}

pub type TermResult<T> = Result<T, TermError>;

/// Which structure a `k[..]` atom belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Level {
    Rho,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    /// `w^e` with a pure exponent.
    OmegaPow(OrdinalTerm),
    Rho,
    Alpha,
    Kappa { level: Level, arg: OrdinalTerm },
    /// Unresolved interval start; the engine replaces it by its value.
    Nu(OrdinalTerm),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub atom: Atom,
    pub shift: OrdinalTerm,
    pub coeff: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OrdinalTerm {
    monomials: Vec<Monomial>,
}

impl Atom {
    fn is_pure(&self) -> bool {
        matches!(self, Atom::OmegaPow(_))
    }

    fn allows_shift(&self) -> bool {
        !matches!(self, Atom::OmegaPow(_) | Atom::Nu(_))
    }
}

fn atom_name(a: &Atom) -> String {
    OrdinalTerm::from_monomial(Monomial {
        atom: a.clone(),
        shift: OrdinalTerm::zero(),
        coeff: 1,
    })
    .to_string()
}

fn incomparable(a: &Atom, b: &Atom) -> TermError {
    TermError::IncomparableAtoms(atom_name(a), atom_name(b))
}

/// Compares atoms. Pure powers sit below `r`, which sits below every `k[x]`;
/// `a` dominates pure powers and `r` but is not comparable to `k[x]`.
pub fn atom_cmp(a: &Atom, b: &Atom) -> TermResult<Ordering> {
    use Atom::*;
    fn rho_class(a: &Atom) -> Option<u8> {
        match a {
            OmegaPow(_) => Some(0),
            Rho => Some(1),
            Kappa { level: Level::Rho, .. } => Some(2),
            Nu(_) => Some(3),
            _ => None,
        }
    }
    match (a, b) {
        (OmegaPow(x), OmegaPow(y)) => compare(x, y),
        (Kappa { level: la, arg: x }, Kappa { level: lb, arg: y }) if la == lb => compare(x, y),
        (Nu(x), Nu(y)) => compare(x, y),
        (Alpha, Alpha) | (Rho, Rho) => Ok(Ordering::Equal),
        (Alpha, OmegaPow(_) | Rho) => Ok(Ordering::Greater),
        (OmegaPow(_) | Rho, Alpha) => Ok(Ordering::Less),
        (Nu(_), Kappa { level: Level::Rho, arg }) => {
            if compare(arg, &OrdinalTerm::alpha())? == Ordering::Less {
                Ok(Ordering::Greater)
            } else {
                Err(incomparable(a, b))
            }
        }
        (Kappa { level: Level::Rho, .. }, Nu(_)) => atom_cmp(b, a).map(Ordering::reverse),
        _ => match (rho_class(a), rho_class(b)) {
            (Some(x), Some(y)) if x != y => Ok(x.cmp(&y)),
            _ => Err(incomparable(a, b)),
        },
    }
}

fn key_cmp(a: &Monomial, b: &Monomial) -> TermResult<Ordering> {
    match atom_cmp(&a.atom, &b.atom)? {
        Ordering::Equal => compare(&a.shift, &b.shift),
        o => Ok(o),
    }
}

/// Total comparison of normalized terms.
pub fn compare(a: &OrdinalTerm, b: &OrdinalTerm) -> TermResult<Ordering> {
    for (x, y) in a.monomials.iter().zip(&b.monomials) {
        match key_cmp(x, y)? {
            Ordering::Equal => match x.coeff.cmp(&y.coeff) {
                Ordering::Equal => continue,
                o => return Ok(o),
            },
            o => return Ok(o),
        }
    }
    Ok(a.monomials.len().cmp(&b.monomials.len()))
}

pub fn lt(a: &OrdinalTerm, b: &OrdinalTerm) -> TermResult<bool> {
    Ok(compare(a, b)? == Ordering::Less)
}

pub fn le(a: &OrdinalTerm, b: &OrdinalTerm) -> TermResult<bool> {
    Ok(compare(a, b)? != Ordering::Greater)
}

impl OrdinalTerm {
    pub fn zero() -> Self {
        OrdinalTerm { monomials: vec![] }
    }

    fn from_monomial(m: Monomial) -> Self {
        OrdinalTerm { monomials: vec![m] }
    }

    fn prim(atom: Atom, shift: OrdinalTerm, coeff: u64) -> Self {
        if coeff == 0 {
            return Self::zero();
        }
        Self::from_monomial(Monomial { atom, shift, coeff })
    }

    pub fn nat(n: u64) -> Self {
        Self::prim(Atom::OmegaPow(Self::zero()), Self::zero(), n)
    }

    pub fn one() -> Self {
        Self::nat(1)
    }

    pub fn omega() -> Self {
        Self::omega_pow(Self::one()).expect("w^1 is pure")
    }

    /// `w^e`; exponents `a + d` fold into `a * w^d`.
    pub fn omega_pow(e: OrdinalTerm) -> TermResult<Self> {
        if e.is_pure() {
            return Ok(Self::prim(Atom::OmegaPow(e), Self::zero(), 1));
        }
        let lead = &e.monomials[0];
        let tail = OrdinalTerm { monomials: e.monomials[1..].to_vec() };
        if lead.atom == Atom::Alpha && lead.shift.is_zero() && lead.coeff == 1 && tail.is_pure() {
            return Ok(Self::prim(Atom::Alpha, tail, 1));
        }
        Err(TermError::MalformedTerm(format!("exponent {e} lies outside the notation")))
    }

    pub fn rho() -> Self {
        Self::prim(Atom::Rho, Self::zero(), 1)
    }

    pub fn alpha() -> Self {
        Self::prim(Atom::Alpha, Self::zero(), 1)
    }

    /// `k[x]` at level rho or alpha, with `k[0] = 0` and `k[a,a] = a`.
    pub fn kappa(level: Level, arg: OrdinalTerm) -> TermResult<Self> {
        if arg.is_zero() {
            return Ok(Self::zero());
        }
        if !arg.is_alpha_sort() {
            return Err(TermError::MalformedTerm(format!("kappa argument {arg} must be below the rho atoms")));
        }
        if level == Level::Alpha && arg == Self::alpha() {
            return Ok(Self::alpha());
        }
        Ok(Self::prim(Atom::Kappa { level, arg }, Self::zero(), 1))
    }

    /// `k[a]`, the anchor of the first component above every `k[x]` with `x < a`.
    pub fn kappa_alpha() -> Self {
        Self::kappa(Level::Rho, Self::alpha()).expect("valid atom")
    }

    pub fn nu(arg: OrdinalTerm) -> TermResult<Self> {
        if !arg.is_pure() {
            return Err(TermError::MalformedTerm(format!("interval index {arg} must be pure")));
        }
        Ok(Self::prim(Atom::Nu(arg), Self::zero(), 1))
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Only pure powers of `w`, i.e. an ordinary Cantor normal form.
    pub fn is_pure(&self) -> bool {
        self.monomials.iter().all(|m| m.atom.is_pure())
    }

    /// Pure terms possibly extended by multiples of `a`.
    pub fn is_alpha_sort(&self) -> bool {
        self.monomials.iter().all(|m| matches!(m.atom, Atom::OmegaPow(_) | Atom::Alpha))
    }

    /// Terms living in the rho structure (no `a`, no level-alpha kappa).
    pub fn is_rho_sort(&self) -> bool {
        self.monomials.iter().all(|m| {
            matches!(
                m.atom,
                Atom::OmegaPow(_) | Atom::Rho | Atom::Kappa { level: Level::Rho, .. } | Atom::Nu(_)
            )
        })
    }

    pub fn has_nu(&self) -> bool {
        self.monomials.iter().any(|m| matches!(m.atom, Atom::Nu(_)))
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self.monomials.as_slice() {
            [] => Some(0),
            [m] if m.atom == Atom::OmegaPow(Self::zero()) => Some(m.coeff),
            _ => None,
        }
    }

    pub fn is_successor(&self) -> bool {
        self.monomials
            .last()
            .map(|m| m.atom == Atom::OmegaPow(Self::zero()))
            .unwrap_or(false)
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    /// For a successor `x + 1`, returns `x`.
    pub fn predecessor(&self) -> Option<Self> {
        if !self.is_successor() {
            return None;
        }
        let mut out = self.clone();
        let last = out.monomials.last_mut().unwrap();
        last.coeff -= 1;
        if last.coeff == 0 {
            out.monomials.pop();
        }
        Some(out)
    }

    /// Splits into limit part and finite tail.
    pub fn split_finite(&self) -> (Self, u64) {
        if self.is_successor() {
            let mut lim = self.clone();
            let n = lim.monomials.pop().unwrap().coeff;
            (lim, n)
        } else {
            (self.clone(), 0)
        }
    }

    /// Exponent of the smallest pure monomial, for pure non-zero terms.
    pub fn last_exponent(&self) -> Option<&OrdinalTerm> {
        match self.monomials.last() {
            Some(Monomial { atom: Atom::OmegaPow(e), .. }) => Some(e),
            _ => None,
        }
    }

    /// Single primitive with coefficient one.
    pub fn is_indecomposable(&self) -> bool {
        matches!(self.monomials.as_slice(), [m] if m.coeff == 1)
    }

    pub fn succ(&self) -> Self {
        add(self, &Self::one()).expect("adding a natural never fails")
    }

    pub fn depth(&self) -> usize {
        self.monomials
            .iter()
            .map(|m| {
                let inner = match &m.atom {
                    Atom::OmegaPow(e) => e.depth(),
                    Atom::Kappa { arg, .. } | Atom::Nu(arg) => arg.depth(),
                    _ => 0,
                };
                1 + inner.max(m.shift.depth())
            })
            .max()
            .unwrap_or(0)
    }

    pub fn max_coeff(&self) -> u64 {
        self.monomials
            .iter()
            .map(|m| {
                let inner = match &m.atom {
                    Atom::OmegaPow(e) => e.max_coeff(),
                    Atom::Kappa { arg, .. } | Atom::Nu(arg) => arg.max_coeff(),
                    _ => 0,
                };
                m.coeff.max(inner).max(m.shift.max_coeff())
            })
            .max()
            .unwrap_or(0)
    }

    /// Checks the strictly-decreasing invariant.
    pub fn is_normal(&self) -> bool {
        self.monomials.iter().all(|m| m.coeff > 0 && (m.atom.allows_shift() || m.shift.is_zero()))
            && self
                .monomials
                .windows(2)
                .all(|w| matches!(key_cmp(&w[0], &w[1]), Ok(Ordering::Greater)))
    }
}

/// Ordinal sum; the part of `a` below the leading primitive of `b` is absorbed.
pub fn add(a: &OrdinalTerm, b: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    let Some(lead) = b.monomials.first() else {
        return Ok(a.clone());
    };
    let mut out = Vec::with_capacity(a.monomials.len() + b.monomials.len());
    let mut merged = false;
    for m in &a.monomials {
        match key_cmp(m, lead)? {
            Ordering::Greater => out.push(m.clone()),
            Ordering::Equal => {
                let coeff = m
                    .coeff
                    .checked_add(lead.coeff)
                    .ok_or_else(|| TermError::MalformedTerm("coefficient overflow".into()))?;
                out.push(Monomial { coeff, ..lead.clone() });
                merged = true;
                break;
            }
            Ordering::Less => break,
        }
    }
    let skip = usize::from(merged);
    out.extend(b.monomials[skip..].iter().cloned());
    Ok(OrdinalTerm { monomials: out })
}

pub fn sum<'a>(terms: impl IntoIterator<Item = &'a OrdinalTerm>) -> TermResult<OrdinalTerm> {
    terms.into_iter().try_fold(OrdinalTerm::zero(), |acc, t| add(&acc, t))
}

/// Right multiplication `t * d` by a pure ordinal `d`.
pub fn mul_pure(t: &OrdinalTerm, d: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    if !d.is_pure() {
        return Err(TermError::MalformedTerm(format!("multiplier {d} must be pure")));
    }
    let Some(lead) = t.monomials.first() else {
        return Ok(OrdinalTerm::zero());
    };
    let mut acc = OrdinalTerm::zero();
    for dm in &d.monomials {
        let Atom::OmegaPow(e) = &dm.atom else { unreachable!() };
        let part = if e.is_zero() {
            let coeff = lead
                .coeff
                .checked_mul(dm.coeff)
                .ok_or_else(|| TermError::MalformedTerm("coefficient overflow".into()))?;
            let mut ms = vec![Monomial { coeff, ..lead.clone() }];
            ms.extend(t.monomials[1..].iter().cloned());
            OrdinalTerm { monomials: ms }
        } else {
            match &lead.atom {
                Atom::OmegaPow(x) => OrdinalTerm::prim(Atom::OmegaPow(add(x, e)?), OrdinalTerm::zero(), dm.coeff),
                Atom::Nu(_) => {
                    return Err(TermError::MalformedTerm(format!("cannot stretch unresolved {t}")));
                }
                other => OrdinalTerm::prim(other.clone(), add(&lead.shift, e)?, dm.coeff),
            }
        };
        acc = add(&acc, &part)?;
    }
    Ok(acc)
}

pub fn mul_nat(t: &OrdinalTerm, n: u64) -> TermResult<OrdinalTerm> {
    mul_pure(t, &OrdinalTerm::nat(n))
}

/// The unique `x` with `a + x = b`, for `a <= b`.
pub fn sub_left(a: &OrdinalTerm, b: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    let n = a.monomials.len().min(b.monomials.len());
    let mut i = 0;
    while i < n && a.monomials[i] == b.monomials[i] {
        i += 1;
    }
    if i == a.monomials.len() {
        return Ok(OrdinalTerm { monomials: b.monomials[i..].to_vec() });
    }
    if i == b.monomials.len() {
        return Err(TermError::OutOfRange(a.to_string(), format!("exceeds {b}")));
    }
    let (x, y) = (&a.monomials[i], &b.monomials[i]);
    match key_cmp(y, x)? {
        Ordering::Greater => Ok(OrdinalTerm { monomials: b.monomials[i..].to_vec() }),
        Ordering::Equal if y.coeff > x.coeff => {
            let mut ms = vec![Monomial { coeff: y.coeff - x.coeff, ..y.clone() }];
            ms.extend(b.monomials[i + 1..].iter().cloned());
            Ok(OrdinalTerm { monomials: ms })
        }
        _ => Err(TermError::OutOfRange(a.to_string(), format!("exceeds {b}"))),
    }
}

fn check_sigma(sigma: &OrdinalTerm) -> TermResult<&Monomial> {
    if !sigma.is_indecomposable() {
        return Err(TermError::NotIndecomposable(sigma.to_string()));
    }
    Ok(&sigma.monomials[0])
}

/// Splits `x` into the part divisible by `sigma` and the remainder below it.
pub fn split_sigma(sigma: &OrdinalTerm, x: &OrdinalTerm) -> TermResult<(OrdinalTerm, OrdinalTerm)> {
    let s = check_sigma(sigma)?;
    let mut cut = x.monomials.len();
    for (i, m) in x.monomials.iter().enumerate() {
        if key_cmp(m, s)? == Ordering::Less {
            cut = i;
            break;
        }
    }
    Ok((
        OrdinalTerm { monomials: x.monomials[..cut].to_vec() },
        OrdinalTerm { monomials: x.monomials[cut..].to_vec() },
    ))
}

pub fn sigma_floor(sigma: &OrdinalTerm, x: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    split_sigma(sigma, x).map(|p| p.0)
}

pub fn rem_sigma(sigma: &OrdinalTerm, x: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    split_sigma(sigma, x).map(|p| p.1)
}

pub fn divides(sigma: &OrdinalTerm, x: &OrdinalTerm) -> TermResult<bool> {
    rem_sigma(sigma, x).map(|r| r.is_zero())
}

/// The pure `q` with `sigma * q = x`, when every primitive of `x` uses the atom of `sigma`.
pub fn quotient(sigma: &OrdinalTerm, x: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    let s = check_sigma(sigma)?;
    let mut q = OrdinalTerm::zero();
    for m in &x.monomials {
        let shift = match (&s.atom, &m.atom) {
            (Atom::OmegaPow(a), Atom::OmegaPow(b)) => sub_left(a, b),
            (sa, ma) if sa == ma => sub_left(&s.shift, &m.shift),
            _ => Err(TermError::NotDivisible(x.to_string(), sigma.to_string())),
        }
        .map_err(|_| TermError::NotDivisible(x.to_string(), sigma.to_string()))?;
        q = add(&q, &OrdinalTerm::prim(Atom::OmegaPow(shift), OrdinalTerm::zero(), m.coeff))?;
    }
    Ok(q)
}

/// Index of a point below `k[a]`: `g` for the component `[k[g], k[g+1])`.
pub fn index_of(chi: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    if !chi.is_rho_sort() || chi.has_nu() || !lt(chi, &OrdinalTerm::kappa_alpha())? {
        return Err(TermError::OutOfRange(chi.to_string(), "index needs a point below k[a]".into()));
    }
    match chi.monomials.first() {
        Some(Monomial { atom: Atom::Kappa { arg, .. }, .. }) => Ok(arg.clone()),
        _ => Ok(OrdinalTerm::zero()),
    }
}

/// The start of the component after that of `chi`.
pub fn right_bracket(chi: &OrdinalTerm) -> TermResult<OrdinalTerm> {
    OrdinalTerm::kappa(Level::Rho, index_of(chi)?.succ())
}

impl PartialOrd for OrdinalTerm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        compare(self, other).ok()
    }
}

impl fmt::Display for OrdinalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        parse::write_term(self, f)
    }
}

impl std::str::FromStr for OrdinalTerm {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl serde::Serialize for OrdinalTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for OrdinalTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for parsing literals known to be valid.
pub fn t(s: &str) -> OrdinalTerm {
    parse(s).unwrap_or_else(|e| panic!("bad literal {s:?}: {e}"))
}
