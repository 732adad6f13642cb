//! Text form of terms.
//!
//! ```text
//! ordinal := term ("+" term)*
//! term    := atom ("*" (nat | "(" ordinal ")"))?
//! atom    := nat | "w" | "w^" atom | "k[" ordinal ("," ordinal)? "]"
//!          | "v[" ordinal "]" | "r" | "a" | "(" ordinal ")"
//! ```

use std::fmt;

use thiserror::Error;

use super::{add, mul_pure, Atom, Level, Monomial, OrdinalTerm, TermError};

pub const DEFAULT_DEPTH_BOUND: usize = 4;
pub const DEFAULT_COEFF_BOUND: u64 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("parse error at {pos}: {msg}\n  {input}\n  {caret}")]
    Syntax { pos: usize, msg: String, input: String, caret: String },
    #[error(transparent)]
    Term(#[from] TermError),
}

impl ParseError {
    fn at(input: &str, pos: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            msg: msg.into(),
            input: input.to_string(),
            caret: format!("{}^", " ".repeat(pos)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Nat(u64),
    Omega,
    OmegaPow(Box<RawTerm>),
    Rho,
    Alpha,
    Kappa(Option<Box<RawTerm>>, Box<RawTerm>),
    Nu(Box<RawTerm>),
    Sum(Vec<RawTerm>),
    Scale(Box<RawTerm>, Box<RawTerm>),
}

impl RawTerm {
    pub fn depth(&self) -> usize {
        match self {
            RawTerm::Nat(_) | RawTerm::Omega | RawTerm::Rho | RawTerm::Alpha => 1,
            RawTerm::OmegaPow(e) | RawTerm::Nu(e) => 1 + e.depth(),
            RawTerm::Kappa(l, e) => 1 + e.depth().max(l.as_ref().map_or(0, |l| l.depth())),
            RawTerm::Sum(ts) => ts.iter().map(RawTerm::depth).max().unwrap_or(0),
            RawTerm::Scale(a, b) => a.depth().max(b.depth()),
        }
    }

    pub fn max_nat(&self) -> u64 {
        match self {
            RawTerm::Nat(n) => *n,
            RawTerm::Omega | RawTerm::Rho | RawTerm::Alpha => 0,
            RawTerm::OmegaPow(e) | RawTerm::Nu(e) => e.max_nat(),
            RawTerm::Kappa(l, e) => e.max_nat().max(l.as_ref().map_or(0, |l| l.max_nat())),
            RawTerm::Sum(ts) => ts.iter().map(RawTerm::max_nat).max().unwrap_or(0),
            RawTerm::Scale(a, b) => a.max_nat().max(b.max_nat()),
        }
    }

    pub fn normalize(&self) -> Result<OrdinalTerm, TermError> {
        Ok(match self {
            RawTerm::Nat(n) => OrdinalTerm::nat(*n),
            RawTerm::Omega => OrdinalTerm::omega(),
            RawTerm::OmegaPow(e) => OrdinalTerm::omega_pow(e.normalize()?)?,
            RawTerm::Rho => OrdinalTerm::rho(),
            RawTerm::Alpha => OrdinalTerm::alpha(),
            RawTerm::Kappa(level, arg) => {
                let level = match level {
                    None => Level::Rho,
                    Some(l) => {
                        let l = l.normalize()?;
                        if l == OrdinalTerm::rho() {
                            Level::Rho
                        } else if l == OrdinalTerm::alpha() {
                            Level::Alpha
                        } else {
                            return Err(TermError::MalformedTerm(format!("kappa level {l} must be r or a")));
                        }
                    }
                };
                OrdinalTerm::kappa(level, arg.normalize()?)?
            }
            RawTerm::Nu(arg) => OrdinalTerm::nu(arg.normalize()?)?,
            RawTerm::Sum(ts) => {
                let mut acc = OrdinalTerm::zero();
                for t in ts {
                    acc = add(&acc, &t.normalize()?)?;
                }
                acc
            }
            RawTerm::Scale(a, m) => mul_pure(&a.normalize()?, &m.normalize()?)?,
        })
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.src, self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn nat(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a natural number"));
        }
        self.src[start..self.pos].parse().map_err(|_| {
            self.pos = start;
            self.err("natural number too large")
        })
    }

    fn ordinal(&mut self) -> Result<RawTerm, ParseError> {
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { RawTerm::Sum(terms) })
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let atom = self.atom()?;
        if !self.eat(b'*') {
            return Ok(atom);
        }
        let factor = if self.eat(b'(') {
            let f = self.ordinal()?;
            self.expect(b')')?;
            f
        } else {
            RawTerm::Nat(self.nat()?)
        };
        Ok(RawTerm::Scale(Box::new(atom), Box::new(factor)))
    }

    fn atom(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(RawTerm::Nat(self.nat()?)),
            Some(b'w') => {
                self.pos += 1;
                if self.eat(b'^') {
                    Ok(RawTerm::OmegaPow(Box::new(self.atom()?)))
                } else {
                    Ok(RawTerm::Omega)
                }
            }
            Some(b'r') => {
                self.pos += 1;
                Ok(RawTerm::Rho)
            }
            Some(b'a') => {
                self.pos += 1;
                Ok(RawTerm::Alpha)
            }
            Some(b'k') => {
                self.pos += 1;
                self.expect(b'[')?;
                let first = self.ordinal()?;
                let out = if self.eat(b',') {
                    let second = self.ordinal()?;
                    RawTerm::Kappa(Some(Box::new(first)), Box::new(second))
                } else {
                    RawTerm::Kappa(None, Box::new(first))
                };
                self.expect(b']')?;
                Ok(out)
            }
            Some(b'v') => {
                self.pos += 1;
                self.expect(b'[')?;
                let arg = self.ordinal()?;
                self.expect(b']')?;
                Ok(RawTerm::Nu(Box::new(arg)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.ordinal()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

pub fn parse_raw(src: &str) -> Result<RawTerm, ParseError> {
    let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
    let raw = p.ordinal()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(raw)
}

/// Parses and normalizes with explicit syntactic depth and coefficient bounds.
pub fn parse_with_bounds(src: &str, depth: usize, coeff: u64) -> Result<OrdinalTerm, ParseError> {
    let raw = parse_raw(src)?;
    if raw.depth() > depth {
        return Err(TermError::MalformedTerm(format!("nesting depth {} exceeds {depth}", raw.depth())).into());
    }
    if raw.max_nat() > coeff {
        return Err(TermError::MalformedTerm(format!("coefficient {} exceeds {coeff}", raw.max_nat())).into());
    }
    Ok(raw.normalize()?)
}

/// Parses with generous bounds; use [`parse_with_bounds`] to enforce limits.
pub fn parse(src: &str) -> Result<OrdinalTerm, ParseError> {
    parse_with_bounds(src, 64, u64::MAX)
}

fn is_atomic(t: &OrdinalTerm) -> bool {
    t.as_nat().is_some() || *t == OrdinalTerm::omega() || {
        let ms = t.monomials();
        ms.len() == 1 && ms[0].coeff == 1 && ms[0].shift.is_zero()
    }
}

fn write_atomic(t: &OrdinalTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if is_atomic(t) {
        write!(f, "{t}")
    } else {
        write!(f, "({t})")
    }
}

fn write_atom(a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        Atom::OmegaPow(e) => {
            if let Some(n) = e.as_nat() {
                match n {
                    0 => write!(f, "1"),
                    1 => write!(f, "w"),
                    n => write!(f, "w^{n}"),
                }
            } else {
                write!(f, "w^")?;
                write_atomic(e, f)
            }
        }
        Atom::Rho => write!(f, "r"),
        Atom::Alpha => write!(f, "a"),
        Atom::Kappa { level: Level::Rho, arg } => write!(f, "k[{arg}]"),
        Atom::Kappa { level: Level::Alpha, arg } => write!(f, "k[a,{arg}]"),
        Atom::Nu(arg) => write!(f, "v[{arg}]"),
    }
}

pub(super) fn write_term(t: &OrdinalTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let ms = t.monomials();
    if ms.is_empty() {
        return write!(f, "0");
    }
    let mut i = 0;
    let mut first = true;
    while i < ms.len() {
        if !first {
            write!(f, "+")?;
        }
        first = false;
        let m = &ms[i];
        if let Atom::OmegaPow(e) = &m.atom {
            if e.is_zero() {
                write!(f, "{}", m.coeff)?;
            } else {
                write_atom(&m.atom, f)?;
                if m.coeff > 1 {
                    write!(f, "*{}", m.coeff)?;
                }
            }
            i += 1;
            continue;
        }
        let mut j = i;
        let mut mult = Vec::new();
        while j < ms.len() && ms[j].atom == m.atom {
            mult.push(Monomial {
                atom: Atom::OmegaPow(ms[j].shift.clone()),
                shift: OrdinalTerm::zero(),
                coeff: ms[j].coeff,
            });
            j += 1;
        }
        let mult = OrdinalTerm { monomials: mult };
        write_atom(&m.atom, f)?;
        match mult.as_nat() {
            Some(1) => {}
            Some(n) => write!(f, "*{n}")?,
            None => write!(f, "*({mult})")?,
        }
        i = j;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for s in [
            "0", "1", "7", "w", "w^2", "w^w", "w^(w+1)*3+w*2+5", "r", "a", "a*(w)+3", "k[1]", "k[a]",
            "k[a]*(w+1)+k[w+1]*2", "k[a,w]", "v[3]", "r*(w^2+2)+1", "a*(w^2+w*3)",
        ] {
            let x = parse(s).unwrap();
            assert_eq!(x.to_string(), s);
            assert_eq!(parse(&x.to_string()).unwrap(), x);
        }
    }

    #[test]
    fn caret_points_at_error() {
        let e = parse("k[1]+?").unwrap_err();
        match e {
            ParseError::Syntax { pos, caret, .. } => {
                assert_eq!(pos, 5);
                assert_eq!(caret, "     ^");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("k[1").is_err());
        assert!(parse("w^(k[1])").is_err());
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(parse_with_bounds("w^w^w^w", DEFAULT_DEPTH_BOUND, DEFAULT_COEFF_BOUND).is_ok());
        assert!(parse_with_bounds("w^w^w^w^w", DEFAULT_DEPTH_BOUND, DEFAULT_COEFF_BOUND).is_err());
        assert!(parse_with_bounds("w*33", DEFAULT_DEPTH_BOUND, DEFAULT_COEFF_BOUND).is_err());
    }
}
