//! Finite patterns: closure, interval decompositions, coverings and incompressibility.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{add, compare, index_of, rem_sigma, split_sigma, OrdinalTerm, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("invalid pattern: {0}")]
    Invalid(String),
    #[error("covering violated at ({x}, {y}) for k={k}: {reason}")]
    Violation { x: String, y: String, k: u8, reason: String },
    #[error("relation for ({0}, {1}) is missing from the target")]
    TargetRelationUnknown(String, String),
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(u64),
    #[error("no incompressible extension of {0} inside the search universe")]
    CannotExtend(String),
    #[error("pattern source failed: {0}")]
    Source(String),
}

pub type PatternResult<T> = Result<T, PatternError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Provenance {
    ComputedByEngine,
    #[default]
    Asserted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePattern {
    pub carrier: Vec<OrdinalTerm>,
    pub leq1: Vec<Vec<bool>>,
    pub leq2: Vec<Vec<bool>>,
    #[serde(skip)]
    pub provenance: Provenance,
    /// The structure the pattern lives in; coverings then keep remainders below it fixed.
    #[serde(skip)]
    pub sigma: Option<OrdinalTerm>,
}

fn sort_terms(v: &mut [OrdinalTerm]) -> PatternResult<()> {
    let mut err = None;
    v.sort_by(|x, y| {
        compare(x, y).unwrap_or_else(|e| {
            err = Some(e);
            Ordering::Equal
        })
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Sorted, deduplicated copy of a term set.
pub fn sorted_set(xs: &[OrdinalTerm]) -> PatternResult<Vec<OrdinalTerm>> {
    let mut v = xs.to_vec();
    sort_terms(&mut v)?;
    v.dedup();
    Ok(v)
}

impl FinitePattern {
    pub fn new(
        carrier: Vec<OrdinalTerm>,
        leq1: Vec<Vec<bool>>,
        leq2: Vec<Vec<bool>>,
        provenance: Provenance,
        sigma: Option<OrdinalTerm>,
    ) -> PatternResult<Self> {
        let p = FinitePattern { carrier, leq1, leq2, provenance, sigma };
        p.validate()?;
        Ok(p)
    }

    /// Pattern with only the reflexive relations.
    pub fn discrete(carrier: Vec<OrdinalTerm>) -> PatternResult<Self> {
        let n = carrier.len();
        let id: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        Self::new(carrier, id.clone(), id, Provenance::Asserted, None)
    }

    pub fn len(&self) -> usize {
        self.carrier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.carrier.is_empty()
    }

    pub fn rel(&self, k: u8, i: usize, j: usize) -> bool {
        if k == 1 {
            self.leq1[i][j]
        } else {
            self.leq2[i][j]
        }
    }

    pub fn position(&self, x: &OrdinalTerm) -> Option<usize> {
        self.carrier.iter().position(|c| c == x)
    }

    pub fn validate(&self) -> PatternResult<()> {
        let n = self.carrier.len();
        let bad = |m: &str| Err(PatternError::Invalid(m.to_string()));
        if self.leq1.len() != n || self.leq2.len() != n {
            return bad("matrix size differs from carrier size");
        }
        if self.leq1.iter().chain(&self.leq2).any(|r| r.len() != n) {
            return bad("matrix rows must be square");
        }
        for w in self.carrier.windows(2) {
            if compare(&w[0], &w[1])? != Ordering::Less {
                return bad("carrier must be strictly increasing");
            }
        }
        for m in [&self.leq1, &self.leq2] {
            for i in 0..n {
                if !m[i][i] {
                    return bad("relations must be reflexive");
                }
                for j in 0..i {
                    if m[i][j] {
                        return bad("relations must respect the order");
                    }
                }
                for j in 0..n {
                    for k in 0..n {
                        if m[i][j] && m[j][k] && !m[i][k] {
                            return bad("relations must be transitive");
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.leq2[i][j] && !self.leq1[i][j] {
                    return bad("leq2 must be contained in leq1");
                }
            }
        }
        Ok(())
    }

    /// Sub-pattern on the given (increasing) carrier positions.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let pick = |m: &Vec<Vec<bool>>| idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
        FinitePattern {
            carrier: idx.iter().map(|&i| self.carrier[i].clone()).collect(),
            leq1: pick(&self.leq1),
            leq2: pick(&self.leq2),
            provenance: self.provenance,
            sigma: self.sigma.clone(),
        }
    }

    /// Sub-pattern on the given terms, which must all lie in the carrier.
    pub fn restrict_to(&self, xs: &[OrdinalTerm]) -> PatternResult<Self> {
        let mut idx = Vec::with_capacity(xs.len());
        for x in xs {
            idx.push(self.position(x).ok_or_else(|| PatternError::Invalid(format!("{x} is not in the carrier")))?);
        }
        idx.sort_unstable();
        idx.dedup();
        Ok(self.restrict(&idx))
    }

    /// Same carrier size and matrices under the unique increasing bijection.
    pub fn isomorphic(&self, other: &Self) -> bool {
        self.len() == other.len() && self.leq1 == other.leq1 && self.leq2 == other.leq2
    }
}

/// Provides engine-backed patterns for arbitrary point sets.
pub trait PatternSource {
    fn pattern_of(&self, points: &[OrdinalTerm]) -> PatternResult<FinitePattern>;
}

// ---------------------------------------------------------------------------
// Interval decomposition and closure

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalDecomposition {
    pub m: Vec<OrdinalTerm>,
    pub r: Vec<Vec<OrdinalTerm>>,
}

impl IntervalDecomposition {
    pub fn block(&self, mu: &OrdinalTerm) -> Option<&[OrdinalTerm]> {
        self.m.iter().position(|x| x == mu).map(|i| self.r[i].as_slice())
    }

    /// The union of `mu + R_mu`.
    pub fn reassemble(&self) -> PatternResult<Vec<OrdinalTerm>> {
        let mut out = Vec::new();
        for (mu, rs) in self.m.iter().zip(&self.r) {
            for chi in rs {
                out.push(add(mu, chi)?);
            }
        }
        Ok(out)
    }
}

/// Splits `X` into blocks `mu + R_mu` with `mu` a multiple of `k[a]` and `R_mu` below `k[a]`.
pub fn interval_decomposition(xs: &[OrdinalTerm]) -> PatternResult<IntervalDecomposition> {
    let ka = OrdinalTerm::kappa_alpha();
    let xs = sorted_set(xs)?;
    let mut d = IntervalDecomposition { m: vec![], r: vec![] };
    for x in &xs {
        let (mu, chi) = split_sigma(&ka, x)?;
        if d.m.last() != Some(&mu) {
            d.m.push(mu);
            d.r.push(vec![]);
        }
        d.r.last_mut().unwrap().push(chi);
    }
    Ok(d)
}

/// Every `sigma`-floor of a member is a member, zero floors included.
pub fn is_closed(xs: &[OrdinalTerm], sigma: &OrdinalTerm) -> PatternResult<bool> {
    for x in xs {
        let (floor, _) = split_sigma(sigma, x)?;
        if !xs.contains(&floor) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Coverings

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoveringKind {
    Covering,
    Embedding,
    Isomorphism,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringMap {
    pub source: FinitePattern,
    pub target: FinitePattern,
    /// Position in the target carrier of each source element's image.
    pub map: Vec<usize>,
    pub kind: CoveringKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckedPair {
    pub x: OrdinalTerm,
    pub y: OrdinalTerm,
    pub k: u8,
    pub source: bool,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CoveringKind,
    pub map: Vec<(OrdinalTerm, OrdinalTerm)>,
    pub checked: Vec<CheckedPair>,
}

impl CoveringMap {
    /// Builds a map from explicit images, which must lie in the target carrier.
    pub fn from_images(
        source: FinitePattern,
        target: FinitePattern,
        images: &[OrdinalTerm],
        kind: CoveringKind,
    ) -> PatternResult<Self> {
        if images.len() != source.len() {
            return Err(PatternError::Invalid("map must be total on the source".into()));
        }
        let mut map = Vec::with_capacity(images.len());
        for y in images {
            map.push(
                target
                    .position(y)
                    .ok_or_else(|| PatternError::TargetRelationUnknown(y.to_string(), y.to_string()))?,
            );
        }
        Ok(CoveringMap { source, target, map, kind })
    }

    pub fn identity(p: &FinitePattern) -> Self {
        CoveringMap { source: p.clone(), target: p.clone(), map: (0..p.len()).collect(), kind: CoveringKind::Isomorphism }
    }

    pub fn image(&self, i: usize) -> &OrdinalTerm {
        &self.target.carrier[self.map[i]]
    }

    pub fn image_of(&self, x: &OrdinalTerm) -> Option<&OrdinalTerm> {
        self.source.position(x).map(|i| self.image(i))
    }

    pub fn images(&self) -> Vec<OrdinalTerm> {
        (0..self.map.len()).map(|i| self.image(i).clone()).collect()
    }

    pub fn pairs(&self) -> Vec<(OrdinalTerm, OrdinalTerm)> {
        self.source.carrier.iter().cloned().zip(self.images()).collect()
    }

    /// `self` followed by `next`; the target of `self` must contain the source of `next`.
    pub fn then(&self, next: &CoveringMap) -> PatternResult<CoveringMap> {
        let mut map = Vec::with_capacity(self.map.len());
        for i in 0..self.map.len() {
            let y = self.image(i);
            let j = next
                .source
                .position(y)
                .ok_or_else(|| PatternError::Invalid(format!("{y} is outside the second map's domain")))?;
            map.push(next.map[j]);
        }
        Ok(CoveringMap {
            source: self.source.clone(),
            target: next.target.clone(),
            map,
            kind: CoveringKind::Covering,
        })
    }
}

fn violation(x: &OrdinalTerm, y: &OrdinalTerm, k: u8, reason: &str) -> PatternError {
    PatternError::Violation { x: x.to_string(), y: y.to_string(), k, reason: reason.to_string() }
}

fn same_remainder(sigma: &Option<OrdinalTerm>, x: &OrdinalTerm, y: &OrdinalTerm) -> PatternResult<bool> {
    match sigma {
        Some(s) => Ok(rem_sigma(s, x)? == rem_sigma(s, y)?),
        None => Ok(true),
    }
}

/// Checks every obligation of the map and lists the pairs examined.
pub fn verify_covering(h: &CoveringMap) -> PatternResult<Certificate> {
    let (s, t) = (&h.source, &h.target);
    if h.map.len() != s.len() || h.map.iter().any(|&j| j >= t.len()) {
        return Err(PatternError::Invalid("map must be total with images in the target".into()));
    }
    let sigma = if s.sigma == t.sigma { s.sigma.clone() } else { None };
    let mut checked = Vec::new();
    for i in 0..s.len() {
        if !same_remainder(&sigma, &s.carrier[i], h.image(i))? {
            return Err(violation(&s.carrier[i], h.image(i), 0, "remainder below sigma changes"));
        }
        for j in i + 1..s.len() {
            let (x, y) = (&s.carrier[i], &s.carrier[j]);
            if h.map[i] >= h.map[j] {
                return Err(violation(x, y, 0, "not strictly order preserving"));
            }
            for k in [1u8, 2] {
                let a = s.rel(k, i, j);
                let b = t.rel(k, h.map[i], h.map[j]);
                checked.push(CheckedPair { x: x.clone(), y: y.clone(), k, source: a, target: b });
                if a && !b {
                    return Err(violation(x, y, k, "relation not preserved"));
                }
                if b && !a && h.kind != CoveringKind::Covering {
                    return Err(violation(x, y, k, "relation not reflected"));
                }
            }
        }
    }
    if h.kind == CoveringKind::Isomorphism && s.len() != t.len() {
        return Err(PatternError::Invalid("isomorphism must be onto".into()));
    }
    Ok(Certificate { kind: h.kind, map: h.pairs(), checked })
}

// ---------------------------------------------------------------------------
// Search

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraints {
    /// Source positions that must map to themselves.
    pub fix: Vec<usize>,
    /// Images of unfixed elements must exceed this.
    pub above: Option<OrdinalTerm>,
    /// All images must lie below this.
    pub cap: Option<OrdinalTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub nodes: u64,
}

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

fn candidates(
    src: &FinitePattern,
    uni: &FinitePattern,
    c: &Constraints,
) -> PatternResult<Vec<Vec<usize>>> {
    let sigma = if src.sigma == uni.sigma { src.sigma.clone() } else { None };
    let mut out = Vec::with_capacity(src.len());
    for (i, x) in src.carrier.iter().enumerate() {
        let mut v = Vec::new();
        for (j, y) in uni.carrier.iter().enumerate() {
            if c.fix.contains(&i) {
                if x != y {
                    continue;
                }
            } else if let Some(th) = &c.above {
                if compare(y, th)? != Ordering::Greater {
                    continue;
                }
            }
            if let Some(cap) = &c.cap {
                if compare(y, cap)? != Ordering::Less {
                    continue;
                }
            }
            if !same_remainder(&sigma, x, y)? {
                continue;
            }
            v.push(j);
        }
        out.push(v);
    }
    Ok(out)
}

fn compatible(src: &FinitePattern, uni: &FinitePattern, img: &[usize], i: usize, j: usize, kind: CoveringKind) -> bool {
    img.iter().enumerate().all(|(p, &q)| {
        [1u8, 2].iter().all(|&k| {
            let a = src.rel(k, p, i);
            let b = uni.rel(k, q, j);
            (!a || b) && (kind == CoveringKind::Covering || !b || a)
        })
    })
}

/// Depth-first search over strictly increasing maps, visiting witnesses in lexicographic order.
/// The visitor returns `false` to stop.
pub fn search_maps(
    src: &FinitePattern,
    uni: &FinitePattern,
    c: &Constraints,
    kind: CoveringKind,
    budget: u64,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> PatternResult<SearchStats> {
    let cands = candidates(src, uni, c)?;
    let mut stats = SearchStats::default();
    let mut img = Vec::with_capacity(src.len());
    fn go(
        src: &FinitePattern,
        uni: &FinitePattern,
        cands: &[Vec<usize>],
        kind: CoveringKind,
        budget: u64,
        img: &mut Vec<usize>,
        stats: &mut SearchStats,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> PatternResult<bool> {
        let i = img.len();
        if i == cands.len() {
            return Ok(visit(img));
        }
        for &j in &cands[i] {
            if img.last().is_some_and(|&p| j <= p) {
                continue;
            }
            stats.nodes += 1;
            if stats.nodes > budget {
                return Err(PatternError::SearchBudgetExceeded(budget));
            }
            if !compatible(src, uni, img, i, j, kind) {
                continue;
            }
            img.push(j);
            let more = go(src, uni, cands, kind, budget, img, stats, visit)?;
            img.pop();
            if !more {
                return Ok(false);
            }
        }
        Ok(true)
    }
    go(src, uni, &cands, kind, budget, &mut img, &mut stats, visit)?;
    Ok(stats)
}

/// The lexicographically least covering of `src` into `uni` honouring the constraints.
pub fn find_covering(
    src: &FinitePattern,
    uni: &FinitePattern,
    c: &Constraints,
    budget: u64,
) -> PatternResult<(Option<CoveringMap>, SearchStats)> {
    let mut found = None;
    let stats = search_maps(src, uni, c, CoveringKind::Covering, budget, &mut |m| {
        found = Some(m.to_vec());
        false
    })?;
    let map = found.map(|map| CoveringMap { source: src.clone(), target: uni.clone(), map, kind: CoveringKind::Covering });
    Ok((map, stats))
}

/// Plain enumeration of every strictly increasing map, filtered by a full check.
pub mod brute {
    use super::*;

    /// All `k`-subsets of `0..n` in lexicographic order.
    pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                if n - i < k - cur.len() {
                    break;
                }
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }

    pub fn is_covering(src: &FinitePattern, uni: &FinitePattern, c: &Constraints, map: &[usize]) -> bool {
        let h = CoveringMap { source: src.clone(), target: uni.clone(), map: map.to_vec(), kind: CoveringKind::Covering };
        if verify_covering(&h).is_err() {
            return false;
        }
        map.iter().enumerate().all(|(i, &j)| {
            let y = &uni.carrier[j];
            let fixed = !c.fix.contains(&i) || *y == src.carrier[i];
            let above = c.fix.contains(&i)
                || c.above.as_ref().map_or(true, |th| compare(y, th).map_or(false, |o| o.is_gt()));
            let cap = c.cap.as_ref().map_or(true, |cap| compare(y, cap).map_or(false, |o| o.is_lt()));
            fixed && above && cap
        })
    }

    pub fn all_coverings(src: &FinitePattern, uni: &FinitePattern, c: &Constraints) -> Vec<Vec<usize>> {
        combinations(uni.len(), src.len())
            .into_iter()
            .filter(|m| is_covering(src, uni, c, m))
            .collect()
    }

    /// Least witness found by scanning candidate subsets from the back.
    pub fn least_covering_reverse_scan(src: &FinitePattern, uni: &FinitePattern, c: &Constraints) -> Option<Vec<usize>> {
        let mut best: Option<Vec<usize>> = None;
        for m in combinations(uni.len(), src.len()).into_iter().rev() {
            if is_covering(src, uni, c, &m) {
                best = Some(m);
            }
        }
        best
    }

    /// Index monotonicity over every covering into the universe.
    pub fn is_incompressible(z: &FinitePattern, uni: &FinitePattern, index: &dyn Fn(&OrdinalTerm) -> OrdinalTerm) -> bool {
        all_coverings(z, uni, &Constraints::default()).iter().all(|m| {
            m.iter().enumerate().all(|(i, &j)| {
                compare(&index(&uni.carrier[j]), &index(&z.carrier[i])).map_or(false, |o| o.is_ge())
            })
        })
    }
}

// ---------------------------------------------------------------------------
// Incompressibility

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompressibilityResult {
    pub holds: bool,
    /// The finite universe the answer is relative to.
    pub universe: Vec<OrdinalTerm>,
    /// A covering that lowers an index, when one exists.
    pub witness: Option<Vec<(OrdinalTerm, OrdinalTerm)>>,
}

/// Index of a point below `k[a]` in the rho structure.
pub fn rho_index(x: &OrdinalTerm) -> PatternResult<OrdinalTerm> {
    Ok(index_of(x)?)
}

/// Searches the universe for a covering of `z` that lowers some index. Patterns that carry
/// a sigma must in addition be sigma-closed.
pub fn is_incompressible(
    z: &FinitePattern,
    universe: &FinitePattern,
    index: &dyn Fn(&OrdinalTerm) -> PatternResult<OrdinalTerm>,
    budget: u64,
) -> PatternResult<IncompressibilityResult> {
    let mut res = IncompressibilityResult { holds: true, universe: universe.carrier.clone(), witness: None };
    if let Some(s) = &z.sigma {
        if !is_closed(&z.carrier, s)? {
            res.holds = false;
            return Ok(res);
        }
    }
    let zi: Vec<OrdinalTerm> = z.carrier.iter().map(|x| index(x)).collect::<PatternResult<_>>()?;
    let ui: Vec<OrdinalTerm> = universe.carrier.iter().map(|x| index(x)).collect::<PatternResult<_>>()?;
    let mut err = None;
    let mut witness = None;
    search_maps(z, universe, &Constraints::default(), CoveringKind::Covering, budget, &mut |m| {
        let drops = m.iter().enumerate().any(|(i, &j)| match compare(&ui[j], &zi[i]) {
            Ok(o) => o.is_lt(),
            Err(e) => {
                err = Some(e);
                false
            }
        });
        if drops {
            witness = Some(m.to_vec());
        }
        !drops && err.is_none()
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    if let Some(m) = witness {
        res.holds = false;
        res.witness = Some(m.iter().enumerate().map(|(i, &j)| (z.carrier[i].clone(), universe.carrier[j].clone())).collect());
    }
    Ok(res)
}

/// Search universe for small sets: `0`, the sampled `k[g]`, and the set itself.
pub fn small_universe(extra: &[OrdinalTerm], index_sample: &[OrdinalTerm]) -> PatternResult<Vec<OrdinalTerm>> {
    let mut pts = vec![OrdinalTerm::zero()];
    for g in index_sample {
        pts.push(OrdinalTerm::kappa(crate::term::Level::Rho, g.clone())?);
    }
    pts.extend_from_slice(extra);
    sorted_set(&pts)
}

pub fn is_locally_incompressible(
    xs: &[OrdinalTerm],
    src: &dyn PatternSource,
    index_sample: &[OrdinalTerm],
    budget: u64,
) -> PatternResult<bool> {
    let d = interval_decomposition(xs)?;
    for rs in &d.r {
        if !rs.first().is_some_and(|x| x.is_zero()) {
            return Ok(false);
        }
        let uni = src.pattern_of(&small_universe(rs, index_sample)?)?;
        let z = uni.restrict_to(rs)?;
        if !is_incompressible(&z, &uni, &rho_index, budget)?.holds {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest superset of `R + {0}` inside `[low, high)` with the same maximal index that is
/// incompressible in the small universe.
pub fn incompressible_extension(
    r: &[OrdinalTerm],
    low: &OrdinalTerm,
    high: &OrdinalTerm,
    src: &dyn PatternSource,
    index_sample: &[OrdinalTerm],
    budget: u64,
) -> PatternResult<Vec<OrdinalTerm>> {
    let mut base = r.to_vec();
    base.push(OrdinalTerm::zero());
    let base = sorted_set(&base)?;
    let in_range = |x: &OrdinalTerm| -> PatternResult<bool> {
        Ok(compare(low, x)?.is_le() && compare(x, high)?.is_lt())
    };
    for x in &base {
        if !in_range(x)? {
            return Err(PatternError::CannotExtend(format!("{x} lies outside the bounds")));
        }
    }
    let mut top = OrdinalTerm::zero();
    for x in &base {
        let i = rho_index(x)?;
        if compare(&i, &top)?.is_gt() {
            top = i;
        }
    }
    let universe = small_universe(&base, index_sample)?;
    let uni = src.pattern_of(&universe)?;
    let mut extras = Vec::new();
    for x in &universe {
        if !base.contains(x) && in_range(x)? && compare(&rho_index(x)?, &top)?.is_le() {
            extras.push(x.clone());
        }
    }
    for size in 0..=extras.len() {
        for pick in brute::combinations(extras.len(), size) {
            let mut cand = base.clone();
            cand.extend(pick.iter().map(|&i| extras[i].clone()));
            let cand = sorted_set(&cand)?;
            let z = uni.restrict_to(&cand)?;
            if is_incompressible(&z, &uni, &rho_index, budget)?.holds {
                return Ok(cand);
            }
        }
    }
    Err(PatternError::CannotExtend(format!("{:?}", base.iter().map(|x| x.to_string()).collect::<Vec<_>>())))
}

// ---------------------------------------------------------------------------
// Cached universe for exhaustive subset checks

/// A fixed universe with each member's floors precomputed, so that closure and
/// decomposition of subsets reduce to bit operations.
pub struct IndexedUniverse {
    pub terms: Vec<OrdinalTerm>,
    /// Position of the `k[a]`-floor in `terms`, if present.
    kappa_floor: Vec<Option<usize>>,
    /// Distinct block id of the `k[a]`-floor.
    block: Vec<usize>,
    rho_floor: Vec<Option<usize>>,
    /// For each member, whether its remainder below `k[a]` is zero.
    chi_zero: Vec<bool>,
    /// Position of `mu + rho-floor(chi)` in `terms`.
    block_rho_floor: Vec<Option<usize>>,
}

impl IndexedUniverse {
    pub fn new(terms: Vec<OrdinalTerm>) -> PatternResult<Self> {
        assert!(terms.len() <= 64, "bitmask universes hold at most 64 terms");
        let terms = sorted_set(&terms)?;
        let ka = OrdinalTerm::kappa_alpha();
        let pos = |x: &OrdinalTerm| terms.iter().position(|t| t == x);
        let mut floors: Vec<OrdinalTerm> = Vec::new();
        let mut u = IndexedUniverse {
            terms: vec![],
            kappa_floor: vec![],
            block: vec![],
            rho_floor: vec![],
            chi_zero: vec![],
            block_rho_floor: vec![],
        };
        for x in &terms {
            let (mu, chi) = split_sigma(&ka, x)?;
            let (rf, _) = split_sigma(&OrdinalTerm::rho(), x)?;
            let (chi_rf, _) = split_sigma(&OrdinalTerm::rho(), &chi)?;
            u.kappa_floor.push(pos(&mu));
            let b = match floors.iter().position(|f| *f == mu) {
                Some(b) => b,
                None => {
                    floors.push(mu.clone());
                    floors.len() - 1
                }
            };
            u.block.push(b);
            u.rho_floor.push(pos(&rf));
            u.chi_zero.push(chi.is_zero());
            u.block_rho_floor.push(pos(&add(&mu, &chi_rf)?));
        }
        u.terms = terms;
        Ok(u)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn closed_under(mask: u64, floor: &[Option<usize>]) -> bool {
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            match floor[i] {
                Some(f) if mask >> f & 1 == 1 => {}
                _ => return false,
            }
        }
        true
    }

    pub fn kappa_closed(&self, mask: u64) -> bool {
        Self::closed_under(mask, &self.kappa_floor)
    }

    pub fn rho_closed(&self, mask: u64) -> bool {
        Self::closed_under(mask, &self.rho_floor)
    }

    /// Every block contains its own floor, i.e. `0` is in each `R_mu`.
    pub fn zero_in_every_block(&self, mask: u64) -> bool {
        let mut seen_zero = 0u64;
        let mut blocks = 0u64;
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            blocks |= 1 << self.block[i];
            if self.chi_zero[i] {
                seen_zero |= 1 << self.block[i];
            }
        }
        blocks == seen_zero
    }

    /// Every `R_mu` is rho-closed, checked through `mu + floor(chi)`.
    pub fn blocks_rho_closed(&self, mask: u64) -> bool {
        Self::closed_under(mask, &self.block_rho_floor)
    }

    pub fn members(&self, mask: u64) -> Vec<OrdinalTerm> {
        (0..self.terms.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.terms[i].clone()).collect()
    }
}
