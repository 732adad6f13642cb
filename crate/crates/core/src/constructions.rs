//! Covering constructions with their verification certificates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collapse::{CollapseContext, DomMax};
use crate::engine::{kappa_alpha, Engine, EngineError, Truth};
use crate::pattern::{
    interval_decomposition, is_closed, is_incompressible, is_locally_incompressible, incompressible_extension,
    rho_index, search_maps, small_universe, sorted_set, verify_covering, Certificate, Constraints, CoveringKind,
    CoveringMap, FinitePattern, PatternError,
};
use crate::term::{add, compare, index_of, split_sigma, sub_left, t, Level, OrdinalTerm, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("local incompressibility required: {0}")]
    LocalIncompressibilityRequired(String),
    #[error("no isomorphism class of the family has two members")]
    EmptyKept,
    #[error("index bound fails at {x}: image {image} is below {bound}")]
    IndexBoundViolated { x: String, image: String, bound: String },
    #[error("no covering found: {0}")]
    NotFound(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Term(#[from] TermError),
}

pub type ConstructionResult<T> = Result<T, ConstructionError>;

fn pre(msg: impl Into<String>) -> ConstructionError {
    ConstructionError::PreconditionViolated(msg.into())
}

/// A map together with the certificate of its verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certified {
    pub map: CoveringMap,
    pub certificate: Certificate,
}

impl Certified {
    pub fn image_of(&self, x: &OrdinalTerm) -> Option<&OrdinalTerm> {
        self.map.image_of(x)
    }
}

/// Indices used to build small search universes below `k[a]`.
pub fn default_index_sample() -> Vec<OrdinalTerm> {
    ["1", "2", "3", "4", "w"].iter().map(|s| t(s)).collect()
}

pub const DEFAULT_BUDGET: u64 = 2_000_000;

fn pattern(engine: &Engine, level: Level, pts: &[OrdinalTerm]) -> ConstructionResult<FinitePattern> {
    Ok(engine.pattern(level, pts)?)
}

/// Builds the map `x -> f(x)` between engine patterns and verifies it.
fn certify(
    engine: &Engine,
    level: Level,
    source: &[OrdinalTerm],
    kind: CoveringKind,
    f: &dyn Fn(&OrdinalTerm) -> ConstructionResult<OrdinalTerm>,
) -> ConstructionResult<Certified> {
    let src = pattern(engine, level, source)?;
    let images = src.carrier.iter().map(f).collect::<ConstructionResult<Vec<_>>>()?;
    let tgt = pattern(engine, level, &images)?;
    let map = CoveringMap::from_images(src, tgt, &images, kind)?;
    let certificate = verify_covering(&map)?;
    Ok(Certified { map, certificate })
}

fn require_closed(xs: &[OrdinalTerm], sigma: &OrdinalTerm, what: &str) -> ConstructionResult<()> {
    if is_closed(xs, sigma)? {
        Ok(())
    } else {
        Err(pre(format!("{what} is not {sigma}-closed")))
    }
}

fn is_incompressible_small(
    engine: &Engine,
    r: &[OrdinalTerm],
    sample: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<bool> {
    let uni = pattern(engine, Level::Rho, &small_universe(r, sample)?)?;
    let z = uni.restrict_to(r)?;
    Ok(is_incompressible(&z, &uni, &rho_index, budget)?.holds)
}

// ---------------------------------------------------------------------------
// Interval decompositions

/// `mu + chi -> mu + h_mu(chi)` for each block; blocks without a replacement stay fixed.
pub fn lift_covering_decomposition(
    engine: &Engine,
    xs: &[OrdinalTerm],
    per_interval: &[(OrdinalTerm, CoveringMap)],
    sample: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<Certified> {
    let xs = sorted_set(xs)?;
    require_closed(&xs, &OrdinalTerm::rho(), "X")?;
    let d = interval_decomposition(&xs)?;
    for (mu, h) in per_interval {
        let block = d.block(mu).ok_or_else(|| pre(format!("{mu} is not a block of X")))?;
        if h.source.carrier != block {
            return Err(pre(format!("replacement for {mu} is not defined on its block")));
        }
        verify_covering(h)?;
        if h.image_of(&OrdinalTerm::zero()).is_some_and(|y| !y.is_zero()) {
            return Err(pre(format!("replacement for {mu} moves 0")));
        }
        let img = sorted_set(&h.images())?;
        if img.iter().any(|y| compare(y, &kappa_alpha()).map_or(true, |o| o.is_ge())) {
            return Err(pre(format!("replacement for {mu} leaves the block")));
        }
        if !is_incompressible_small(engine, &img, sample, budget)? {
            return Err(pre(format!("replacement for {mu} is not incompressible")));
        }
    }
    let lookup = |x: &OrdinalTerm| -> ConstructionResult<OrdinalTerm> {
        let (mu, chi) = split_sigma(&kappa_alpha(), x)?;
        match per_interval.iter().find(|(m, _)| *m == mu) {
            Some((_, h)) => Ok(add(&mu, h.image_of(&chi).expect("block checked"))?),
            None => Ok(x.clone()),
        }
    };
    certify(engine, Level::Rho, &xs, CoveringKind::Covering, &lookup)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBoundCertificate {
    /// `(x, h(x), h(mu) + k[index(chi)])` for every member.
    pub checked: Vec<(OrdinalTerm, OrdinalTerm, OrdinalTerm)>,
}

/// Checks `h(mu + chi) >= h(mu) + k[index(chi)]` on a locally incompressible set.
pub fn index_lower_bound_check(
    engine: &Engine,
    xs: &[OrdinalTerm],
    h: &CoveringMap,
    sample: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<IndexBoundCertificate> {
    let xs = sorted_set(xs)?;
    if !is_locally_incompressible(&xs, engine, sample, budget)? {
        return Err(pre("X is not locally incompressible"));
    }
    verify_covering(h)?;
    let image = |x: &OrdinalTerm| {
        h.image_of(x).cloned().ok_or_else(|| pre(format!("{x} is outside the map's domain")))
    };
    let d = interval_decomposition(&xs)?;
    let mut checked = Vec::new();
    for (mu, rs) in d.m.iter().zip(&d.r) {
        let hm = image(mu)?;
        if !split_sigma(&kappa_alpha(), &hm)?.1.is_zero() {
            return Err(pre(format!("h({mu}) = {hm} is not a multiple of k[a]")));
        }
        for chi in rs {
            let x = add(mu, chi)?;
            let hx = image(&x)?;
            let bound = add(&hm, &OrdinalTerm::kappa(Level::Rho, index_of(chi)?)?)?;
            if compare(&hx, &bound)?.is_lt() {
                return Err(ConstructionError::IndexBoundViolated {
                    x: x.to_string(),
                    image: hx.to_string(),
                    bound: bound.to_string(),
                });
            }
            checked.push((x, hx, bound));
        }
    }
    Ok(IndexBoundCertificate { checked })
}

// ---------------------------------------------------------------------------
// Family reduction

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReduction {
    pub r: Vec<OrdinalTerm>,
    /// Positions in the family of the members kept.
    pub kept: Vec<usize>,
    pub lifts: Vec<Certified>,
}

/// Picks the largest class of members whose local parts are isomorphic, replaces the local
/// part by one incompressible set `R` and lifts each kept member into `X + (M_Y + R)`.
pub fn family_reduce(
    engine: &Engine,
    xs: &[OrdinalTerm],
    family: &[Vec<OrdinalTerm>],
    sample: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<FamilyReduction> {
    let rho = OrdinalTerm::rho();
    let xs = sorted_set(xs)?;
    require_closed(&xs, &rho, "X")?;
    let family = family.iter().map(|y| sorted_set(y)).collect::<Result<Vec<_>, _>>()?;
    let Some(first) = family.first() else {
        return Err(ConstructionError::EmptyKept);
    };
    let rems = |y: &[OrdinalTerm]| -> ConstructionResult<Vec<OrdinalTerm>> {
        let r = y.iter().map(|v| crate::term::rem_sigma(&rho, v)).collect::<Result<Vec<_>, _>>()?;
        Ok(sorted_set(&r)?)
    };
    let rem0 = rems(first)?;
    let mut local = Vec::with_capacity(family.len());
    for (i, y) in family.iter().enumerate() {
        if y.is_empty() || y.len() != first.len() {
            return Err(pre(format!("member {i} differs in cardinality")));
        }
        if rems(y)? != rem0 {
            return Err(pre(format!("member {i} has different remainders below r")));
        }
        require_closed(y, &rho, &format!("member {i}"))?;
        let d = interval_decomposition(y)?;
        if let Some(top) = xs.last() {
            if compare(top, &d.m[0])?.is_ge() {
                return Err(pre(format!("X is not below the blocks of member {i}")));
            }
        }
        let mut ry: Vec<OrdinalTerm> = d.r.concat();
        ry.push(OrdinalTerm::zero());
        let ry = sorted_set(&ry)?;
        let p = pattern(engine, Level::Rho, &ry)?;
        local.push((d, ry, p));
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..local.len() {
        match classes.iter_mut().find(|c| local[c[0]].2.isomorphic(&local[i].2)) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    let best = classes.into_iter().fold(Vec::new(), |b, c| if c.len() > b.len() { c } else { b });
    if best.len() < 2 {
        return Err(ConstructionError::EmptyKept);
    }
    let base = &local[best[0]].1;
    let r = incompressible_extension(base, &OrdinalTerm::zero(), &kappa_alpha(), engine, sample, budget)?;
    let mut lifts = Vec::new();
    for &i in &best {
        let (d, ry, _) = &local[i];
        let mut src = xs.clone();
        src.extend(family[i].iter().cloned());
        let to_base = |chi: &OrdinalTerm| -> OrdinalTerm {
            let p = ry.iter().position(|c| c == chi).expect("chi is in R_Y");
            base[p].clone()
        };
        let f = |x: &OrdinalTerm| -> ConstructionResult<OrdinalTerm> {
            if xs.contains(x) {
                return Ok(x.clone());
            }
            let (mu, chi) = split_sigma(&kappa_alpha(), x)?;
            debug_assert!(d.m.contains(&mu));
            Ok(add(&mu, &to_base(&chi))?)
        };
        lifts.push(certify(engine, Level::Rho, &src, CoveringKind::Covering, &f)?);
    }
    Ok(FamilyReduction { r, kept: best, lifts })
}

// ---------------------------------------------------------------------------
// Intervals indexed by powers of omega

fn interval_length(engine: &Engine, xi: &OrdinalTerm) -> ConstructionResult<Option<OrdinalTerm>> {
    if engine.params.is_last(xi) {
        return Ok(None);
    }
    let a = engine.nu_of(xi)?;
    let b = engine.nu_of(&xi.succ())?;
    Ok(Some(sub_left(&a, &b)?))
}

/// Offsets `k[a]*d + k[g]` below `len` with `d < 3`.
fn grid_offsets(len: &Option<OrdinalTerm>, gammas: &[OrdinalTerm]) -> ConstructionResult<Vec<OrdinalTerm>> {
    let mut out = Vec::new();
    for d in 0..3u64 {
        let base = crate::engine::kappa_alpha_times(&OrdinalTerm::nat(d))?;
        for g in std::iter::once(OrdinalTerm::zero()).chain(gammas.iter().cloned()) {
            let b = add(&base, &OrdinalTerm::kappa(Level::Rho, g)?)?;
            if len.as_ref().map_or(Ok(true), |l| compare(&b, l).map(|o| o.is_lt()))? {
                out.push(b);
            }
        }
    }
    Ok(sorted_set(&out)?)
}

/// The shift `v[w^eta1] + b -> v[w^eta2] + b` on grid offsets below the shorter length,
/// verified as an isomorphism.
pub fn initial_segment_iso(
    engine: &Engine,
    eta1: &OrdinalTerm,
    eta2: &OrdinalTerm,
    gammas: &[OrdinalTerm],
) -> ConstructionResult<Certified> {
    if compare(eta1, eta2)?.is_ge() {
        return Err(pre(format!("{eta1} is not below {eta2}")));
    }
    let (x1, x2) = (OrdinalTerm::omega_pow(eta1.clone())?, OrdinalTerm::omega_pow(eta2.clone())?);
    if !engine.params.below_theta2(&x2).map_err(EngineError::from)? {
        return Err(pre(format!("w^{eta2} is not an interval index")));
    }
    let (l1, l2) = (interval_length(engine, &x1)?, interval_length(engine, &x2)?);
    let len = match (l1, l2) {
        (Some(a), Some(b)) => Some(if compare(&a, &b)?.is_le() { a } else { b }),
        (a, b) => a.or(b),
    };
    let (n1, n2) = (engine.nu_of(&x1)?, engine.nu_of(&x2)?);
    let src = grid_offsets(&len, gammas)?.iter().map(|b| add(&n1, b)).collect::<Result<Vec<_>, _>>()?;
    let shift = |x: &OrdinalTerm| -> ConstructionResult<OrdinalTerm> { Ok(add(&n2, &sub_left(&n1, x)?)?) };
    certify(engine, Level::Rho, &src, CoveringKind::Isomorphism, &shift)
}

/// Whether the domain of the collapse at `w^eta'` is contained in the one at `w^eta`.
pub fn dom_inclusion_check(engine: &Engine, eta_prime: &OrdinalTerm, eta: &OrdinalTerm) -> ConstructionResult<bool> {
    if compare(eta_prime, eta)?.is_gt() {
        return Err(pre(format!("{eta_prime} is above {eta}")));
    }
    let a = CollapseContext::new(engine, &OrdinalTerm::omega_pow(eta_prime.clone())?)?;
    let b = CollapseContext::new(engine, &OrdinalTerm::omega_pow(eta.clone())?)?;
    Ok(match (a.dom_max, b.dom_max) {
        (_, DomMax::Unbounded) => true,
        (DomMax::Unbounded, _) => false,
        (DomMax::Bounded(x), DomMax::Bounded(y)) => compare(&x, &y)?.is_le(),
    })
}

// ---------------------------------------------------------------------------
// Transport along the collapse

/// Lifts a level-alpha covering `g` of `phi[Z]` to `mu + chi -> iota(g(phi(mu))) + chi`.
pub fn lift_g_prime(
    engine: &Engine,
    ctx: &CollapseContext,
    z: &[OrdinalTerm],
    g: &CoveringMap,
) -> ConstructionResult<Certified> {
    let z = sorted_set(z)?;
    if !z.contains(&ctx.nu_xi) {
        return Err(pre(format!("{} is not in Z", ctx.nu_xi)));
    }
    require_closed(&z, &OrdinalTerm::rho(), "Z")?;
    require_closed(&z, &kappa_alpha(), "Z")?;
    for x in &z {
        if !ctx.contains(x)? {
            return Err(pre(format!("{x} is outside the interval")));
        }
    }
    verify_covering(g)?;
    if g.image_of(&OrdinalTerm::zero()).is_some_and(|y| !y.is_zero()) {
        return Err(pre("g(0) is not 0"));
    }
    let f = |x: &OrdinalTerm| -> ConstructionResult<OrdinalTerm> {
        let off = sub_left(&ctx.nu_xi, x)?;
        let (m, chi) = split_sigma(&kappa_alpha(), &off)?;
        let mu = add(&ctx.nu_xi, &m)?;
        let s = ctx.phi(&mu)?;
        let gs = g.image_of(&s).ok_or_else(|| pre(format!("g is undefined at {s}")))?;
        Ok(add(&ctx.iota(gs)?, &chi)?)
    };
    let out = certify(engine, Level::Rho, &z, CoveringKind::Covering, &f)?;
    for y in out.map.images() {
        if !ctx.contains(&y)? {
            return Err(pre(format!("image {y} leaves the interval")));
        }
    }
    Ok(out)
}

/// Pushes a level-rho covering `h` of `Z*` down to `s + g -> phi(h(iota(s))) + g`.
pub fn push_h_prime(
    engine: &Engine,
    ctx: &CollapseContext,
    z: &[OrdinalTerm],
    zstar: &[OrdinalTerm],
    h: &CoveringMap,
    sample: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<Certified> {
    let alpha = OrdinalTerm::alpha();
    let z = sorted_set(z)?;
    let zstar = sorted_set(zstar)?;
    require_closed(&z, &alpha, "Z")?;
    if !zstar.contains(&ctx.nu_xi) {
        return Err(pre(format!("{} is not in Z*", ctx.nu_xi)));
    }
    for x in &z {
        let ix = ctx.iota(x)?;
        if !zstar.contains(&ix) {
            return Err(pre(format!("iota({x}) = {ix} is not in Z*")));
        }
    }
    if !is_locally_incompressible(&zstar, engine, sample, budget)? {
        return Err(ConstructionError::LocalIncompressibilityRequired(format!("{zstar:?}")));
    }
    if h.image_of(&ctx.nu_xi) != Some(&ctx.nu_xi) {
        return Err(pre("h does not fix the interval start"));
    }
    index_lower_bound_check(engine, &zstar, h, sample, budget)?;
    let f = |x: &OrdinalTerm| -> ConstructionResult<OrdinalTerm> {
        let (s, g) = split_sigma(&alpha, x)?;
        let hs = h.image_of(&ctx.iota(&s)?).ok_or_else(|| pre(format!("h is undefined at iota({s})")))?;
        Ok(add(&ctx.phi(hs)?, &g)?)
    };
    certify(engine, Level::Alpha, &z, CoveringKind::Covering, &f)
}

// ---------------------------------------------------------------------------
// Push-down into an interval indexed by a power of omega

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushDown {
    pub eta: OrdinalTerm,
    /// The interval `h1` lands in before the shift to `w^eta`.
    pub xi_prime: OrdinalTerm,
    pub steps: Vec<Certified>,
    pub h: Certified,
}

fn leq1(engine: &Engine, a: &OrdinalTerm, b: &OrdinalTerm) -> ConstructionResult<bool> {
    let v = engine.leq_k(Level::Rho, 1, a, b);
    match v.truth {
        Truth::True => Ok(true),
        Truth::False => Ok(false),
        Truth::Unknown(r) => Err(EngineError::TargetRelationUnknown { a: a.to_string(), b: b.to_string(), k: 1, reason: r }.into()),
    }
}

/// Interval indices below `xi` tried as landing places: `w^j*n + m` for small `j, n, m`.
fn landing_indices(xi: &OrdinalTerm) -> ConstructionResult<Vec<OrdinalTerm>> {
    let mut out: Vec<OrdinalTerm> = (1..=4).map(OrdinalTerm::nat).collect();
    for j in 1..=2u64 {
        let step = OrdinalTerm::omega_pow(OrdinalTerm::nat(j))?;
        for n in 1..=2u64 {
            for m in 0..=1u64 {
                out.push(add(&crate::term::mul_nat(&step, n)?, &OrdinalTerm::nat(m))?);
            }
        }
    }
    let mut below = Vec::new();
    for x in sorted_set(&out)? {
        if compare(&x, xi)?.is_lt() {
            below.push(x);
        }
    }
    Ok(below)
}

/// Covering of `Y` into `J_{w^eta}` sending `v[xi]` to `v[w^eta]`, built as four verified steps.
pub fn push_down_covering(
    engine: &Engine,
    xi: &OrdinalTerm,
    nu: &OrdinalTerm,
    ys: &[OrdinalTerm],
    gammas: &[OrdinalTerm],
    budget: u64,
) -> ConstructionResult<PushDown> {
    if !xi.is_limit() {
        return Err(pre(format!("{xi} is not a limit")));
    }
    let nu_xi = engine.nu_of(xi)?;
    if compare(&nu_xi, nu)?.is_ge() || engine.leq_k(Level::Rho, 2, &nu_xi, nu).decided() != Some(true) {
        return Err(pre(format!("v[{xi}] <_2 {nu} is not established")));
    }
    let ys = sorted_set(ys)?;
    if ys.first() != Some(&nu_xi) {
        return Err(pre(format!("{nu_xi} must be the least member of Y")));
    }
    if ys.last().is_some_and(|y| compare(y, nu).is_ok_and(|o| o.is_ge())) {
        return Err(pre(format!("Y is not below {nu}")));
    }
    require_closed(&ys, &OrdinalTerm::rho(), "Y")?;
    let offsets = ys.iter().map(|y| sub_left(&nu_xi, y)).collect::<Result<Vec<_>, _>>()?;
    let tied: Vec<bool> = ys.iter().map(|y| leq1(engine, y, nu)).collect::<Result<_, _>>()?;

    // h1: into copies of Y's shape placed at earlier interval starts.
    let nu1 = engine.nu_of(&OrdinalTerm::one())?;
    let mut uni = Vec::new();
    for xp in landing_indices(xi)? {
        let Ok(start) = engine.nu_of(&xp) else { continue };
        let len = interval_length(engine, &xp)?;
        uni.push(start.clone());
        for b in offsets.iter().chain(&grid_offsets(&len, gammas)?) {
            if len.as_ref().map_or(true, |l| compare(b, l).is_ok_and(|o| o.is_lt())) {
                uni.push(add(&start, b)?);
            }
        }
    }
    let uni = sorted_set(&uni)?;
    let src = pattern(engine, Level::Rho, &ys)?;
    let upat = pattern(engine, Level::Rho, &uni)?;
    let c = Constraints { above: Some(nu1), cap: Some(nu_xi.clone()), ..Default::default() };
    let mut found = None;
    let mut err = None;
    search_maps(&src, &upat, &c, CoveringKind::Covering, budget, &mut |m| {
        let ok = m.iter().zip(&tied).all(|(&j, &tie)| {
            !tie || match leq1(engine, &upat.carrier[j], &nu_xi) {
                Ok(b) => b,
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        });
        if ok {
            found = Some(m.to_vec());
        }
        !ok && err.is_none()
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let m = found.ok_or_else(|| ConstructionError::NotFound("first step below the interval start".into()))?;
    let h1 = CoveringMap { source: src, target: upat, map: m, kind: CoveringKind::Covering };
    let h1 = Certified { certificate: verify_covering(&h1)?, map: h1 };
    let start_img = h1.image_of(&nu_xi).expect("nu_xi in Y").clone();
    let xi_prime = engine.locate_interval(&start_img)?.xi;
    let nu_xp = engine.nu_of(&xi_prime)?;

    // h2: move the block of the start image onto v[xi'].
    let range1 = sorted_set(&h1.map.images())?;
    let (start_floor, _) = split_sigma(&OrdinalTerm::rho(), &start_img)?;
    let h2 = certify(engine, Level::Rho, &range1, CoveringKind::Covering, &|x| {
        let (beta, eps) = split_sigma(&OrdinalTerm::rho(), x)?;
        Ok(if beta == start_floor { add(&nu_xp, &eps)? } else { x.clone() })
    })?;

    // h3: into J_{xi'}, fixing what already lies there.
    let range2 = sorted_set(&h2.map.images())?;
    let next = engine.nu_of(&xi_prime.succ())?;
    let inside = |x: &OrdinalTerm| compare(&nu_xp, x).is_ok_and(|o| o.is_le()) && compare(x, &next).is_ok_and(|o| o.is_lt());
    let len = interval_length(engine, &xi_prime)?;
    let mut cands: Vec<OrdinalTerm> = range2.iter().filter(|x| inside(x)).cloned().collect();
    for b in offsets.iter().chain(&grid_offsets(&len, gammas)?) {
        let p = add(&nu_xp, b)?;
        if inside(&p) {
            cands.push(p);
        }
    }
    let cands = sorted_set(&cands)?;
    let src3 = pattern(engine, Level::Rho, &range2)?;
    let uni3 = pattern(engine, Level::Rho, &cands)?;
    let fix = (0..src3.len()).filter(|&i| inside(&src3.carrier[i])).collect();
    let c3 = Constraints { fix, cap: Some(next.clone()), ..Default::default() };
    let (m3, _) = crate::pattern::find_covering(&src3, &uni3, &c3, budget)?;
    let m3 = m3.ok_or_else(|| ConstructionError::NotFound(format!("covering into J_{xi_prime}")))?;
    let h3 = Certified { certificate: verify_covering(&m3)?, map: m3 };

    // h4: shift J_{xi'} onto J_{w^eta}.
    let eta = xi_prime.last_exponent().cloned().unwrap_or_default();
    let w_eta = OrdinalTerm::omega_pow(eta.clone())?;
    let nu_w = engine.nu_of(&w_eta)?;
    let range3 = sorted_set(&h3.map.images())?;
    let h4 = certify(engine, Level::Rho, &range3, CoveringKind::Isomorphism, &|x| {
        Ok(add(&nu_w, &sub_left(&nu_xp, x)?)?)
    })?;

    let composite = h1.map.then(&h2.map)?.then(&h3.map)?.then(&h4.map)?;
    let h = Certified { certificate: verify_covering(&composite)?, map: composite };
    if h.image_of(&nu_xi) != Some(&nu_w) {
        return Err(pre("composite does not send the start to v[w^eta]"));
    }
    let nu_w_next = engine.nu_of(&w_eta.succ())?;
    for (y, tie) in ys.iter().zip(&tied) {
        let hy = h.image_of(y).expect("total");
        if compare(hy, &nu_w_next)?.is_ge() {
            return Err(pre(format!("h({y}) = {hy} leaves J_(w^{eta})")));
        }
        if *tie && !leq1(engine, hy, &nu_w_next)? {
            return Err(pre(format!("h({y}) = {hy} is not <=_1 the next interval start")));
        }
    }
    Ok(PushDown { eta, xi_prime, steps: vec![h1, h2, h3, h4], h })
}
