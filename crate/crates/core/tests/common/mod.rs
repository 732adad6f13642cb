#![allow(dead_code)]

use itertools::Itertools;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ordpat::collapse::{CollapseContext, DomMax};
use ordpat::constructions::{self as cons, Certified, ConstructionError, ConstructionResult};
use ordpat::engine::{alpha_times, kappa_alpha_times, Engine};
use ordpat::pattern::{verify_covering, CoveringKind, CoveringMap, FinitePattern, Provenance};
use ordpat::term::{add, t, Level, OrdinalTerm};

pub fn terms(xs: &[&str]) -> Vec<OrdinalTerm> {
    xs.iter().map(|s| t(s)).collect()
}

pub fn kr(g: u64) -> OrdinalTerm {
    OrdinalTerm::kappa(Level::Rho, OrdinalTerm::nat(g)).unwrap()
}

/// `{0, k[1], ..., k[n]}`.
pub fn initial_local(n: u64) -> Vec<OrdinalTerm> {
    std::iter::once(OrdinalTerm::zero()).chain((1..=n).map(kr)).collect()
}

/// All subsets of `{k[1], k[2], k[3]}` joined with `0`.
pub fn local_parts() -> Vec<Vec<OrdinalTerm>> {
    (0..=3)
        .flat_map(|n| (1..=3u64).combinations(n))
        .map(|c| std::iter::once(OrdinalTerm::zero()).chain(c.into_iter().map(kr)).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// Random valid patterns

/// A valid pattern on the given carrier: relations are transitive closures of random forward edges.
pub fn random_pattern(carrier: Vec<OrdinalTerm>, rng: &mut StdRng, density: f64) -> FinitePattern {
    let n = carrier.len();
    let mut leq1 = vec![vec![false; n]; n];
    let mut leq2 = vec![vec![false; n]; n];
    for i in 0..n {
        leq1[i][i] = true;
        leq2[i][i] = true;
        for j in i + 1..n {
            if rng.gen_bool(density) {
                leq1[i][j] = true;
                if rng.gen_bool(0.5) {
                    leq2[i][j] = true;
                }
            }
        }
    }
    for m in [&mut leq1, &mut leq2] {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if m[i][k] && m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if leq2[i][j] {
                leq1[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq1[i][k] && leq1[k][j] {
                    leq1[i][j] = true;
                }
            }
        }
    }
    FinitePattern::new(carrier, leq1, leq2, Provenance::Asserted, None).expect("closed relations are valid")
}

pub fn chain_carrier(n: u64) -> Vec<OrdinalTerm> {
    (1..=n).map(kr).collect()
}

/// Eight points below `k[a]` with several index values.
pub fn indexed_carrier() -> Vec<OrdinalTerm> {
    terms(&["0", "r", "k[1]", "k[1]+r", "k[2]", "k[2]+r", "k[3]", "k[w]"])
}

pub fn structures(carrier: &[OrdinalTerm], count: u64) -> Vec<FinitePattern> {
    (0..count)
        .map(|s| {
            let mut rng = StdRng::seed_from_u64(0x5eed + s);
            let density = [0.15, 0.3, 0.5, 0.7][(s % 4) as usize];
            random_pattern(carrier.to_vec(), &mut rng, density)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// The 64-term universe

/// Sixteen local parts over four blocks.
pub fn universe64() -> Vec<OrdinalTerm> {
    let blocks = terms(&["0", "k[a]", "k[a]*2", "k[a]*(w)"]);
    let locals = terms(&[
        "0", "1", "w", "r", "r+1", "r*2", "k[1]", "k[1]+1", "k[1]+r", "k[1]+r+w", "k[2]", "k[2]+2", "k[w]", "k[w]+r",
        "k[w]*2", "k[w+1]",
    ]);
    let mut out = Vec::new();
    for b in &blocks {
        for l in &locals {
            out.push(add(b, l).unwrap());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Construction inputs

#[derive(Debug, Clone)]
pub enum ConstructionInput {
    Lift { xs: Vec<OrdinalTerm>, replace: Vec<(OrdinalTerm, Vec<OrdinalTerm>)> },
    GPrime { xi: OrdinalTerm, z: Vec<OrdinalTerm>, compress: bool },
    HPrime { xi: OrdinalTerm, z: Vec<OrdinalTerm>, compress: bool },
    SegmentIso { eta1: OrdinalTerm, eta2: OrdinalTerm, gammas: Vec<OrdinalTerm> },
    PushDown { xi: OrdinalTerm, nu: OrdinalTerm, ys: Vec<OrdinalTerm> },
}

impl ConstructionInput {
    pub fn name(&self) -> &'static str {
        match self {
            ConstructionInput::Lift { .. } => "lift_covering_decomposition",
            ConstructionInput::GPrime { .. } => "lift_g_prime",
            ConstructionInput::HPrime { .. } => "push_h_prime",
            ConstructionInput::SegmentIso { .. } => "initial_segment_iso",
            ConstructionInput::PushDown { .. } => "push_down_covering",
        }
    }
}

fn block_set(mu: &OrdinalTerm, local: &[OrdinalTerm]) -> Vec<OrdinalTerm> {
    local.iter().map(|c| add(mu, c).unwrap()).collect()
}

fn lift_inputs() -> Vec<ConstructionInput> {
    let blocks = terms(&["k[a]*2", "k[a]*3", "k[a]*(w)", "k[a]*(w+1)"]);
    let locals = local_parts();
    let compressed = |r: &[OrdinalTerm]| initial_local(r.len() as u64 - 1);
    let mut out = Vec::new();
    for mu in &blocks {
        for r in &locals {
            for replace in [false, true] {
                let rep = if replace { vec![(mu.clone(), compressed(r))] } else { vec![] };
                out.push(ConstructionInput::Lift { xs: block_set(mu, r), replace: rep });
            }
        }
    }
    let second = [terms(&["0"]), terms(&["0", "k[2]"]), terms(&["0", "k[1]", "k[3]"])];
    for pair in blocks.iter().combinations(2) {
        for r1 in &locals {
            for r2 in &second {
                for replace in [false, true] {
                    let mut xs = block_set(pair[0], r1);
                    xs.extend(block_set(pair[1], r2));
                    let rep = if replace {
                        vec![(pair[0].clone(), compressed(r1)), (pair[1].clone(), compressed(r2))]
                    } else {
                        vec![]
                    };
                    out.push(ConstructionInput::Lift { xs, replace: rep });
                }
            }
        }
    }
    out
}

/// Block offsets `d` (subsets of `0..=top` containing 0) with local parts for each.
fn grid_shapes(top: u64) -> Vec<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for rest in (1..=top).powerset() {
        let ds: Vec<u64> = std::iter::once(0).chain(rest).collect();
        let free: Vec<&u64> = ds.iter().filter(|&&d| d < top).collect();
        for sizes in (0..free.len()).map(|_| 0..3u64).multi_cartesian_product() {
            let mut shape = Vec::new();
            let mut it = sizes.iter();
            for &d in &ds {
                let n = if d < top { *it.next().unwrap() } else { 0 };
                shape.push((d, n));
            }
            out.push(shape);
        }
        if free.is_empty() {
            out.push(ds.iter().map(|&d| (d, 0)).collect());
        }
    }
    out
}

fn dom_units(engine: &Engine, xi: &OrdinalTerm) -> u64 {
    let ctx = CollapseContext::new(engine, xi).unwrap();
    match ctx.dom_max {
        DomMax::Bounded(m) => (1..=8).find(|&d| alpha_times(&OrdinalTerm::nat(d)).unwrap() == m).unwrap(),
        DomMax::Unbounded => 2,
    }
}

fn collapse_inputs(engine: &Engine) -> Vec<ConstructionInput> {
    let mut out = Vec::new();
    for xi in terms(&["1", "2", "w", "w+1", "w*2"]) {
        let nu = engine.nu_of(&xi).unwrap();
        let top = dom_units(engine, &xi);
        for shape in grid_shapes(top) {
            let mut zr = Vec::new();
            let mut za = Vec::new();
            for &(d, n) in &shape {
                let mu = add(&nu, &kappa_alpha_times(&OrdinalTerm::nat(d)).unwrap()).unwrap();
                zr.extend(block_set(&mu, &initial_local(n)));
                let s = alpha_times(&OrdinalTerm::nat(d)).unwrap();
                za.extend((0..=n).map(|g| add(&s, &OrdinalTerm::nat(g)).unwrap()));
            }
            for compress in [false, true] {
                out.push(ConstructionInput::GPrime { xi: xi.clone(), z: zr.clone(), compress });
                out.push(ConstructionInput::HPrime { xi: xi.clone(), z: za.clone(), compress });
            }
        }
    }
    out
}

fn segment_inputs() -> Vec<ConstructionInput> {
    let pool = terms(&["1", "2", "3", "w", "w+1"]);
    let mut out = Vec::new();
    for (a, b) in (0..=4u64).tuple_combinations() {
        for gammas in pool.iter().cloned().powerset().filter(|g| !g.is_empty()) {
            out.push(ConstructionInput::SegmentIso { eta1: OrdinalTerm::nat(a), eta2: OrdinalTerm::nat(b), gammas });
        }
    }
    out
}

fn push_down_inputs(engine: &Engine) -> Vec<ConstructionInput> {
    let mut out = Vec::new();
    for xi in terms(&["w", "w*2", "w^2"]) {
        let nu_xi = engine.nu_of(&xi).unwrap();
        let next = engine.nu_of(&add(&xi, &OrdinalTerm::nat(1)).unwrap()).unwrap();
        let top = dom_units(engine, &xi);
        for d in 1..=top.min(2) {
            let nu = add(&nu_xi, &kappa_alpha_times(&OrdinalTerm::nat(d)).unwrap()).unwrap();
            if !ordpat::term::lt(&nu, &next).unwrap() {
                continue;
            }
            let offsets = terms(&["k[1]", "k[2]", "k[a]", "k[a]+k[1]"]);
            for pick in offsets.into_iter().powerset() {
                let mut ys = vec![nu_xi.clone()];
                for o in pick {
                    let y = add(&nu_xi, &o).unwrap();
                    if ordpat::term::lt(&y, &nu).unwrap() {
                        ys.push(y);
                    }
                }
                out.push(ConstructionInput::PushDown { xi: xi.clone(), nu: nu.clone(), ys });
            }
        }
    }
    out
}

pub fn construction_inputs(engine: &Engine) -> Vec<ConstructionInput> {
    let mut v = lift_inputs();
    v.extend(collapse_inputs(engine));
    v.extend(segment_inputs());
    v.extend(push_down_inputs(engine));
    v
}

fn pattern_map(engine: &Engine, level: Level, pairs: &[(OrdinalTerm, OrdinalTerm)]) -> CoveringMap {
    let src: Vec<OrdinalTerm> = pairs.iter().map(|p| p.0.clone()).collect();
    let source = engine.pattern(level, &src).unwrap();
    let images: Vec<OrdinalTerm> =
        source.carrier.iter().map(|x| pairs.iter().find(|p| p.0 == *x).unwrap().1.clone()).collect();
    let target = engine.pattern(level, &images).unwrap();
    CoveringMap::from_images(source, target, &images, CoveringKind::Covering).unwrap()
}

/// Renumbers the blocks `s*d` of a level-alpha set (or rho grid over `base`) to consecutive `d`.
fn compress_blocks(xs: &[OrdinalTerm], sigma: &OrdinalTerm, base: &OrdinalTerm) -> Vec<(OrdinalTerm, OrdinalTerm)> {
    let mut floors: Vec<OrdinalTerm> = Vec::new();
    let mut out = Vec::new();
    for x in xs {
        let off = ordpat::term::sub_left(base, x).unwrap();
        let (f, rem) = ordpat::term::split_sigma(sigma, &off).unwrap();
        if !floors.contains(&f) {
            floors.push(f.clone());
        }
        let d = floors.iter().position(|y| *y == f).unwrap() as u64;
        let nf = ordpat::term::mul_nat(sigma, d).unwrap();
        out.push((x.clone(), add(&add(base, &nf).unwrap(), &rem).unwrap()));
    }
    out
}

/// Runs one construction.
pub fn run_construction(engine: &Engine, input: &ConstructionInput) -> ConstructionResult<Certified> {
    let sample = cons::default_index_sample();
    match input {
        ConstructionInput::Lift { xs, replace } => {
            let blocks: Vec<(OrdinalTerm, CoveringMap)> = replace
                .iter()
                .map(|(mu, img)| {
                    let d = ordpat::pattern::interval_decomposition(xs).unwrap();
                    let r = d.block(mu).unwrap();
                    let pairs: Vec<_> = r.iter().cloned().zip(img.iter().cloned()).collect();
                    (mu.clone(), pattern_map(engine, Level::Rho, &pairs))
                })
                .collect();
            cons::lift_covering_decomposition(engine, xs, &blocks, &sample, cons::DEFAULT_BUDGET)
        }
        ConstructionInput::GPrime { xi, z, compress } => {
            let ctx = CollapseContext::new(engine, xi)?;
            let phis: Vec<OrdinalTerm> = z.iter().map(|x| ctx.phi(x)).collect::<Result<_, _>>()?;
            let phis = ordpat::pattern::sorted_set(&phis)?;
            let pairs = if *compress {
                compress_blocks(&phis, &OrdinalTerm::alpha(), &OrdinalTerm::zero())
            } else {
                phis.iter().map(|p| (p.clone(), p.clone())).collect()
            };
            let g = pattern_map(engine, Level::Alpha, &pairs);
            cons::lift_g_prime(engine, &ctx, z, &g)
        }
        ConstructionInput::HPrime { xi, z, compress } => {
            let ctx = CollapseContext::new(engine, xi)?;
            let zstar: Vec<OrdinalTerm> = z.iter().map(|x| ctx.iota(x)).collect::<Result<_, _>>()?;
            let zstar = ordpat::pattern::sorted_set(&zstar)?;
            let pairs = if *compress {
                compress_blocks(&zstar, &OrdinalTerm::kappa_alpha(), &ctx.nu_xi)
            } else {
                zstar.iter().map(|p| (p.clone(), p.clone())).collect()
            };
            let h = pattern_map(engine, Level::Rho, &pairs);
            cons::push_h_prime(engine, &ctx, z, &zstar, &h, &sample, cons::DEFAULT_BUDGET)
        }
        ConstructionInput::SegmentIso { eta1, eta2, gammas } => cons::initial_segment_iso(engine, eta1, eta2, gammas),
        ConstructionInput::PushDown { xi, nu, ys } => {
            cons::push_down_covering(engine, xi, nu, ys, &terms(&["1", "2", "w"]), cons::DEFAULT_BUDGET).map(|p| p.h)
        }
    }
}

/// Independent re-check: fresh engine matrices on both sides and a new verification.
pub fn recheck(input: &ConstructionInput, out: &Certified) -> Result<(), String> {
    let fresh = Engine::with_defaults();
    let level = match input {
        ConstructionInput::HPrime { .. } => Level::Alpha,
        _ => Level::Rho,
    };
    let src = fresh.pattern(level, &out.map.source.carrier).map_err(|e| e.to_string())?;
    let tgt = fresh.pattern(level, &out.map.target.carrier).map_err(|e| e.to_string())?;
    if src != out.map.source || tgt != out.map.target {
        return Err("emitted matrices differ from a fresh computation".into());
    }
    let map = CoveringMap { source: src, target: tgt, map: out.map.map.clone(), kind: out.map.kind };
    verify_covering(&map).map_err(|e| e.to_string())?;
    if map.kind == CoveringKind::Isomorphism {
        let inv = CoveringMap {
            source: map.target.clone(),
            target: map.source.clone(),
            map: (0..map.target.len()).collect(),
            kind: CoveringKind::Isomorphism,
        };
        verify_covering(&inv).map_err(|e| format!("inverse: {e}"))?;
    }
    Ok(())
}

pub fn is_precondition(e: &ConstructionError) -> bool {
    matches!(e, ConstructionError::PreconditionViolated(_) | ConstructionError::LocalIncompressibilityRequired(_))
}

// ---------------------------------------------------------------------------
// Term generators

use proptest::prelude::*;
use proptest::sample::select;

const PURE: &[&str] = &["0", "1", "2", "5", "w", "w+1", "w*2", "w^2", "w^2+w*3", "w^w", "w^(w+1)", "w^w*2+w"];
const RHO: &[&str] = &[
    "r", "r+1", "r*2", "r*(w)", "r*(w+1)", "k[1]", "k[2]", "k[w]", "k[w]+r", "k[1]*3", "k[a]", "k[a]*2", "k[a]*(w)",
    "k[a]+k[2]", "k[a]*(w^2+1)",
];
const NU: &[&str] = &["r", "r*(w)", "k[1]", "k[w+1]", "k[w]*2", "v[1]", "v[w]", "v[w]*2", "v[2]+k[3]", "v[w^2]"];
const ALPHA: &[&str] = &["a", "a+1", "a*2", "a*(w)", "a+w", "a*(w+1)+3", "a*(w^2)"];

/// Atom pools of four mutually comparable sorts.
pub fn pool(sort: usize) -> Vec<OrdinalTerm> {
    let extra: &[&str] = match sort {
        0 => &[],
        1 => RHO,
        2 => NU,
        _ => ALPHA,
    };
    PURE.iter().chain(extra).map(|s| t(s)).collect()
}

pub fn term_of(sort: usize) -> impl Strategy<Value = OrdinalTerm> {
    proptest::collection::vec(select(pool(sort)), 1..5).prop_map(|xs| {
        xs.iter().skip(1).fold(xs[0].clone(), |acc, x| add(&acc, x).expect("same-sort sums are defined"))
    })
}

/// A sort together with three terms of it.
pub fn triple() -> impl Strategy<Value = (usize, OrdinalTerm, OrdinalTerm, OrdinalTerm)> {
    (0..4usize).prop_flat_map(|s| (Just(s), term_of(s), term_of(s), term_of(s)))
}

/// Moduli that make sense for a sort.
pub fn moduli(sort: usize) -> Vec<OrdinalTerm> {
    let m: &[&str] = match sort {
        0 => &["w", "w^2", "w^w"],
        1 => &["w", "r", "k[a]"],
        2 => &["w", "r"],
        _ => &["w", "a"],
    };
    m.iter().map(|s| t(s)).collect()
}
