//! Dual computations for the two recurrence statements and the order-reduction equivalence.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::collapse::{CollapseContext, DomMax};
use crate::engine::{
    alpha_times, inner_sum_with, is_successor_multiple_of_alpha, kappa_alpha, kappa_alpha_times, Engine, EngineError,
    EngineResult, VerdictRecord,
};
use crate::params::StructureParams;
use crate::term::{add, compare, quotient, split_sigma, t, Level, OrdinalTerm};

pub const DEFAULT_UNKNOWN_THRESHOLD: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecurrenceCase {
    #[serde(rename = "1a")]
    C1a,
    #[serde(rename = "1b")]
    C1b,
    #[serde(rename = "2a")]
    C2a,
    #[serde(rename = "2b")]
    C2b,
    #[serde(rename = "3")]
    C3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictedDom {
    Exact(OrdinalTerm),
    /// `max I^a_{base + g}` for an unspecified `g < a`.
    SomeGamma { base: OrdinalTerm },
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrencePrediction {
    pub eta: OrdinalTerm,
    pub lambda: OrdinalTerm,
    pub n: u64,
    pub case: RecurrenceCase,
    pub predicted_dom_max: PredictedDom,
    pub f_eta: Option<OrdinalTerm>,
    /// `v[w^eta]` from the anchor `k[a]` and the predicted interval lengths.
    pub predicted_nu: Option<OrdinalTerm>,
}

fn oracle_max(params: &StructureParams, key: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    params
        .oracle
        .max_of(key)
        .ok_or_else(|| EngineError::OracleGap(format!("max I^a_{key} is not tabulated")))
}

/// Case split of the recurrence for `dom(iota_{w^eta})`, read from the level-alpha table only.
pub fn second_recurrence_predict(params: &StructureParams, eta: &OrdinalTerm) -> EngineResult<RecurrencePrediction> {
    let mut p = predict_dom(params, eta)?;
    p.predicted_nu = predicted_nu(params, eta).ok();
    Ok(p)
}

fn predict_dom(params: &StructureParams, eta: &OrdinalTerm) -> EngineResult<RecurrencePrediction> {
    if !eta.is_pure() {
        return Err(EngineError::OutOfDomain(eta.to_string()));
    }
    let w_eta = OrdinalTerm::omega_pow(eta.clone())?;
    if !params.below_theta2(&w_eta)? {
        return Err(EngineError::BeyondBound(format!("w^{eta} is not an interval index")));
    }
    let (lambda, n) = eta.split_finite();
    let base = oracle_max(params, &alpha_times(&lambda)?)?;
    let succ_mult = is_successor_multiple_of_alpha(&base);
    let last = params.is_last(&w_eta);
    let mut out = RecurrencePrediction {
        eta: eta.clone(),
        lambda: lambda.clone(),
        n,
        case: RecurrenceCase::C1a,
        predicted_dom_max: PredictedDom::Unbounded,
        f_eta: None,
        predicted_nu: None,
    };
    if last {
        if params.theta1_boundary() {
            out.case = RecurrenceCase::C3;
        } else if succ_mult {
            let prev = eta.predecessor().ok_or_else(|| {
                EngineError::OutOfDomain(format!("{eta} must be a successor in this case"))
            })?;
            out.case = RecurrenceCase::C2b;
            out.predicted_dom_max = PredictedDom::SomeGamma { base: alpha_times(&prev)? };
        } else {
            out.case = RecurrenceCase::C2a;
            out.predicted_dom_max = PredictedDom::SomeGamma { base: alpha_times(eta)? };
        }
        return Ok(out);
    }
    let f = if succ_mult {
        out.case = RecurrenceCase::C1b;
        alpha_times(eta)?
    } else {
        alpha_times(&eta.succ())?
    };
    let dom = match eta.predecessor() {
        Some(prev) => {
            let before = predict_dom(params, &prev)?;
            let PredictedDom::Exact(m) = before.predicted_dom_max else {
                return Err(EngineError::OutOfDomain(format!("no exact value below {eta}")));
            };
            let chained = add(&m, &OrdinalTerm::alpha())?;
            if let Some(tab) = params.oracle.max_of(&f) {
                if tab != chained {
                    return Err(EngineError::InconsistentAxioms(format!(
                        "max I^a_{f} is tabulated as {tab} but the successor chain gives {chained}"
                    )));
                }
            }
            chained
        }
        None => oracle_max(params, &f)?,
    };
    out.f_eta = Some(f);
    out.predicted_dom_max = PredictedDom::Exact(dom);
    Ok(out)
}

/// Length of `J_{w^e}` in `k[a]` units as predicted.
fn predicted_length(params: &StructureParams, e: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    match predict_dom(params, e)?.predicted_dom_max {
        PredictedDom::Exact(m) => {
            let (mult, rest) = split_sigma(&OrdinalTerm::alpha(), &m)?;
            if !rest.is_zero() {
                return Err(EngineError::OutOfDomain(format!("{m} is not a multiple of a")));
            }
            Ok(quotient(&OrdinalTerm::alpha(), &mult)?)
        }
        _ => Err(EngineError::OracleGap(format!("length of J_(w^{e}) is not determined"))),
    }
}

/// `v[w^eta]` from the anchor `v[0] = k[a]`, with `J_0` shaped like `J_1`.
pub fn predicted_nu(params: &StructureParams, eta: &OrdinalTerm) -> EngineResult<OrdinalTerm> {
    let first = predicted_length(params, &OrdinalTerm::zero())?;
    let inner = inner_sum_with(eta, &|e| predicted_length(params, e))?;
    Ok(add(&kappa_alpha(), &kappa_alpha_times(&add(&first, &inner)?)?)?)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub theorem: String,
    pub params: Value,
    pub checked: usize,
    pub agreed: usize,
    pub disagreed: Vec<Value>,
    pub unknown: usize,
    pub oracle_gaps: usize,
    pub wall_time: f64,
}

impl Report {
    fn new(theorem: &str, params: Value) -> Self {
        Report {
            theorem: theorem.into(),
            params,
            checked: 0,
            agreed: 0,
            disagreed: vec![],
            unknown: 0,
            oracle_gaps: 0,
            wall_time: 0.0,
        }
    }

    pub fn unknown_fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.unknown as f64 / self.checked as f64
        }
    }

    pub fn passed(&self, threshold: f64) -> bool {
        self.disagreed.is_empty() && self.unknown_fraction() <= threshold
    }

    /// Nothing disagreed or was unknown for reasons other than missing table entries.
    pub fn only_oracle_gaps(&self) -> bool {
        self.disagreed.is_empty() && self.oracle_gaps > 0 && self.unknown == self.oracle_gaps
    }
}

/// Level-alpha sample points `a*d + g` with `1 <= lambda <= bound` inside the domain.
pub fn grid_points(ctx: &CollapseContext, bound: &OrdinalTerm, gammas: &[OrdinalTerm]) -> EngineResult<Vec<OrdinalTerm>> {
    let mut out = Vec::new();
    for d in 0..=16u64 {
        let base = alpha_times(&OrdinalTerm::nat(d))?;
        if compare(&base, bound)?.is_gt() || !ctx.in_dom(&base)? {
            break;
        }
        for g in std::iter::once(OrdinalTerm::zero()).chain(gammas.iter().cloned()) {
            let lam = add(&base, &g)?;
            if !lam.is_zero() && compare(&lam, bound)?.is_le() && ctx.in_dom(&lam)? {
                out.push(lam);
            }
        }
    }
    Ok(out)
}

pub fn default_gammas() -> Vec<OrdinalTerm> {
    ["1", "2", "w", "w+1"].iter().map(|s| t(s)).collect()
}

/// Compares the level-alpha verdict with the level-rho verdict on the images for every pair.
pub fn verify_order_reduction(engine: &Engine, xi: &OrdinalTerm, bound: &OrdinalTerm) -> Report {
    verify_order_reduction_with(engine, xi, bound, &default_gammas())
}

pub fn verify_order_reduction_with(
    engine: &Engine,
    xi: &OrdinalTerm,
    bound: &OrdinalTerm,
    gammas: &[OrdinalTerm],
) -> Report {
    let start = Instant::now();
    let mut rep = Report::new(
        "order_reduction",
        json!({ "xi": xi, "bound": bound, "gammas": gammas, "nu_offset": engine.axioms.nu_offset }),
    );
    let ctx = match CollapseContext::new(engine, xi) {
        Ok(c) => c,
        Err(e) => {
            record_error(&mut rep, &e, json!({ "xi": xi }));
            rep.wall_time = start.elapsed().as_secs_f64();
            return rep;
        }
    };
    let pts = match grid_points(&ctx, bound, gammas) {
        Ok(p) => p,
        Err(e) => {
            record_error(&mut rep, &e, json!({ "xi": xi }));
            return rep;
        }
    };
    let plain = engine.without_level_shift();
    let mut jobs = Vec::new();
    for j in 0..pts.len() {
        for i in 0..j {
            for k in [1u8, 2] {
                jobs.push((i, j, k));
            }
        }
    }
    let rows: Vec<(Option<bool>, Option<bool>, bool, Value)> = jobs
        .par_iter()
        .map(|&(i, j, k)| {
            let (lp, l) = (&pts[i], &pts[j]);
            let av = engine.leq_k(Level::Alpha, k, lp, l);
            let (a, b) = (ctx.iota(lp), ctx.iota(l));
            let rv = match (&a, &b) {
                (Ok(a), Ok(b)) => plain.leq_k(Level::Rho, k, a, b),
                _ => plain.leq_k(Level::Rho, k, lp, l),
            };
            let gap = av.is_oracle_gap() || rv.is_oracle_gap();
            let detail = json!({
                "lambda_prime": lp,
                "lambda": l,
                "k": k,
                "alpha": VerdictRecord::new(Level::Alpha, k, lp, l, &av),
                "rho": match (a, b) {
                    (Ok(a), Ok(b)) => serde_json::to_value(VerdictRecord::new(Level::Rho, k, &a, &b, &rv)).unwrap(),
                    _ => Value::Null,
                },
            });
            (av.decided(), rv.decided(), gap, detail)
        })
        .collect();
    for (av, rv, gap, detail) in rows {
        rep.checked += 1;
        match (av, rv) {
            (Some(x), Some(y)) if x == y => rep.agreed += 1,
            (Some(_), Some(_)) => rep.disagreed.push(detail),
            _ => {
                rep.unknown += 1;
                if gap {
                    rep.oracle_gaps += 1;
                }
            }
        }
    }
    rep.wall_time = start.elapsed().as_secs_f64();
    rep
}

fn record_error(rep: &mut Report, e: &EngineError, item: Value) {
    rep.checked += 1;
    match e {
        EngineError::OracleGap(_) => {
            rep.unknown += 1;
            rep.oracle_gaps += 1;
        }
        other => rep.disagreed.push(json!({ "item": item, "error": other.to_string() })),
    }
}

/// Interval indices `0..=N` for a finite bound; infinite bounds add their limit part and its successor.
pub fn eta_values(bound: &OrdinalTerm) -> Vec<OrdinalTerm> {
    let (lim, n) = bound.split_finite();
    let mut out: Vec<OrdinalTerm> = (0..=if lim.is_zero() { n } else { 4 }).map(OrdinalTerm::nat).collect();
    if !lim.is_zero() {
        out.push(lim.clone());
        if n > 0 {
            out.push(lim.succ());
        }
    }
    out
}

/// Prediction against `dom(iota_{w^eta})` and `v[w^eta]` computed by the engine.
pub fn verify_second_recurrence(engine: &Engine, eta_bound: &OrdinalTerm) -> Report {
    let start = Instant::now();
    let mut rep = Report::new(
        "second_recurrence",
        json!({ "eta_bound": eta_bound, "nu_offset": engine.axioms.nu_offset }),
    );
    let mut prev: Option<(OrdinalTerm, OrdinalTerm, OrdinalTerm)> = None;
    for eta in eta_values(eta_bound) {
        let pred = match second_recurrence_predict(&engine.params, &eta) {
            Ok(p) => p,
            Err(e) => {
                record_error(&mut rep, &e, json!({ "eta": eta, "side": "prediction" }));
                continue;
            }
        };
        let w_eta = match OrdinalTerm::omega_pow(eta.clone()) {
            Ok(w) => w,
            Err(e) => {
                record_error(&mut rep, &e.into(), json!({ "eta": eta }));
                continue;
            }
        };
        let ctx = match CollapseContext::new(engine, &w_eta) {
            Ok(c) => c,
            Err(e) => {
                record_error(&mut rep, &e, json!({ "eta": eta, "side": "engine" }));
                continue;
            }
        };
        rep.checked += 1;
        let dom_ok = match (&pred.predicted_dom_max, &ctx.dom_max) {
            (PredictedDom::Exact(p), DomMax::Bounded(m)) => Some(p == m),
            (PredictedDom::Unbounded, DomMax::Unbounded) => Some(true),
            (PredictedDom::SomeGamma { .. }, _) => None,
            _ => Some(false),
        };
        let nu_ok = pred.predicted_nu.as_ref().map(|p| *p == ctx.nu_xi);
        match (dom_ok, nu_ok) {
            (Some(false), _) | (_, Some(false)) => rep.disagreed.push(json!({
                "eta": eta,
                "case": pred.case,
                "predicted_dom_max": pred.predicted_dom_max,
                "engine_dom_max": ctx.dom_max,
                "predicted_nu": pred.predicted_nu,
                "engine_nu": ctx.nu_xi,
            })),
            (Some(true), _) => rep.agreed += 1,
            (None, _) => rep.unknown += 1,
        }
        if let (DomMax::Bounded(m), Some(f)) = (&ctx.dom_max, &pred.f_eta) {
            rep.checked += 1;
            match boundary_excluded(engine, &ctx, m) {
                Ok(true) => rep.agreed += 1,
                Ok(false) => rep.disagreed.push(json!({ "eta": eta, "check": "boundary_excluded" })),
                Err(e) => record_error(&mut rep, &e, json!({ "eta": eta, "check": "boundary_excluded" })),
            }
            let len = split_sigma(&OrdinalTerm::alpha(), m).ok().map(|(x, _)| x);
            if let (Some((pf, pm, pl)), Some(l)) = (&prev, &len) {
                rep.checked += 1;
                let mono = compare(pf, f).map(|o| o.is_lt()).unwrap_or(false)
                    && compare(pm, m).map(|o| o.is_le()).unwrap_or(false)
                    && compare(pl, l).map(|o| o.is_lt()).unwrap_or(false);
                if mono {
                    rep.agreed += 1;
                } else {
                    rep.disagreed.push(json!({ "eta": eta, "check": "monotone_lengths" }));
                }
            }
            if let Some(l) = len {
                prev = Some((f.clone(), m.clone(), l));
            }
        }
    }
    rep.wall_time = start.elapsed().as_secs_f64();
    rep
}

/// `v[w^eta] + k[a]*d` with `a*d` the domain maximum is not inside `J_{w^eta}`.
fn boundary_excluded(engine: &Engine, ctx: &CollapseContext, m: &OrdinalTerm) -> EngineResult<bool> {
    let (mult, _) = split_sigma(&OrdinalTerm::alpha(), m)?;
    let d = quotient(&OrdinalTerm::alpha(), &mult)?;
    let edge = add(&ctx.nu_xi, &kappa_alpha_times(&d)?)?;
    Ok(engine.locate_interval(&edge)?.xi != ctx.xi)
}

// ---------------------------------------------------------------------------
// Suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub xis: Vec<OrdinalTerm>,
    pub bound: OrdinalTerm,
    pub eta_max: OrdinalTerm,
    pub unknown_threshold: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            xis: vec![t("1"), t("2"), t("w")],
            bound: t("a*3"),
            eta_max: t("4"),
            unknown_threshold: DEFAULT_UNKNOWN_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub status: String,
    pub reports: Vec<Report>,
    pub invariants: Vec<InvariantResult>,
    pub warnings: Vec<String>,
    pub wall_time: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

/// Grid identity, weak monotonicity of `phi`, and transitivity of engine matrices on grids.
fn collapse_invariants(engine: &Engine, cfg: &SuiteConfig) -> Vec<InvariantResult> {
    let mut grid = InvariantResult { name: "phi_inverts_iota".into(), checked: 0, failures: vec![] };
    let mut mono = InvariantResult { name: "phi_weakly_monotone".into(), checked: 0, failures: vec![] };
    let mut trans = InvariantResult { name: "engine_matrices_transitive".into(), checked: 0, failures: vec![] };
    for xi in &cfg.xis {
        let Ok(ctx) = CollapseContext::new(engine, xi) else { continue };
        let Ok(pts) = grid_points(&ctx, &cfg.bound, &default_gammas()) else { continue };
        let mut images = Vec::new();
        for lam in &pts {
            grid.checked += 1;
            match ctx.iota(lam).and_then(|b| ctx.phi(&b).map(|l| (b, l))) {
                Ok((b, l)) if l == *lam => images.push(b),
                Ok((_, l)) => grid.failures.push(format!("xi={xi}: phi(iota({lam})) = {l}")),
                Err(e) => grid.failures.push(format!("xi={xi}: {lam}: {e}")),
            }
        }
        for w in images.windows(2) {
            mono.checked += 1;
            let ok = matches!(
                (ctx.phi(&w[0]), ctx.phi(&w[1])),
                (Ok(x), Ok(y)) if compare(&x, &y).map(|o| o.is_le()).unwrap_or(false)
            );
            if !ok {
                mono.failures.push(format!("xi={xi}: {} .. {}", w[0], w[1]));
            }
        }
        let mut pts_rho = vec![ctx.nu_xi.clone()];
        pts_rho.extend(images);
        trans.checked += 1;
        if let Err(e) = engine.pattern(Level::Rho, &pts_rho) {
            trans.failures.push(format!("xi={xi}: {e}"));
        }
    }
    vec![grid, mono, trans]
}

pub fn run_suite(engine: &Engine, cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    for xi in &cfg.xis {
        reports.push(verify_order_reduction(engine, xi, &cfg.bound));
    }
    reports.push(verify_second_recurrence(engine, &cfg.eta_max));
    if cfg.xis.is_empty() {
        warnings.push("no interval indices configured; order reduction checked vacuously".into());
    }
    let invariants = collapse_invariants(engine, cfg);
    let ok = reports.iter().all(|r| r.passed(cfg.unknown_threshold)) && invariants.iter().all(|i| i.failures.is_empty());
    SuiteReport {
        status: if ok { "PASS" } else { "FAIL" }.into(),
        reports,
        invariants,
        warnings,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::AxiomTable;

    #[test]
    fn finite_predictions() {
        let p = StructureParams::default();
        let r0 = second_recurrence_predict(&p, &t("0")).unwrap();
        assert_eq!(r0.case, RecurrenceCase::C1a);
        assert_eq!(r0.predicted_dom_max, PredictedDom::Exact(t("a")));
        assert_eq!(r0.predicted_nu, Some(t("k[a]*2")));
        let r1 = second_recurrence_predict(&p, &t("1")).unwrap();
        assert_eq!(r1.predicted_dom_max, PredictedDom::Exact(t("a*2")));
        assert_eq!(r1.f_eta, Some(t("a*2")));
        assert_eq!(r1.predicted_nu, Some(t("k[a]*(w)")));
        let r3 = second_recurrence_predict(&p, &t("3")).unwrap();
        assert_eq!(r3.f_eta, Some(t("a*4")));
        assert!(matches!(second_recurrence_predict(&p, &t("w")), Err(EngineError::OracleGap(_))));
    }

    #[test]
    fn successor_multiple_switches_case() {
        let mut p = StructureParams::default();
        p.oracle.insert(t("a*(w)"), t("a*(w+1)"));
        let r = second_recurrence_predict(&p, &t("w")).unwrap();
        assert_eq!(r.case, RecurrenceCase::C1b);
        assert_eq!(r.predicted_dom_max, PredictedDom::Exact(t("a*(w+1)")));
    }

    #[test]
    fn last_interval_cases() {
        let mut p = StructureParams { theta2: crate::params::Theta2Mode::Successor(t("w^2")), ..Default::default() };
        assert_eq!(second_recurrence_predict(&p, &t("2")).unwrap().case, RecurrenceCase::C2a);
        p.alpha_plus_one_is_theta1 = true;
        let r = second_recurrence_predict(&p, &t("2")).unwrap();
        assert_eq!((r.case, r.predicted_dom_max), (RecurrenceCase::C3, PredictedDom::Unbounded));
    }

    #[test]
    fn reports_on_defaults_and_mutation() {
        let e = Engine::with_defaults();
        let r = verify_order_reduction(&e, &t("w"), &t("a*3"));
        assert!(r.passed(DEFAULT_UNKNOWN_THRESHOLD), "{r:?}");
        let r = verify_second_recurrence(&e, &t("4"));
        assert!(r.passed(DEFAULT_UNKNOWN_THRESHOLD), "{r:?}");
        let m = Engine::new(StructureParams::default(), AxiomTable { nu_offset: 2, ..Default::default() }).unwrap();
        assert!(!verify_order_reduction(&m, &t("1"), &t("a*3")).passed(DEFAULT_UNKNOWN_THRESHOLD));
        assert!(!verify_second_recurrence(&m, &t("4")).passed(DEFAULT_UNKNOWN_THRESHOLD));
    }
}
