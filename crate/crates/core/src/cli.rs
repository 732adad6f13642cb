//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failure or domain error, 2 usage or parse error, 3 outcome limited
//! by missing level-alpha table entries.
//!
//! Config files hold `key = value` lines; `#` starts a comment. Keys:
//! `rho`, `theta2` (`infinite` or a term), `alpha_plus_one_is_theta1`, `nu_offset`,
//! `level_shift`, `depth_bound`, `coeff_bound`, `unknown_threshold` and `oracle[KEY]` whose
//! value is the maximum of the level-alpha component at `KEY`. Flags override the file.

use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::collapse::CollapseContext;
use crate::constructions::{self as cons, ConstructionError};
use crate::engine::{AxiomTable, Engine, EngineError, Truth, VerdictRecord};
use crate::params::{StructureParams, Theta2Mode};
use crate::pattern::{
    find_covering, interval_decomposition, is_closed, is_incompressible, rho_index, small_universe, verify_covering,
    Constraints, CoveringKind, CoveringMap, PatternError, DEFAULT_NODE_BUDGET,
};
use crate::term::parse::{parse_with_bounds, ParseError, DEFAULT_COEFF_BOUND, DEFAULT_DEPTH_BOUND};
use crate::term::{Level, OrdinalTerm};
use crate::verifier::{self, Report, SuiteConfig, DEFAULT_UNKNOWN_THRESHOLD};

#[derive(Debug, Parser)]
#[command(name = "ordpat", version, about = "Queries on patterns of resemblance of order two")]
pub struct Cli {
    /// Key-value parameter file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub json: bool,
    /// Accepted and ignored; every computation is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub nu_offset: Option<u64>,
    #[arg(long, global = true)]
    pub no_level_shift: bool,
    /// `infinite` or the last interval index.
    #[arg(long, global = true)]
    pub theta2: Option<String>,
    #[arg(long, global = true)]
    pub theta1_boundary: bool,
    /// Level-alpha table entry `KEY=MAX`; repeatable.
    #[arg(long = "oracle", global = true)]
    pub oracle: Vec<String>,
    #[arg(long, global = true)]
    pub depth_bound: Option<usize>,
    #[arg(long, global = true)]
    pub coeff_bound: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Rho,
    Alpha,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Rho => Level::Rho,
            LevelArg::Alpha => Level::Alpha,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the normal form of a term.
    Norm { term: String },
    /// Decide `a <=_k b`.
    Rel {
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long, value_enum, default_value = "rho")]
        level: LevelArg,
        a: String,
        b: String,
    },
    /// Interval decomposition of a comma-separated set.
    Decomp { set: String },
    /// Whether a set is closed under floors of `sigma`.
    Closed {
        set: String,
        #[arg(long, default_value = "k[a]")]
        sigma: String,
    },
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Incompressibility of a set below `k[a]` in a small universe.
    Incompr {
        set: String,
        #[arg(long, default_value = "1,2,3,4,w")]
        index_sample: String,
    },
    Iota {
        #[arg(long)]
        xi: String,
        lambda: String,
    },
    Phi {
        #[arg(long)]
        xi: String,
        beta: String,
    },
    Dom {
        #[arg(long)]
        xi: String,
    },
    #[command(subcommand)]
    Construct(ConstructCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Subcommand)]
pub enum CoverCmd {
    /// Least covering of SOURCE into UNIVERSE.
    Find {
        source: String,
        universe: String,
        #[arg(long, value_enum, default_value = "rho")]
        level: LevelArg,
        /// Source positions to keep fixed.
        #[arg(long, value_delimiter = ',')]
        fix: Vec<usize>,
        #[arg(long)]
        above: Option<String>,
        #[arg(long)]
        cap: Option<String>,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Check a map given as `x->y, ...`.
    Check {
        map: String,
        #[arg(long, value_enum, default_value = "rho")]
        level: LevelArg,
        #[arg(long, value_enum, default_value = "covering")]
        kind: KindArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Covering,
    Embedding,
    Isomorphism,
}

#[derive(Debug, Args)]
pub struct SearchOpts {
    #[arg(long, default_value = "1,2,3,4,w")]
    pub index_sample: String,
    #[arg(long, default_value_t = cons::DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Subcommand)]
pub enum ConstructCmd {
    /// Replace local parts block by block; `--replace "MU; x->y, ..."`.
    Lift {
        set: String,
        #[arg(long)]
        replace: Vec<String>,
        #[command(flatten)]
        opts: SearchOpts,
    },
    /// Check the index lower bound for a map `x->y, ...` on its domain.
    IndexBound {
        map: String,
        #[command(flatten)]
        opts: SearchOpts,
    },
    /// Reduce a family of sets given by repeated `--member`.
    Family {
        set: String,
        #[arg(long)]
        member: Vec<String>,
        #[command(flatten)]
        opts: SearchOpts,
    },
    /// Shift isomorphism between the intervals at `w^eta1` and `w^eta2`.
    SegmentIso {
        eta1: String,
        eta2: String,
        #[arg(long, default_value = "1,2,w")]
        gammas: String,
    },
    /// Domain inclusion between the collapses at `w^eta'` and `w^eta`.
    DomInclusion { eta_prime: String, eta: String },
    /// Lift a level-alpha map `s->t, ...` to the interval at XI.
    GPrime {
        #[arg(long)]
        xi: String,
        set: String,
        map: String,
    },
    /// Push a level-rho map on ZSTAR down to the level-alpha set.
    HPrime {
        #[arg(long)]
        xi: String,
        set: String,
        zstar: String,
        map: String,
        #[command(flatten)]
        opts: SearchOpts,
    },
    /// Cover Y into an interval indexed by a power of omega.
    PushDown {
        #[arg(long)]
        xi: String,
        #[arg(long)]
        nu: String,
        set: String,
        #[arg(long, default_value = "1,2,w")]
        gammas: String,
        #[arg(long, default_value_t = cons::DEFAULT_BUDGET)]
        budget: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    OrderReduction {
        #[arg(long, default_value = "1")]
        xi: String,
        #[arg(long, default_value = "a*3")]
        bound: String,
        #[arg(long)]
        unknown_threshold: Option<f64>,
    },
    Recurrence2 {
        #[arg(long, default_value = "4")]
        eta_max: String,
        #[arg(long)]
        unknown_threshold: Option<f64>,
    },
    Suite {
        #[arg(long, default_value = "1,2,w")]
        xis: String,
        #[arg(long, default_value = "a*3")]
        bound: String,
        #[arg(long, default_value = "4")]
        eta_max: String,
        #[arg(long)]
        unknown_threshold: Option<f64>,
    },
}

/// Exit status and the two output streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Parse(ParseError),
    Domain { kind: String, msg: String, gap: bool },
}

fn variant_name(dbg: &str) -> &str {
    dbg.split(|c: char| c == '(' || c == ' ' || c == '{').next().unwrap_or(dbg)
}

macro_rules! domain_from {
    ($($t:ty => $name:literal),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                let dbg = format!("{e:?}");
                let gap = dbg.contains("OracleGap");
                CliError::Domain { kind: format!("{}::{}", $name, variant_name(&dbg)), msg: e.to_string(), gap }
            }
        }
    )*};
}

domain_from!(EngineError => "EngineError", PatternError => "PatternError", ConstructionError => "ConstructionError",
    crate::term::TermError => "TermError", crate::params::ParamError => "ParamError");

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Parse(e)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Settings merged from the config file and flags.
#[derive(Debug, Clone)]
struct Settings {
    params: StructureParams,
    axioms: AxiomTable,
    level_shift: bool,
    depth: usize,
    coeff: u64,
    unknown_threshold: f64,
}

impl Settings {
    fn term(&self, s: &str) -> CliResult<OrdinalTerm> {
        Ok(parse_with_bounds(s.trim(), self.depth, self.coeff)?)
    }

    fn terms(&self, s: &str) -> CliResult<Vec<OrdinalTerm>> {
        split_top(s, ',').into_iter().filter(|p| !p.trim().is_empty()).map(|p| self.term(p)).collect()
    }

    fn pairs(&self, s: &str) -> CliResult<Vec<(OrdinalTerm, OrdinalTerm)>> {
        split_top(s, ',')
            .into_iter()
            .filter(|p| !p.trim().is_empty())
            .map(|p| match p.split_once("->") {
                Some((x, y)) => Ok((self.term(x)?, self.term(y)?)),
                None => Err(CliError::Usage(format!("expected x->y, got {p:?}"))),
            })
            .collect()
    }

    fn engine(&self) -> CliResult<Engine> {
        let e = Engine::new(self.params.clone(), self.axioms.clone())?;
        Ok(if self.level_shift { e } else { e.without_level_shift() })
    }
}

/// Splits at `sep` outside brackets and parentheses.
pub fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    v.parse().map_err(|_| CliError::Usage(format!("{key}: expected true or false, got {v:?}")))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::Usage(format!("{key}: expected a number, got {v:?}")))
}

fn settings(cli: &Cli) -> CliResult<Settings> {
    let mut s = Settings {
        params: StructureParams::default(),
        axioms: AxiomTable::default(),
        level_shift: true,
        depth: DEFAULT_DEPTH_BOUND,
        coeff: DEFAULT_COEFF_BOUND,
        unknown_threshold: DEFAULT_UNKNOWN_THRESHOLD,
    };
    let mut oracle_lines: Vec<(String, String)> = Vec::new();
    let mut theta2 = None;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            match k {
                "rho" => s.params.rho = s.term(v)?,
                "theta2" => theta2 = Some(v.to_string()),
                "alpha_plus_one_is_theta1" => s.params.alpha_plus_one_is_theta1 = parse_bool(k, v)?,
                "nu_offset" => s.axioms.nu_offset = parse_num(k, v)?,
                "level_shift" => s.level_shift = parse_bool(k, v)?,
                "depth_bound" => s.depth = parse_num(k, v)?,
                "coeff_bound" => s.coeff = parse_num(k, v)?,
                "unknown_threshold" => s.unknown_threshold = parse_num(k, v)?,
                _ if k.starts_with("oracle[") && k.ends_with(']') => {
                    oracle_lines.push((k[7..k.len() - 1].to_string(), v.to_string()))
                }
                _ => return Err(CliError::Usage(format!("config line {}: unknown key {k:?}", n + 1))),
            }
        }
    }
    if let Some(d) = cli.depth_bound {
        s.depth = d;
    }
    if let Some(c) = cli.coeff_bound {
        s.coeff = c;
    }
    if let Some(o) = cli.nu_offset {
        s.axioms.nu_offset = o;
    }
    if cli.no_level_shift {
        s.level_shift = false;
    }
    if cli.theta1_boundary {
        s.params.alpha_plus_one_is_theta1 = true;
    }
    for o in &cli.oracle {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Usage(format!("--oracle expects KEY=MAX, got {o:?}")))?;
        oracle_lines.push((k.to_string(), v.to_string()));
    }
    for (k, v) in oracle_lines {
        let (k, v) = (s.term(&k)?, s.term(&v)?);
        s.params.oracle.insert(k, v);
    }
    if let Some(t) = cli.theta2.clone().or(theta2) {
        s.params.theta2 = if t.trim() == "infinite" { Theta2Mode::Infinite } else { Theta2Mode::Successor(s.term(&t)?) };
    }
    Ok(s)
}

/// Collected output of a command.
struct Out {
    json: bool,
    text: String,
    value: Value,
    code: i32,
}

impl Out {
    fn new(json: bool) -> Self {
        Out { json, text: String::new(), value: Value::Null, code: 0 }
    }

    fn line(&mut self, s: impl Display) {
        self.text.push_str(&s.to_string());
        self.text.push('\n');
    }

    fn set<T: Serialize>(&mut self, v: &T) {
        self.value = serde_json::to_value(v).expect("serializable output");
    }

    fn render(self) -> (i32, String) {
        let body = if self.json {
            let mut s = serde_json::to_string_pretty(&self.value).expect("json");
            s.push('\n');
            s
        } else {
            self.text
        };
        (self.code, body)
    }
}

fn show(xs: &[OrdinalTerm]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn show_map(pairs: &[(OrdinalTerm, OrdinalTerm)]) -> String {
    pairs.iter().map(|(x, y)| format!("{x}->{y}")).collect::<Vec<_>>().join(", ")
}

fn map_from_pairs(
    engine: &Engine,
    level: Level,
    pairs: &[(OrdinalTerm, OrdinalTerm)],
    kind: CoveringKind,
) -> CliResult<CoveringMap> {
    let src: Vec<OrdinalTerm> = pairs.iter().map(|p| p.0.clone()).collect();
    let source = engine.pattern(level, &src)?;
    let mut images = Vec::with_capacity(source.len());
    for x in &source.carrier {
        let y = pairs.iter().find(|p| p.0 == *x).map(|p| p.1.clone()).expect("resolved source");
        images.push(y);
    }
    let target = engine.pattern(level, &images)?;
    Ok(CoveringMap::from_images(source, target, &images, kind)?)
}

fn report_out(out: &mut Out, r: &Report, threshold: f64) {
    let pass = r.passed(threshold);
    let status = if pass { "PASS" } else if r.only_oracle_gaps() { "ORACLE_GAP" } else { "FAIL" };
    out.line(format!(
        "{} {}: checked={} agreed={} disagreed={} unknown={} oracle_gaps={} time={:.3}s",
        status,
        r.theorem,
        r.checked,
        r.agreed,
        r.disagreed.len(),
        r.unknown,
        r.oracle_gaps,
        r.wall_time
    ));
    for d in &r.disagreed {
        out.line(format!("  disagreement: {d}"));
    }
    out.set(r);
    out.code = if pass { 0 } else if r.only_oracle_gaps() { 3 } else { 1 };
}

fn execute(cli: &Cli, s: &Settings) -> CliResult<Out> {
    let mut out = Out::new(cli.json);
    match &cli.command {
        Command::Norm { term } => {
            let x = s.term(term)?;
            out.line(&x);
            out.set(&json!({ "term": x }));
        }
        Command::Rel { k, level, a, b } => {
            if !matches!(k, 1 | 2) {
                return Err(CliError::Usage(format!("--k must be 1 or 2, got {k}")));
            }
            let e = s.engine()?;
            let (a, b) = (s.term(a)?, s.term(b)?);
            let lv = Level::from(*level);
            let v = e.leq_k(lv, *k, &a, &b);
            let rec = VerdictRecord::new(lv, *k, &a, &b, &v);
            out.line(format!("{a} <={k} {b}: {}", rec.verdict));
            for step in &rec.trace {
                out.line(format!("  by {step}"));
            }
            if let Truth::Unknown(_) = v.truth {
                out.code = if v.is_oracle_gap() { 3 } else { 0 };
            }
            out.set(&rec);
        }
        Command::Decomp { set } => {
            let d = interval_decomposition(&s.terms(set)?)?;
            for (mu, r) in d.m.iter().zip(&d.r) {
                out.line(format!("{mu}: {{{}}}", show(r)));
            }
            out.set(&d);
        }
        Command::Closed { set, sigma } => {
            let xs = s.terms(set)?;
            let sigma = s.term(sigma)?;
            let c = is_closed(&xs, &sigma)?;
            out.line(c);
            out.set(&json!({ "sigma": sigma, "closed": c }));
        }
        Command::Cover(CoverCmd::Find { source, universe, level, fix, above, cap, budget }) => {
            let e = s.engine()?;
            let lv = Level::from(*level);
            let src = e.pattern(lv, &s.terms(source)?)?;
            let mut pts = s.terms(universe)?;
            pts.extend(src.carrier.iter().cloned());
            let uni = e.pattern(lv, &pts)?;
            let c = Constraints {
                fix: fix.clone(),
                above: above.as_deref().map(|x| s.term(x)).transpose()?,
                cap: cap.as_deref().map(|x| s.term(x)).transpose()?,
            };
            let (h, stats) = find_covering(&src, &uni, &c, *budget)?;
            match h {
                Some(h) => {
                    let cert = verify_covering(&h)?;
                    out.line(show_map(&cert.map));
                    out.set(&json!({ "found": true, "nodes": stats.nodes, "certificate": cert }));
                }
                None => {
                    out.line("no covering");
                    out.set(&json!({ "found": false, "nodes": stats.nodes }));
                    out.code = 1;
                }
            }
        }
        Command::Cover(CoverCmd::Check { map, level, kind }) => {
            let e = s.engine()?;
            let kind = match kind {
                KindArg::Covering => CoveringKind::Covering,
                KindArg::Embedding => CoveringKind::Embedding,
                KindArg::Isomorphism => CoveringKind::Isomorphism,
            };
            let h = map_from_pairs(&e, Level::from(*level), &s.pairs(map)?, kind)?;
            match verify_covering(&h) {
                Ok(cert) => {
                    out.line(format!("valid ({} pairs checked)", cert.checked.len()));
                    out.set(&cert);
                }
                Err(err) => {
                    out.line(format!("invalid: {err}"));
                    out.set(&json!({ "valid": false, "error": err.to_string() }));
                    out.code = 1;
                }
            }
        }
        Command::Incompr { set, index_sample } => {
            let e = s.engine()?;
            let xs = s.terms(set)?;
            let uni = e.pattern(Level::Rho, &small_universe(&xs, &s.terms(index_sample)?)?)?;
            let z = uni.restrict_to(&xs)?;
            let r = is_incompressible(&z, &uni, &rho_index, DEFAULT_NODE_BUDGET)?;
            out.line(if r.holds { "incompressible".to_string() } else { format!("compressible: {:?}", r.witness) });
            out.set(&r);
        }
        Command::Iota { xi, lambda } => {
            let e = s.engine()?;
            let ctx = CollapseContext::new(&e, &s.term(xi)?)?;
            let y = ctx.iota(&s.term(lambda)?)?;
            out.line(&y);
            out.set(&json!({ "value": y }));
        }
        Command::Phi { xi, beta } => {
            let e = s.engine()?;
            let ctx = CollapseContext::new(&e, &s.term(xi)?)?;
            let y = ctx.phi(&s.term(beta)?)?;
            out.line(&y);
            out.set(&json!({ "value": y }));
        }
        Command::Dom { xi } => {
            let e = s.engine()?;
            let ctx = CollapseContext::new(&e, &s.term(xi)?)?;
            match &ctx.dom_max {
                crate::collapse::DomMax::Bounded(m) => out.line(format!("[0, {m}]")),
                crate::collapse::DomMax::Unbounded => out.line("unbounded"),
            }
            out.set(&ctx);
        }
        Command::Construct(c) => construct(c, s, &mut out)?,
        Command::Verify(v) => {
            let e = s.engine()?;
            match v {
                VerifyCmd::OrderReduction { xi, bound, unknown_threshold } => {
                    let r = verifier::verify_order_reduction(&e, &s.term(xi)?, &s.term(bound)?);
                    report_out(&mut out, &r, unknown_threshold.unwrap_or(s.unknown_threshold));
                }
                VerifyCmd::Recurrence2 { eta_max, unknown_threshold } => {
                    let r = verifier::verify_second_recurrence(&e, &s.term(eta_max)?);
                    report_out(&mut out, &r, unknown_threshold.unwrap_or(s.unknown_threshold));
                }
                VerifyCmd::Suite { xis, bound, eta_max, unknown_threshold } => {
                    let cfg = SuiteConfig {
                        xis: s.terms(xis)?,
                        bound: s.term(bound)?,
                        eta_max: s.term(eta_max)?,
                        unknown_threshold: unknown_threshold.unwrap_or(s.unknown_threshold),
                    };
                    let rep = verifier::run_suite(&e, &cfg);
                    let mut sub = Out::new(false);
                    for r in &rep.reports {
                        report_out(&mut sub, r, cfg.unknown_threshold);
                    }
                    out.text = sub.text;
                    for i in &rep.invariants {
                        out.line(format!(
                            "{} {}: checked={} failures={}",
                            if i.failures.is_empty() { "PASS" } else { "FAIL" },
                            i.name,
                            i.checked,
                            i.failures.len()
                        ));
                    }
                    for w in &rep.warnings {
                        out.line(format!("warning: {w}"));
                    }
                    out.line(format!("suite: {}", rep.status));
                    out.code = if rep.passed() { 0 } else { 1 };
                    out.set(&rep);
                }
            }
        }
    }
    Ok(out)
}

fn construct(c: &ConstructCmd, s: &Settings, out: &mut Out) -> CliResult<()> {
    let e = s.engine()?;
    let certified = |out: &mut Out, h: &cons::Certified| {
        out.line(show_map(&h.certificate.map));
        out.set(h);
    };
    match c {
        ConstructCmd::Lift { set, replace, opts } => {
            let mut blocks = Vec::new();
            for r in replace {
                let (mu, map) = r
                    .split_once(';')
                    .ok_or_else(|| CliError::Usage(format!("--replace expects \"MU; x->y, ...\", got {r:?}")))?;
                blocks.push((s.term(mu)?, map_from_pairs(&e, Level::Rho, &s.pairs(map)?, CoveringKind::Covering)?));
            }
            let h = cons::lift_covering_decomposition(&e, &s.terms(set)?, &blocks, &s.terms(&opts.index_sample)?, opts.budget)?;
            certified(out, &h);
        }
        ConstructCmd::IndexBound { map, opts } => {
            let pairs = s.pairs(map)?;
            let h = map_from_pairs(&e, Level::Rho, &pairs, CoveringKind::Covering)?;
            let cert = cons::index_lower_bound_check(&e, &h.source.carrier, &h, &s.terms(&opts.index_sample)?, opts.budget)?;
            for (x, y, b) in &cert.checked {
                out.line(format!("{x} -> {y} >= {b}"));
            }
            out.set(&cert);
        }
        ConstructCmd::Family { set, member, opts } => {
            let fam = member.iter().map(|m| s.terms(m)).collect::<CliResult<Vec<_>>>()?;
            let red = cons::family_reduce(&e, &s.terms(set)?, &fam, &s.terms(&opts.index_sample)?, opts.budget)?;
            out.line(format!("R = {{{}}}", show(&red.r)));
            out.line(format!("kept = {:?}", red.kept));
            for l in &red.lifts {
                out.line(format!("  {}", show_map(&l.certificate.map)));
            }
            out.set(&red);
        }
        ConstructCmd::SegmentIso { eta1, eta2, gammas } => {
            let h = cons::initial_segment_iso(&e, &s.term(eta1)?, &s.term(eta2)?, &s.terms(gammas)?)?;
            certified(out, &h);
        }
        ConstructCmd::DomInclusion { eta_prime, eta } => {
            let b = cons::dom_inclusion_check(&e, &s.term(eta_prime)?, &s.term(eta)?)?;
            out.line(b);
            out.set(&json!({ "included": b }));
            if !b {
                out.code = 1;
            }
        }
        ConstructCmd::GPrime { xi, set, map } => {
            let ctx = CollapseContext::new(&e, &s.term(xi)?)?;
            let g = map_from_pairs(&e, Level::Alpha, &s.pairs(map)?, CoveringKind::Covering)?;
            let h = cons::lift_g_prime(&e, &ctx, &s.terms(set)?, &g)?;
            certified(out, &h);
        }
        ConstructCmd::HPrime { xi, set, zstar, map, opts } => {
            let ctx = CollapseContext::new(&e, &s.term(xi)?)?;
            let h = map_from_pairs(&e, Level::Rho, &s.pairs(map)?, CoveringKind::Covering)?;
            let hp = cons::push_h_prime(
                &e,
                &ctx,
                &s.terms(set)?,
                &s.terms(zstar)?,
                &h,
                &s.terms(&opts.index_sample)?,
                opts.budget,
            )?;
            certified(out, &hp);
        }
        ConstructCmd::PushDown { xi, nu, set, gammas, budget } => {
            let p = cons::push_down_covering(&e, &s.term(xi)?, &s.term(nu)?, &s.terms(set)?, &s.terms(gammas)?, *budget)?;
            out.line(format!("eta = {} (via interval {})", p.eta, p.xi_prime));
            out.line(show_map(&p.h.certificate.map));
            out.set(&p);
        }
    }
    Ok(())
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let result = settings(&cli).and_then(|s| execute(&cli, &s));
    match result {
        Ok(out) => {
            let (code, stdout) = out.render();
            Outcome { code, stdout, stderr: String::new() }
        }
        Err(err) => {
            let (code, msg, kind) = match err {
                CliError::Usage(m) => (2, m, "UsageError".to_string()),
                CliError::Parse(p) => (2, p.to_string(), "ParseError".to_string()),
                CliError::Domain { kind, msg, gap } => (if gap { 3 } else { 1 }, msg, kind),
            };
            let stdout = if cli.json {
                format!("{}\n", json!({ "error": kind, "message": msg }))
            } else {
                String::new()
            };
            Outcome { code, stdout, stderr: format!("error[{kind}]: {msg}\n") }
        }
    }
}
