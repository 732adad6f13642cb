mod common;

use common::{kr, terms};
use ordpat::engine::{AxiomTable, Engine, Truth};
use ordpat::params::StructureParams;
use ordpat::term::{t, Level};

fn decided(e: &Engine, level: Level, k: u8, a: &str, b: &str) -> Option<bool> {
    e.leq_k(level, k, &t(a), &t(b)).decided()
}

#[test]
fn finite_interval_starts_follow_the_offset() {
    let e = Engine::with_defaults();
    assert_eq!(e.nu_of(&t("1")).unwrap(), t("k[a]*2"));
    assert_eq!(e.nu_of(&t("3")).unwrap(), t("k[a]*4"));
    assert_eq!(e.nu_of(&t("w")).unwrap(), t("k[a]*(w)"));
}

#[test]
fn small_region_separates_components() {
    let e = Engine::with_defaults();
    assert_eq!(decided(&e, Level::Rho, 1, "k[1]", "k[2]"), Some(false));
    assert_eq!(decided(&e, Level::Rho, 1, "0", "k[a]"), Some(false));
    assert_eq!(decided(&e, Level::Rho, 1, "k[1]", "k[1]+1"), None);
}

#[test]
fn interval_start_relations() {
    let e = Engine::with_defaults();
    assert_eq!(decided(&e, Level::Rho, 1, "v[1]", "k[a]*2+k[1]"), Some(true));
    assert_eq!(decided(&e, Level::Rho, 2, "v[1]", "k[a]*2+k[1]"), Some(false));
    assert_eq!(decided(&e, Level::Rho, 2, "v[1]", "k[a]*3"), Some(false));
    assert_eq!(decided(&e, Level::Rho, 2, "v[w]", "k[a]*(w+1)+k[3]"), Some(false));
    assert_eq!(decided(&e, Level::Rho, 1, "k[a]", "k[a]*2"), Some(true));
}

#[test]
fn relations_are_reflexive_and_nested() {
    let e = Engine::with_defaults();
    let pts = terms(&["0", "k[1]", "k[a]", "k[a]+k[2]", "k[a]*2", "k[a]*2+k[1]", "k[a]*3", "k[a]*(w)", "k[a]*(w+1)"]);
    for a in &pts {
        assert_eq!(e.leq_k(Level::Rho, 2, a, a).truth, Truth::True);
        for b in &pts {
            if e.leq_k(Level::Rho, 2, a, b).decided() == Some(true) {
                assert_ne!(e.leq_k(Level::Rho, 1, a, b).decided(), Some(false), "{a} <=2 {b} but not <=1");
            }
        }
    }
}

#[test]
fn finite_alpha_multiples_are_discrete() {
    let e = Engine::with_defaults();
    for (a, b) in [("a", "a*2"), ("a*2", "a*3"), ("0", "a")] {
        assert_eq!(decided(&e, Level::Alpha, 1, a, b), Some(false), "{a} {b}");
    }
}

#[test]
fn engine_patterns_are_transitive() {
    let e = Engine::with_defaults();
    let pts = vec![t("0"), kr(1), t("k[a]"), t("k[a]*2"), t("k[a]*2+k[1]"), t("k[a]*3"), t("k[a]*3+k[2]")];
    let p = e.pattern(Level::Rho, &pts).unwrap();
    p.validate().unwrap();
    for k in 1..=2 {
        for i in 0..p.len() {
            for j in i..p.len() {
                for l in j..p.len() {
                    if p.rel(k, i, j) && p.rel(k, j, l) {
                        assert!(p.rel(k, i, l));
                    }
                }
            }
        }
    }
}

#[test]
fn undecided_pairs_make_patterns_fail() {
    let e = Engine::with_defaults();
    assert!(e.pattern(Level::Rho, &[kr(1), t("k[1]+1")]).is_err());
}

#[test]
fn disabled_axioms_leave_queries_unknown() {
    let axioms = AxiomTable { nu_leq1_all: false, ..Default::default() };
    let e = Engine::new(StructureParams::default(), axioms).unwrap();
    assert_eq!(decided(&e, Level::Rho, 1, "v[1]", "k[a]*2+k[1]"), None);
}

#[test]
fn verdicts_carry_the_rule_used() {
    let e = Engine::with_defaults();
    let v = e.leq_k(Level::Rho, 2, &t("v[1]"), &t("k[a]*3"));
    assert_eq!(v.decided(), Some(false));
    assert!(!v.trace.is_empty());
}
