mod common;

use std::cmp::Ordering;

use common::{moduli, pool, triple};
use ordpat::term::{add, compare, divides, mul_nat, parse, split_sigma, sub_left, t, OrdinalTerm};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn display_reparses((_, x, _, _) in triple()) {
        prop_assert_eq!(parse(&x.to_string()).unwrap(), x.clone());
        prop_assert!(x.is_normal());
    }

    #[test]
    fn addition_is_associative((_, x, y, z) in triple()) {
        let l = add(&add(&x, &y).unwrap(), &z).unwrap();
        let r = add(&x, &add(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn smaller_terms_are_absorbed((s, x, _, _) in triple()) {
        for p in pool(s).iter().filter(|p| p.is_indecomposable()) {
            if compare(&x, p).unwrap() == Ordering::Less {
                prop_assert_eq!(&add(&x, p).unwrap(), p);
            }
        }
    }

    #[test]
    fn split_reassembles((s, x, _, _) in triple()) {
        for m in moduli(s) {
            let (f, r) = split_sigma(&m, &x).unwrap();
            prop_assert_eq!(add(&f, &r).unwrap(), x.clone());
            prop_assert!(divides(&m, &f).unwrap());
            prop_assert_eq!(compare(&r, &m).unwrap(), Ordering::Less);
        }
    }

    #[test]
    fn left_subtraction_inverts_addition((_, x, y, _) in triple()) {
        let xy = add(&x, &y).unwrap();
        prop_assert_eq!(add(&x, &sub_left(&x, &xy).unwrap()).unwrap(), xy);
    }

    #[test]
    fn comparison_is_a_total_order((_, x, y, z) in triple()) {
        let a = compare(&x, &y).unwrap();
        prop_assert_eq!(a, compare(&y, &x).unwrap().reverse());
        prop_assert_eq!(a == Ordering::Equal, x == y);
        if a != Ordering::Greater && compare(&y, &z).unwrap() != Ordering::Greater {
            prop_assert_ne!(compare(&x, &z).unwrap(), Ordering::Greater);
        }
    }
}

#[test]
fn zero_is_neutral() {
    for s in 0..4 {
        for x in pool(s) {
            assert_eq!(add(&x, &OrdinalTerm::zero()).unwrap(), x);
            assert_eq!(add(&OrdinalTerm::zero(), &x).unwrap(), x);
        }
    }
}

#[test]
fn finite_arithmetic() {
    assert_eq!(add(&t("3"), &t("4")), Ok(t("7")));
    assert_eq!(add(&t("3"), &t("w")), Ok(t("w")));
    assert_eq!(add(&t("w"), &t("3")).unwrap().to_string(), "w+3");
    assert_eq!(mul_nat(&t("w+1"), 3), Ok(t("w*3+1")));
}

#[test]
fn atoms_of_different_sorts_order_as_expected() {
    let chain = ["5", "w^w", "r", "k[1]", "k[w]", "v[1]", "v[w]"];
    for pair in chain.windows(2) {
        assert_eq!(compare(&t(pair[0]), &t(pair[1])), Ok(Ordering::Less), "{} < {}", pair[0], pair[1]);
    }
}

#[test]
fn kappa_at_its_own_level_is_alpha() {
    assert_eq!(t("k[a,a]"), t("a"));
}

#[test]
fn nu_and_kappa_alpha_are_incomparable() {
    assert!(compare(&t("v[1]"), &t("k[a]")).is_err());
}

#[test]
fn malformed_input_is_rejected() {
    for s in ["", "w+", "k[", "3*", "v[]", "w^^2"] {
        assert!(parse(s).is_err(), "{s:?} should not parse");
    }
}
