mod common;

use common::{chain_carrier, indexed_carrier, kr, structures, terms};
use ordpat::pattern::{
    brute, find_covering, interval_decomposition, is_closed, is_incompressible, rho_index, search_maps, sorted_set,
    verify_covering, Constraints, CoveringKind, CoveringMap, FinitePattern, Provenance,
};
use ordpat::term::{index_of, t};

#[test]
fn covering_search_matches_brute_force() {
    let pats = structures(&chain_carrier(6), 4);
    for src_all in &pats {
        for uni in &pats {
            for k in 1..=3 {
                for idx in brute::combinations(6, k) {
                    let src = src_all.restrict(&idx);
                    for c in [Constraints::default(), Constraints { fix: vec![0], ..Default::default() }] {
                        let (found, _) = find_covering(&src, uni, &c, u64::MAX).unwrap();
                        assert_eq!(found.map(|h| h.map), brute::least_covering_reverse_scan(&src, uni, &c));
                        let mut all = Vec::new();
                        search_maps(&src, uni, &c, CoveringKind::Covering, u64::MAX, &mut |m| {
                            all.push(m.to_vec());
                            true
                        })
                        .unwrap();
                        assert_eq!(all, brute::all_coverings(&src, uni, &c));
                    }
                }
            }
        }
    }
}

#[test]
fn incompressibility_matches_brute_force() {
    let pats = structures(&indexed_carrier(), 4);
    let index = |x: &ordpat::term::OrdinalTerm| index_of(x).unwrap();
    for z_all in &pats {
        for uni in &pats {
            for k in 1..=3 {
                for idx in brute::combinations(8, k) {
                    let z = z_all.restrict(&idx);
                    let fast = is_incompressible(&z, uni, &rho_index, u64::MAX).unwrap().holds;
                    assert_eq!(fast, brute::is_incompressible(&z, uni, &index));
                }
            }
        }
    }
}

#[test]
fn found_coverings_verify() {
    let pats = structures(&chain_carrier(6), 3);
    let src = pats[0].restrict(&[0, 2, 4]);
    if let (Some(h), _) = find_covering(&src, &pats[1], &Constraints::default(), u64::MAX).unwrap() {
        verify_covering(&h).unwrap();
    }
}

#[test]
fn identity_is_a_covering() {
    for p in structures(&chain_carrier(5), 3) {
        verify_covering(&CoveringMap::identity(&p)).unwrap();
    }
}

#[test]
fn invalid_matrices_are_rejected() {
    let carrier = vec![kr(1), kr(2)];
    let mut r1 = vec![vec![true, false], vec![false, true]];
    let r2 = vec![vec![true, true], vec![false, true]];
    assert!(FinitePattern::new(carrier.clone(), r1.clone(), r2.clone(), Provenance::Asserted, None).is_err());
    r1[0][1] = true;
    assert!(FinitePattern::new(carrier, r1, r2, Provenance::Asserted, None).is_ok());
}

#[test]
fn decomposition_groups_by_kappa_alpha_floor() {
    let xs = terms(&["k[1]", "k[a]+k[2]", "k[a]*2"]);
    let d = interval_decomposition(&xs).unwrap();
    assert_eq!(d.block(&t("0")).unwrap(), &[kr(1)][..]);
    assert_eq!(d.block(&t("k[a]")).unwrap(), &[kr(2)][..]);
    assert_eq!(d.block(&t("k[a]*2")).unwrap(), &[t("0")][..]);
    assert_eq!(sorted_set(&d.reassemble().unwrap()).unwrap(), xs);
}

#[test]
fn closure_under_sigma() {
    let ka = t("k[a]");
    assert!(is_closed(&terms(&["0", "k[1]", "k[a]"]), &ka).unwrap());
    assert!(!is_closed(&terms(&["k[a]+k[1]"]), &ka).unwrap());
    assert!(is_closed(&terms(&["0", "r", "r+1"]), &t("r")).unwrap());
}

#[test]
fn restriction_keeps_relations() {
    let p = &structures(&chain_carrier(6), 1)[0];
    let q = p.restrict(&[1, 3, 5]);
    for (a, &i) in [1usize, 3, 5].iter().enumerate() {
        for (b, &j) in [1usize, 3, 5].iter().enumerate() {
            for k in 1..=2 {
                assert_eq!(q.rel(k, a, b), p.rel(k, i, j));
            }
        }
    }
}
