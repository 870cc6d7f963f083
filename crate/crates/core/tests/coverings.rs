use std::collections::BTreeSet;

use anonelect::coverings::{
    brute_force_base_oracle, check_quasi_covering, is_b_minimal, is_covering, is_quasi_covering, is_symmetric_covering, minimal_base,
    sheets, CoveringError,
};
use anonelect::families::{generate, generate_covering_pair, path_over_ring, ring_covering_digraphs, ring_over_ring, GeneratorSpec};
use anonelect::graph::{build_dir, find_isomorphism, is_isomorphic, Homomorphism, SymDigraph, VertexLabel};
use proptest::prelude::*;

fn dir(spec: &str) -> SymDigraph {
    build_dir(&generate(&spec.parse::<GeneratorSpec>().unwrap()).unwrap())
}

fn pat(s: &str) -> Vec<String> {
    s.chars().map(String::from).collect()
}

fn divisors(n: usize) -> BTreeSet<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

#[test]
fn identity_is_a_one_sheet_covering() {
    let d = dir("grid:2x3");
    assert_eq!(is_symmetric_covering(&d, &d, &Homomorphism::identity(&d)).unwrap().sheets, 1);
}

#[test]
fn six_ring_covers_triangle_twice() {
    let (total, base, phi) = ring_covering_digraphs(3, 2, &pat("a"), &pat("s")).unwrap();
    assert_eq!(is_symmetric_covering(&total, &base, &phi).unwrap().sheets, 2);
}

#[test]
fn label_mismatch_is_rejected() {
    let (total, base, phi) = ring_covering_digraphs(3, 2, &pat("a"), &pat("s")).unwrap();
    let mut labels = total.labels().to_vec();
    labels[4] = VertexLabel::with_source("b", "s");
    let err = is_symmetric_covering(&total.relabeled(labels), &base, &phi).unwrap_err();
    assert!(matches!(err, CoveringError::Rejected(_)), "{err}");
}

#[test]
fn non_bijective_map_is_rejected() {
    let d = dir("ring:6,anon,shared");
    let (base, _) = minimal_base(&d).unwrap();
    // Sends everything to one vertex but keeps arcs where they were.
    let mut phi = Homomorphism::identity(&d);
    phi.vertex_map = vec![Some(0); 6];
    assert!(!is_covering(&d, &base, &phi));
}

#[test]
fn uniform_six_ring_collapses_to_one_vertex() {
    let (base, _) = minimal_base(&dir("ring:6,anon,shared")).unwrap();
    assert_eq!(base.vertex_count(), 1);
    assert!(base.arcs().iter().all(|a| a.source == 0 && a.target == 0));
}

#[test]
fn alternating_ring_has_two_vertex_base() {
    assert_eq!(minimal_base(&dir("ring:6,anon,classes=ababab")).unwrap().0.vertex_count(), 2);
}

#[test]
fn b_minimal_examples() {
    for spec in ["ring:6,anon,classes=aabbbb", "ring:7,anon,one-unshared", "clique:4,anon,classes=aaab"] {
        assert!(is_b_minimal(&generate(&spec.parse().unwrap()).unwrap()).unwrap(), "{spec}");
    }
    assert!(!is_b_minimal(&generate(&"ring:6,anon,shared".parse().unwrap()).unwrap()).unwrap());
}

#[test]
fn oracle_base_sizes_of_rings() {
    for n in [4, 6] {
        let bases = brute_force_base_oracle(&dir(&format!("ring:{n},anon,shared")), n).unwrap();
        let sizes: BTreeSet<usize> = bases.iter().map(|(b, _)| b.vertex_count()).collect();
        assert_eq!(sizes, divisors(n), "ring {n}");
    }
    let edge = dir("path:2,distinct");
    let bases = brute_force_base_oracle(&edge, 2).unwrap();
    assert_eq!(bases.len(), 1);
    assert!(is_isomorphic(&bases[0].0, &edge).unwrap());
}

#[test]
fn oracle_refuses_large_digraphs() {
    assert!(matches!(brute_force_base_oracle(&dir("ring:9"), 9), Err(CoveringError::TooLarge { .. })));
}

#[test]
fn path_over_triangle_radius() {
    let d1 = dir("path:9,anon,shared");
    let ring = dir("ring:3,anon,shared");
    let gamma = Homomorphism::from_vertex_map(&d1, &ring, (0..9).map(|i| Some(i % 3)).collect());
    assert!(is_quasi_covering(&d1, &ring, 4, 3, &gamma).unwrap());
    // At radius 4 the ball reaches a path end of degree 1.
    assert!(!is_quasi_covering(&d1, &ring, 4, 4, &gamma).unwrap());
    assert_eq!(sheets(&check_quasi_covering(&d1, &ring, 4, 3, &gamma).unwrap().unwrap()), 1);
}

#[test]
fn long_ring_over_triangle_sheets() {
    let f = ring_over_ring(12, 3, &pat("a"), &pat("s")).unwrap();
    assert!(f.witness.radius() >= 13);
    assert!(!f.witness.proper());
    assert_eq!(sheets(&f.witness), 4);
    assert!(is_covering(&f.d1, &f.d0, f.witness.gamma()));
}

#[test]
fn undefined_gamma_is_an_error() {
    let d1 = dir("path:5,anon,shared");
    let ring = dir("ring:3,anon,shared");
    let mut gamma = Homomorphism::from_vertex_map(&d1, &ring, (0..5).map(|i| Some(i % 3)).collect());
    gamma.vertex_map[3] = None;
    assert!(matches!(check_quasi_covering(&d1, &ring, 2, 1, &gamma), Err(CoveringError::Undefined(_))));
}

#[test]
fn composition_multiplies_sheets() {
    let (c12, c6, phi) = ring_covering_digraphs(6, 2, &pat("a"), &pat("s")).unwrap();
    let (c6b, c3, psi) = ring_covering_digraphs(3, 2, &pat("a"), &pat("s")).unwrap();
    let iso = find_isomorphism(&c6, &c6b).unwrap().unwrap();
    let composed = phi.then(&iso).then(&psi);
    assert_eq!(is_symmetric_covering(&c12, &c3, &composed).unwrap().sheets, 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimal_base_is_minimal(spec in prop_oneof![
        (3usize..9).prop_map(|n| format!("ring:{n},anon,shared")),
        (3usize..9, "[ab]{8}").prop_map(|(n, p)| format!("ring:{n},anon,classes={}", &p[..n])),
        (2usize..6).prop_map(|n| format!("clique:{n},anon,shared")),
        (2usize..7, any::<u64>()).prop_map(|(n, s)| format!("random:{n},anon,shared,degree=3,seed={s}")),
    ]) {
        let (base, phi) = minimal_base(&dir(&spec)).unwrap();
        prop_assert!(is_covering(&dir(&spec), &base, &phi));
        prop_assert_eq!(minimal_base(&base).unwrap().0.vertex_count(), base.vertex_count());
    }

    #[test]
    fn generated_pairs_are_coverings(n in 3usize..6, q in 1usize..4, seed in any::<u64>(), ring in any::<bool>()) {
        let spec = if ring { format!("ring:{n},distinct") } else { format!("clique:{n},distinct") };
        let pair = generate_covering_pair(&spec.parse().unwrap(), q, seed).unwrap();
        let w = is_symmetric_covering(&pair.total_dir(), &pair.base_dir(), &pair.phi).unwrap();
        prop_assert_eq!(w.sheets, q);
        let fibers = pair.phi.fibers(n);
        prop_assert!(fibers.iter().all(|f| f.len() == q));
    }

    /// A proper quasi-covering whose radius reaches `q` times the base size
    /// has at least `q` sheets.
    #[test]
    fn radius_forces_sheets(n in 3usize..6, q in 2usize..4, extra in 0usize..4, path in any::<bool>()) {
        let labels: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        let classes = vec!["s".to_string()];
        // Long enough that the maximal radius reaches q*n even though path
        // ends carry different ports.
        let m = 2 * q * n + extra + 3;
        let f = if path { path_over_ring(m, n, &labels, &classes) } else { ring_over_ring(m, n, &labels, &classes) };
        let f = f.unwrap();
        let w = &f.witness;
        prop_assume!(w.proper());
        prop_assert!(w.radius() >= q * n);
        for r in 0..=w.radius() {
            let wr = check_quasi_covering(&f.d1, &f.d0, w.center(), r, w.gamma()).unwrap().unwrap();
            if wr.proper() && r >= q * f.d0.vertex_count() {
                prop_assert!(sheets(&wr) >= q, "radius {} sheets {}", r, sheets(&wr));
            }
        }
    }

    #[test]
    fn non_proper_quasi_coverings_are_coverings(n in 3usize..5, k in 1usize..4) {
        let f = ring_over_ring(n * k, n, &pat("a"), &pat("s")).unwrap();
        prop_assert!(!f.witness.proper());
        prop_assert!(is_covering(&f.d1, &f.d0, f.witness.gamma()));
    }
}
