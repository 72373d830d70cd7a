use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use surfmatch::code::{CodeConfig, StabKind};
use surfmatch::error::MatchError;
use surfmatch::lattice::{Dot, Lattice};
use surfmatch::matching::*;
use surfmatch::sim::DepolarizingModel;

fn lattice(d: usize, p: f64, kind: StabKind) -> Lattice {
    let code = Arc::new(CodeConfig::new(d).unwrap());
    Lattice::new(code, &DepolarizingModel::new(p).unwrap(), kind).unwrap()
}

fn random_dots(lat: &Lattice, rounds: u32, n: usize, rng: &mut ChaCha8Rng) -> Vec<Dot> {
    let total = (rounds as usize + 1) * lat.stab_count();
    let mut all: Vec<Dot> = (0..total as u64).collect();
    all.shuffle(rng);
    let mut dots: Vec<Dot> = all.into_iter().take(n.min(total)).collect();
    dots.sort();
    dots
}

fn explicit(g: &ExplicitGraph) -> Matcher<ExplicitSource> {
    let mut m = Matcher::new(ExplicitSource::new(g));
    for i in 0..g.n {
        m.add_vertex(g.keys[i]).unwrap();
    }
    m.solve().unwrap();
    m
}

fn on_demand(lat: &Lattice, dots: &[Dot]) -> Matcher<LatticeSource<Lattice>> {
    let mut m = Matcher::new(LatticeSource::new(lat.clone()));
    for &d in dots {
        m.add_vertex(d).unwrap();
    }
    m.solve().unwrap();
    m
}

#[test]
fn empty_problem() {
    let g = ExplicitGraph::new(0);
    let m = explicit(&g);
    assert_eq!(m.matching().total_weight, 0.0);
    assert!(validate_matching(&m).is_ok());
}

#[test]
fn single_vertex_goes_to_boundary() {
    let mut g = ExplicitGraph::new(1);
    g.set_boundary(0, 0, 2.0);
    let m = explicit(&g);
    assert_eq!(m.mate(0), Mate::Boundary(0));
    assert_eq!(m.matching().total_weight, 2.0);
    assert_eq!(brute_force_mwpm(&g).unwrap().total_weight, 2.0);
}

#[test]
fn pairing_beats_two_boundaries() {
    let mut g = ExplicitGraph::new(2);
    g.add_edge(0, 1, 3.0);
    g.set_boundary(0, 0, 2.0);
    g.set_boundary(1, 1, 2.0);
    let m = explicit(&g);
    assert_eq!(m.mate(0), Mate::Vertex(1));
    assert_eq!(m.matching().total_weight, 3.0);
    assert_eq!(brute_force_mwpm(&g).unwrap().total_weight, 3.0);
    validate_matching(&m).unwrap();
}

#[test]
fn brute_force_size_cap() {
    let g = ExplicitGraph::new(13);
    assert_eq!(brute_force_mwpm(&g).unwrap_err(), MatchError::TooLarge { max: 12, got: 13 });
}

#[test]
fn slack_examples() {
    let mut g = ExplicitGraph::new(2);
    g.add_edge(0, 1, 5.0);
    g.set_boundary(0, 0, 100.0);
    g.set_boundary(1, 0, 100.0);
    let m = explicit(&g);
    // duals split the single edge
    let s = m.slack(0, 1, 5.0);
    assert!(s.abs() < EPS);
    assert_eq!(m.dual(0) + m.dual(1), 5.0);
}

#[test]
fn triangle_forms_a_blossom() {
    // three mutually close vertices far from the boundary
    let mut g = ExplicitGraph::new(3);
    g.add_edge(0, 1, 2.0);
    g.add_edge(1, 2, 2.0);
    g.add_edge(0, 2, 2.0);
    for i in 0..3 {
        g.set_boundary(i, 0, 10.0);
    }
    let m = explicit(&g);
    assert!(m.stats().blossoms >= 1);
    assert_eq!(m.matching().total_weight, 12.0);
    validate_matching(&m).unwrap();
    assert_eq!(brute_force_mwpm(&g).unwrap().total_weight, 12.0);
}

#[test]
fn five_cycle_blossom() {
    let mut g = ExplicitGraph::new(5);
    for i in 0..5 {
        g.add_edge(i, (i + 1) % 5, 2.0);
        g.set_boundary(i, 0, 7.0);
    }
    let m = explicit(&g);
    validate_matching(&m).unwrap();
    assert_eq!(m.matching().total_weight, brute_force_mwpm(&g).unwrap().total_weight);
}

#[test]
fn preconditions_are_enforced() {
    let mut g = ExplicitGraph::new(4);
    g.add_edge(0, 1, 1.0);
    g.add_edge(1, 2, 4.0);
    g.add_edge(2, 3, 1.0);
    for i in 0..4 {
        g.set_boundary(i, 0, 50.0);
    }
    let mut m = Matcher::new(ExplicitSource::new(&g));
    for i in 0..4 {
        m.add_vertex(i as u64).unwrap();
    }
    m.match_root(0).unwrap();
    assert_eq!(m.mate(0), Mate::Vertex(1));
    m.begin_tree(2).unwrap();
    // (1, 2) has slack 4 - y1 - 0 > 0
    assert!(matches!(m.grow(2, 1), Err(MatchError::Precondition(_))));
    assert!(matches!(m.form_blossom(2, 1), Err(MatchError::Precondition(_))));
    assert!(m.begin_tree(3).is_err());
    m.clear_tree();
    m.solve().unwrap();
    validate_matching(&m).unwrap();
}

#[test]
fn inner_vertex_dual_goes_negative() {
    // m reaches v first, leaving v matched at dual 0; u then pulls v inner
    let mut g = ExplicitGraph::new(3);
    let (m, v, u) = (0, 1, 2);
    g.add_edge(m, v, 1.0);
    g.add_edge(u, v, 1.0);
    g.add_edge(u, m, 5.0);
    for i in 0..3 {
        g.set_boundary(i, 0, 10.0);
    }
    let mut mt = Matcher::new(ExplicitSource::new(&g));
    mt.add_vertex(m as u64).unwrap();
    mt.add_vertex(v as u64).unwrap();
    mt.match_root(m).unwrap();
    assert_eq!(mt.dual(v), 0.0);
    mt.add_vertex(u as u64).unwrap();
    mt.solve().unwrap();
    validate_matching(&mt).unwrap();
    assert_eq!(mt.matching().total_weight, 11.0);
    assert_eq!(brute_force_mwpm(&g).unwrap().total_weight, 11.0);
}

#[test]
fn corrupted_matching_fails_certificate() {
    let mut g = ExplicitGraph::new(2);
    g.add_edge(0, 1, 3.0);
    g.set_boundary(0, 0, 2.0);
    g.set_boundary(1, 1, 2.0);
    let mut m = Matcher::new(ExplicitSource::new(&g));
    m.add_vertex(0).unwrap();
    m.add_vertex(1).unwrap();
    m.match_root(0).unwrap();
    // vertex 1 still free
    let errs = validate_matching(&m).unwrap_err();
    assert!(errs.iter().any(|e| matches!(e, CertificateError::Uncovered(1))));
}

#[test]
fn checkpoint_reverse_restores_state() {
    let lat = lattice(5, 0.01, StabKind::Z).capped(4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let dots = random_dots(&lat, 4, 14, &mut rng);
        let mut m = Matcher::new(LatticeSource::new(lat.clone()));
        for &d in &dots {
            m.add_vertex(d).unwrap();
        }
        let half: Vec<VIdx> = m.free_vertices().take(5).collect();
        for r in half {
            if m.mate(r) == Mate::Free {
                m.match_root(r).unwrap();
            }
        }
        let before = m.logical_state();
        let t = m.checkpoint();
        m.solve().unwrap();
        m.reverse_to(t).unwrap();
        assert_eq!(m.logical_state(), before);
        assert_eq!(m.reverse_to(t), Err(MatchError::StaleCheckpoint));
        let other = m.clone().checkpoint();
        assert_eq!(m.reverse_to(other), Err(MatchError::StaleCheckpoint));
        m.solve().unwrap();
        validate_matching(&m).unwrap();
    }
}

#[test]
fn pruned_complete_graph_keeps_optimum() {
    let lat = lattice(7, 0.01, StabKind::X).capped(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let dots = random_dots(&lat, 3, 8, &mut rng);
        let pruned = build_complete_graph(&lat, &dots).unwrap();
        let mut full = pruned.clone();
        full.edges.clear();
        for i in 0..dots.len() {
            for j in i + 1..dots.len() {
                let p = surfmatch::lattice::min_weight_path(
                    &lat,
                    surfmatch::lattice::Target::Dot(dots[i]),
                    surfmatch::lattice::Target::Dot(dots[j]),
                )
                .unwrap();
                full.edges.push((i, j, p.weight, p.flips));
            }
        }
        assert_eq!(
            brute_force_mwpm(&pruned).unwrap().total_weight,
            brute_force_mwpm(&full).unwrap().total_weight
        );
        assert!(pruned.edges.len() <= full.edges.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn both_modes_match_the_oracle(seed in any::<u64>(), d in 3usize..8, pi in 0usize..4, n in 0usize..11, kind in 0usize..2) {
        let p = [0.002, 0.005, 0.01, 0.02][pi];
        let lat = lattice(d, p, StabKind::ALL[kind]).capped(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dots = random_dots(&lat, 3, n, &mut rng);
        let g = build_complete_graph(&lat, &dots).unwrap();
        let oracle = brute_force_mwpm(&g).unwrap().total_weight;
        let c = explicit(&g);
        let e = on_demand(&lat, &dots);
        prop_assert!(validate_matching(&c).is_ok(), "{:?}", validate_matching(&c));
        prop_assert!(validate_matching(&e).is_ok(), "{:?}", validate_matching(&e));
        prop_assert_eq!(c.matching().total_weight, oracle);
        prop_assert_eq!(e.matching().total_weight, oracle);
    }

    #[test]
    fn modes_agree_on_large_instances(seed in any::<u64>(), d in 3usize..12, n in 10usize..60) {
        let lat = lattice(d, 0.01, StabKind::Z).capped(6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dots = random_dots(&lat, 6, n, &mut rng);
        let g = build_complete_graph(&lat, &dots).unwrap();
        let c = explicit(&g);
        let e = on_demand(&lat, &dots);
        prop_assert!(validate_matching(&c).is_ok());
        prop_assert!(validate_matching(&e).is_ok());
        prop_assert_eq!(c.matching().total_weight, e.matching().total_weight);
    }
}
