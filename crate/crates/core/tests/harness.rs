use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use surfmatch::code::{CodeConfig, StabKind};
use surfmatch::decoder::MatcherMode;
use surfmatch::error::HarnessError;
use surfmatch::harness::{render, solve, HarnessInput};
use surfmatch::lattice::{DotGraph, Lattice};
use surfmatch::matching::{LatticeSource, Matcher};
use surfmatch::sim::DepolarizingModel;

/// Five dots in a row, unit steps, unit boundary lines at both ends.
fn chain(vertices: &[usize]) -> String {
    let p = (-1.0f64).exp();
    let mut s = String::new();
    for c in 0..5 {
        s += &format!("DOT Z 0 0 {c}\n");
    }
    for c in 0..4 {
        s += &format!("LINE Z:0:0:{c} Z:0:0:{} {p} 1\n", c + 1);
    }
    s += &format!("LINE Z:0:0:0 BOUNDARY:0 {p} 1\nLINE Z:0:0:4 BOUNDARY:1 {p} 1\n");
    for &v in vertices {
        s += &format!("VERTEX 0 0 {v} Z\n");
    }
    s
}

#[test]
fn chain_instance() {
    let input = HarnessInput::parse(&chain(&[0, 1, 3])).unwrap();
    for mode in [MatcherMode::Cmatch, MatcherMode::Eodmatch] {
        let m = solve(&input, mode).unwrap();
        assert_eq!(m.total_weight, 3.0);
        let out = render(&input, &m);
        assert!(out.contains("MATCH Z:0:0:0 Z:0:0:1\n"), "{out}");
        assert!(out.ends_with("TOTAL_WEIGHT 3\n"), "{out}");
    }
}

#[test]
fn no_vertices() {
    let input = HarnessInput::parse(&chain(&[])).unwrap();
    let m = solve(&input, MatcherMode::Eodmatch).unwrap();
    assert_eq!(render(&input, &m), "TOTAL_WEIGHT 0\n");
}

#[test]
fn bad_vertex_lines() {
    assert!(matches!(HarnessInput::parse(&chain(&[7])), Err(HarnessError::Vertex(..))));
    assert!(matches!(HarnessInput::parse("VERTEX 0 0\n"), Err(HarnessError::Vertex(..))));
    assert!(matches!(HarnessInput::parse(&chain(&[2, 2])), Err(HarnessError::Vertex(..))));
    assert!(matches!(HarnessInput::parse("FOO\n"), Err(HarnessError::Lattice(..))));
}

#[test]
fn dumped_lattice_matches_direct_solve() {
    let code = Arc::new(CodeConfig::new(5).unwrap());
    let model = DepolarizingModel::new(0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in StabKind::ALL {
        let lat = Lattice::new(code.clone(), &model, kind).unwrap().capped(3);
        let text = lat.dump_rounds(3);
        let all: Vec<u64> = (0..4 * lat.stab_count() as u64).collect();
        for n in [1usize, 4, 9, 16] {
            let mut dots: Vec<u64> = all.choose_multiple(&mut rng, n).copied().collect();
            dots.sort();
            let mut input = text.clone();
            for &d in &dots {
                let name = lat.dot_name(d);
                let f: Vec<&str> = name.split(':').collect();
                input += &format!("VERTEX {} {} {} {}\n", f[1], f[2], f[3], f[0]);
            }
            let mut direct = Matcher::new(LatticeSource::new(lat.clone()));
            for &d in &dots {
                direct.add_vertex(d).unwrap();
            }
            direct.solve().unwrap();
            let want = direct.matching().total_weight;
            let input = HarnessInput::parse(&input).unwrap();
            for mode in [MatcherMode::Cmatch, MatcherMode::Eodmatch] {
                assert_eq!(solve(&input, mode).unwrap().total_weight, want);
            }
        }
    }
}
