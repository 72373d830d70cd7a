use std::sync::Arc;

use proptest::prelude::*;
use surfmatch::code::{CodeConfig, StabKind};
use surfmatch::decoder::*;
use surfmatch::error::{DecodeError, MatchError};
use surfmatch::lattice::Lattice;
use surfmatch::sim::{DepolarizingModel, Simulator};

fn setup(d: usize, p: f64) -> (Arc<CodeConfig>, DepolarizingModel, [Lattice; 2]) {
    let code = Arc::new(CodeConfig::new(d).unwrap());
    let model = DepolarizingModel::new(p).unwrap();
    let lat = [
        Lattice::new(code.clone(), &model, StabKind::X).unwrap(),
        Lattice::new(code.clone(), &model, StabKind::Z).unwrap(),
    ];
    (code, model, lat)
}

/// Noisy rounds followed by one perfect round, split by kind.
fn record(sim: &mut Simulator, rounds: u32) -> [Vec<Vec<usize>>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for t in 0..=rounds {
        let ev = sim.step(t < rounds);
        for k in StabKind::ALL {
            out[k.index()].push(ev.iter().filter(|e| e.kind == k).map(|e| e.stab).collect());
        }
    }
    out
}

#[test]
fn quiet_stream_leaves_matcher_idle() {
    let (_, _, lat) = setup(3, 0.01);
    let mut dec = StreamingDecoder::new(lat[0].clone(), DecoderConfig::new(3));
    for t in 0..100 {
        dec.push_round(t, &[]).unwrap();
    }
    assert_eq!(dec.live_vertices(), 0);
    assert_eq!(dec.window(), DecodeWindow { t_lo: 94, t_hi: 100 });
    assert_eq!(dec.stats().attempts, 0);
}

#[test]
fn out_of_order_round_rejected() {
    let (_, _, lat) = setup(3, 0.01);
    let mut dec = StreamingDecoder::new(lat[0].clone(), DecoderConfig::new(3));
    dec.push_round(0, &[]).unwrap();
    let err = dec.push_round(2, &[]).unwrap_err();
    assert_eq!(err, DecodeError::Match(MatchError::OutOfOrder { expected: 1, got: 2 }));
}

#[test]
fn noiseless_checks_never_change() {
    let mut cfg = ExperimentConfig::new(3, 0.0, 3);
    cfg.target_changes = 10;
    let r = run_memory_experiment(&cfg).unwrap();
    for e in &r.estimates {
        assert_eq!(e.changes, 0);
        assert_eq!(e.p_l, 0.0);
    }
}

fn drive(d: usize, p: f64, seed: u64, rounds: u32, cfg: DecoderConfig) -> (Simulator, [StreamingDecoder; 2]) {
    let (code, model, lat) = setup(d, p);
    let mut sim = Simulator::new(code, model, seed);
    let mut decs = [StreamingDecoder::new(lat[0].clone(), cfg), StreamingDecoder::new(lat[1].clone(), cfg)];
    for _ in 0..rounds {
        let r = sim.round();
        let ev = sim.step(true);
        for k in StabKind::ALL {
            let s: Vec<usize> = ev.iter().filter(|e| e.kind == k).map(|e| e.stab).collect();
            decs[k.index()].push_round(r, &s).unwrap();
        }
    }
    (sim, decs)
}

#[test]
fn repeated_caps_are_idempotent() {
    let (mut sim, decs) = drive(5, 0.01, 7, 40, DecoderConfig::new(5));
    let a = cap_and_check(&mut sim, &decs).unwrap();
    let b = cap_and_check(&mut sim, &decs).unwrap();
    assert_eq!(a, b);
}

#[test]
fn logical_chain_flips_the_check() {
    let (code, model, lat) = setup(5, 1e-9);
    let mut sim = Simulator::new(code.clone(), model, 1);
    let mut decs = [
        StreamingDecoder::new(lat[0].clone(), DecoderConfig::new(5)),
        StreamingDecoder::new(lat[1].clone(), DecoderConfig::new(5)),
    ];
    for t in 0..2 {
        assert!(sim.step(false).is_empty());
        for d in &mut decs {
            d.push_round(t, &[]).unwrap();
        }
    }
    assert_eq!(cap_and_check(&mut sim, &decs).unwrap(), [false, false]);
    // X errors along a full row form a logical operator
    for q in code.observable_support(StabKind::X) {
        sim.frame_mut().flip_x(q);
    }
    assert_eq!(cap_and_check(&mut sim, &decs).unwrap(), [false, true]);
}

#[test]
fn estimator_examples() {
    let e = estimate_p_l(11754, 93997, 25780).unwrap();
    assert!((e.p_l - 5.581956e-6).abs() / 5.581956e-6 < 5e-6);
    let e = estimate_p_l(11523, 98958, 3).unwrap();
    assert!((e.p_l - 4.229061e-2).abs() / 4.229061e-2 < 5e-6);
    assert_eq!(estimate_p_l(0, 500, 7).unwrap().p_l, 0.0);
    assert!(estimate_p_l(60, 100, 1).unwrap().saturated);
    assert!(estimate_p_l(5, 4, 1).is_err());
    assert!(estimate_p_l(0, 0, 1).is_err());
}

#[test]
fn t_check_examples() {
    assert_eq!(choose_t_check(0.05), 2);
    assert_eq!(choose_t_check(4.229061e-2), 3);
    let t = choose_t_check(5.581956e-6);
    assert!((10_000..100_000).contains(&t));
    assert_eq!(choose_t_check(0.6), 1);
}

#[test]
fn asymptotic_examples() {
    let c = AsymptoticCurve::new(3, (1e-4, 5.582e-6)).unwrap();
    assert_eq!(c.n_d, 2);
    assert!((c.a_d - 558.2).abs() < 1e-9);
    assert!((c.eval(1e-3) - 5.481e-4).abs() / 5.481e-4 < 0.02);
    assert_eq!(AsymptoticCurve::new(9, (1e-3, 1e-9)).unwrap().n_d, 5);
    assert!(AsymptoticCurve::new(1, (1e-3, 1e-3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn estimator_monotone_in_changes(n in 1u64..10_000, t in 1u64..100, a in 0u64..5_000, b in 0u64..5_000) {
        let (lo, hi) = (a.min(b).min(n / 2), a.max(b).min(n / 2));
        prop_assert!(estimate_p_l(lo, n, t).unwrap().p_l <= estimate_p_l(hi, n, t).unwrap().p_l);
        prop_assert!((estimate_p_l(lo, n, 1).unwrap().p_l - lo as f64 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn streaming_matches_batch(seed in any::<u64>(), d in 3usize..6, pi in 0usize..3, rounds in 1u32..30, mi in 0usize..2) {
        let p = [0.005, 0.01, 0.02][pi];
        let mode = [MatcherMode::Eodmatch, MatcherMode::Cmatch][mi];
        let (code, model, lat) = setup(d, p);
        let mut sim = Simulator::new(code, model, seed);
        let ev = record(&mut sim, rounds);
        let cfg = DecoderConfig::new(d).with_mode(mode).with_window(2 * d as u32).with_verify(true);
        for k in 0..2 {
            let mut dec = StreamingDecoder::new(lat[k].clone(), cfg);
            for t in 0..rounds {
                dec.push_round(t, &ev[k][t as usize]).unwrap();
            }
            let s = dec.finish(rounds, &ev[k][rounds as usize]).unwrap();
            let b = decode_batch(&lat[k], &ev[k], MatcherMode::Eodmatch).unwrap();
            let c = decode_batch(&lat[k], &ev[k], MatcherMode::Cmatch).unwrap();
            prop_assert_eq!(s.total_weight, b.total_weight);
            prop_assert_eq!(b.total_weight, c.total_weight);
        }
    }
}

#[test]
fn d3_rates_are_plausible() {
    let mut cfg = ExperimentConfig::new(3, 0.01, 3);
    cfg.target_changes = 400;
    let r = run_memory_experiment(&cfg).unwrap();
    let z = r.get(LogicalClass::Z);
    let x = r.get(LogicalClass::X);
    assert_eq!((z.class, x.class), (LogicalClass::Z, LogicalClass::X));
    assert!(z.changes >= 400 && x.changes >= 400);
    assert_eq!(z.checks, x.checks);
    assert!((0.03..0.06).contains(&z.p_l), "{z:?}");
    assert!((0.025..0.05).contains(&x.p_l), "{x:?}");
    assert!(!z.low_confidence);
}

#[test]
fn budget_exhaustion_is_flagged() {
    let mut cfg = ExperimentConfig::new(3, 0.001, 1);
    cfg.max_checks = 40;
    cfg.target_changes = 1000;
    let r = run_memory_experiment(&cfg).unwrap();
    assert!(r.estimates.iter().all(|e| e.low_confidence && e.checks == 40));
}

#[test]
fn sequential_and_parallel_agree() {
    let mut cfg = ExperimentConfig::new(3, 0.01, 3);
    cfg.target_changes = 80;
    let a = run_memory_experiment_with(&cfg, Exec::Parallel).unwrap();
    let b = run_memory_experiment_with(&cfg, Exec::Sequential).unwrap();
    assert_eq!(a.estimates, b.estimates);
    assert_eq!(a.rounds, b.rounds);
}

#[test]
fn cmatch_streaming_runs_and_verifies() {
    let cfg = DecoderConfig::new(5).with_mode(MatcherMode::Cmatch);
    let (mut sim, decs) = drive(5, 0.01, 11, 60, cfg);
    let a = cap_and_check(&mut sim, &decs).unwrap();
    let (mut sim2, decs2) = drive(5, 0.01, 11, 60, DecoderConfig::new(5));
    assert_eq!(cap_and_check(&mut sim2, &decs2).unwrap(), a);
}

#[test]
fn windows_retire_old_structures() {
    let (_, decs) = drive(5, 0.01, 5, 200, DecoderConfig::new(5));
    for d in &decs {
        assert!(d.stats().retired > 0);
        assert!(d.stats().compactions > 0);
        let w = d.window();
        assert_eq!((w.t_lo, w.t_hi), (190, 200));
        let m = d.matcher();
        for v in 0..m.vertex_count() {
            let r = m.key(v) / d.lattice().stab_count() as u64;
            assert!(r + 2 * 10 >= 200, "vertex from round {r} still live");
        }
    }
}
