//! Streaming decoding over a rolling window and the logical error rate
//! experiment built on it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::code::{CodeConfig, StabKind};
use crate::error::{ConfigError, DecodeError, MatchError};
use crate::lattice::{min_weight_path, Dot, DotGraph, Lattice, Target};
use crate::matching::{build_complete_graph, EdgeEnd, ExplicitSource, LatticeSource, Mate, Matcher, VIdx};
use crate::sim::{DepolarizingModel, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatcherMode {
    /// Edges to everything within reach are built up front.
    Cmatch,
    /// Edges are discovered only as regions grow.
    Eodmatch,
}

impl FromStr for MatcherMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cmatch" => Ok(Self::Cmatch),
            "eodmatch" => Ok(Self::Eodmatch),
            _ => Err(format!("unknown matcher mode {s:?}")),
        }
    }
}

impl fmt::Display for MatcherMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cmatch => "cmatch",
            Self::Eodmatch => "eodmatch",
        })
    }
}

/// Logical operator whose state changes are counted. The `Z_L` state is
/// flipped by X-type error chains, which Z stabilizers detect; `X_L`
/// likewise pairs with X stabilizers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogicalClass {
    Z,
    X,
}

impl LogicalClass {
    pub const ALL: [LogicalClass; 2] = [LogicalClass::Z, LogicalClass::X];

    pub fn kind(self) -> StabKind {
        match self {
            Self::Z => StabKind::Z,
            Self::X => StabKind::X,
        }
    }

    pub fn index(self) -> usize {
        self.kind().index()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Z => "Z_L",
            Self::X => "X_L",
        }
    }
}

/// Rounds `[t_lo, t_hi)` the matcher may currently use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeWindow {
    pub t_lo: u32,
    pub t_hi: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecoderConfig {
    /// Window length in rounds.
    pub window: u32,
    pub mode: MatcherMode,
    /// Build explicit corrections and check them against the simulator.
    pub verify: bool,
    /// Rounds between compactions.
    pub compact_every: u32,
}

impl DecoderConfig {
    pub fn new(distance: usize) -> Self {
        let window = 2 * distance as u32;
        Self {
            window,
            mode: MatcherMode::Eodmatch,
            verify: true,
            compact_every: window,
        }
    }

    pub fn with_mode(mut self, mode: MatcherMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_window(mut self, window: u32) -> Self {
        self.window = window.max(1);
        self.compact_every = self.window;
        self
    }

    pub fn with_verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub rounds: u64,
    pub vertices: u64,
    pub attempts: u64,
    pub deferrals: u64,
    pub retired: u64,
    pub compactions: u64,
}

/// Result of completing a capped problem.
#[derive(Clone, Debug, PartialEq)]
pub struct Completed {
    pub total_weight: f64,
    /// Whether the correction flips the logical observable.
    pub flips: bool,
    /// Data qubits flipped by the correction, when verifying.
    pub data: Option<Vec<usize>>,
}

/// Decoder for one stabilizer type fed one round of events at a time.
#[derive(Clone, Debug)]
pub struct StreamingDecoder {
    lattice: Lattice,
    cfg: DecoderConfig,
    m: Matcher<LatticeSource<Lattice>>,
    next_round: u32,
    since_compact: u32,
    retired_weight: f64,
    retired_flips: bool,
    retired_data: Vec<bool>,
    stats: DecoderStats,
}

fn fresh_source(lattice: &Lattice, eager: Option<f64>, horizon: Option<u32>) -> LatticeSource<Lattice> {
    let mut s = LatticeSource::new(lattice.clone());
    if let Some(r) = eager {
        s = s.with_eager_radius(r);
    }
    let mut out = Vec::new();
    s.set_horizon(horizon, &mut out);
    s
}

impl StreamingDecoder {
    pub fn new(lattice: Lattice, cfg: DecoderConfig) -> Self {
        let eager = match cfg.mode {
            MatcherMode::Cmatch => Some(lattice.max_boundary_distance() * (1.0 + 1e-9) + 1e-9),
            MatcherMode::Eodmatch => None,
        };
        let m = Matcher::new(fresh_source(&lattice, eager, Some(0)));
        let qubits = lattice.code().qubit_count();
        Self {
            lattice,
            cfg,
            m,
            next_round: 0,
            since_compact: 0,
            retired_weight: 0.0,
            retired_flips: false,
            retired_data: vec![false; if cfg.verify { qubits } else { 0 }],
            stats: DecoderStats::default(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &DecoderStats {
        &self.stats
    }

    pub fn matcher(&self) -> &Matcher<LatticeSource<Lattice>> {
        &self.m
    }

    pub fn next_round(&self) -> u32 {
        self.next_round
    }

    pub fn window(&self) -> DecodeWindow {
        let t_hi = self.next_round;
        DecodeWindow {
            t_lo: t_hi.saturating_sub(self.cfg.window),
            t_hi,
        }
    }

    /// Vertices still held by the matcher.
    pub fn live_vertices(&self) -> usize {
        self.m.vertex_count()
    }

    /// Unmatched vertices waiting for more data.
    pub fn pending(&self) -> usize {
        self.m.free_vertices().count()
    }

    /// Register one round of events (stabilizer indices) and match what
    /// the window allows.
    pub fn push_round(&mut self, round: u32, stabs: &[usize]) -> Result<(), DecodeError> {
        if round != self.next_round {
            return Err(MatchError::OutOfOrder {
                expected: self.next_round,
                got: round,
            }
            .into());
        }
        self.add_round(round, stabs)?;
        self.next_round += 1;
        let h = self.next_round;
        self.m.update_source(|s, out| s.set_horizon(Some(h), out));
        self.attempt()?;
        self.since_compact += 1;
        if self.since_compact >= self.cfg.compact_every {
            self.since_compact = 0;
            self.retire()?;
        }
        Ok(())
    }

    fn add_round(&mut self, round: u32, stabs: &[usize]) -> Result<(), MatchError> {
        let mut sorted = stabs.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(MatchError::DuplicateVertex(self.lattice.dot(round, w[0])));
            }
        }
        for s in sorted {
            self.m.add_vertex(self.lattice.dot(round, s))?;
            self.stats.vertices += 1;
        }
        self.stats.rounds += 1;
        Ok(())
    }

    /// Try every unmatched vertex, oldest first; undo attempts that need
    /// data past the window.
    fn attempt(&mut self) -> Result<(), MatchError> {
        let roots: Vec<VIdx> = self.m.free_vertices().collect();
        for r in roots {
            if self.m.mate(r) != Mate::Free {
                continue;
            }
            self.stats.attempts += 1;
            let cp = self.m.checkpoint();
            match self.m.match_root(r) {
                Ok(()) => self.m.release(cp)?,
                Err(MatchError::WindowViolation) => {
                    self.m.reverse_to(cp)?;
                    self.stats.deferrals += 1;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn pair_data(&self, g: &Lattice, u: VIdx, to: EdgeEnd, acc: &mut [bool]) -> Result<(), DecodeError> {
        let a = Target::Dot(self.m.key(u));
        let b = match to {
            EdgeEnd::Vertex(v) => Target::Dot(self.m.key(v)),
            EdgeEnd::Boundary(k) => Target::Boundary(k),
        };
        for q in min_weight_path(g, a, b)?.data(g) {
            acc[q] ^= true;
        }
        Ok(())
    }

    /// Drop matched structures lying wholly before the window.
    fn retire(&mut self) -> Result<(), DecodeError> {
        let t_lo = self.window().t_lo;
        let n = self.m.vertex_count();
        let mut drop = vec![false; n];
        let mut seen = vec![false; n];
        let mut group = Vec::new();
        let mut any = false;
        for v in 0..n {
            if seen[v] {
                continue;
            }
            group.clear();
            let top = self.m.top(v);
            self.m.node_vertices(top, &mut group);
            let mate = self.m.mate(self.m.base(top));
            if let Mate::Vertex(u) = mate {
                self.m.node_vertices(self.m.top(u), &mut group);
            }
            for &x in &group {
                seen[x] = true;
            }
            if mate == Mate::Free {
                continue;
            }
            if group.iter().all(|&x| self.lattice.round(self.m.key(x)) < t_lo) {
                any = true;
                for &x in &group {
                    drop[x] = true;
                }
            }
        }
        if !any {
            return Ok(());
        }
        let mut data = std::mem::take(&mut self.retired_data);
        for v in (0..n).filter(|&v| drop[v]) {
            let (w, f, to) = match self.m.mate(v) {
                Mate::Vertex(u) if v < u => {
                    let (w, f) = self.m.edge(v, u).expect("matched edge");
                    (w, f, EdgeEnd::Vertex(u))
                }
                Mate::Boundary(k) => {
                    let (w, _, f) = self.m.boundary_edge(v).expect("boundary edge");
                    (w, f, EdgeEnd::Boundary(k))
                }
                _ => continue,
            };
            self.retired_weight += w;
            self.retired_flips ^= f;
            if self.cfg.verify {
                self.pair_data(&self.lattice, v, to, &mut data)?;
            }
            self.stats.retired += 1;
        }
        self.retired_data = data;
        self.m.compact(&drop)?;
        self.stats.compactions += 1;
        Ok(())
    }

    /// Add a final perfect round, cap the lattice there and match
    /// everything left. Consumes the decoder; clone it to keep streaming.
    pub fn finish(mut self, round: u32, stabs: &[usize]) -> Result<Completed, DecodeError> {
        if round != self.next_round {
            return Err(MatchError::OutOfOrder {
                expected: self.next_round,
                got: round,
            }
            .into());
        }
        let capped = self.lattice.capped(round);
        self.m.source_mut().set_graph(capped.clone());
        self.add_round(round, stabs)?;
        self.m.update_source(|s, out| s.set_horizon(None, out));
        self.m.solve()?;
        let mm = self.m.matching();
        let data = if self.cfg.verify {
            let mut acc = std::mem::take(&mut self.retired_data);
            for &(u, to) in &mm.pairs {
                self.pair_data(&capped, u, to, &mut acc)?;
            }
            let qs: Vec<usize> = (0..acc.len()).filter(|&q| acc[q]).collect();
            let code = self.lattice.code();
            let support = code.observable_support(self.lattice.kind());
            let parity = support.iter().filter(|&&q| acc[q]).count() % 2 == 1;
            if parity != (self.retired_flips ^ mm.flips) {
                return Err(DecodeError::ParityMismatch {
                    kind: self.lattice.kind().symbol(),
                    round,
                });
            }
            Some(qs)
        } else {
            None
        };
        Ok(Completed {
            total_weight: self.retired_weight + mm.total_weight,
            flips: self.retired_flips ^ mm.flips,
            data,
        })
    }
}

/// Match a whole capped problem at once. `rounds[t]` lists the events of
/// round `t`; the last round must be noiseless.
pub fn decode_batch(lattice: &Lattice, rounds: &[Vec<usize>], mode: MatcherMode) -> Result<Completed, DecodeError> {
    let last = rounds.len().saturating_sub(1) as u32;
    let capped = lattice.capped(last);
    let mut dots: Vec<Dot> = Vec::new();
    for (t, r) in rounds.iter().enumerate() {
        for &s in r {
            dots.push(capped.dot(t as u32, s));
        }
    }
    dots.sort_unstable();
    let mm = match mode {
        MatcherMode::Cmatch => {
            let g = build_complete_graph(&capped, &dots)?;
            let mut m = Matcher::new(ExplicitSource::new(&g));
            for &d in &dots {
                m.add_vertex(d)?;
            }
            m.solve()?;
            m.matching()
        }
        MatcherMode::Eodmatch => {
            let mut m = Matcher::new(LatticeSource::new(capped.clone()));
            for &d in &dots {
                m.add_vertex(d)?;
            }
            m.solve()?;
            m.matching()
        }
    };
    Ok(Completed {
        total_weight: mm.total_weight,
        flips: mm.flips,
        data: None,
    })
}

/// Logical parity at each check, per class.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogicalTracker {
    parity: [bool; 2],
    checks: [u64; 2],
    changes: [u64; 2],
    history: Vec<[bool; 2]>,
}

impl LogicalTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parity(&self, class: LogicalClass) -> bool {
        self.parity[class.index()]
    }

    pub fn checks(&self, class: LogicalClass) -> u64 {
        self.checks[class.index()]
    }

    pub fn changes(&self, class: LogicalClass) -> u64 {
        self.changes[class.index()]
    }

    pub fn history(&self) -> &[[bool; 2]] {
        &self.history
    }

    /// Record a check; returns which classes changed since the last one.
    pub fn record(&mut self, parity: [bool; 2]) -> [bool; 2] {
        let mut changed = [false; 2];
        for i in 0..2 {
            changed[i] = parity[i] != self.parity[i];
            self.checks[i] += 1;
            self.changes[i] += changed[i] as u64;
        }
        self.parity = parity;
        self.history.push(parity);
        changed
    }
}

/// Cap both decoders with a perfect round, read the corrected logical
/// parities, then undo the perfect round. Returns the parity per class.
pub fn cap_and_check(sim: &mut Simulator, decoders: &[StreamingDecoder; 2]) -> Result<[bool; 2], DecodeError> {
    let snap = sim.snapshot();
    let round = sim.round();
    let events = sim.step(false);
    let mut parity = [false; 2];
    let mut result = Ok(());
    for kind in StabKind::ALL {
        let stabs: Vec<usize> = events.iter().filter(|e| e.kind == kind).map(|e| e.stab).collect();
        let done = match decoders[kind.index()].clone().finish(round, &stabs) {
            Ok(c) => c,
            Err(e) => {
                result = Err(e);
                break;
            }
        };
        let predicted = sim.logical_parity(kind) ^ done.flips;
        if let Some(qs) = &done.data {
            sim.apply_correction(kind, qs);
            if sim.data_syndrome(kind).iter().any(|&b| b) {
                result = Err(DecodeError::ResidualSyndrome {
                    kind: kind.symbol(),
                    round,
                });
                break;
            }
            if sim.logical_parity(kind) != predicted {
                result = Err(DecodeError::ParityMismatch {
                    kind: kind.symbol(),
                    round,
                });
                break;
            }
        }
        parity[kind.index()] = predicted;
    }
    sim.restore(&snap)?;
    result.map(|_| parity)
}

/// Per-round logical error probability from `changes` odd-parity checks
/// out of `checks`, each spanning `t_check` rounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlEstimate {
    pub p_l: f64,
    pub std_err: f64,
    /// More than half the checks changed; the estimate is pinned at 0.5.
    pub saturated: bool,
}

pub fn estimate_p_l(changes: u64, checks: u64, t_check: u64) -> Result<PlEstimate, DecodeError> {
    if checks == 0 || changes > checks || t_check == 0 {
        return Err(DecodeError::Counts { changes, checks });
    }
    let q = changes as f64 / checks as f64;
    if q > 0.5 {
        return Ok(PlEstimate {
            p_l: 0.5,
            std_err: f64::INFINITY,
            saturated: true,
        });
    }
    let t = t_check as f64;
    let base = 1.0 - 2.0 * q;
    let p_l = (1.0 - base.powf(1.0 / t)) / 2.0;
    let se_q = (q * (1.0 - q) / checks as f64).sqrt();
    let slope = if base > 0.0 { base.powf(1.0 / t - 1.0) / t } else { f64::INFINITY };
    Ok(PlEstimate {
        p_l,
        std_err: slope * se_q,
        saturated: false,
    })
}

/// Probability that a check spanning `t` rounds sees an odd number of
/// logical errors.
pub fn change_probability(p_l: f64, t: u64) -> f64 {
    (1.0 - (1.0 - 2.0 * p_l).powf(t as f64)) / 2.0
}

/// Rounds per check putting the change probability closest to 10%.
pub fn choose_t_check(p_l: f64) -> u64 {
    const TARGET: f64 = 0.1;
    if !(p_l > 0.0) {
        return u64::MAX;
    }
    if p_l >= 0.5 {
        return 1;
    }
    let t = (1.0 - 2.0 * TARGET).ln() / (1.0 - 2.0 * p_l).ln();
    let lo = (t.floor() as u64).max(1);
    let hi = lo + 1;
    let err = |t| (change_probability(p_l, t) - TARGET).abs();
    if err(hi) < err(lo) {
        hi
    } else {
        lo
    }
}

/// `A_d p^{n_d}` anchored at one measured point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticCurve {
    pub distance: usize,
    pub n_d: u32,
    pub a_d: f64,
}

impl AsymptoticCurve {
    pub fn new(distance: usize, anchor: (f64, f64)) -> Result<Self, ConfigError> {
        if distance < 2 {
            return Err(ConfigError::Distance(distance));
        }
        let n_d = ((distance + 1) / 2) as u32;
        Ok(Self {
            distance,
            n_d,
            a_d: anchor.1 / anchor.0.powi(n_d as i32),
        })
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.a_d * p.powi(self.n_d as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub distance: usize,
    pub p: f64,
    pub t_check: u64,
    /// Stop once the slower class has seen this many changes.
    pub target_changes: u64,
    /// Stop after this many checks regardless.
    pub max_checks: u64,
    pub seed: u64,
    pub decoder: DecoderConfig,
    /// Independent seeded streams the work is split over.
    pub streams: usize,
}

impl ExperimentConfig {
    pub fn new(distance: usize, p: f64, t_check: u64) -> Self {
        Self {
            distance,
            p,
            t_check,
            target_changes: 10_000,
            max_checks: u64::MAX,
            seed: 1,
            decoder: DecoderConfig::new(distance),
            streams: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub distance: usize,
    pub p: f64,
    pub class: LogicalClass,
    pub t_check: u64,
    pub checks: u64,
    pub changes: u64,
    pub p_l: f64,
    pub std_err: f64,
    pub saturated: bool,
    /// The check budget ran out before the change target was reached.
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    /// Indexed by [`LogicalClass::index`].
    pub estimates: [RateEstimate; 2],
    pub rounds: u64,
    /// Time spent inside the matchers.
    pub match_seconds: f64,
    /// Total time over all streams.
    pub cpu_seconds: f64,
}

impl ExperimentResult {
    pub fn get(&self, class: LogicalClass) -> &RateEstimate {
        &self.estimates[class.index()]
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    checks: [u64; 2],
    changes: [u64; 2],
    rounds: u64,
    match_seconds: f64,
    seconds: f64,
}

fn stream_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn run_stream(
    cfg: &ExperimentConfig,
    code: &Arc<CodeConfig>,
    model: DepolarizingModel,
    lattices: &[Lattice; 2],
    seed: u64,
    target: u64,
    max_checks: u64,
) -> Result<Tally, DecodeError> {
    let start = Instant::now();
    let mut sim = Simulator::new(code.clone(), model, seed);
    let mut decs = [
        StreamingDecoder::new(lattices[0].clone(), cfg.decoder),
        StreamingDecoder::new(lattices[1].clone(), cfg.decoder),
    ];
    let mut tracker = LogicalTracker::new();
    let mut tally = Tally::default();
    let mut by_kind: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    while tally.checks[0] < max_checks && tally.changes.iter().min().copied().unwrap_or(0) < target {
        for _ in 0..cfg.t_check {
            let round = sim.round();
            by_kind[0].clear();
            by_kind[1].clear();
            for e in sim.step(true) {
                by_kind[e.kind.index()].push(e.stab);
            }
            let t0 = Instant::now();
            for (dec, ev) in decs.iter_mut().zip(&by_kind) {
                dec.push_round(round, ev)?;
            }
            tally.match_seconds += t0.elapsed().as_secs_f64();
            tally.rounds += 1;
        }
        let t0 = Instant::now();
        let parity = cap_and_check(&mut sim, &decs)?;
        tally.match_seconds += t0.elapsed().as_secs_f64();
        tracker.record(parity);
        for c in LogicalClass::ALL {
            tally.checks[c.index()] = tracker.checks(c);
            tally.changes[c.index()] = tracker.changes(c);
        }
    }
    tally.seconds = start.elapsed().as_secs_f64();
    Ok(tally)
}

/// How to spread an experiment's streams over threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Parallel,
    Sequential,
}

/// Repeated faulty rounds and capped checks until the change target (or
/// the check budget) is reached, giving rate estimates for both classes.
pub fn run_memory_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, DecodeError> {
    run_memory_experiment_with(cfg, Exec::Parallel)
}

pub fn run_memory_experiment_with(cfg: &ExperimentConfig, exec: Exec) -> Result<ExperimentResult, DecodeError> {
    if cfg.t_check == 0 {
        return Err(DecodeError::Counts { changes: 0, checks: 0 });
    }
    let code = Arc::new(CodeConfig::new(cfg.distance)?);
    let model = DepolarizingModel::new(cfg.p)?;
    let streams = cfg.streams.max(1);
    let per = |total: u64| if total == u64::MAX { u64::MAX } else { total.div_ceil(streams as u64) };
    let (target, max_checks) = (per(cfg.target_changes), per(cfg.max_checks));

    let tallies: Vec<Tally> = if model.p() == 0.0 {
        // nothing can happen; one check per stream keeps the counts valid
        vec![
            Tally {
                checks: [1; 2],
                ..Tally::default()
            };
            streams
        ]
    } else {
        let lattices = [
            Lattice::new(code.clone(), &model, StabKind::X)?,
            Lattice::new(code.clone(), &model, StabKind::Z)?,
        ];
        let one = |i: usize| run_stream(cfg, &code, model, &lattices, stream_seed(cfg.seed, i), target, max_checks);
        match exec {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..streams).into_par_iter().map(one).collect::<Result<_, _>>()?,
            _ => (0..streams).map(one).collect::<Result<_, _>>()?,
        }
    };

    let mut total = Tally::default();
    for t in &tallies {
        for i in 0..2 {
            total.checks[i] += t.checks[i];
            total.changes[i] += t.changes[i];
        }
        total.rounds += t.rounds;
        total.match_seconds += t.match_seconds;
        total.seconds += t.seconds;
    }
    let low = total.changes.iter().min().copied().unwrap_or(0) < cfg.target_changes && model.p() > 0.0;
    let mk = |class: LogicalClass| -> Result<RateEstimate, DecodeError> {
        let i = class.index();
        let est = estimate_p_l(total.changes[i], total.checks[i], cfg.t_check)?;
        Ok(RateEstimate {
            distance: cfg.distance,
            p: cfg.p,
            class,
            t_check: cfg.t_check,
            checks: total.checks[i],
            changes: total.changes[i],
            p_l: est.p_l,
            std_err: est.std_err,
            saturated: est.saturated,
            low_confidence: low,
        })
    };
    let mut estimates = [mk(LogicalClass::Z)?, mk(LogicalClass::X)?];
    estimates.sort_by_key(|e| e.class.index());
    Ok(ExperimentResult {
        estimates,
        rounds: total.rounds,
        match_seconds: total.match_seconds,
        cpu_seconds: total.seconds,
    })
}

/// Pick `t_check` from short pilot runs, lengthening the check interval
/// until enough changes are seen to estimate the rate.
pub fn pilot_t_check(distance: usize, p: f64, seed: u64, mode: MatcherMode) -> Result<u64, DecodeError> {
    let mut t = 1u64;
    loop {
        let mut cfg = ExperimentConfig::new(distance, p, t);
        cfg.seed = seed;
        cfg.streams = 1;
        cfg.target_changes = 100;
        cfg.max_checks = 2000;
        cfg.decoder = cfg.decoder.with_mode(mode).with_verify(false);
        let r = run_memory_experiment_with(&cfg, Exec::Sequential)?;
        let slow = r.estimates.iter().min_by_key(|e| e.changes).expect("two classes");
        if slow.changes >= 30 || t >= 1 << 24 {
            let p_l = r.estimates.iter().map(|e| e.p_l).fold(0.0, f64::max);
            return Ok(choose_t_check(p_l).min(1 << 32));
        }
        t *= 8;
    }
}
