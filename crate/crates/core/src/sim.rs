//! Pauli-frame Monte Carlo simulation of the syndrome extraction cycle.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{build_schedule, Basis, CodeConfig, Gate, GateSchedule, StabKind};
use crate::error::{ConfigError, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }

    fn from_index(i: usize) -> Pauli {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][i]
    }
}

/// Accumulated error per qubit as an (X, Z) bit pair; Y sets both.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliFrame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliFrame {
    pub fn new(qubits: usize) -> Self {
        Self {
            x: vec![false; qubits],
            z: vec![false; qubits],
        }
    }

    pub fn x(&self, q: usize) -> bool {
        self.x[q]
    }

    pub fn z(&self, q: usize) -> bool {
        self.z[q]
    }

    pub fn apply(&mut self, q: usize, p: Pauli) {
        self.x[q] ^= p.has_x();
        self.z[q] ^= p.has_z();
    }

    pub fn flip_x(&mut self, q: usize) {
        self.x[q] ^= true;
    }

    pub fn flip_z(&mut self, q: usize) {
        self.z[q] ^= true;
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        self.x[target] ^= self.x[control];
        self.z[control] ^= self.z[target];
    }

    pub fn reset(&mut self, q: usize) {
        self.x[q] = false;
        self.z[q] = false;
    }

    /// Outcome flip of a measurement of `q` in `basis`.
    pub fn flips(&self, q: usize, basis: Basis) -> bool {
        match basis {
            Basis::Z => self.x[q],
            Basis::X => self.z[q],
        }
    }

    pub fn is_clean(&self) -> bool {
        !self.x.iter().chain(&self.z).any(|&b| b)
    }

    /// Apply the deterministic conjugation of a noiseless gate. Returns the
    /// measured flip for measurements.
    pub fn conjugate(&mut self, gate: &Gate) -> Option<bool> {
        match *gate {
            Gate::Init { qubit, .. } => {
                self.reset(qubit);
                None
            }
            Gate::Cnot { control, target } => {
                self.cnot(control, target);
                None
            }
            Gate::Measure { qubit, basis, .. } => {
                // the outcome is known, so the qubit leaves in a known state
                let flip = self.flips(qubit, basis);
                self.reset(qubit);
                Some(flip)
            }
            Gate::Idle { .. } => None,
        }
    }
}

/// A single fault of a gate's noise channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    Pauli1 { qubit: usize, pauli: Pauli },
    Pauli2 { a: usize, pa: Pauli, b: usize, pb: Pauli },
    MeasureFlip { kind: StabKind, stab: usize },
}

impl Fault {
    pub fn apply(&self, frame: &mut PauliFrame) {
        match *self {
            Fault::Pauli1 { qubit, pauli } => frame.apply(qubit, pauli),
            Fault::Pauli2 { a, pa, b, pb } => {
                frame.apply(a, pa);
                frame.apply(b, pb);
            }
            Fault::MeasureFlip { .. } => {}
        }
    }

    /// Component of the fault that only contains X (`want_x`) or Z parts.
    pub fn component(&self, want_x: bool) -> Option<Fault> {
        let keep = |p: Pauli| -> Pauli {
            match (want_x, p.has_x(), p.has_z()) {
                (true, true, _) => Pauli::X,
                (false, _, true) => Pauli::Z,
                _ => Pauli::I,
            }
        };
        match *self {
            Fault::Pauli1 { qubit, pauli } => {
                let p = keep(pauli);
                (p != Pauli::I).then_some(Fault::Pauli1 { qubit, pauli: p })
            }
            Fault::Pauli2 { a, pa, b, pb } => {
                let (pa, pb) = (keep(pa), keep(pb));
                match (pa, pb) {
                    (Pauli::I, Pauli::I) => None,
                    (p, Pauli::I) => Some(Fault::Pauli1 { qubit: a, pauli: p }),
                    (Pauli::I, p) => Some(Fault::Pauli1 { qubit: b, pauli: p }),
                    _ => Some(Fault::Pauli2 { a, pa, b, pb }),
                }
            }
            Fault::MeasureFlip { kind, .. } => {
                // an X-basis outcome flip is seen by X events, which come from Z errors
                let is_x_side = kind == StabKind::Z;
                (is_x_side == want_x).then_some(*self)
            }
        }
    }
}

/// Circuit-level depolarizing noise of strength `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepolarizingModel {
    p: f64,
}

impl DepolarizingModel {
    pub fn new(p: f64) -> Result<Self, ConfigError> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(ConfigError::Probability(p));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Every fault of the gate's channel with its probability.
    ///
    /// Initialisation prepares the orthogonal state, measurement flips its
    /// result, idles apply X/Y/Z at p/3 each and CNOTs apply each of the 15
    /// non-identity two-qubit Paulis at p/15.
    pub fn channel(&self, gate: &Gate) -> Vec<(Fault, f64)> {
        let p = self.p;
        match *gate {
            Gate::Init { qubit, basis } => {
                let pauli = match basis {
                    Basis::Z => Pauli::X,
                    Basis::X => Pauli::Z,
                };
                vec![(Fault::Pauli1 { qubit, pauli }, p)]
            }
            Gate::Measure { kind, stab, .. } => vec![(Fault::MeasureFlip { kind, stab }, p)],
            Gate::Idle { qubit } => Pauli::NON_IDENTITY
                .iter()
                .map(|&pauli| (Fault::Pauli1 { qubit, pauli }, p / 3.0))
                .collect(),
            Gate::Cnot { control, target } => (1..16)
                .map(|i| {
                    let f = Fault::Pauli2 {
                        a: control,
                        pa: Pauli::from_index(i / 4),
                        b: target,
                        pb: Pauli::from_index(i % 4),
                    };
                    (f, p / 15.0)
                })
                .collect(),
        }
    }

    pub fn sample<R: Rng>(&self, gate: &Gate, rng: &mut R) -> Option<Fault> {
        if self.p == 0.0 || rng.gen::<f64>() >= self.p {
            return None;
        }
        Some(match *gate {
            Gate::Init { .. } | Gate::Measure { .. } => self.channel(gate)[0].0,
            Gate::Idle { qubit } => Fault::Pauli1 {
                qubit,
                pauli: Pauli::NON_IDENTITY[rng.gen_range(0..3)],
            },
            Gate::Cnot { control, target } => {
                let i = rng.gen_range(1..16);
                Fault::Pauli2 {
                    a: control,
                    pa: Pauli::from_index(i / 4),
                    b: target,
                    pb: Pauli::from_index(i % 4),
                }
            }
        })
    }
}

/// A scripted fault injected after the gates of `step` in `round`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Injection {
    pub round: u32,
    pub step: usize,
    pub fault: Fault,
}

/// Syndrome values of one round, relative to the noiseless reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub round: u32,
    pub distance: usize,
    pub values: [Vec<bool>; 2],
}

impl RoundOutcome {
    pub fn reference(code: &CodeConfig, round: u32) -> Self {
        Self {
            round,
            distance: code.distance(),
            values: [
                vec![false; code.stab_count(StabKind::X)],
                vec![false; code.stab_count(StabKind::Z)],
            ],
        }
    }

    pub fn get(&self, kind: StabKind) -> &[bool] {
        &self.values[kind.index()]
    }
}

/// A syndrome change at `(stab, round)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DetectionEvent {
    pub kind: StabKind,
    pub round: u32,
    pub stab: usize,
}

pub fn detection_events(
    current: &RoundOutcome,
    previous: &RoundOutcome,
) -> Result<Vec<DetectionEvent>, SimError> {
    if current.distance != previous.distance
        || current.values[0].len() != previous.values[0].len()
        || current.values[1].len() != previous.values[1].len()
    {
        return Err(SimError::MismatchedOutcomes);
    }
    let mut out = Vec::new();
    for kind in StabKind::ALL {
        for (stab, (a, b)) in current.get(kind).iter().zip(previous.get(kind)).enumerate() {
            if a != b {
                out.push(DetectionEvent {
                    kind,
                    round: current.round,
                    stab,
                });
            }
        }
    }
    Ok(out)
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Restorable copy of a [`Simulator`]'s mutable state.
#[derive(Clone, Debug)]
pub struct SimSnapshot {
    owner: u64,
    frame: PauliFrame,
    round: u32,
    last: RoundOutcome,
    rng: ChaCha8Rng,
}

/// Circuit-level simulator of repeated syndrome extraction.
///
/// The first round is compared against the noiseless reference, so a fresh
/// simulator behaves as if preceded by one perfect round.
#[derive(Clone, Debug)]
pub struct Simulator {
    code: Arc<CodeConfig>,
    schedule: Arc<GateSchedule>,
    model: DepolarizingModel,
    frame: PauliFrame,
    round: u32,
    last: RoundOutcome,
    rng: ChaCha8Rng,
    injections: Vec<Injection>,
    id: u64,
}

impl Simulator {
    pub fn new(code: Arc<CodeConfig>, model: DepolarizingModel, seed: u64) -> Self {
        let schedule = Arc::new(build_schedule(&code));
        Self::with_schedule(code, schedule, model, seed)
    }

    pub fn with_schedule(
        code: Arc<CodeConfig>,
        schedule: Arc<GateSchedule>,
        model: DepolarizingModel,
        seed: u64,
    ) -> Self {
        let frame = PauliFrame::new(code.qubit_count());
        let last = RoundOutcome::reference(&code, 0);
        Self {
            code,
            schedule,
            model,
            frame,
            round: 0,
            last,
            rng: ChaCha8Rng::seed_from_u64(seed),
            injections: Vec::new(),
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn code(&self) -> &Arc<CodeConfig> {
        &self.code
    }

    pub fn schedule(&self) -> &Arc<GateSchedule> {
        &self.schedule
    }

    pub fn model(&self) -> DepolarizingModel {
        self.model
    }

    pub fn frame(&self) -> &PauliFrame {
        &self.frame
    }

    pub fn frame_mut(&mut self) -> &mut PauliFrame {
        &mut self.frame
    }

    /// Index of the next round to run.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn last_outcome(&self) -> &RoundOutcome {
        &self.last
    }

    pub fn inject(&mut self, inj: Injection) {
        self.injections.push(inj);
    }

    /// Run one full cycle; `noisy = false` gives a perfect round.
    pub fn run_round(&mut self, noisy: bool) -> RoundOutcome {
        let mut out = RoundOutcome::reference(&self.code, self.round);
        let schedule = Arc::clone(&self.schedule);
        let round = self.round;
        for (step, gates) in schedule.steps.iter().enumerate() {
            for gate in gates {
                let measured = self.frame.conjugate(gate);
                let fault = if noisy {
                    self.model.sample(gate, &mut self.rng)
                } else {
                    None
                };
                match (measured, gate) {
                    (Some(flip), Gate::Measure { kind, stab, .. }) => {
                        let mut v = flip;
                        if let Some(Fault::MeasureFlip { .. }) = fault {
                            v ^= true;
                        }
                        out.values[kind.index()][*stab] = v;
                    }
                    _ => {
                        if let Some(f) = fault {
                            f.apply(&mut self.frame);
                        }
                    }
                }
            }
            if !self.injections.is_empty() {
                for inj in self.injections.iter().filter(|i| i.round == round && i.step == step) {
                    match inj.fault {
                        Fault::MeasureFlip { kind, stab } => {
                            out.values[kind.index()][stab] ^= true;
                        }
                        f => f.apply(&mut self.frame),
                    }
                }
            }
        }
        self.round += 1;
        out
    }

    /// Run a round and return the detection events it produced.
    pub fn step(&mut self, noisy: bool) -> Vec<DetectionEvent> {
        let out = self.run_round(noisy);
        let events = detection_events(&out, &self.last).expect("same code");
        self.last = out;
        events
    }

    /// Parity of the accumulated errors on the logical support watched by
    /// stabilizers of `kind`.
    pub fn logical_parity(&self, kind: StabKind) -> bool {
        self.code
            .observable_support(kind)
            .into_iter()
            .fold(false, |acc, q| {
                acc ^ match kind {
                    StabKind::Z => self.frame.x(q),
                    StabKind::X => self.frame.z(q),
                }
            })
    }

    /// Flip the data error type seen by `kind` on `qubits` (a correction).
    pub fn apply_correction(&mut self, kind: StabKind, qubits: &[usize]) {
        for &q in qubits {
            match kind {
                StabKind::Z => self.frame.flip_x(q),
                StabKind::X => self.frame.flip_z(q),
            }
        }
    }

    /// Current syndrome of the data errors alone (ancillas ignored).
    pub fn data_syndrome(&self, kind: StabKind) -> Vec<bool> {
        self.code
            .stabilizers(kind)
            .iter()
            .map(|s| {
                s.support().fold(false, |acc, q| {
                    acc ^ match kind {
                        StabKind::Z => self.frame.x(q),
                        StabKind::X => self.frame.z(q),
                    }
                })
            })
            .collect()
    }

    pub fn snapshot(&self) -> SimSnapshot {
        SimSnapshot {
            owner: self.id,
            frame: self.frame.clone(),
            round: self.round,
            last: self.last.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn restore(&mut self, snap: &SimSnapshot) -> Result<(), SimError> {
        if snap.owner != self.id {
            return Err(SimError::ForeignSnapshot);
        }
        self.frame = snap.frame.clone();
        self.round = snap.round;
        self.last = snap.last.clone();
        self.rng = snap.rng.clone();
        Ok(())
    }

    /// True when every observable piece of state equals the snapshot.
    pub fn matches(&self, snap: &SimSnapshot) -> bool {
        self.frame == snap.frame
            && self.round == snap.round
            && self.last == snap.last
            && self.rng == snap.rng
    }
}

/// Propagate one fault through a noiseless copy of the cycle, starting after
/// step `step` of round 0, and return the resulting events over rounds 0 and
/// 1 together with the data-qubit error left at the end of round 0.
pub fn propagate_fault(
    code: &CodeConfig,
    schedule: &GateSchedule,
    step: usize,
    fault: Fault,
) -> (Vec<DetectionEvent>, PauliFrame) {
    let mut frame = PauliFrame::new(code.qubit_count());
    let mut prev = RoundOutcome::reference(code, 0);
    let mut events = Vec::new();
    let mut residual = None;
    for round in 0..2u32 {
        let mut out = RoundOutcome::reference(code, round);
        for (s, gates) in schedule.steps.iter().enumerate() {
            if round == 0 && s < step {
                continue;
            }
            if round > 0 || s > step {
                for gate in gates {
                    if let (Some(flip), Gate::Measure { kind, stab, .. }) = (frame.conjugate(gate), gate) {
                        out.values[kind.index()][*stab] = flip;
                    }
                }
            }
            if round == 0 && s == step {
                match fault {
                    Fault::MeasureFlip { kind, stab } => out.values[kind.index()][stab] ^= true,
                    f => f.apply(&mut frame),
                }
            }
        }
        if round == 0 {
            residual = Some(frame.clone());
        }
        events.extend(detection_events(&out, &prev).expect("same code"));
        prev = out;
    }
    (events, residual.expect("round 0 ran"))
}

/// For each schedule step, the gate acting on each qubit.
#[derive(Clone, Debug)]
pub struct GateIndex {
    steps: Vec<Vec<u32>>,
}

impl GateIndex {
    const NONE: u32 = u32::MAX;

    pub fn new(code: &CodeConfig, schedule: &GateSchedule) -> Self {
        let steps = schedule
            .steps
            .iter()
            .map(|gates| {
                let mut at = vec![Self::NONE; code.qubit_count()];
                for (i, g) in gates.iter().enumerate() {
                    let (a, b) = g.qubits();
                    at[a] = i as u32;
                    if let Some(b) = b {
                        at[b] = i as u32;
                    }
                }
                at
            })
            .collect();
        Self { steps }
    }

    fn gate(&self, step: usize, q: usize) -> Option<usize> {
        let i = self.steps[step][q];
        (i != Self::NONE).then_some(i as usize)
    }
}

/// Frame restricted to the few qubits a single fault reaches.
#[derive(Default)]
struct SparseFrame(Vec<(usize, bool, bool)>);

impl SparseFrame {
    fn get(&self, q: usize) -> (bool, bool) {
        self.0.iter().find(|e| e.0 == q).map_or((false, false), |e| (e.1, e.2))
    }

    fn toggle(&mut self, q: usize, x: bool, z: bool) {
        match self.0.iter_mut().find(|e| e.0 == q) {
            Some(e) => {
                e.1 ^= x;
                e.2 ^= z;
            }
            None if x || z => self.0.push((q, x, z)),
            None => {}
        }
    }

    fn apply(&mut self, fault: Fault) {
        match fault {
            Fault::Pauli1 { qubit, pauli } => self.toggle(qubit, pauli.has_x(), pauli.has_z()),
            Fault::Pauli2 { a, pa, b, pb } => {
                self.toggle(a, pa.has_x(), pa.has_z());
                self.toggle(b, pb.has_x(), pb.has_z());
            }
            Fault::MeasureFlip { .. } => {}
        }
    }

    /// Conjugate by `gate`, returning the flip of a measurement.
    fn conjugate(&mut self, gate: &Gate) -> Option<bool> {
        match *gate {
            Gate::Init { qubit, .. } => {
                let (x, z) = self.get(qubit);
                self.toggle(qubit, x, z);
                None
            }
            Gate::Cnot { control, target } => {
                let (cx, _) = self.get(control);
                let (_, tz) = self.get(target);
                self.toggle(target, cx, false);
                self.toggle(control, false, tz);
                None
            }
            Gate::Measure { qubit, basis, .. } => {
                let (x, z) = self.get(qubit);
                self.toggle(qubit, x, z);
                Some(match basis {
                    Basis::Z => x,
                    Basis::X => z,
                })
            }
            Gate::Idle { .. } => None,
        }
    }
}

/// Same result as [`propagate_fault`] at a cost independent of the code
/// size. The residual lists `(qubit, x, z)` for touched qubits in
/// ascending order.
pub fn propagate_fault_sparse(
    schedule: &GateSchedule,
    index: &GateIndex,
    step: usize,
    fault: Fault,
) -> (Vec<DetectionEvent>, Vec<(usize, bool, bool)>) {
    let mut frame = SparseFrame::default();
    let mut flips: [Vec<(StabKind, usize)>; 2] = Default::default();
    let mut residual = Vec::new();
    let mut todo = Vec::new();
    for (round, flipped) in flips.iter_mut().enumerate() {
        for (s, gates) in schedule.steps.iter().enumerate() {
            if round == 0 && s < step {
                continue;
            }
            if round > 0 || s > step {
                todo.clear();
                todo.extend(frame.0.iter().filter_map(|e| index.gate(s, e.0)));
                todo.sort_unstable();
                todo.dedup();
                for &g in &todo {
                    let gate = &gates[g];
                    if let (Some(true), Gate::Measure { kind, stab, .. }) = (frame.conjugate(gate), gate) {
                        flipped.push((*kind, *stab));
                    }
                }
                frame.0.retain(|e| e.1 || e.2);
            }
            if round == 0 && s == step {
                match fault {
                    Fault::MeasureFlip { kind, stab } => flipped.push((kind, stab)),
                    f => frame.apply(f),
                }
            }
        }
        if round == 0 {
            residual = frame.0.clone();
            residual.sort_unstable();
        }
    }
    // events compare each round's outcome with the one before
    let mut events = Vec::new();
    let [f0, f1] = &flips;
    for &(kind, stab) in f0 {
        events.push(DetectionEvent { kind, round: 0, stab });
    }
    let odd = |list: &[(StabKind, usize)], x: &(StabKind, usize)| list.iter().filter(|y| *y == x).count() % 2 == 1;
    let mut changed: Vec<(StabKind, usize)> = f0.iter().chain(f1).copied().collect();
    changed.sort_unstable();
    changed.dedup();
    for x in changed {
        if odd(f0, &x) != odd(f1, &x) {
            events.push(DetectionEvent {
                kind: x.0,
                round: 1,
                stab: x.1,
            });
        }
    }
    events.sort_by_key(|e| (e.round, e.kind, e.stab));
    (events, residual)
}
