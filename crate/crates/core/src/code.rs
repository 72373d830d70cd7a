//! Planar surface code layout and the syndrome extraction cycle.
//!
//! Coordinate convention (used everywhere in the crate): the code lives on a
//! `(2d-1) x (2d-1)` grid of sites `(row, col)`, row 0 at the top.
//!
//! * data qubits sit on sites with `row + col` even;
//! * Z stabilizers sit on sites with even `row` and odd `col`;
//! * X stabilizers sit on sites with odd `row` and even `col`.
//!
//! Z stabilizers therefore touch the top and bottom edges with weight 3 and
//! detect X errors, whose chains terminate on the left and right edges.
//! X stabilizers touch the left and right edges and detect Z errors, whose
//! chains terminate on the top and bottom edges. The logical X operator is the
//! X string along row 0, the logical Z operator the Z string down column 0;
//! both have length `d`.

use crate::error::ConfigError;

/// Stabilizer type, which is also the type of detection event it produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabKind {
    X,
    Z,
}

impl StabKind {
    pub const ALL: [StabKind; 2] = [StabKind::X, StabKind::Z];

    pub fn index(self) -> usize {
        match self {
            StabKind::X => 0,
            StabKind::Z => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            StabKind::X => 'X',
            StabKind::Z => 'Z',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "X" | "x" => Some(StabKind::X),
            "Z" | "z" => Some(StabKind::Z),
            _ => None,
        }
    }
}

/// Measurement / preparation basis of a syndrome qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

/// Compass direction of a data qubit relative to its syndrome qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    N = 0,
    W = 1,
    E = 2,
    S = 3,
}

/// Interaction order of Z syndrome qubits, one direction per CNOT layer.
pub const Z_ORDER: [Dir; 4] = [Dir::N, Dir::W, Dir::E, Dir::S];
/// Interaction order of X syndrome qubits. Together with [`Z_ORDER`] every
/// overlapping X/Z pair is interleaved an even number of times, so all
/// stabilizers can be measured simultaneously.
pub const X_ORDER: [Dir; 4] = [Dir::N, Dir::E, Dir::W, Dir::S];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilizer {
    pub kind: StabKind,
    pub row: usize,
    pub col: usize,
    pub ancilla: usize,
    /// Data qubit neighbours indexed by [`Dir`]; `None` on the code boundary.
    pub data: [Option<usize>; 4],
}

impl Stabilizer {
    pub fn weight(&self) -> usize {
        self.data.iter().flatten().count()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().flatten().copied()
    }
}

/// A distance-`d` planar surface code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeConfig {
    d: usize,
    size: usize,
    data: Vec<usize>,
    stabs: [Vec<Stabilizer>; 2],
}

impl CodeConfig {
    pub fn new(d: usize) -> Result<Self, ConfigError> {
        if d < 2 {
            return Err(ConfigError::Distance(d));
        }
        let size = 2 * d - 1;
        let at = |r: isize, c: isize| -> Option<usize> {
            if r < 0 || c < 0 || r >= size as isize || c >= size as isize {
                None
            } else {
                Some(r as usize * size + c as usize)
            }
        };
        let mut data = Vec::new();
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for row in 0..size {
            for col in 0..size {
                let q = row * size + col;
                if (row + col) % 2 == 0 {
                    data.push(q);
                    continue;
                }
                let (r, c) = (row as isize, col as isize);
                let nb = [at(r - 1, c), at(r, c - 1), at(r, c + 1), at(r + 1, c)];
                let kind = if row % 2 == 0 { StabKind::Z } else { StabKind::X };
                let stab = Stabilizer {
                    kind,
                    row,
                    col,
                    ancilla: q,
                    data: nb,
                };
                match kind {
                    StabKind::X => xs.push(stab),
                    StabKind::Z => zs.push(stab),
                }
            }
        }
        Ok(Self {
            d,
            size,
            data,
            stabs: [xs, zs],
        })
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    /// Side length of the site grid, `2d - 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn qubit_count(&self) -> usize {
        self.size * self.size
    }

    pub fn data_qubits(&self) -> &[usize] {
        &self.data
    }

    pub fn stabilizers(&self, kind: StabKind) -> &[Stabilizer] {
        &self.stabs[kind.index()]
    }

    pub fn stab_count(&self, kind: StabKind) -> usize {
        self.stabs[kind.index()].len()
    }

    pub fn coord(&self, q: usize) -> (usize, usize) {
        (q / self.size, q % self.size)
    }

    pub fn is_data(&self, q: usize) -> bool {
        let (r, c) = self.coord(q);
        (r + c) % 2 == 0
    }

    /// Index of the stabilizer of `kind` at `(row, col)`.
    pub fn stab_at(&self, kind: StabKind, row: usize, col: usize) -> Option<usize> {
        self.stabs[kind.index()]
            .iter()
            .position(|s| s.row == row && s.col == col)
    }

    /// Data qubits whose error parity decides a logical flip for errors seen
    /// by stabilizers of `kind`: column 0 for X errors (seen by Z
    /// stabilizers), row 0 for Z errors (seen by X stabilizers).
    pub fn observable_support(&self, kind: StabKind) -> Vec<usize> {
        match kind {
            StabKind::Z => (0..self.size).step_by(2).map(|r| r * self.size).collect(),
            StabKind::X => (0..self.size).step_by(2).collect(),
        }
    }

    /// Boundary identifier (0 or 1) nearest to a set of data qubits, for
    /// errors detected by stabilizers of `kind`. Z events terminate on the
    /// left (0) / right (1) edges, X events on the top (0) / bottom (1) edges.
    pub fn boundary_side(&self, kind: StabKind, qubits: &[usize]) -> u8 {
        if qubits.is_empty() {
            return 0;
        }
        let mid = (self.size - 1) as f64 / 2.0;
        let mean = qubits
            .iter()
            .map(|&q| {
                let (r, c) = self.coord(q);
                match kind {
                    StabKind::Z => c as f64,
                    StabKind::X => r as f64,
                }
            })
            .sum::<f64>()
            / qubits.len() as f64;
        u8::from(mean > mid)
    }
}

/// One operation of the syndrome extraction cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Init { qubit: usize, basis: Basis },
    Cnot { control: usize, target: usize },
    Measure { qubit: usize, basis: Basis, kind: StabKind, stab: usize },
    Idle { qubit: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Init { qubit, .. } | Gate::Measure { qubit, .. } | Gate::Idle { qubit } => {
                (qubit, None)
            }
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }
}

/// How syndrome qubits start a round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyndromeInit {
    /// No preparation step: a measured syndrome qubit is left in a known
    /// state and the next round starts from it.
    Reuse,
    /// A separate, noisy preparation step opens every round.
    Prepare,
}

/// The cyclic gate sequence of one round: optional syndrome preparation,
/// four CNOT layers, syndrome measurement. Every qubit appears exactly once
/// per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSchedule {
    pub steps: Vec<Vec<Gate>>,
    pub init: SyndromeInit,
}

impl GateSchedule {
    pub fn gate_count(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    /// Index of the first CNOT layer.
    pub fn first_cnot_step(&self) -> usize {
        match self.init {
            SyndromeInit::Reuse => 0,
            SyndromeInit::Prepare => 1,
        }
    }

    pub fn measure_step(&self) -> usize {
        self.steps.len() - 1
    }
}

pub fn build_schedule(code: &CodeConfig) -> GateSchedule {
    build_schedule_with(code, SyndromeInit::Reuse)
}

pub fn build_schedule_with(code: &CodeConfig, init_style: SyndromeInit) -> GateSchedule {
    let n = code.qubit_count();
    let mut steps = Vec::with_capacity(6);

    if init_style == SyndromeInit::Prepare {
        let mut init = Vec::new();
        for kind in StabKind::ALL {
            let basis = match kind {
                StabKind::X => Basis::X,
                StabKind::Z => Basis::Z,
            };
            for s in code.stabilizers(kind) {
                init.push(Gate::Init { qubit: s.ancilla, basis });
            }
        }
        init.extend(code.data_qubits().iter().map(|&qubit| Gate::Idle { qubit }));
        steps.push(init);
    }

    for layer in 0..4 {
        let mut busy = vec![false; n];
        let mut gates = Vec::new();
        for kind in StabKind::ALL {
            let dir = match kind {
                StabKind::X => X_ORDER[layer],
                StabKind::Z => Z_ORDER[layer],
            };
            for s in code.stabilizers(kind) {
                if let Some(q) = s.data[dir as usize] {
                    let gate = match kind {
                        StabKind::Z => Gate::Cnot { control: q, target: s.ancilla },
                        StabKind::X => Gate::Cnot { control: s.ancilla, target: q },
                    };
                    debug_assert!(!busy[q] && !busy[s.ancilla]);
                    busy[q] = true;
                    busy[s.ancilla] = true;
                    gates.push(gate);
                }
            }
        }
        // idle everything that did not take part in this layer
        for q in 0..n {
            if !busy[q] {
                gates.push(Gate::Idle { qubit: q });
            }
        }
        steps.push(gates);
    }

    let mut meas = Vec::new();
    for kind in StabKind::ALL {
        let basis = match kind {
            StabKind::X => Basis::X,
            StabKind::Z => Basis::Z,
        };
        for (i, s) in code.stabilizers(kind).iter().enumerate() {
            meas.push(Gate::Measure { qubit: s.ancilla, basis, kind, stab: i });
        }
    }
    meas.extend(code.data_qubits().iter().map(|&qubit| Gate::Idle { qubit }));
    steps.push(meas);

    GateSchedule { steps, init: init_style }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_distance() {
        assert!(CodeConfig::new(1).is_err());
        assert!(CodeConfig::new(0).is_err());
    }

    #[test]
    fn counts_and_weights() {
        for d in 2..=9 {
            let code = CodeConfig::new(d).unwrap();
            assert_eq!(code.data_qubits().len(), d * d + (d - 1) * (d - 1));
            for kind in StabKind::ALL {
                assert_eq!(code.stab_count(kind), d * (d - 1));
                for s in code.stabilizers(kind) {
                    let w = s.weight();
                    assert!(w == 3 || w == 4, "d={d} weight {w}");
                }
            }
            // every data qubit in at most 2 stabilizers of each kind
            for &q in code.data_qubits() {
                for kind in StabKind::ALL {
                    let n = code
                        .stabilizers(kind)
                        .iter()
                        .filter(|s| s.support().any(|x| x == q))
                        .count();
                    assert!(n <= 2);
                }
            }
        }
    }

    #[test]
    fn logical_supports_have_length_d() {
        for d in 2..=7 {
            let code = CodeConfig::new(d).unwrap();
            for kind in StabKind::ALL {
                let sup = code.observable_support(kind);
                assert_eq!(sup.len(), d);
                assert!(sup.iter().all(|&q| code.is_data(q)));
            }
        }
    }

    #[test]
    fn logical_operators_commute_with_stabilizers() {
        let code = CodeConfig::new(5).unwrap();
        // X string on row 0 vs Z stabilizers, Z string on column 0 vs X stabilizers
        let row0: Vec<usize> = code.observable_support(StabKind::X);
        let col0: Vec<usize> = code.observable_support(StabKind::Z);
        for s in code.stabilizers(StabKind::Z) {
            assert_eq!(s.support().filter(|q| row0.contains(q)).count() % 2, 0);
        }
        for s in code.stabilizers(StabKind::X) {
            assert_eq!(s.support().filter(|q| col0.contains(q)).count() % 2, 0);
        }
        // and they anticommute with each other
        assert_eq!(row0.iter().filter(|q| col0.contains(q)).count(), 1);
    }

    #[test]
    fn schedule_layers_are_conflict_free() {
        for d in 2..=6 {
            let code = CodeConfig::new(d).unwrap();
            for (style, len) in [(SyndromeInit::Reuse, 5), (SyndromeInit::Prepare, 6)] {
                let sched = build_schedule_with(&code, style);
                assert_eq!(sched.steps.len(), len);
                for step in &sched.steps {
                    let mut seen = vec![0u8; code.qubit_count()];
                    for g in step {
                        let (a, b) = g.qubits();
                        seen[a] += 1;
                        if let Some(b) = b {
                            seen[b] += 1;
                        }
                    }
                    assert!(seen.iter().all(|&c| c == 1));
                }
            }
        }
    }

    #[test]
    fn bulk_syndrome_qubits_get_four_cnots() {
        let code = CodeConfig::new(4).unwrap();
        let sched = build_schedule(&code);
        for kind in StabKind::ALL {
            for s in code.stabilizers(kind) {
                let first = sched.first_cnot_step();
                let n = sched.steps[first..first + 4]
                    .iter()
                    .flatten()
                    .filter(|g| match g {
                        Gate::Cnot { control, target } => {
                            *control == s.ancilla || *target == s.ancilla
                        }
                        _ => false,
                    })
                    .count();
                assert_eq!(n, s.weight());
            }
        }
        assert_eq!(build_schedule(&code), sched);
    }

    #[test]
    fn interleaving_is_even_for_overlapping_pairs() {
        // Simultaneous measurement requires, for each X/Z pair sharing data
        // qubits, an even number of shared qubits on which X acts first.
        let code = CodeConfig::new(6).unwrap();
        let layer = |order: &[Dir; 4], dir: usize| order.iter().position(|&d| d as usize == dir).unwrap();
        for x in code.stabilizers(StabKind::X) {
            for z in code.stabilizers(StabKind::Z) {
                let mut x_first = 0;
                let mut shared = 0;
                for (dx, qx) in x.data.iter().enumerate() {
                    for (dz, qz) in z.data.iter().enumerate() {
                        if qx.is_some() && qx == qz {
                            shared += 1;
                            if layer(&X_ORDER, dx) < layer(&Z_ORDER, dz) {
                                x_first += 1;
                            }
                        }
                    }
                }
                assert!(shared == 0 || shared == 2);
                assert_eq!(x_first % 2, 0);
            }
        }
    }
}
