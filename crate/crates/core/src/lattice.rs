//! Space-time lattice of dots (possible detection events) and lines (pairs
//! of dots, or a dot and a boundary, produced by a single fault).
//!
//! A dot is identified by `round * n_s + stab`, where `n_s` is the number of
//! stabilizers of the lattice's kind. Ordering dots by id therefore orders
//! them by (round, row, column).

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rustc_hash::FxHashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::code::{build_schedule, CodeConfig, GateSchedule, StabKind};
use crate::error::LatticeError;
use crate::sim::{propagate_fault_sparse, DepolarizingModel, Fault, GateIndex};

pub type Dot = u64;

/// Number of fractional bits kept in lattice weights. Keeping every weight
/// on this dyadic grid makes sums of a few thousand weights exact in `f64`,
/// so totals reached through different paths compare equal.
pub const WEIGHT_BITS: i32 = 30;

pub fn quantize(w: f64) -> f64 {
    let s = (WEIGHT_BITS as f64).exp2();
    (w * s).round() / s
}

/// `-ln(p_line)`.
pub fn line_weight(p_line: f64) -> Result<f64, LatticeError> {
    if !(p_line > 0.0 && p_line <= 1.0) {
        return Err(LatticeError::LineProbability(p_line));
    }
    Ok(-p_line.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Dot(Dot),
    Boundary(u8),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub target: Target,
    pub weight: f64,
    pub flips: bool,
    pub line: u32,
}

/// Read access to a dots-and-lines graph.
pub trait DotGraph: Send + Sync {
    fn neighbors(&self, dot: Dot, out: &mut Vec<Neighbor>);
    fn round(&self, dot: Dot) -> u32;
    fn boundary_count(&self) -> usize;
    /// Data qubits flipped by the representative fault of `line`.
    fn line_data(&self, line: u32) -> &[usize];
    fn dot_name(&self, dot: Dot) -> String;
}

impl<G: DotGraph + ?Sized> DotGraph for Arc<G> {
    fn neighbors(&self, dot: Dot, out: &mut Vec<Neighbor>) {
        (**self).neighbors(dot, out)
    }
    fn round(&self, dot: Dot) -> u32 {
        (**self).round(dot)
    }
    fn boundary_count(&self) -> usize {
        (**self).boundary_count()
    }
    fn line_data(&self, line: u32) -> &[usize] {
        (**self).line_data(line)
    }
    fn dot_name(&self, dot: Dot) -> String {
        (**self).dot_name(dot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    /// Stabilizer index and round offset from the fault round (0 or 1).
    Dot { dt: u8, stab: u32 },
    Boundary(u8),
}

/// All faults of one fault round that produce the same pair of endpoints.
#[derive(Clone, Debug)]
pub struct Template {
    pub a: End,
    pub b: End,
    pub p: f64,
    /// Net data-qubit error left at the end of the fault round.
    pub data: Vec<usize>,
    pub flips: bool,
    /// Contributing `(step, fault)` pairs.
    pub sources: Vec<(usize, Fault)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct RelNeighbor {
    stab: u32,
    dr: i8,
    boundary: Option<u8>,
    weight: f64,
    flips: bool,
    line: u32,
}

/// Per-stabilizer neighbor lists in one buffer.
#[derive(Clone, Debug, Default)]
struct Csr {
    start: Vec<u32>,
    items: Vec<RelNeighbor>,
}

impl Csr {
    fn row(&self, s: usize) -> &[RelNeighbor] {
        &self.items[self.start[s] as usize..self.start[s + 1] as usize]
    }
}

/// The periodic lattice of one event kind.
#[derive(Clone, Debug)]
pub struct Lattice {
    kind: StabKind,
    code: Arc<CodeConfig>,
    p: f64,
    n_s: usize,
    templates: Arc<Vec<Template>>,
    // indexed by has_prev * 2 + has_cur, then stabilizer
    adjacency: Arc<[Csr; 4]>,
    cap: Option<u32>,
}

fn data_support(code: &CodeConfig, kind: StabKind, residual: &[(usize, bool, bool)]) -> Vec<usize> {
    residual
        .iter()
        .filter(|&&(q, x, z)| code.is_data(q) && if kind == StabKind::Z { x } else { z })
        .map(|e| e.0)
        .collect()
}

/// Enumerate every single fault of the schedule and aggregate them into
/// line templates for events of `kind`.
pub fn enumerate_single_errors(
    code: &CodeConfig,
    schedule: &GateSchedule,
    model: &DepolarizingModel,
    kind: StabKind,
) -> Result<Vec<Template>, LatticeError> {
    if model.p() <= 0.0 {
        return Err(LatticeError::ZeroProbability);
    }
    let want_x = kind == StabKind::Z;
    let observable = code.observable_support(kind);
    let index = GateIndex::new(code, schedule);
    let mut map: BTreeMap<(End, End), Template> = BTreeMap::new();
    for (step, gates) in schedule.steps.iter().enumerate() {
        for gate in gates {
            for (fault, p) in model.channel(gate) {
                let Some(part) = fault.component(want_x) else {
                    continue;
                };
                let (events, residual) = propagate_fault_sparse(schedule, &index, step, part);
                let mut ends: Vec<End> = events
                    .iter()
                    .filter(|e| e.kind == kind)
                    .map(|e| End::Dot {
                        dt: e.round as u8,
                        stab: e.stab as u32,
                    })
                    .collect();
                if ends.len() != events.len() || ends.len() > 2 {
                    return Err(LatticeError::TooManyEvents(events.len()));
                }
                if ends.is_empty() {
                    continue;
                }
                let data = data_support(code, kind, &residual);
                if ends.len() == 1 {
                    ends.push(End::Boundary(code.boundary_side(kind, &data)));
                }
                ends.sort();
                let key = (ends[0], ends[1]);
                let flips = observable.iter().filter(|q| data.contains(q)).count() % 2 == 1;
                let t = map.entry(key).or_insert_with(|| Template {
                    a: key.0,
                    b: key.1,
                    p: 0.0,
                    data,
                    flips,
                    sources: Vec::new(),
                });
                t.p += p;
                t.sources.push((step, fault));
            }
        }
    }
    Ok(map.into_values().collect())
}

impl Lattice {
    pub fn new(code: Arc<CodeConfig>, model: &DepolarizingModel, kind: StabKind) -> Result<Self, LatticeError> {
        let schedule = build_schedule(&code);
        Self::with_schedule(code, &schedule, model, kind)
    }

    pub fn with_schedule(
        code: Arc<CodeConfig>,
        schedule: &GateSchedule,
        model: &DepolarizingModel,
        kind: StabKind,
    ) -> Result<Self, LatticeError> {
        let templates = enumerate_single_errors(&code, schedule, model, kind)?;
        let n_s = code.stab_count(kind);
        let mut adjacency: [Csr; 4] = Default::default();
        for (case, adj) in adjacency.iter_mut().enumerate() {
            let (has_prev, has_cur) = (case >= 2, case % 2 == 1);
            let mut acc: Vec<BTreeMap<(i8, u32, Option<u8>), (f64, u32)>> = vec![BTreeMap::new(); n_s];
            for (id, t) in templates.iter().enumerate() {
                for (me, other) in [(t.a, t.b), (t.b, t.a)] {
                    let End::Dot { dt, stab } = me else { continue };
                    if (dt == 0 && !has_cur) || (dt == 1 && !has_prev) {
                        continue;
                    }
                    let key = match other {
                        End::Dot { dt: odt, stab: os } => (odt as i8 - dt as i8, os, None),
                        End::Boundary(k) => (0, 0, Some(k)),
                    };
                    let e = acc[stab as usize].entry(key).or_insert((0.0, id as u32));
                    e.0 += t.p;
                }
            }
            adj.start.push(0);
            for m in acc {
                for ((dr, stab, boundary), (p, line)) in m {
                    let w = line_weight(p.min(1.0)).expect("positive probability");
                    adj.items.push(RelNeighbor {
                        stab,
                        dr,
                        boundary,
                        weight: quantize(w),
                        flips: templates[line as usize].flips,
                        line,
                    });
                }
                adj.start.push(adj.items.len() as u32);
            }
        }
        Ok(Self {
            kind,
            code,
            p: model.p(),
            n_s,
            templates: Arc::new(templates),
            adjacency: Arc::new(adjacency),
            cap: None,
        })
    }

    pub fn kind(&self) -> StabKind {
        self.kind
    }

    pub fn code(&self) -> &Arc<CodeConfig> {
        &self.code
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn stab_count(&self) -> usize {
        self.n_s
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn cap(&self) -> Option<u32> {
        self.cap
    }

    /// The same lattice closed by a perfect round `cap`: faults only occur in
    /// rounds before `cap` and no dots exist after it.
    pub fn capped(&self, cap: u32) -> Self {
        Self {
            cap: Some(cap),
            ..self.clone()
        }
    }

    pub fn uncapped(&self) -> Self {
        Self {
            cap: None,
            ..self.clone()
        }
    }

    pub fn dot(&self, round: u32, stab: usize) -> Dot {
        round as u64 * self.n_s as u64 + stab as u64
    }

    pub fn stab_of(&self, dot: Dot) -> usize {
        (dot % self.n_s as u64) as usize
    }

    pub fn contains(&self, dot: Dot) -> bool {
        self.cap.map_or(true, |c| self.round(dot) <= c)
    }

    /// Largest boundary distance over the dots of the first few rounds,
    /// which bounds it everywhere by periodicity.
    pub fn max_boundary_distance(&self) -> f64 {
        let mut best: f64 = 0.0;
        for round in 0..3u32 {
            for s in 0..self.n_s {
                let dot = self.dot(round, s);
                if self.contains(dot) {
                    let b = boundary_distance(self, dot).expect("boundary reachable");
                    best = best.max(b.weight);
                }
            }
        }
        best
    }
}

impl DotGraph for Lattice {
    fn neighbors(&self, dot: Dot, out: &mut Vec<Neighbor>) {
        out.clear();
        let round = self.round(dot);
        let has_cur = match self.cap {
            Some(c) if round > c => return,
            Some(c) => round < c,
            None => true,
        };
        let case = usize::from(round >= 1) * 2 + usize::from(has_cur);
        let s = self.stab_of(dot);
        for n in self.adjacency[case].row(s) {
            let target = match n.boundary {
                Some(k) => Target::Boundary(k),
                None => Target::Dot(self.dot((round as i64 + n.dr as i64) as u32, n.stab as usize)),
            };
            out.push(Neighbor {
                target,
                weight: n.weight,
                flips: n.flips,
                line: n.line,
            });
        }
    }

    fn round(&self, dot: Dot) -> u32 {
        (dot / self.n_s as u64) as u32
    }

    fn boundary_count(&self) -> usize {
        2
    }

    fn line_data(&self, line: u32) -> &[usize] {
        &self.templates[line as usize].data
    }

    fn dot_name(&self, dot: Dot) -> String {
        let st = &self.code.stabilizers(self.kind)[self.stab_of(dot)];
        format!("{}:{}:{}:{}", self.kind.symbol(), self.round(dot), st.row, st.col)
    }
}

/// `f64` ordered by `total_cmp`, for heaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ordf(pub f64);

impl Eq for Ordf {}

impl PartialOrd for Ordf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A minimum-weight path as a list of lines from one end to the other.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub weight: f64,
    pub flips: bool,
    pub hops: Vec<(Target, Neighbor)>,
}

impl Path {
    /// Data qubits flipped by applying every line of the path.
    pub fn data<G: DotGraph + ?Sized>(&self, g: &G) -> Vec<usize> {
        let mut acc: BTreeMap<usize, bool> = BTreeMap::new();
        for (_, n) in &self.hops {
            for &q in g.line_data(n.line) {
                *acc.entry(q).or_default() ^= true;
            }
        }
        acc.into_iter().filter(|e| e.1).map(|e| e.0).collect()
    }
}

/// Dijkstra from `src` until `stop` accepts a settled target.
fn search<G: DotGraph + ?Sized>(
    g: &G,
    src: Dot,
    mut stop: impl FnMut(Target) -> bool,
) -> Option<(Target, f64, FxHashMap<Target, (Target, Neighbor)>)> {
    let mut dist: FxHashMap<Target, f64> = FxHashMap::default();
    let mut pred: FxHashMap<Target, (Target, Neighbor)> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    let mut buf = Vec::new();
    dist.insert(Target::Dot(src), 0.0);
    heap.push(Reverse((Ordf(0.0), Target::Dot(src))));
    while let Some(Reverse((Ordf(d), t))) = heap.pop() {
        if dist.get(&t).is_some_and(|&x| x < d) {
            continue;
        }
        if stop(t) {
            return Some((t, d, pred));
        }
        let Target::Dot(x) = t else { continue };
        g.neighbors(x, &mut buf);
        for n in &buf {
            let nd = d + n.weight;
            let better = match dist.get(&n.target) {
                None => true,
                Some(&old) => nd < old,
            };
            if better {
                dist.insert(n.target, nd);
                pred.insert(n.target, (t, *n));
                heap.push(Reverse((Ordf(nd), n.target)));
            }
        }
    }
    None
}

fn unwind(src: Dot, end: Target, weight: f64, pred: &FxHashMap<Target, (Target, Neighbor)>) -> Path {
    let mut hops = Vec::new();
    let mut cur = end;
    while cur != Target::Dot(src) {
        let (from, n) = pred[&cur];
        hops.push((from, n));
        cur = from;
    }
    hops.reverse();
    let flips = hops.iter().fold(false, |a, h| a ^ h.1.flips);
    Path { weight, flips, hops }
}

fn name<G: DotGraph + ?Sized>(g: &G, t: Target) -> String {
    match t {
        Target::Dot(d) => g.dot_name(d),
        Target::Boundary(k) => format!("BOUNDARY:{k}"),
    }
}

/// Exact minimum-weight path between two targets. Dot-to-boundary paths
/// are searched from the dot; boundary-to-boundary is only defined for
/// equal boundaries.
pub fn min_weight_path<G: DotGraph + ?Sized>(g: &G, a: Target, b: Target) -> Result<Path, LatticeError> {
    if a == b {
        return Ok(Path {
            weight: 0.0,
            flips: false,
            hops: Vec::new(),
        });
    }
    let (src, dst, reversed) = match (a, b) {
        (Target::Dot(x), _) => (x, b, false),
        (Target::Boundary(_), Target::Dot(y)) => (y, a, true),
        _ => return Err(LatticeError::Disconnected(name(g, a), name(g, b))),
    };
    let (_, w, pred) = search(g, src, |t| t == dst)
        .ok_or_else(|| LatticeError::Disconnected(name(g, a), name(g, b)))?;
    let mut path = unwind(src, dst, w, &pred);
    if reversed {
        path.hops = path
            .hops
            .iter()
            .rev()
            .map(|(from, n)| {
                let back = Neighbor { target: *from, ..*n };
                (n.target, back)
            })
            .collect();
    }
    Ok(path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPath {
    pub weight: f64,
    pub boundary: u8,
    pub path: Path,
}

/// Nearest boundary of `dot`; ties go to the lowest boundary id.
pub fn boundary_distance<G: DotGraph + ?Sized>(g: &G, dot: Dot) -> Result<BoundaryPath, LatticeError> {
    let (end, w, pred) = search(g, dot, |t| matches!(t, Target::Boundary(_)))
        .ok_or_else(|| LatticeError::Disconnected(g.dot_name(dot), "BOUNDARY".into()))?;
    let Target::Boundary(k) = end else { unreachable!() };
    Ok(BoundaryPath {
        weight: w,
        boundary: k,
        path: unwind(dot, end, w, &pred),
    })
}

fn parse_err(line: usize, msg: impl Into<String>) -> LatticeError {
    LatticeError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Render the dots of rounds `0..=last_round` and every line among them.
pub fn dump<G: DotGraph + ?Sized>(g: &G, dots: &[Dot]) -> String {
    let mut out = String::new();
    let set: std::collections::HashSet<Dot> = dots.iter().copied().collect();
    for &d in dots {
        let name = g.dot_name(d);
        let parts: Vec<&str> = name.split(':').collect();
        let _ = writeln!(out, "DOT {} {} {} {}", parts[0], parts[1], parts[2], parts[3]);
    }
    let mut buf = Vec::new();
    for &d in dots {
        g.neighbors(d, &mut buf);
        for n in &buf {
            let other = match n.target {
                Target::Dot(o) if set.contains(&o) && o > d => g.dot_name(o),
                Target::Boundary(k) => format!("BOUNDARY:{k}"),
                _ => continue,
            };
            let p = (-n.weight).exp();
            let _ = writeln!(out, "LINE {} {} {} {}", g.dot_name(d), other, p, n.weight);
        }
    }
    out
}

impl Lattice {
    /// Dump the dots of rounds `0..=last_round` (clipped to the cap).
    pub fn dump_rounds(&self, last_round: u32) -> String {
        let last = self.cap.map_or(last_round, |c| c.min(last_round));
        let dots: Vec<Dot> = (0..=last)
            .flat_map(|r| (0..self.n_s).map(move |s| (r, s)))
            .map(|(r, s)| self.dot(r, s))
            .collect();
        dump(self, &dots)
    }
}

/// A lattice read from the text format, with dots numbered in
/// (round, row, column) order.
#[derive(Clone, Debug, Default)]
pub struct ExplicitLattice {
    names: Vec<String>,
    coords: Vec<(char, u32, usize, usize)>,
    index: HashMap<String, Dot>,
    adj: Vec<Vec<Neighbor>>,
    boundaries: usize,
    lines: Vec<(Target, Target, f64, f64)>,
}

impl ExplicitLattice {
    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        let mut dots = Vec::new();
        let mut raw_lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok.first().copied() {
                None => continue,
                Some(t) if t.starts_with('#') => continue,
                Some("DOT") => {
                    if tok.len() != 5 {
                        return Err(parse_err(ln, "DOT needs type round row col"));
                    }
                    let ty = tok[1].chars().next().filter(|c| *c == 'X' || *c == 'Z');
                    let ty = ty.ok_or_else(|| parse_err(ln, "dot type must be X or Z"))?;
                    let n = |s: &str| s.parse::<usize>().map_err(|e| parse_err(ln, e.to_string()));
                    dots.push((ty, n(tok[2])? as u32, n(tok[3])?, n(tok[4])?));
                }
                Some("LINE") => {
                    if tok.len() != 5 {
                        return Err(parse_err(ln, "LINE needs a b p w"));
                    }
                    let f = |s: &str| s.parse::<f64>().map_err(|e| parse_err(ln, e.to_string()));
                    raw_lines.push((ln, tok[1].to_string(), tok[2].to_string(), f(tok[3])?, f(tok[4])?));
                }
                Some(other) => return Err(parse_err(ln, format!("unknown record {other}"))),
            }
        }
        dots.sort_by_key(|d| (d.1, d.2, d.3, d.0));
        dots.dedup();
        let mut g = ExplicitLattice::default();
        for (i, &(ty, r, row, col)) in dots.iter().enumerate() {
            let name = format!("{ty}:{r}:{row}:{col}");
            g.index.insert(name.clone(), i as Dot);
            g.names.push(name);
            g.coords.push((ty, r, row, col));
        }
        g.adj = vec![Vec::new(); dots.len()];
        for (ln, a, b, p, w) in raw_lines {
            if !(p > 0.0 && p <= 1.0) || !(w >= 0.0) {
                return Err(parse_err(ln, "line probability or weight out of range"));
            }
            let ta = g.target(&a).ok_or_else(|| parse_err(ln, format!("unknown dot {a}")))?;
            let tb = g.target(&b).ok_or_else(|| parse_err(ln, format!("unknown dot {b}")))?;
            let id = g.lines.len() as u32;
            g.lines.push((ta, tb, p, w));
            let w = quantize(w);
            for (x, y) in [(ta, tb), (tb, ta)] {
                match x {
                    Target::Dot(d) => g.adj[d as usize].push(Neighbor {
                        target: y,
                        weight: w,
                        flips: false,
                        line: id,
                    }),
                    Target::Boundary(k) => g.boundaries = g.boundaries.max(k as usize + 1),
                }
            }
        }
        for list in &mut g.adj {
            list.sort_by(|a, b| a.target.cmp(&b.target));
        }
        Ok(g)
    }

    fn target(&self, s: &str) -> Option<Target> {
        match s.strip_prefix("BOUNDARY:") {
            Some(k) => k.parse().ok().map(Target::Boundary),
            None => self.index.get(s).copied().map(Target::Dot),
        }
    }

    pub fn dot_by_name(&self, s: &str) -> Option<Dot> {
        self.index.get(s).copied()
    }

    /// Dot with the given type and coordinates.
    pub fn find(&self, ty: char, round: u32, row: usize, col: usize) -> Option<Dot> {
        self.dot_by_name(&format!("{ty}:{round}:{row}:{col}"))
    }

    pub fn dot_count(&self) -> usize {
        self.names.len()
    }

    /// `(a, b, p, w)` for every line, in file order.
    pub fn lines(&self) -> &[(Target, Target, f64, f64)] {
        &self.lines
    }

    /// Replace the probability and weight of line `id`.
    pub fn set_line(&mut self, id: u32, p: f64, w: f64) {
        let (a, b, _, _) = self.lines[id as usize];
        self.lines[id as usize] = (a, b, p, w);
        for x in [a, b] {
            if let Target::Dot(d) = x {
                for n in &mut self.adj[d as usize] {
                    if n.line == id {
                        n.weight = quantize(w);
                    }
                }
            }
        }
    }
}

impl DotGraph for ExplicitLattice {
    fn neighbors(&self, dot: Dot, out: &mut Vec<Neighbor>) {
        out.clear();
        out.extend_from_slice(&self.adj[dot as usize]);
    }

    fn round(&self, dot: Dot) -> u32 {
        self.coords[dot as usize].1
    }

    fn boundary_count(&self) -> usize {
        self.boundaries
    }

    fn line_data(&self, _line: u32) -> &[usize] {
        &[]
    }

    fn dot_name(&self, dot: Dot) -> String {
        self.names[dot as usize].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_schedule_with, SyndromeInit};
    use crate::sim::{Injection, Simulator};

    fn lattice(d: usize, p: f64, kind: StabKind) -> Lattice {
        let code = Arc::new(CodeConfig::new(d).unwrap());
        Lattice::new(code, &DepolarizingModel::new(p).unwrap(), kind).unwrap()
    }

    #[test]
    fn line_weight_values() {
        assert_eq!(line_weight(1.0).unwrap(), 0.0);
        assert!((line_weight((-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((line_weight(0.004).unwrap() - 5.521460917862246).abs() < 1e-12);
        assert!(line_weight(0.0).is_err());
        assert!(line_weight(1.5).is_err());
    }

    #[test]
    fn zero_probability_rejected() {
        let code = Arc::new(CodeConfig::new(3).unwrap());
        let m = DepolarizingModel::new(0.0).unwrap();
        assert_eq!(Lattice::new(code, &m, StabKind::Z).unwrap_err(), LatticeError::ZeroProbability);
    }

    #[test]
    fn measurement_flip_gives_vertical_line() {
        let lat = lattice(4, 0.001, StabKind::X);
        let t = lat
            .templates()
            .iter()
            .find(|t| t.sources.iter().any(|s| matches!(s.1, Fault::MeasureFlip { stab: 0, .. })))
            .unwrap();
        assert_eq!(t.a, End::Dot { dt: 0, stab: 0 });
        assert_eq!(t.b, End::Dot { dt: 1, stab: 0 });
        assert!(t.p >= 0.001);
        assert!(t.data.is_empty());
    }

    #[test]
    fn boundary_lines_on_two_opposite_sides() {
        for kind in StabKind::ALL {
            let lat = lattice(4, 0.001, kind);
            let sides: std::collections::BTreeSet<u8> = lat
                .templates()
                .iter()
                .filter_map(|t| match t.b {
                    End::Boundary(k) => Some(k),
                    _ => None,
                })
                .collect();
            assert_eq!(sides.into_iter().collect::<Vec<_>>(), vec![0, 1]);
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        let lat = lattice(3, 0.002, StabKind::Z).capped(4);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for r in 0..=4 {
            for s in 0..lat.stab_count() {
                let x = lat.dot(r, s);
                lat.neighbors(x, &mut a);
                for n in a.clone() {
                    if let Target::Dot(y) = n.target {
                        lat.neighbors(y, &mut b);
                        let back = b.iter().find(|m| m.target == Target::Dot(x)).expect("reverse line");
                        assert_eq!(back.weight, n.weight);
                    }
                }
            }
        }
    }

    #[test]
    fn shortest_logical_path_has_d_lines() {
        // count lines on the cheapest boundary-to-boundary chain, using only
        // spatial lines of a bulk round
        for d in [3usize, 4, 5] {
            let lat = lattice(d, 0.001, StabKind::Z);
            let mut best = usize::MAX;
            for s in 0..lat.stab_count() {
                let dot = lat.dot(5, s);
                let mut buf = Vec::new();
                lat.neighbors(dot, &mut buf);
                if !buf.iter().any(|n| n.target == Target::Boundary(0)) {
                    continue;
                }
                // breadth-first over spatial lines to boundary 1
                let mut seen = std::collections::HashMap::new();
                seen.insert(dot, 1usize);
                let mut q = std::collections::VecDeque::from([dot]);
                while let Some(x) = q.pop_front() {
                    lat.neighbors(x, &mut buf);
                    for n in buf.clone() {
                        match n.target {
                            Target::Boundary(1) => best = best.min(seen[&x] + 1),
                            Target::Dot(y) if lat.round(y) == 5 && !seen.contains_key(&y) => {
                                seen.insert(y, seen[&x] + 1);
                                q.push_back(y);
                            }
                            _ => {}
                        }
                    }
                }
            }
            assert_eq!(best, d, "d = {d}");
        }
    }

    #[test]
    fn simulator_agrees_with_every_template() {
        let code = Arc::new(CodeConfig::new(4).unwrap());
        let model = DepolarizingModel::new(0.001).unwrap();
        for style in [SyndromeInit::Reuse, SyndromeInit::Prepare] {
            let sched = Arc::new(build_schedule_with(&code, style));
            for kind in StabKind::ALL {
                let lat = Lattice::with_schedule(code.clone(), &sched, &model, kind).unwrap();
                for t in lat.templates() {
                    for &(step, fault) in &t.sources {
                        let mut sim = Simulator::with_schedule(code.clone(), sched.clone(), DepolarizingModel::new(0.0).unwrap(), 0);
                        let f = 3u32;
                        sim.inject(Injection { round: f, step, fault });
                        let mut ev = Vec::new();
                        for _ in 0..f + 3 {
                            ev.extend(sim.step(true).into_iter().filter(|e| e.kind == kind));
                        }
                        let mut want: Vec<(u32, usize)> = [t.a, t.b]
                            .iter()
                            .filter_map(|e| match *e {
                                End::Dot { dt, stab } => Some((f + dt as u32, stab as usize)),
                                End::Boundary(_) => None,
                            })
                            .collect();
                        want.sort();
                        let mut got: Vec<(u32, usize)> = ev.iter().map(|e| (e.round, e.stab)).collect();
                        got.sort();
                        assert_eq!(got, want, "{fault:?} at step {step}");
                    }
                }
            }
        }
    }

    #[test]
    fn time_periodic_in_bulk() {
        let lat = lattice(5, 0.003, StabKind::X);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for s in 0..lat.stab_count() {
            lat.neighbors(lat.dot(2, s), &mut a);
            lat.neighbors(lat.dot(7, s), &mut b);
            let shift = |v: &Vec<Neighbor>, r: u32| -> Vec<(Option<i64>, u64)> {
                v.iter()
                    .map(|n| {
                        let t = match n.target {
                            Target::Dot(x) => Some(x as i64 - lat.dot(r, 0) as i64),
                            Target::Boundary(k) => Some(-1000 - k as i64),
                        };
                        (t, n.weight.to_bits())
                    })
                    .collect()
            };
            assert_eq!(shift(&a, 2), shift(&b, 7));
        }
        let p1 = min_weight_path(&lat, Target::Dot(lat.dot(2, 1)), Target::Dot(lat.dot(4, 7))).unwrap();
        let p2 = min_weight_path(&lat, Target::Dot(lat.dot(12, 1)), Target::Dot(lat.dot(14, 7))).unwrap();
        assert_eq!(p1.weight, p2.weight);
    }

    #[test]
    fn capped_lattice_has_no_dots_past_cap() {
        let lat = lattice(3, 0.01, StabKind::Z).capped(3);
        let mut buf = Vec::new();
        for s in 0..lat.stab_count() {
            lat.neighbors(lat.dot(3, s), &mut buf);
            assert!(buf.iter().all(|n| match n.target {
                Target::Dot(x) => lat.round(x) <= 3,
                _ => true,
            }));
            assert!(!buf.is_empty());
            lat.neighbors(lat.dot(4, s), &mut buf);
            assert!(buf.is_empty());
        }
    }

    #[test]
    fn trivial_paths() {
        let lat = lattice(3, 0.01, StabKind::Z);
        let x = Target::Dot(lat.dot(1, 2));
        let p = min_weight_path(&lat, x, x).unwrap();
        assert_eq!(p.weight, 0.0);
        assert!(p.hops.is_empty());
        let mut buf = Vec::new();
        lat.neighbors(lat.dot(1, 2), &mut buf);
        let n = buf.iter().find(|n| matches!(n.target, Target::Dot(_))).unwrap();
        let q = min_weight_path(&lat, x, n.target).unwrap();
        assert!(q.weight <= n.weight);
        assert!(min_weight_path(&lat, Target::Boundary(0), Target::Boundary(1)).is_err());
    }

    #[test]
    fn boundary_distance_matches_per_boundary_paths() {
        let lat = lattice(5, 0.004, StabKind::Z).capped(3);
        for r in 0..=3 {
            for s in 0..lat.stab_count() {
                let dot = lat.dot(r, s);
                let b = boundary_distance(&lat, dot).unwrap();
                let w0 = min_weight_path(&lat, Target::Dot(dot), Target::Boundary(0)).unwrap().weight;
                let w1 = min_weight_path(&lat, Target::Dot(dot), Target::Boundary(1)).unwrap().weight;
                assert_eq!(b.weight, w0.min(w1));
                let expect = if w0 <= w1 { 0 } else { 1 };
                assert_eq!(b.boundary, expect);
                let sum: f64 = b.path.hops.iter().map(|h| h.1.weight).sum();
                assert_eq!(sum, b.weight);
            }
        }
    }

    fn brute_force(g: &ExplicitLattice, a: Dot, b: Target, max_lines: usize) -> Option<f64> {
        fn go(g: &ExplicitLattice, x: Dot, b: Target, left: usize, seen: &mut Vec<Dot>, acc: f64, best: &mut Option<f64>) {
            let mut buf = Vec::new();
            g.neighbors(x, &mut buf);
            for n in buf {
                let w = acc + n.weight;
                if n.target == b {
                    if best.map_or(true, |v| w < v) {
                        *best = Some(w);
                    }
                    continue;
                }
                if let Target::Dot(y) = n.target {
                    if left > 1 && !seen.contains(&y) {
                        seen.push(y);
                        go(g, y, b, left - 1, seen, w, best);
                        seen.pop();
                    }
                }
            }
        }
        let mut best = None;
        go(g, a, b, max_lines, &mut vec![a], 0.0, &mut best);
        best
    }

    #[test]
    fn paths_match_brute_force_enumeration() {
        use rand::{Rng, SeedableRng};
        let lat = lattice(5, 0.005, StabKind::X).capped(1);
        let g = ExplicitLattice::parse(&lat.dump_rounds(1)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = g.dot_count() as u64;
        let mut checked = 0;
        for _ in 0..50 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let p = min_weight_path(&g, Target::Dot(a), Target::Dot(b)).unwrap();
            let q = min_weight_path(&g, Target::Dot(b), Target::Dot(a)).unwrap();
            assert_eq!(p.weight, q.weight);
            if p.hops.len() <= 5 {
                let bf = brute_force(&g, a, Target::Dot(b), 5).unwrap_or(0.0);
                if a != b {
                    assert_eq!(p.weight, bf);
                }
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn path_weight_is_additive() {
        let lat = lattice(5, 0.004, StabKind::Z);
        let p = min_weight_path(&lat, Target::Dot(lat.dot(0, 0)), Target::Dot(lat.dot(3, 19))).unwrap();
        let prod: f64 = p.hops.iter().map(|h| (-h.1.weight).exp()).product();
        assert!((p.weight - (-prod.ln())).abs() <= 1e-9 * p.weight);
    }

    #[test]
    fn dump_parse_round_trip() {
        let lat = lattice(3, 0.01, StabKind::Z).capped(2);
        let text = lat.dump_rounds(2);
        let g = ExplicitLattice::parse(&text).unwrap();
        assert_eq!(g.dot_count(), 3 * lat.stab_count());
        for r in 0..=2 {
            for s in 0..lat.stab_count() {
                let dot = lat.dot(r, s);
                let other = g.dot_by_name(&lat.dot_name(dot)).unwrap();
                let a = boundary_distance(&lat, dot).unwrap();
                let b = boundary_distance(&g, other).unwrap();
                assert_eq!(a.weight, b.weight);
            }
        }
        assert!(ExplicitLattice::parse("DOT Q 0 0 0").is_err());
        assert!(ExplicitLattice::parse("LINE Z:0:0:1 Z:0:0:3 0.1 2.3").is_err());
    }

    #[test]
    fn raising_a_weight_never_shortens_paths() {
        use rand::{Rng, SeedableRng};
        let lat = lattice(4, 0.004, StabKind::Z).capped(2);
        let base = ExplicitLattice::parse(&lat.dump_rounds(2)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = base.dot_count() as u64;
        for _ in 0..20 {
            let id = rng.gen_range(0..base.lines().len()) as u32;
            let (_, _, p, w) = base.lines()[id as usize];
            let mut g = base.clone();
            let p2 = p * 0.5;
            g.set_line(id, p2, w + std::f64::consts::LN_2);
            for _ in 0..10 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                let w0 = min_weight_path(&base, Target::Dot(a), Target::Dot(b)).unwrap().weight;
                let w1 = min_weight_path(&g, Target::Dot(a), Target::Dot(b)).unwrap().weight;
                assert!(w1 >= w0);
            }
        }
    }

    #[test]
    fn connected_within_each_kind() {
        for kind in StabKind::ALL {
            let lat = lattice(4, 0.002, kind).capped(3);
            for r in 0..=3 {
                for s in 0..lat.stab_count() {
                    min_weight_path(&lat, Target::Dot(lat.dot(0, 0)), Target::Dot(lat.dot(r, s))).unwrap();
                }
            }
        }
    }
}
