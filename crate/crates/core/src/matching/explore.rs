use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rustc_hash::FxHashMap;

use super::{EdgeEnd, EdgeSource, NewEdge, Renumber, VIdx};
use crate::lattice::{Dot, DotGraph, Neighbor, Ordf, Target};

#[derive(Clone, Debug)]
struct Explorer {
    /// Distance, path parity and settled flag per reached dot.
    dist: FxHashMap<Dot, (f64, bool, bool)>,
    heap: BinaryHeap<Reverse<(Ordf, Dot)>>,
    blocked: Vec<(f64, Dot)>,
    blocked_min: f64,
    boundary: Option<(f64, u8, bool)>,
    boundary_sent: bool,
    partners: Vec<VIdx>,
}

impl Explorer {
    fn new(dot: Dot) -> Self {
        let mut dist = FxHashMap::default();
        dist.insert(dot, (0.0, false, false));
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((Ordf(0.0), dot)));
        Self {
            dist,
            heap,
            blocked: Vec::new(),
            blocked_min: f64::INFINITY,
            boundary: None,
            boundary_sent: false,
            partners: Vec::new(),
        }
    }

    fn top(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |e| e.0 .0 .0)
    }
}

/// Chain heads indexed by dot, over the contiguous range of dots touched.
#[derive(Clone, Debug, Default)]
struct Heads {
    base: Dot,
    at: Vec<u32>,
}

impl Heads {
    const END: u32 = u32::MAX;

    fn get(&self, x: Dot) -> u32 {
        match x.checked_sub(self.base) {
            Some(i) if (i as usize) < self.at.len() => self.at[i as usize],
            _ => Self::END,
        }
    }

    fn slot(&mut self, x: Dot) -> &mut u32 {
        if self.at.is_empty() {
            self.base = x;
        } else if x < self.base {
            // leave slack below so a search drifting back in time is cheap
            let grow = ((self.base - x) as usize).max(self.at.len() / 2);
            let new_base = self.base.saturating_sub(grow as u64);
            let mut at = vec![Self::END; (self.base - new_base) as usize];
            at.extend_from_slice(&self.at);
            self.at = at;
            self.base = new_base;
        }
        let i = (x - self.base) as usize;
        if i >= self.at.len() {
            self.at.resize(i + 1, Self::END);
        }
        &mut self.at[i]
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    weight: f64,
    flips: bool,
    sent: bool,
}

/// Edges on demand: every vertex runs its own incremental Dijkstra over the
/// lattice and an edge is reported once the two searches have met and the
/// meeting weight is provably minimal.
///
/// Dots in rounds at or past the horizon are not entered; the distance at
/// which a search first hits them is the vertex's limit.
#[derive(Clone, Debug)]
pub struct LatticeSource<G> {
    g: G,
    horizon: Option<u32>,
    eager: Option<f64>,
    ex: Vec<Explorer>,
    dots: Vec<Dot>,
    /// Head of each dot's chain in `hits`.
    settled: Heads,
    /// `(vertex, distance, parity, next)` for every settle, chained per dot.
    hits: Vec<(VIdx, f64, bool, u32)>,
    cand: FxHashMap<(VIdx, VIdx), Candidate>,
    blocked_owners: BTreeSet<VIdx>,
    nb: Vec<Neighbor>,
    found: Vec<(VIdx, f64, bool)>,
    settles: usize,
}

impl<G: DotGraph> LatticeSource<G> {
    pub fn new(g: G) -> Self {
        Self {
            g,
            horizon: None,
            eager: None,
            ex: Vec::new(),
            dots: Vec::new(),
            settled: Heads::default(),
            hits: Vec::new(),
            cand: FxHashMap::default(),
            blocked_owners: BTreeSet::new(),
            nb: Vec::new(),
            found: Vec::new(),
            settles: 0,
        }
    }

    /// Explore every new vertex to `radius` at once instead of on demand.
    pub fn with_eager_radius(mut self, radius: f64) -> Self {
        self.eager = Some(radius);
        self
    }

    pub fn graph(&self) -> &G {
        &self.g
    }

    /// Swap in a graph that agrees with the current one on every dot
    /// explored so far.
    pub fn set_graph(&mut self, g: G) {
        self.g = g;
    }

    pub fn horizon(&self) -> Option<u32> {
        self.horizon
    }

    pub fn dot(&self, v: VIdx) -> Dot {
        self.dots[v]
    }

    /// Total number of dots settled by all searches.
    pub fn settles(&self) -> usize {
        self.settles
    }

    /// Allow dots in rounds below `h` (all rounds for `None`). The horizon
    /// only moves forward.
    pub fn set_horizon(&mut self, h: Option<u32>, out: &mut Vec<NewEdge>) {
        self.horizon = h;
        let owners: Vec<VIdx> = self.blocked_owners.iter().copied().collect();
        for v in owners {
            let g = &self.g;
            let e = &mut self.ex[v];
            let mut keep = Vec::new();
            for (d, x) in e.blocked.drain(..) {
                if h.map_or(true, |h| g.round(x) < h) {
                    e.heap.push(Reverse((Ordf(d), x)));
                } else {
                    keep.push((d, x));
                }
            }
            e.blocked_min = keep.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
            e.blocked = keep;
            if e.blocked.is_empty() {
                self.blocked_owners.remove(&v);
            }
            // a vertex added past the old horizon has not settled its own dot
            let r = self.eager.unwrap_or(f64::MIN_POSITIVE);
            self.grow(v, r, out);
        }
    }

    fn candidate(&mut self, a: VIdx, b: VIdx, weight: f64, flips: bool) {
        let key = (a.min(b), a.max(b));
        match self.cand.get_mut(&key) {
            Some(c) => {
                if !c.sent && weight < c.weight {
                    c.weight = weight;
                    c.flips = flips;
                }
            }
            None => {
                self.cand.insert(
                    key,
                    Candidate {
                        weight,
                        flips,
                        sent: false,
                    },
                );
                self.ex[a].partners.push(b);
                self.ex[b].partners.push(a);
            }
        }
    }

    fn hits_at(&self, x: Dot, skip: VIdx, out: &mut Vec<(VIdx, f64, bool)>) {
        out.clear();
        let mut i = self.settled.get(x);
        while i != Heads::END {
            let (w, dw, pw, next) = self.hits[i as usize];
            if w != skip {
                out.push((w, dw, pw));
            }
            i = next;
        }
    }

    fn settle(&mut self, v: VIdx, x: Dot, d: f64, px: bool) {
        self.settles += 1;
        let mut found = std::mem::take(&mut self.found);
        self.hits_at(x, v, &mut found);
        for &(w, dw, pw) in &found {
            self.candidate(v, w, d + dw, px ^ pw);
        }
        let mut nb = std::mem::take(&mut self.nb);
        self.g.neighbors(x, &mut nb);
        for n in &nb {
            let nd = d + n.weight;
            let np = px ^ n.flips;
            match n.target {
                Target::Boundary(k) => {
                    let e = &mut self.ex[v];
                    if e.boundary.map_or(true, |(w, bk, _)| (nd, k) < (w, bk)) {
                        e.boundary = Some((nd, k, np));
                    }
                }
                Target::Dot(y) => {
                    let e = &mut self.ex[v];
                    let better = e.dist.get(&y).map_or(true, |&(o, _, s)| !s && nd < o);
                    if better {
                        e.dist.insert(y, (nd, np, false));
                        e.heap.push(Reverse((Ordf(nd), y)));
                    }
                    self.hits_at(y, v, &mut found);
                    for &(w, dw, pw) in &found {
                        self.candidate(v, w, nd + dw, np ^ pw);
                    }
                }
            }
        }
        self.nb = nb;
        self.found = found;
        let id = self.hits.len() as u32;
        let head = self.settled.slot(x);
        self.hits.push((v, d, px, *head));
        *head = id;
    }

    /// Report candidates of `v` that have become exact.
    fn check(&mut self, v: VIdx, out: &mut Vec<NewEdge>) {
        let ev = self.explored(v);
        let e = &mut self.ex[v];
        if !e.boundary_sent {
            if let Some((w, k, f)) = e.boundary {
                if w <= ev {
                    e.boundary_sent = true;
                    out.push(NewEdge {
                        u: v,
                        to: EdgeEnd::Boundary(k),
                        weight: w,
                        flips: f,
                    });
                }
            }
        }
        let partners = std::mem::take(&mut self.ex[v].partners);
        let mut keep = Vec::new();
        for w in partners {
            let key = (v.min(w), v.max(w));
            let c = self.cand[&key];
            if c.sent {
                continue;
            }
            if c.weight <= ev + self.explored(w) {
                self.cand.get_mut(&key).expect("candidate").sent = true;
                out.push(NewEdge {
                    u: v,
                    to: EdgeEnd::Vertex(w),
                    weight: c.weight,
                    flips: c.flips,
                });
            } else {
                keep.push(w);
            }
        }
        self.ex[v].partners = keep;
    }
}

impl<G: DotGraph> EdgeSource for LatticeSource<G> {
    fn add_vertex(&mut self, v: VIdx, key: u64, out: &mut Vec<NewEdge>) {
        assert_eq!(v, self.ex.len(), "vertices are added in order");
        self.ex.push(Explorer::new(key));
        self.dots.push(key);
        self.grow(v, f64::MIN_POSITIVE, out);
        if let Some(r) = self.eager {
            self.grow(v, r, out);
        }
    }

    fn explored(&self, v: VIdx) -> f64 {
        let e = &self.ex[v];
        e.top().min(e.blocked_min)
    }

    fn limit(&self, v: VIdx) -> f64 {
        self.ex[v].blocked_min
    }

    fn grow(&mut self, v: VIdx, radius: f64, out: &mut Vec<NewEdge>) {
        let stop = radius.min(self.ex[v].blocked_min);
        loop {
            let e = &mut self.ex[v];
            let Some(&Reverse((Ordf(d), x))) = e.heap.peek() else { break };
            let (dx, px, done) = e.dist[&x];
            if done || dx < d {
                e.heap.pop();
                continue;
            }
            if d >= stop.min(e.blocked_min) {
                break;
            }
            e.heap.pop();
            if self.horizon.is_some_and(|h| self.g.round(x) >= h) {
                e.blocked.push((d, x));
                e.blocked_min = e.blocked_min.min(d);
                self.blocked_owners.insert(v);
                continue;
            }
            e.dist.insert(x, (d, px, true));
            self.settle(v, x, d, px);
        }
        self.check(v, out);
    }
}

impl<G: DotGraph> Renumber for LatticeSource<G> {
    fn renumber(&mut self, map: &[Option<VIdx>]) {
        let ex = std::mem::take(&mut self.ex);
        self.ex = ex
            .into_iter()
            .zip(map)
            .filter(|(_, m)| m.is_some())
            .map(|(mut e, _)| {
                e.partners.retain_mut(|w| match map[*w] {
                    Some(n) => {
                        *w = n;
                        true
                    }
                    None => false,
                });
                e
            })
            .collect();
        let dots = std::mem::take(&mut self.dots);
        self.dots = dots.into_iter().zip(map).filter(|(_, m)| m.is_some()).map(|(d, _)| d).collect();

        // replay surviving settles in order so each chain keeps its order
        let old = std::mem::take(&mut self.hits);
        let mut dots_of = Vec::with_capacity(old.len());
        let heads = std::mem::take(&mut self.settled);
        for (i, &h) in heads.at.iter().enumerate() {
            let mut j = h;
            while j != Heads::END {
                dots_of.push((j, heads.base + i as Dot));
                j = old[j as usize].3;
            }
        }
        dots_of.sort_unstable();
        let base = dots_of
            .iter()
            .filter(|(j, _)| map[old[*j as usize].0].is_some())
            .map(|e| e.1)
            .min();
        self.settled = Heads::default();
        if let Some(b) = base {
            self.settled.slot(b);
        }
        for (j, x) in dots_of {
            let (v, d, p, _) = old[j as usize];
            let Some(v) = map[v] else { continue };
            let id = self.hits.len() as u32;
            let head = self.settled.slot(x);
            self.hits.push((v, d, p, *head));
            *head = id;
        }

        let cand = std::mem::take(&mut self.cand);
        self.cand = cand
            .into_iter()
            .filter_map(|((a, b), c)| Some(((map[a]?, map[b]?), c)))
            .collect();
        self.blocked_owners = self.blocked_owners.iter().filter_map(|&v| map[v]).collect();
    }
}
