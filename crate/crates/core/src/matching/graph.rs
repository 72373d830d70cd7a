use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use std::cmp::Reverse;

use super::{EdgeEnd, EdgeSource, Matching, NewEdge, VIdx};
use crate::error::{LatticeError, MatchError};
use crate::lattice::{boundary_distance, Dot, DotGraph, Ordf, Target};

/// Largest instance accepted by [`brute_force_mwpm`].
pub const BRUTE_FORCE_MAX: usize = 12;

/// A matching problem with every edge given up front.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExplicitGraph {
    pub n: usize,
    /// Ordering key per vertex (oldest first).
    pub keys: Vec<u64>,
    pub edges: Vec<(VIdx, VIdx, f64, bool)>,
    /// Cheapest boundary edge per vertex: `(weight, boundary, flips)`.
    pub boundary: Vec<Option<(f64, u8, bool)>>,
}

impl ExplicitGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            keys: (0..n as u64).collect(),
            edges: Vec::new(),
            boundary: vec![None; n],
        }
    }

    pub fn add_edge(&mut self, u: VIdx, v: VIdx, w: f64) {
        self.edges.push((u.min(v), u.max(v), w, false));
    }

    /// Keep the cheaper of the existing and the new boundary edge.
    pub fn set_boundary(&mut self, u: VIdx, k: u8, w: f64) {
        let cur = &mut self.boundary[u];
        if cur.map_or(true, |(c, ck, _)| (w, k) < (c, ck)) {
            *cur = Some((w, k, false));
        }
    }

    fn weights(&self) -> FxHashMap<(VIdx, VIdx), f64> {
        let mut m: FxHashMap<(VIdx, VIdx), f64> = FxHashMap::default();
        for &(u, v, w, _) in &self.edges {
            let e = m.entry((u.min(v), u.max(v))).or_insert(w);
            *e = e.min(w);
        }
        m
    }

    /// Total weight of `pairs`, or `None` if a pair has no edge.
    pub fn weight_of(&self, pairs: &[(VIdx, EdgeEnd)]) -> Option<f64> {
        let m = self.weights();
        let mut total = 0.0;
        for &(u, to) in pairs {
            total += match to {
                EdgeEnd::Vertex(v) => *m.get(&(u.min(v), u.max(v)))?,
                EdgeEnd::Boundary(_) => self.boundary[u]?.0,
            };
        }
        Some(total)
    }
}

/// Exhaustive minimum-weight matching by dynamic programming over subsets.
pub fn brute_force_mwpm(g: &ExplicitGraph) -> Result<Matching, MatchError> {
    if g.n > BRUTE_FORCE_MAX {
        return Err(MatchError::TooLarge {
            max: BRUTE_FORCE_MAX,
            got: g.n,
        });
    }
    let n = g.n;
    let w = g.weights();
    let full = (1usize << n) - 1;
    let mut best = vec![f64::INFINITY; 1 << n];
    let mut choice = vec![None; 1 << n];
    best[0] = 0.0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        if let Some((b, k, _)) = g.boundary[i] {
            let c = best[rest] + b;
            if c < best[mask] {
                best[mask] = c;
                choice[mask] = Some(EdgeEnd::Boundary(k));
            }
        }
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            if let Some(&wij) = w.get(&(i, j)) {
                let c = best[rest & !(1 << j)] + wij;
                if c < best[mask] {
                    best[mask] = c;
                    choice[mask] = Some(EdgeEnd::Vertex(j));
                }
            }
        }
    }
    if !best[full].is_finite() {
        return Err(MatchError::Unmatchable(0));
    }
    let mut pairs = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let c = choice[mask].expect("finite state has a choice");
        pairs.push((i, c));
        mask &= !(1 << i);
        if let EdgeEnd::Vertex(j) = c {
            mask &= !(1 << j);
        }
    }
    Ok(Matching {
        pairs,
        total_weight: best[full],
        flips: false,
    })
}

/// Explicit graph over vertices sitting on `dots`, keeping edge `(u, v)`
/// only when its path weight is below `b_u + b_v`; every vertex gets its
/// nearest-boundary edge.
pub fn build_complete_graph<G: DotGraph + ?Sized>(g: &G, dots: &[Dot]) -> Result<ExplicitGraph, LatticeError> {
    let n = dots.len();
    let mut out = ExplicitGraph::new(n);
    out.keys = dots.to_vec();
    let mut bdist = Vec::with_capacity(n);
    for (i, &d) in dots.iter().enumerate() {
        let b = boundary_distance(g, d)?;
        out.boundary[i] = Some((b.weight, b.boundary, b.path.flips));
        bdist.push(b.weight);
    }
    let bmax = bdist.iter().copied().fold(0.0, f64::max);
    let at: FxHashMap<Dot, VIdx> = dots.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut buf = Vec::new();
    for (u, &src) in dots.iter().enumerate() {
        let radius = bdist[u] + bmax;
        let mut dist: FxHashMap<Dot, (f64, bool)> = FxHashMap::default();
        let mut heap = BinaryHeap::new();
        dist.insert(src, (0.0, false));
        heap.push(Reverse((Ordf(0.0), src)));
        while let Some(Reverse((Ordf(d), x))) = heap.pop() {
            let (dx, px) = dist[&x];
            if dx < d {
                continue;
            }
            if d >= radius {
                break;
            }
            if let Some(&v) = at.get(&x) {
                if v > u && d < bdist[u] + bdist[v] {
                    out.edges.push((u, v, d, px));
                }
            }
            g.neighbors(x, &mut buf);
            for nb in &buf {
                if let Target::Dot(y) = nb.target {
                    let nd = d + nb.weight;
                    if dist.get(&y).map_or(true, |&(o, _)| nd < o) {
                        dist.insert(y, (nd, px ^ nb.flips));
                        heap.push(Reverse((Ordf(nd), y)));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Edge source replaying an [`ExplicitGraph`].
#[derive(Clone, Debug)]
pub struct ExplicitSource {
    adj: Vec<Vec<(VIdx, f64, bool)>>,
    boundary: Vec<Option<(f64, u8, bool)>>,
    added: Vec<bool>,
}

impl ExplicitSource {
    pub fn new(g: &ExplicitGraph) -> Self {
        let mut adj = vec![Vec::new(); g.n];
        for &(u, v, w, f) in &g.edges {
            adj[u].push((v, w, f));
            adj[v].push((u, w, f));
        }
        Self {
            adj,
            boundary: g.boundary.clone(),
            added: vec![false; g.n],
        }
    }
}

impl EdgeSource for ExplicitSource {
    fn add_vertex(&mut self, v: VIdx, _key: u64, out: &mut Vec<NewEdge>) {
        self.added[v] = true;
        for &(u, w, f) in &self.adj[v] {
            if self.added[u] {
                out.push(NewEdge {
                    u: v,
                    to: EdgeEnd::Vertex(u),
                    weight: w,
                    flips: f,
                });
            }
        }
        if let Some((w, k, f)) = self.boundary[v] {
            out.push(NewEdge {
                u: v,
                to: EdgeEnd::Boundary(k),
                weight: w,
                flips: f,
            });
        }
    }

    fn explored(&self, _v: VIdx) -> f64 {
        f64::INFINITY
    }

    fn limit(&self, _v: VIdx) -> f64 {
        f64::INFINITY
    }

    fn grow(&mut self, _v: VIdx, _radius: f64, _out: &mut Vec<NewEdge>) {}
}
