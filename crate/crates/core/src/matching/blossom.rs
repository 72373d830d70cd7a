use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::FxHashMap;

use super::{EdgeEnd, EdgeSource, Mate, Matching, NewEdge, Renumber, VIdx, EPS};
use crate::error::MatchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    V(VIdx),
    B(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    None,
    Outer,
    Inner,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Vertex {
    pub key: u64,
    pub y: f64,
    pub mate: Mate,
    pub parent: Option<usize>,
    pub label: Label,
    /// Tree edge to the parent node: (vertex in this node, vertex in parent).
    pub tp: Option<(VIdx, VIdx)>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Blossom {
    /// Odd cycle of children; child 0 holds the base.
    pub children: Vec<Node>,
    /// `links[j]` joins child `j` to child `j + 1` (mod len).
    pub links: Vec<(VIdx, VIdx)>,
    pub y: f64,
    pub parent: Option<usize>,
    pub alive: bool,
    pub label: Label,
    pub tp: Option<(VIdx, VIdx)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Edge {
    pub u: VIdx,
    pub v: VIdx,
    pub w: f64,
    pub flips: bool,
}

#[derive(Clone, Debug)]
enum Undo {
    Y(VIdx, f64),
    Mate(VIdx, Mate),
    VParent(VIdx, Option<usize>),
    VLabel(VIdx, Label, Option<(VIdx, VIdx)>),
    BY(usize, f64),
    BParent(usize, Option<usize>),
    BLabel(usize, Label, Option<(VIdx, VIdx)>),
    BAlive(usize, bool),
    BCycle(usize, Vec<Node>, Vec<(VIdx, VIdx)>),
    BPush,
    Tree(Vec<Node>),
}

/// Opaque position in a matcher's undo journal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    state: u64,
    level: usize,
    pos: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub edges: usize,
    pub dual_steps: usize,
    pub grows: usize,
    pub blossoms: usize,
    pub expands: usize,
    pub augments: usize,
    pub reversals: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Into(VIdx, VIdx),
    Boundary(VIdx, u8),
    Grow(VIdx, VIdx),
    Blossom(VIdx, VIdx),
    Expand(usize),
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Blossom-algorithm state over edges from an [`EdgeSource`].
#[derive(Debug)]
pub struct Matcher<S> {
    id: u64,
    pub(crate) vs: Vec<Vertex>,
    pub(crate) bs: Vec<Blossom>,
    pub(crate) edges: Vec<Edge>,
    pub(crate) adj: Vec<Vec<u32>>,
    edge_at: FxHashMap<(VIdx, VIdx), u32>,
    pub(crate) bnd: Vec<Option<(f64, u8, bool)>>,
    free: BTreeSet<(u64, VIdx)>,
    tree: Vec<Node>,
    journal: Vec<Undo>,
    marks: Vec<usize>,
    src: S,
    buf: Vec<NewEdge>,
    stats: Stats,
}

impl<S: Clone> Clone for Matcher<S> {
    fn clone(&self) -> Self {
        Self {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            vs: self.vs.clone(),
            bs: self.bs.clone(),
            edges: self.edges.clone(),
            adj: self.adj.clone(),
            edge_at: self.edge_at.clone(),
            bnd: self.bnd.clone(),
            free: self.free.clone(),
            tree: self.tree.clone(),
            journal: self.journal.clone(),
            marks: self.marks.clone(),
            src: self.src.clone(),
            buf: Vec::new(),
            stats: self.stats.clone(),
        }
    }
}

/// Field-by-field copy of the logical matching state, for comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalState {
    vs: Vec<Vertex>,
    bs: Vec<Blossom>,
    tree: Vec<Node>,
}

impl<S: EdgeSource> Matcher<S> {
    pub fn new(src: S) -> Self {
        Self {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            vs: Vec::new(),
            bs: Vec::new(),
            edges: Vec::new(),
            adj: Vec::new(),
            edge_at: FxHashMap::default(),
            bnd: Vec::new(),
            free: BTreeSet::new(),
            tree: Vec::new(),
            journal: Vec::new(),
            marks: Vec::new(),
            src,
            buf: Vec::new(),
            stats: Stats::default(),
        }
    }

    pub fn source(&self) -> &S {
        &self.src
    }

    pub fn source_mut(&mut self) -> &mut S {
        &mut self.src
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn vertex_count(&self) -> usize {
        self.vs.len()
    }

    pub fn key(&self, v: VIdx) -> u64 {
        self.vs[v].key
    }

    pub fn mate(&self, v: VIdx) -> Mate {
        self.vs[v].mate
    }

    pub fn dual(&self, v: VIdx) -> f64 {
        self.vs[v].y
    }

    pub fn label(&self, n: Node) -> Label {
        match n {
            Node::V(v) => self.vs[v].label,
            Node::B(b) => self.bs[b].label,
        }
    }

    /// Alive blossoms as `(id, Y, child count, parent)`.
    pub fn blossoms(&self) -> Vec<(usize, f64, usize, Option<usize>)> {
        self.bs
            .iter()
            .enumerate()
            .filter(|(_, b)| b.alive)
            .map(|(i, b)| (i, b.y, b.children.len(), b.parent))
            .collect()
    }

    pub fn blossom_dual(&self, b: usize) -> f64 {
        self.bs[b].y
    }

    pub fn free_vertices(&self) -> impl Iterator<Item = VIdx> + '_ {
        self.free.iter().map(|e| e.1)
    }

    pub fn logical_state(&self) -> LogicalState {
        LogicalState {
            vs: self.vs.clone(),
            bs: self.bs.clone(),
            tree: self.tree.clone(),
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Materialised `(u, v, weight, flips)` edges.
    pub fn edges(&self) -> impl Iterator<Item = (VIdx, VIdx, f64, bool)> + '_ {
        self.edges.iter().map(|e| (e.u, e.v, e.w, e.flips))
    }

    pub fn boundary_edge(&self, v: VIdx) -> Option<(f64, u8, bool)> {
        self.bnd[v]
    }

    pub fn edge(&self, u: VIdx, v: VIdx) -> Option<(f64, bool)> {
        self.edge_at
            .get(&(u.min(v), u.max(v)))
            .map(|&i| (self.edges[i as usize].w, self.edges[i as usize].flips))
    }

    pub fn add_vertex(&mut self, key: u64) -> Result<VIdx, MatchError> {
        if !self.marks.is_empty() {
            return Err(MatchError::Precondition("vertices cannot be added under a checkpoint"));
        }
        let v = self.vs.len();
        self.vs.push(Vertex {
            key,
            y: 0.0,
            mate: Mate::Free,
            parent: None,
            label: Label::None,
            tp: None,
        });
        self.adj.push(Vec::new());
        self.bnd.push(None);
        self.free.insert((key, v));
        let mut buf = std::mem::take(&mut self.buf);
        self.src.add_vertex(v, key, &mut buf);
        self.absorb(&mut buf);
        self.buf = buf;
        Ok(v)
    }

    /// Add a vertex with a preset dual, used when rebuilding a state.
    fn absorb(&mut self, buf: &mut Vec<NewEdge>) {
        for e in buf.drain(..) {
            match e.to {
                EdgeEnd::Vertex(v) => {
                    let key = (e.u.min(v), e.u.max(v));
                    match self.edge_at.get(&key) {
                        Some(&i) => {
                            let ed = &mut self.edges[i as usize];
                            if e.weight < ed.w {
                                ed.w = e.weight;
                                ed.flips = e.flips;
                            }
                        }
                        None => {
                            let i = self.edges.len() as u32;
                            self.edges.push(Edge {
                                u: key.0,
                                v: key.1,
                                w: e.weight,
                                flips: e.flips,
                            });
                            self.edge_at.insert(key, i);
                            self.adj[key.0].push(i);
                            self.adj[key.1].push(i);
                            self.stats.edges += 1;
                        }
                    }
                }
                EdgeEnd::Boundary(k) => {
                    let cur = &mut self.bnd[e.u];
                    if cur.map_or(true, |(w, ck, _)| (e.weight, k) < (w, ck)) {
                        *cur = Some((e.weight, k, e.flips));
                    }
                }
            }
        }
    }

    // ---- journaled setters ----

    fn log(&mut self, u: impl FnOnce() -> Undo) {
        if !self.marks.is_empty() {
            self.journal.push(u());
        }
    }

    fn set_y(&mut self, v: VIdx, y: f64) {
        let old = self.vs[v].y;
        self.log(|| Undo::Y(v, old));
        self.vs[v].y = y;
    }

    fn set_mate(&mut self, v: VIdx, m: Mate) {
        let old = self.vs[v].mate;
        self.log(|| Undo::Mate(v, old));
        self.raw_mate(v, m);
    }

    fn raw_mate(&mut self, v: VIdx, m: Mate) {
        let key = self.vs[v].key;
        if m == Mate::Free {
            self.free.insert((key, v));
        } else {
            self.free.remove(&(key, v));
        }
        self.vs[v].mate = m;
    }

    fn set_parent(&mut self, n: Node, p: Option<usize>) {
        match n {
            Node::V(v) => {
                let old = self.vs[v].parent;
                self.log(|| Undo::VParent(v, old));
                self.vs[v].parent = p;
            }
            Node::B(b) => {
                let old = self.bs[b].parent;
                self.log(|| Undo::BParent(b, old));
                self.bs[b].parent = p;
            }
        }
    }

    fn set_label(&mut self, n: Node, l: Label, tp: Option<(VIdx, VIdx)>) {
        match n {
            Node::V(v) => {
                let (ol, ot) = (self.vs[v].label, self.vs[v].tp);
                self.log(|| Undo::VLabel(v, ol, ot));
                self.vs[v].label = l;
                self.vs[v].tp = tp;
            }
            Node::B(b) => {
                let (ol, ot) = (self.bs[b].label, self.bs[b].tp);
                self.log(|| Undo::BLabel(b, ol, ot));
                self.bs[b].label = l;
                self.bs[b].tp = tp;
            }
        }
    }

    fn set_by(&mut self, b: usize, y: f64) {
        let old = self.bs[b].y;
        self.log(|| Undo::BY(b, old));
        self.bs[b].y = y;
    }

    fn set_cycle(&mut self, b: usize, children: Vec<Node>, links: Vec<(VIdx, VIdx)>) {
        if !self.marks.is_empty() {
            let oc = self.bs[b].children.clone();
            let ol = self.bs[b].links.clone();
            self.journal.push(Undo::BCycle(b, oc, ol));
        }
        self.bs[b].children = children;
        self.bs[b].links = links;
    }

    fn set_tree(&mut self, tree: Vec<Node>) {
        if !self.marks.is_empty() {
            let old = std::mem::take(&mut self.tree);
            self.journal.push(Undo::Tree(old));
        }
        self.tree = tree;
    }

    // ---- checkpoints ----

    pub fn checkpoint(&mut self) -> Checkpoint {
        self.marks.push(self.journal.len());
        Checkpoint {
            state: self.id,
            level: self.marks.len() - 1,
            pos: self.journal.len(),
        }
    }

    fn check_token(&self, t: &Checkpoint) -> Result<(), MatchError> {
        if t.state != self.id || self.marks.get(t.level) != Some(&t.pos) {
            return Err(MatchError::StaleCheckpoint);
        }
        Ok(())
    }

    /// Undo everything done since `t` and drop it and any later checkpoints.
    pub fn reverse_to(&mut self, t: Checkpoint) -> Result<(), MatchError> {
        self.check_token(&t)?;
        while self.journal.len() > t.pos {
            let u = self.journal.pop().expect("journal entry");
            match u {
                Undo::Y(v, y) => self.vs[v].y = y,
                Undo::Mate(v, m) => self.raw_mate(v, m),
                Undo::VParent(v, p) => self.vs[v].parent = p,
                Undo::VLabel(v, l, tp) => {
                    self.vs[v].label = l;
                    self.vs[v].tp = tp;
                }
                Undo::BY(b, y) => self.bs[b].y = y,
                Undo::BParent(b, p) => self.bs[b].parent = p,
                Undo::BLabel(b, l, tp) => {
                    self.bs[b].label = l;
                    self.bs[b].tp = tp;
                }
                Undo::BAlive(b, a) => self.bs[b].alive = a,
                Undo::BCycle(b, c, l) => {
                    self.bs[b].children = c;
                    self.bs[b].links = l;
                }
                Undo::BPush => {
                    self.bs.pop();
                }
                Undo::Tree(t) => self.tree = t,
            }
        }
        self.marks.truncate(t.level);
        if self.marks.is_empty() {
            self.journal.clear();
        }
        self.stats.reversals += 1;
        Ok(())
    }

    /// Keep everything done since `t` and drop the checkpoint.
    pub fn release(&mut self, t: Checkpoint) -> Result<(), MatchError> {
        self.check_token(&t)?;
        self.marks.truncate(t.level);
        if self.marks.is_empty() {
            self.journal.clear();
        }
        Ok(())
    }

    // ---- structure queries ----

    pub fn top(&self, v: VIdx) -> Node {
        let mut n = Node::V(v);
        let mut p = self.vs[v].parent;
        while let Some(b) = p {
            n = Node::B(b);
            p = self.bs[b].parent;
        }
        n
    }

    fn parent_of(&self, n: Node) -> Option<usize> {
        match n {
            Node::V(v) => self.vs[v].parent,
            Node::B(b) => self.bs[b].parent,
        }
    }

    /// `y_v` plus the duals of every blossom containing `v`.
    pub fn radius(&self, v: VIdx) -> f64 {
        let mut r = self.vs[v].y;
        let mut p = self.vs[v].parent;
        while let Some(b) = p {
            r += self.bs[b].y;
            p = self.bs[b].parent;
        }
        r
    }

    fn tp(&self, n: Node) -> Option<(VIdx, VIdx)> {
        match n {
            Node::V(v) => self.vs[v].tp,
            Node::B(b) => self.bs[b].tp,
        }
    }

    pub fn base(&self, n: Node) -> VIdx {
        let mut n = n;
        loop {
            match n {
                Node::V(v) => return v,
                Node::B(b) => n = self.bs[b].children[0],
            }
        }
    }

    pub fn node_vertices(&self, n: Node, out: &mut Vec<VIdx>) {
        match n {
            Node::V(v) => out.push(v),
            Node::B(b) => {
                for &c in &self.bs[b].children {
                    self.node_vertices(c, out);
                }
            }
        }
    }

    fn outer_vertices(&self) -> Vec<VIdx> {
        let mut out = Vec::new();
        for &n in &self.tree {
            if self.label(n) == Label::Outer {
                self.node_vertices(n, &mut out);
            }
        }
        out
    }

    /// Slack of the edge between `u` and `v`, counting only blossoms that
    /// contain exactly one endpoint.
    pub fn slack(&self, u: VIdx, v: VIdx, w: f64) -> f64 {
        let chain = |x: VIdx| {
            let mut c = Vec::new();
            let mut p = self.vs[x].parent;
            while let Some(b) = p {
                c.push(b);
                p = self.bs[b].parent;
            }
            c
        };
        let (cu, cv) = (chain(u), chain(v));
        let shared: f64 = cu.iter().filter(|b| cv.contains(b)).map(|&b| self.bs[b].y).sum();
        w - self.radius(u) - self.radius(v) + 2.0 * shared
    }

    // ---- the algorithm ----

    /// Match every free vertex, oldest first.
    pub fn solve(&mut self) -> Result<(), MatchError> {
        while let Some(&(_, root)) = self.free.iter().next() {
            self.match_root(root)?;
        }
        Ok(())
    }

    /// Grow an alternating tree from `root` until it augments.
    pub fn match_root(&mut self, root: VIdx) -> Result<(), MatchError> {
        self.begin_tree(root)?;
        loop {
            if let Some(a) = self.best_action() {
                if self.perform(a)? {
                    return Ok(());
                }
                continue;
            }
            let delta = self.dual_delta()?;
            self.apply_delta(delta);
            if self.best_action().is_none() {
                return Err(MatchError::Precondition("dual adjustment produced no tight edge"));
            }
        }
    }

    /// Start a tree at a free, unlabelled top-level vertex.
    pub fn begin_tree(&mut self, root: VIdx) -> Result<(), MatchError> {
        if !self.tree.is_empty() {
            return Err(MatchError::Precondition("a tree is already active"));
        }
        if self.vs[root].mate != Mate::Free || self.vs[root].parent.is_some() {
            return Err(MatchError::Precondition("root must be a free top-level vertex"));
        }
        self.set_label(Node::V(root), Label::Outer, None);
        self.set_tree(vec![Node::V(root)]);
        Ok(())
    }

    fn best_action(&self) -> Option<Action> {
        let mut best: Option<((u8, u64, u64), Action)> = None;
        fn offer(best: &mut Option<((u8, u64, u64), Action)>, class: u8, a: u64, b: u64, act: Action) {
            let k = (class, a, b);
            if best.as_ref().map_or(true, |(bk, _)| k < *bk) {
                *best = Some((k, act));
            }
        }
        for u in self.outer_vertices() {
            let tu = self.top(u);
            let ku = self.vs[u].key;
            if let Some((w, k, _)) = self.bnd[u] {
                if w - self.radius(u) <= EPS {
                    offer(&mut best, 1, ku, k as u64, Action::Boundary(u, k));
                }
            }
            for &ei in &self.adj[u] {
                let e = self.edges[ei as usize];
                let v = if e.u == u { e.v } else { e.u };
                let tv = self.top(v);
                if tv == tu {
                    continue;
                }
                let label = self.label(tv);
                if label == Label::Inner || e.w - self.radius(u) - self.radius(v) > EPS {
                    continue;
                }
                let kv = self.vs[v].key;
                match label {
                    Label::Outer => offer(&mut best, 4, ku.min(kv), ku.max(kv), Action::Blossom(u, v)),
                    _ => match self.vs[self.base(tv)].mate {
                        Mate::Free => offer(&mut best, 0, ku, kv, Action::Into(u, v)),
                        Mate::Boundary(_) => offer(&mut best, 2, ku, kv, Action::Into(u, v)),
                        Mate::Vertex(_) => offer(&mut best, 3, ku, kv, Action::Grow(u, v)),
                    },
                }
            }
        }
        if best.is_none() {
            for &n in &self.tree {
                if let Node::B(b) = n {
                    if self.bs[b].label == Label::Inner && self.bs[b].y <= EPS {
                        offer(&mut best, 5, b as u64, 0, Action::Expand(b));
                    }
                }
            }
        }
        best.map(|b| b.1)
    }

    /// Returns true when the tree augmented.
    fn perform(&mut self, a: Action) -> Result<bool, MatchError> {
        match a {
            Action::Into(u, v) => {
                self.augment(u, EdgeEnd::Vertex(v));
                Ok(true)
            }
            Action::Boundary(u, k) => {
                self.augment(u, EdgeEnd::Boundary(k));
                Ok(true)
            }
            Action::Grow(u, v) => self.grow(u, v).map(|_| false),
            Action::Blossom(u, v) => self.form_blossom(u, v).map(|_| false),
            Action::Expand(b) => self.expand(b).map(|_| false),
        }
    }

    /// Smallest dual change that makes a new edge tight or an inner
    /// blossom's dual zero, exploring lazily sourced edges as needed.
    pub fn dual_delta(&mut self) -> Result<f64, MatchError> {
        loop {
            let outer = self.outer_vertices();
            let mut delta = f64::INFINITY;
            for &u in &outer {
                let tu = self.top(u);
                let ru = self.radius(u);
                if let Some((w, _, _)) = self.bnd[u] {
                    delta = delta.min(w - ru);
                }
                for &ei in &self.adj[u] {
                    let e = self.edges[ei as usize];
                    let v = if e.u == u { e.v } else { e.u };
                    let tv = self.top(v);
                    if tv == tu {
                        continue;
                    }
                    let s = e.w - ru - self.radius(v);
                    match self.label(tv) {
                        Label::None => delta = delta.min(s),
                        Label::Outer => delta = delta.min(s / 2.0),
                        Label::Inner => {}
                    }
                }
            }
            // inner vertex duals may go negative; only blossom duals are bounded
            for &n in &self.tree {
                if let (Node::B(b), Label::Inner) = (n, self.label(n)) {
                    delta = delta.min(self.bs[b].y);
                }
            }
            let mut progressed = false;
            let mut blocked = false;
            for &u in &outer {
                let ru = self.radius(u);
                let e = self.src.explored(u);
                if e - ru >= delta {
                    continue;
                }
                if e >= self.src.limit(u) {
                    blocked = true;
                    continue;
                }
                let target = if delta.is_finite() {
                    ru + delta
                } else {
                    e + e.max(1.0)
                };
                let mut buf = std::mem::take(&mut self.buf);
                self.src.grow(u, target, &mut buf);
                self.absorb(&mut buf);
                self.buf = buf;
                progressed = true;
            }
            if progressed {
                continue;
            }
            if blocked {
                return Err(MatchError::WindowViolation);
            }
            if !delta.is_finite() {
                let root = self.tree.first().map(|&n| self.base(n)).unwrap_or(0);
                return Err(MatchError::Unmatchable(root));
            }
            return Ok(delta.max(0.0));
        }
    }

    /// Raise outer duals and lower inner duals by `delta`.
    pub fn apply_delta(&mut self, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.stats.dual_steps += 1;
        let tree = self.tree.clone();
        for n in tree {
            let s = match self.label(n) {
                Label::Outer => delta,
                Label::Inner => -delta,
                Label::None => continue,
            };
            match n {
                Node::V(v) => {
                    let y = self.vs[v].y + s;
                    self.set_y(v, y);
                }
                Node::B(b) => {
                    let y = self.bs[b].y + s;
                    debug_assert!(y >= -EPS);
                    self.set_by(b, y);
                }
            }
        }
    }

    fn is_tight(&self, u: VIdx, v: VIdx) -> bool {
        self.edge(u, v).is_some_and(|(w, _)| self.slack(u, v, w).abs() <= EPS)
    }

    /// Outer `u` reaches a node matched to another vertex via tight edge
    /// `(u, v)`; that node becomes inner and its mate's node outer.
    pub fn grow(&mut self, u: VIdx, v: VIdx) -> Result<(), MatchError> {
        let (tu, tv) = (self.top(u), self.top(v));
        if self.label(tu) != Label::Outer || self.label(tv) != Label::None || !self.is_tight(u, v) {
            return Err(MatchError::Precondition("grow needs a tight edge from an outer node to a non-tree node"));
        }
        let Mate::Vertex(m) = self.vs[self.base(tv)].mate else {
            return Err(MatchError::Precondition("grow target must be matched to a vertex"));
        };
        let tm = self.top(m);
        self.set_label(tv, Label::Inner, Some((v, u)));
        let base = self.base(tv);
        self.set_label(tm, Label::Outer, Some((m, base)));
        let mut tree = self.tree.clone();
        tree.push(tv);
        tree.push(tm);
        self.set_tree(tree);
        self.stats.grows += 1;
        Ok(())
    }

    fn tree_parent(&self, n: Node) -> Option<Node> {
        self.tp(n).map(|(_, y)| self.top(y))
    }

    /// Collapse the odd cycle closed by tight outer–outer edge `(u, v)`.
    pub fn form_blossom(&mut self, u: VIdx, v: VIdx) -> Result<usize, MatchError> {
        let (tu, tv) = (self.top(u), self.top(v));
        if tu == tv || self.label(tu) != Label::Outer || self.label(tv) != Label::Outer || !self.is_tight(u, v) {
            return Err(MatchError::Precondition("blossom needs a tight edge between two outer nodes"));
        }
        let ancestors = |mut n: Node| {
            let mut out = vec![n];
            while let Some(p) = self.tree_parent(n) {
                out.push(p);
                n = p;
            }
            out
        };
        let au = ancestors(tu);
        let av = ancestors(tv);
        let lca = *au
            .iter()
            .find(|n| av.contains(n))
            .ok_or(MatchError::Precondition("endpoints lie in different trees"))?;
        let pu: Vec<Node> = au.iter().copied().take_while(|&n| n != lca).collect();
        let pv: Vec<Node> = av.iter().copied().take_while(|&n| n != lca).collect();
        let mut children = vec![lca];
        let mut links = Vec::new();
        for &c in pu.iter().rev() {
            let (x, y) = self.tp(c).expect("non-root tree node");
            links.push((y, x));
            children.push(c);
        }
        links.push((u, v));
        for &c in &pv {
            children.push(c);
            let (x, y) = self.tp(c).expect("non-root tree node");
            links.push((x, y));
        }
        let id = self.bs.len();
        let label_tp = self.tp(lca);
        self.bs.push(Blossom {
            children: children.clone(),
            links,
            y: 0.0,
            parent: None,
            alive: true,
            label: Label::Outer,
            tp: label_tp,
        });
        self.log(|| Undo::BPush);
        for &c in &children {
            self.set_parent(c, Some(id));
            self.set_label(c, Label::None, None);
        }
        let mut tree: Vec<Node> = self.tree.iter().copied().filter(|n| !children.contains(n)).collect();
        tree.push(Node::B(id));
        self.set_tree(tree);
        self.stats.blossoms += 1;
        Ok(id)
    }

    /// Dissolve inner blossom `b` with zero dual, keeping the even path
    /// from its entry child to its base in the tree.
    pub fn expand(&mut self, b: usize) -> Result<(), MatchError> {
        let bl = &self.bs[b];
        if !bl.alive || bl.parent.is_some() || bl.label != Label::Inner || bl.y > EPS {
            return Err(MatchError::Precondition("expand needs a top-level inner blossom with zero dual"));
        }
        let (x, p) = bl.tp.expect("inner node has a tree edge");
        let children = bl.children.clone();
        let links = bl.links.clone();
        let k = children.len();
        let mut entry = Node::V(x);
        while self.parent_of(entry) != Some(b) {
            entry = Node::B(self.parent_of(entry).expect("x lies inside b"));
        }
        let j = children.iter().position(|&c| c == entry).expect("entry child");
        if self.bs[b].y != 0.0 {
            self.set_by(b, 0.0);
        }
        for &c in &children {
            self.set_parent(c, None);
            self.set_label(c, Label::None, None);
        }
        self.log(|| Undo::BAlive(b, true));
        self.bs[b].alive = false;
        self.set_label(Node::B(b), Label::None, None);
        let path: Vec<usize> = if j % 2 == 0 {
            (0..=j).rev().collect()
        } else {
            (j..=k).map(|i| i % k).collect()
        };
        let mut tree: Vec<Node> = self.tree.iter().copied().filter(|&n| n != Node::B(b)).collect();
        self.set_label(children[j], Label::Inner, Some((x, p)));
        tree.push(children[j]);
        for w in 1..path.len() {
            let (prev, cur) = (path[w - 1], path[w]);
            let tp = if cur == (prev + 1) % k {
                let (a, c) = links[prev];
                (c, a)
            } else {
                links[cur]
            };
            let label = if w % 2 == 1 { Label::Outer } else { Label::Inner };
            self.set_label(children[cur], label, Some(tp));
            tree.push(children[cur]);
        }
        self.set_tree(tree);
        self.stats.expands += 1;
        Ok(())
    }

    /// Rotate blossom `b` so that the child holding `v` becomes its base,
    /// rematching the children along the cycle.
    fn augment_blossom(&mut self, b: usize, v: VIdx) {
        let mut t = Node::V(v);
        while self.parent_of(t) != Some(b) {
            t = Node::B(self.parent_of(t).expect("v lies inside b"));
        }
        if let Node::B(tb) = t {
            self.augment_blossom(tb, v);
        }
        let children = self.bs[b].children.clone();
        let links = self.bs[b].links.clone();
        let k = children.len();
        let i = children.iter().position(|&c| c == t).expect("child");
        if i == 0 {
            return;
        }
        let pairs: Vec<(usize, usize, VIdx, VIdx)> = if i % 2 == 1 {
            (i + 1..k)
                .step_by(2)
                .map(|j| (j, (j + 1) % k, links[j].0, links[j].1))
                .collect()
        } else {
            (0..i - 1)
                .step_by(2)
                .rev()
                .map(|j| (j + 1, j, links[j].1, links[j].0))
                .collect()
        };
        for (ca, cb, a, c) in pairs {
            if let Node::B(x) = children[ca] {
                self.augment_blossom(x, a);
            }
            if let Node::B(x) = children[cb] {
                self.augment_blossom(x, c);
            }
            self.set_mate(a, Mate::Vertex(c));
            self.set_mate(c, Mate::Vertex(a));
        }
        let mut nc = children[i..].to_vec();
        nc.extend_from_slice(&children[..i]);
        let mut nl = links[i..].to_vec();
        nl.extend_from_slice(&links[..i]);
        self.set_cycle(b, nc, nl);
    }

    /// Flip the alternating path from the root through outer `u` to `to`.
    pub fn augment(&mut self, u: VIdx, to: EdgeEnd) {
        if let EdgeEnd::Vertex(v) = to {
            if let Node::B(b) = self.top(v) {
                self.augment_blossom(b, v);
            }
            self.set_mate(v, Mate::Vertex(u));
        }
        let mut s = u;
        let mut j = match to {
            EdgeEnd::Vertex(v) => Mate::Vertex(v),
            EdgeEnd::Boundary(k) => Mate::Boundary(k),
        };
        loop {
            let bs = self.top(s);
            if let Node::B(b) = bs {
                self.augment_blossom(b, s);
            }
            self.set_mate(s, j);
            let Some((_, t)) = self.tp(bs) else { break };
            let bt = self.top(t);
            let (tt, jj) = self.tp(bt).expect("inner node has a tree edge");
            if let Node::B(b) = bt {
                self.augment_blossom(b, tt);
            }
            self.set_mate(tt, Mate::Vertex(jj));
            s = jj;
            j = Mate::Vertex(tt);
        }
        let tree = self.tree.clone();
        for n in tree {
            self.set_label(n, Label::None, None);
        }
        self.set_tree(Vec::new());
        self.stats.augments += 1;
    }

    /// Abandon the active tree without augmenting.
    pub fn clear_tree(&mut self) {
        let tree = self.tree.clone();
        for n in tree {
            self.set_label(n, Label::None, None);
        }
        self.set_tree(Vec::new());
    }

    pub fn tree_nodes(&self) -> &[Node] {
        &self.tree
    }

    /// The current matching with its total weight and logical parity.
    pub fn matching(&self) -> Matching {
        let mut pairs = Vec::new();
        let mut total = 0.0;
        let mut flips = false;
        for (u, vx) in self.vs.iter().enumerate() {
            match vx.mate {
                Mate::Vertex(v) if u < v => {
                    let (w, f) = self.edge(u, v).expect("matched edge exists");
                    total += w;
                    flips ^= f;
                    pairs.push((u, EdgeEnd::Vertex(v)));
                }
                Mate::Boundary(k) => {
                    let (w, _, f) = self.bnd[u].expect("boundary edge exists");
                    total += w;
                    flips ^= f;
                    pairs.push((u, EdgeEnd::Boundary(k)));
                }
                _ => {}
            }
        }
        Matching {
            pairs,
            total_weight: total,
            flips,
        }
    }

    pub fn checkpoint_depth(&self) -> usize {
        self.marks.len()
    }

    /// Run `f` on the edge source and absorb any edges it reports.
    pub fn update_source<R>(&mut self, f: impl FnOnce(&mut S, &mut Vec<NewEdge>) -> R) -> R {
        let mut buf = std::mem::take(&mut self.buf);
        let r = f(&mut self.src, &mut buf);
        self.absorb(&mut buf);
        self.buf = buf;
        r
    }

    /// Remove the vertices flagged in `drop` and renumber the rest in
    /// place, source included.
    ///
    /// Dropped vertices must form whole matched top-level nodes together
    /// with their mates. Returns the old-to-new vertex map.
    pub fn compact(&mut self, drop: &[bool]) -> Result<Vec<Option<VIdx>>, MatchError>
    where
        S: Renumber,
    {
        if !self.tree.is_empty() || !self.marks.is_empty() {
            return Err(MatchError::Precondition("compaction needs an idle matcher"));
        }
        let mut map = vec![None; self.vs.len()];
        let mut next = 0;
        for (v, m) in map.iter_mut().enumerate() {
            if !drop[v] {
                *m = Some(next);
                next += 1;
            }
        }
        let mut bmap = vec![None; self.bs.len()];
        let mut nb = 0;
        for (b, bl) in self.bs.iter().enumerate() {
            if bl.alive && !drop[self.base(Node::B(b))] {
                bmap[b] = Some(nb);
                nb += 1;
            }
        }
        let lost = MatchError::Precondition("compaction would split a structure");
        let node = |n: Node| -> Option<Node> {
            match n {
                Node::V(v) => map[v].map(Node::V),
                Node::B(b) => bmap[b].map(Node::B),
            }
        };

        let mut vs = Vec::with_capacity(next);
        for (v, vx) in std::mem::take(&mut self.vs).into_iter().enumerate() {
            if drop[v] {
                continue;
            }
            let mate = match vx.mate {
                Mate::Vertex(m) => Mate::Vertex(map[m].ok_or(lost.clone())?),
                m => m,
            };
            let parent = match vx.parent {
                Some(b) => Some(bmap[b].ok_or(lost.clone())?),
                None => None,
            };
            vs.push(Vertex { mate, parent, ..vx });
        }
        let mut bs = Vec::with_capacity(nb);
        for (b, bl) in std::mem::take(&mut self.bs).into_iter().enumerate() {
            if bmap[b].is_none() {
                continue;
            }
            let children = bl.children.iter().map(|&c| node(c).ok_or(lost.clone())).collect::<Result<_, _>>()?;
            let links = bl
                .links
                .iter()
                .map(|&(a, c)| map[a].zip(map[c]).ok_or(lost.clone()))
                .collect::<Result<_, _>>()?;
            let parent = match bl.parent {
                Some(p) => Some(bmap[p].ok_or(lost.clone())?),
                None => None,
            };
            bs.push(Blossom {
                children,
                links,
                parent,
                ..bl
            });
        }
        self.vs = vs;
        self.bs = bs;

        let old = std::mem::take(&mut self.edges);
        self.edge_at.clear();
        self.adj = vec![Vec::new(); next];
        for e in old {
            let (Some(u), Some(v)) = (map[e.u], map[e.v]) else { continue };
            let i = self.edges.len() as u32;
            self.edges.push(Edge { u, v, ..e });
            self.edge_at.insert((u, v), i);
            self.adj[u].push(i);
            self.adj[v].push(i);
        }
        let bnd = std::mem::take(&mut self.bnd);
        self.bnd = bnd.into_iter().enumerate().filter(|(v, _)| !drop[*v]).map(|(_, b)| b).collect();
        self.free = self
            .vs
            .iter()
            .enumerate()
            .filter(|(_, x)| x.mate == Mate::Free)
            .map(|(v, x)| (x.key, v))
            .collect();
        // outstanding checkpoints refer to the old numbering
        self.journal.clear();
        self.id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
        self.src.renumber(&map);
        Ok(map)
    }
}
