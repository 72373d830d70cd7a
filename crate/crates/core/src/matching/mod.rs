//! Minimum-weight perfect matching with boundaries.
//!
//! [`Matcher`] runs a single-tree primal-dual blossom algorithm over edges
//! supplied by an [`EdgeSource`]: either a fixed explicit graph, or a
//! lattice explorer that materialises edges only when growing dual regions
//! touch.

mod blossom;
mod certificate;
mod explore;
mod graph;

pub use blossom::{Checkpoint, Label, LogicalState, Matcher, Node, Stats};
pub use certificate::{validate_matching, Certificate, CertificateError};
pub use explore::LatticeSource;
pub use graph::{brute_force_mwpm, build_complete_graph, ExplicitGraph, ExplicitSource, BRUTE_FORCE_MAX};

/// Tightness tolerance on slacks.
pub const EPS: f64 = 1e-9;

pub type VIdx = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mate {
    Free,
    Vertex(VIdx),
    Boundary(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeEnd {
    Vertex(VIdx),
    Boundary(u8),
}

/// An edge reported by an [`EdgeSource`] with its exact weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewEdge {
    pub u: VIdx,
    pub to: EdgeEnd,
    pub weight: f64,
    pub flips: bool,
}

/// Supplies edges to a [`Matcher`].
///
/// Any vertex–vertex edge `(u, v)` not yet reported weighs at least
/// `explored(u) + explored(v)`, and any unreported boundary edge of `u`
/// at least `explored(u)`.
pub trait EdgeSource {
    fn add_vertex(&mut self, v: VIdx, key: u64, out: &mut Vec<NewEdge>);
    fn explored(&self, v: VIdx) -> f64;
    /// Radius beyond which exploring `v` would use data past the window.
    fn limit(&self, v: VIdx) -> f64;
    /// Explore `v` until `explored(v) >= radius` or the limit is reached.
    fn grow(&mut self, v: VIdx, radius: f64, out: &mut Vec<NewEdge>);
}

/// An [`EdgeSource`] whose vertices can be renumbered.
pub trait Renumber {
    /// Forget vertices mapped to `None` and renumber the rest.
    fn renumber(&mut self, map: &[Option<VIdx>]);
}

/// The problem-level result of a matching run.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `(u, v)` with `u < v`, or `(u, boundary)`.
    pub pairs: Vec<(VIdx, EdgeEnd)>,
    pub total_weight: f64,
    pub flips: bool,
}
