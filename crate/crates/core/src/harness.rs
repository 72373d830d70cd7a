//! Standalone matcher driver over the lattice text format.
//!
//! Input is a lattice dump (`DOT`/`LINE` records) interleaved with
//! `VERTEX round row col type` records. Output is one `MATCH a b` line per
//! matched pair, with dots named `type:round:row:col` and boundaries
//! `BOUNDARY:k`, followed by `TOTAL_WEIGHT w`.

use std::fmt::Write as _;

use crate::decoder::MatcherMode;
use crate::error::HarnessError;
use crate::lattice::{Dot, DotGraph, ExplicitLattice};
use crate::matching::{
    build_complete_graph, validate_matching, EdgeEnd, EdgeSource, ExplicitSource, LatticeSource, Matcher, Matching,
};

pub struct HarnessInput {
    pub lattice: ExplicitLattice,
    pub vertices: Vec<Dot>,
}

impl HarnessInput {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut lattice_text = String::new();
        let mut wanted = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.first() == Some(&"VERTEX") {
                if tok.len() != 5 {
                    return Err(HarnessError::Vertex(i + 1, "VERTEX needs round row col type".into()));
                }
                wanted.push((i + 1, format!("{}:{}:{}:{}", tok[4], tok[1], tok[2], tok[3])));
                // keep line numbers aligned for lattice parse errors
                lattice_text.push('\n');
            } else {
                lattice_text.push_str(line);
                lattice_text.push('\n');
            }
        }
        let lattice = ExplicitLattice::parse(&lattice_text)?;
        let mut vertices = Vec::with_capacity(wanted.len());
        for (ln, name) in wanted {
            let d = lattice
                .dot_by_name(&name)
                .ok_or_else(|| HarnessError::Vertex(ln, format!("no dot {name}")))?;
            vertices.push(d);
        }
        vertices.sort_unstable();
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Vertex(0, "duplicate vertex".into()));
        }
        Ok(Self { lattice, vertices })
    }
}

fn run<S: EdgeSource>(mut m: Matcher<S>, keys: &[Dot]) -> Result<Matching, HarnessError> {
    for &k in keys {
        m.add_vertex(k)?;
    }
    m.solve()?;
    validate_matching(&m).map_err(|e| HarnessError::Certificate(format!("{e:?}")))?;
    Ok(m.matching())
}

/// Solve the instance, returning the matching with vertex indices in
/// `input.vertices` order.
pub fn solve(input: &HarnessInput, mode: MatcherMode) -> Result<Matching, HarnessError> {
    match mode {
        MatcherMode::Cmatch => {
            let g = build_complete_graph(&input.lattice, &input.vertices)?;
            run(Matcher::new(ExplicitSource::new(&g)), &input.vertices)
        }
        MatcherMode::Eodmatch => run(Matcher::new(LatticeSource::new(input.lattice.clone())), &input.vertices),
    }
}

pub fn render(input: &HarnessInput, m: &Matching) -> String {
    let name = |v: usize| input.lattice.dot_name(input.vertices[v]);
    let mut s = String::new();
    for &(u, to) in &m.pairs {
        let other = match to {
            EdgeEnd::Vertex(v) => name(v),
            EdgeEnd::Boundary(k) => format!("BOUNDARY:{k}"),
        };
        writeln!(s, "MATCH {} {}", name(u), other).unwrap();
    }
    writeln!(s, "TOTAL_WEIGHT {}", m.total_weight).unwrap();
    s
}
