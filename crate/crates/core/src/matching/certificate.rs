use std::fmt;

use super::{EdgeSource, Mate, Matcher, VIdx, EPS};

/// Summary of a successful optimality check.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub primal: f64,
    pub dual: f64,
    pub edges_checked: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CertificateError {
    Uncovered(VIdx),
    Asymmetric(VIdx),
    MissingEdge(VIdx),
    NegativeBlossomDual(usize, f64),
    Infeasible { u: VIdx, v: Option<VIdx>, slack: f64 },
    NotTight { u: VIdx, v: Option<VIdx>, slack: f64 },
    PartialBlossom(usize),
    DualityGap { primal: f64, dual: f64 },
}

impl fmt::Display for CertificateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Check perfect cover, dual feasibility on every materialised edge,
/// complementary slackness, and equality of primal and dual objectives.
/// Every violated condition is reported.
pub fn validate_matching<S: EdgeSource>(m: &Matcher<S>) -> Result<Certificate, Vec<CertificateError>> {
    let mut errs = Vec::new();
    let n = m.vertex_count();
    for u in 0..n {
        match m.mate(u) {
            Mate::Free => errs.push(CertificateError::Uncovered(u)),
            Mate::Vertex(v) => {
                if m.mate(v) != Mate::Vertex(u) {
                    errs.push(CertificateError::Asymmetric(u));
                }
                match m.edge(u, v) {
                    None => errs.push(CertificateError::MissingEdge(u)),
                    Some((w, _)) => {
                        let s = m.slack(u, v, w);
                        if s.abs() > EPS {
                            errs.push(CertificateError::NotTight { u, v: Some(v), slack: s });
                        }
                    }
                }
            }
            Mate::Boundary(_) => match m.boundary_edge(u) {
                None => errs.push(CertificateError::MissingEdge(u)),
                Some((w, _, _)) => {
                    let s = w - m.radius(u);
                    if s.abs() > EPS {
                        errs.push(CertificateError::NotTight { u, v: None, slack: s });
                    }
                }
            },
        }
        if let Some((w, _, _)) = m.boundary_edge(u) {
            let s = w - m.radius(u);
            if s < -EPS {
                errs.push(CertificateError::Infeasible { u, v: None, slack: s });
            }
        }
    }
    let mut checked = 0;
    for (u, v, w, _) in m.edges() {
        checked += 1;
        let s = m.slack(u, v, w);
        if s < -EPS {
            errs.push(CertificateError::Infeasible { u, v: Some(v), slack: s });
        }
    }
    let mut dual: f64 = (0..n).map(|u| m.dual(u)).sum();
    for (b, y, _, _) in m.blossoms() {
        if y < -EPS {
            errs.push(CertificateError::NegativeBlossomDual(b, y));
        }
        dual += y;
        if y > EPS {
            let mut vs = Vec::new();
            m.node_vertices(super::blossom::Node::B(b), &mut vs);
            let outside = vs
                .iter()
                .filter(|&&v| match m.mate(v) {
                    Mate::Vertex(x) => !vs.contains(&x),
                    _ => true,
                })
                .count();
            if outside != 1 {
                errs.push(CertificateError::PartialBlossom(b));
            }
        }
    }
    let primal = m.matching().total_weight;
    if (primal - dual).abs() > EPS * primal.abs().max(1.0) * 10.0 {
        errs.push(CertificateError::DualityGap { primal, dual });
    }
    if errs.is_empty() {
        Ok(Certificate {
            primal,
            dual,
            edges_checked: checked,
        })
    } else {
        Err(errs)
    }
}
