//! Text formats for experiment results.
//!
//! The raw format lists, per distance, one line per error rate:
//! `p t_check checksZ checksX changesZ changesX cpu_seconds`, framed by
//! block counts and closed by the total CPU time. The processed format has
//! the same framing with `p p_L(Z) p_L(X)` lines in `N.NNNNNNe±XX` form.

use std::fmt::Write as _;

use crate::decoder::{estimate_p_l, ExperimentResult, LogicalClass, RateEstimate};
use crate::error::FormatError;

#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub p: f64,
    pub t_check: u64,
    pub checks: [u64; 2],
    pub changes: [u64; 2],
    pub cpu_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawBlock {
    pub distance: usize,
    pub rows: Vec<RawRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawFile {
    pub blocks: Vec<RawBlock>,
    pub total_cpu_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedBlock {
    pub distance: usize,
    /// `(p, p_L(Z), p_L(X))`.
    pub rows: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedFile {
    pub blocks: Vec<ProcessedBlock>,
}

/// `x` with six fractional digits and a signed two-digit exponent.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

struct Tokens<'a> {
    it: std::iter::Enumerate<std::str::SplitWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            it: s.split_whitespace().enumerate(),
        }
    }

    fn next<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, FormatError> {
        match self.it.next() {
            Some((i, t)) => t.parse().map_err(|_| FormatError::Malformed(i, format!("expected {what}, got {t:?}"))),
            None => Err(FormatError::Malformed(usize::MAX, format!("missing {what}"))),
        }
    }

    fn finish(mut self) -> Result<(), FormatError> {
        match self.it.next() {
            Some((i, t)) => Err(FormatError::Malformed(i, format!("trailing token {t:?}"))),
            None => Ok(()),
        }
    }
}

impl RawFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut tk = Tokens::new(text);
        let nd: usize = tk.next("distance count")?;
        let mut blocks = Vec::with_capacity(nd);
        for _ in 0..nd {
            let distance = tk.next("distance")?;
            let n: usize = tk.next("row count")?;
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                rows.push(RawRow {
                    p: tk.next("p")?,
                    t_check: tk.next("t_check")?,
                    checks: [tk.next("Z checks")?, tk.next("X checks")?],
                    changes: [tk.next("Z changes")?, tk.next("X changes")?],
                    cpu_seconds: tk.next("cpu seconds")?,
                });
            }
            blocks.push(RawBlock { distance, rows });
        }
        let total_cpu_seconds = tk.next("total cpu seconds")?;
        tk.finish()?;
        Ok(Self {
            blocks,
            total_cpu_seconds,
        })
    }

    /// Group results by distance, ordered by distance then p.
    pub fn from_results(results: &[ExperimentResult]) -> Result<Self, FormatError> {
        if results.is_empty() {
            return Err(FormatError::Empty);
        }
        let mut sorted: Vec<&ExperimentResult> = results.iter().collect();
        sorted.sort_by(|a, b| {
            let (a, b) = (a.get(LogicalClass::Z), b.get(LogicalClass::Z));
            (a.distance, a.p).partial_cmp(&(b.distance, b.p)).expect("finite p")
        });
        let mut blocks: Vec<RawBlock> = Vec::new();
        for r in sorted {
            let (z, x) = (r.get(LogicalClass::Z), r.get(LogicalClass::X));
            let row = RawRow {
                p: z.p,
                t_check: z.t_check,
                checks: [z.checks, x.checks],
                changes: [z.changes, x.changes],
                cpu_seconds: r.cpu_seconds,
            };
            match blocks.last_mut() {
                Some(b) if b.distance == z.distance => b.rows.push(row),
                _ => blocks.push(RawBlock {
                    distance: z.distance,
                    rows: vec![row],
                }),
            }
        }
        // sum what is printed so the total matches the rows
        let total_cpu_seconds = blocks
            .iter()
            .flat_map(|b| &b.rows)
            .map(|r| (r.cpu_seconds * 100.0).round())
            .sum::<f64>()
            / 100.0;
        Ok(Self {
            blocks,
            total_cpu_seconds,
        })
    }

    pub fn emit(&self) -> Result<String, FormatError> {
        if self.blocks.is_empty() {
            return Err(FormatError::Empty);
        }
        let mut s = String::new();
        writeln!(s, "{}", self.blocks.len()).unwrap();
        for b in &self.blocks {
            writeln!(s, "{}\n{}", b.distance, b.rows.len()).unwrap();
            for r in &b.rows {
                writeln!(
                    s,
                    "{} {} {} {} {} {} {:.2}",
                    r.p, r.t_check, r.checks[0], r.checks[1], r.changes[0], r.changes[1], r.cpu_seconds
                )
                .unwrap();
            }
        }
        writeln!(s, "{:.2}", self.total_cpu_seconds).unwrap();
        Ok(s)
    }

    /// Convert check and change counts into per-round logical error rates.
    pub fn process(&self) -> Result<ProcessedFile, FormatError> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let mut rows = Vec::with_capacity(b.rows.len());
            for r in &b.rows {
                let rate = |i: usize| {
                    estimate_p_l(r.changes[i], r.checks[i], r.t_check)
                        .map(|e| e.p_l)
                        .map_err(|e| FormatError::Malformed(0, e.to_string()))
                };
                rows.push((r.p, rate(0)?, rate(1)?));
            }
            blocks.push(ProcessedBlock {
                distance: b.distance,
                rows,
            });
        }
        Ok(ProcessedFile { blocks })
    }
}

impl ProcessedFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut tk = Tokens::new(text);
        let nd: usize = tk.next("distance count")?;
        let mut blocks = Vec::with_capacity(nd);
        for _ in 0..nd {
            let distance = tk.next("distance")?;
            let n: usize = tk.next("row count")?;
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                rows.push((tk.next("p")?, tk.next("Z rate")?, tk.next("X rate")?));
            }
            blocks.push(ProcessedBlock { distance, rows });
        }
        tk.finish()?;
        Ok(Self { blocks })
    }

    pub fn emit(&self) -> Result<String, FormatError> {
        if self.blocks.is_empty() {
            return Err(FormatError::Empty);
        }
        let mut s = String::new();
        writeln!(s, "{}", self.blocks.len()).unwrap();
        for b in &self.blocks {
            writeln!(s, "{}\n{}", b.distance, b.rows.len()).unwrap();
            for &(p, z, x) in &b.rows {
                writeln!(s, "{} {} {}", sci(p), sci(z), sci(x)).unwrap();
            }
        }
        Ok(s)
    }
}

pub const CSV_HEADER: &str = "distance,p,class,t_check,checks,changes,p_l,std_err,saturated,low_confidence";

#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub distance: usize,
    pub p: f64,
    pub class: LogicalClass,
    pub t_check: u64,
    pub checks: u64,
    pub changes: u64,
    pub p_l: f64,
    pub std_err: f64,
    pub saturated: bool,
    pub low_confidence: bool,
}

impl From<&RateEstimate> for CsvRow {
    fn from(e: &RateEstimate) -> Self {
        Self {
            distance: e.distance,
            p: e.p,
            class: e.class,
            t_check: e.t_check,
            checks: e.checks,
            changes: e.changes,
            p_l: e.p_l,
            std_err: e.std_err,
            saturated: e.saturated,
            low_confidence: e.low_confidence,
        }
    }
}

/// One row per (distance, p, class), sorted.
pub fn emit_csv(results: &[ExperimentResult]) -> Result<String, FormatError> {
    if results.is_empty() {
        return Err(FormatError::Empty);
    }
    let mut rows: Vec<CsvRow> = results.iter().flat_map(|r| r.estimates.iter().map(CsvRow::from)).collect();
    rows.sort_by(|a, b| (a.distance, a.p, a.class).partial_cmp(&(b.distance, b.p, b.class)).expect("finite p"));
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{:e},{:e},{},{}",
            r.distance,
            r.p,
            r.class.name(),
            r.t_check,
            r.checks,
            r.changes,
            r.p_l,
            r.std_err,
            r.saturated,
            r.low_confidence
        )
        .unwrap();
    }
    Ok(s)
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(FormatError::Malformed(0, "missing header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(FormatError::Malformed(i, format!("expected 10 fields, got {}", f.len())));
        }
        let bad = |what: &str| FormatError::Malformed(i, format!("bad {what}"));
        let class = match f[2] {
            "Z_L" => LogicalClass::Z,
            "X_L" => LogicalClass::X,
            _ => return Err(bad("class")),
        };
        out.push(CsvRow {
            distance: f[0].parse().map_err(|_| bad("distance"))?,
            p: f[1].parse().map_err(|_| bad("p"))?,
            class,
            t_check: f[3].parse().map_err(|_| bad("t_check"))?,
            checks: f[4].parse().map_err(|_| bad("checks"))?,
            changes: f[5].parse().map_err(|_| bad("changes"))?,
            p_l: f[6].parse().map_err(|_| bad("p_l"))?,
            std_err: f[7].parse().map_err(|_| bad("std_err"))?,
            saturated: f[8].parse().map_err(|_| bad("saturated"))?,
            low_confidence: f[9].parse().map_err(|_| bad("low_confidence"))?,
        });
    }
    Ok(out)
}
