//! Per-round matching time and a random-swap memory benchmark.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code::{CodeConfig, StabKind};
use crate::decoder::{DecoderConfig, StreamingDecoder};
use crate::error::{ConfigError, DecodeError};
use crate::lattice::Lattice;
use crate::sim::{DepolarizingModel, Simulator};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingRecord {
    pub distance: usize,
    pub p: f64,
    /// Timed rounds, warmup excluded.
    pub rounds: u64,
    /// Mean matching time per round over both stabilizer types.
    pub seconds_per_round: f64,
    /// Wall time of the whole run, simulation included.
    pub total_seconds: f64,
}

/// Run `warmup + rounds` noisy rounds, timing only the decoder calls of
/// the last `rounds`.
pub fn time_per_round(
    distance: usize,
    p: f64,
    rounds: u64,
    warmup: u64,
    seed: u64,
    cfg: DecoderConfig,
) -> Result<TimingRecord, DecodeError> {
    let start = Instant::now();
    let code = Arc::new(CodeConfig::new(distance)?);
    let model = DepolarizingModel::new(p)?;
    let mut sim = Simulator::new(code.clone(), model, seed);
    let mut decs = if p > 0.0 {
        Some([
            StreamingDecoder::new(Lattice::new(code.clone(), &model, StabKind::X)?, cfg),
            StreamingDecoder::new(Lattice::new(code.clone(), &model, StabKind::Z)?, cfg),
        ])
    } else {
        None
    };
    let mut by_kind: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut timed = 0.0;
    for i in 0..warmup + rounds {
        let round = sim.round();
        by_kind[0].clear();
        by_kind[1].clear();
        for e in sim.step(true) {
            by_kind[e.kind.index()].push(e.stab);
        }
        let Some(decs) = decs.as_mut() else { continue };
        let t0 = Instant::now();
        for (dec, ev) in decs.iter_mut().zip(&by_kind) {
            dec.push_round(round, ev)?;
        }
        if i >= warmup {
            timed += t0.elapsed().as_secs_f64();
        }
    }
    Ok(TimingRecord {
        distance,
        p,
        rounds,
        seconds_per_round: if rounds == 0 { 0.0 } else { timed / rounds as f64 },
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const MIN_SWAP_ARRAY_BYTES: usize = 1024;
pub const DEFAULT_SWAP_COUNT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwapRecord {
    pub array_bytes: usize,
    pub swaps: u64,
    pub seconds: f64,
    pub seconds_per_swap: f64,
}

/// Swap `swap_count` uniformly random pairs of `u64`s in an array of
/// `array_bytes` bytes.
pub fn swap_benchmark(array_bytes: usize, swap_count: u64, seed: u64) -> Result<SwapRecord, DecodeError> {
    if array_bytes < MIN_SWAP_ARRAY_BYTES {
        return Err(ConfigError::SwapArray(array_bytes).into());
    }
    let n = array_bytes / 8;
    let mut a: Vec<u64> = (0..n as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // multiply-shift maps a 64-bit draw onto 0..n with negligible bias
    let pick = |r: u64| ((r as u128 * n as u128) >> 64) as usize;
    let t0 = Instant::now();
    for _ in 0..swap_count {
        let (i, j) = (pick(rng.next_u64()), pick(rng.next_u64()));
        a.swap(i, j);
    }
    let seconds = t0.elapsed().as_secs_f64();
    std::hint::black_box(&a);
    Ok(SwapRecord {
        array_bytes,
        swaps: swap_count,
        seconds,
        seconds_per_swap: if swap_count == 0 { 0.0 } else { seconds / swap_count as f64 },
    })
}

pub const FALLBACK_LLC_BYTES: usize = 32 << 20;

/// Size of the largest CPU cache reported under `root`
/// (normally `/sys/devices/system/cpu/cpu0/cache`).
pub fn cache_size_from(root: &Path) -> Option<usize> {
    let mut best: Option<(u32, usize)> = None;
    for entry in std::fs::read_dir(root).ok()?.flatten() {
        let dir = entry.path();
        let read = |f: &str| std::fs::read_to_string(dir.join(f)).ok();
        let (Some(level), Some(size)) = (read("level"), read("size")) else { continue };
        let Ok(level) = level.trim().parse::<u32>() else { continue };
        let Some(bytes) = parse_size(size.trim()) else { continue };
        if best.map_or(true, |b| (level, bytes) > b) {
            best = Some((level, bytes));
        }
    }
    best.map(|b| b.1)
}

fn parse_size(s: &str) -> Option<usize> {
    let (num, mult) = match s.chars().last()? {
        'K' => (&s[..s.len() - 1], 1 << 10),
        'M' => (&s[..s.len() - 1], 1 << 20),
        'G' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    num.parse::<usize>().ok().map(|n| n * mult)
}

/// Last-level cache size, or 32 MiB when it cannot be read.
pub fn last_level_cache_bytes() -> usize {
    cache_size_from(Path::new("/sys/devices/system/cpu/cpu0/cache")).unwrap_or(FALLBACK_LLC_BYTES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(parse_size("48K"), Some(48 << 10));
        assert_eq!(parse_size("2M"), Some(2 << 20));
        assert_eq!(parse_size("512"), Some(512));
        assert_eq!(parse_size("x"), None);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powi(2))).collect();
        assert!((log_log_slope(&pts) - 2.0).abs() < 1e-12);
    }
}
