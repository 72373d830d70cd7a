use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use surfmatch::bench::{
    last_level_cache_bytes, log_log_slope, swap_benchmark, time_per_round, DEFAULT_SWAP_COUNT, MIN_SWAP_ARRAY_BYTES,
};
use surfmatch::decoder::{pilot_t_check, run_memory_experiment, DecoderConfig, ExperimentConfig, MatcherMode};
use surfmatch::error::{DecodeError, FormatError, HarnessError};
use surfmatch::harness::{render, solve, HarnessInput};
use surfmatch::report::{emit_csv, RawFile};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Raw,
    Processed,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Bench {
    Time,
    Swap,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Cmatch,
    Eodmatch,
}

impl From<Mode> for MatcherMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Cmatch => MatcherMode::Cmatch,
            Mode::Eodmatch => MatcherMode::Eodmatch,
        }
    }
}

/// Surface code memory experiments decoded by streaming matching.
#[derive(Debug, Parser)]
#[command(name = "surfmatch", version, arg_required_else_help = true)]
struct Cli {
    /// Code distances (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    distance: Vec<usize>,
    /// Physical error rates (repeatable or comma separated).
    #[arg(long = "p", value_delimiter = ',')]
    p: Vec<f64>,
    /// Rounds per logical check; chosen from a pilot run when omitted.
    #[arg(long)]
    t_check: Option<u64>,
    /// Logical state changes to collect per class.
    #[arg(long, default_value_t = 1000)]
    target_changes: u64,
    /// Stop after this many checks even if the target is not reached.
    #[arg(long)]
    max_checks: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Eodmatch)]
    matcher: Mode,
    /// Active window length in rounds (default 2d).
    #[arg(long)]
    window: Option<u32>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Processed)]
    format: Format,
    /// Run a benchmark instead of an experiment.
    #[arg(long, value_enum)]
    bench: Option<Bench>,
    /// Timed rounds per distance for `--bench time`.
    #[arg(long, default_value_t = 1000)]
    rounds: u64,
    /// Array sizes for `--bench swap` (default: 16 KiB and 8x the last-level cache).
    #[arg(long, value_delimiter = ',')]
    swap_array_bytes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SWAP_COUNT)]
    swap_count: u64,
    /// Match the vertices of a dumped lattice file and print the pairs.
    #[arg(long, conflicts_with = "bench")]
    harness: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Invariant(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invariant(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invariant(m) | Failure::Io(m) => m,
        }
    }
}

impl From<DecodeError> for Failure {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Lattice(_) | HarnessError::Vertex(..) => Failure::Usage(e.to_string()),
            HarnessError::Match(_) | HarnessError::Certificate(_) => Failure::Invariant(e.to_string()),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Invariant(e.to_string())
    }
}

fn require<T>(v: &[T], flag: &str) -> Result<(), Failure> {
    if v.is_empty() {
        return Err(Failure::Usage(format!("{flag} is required")));
    }
    Ok(())
}

fn check_rates(ps: &[f64]) -> Result<(), Failure> {
    for &p in ps {
        if !(p > 0.0 && p < 1.0) {
            return Err(Failure::Usage(format!("--p must lie in (0, 1), got {p}")));
        }
    }
    let mut sorted = ps.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::Usage("--p values must be distinct".into()));
    }
    Ok(())
}

fn check_distances(ds: &[usize]) -> Result<(), Failure> {
    let mut sorted = ds.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Failure::Usage("--distance values must be distinct".into()));
    }
    Ok(())
}

fn decoder_config(cli: &Cli, d: usize) -> DecoderConfig {
    let cfg = DecoderConfig::new(d).with_mode(cli.matcher.into());
    match cli.window {
        Some(w) => cfg.with_window(w),
        None => cfg,
    }
}

fn experiment(cli: &Cli) -> Result<String, Failure> {
    require(&cli.distance, "--distance")?;
    require(&cli.p, "--p")?;
    check_distances(&cli.distance)?;
    check_rates(&cli.p)?;
    if cli.t_check == Some(0) {
        return Err(Failure::Usage("--t-check must be positive".into()));
    }
    let mut results = Vec::new();
    for &d in &cli.distance {
        for &p in &cli.p {
            let t_check = match cli.t_check {
                Some(t) => t,
                None => pilot_t_check(d, p, cli.seed, cli.matcher.into())?,
            };
            let mut cfg = ExperimentConfig::new(d, p, t_check);
            cfg.target_changes = cli.target_changes;
            cfg.max_checks = cli.max_checks.unwrap_or(u64::MAX);
            cfg.seed = cli.seed;
            cfg.decoder = decoder_config(cli, d);
            results.push(run_memory_experiment(&cfg)?);
        }
    }
    Ok(match cli.format {
        Format::Raw => RawFile::from_results(&results)?.emit()?,
        Format::Processed => RawFile::from_results(&results)?.process()?.emit()?,
        Format::Csv => emit_csv(&results)?,
    })
}

fn time_bench(cli: &Cli) -> Result<String, Failure> {
    require(&cli.distance, "--distance")?;
    check_distances(&cli.distance)?;
    let ps = if cli.p.is_empty() { vec![0.004] } else { cli.p.clone() };
    check_rates(&ps)?;
    let mut s = String::from("distance p rounds seconds_per_round total_seconds\n");
    for &p in &ps {
        let mut pts = Vec::new();
        for &d in &cli.distance {
            let cfg = decoder_config(cli, d).with_verify(false);
            let r = time_per_round(d, p, cli.rounds, 4 * d as u64, cli.seed, cfg)?;
            writeln!(s, "{} {} {} {:e} {:.2}", d, p, r.rounds, r.seconds_per_round, r.total_seconds).unwrap();
            pts.push((d as f64, r.seconds_per_round));
        }
        if pts.len() >= 2 && pts.iter().all(|&(_, t)| t > 0.0) {
            writeln!(s, "# p={p} log-log slope {:.3}", log_log_slope(&pts)).unwrap();
        }
    }
    Ok(s)
}

fn swap_bench(cli: &Cli) -> Result<String, Failure> {
    let sizes = if cli.swap_array_bytes.is_empty() {
        vec![16 << 10, 8 * last_level_cache_bytes()]
    } else {
        cli.swap_array_bytes.clone()
    };
    if let Some(&b) = sizes.iter().find(|&&b| b < MIN_SWAP_ARRAY_BYTES) {
        return Err(Failure::Usage(format!("--swap-array-bytes must be at least {MIN_SWAP_ARRAY_BYTES}, got {b}")));
    }
    let mut s = String::from("array_bytes swaps seconds seconds_per_swap\n");
    for b in sizes {
        let r = swap_benchmark(b, cli.swap_count, cli.seed)?;
        writeln!(s, "{} {} {:.3} {:e}", r.array_bytes, r.swaps, r.seconds, r.seconds_per_swap).unwrap();
    }
    Ok(s)
}

fn harness(cli: &Cli, path: &PathBuf) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let input = HarnessInput::parse(&text)?;
    let m = solve(&input, cli.matcher.into())?;
    Ok(render(&input, &m))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let text = match (&cli.harness, cli.bench) {
        (Some(path), _) => harness(cli, path)?,
        (None, Some(Bench::Time)) => time_bench(cli)?,
        (None, Some(Bench::Swap)) => swap_bench(cli)?,
        (None, None) => experiment(cli)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
