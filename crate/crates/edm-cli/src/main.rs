//! Command-line front end for the move-aware edit-distance protocol.
//!
//! Subcommands cover the whole pipeline: `hash-params` sizes the rolling-hash
//! modulus, `parse` shows one input's parse tree, `phase1` and `edm` run the
//! two-party protocol (in-process threads by default, or two OS processes
//! over a TCP socket with `--transport socket`), `oracle-edm` compares the
//! protocol's approximation against brute-force distances, and `bench` times
//! the labeling phase at a ladder of union sizes.
//!
//! Machine-readable output goes to stdout as `key=value` lines introduced by
//! `schema=1`; a human-readable summary goes to stderr. The stdout report is
//! deterministic for a fixed seed and configuration — the transport choice is
//! reported only on stderr, and the `time_*_s` keys are the only volatile
//! ones — so byte-comparing reports across runs and transports is meaningful
//! after dropping the `time_` lines.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration or input,
//! 3 protocol or backend failure. Errors print one `error: <kind>: <reason>`
//! line to stderr.

use std::fmt::Display;
use std::io::Read as _;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command as ProcessCommand, Stdio};
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use edm::esp::EspTree;
use edm::hash::{conflict_probability, min_modulus, HashConfig};
use edm::metrics::{Metrics, PartyLog, Phase};
use edm::oracles::approximation_report;
use edm::protocol::{
    run_edm, run_edm_party, run_phase1_party, run_phase1_with_sets, ProtocolConfig, Role,
};
use edm::transport::SocketChannel;
use edm::{BackendKind, EspError, HashError, ProtocolError, Text};

/// Default moduli ladder, keyed by the expected number of distinct labels.
/// `n -> m` pairs; the smallest row covering the estimate wins.
const MODULUS_LADDER: [(u64, u64); 4] =
    [(100, 1031), (1000, 10313), (10000, 103123), (100000, 1031347)];

/// Seed used when neither `--seed` nor `EDM_SEED` is given.
const DEFAULT_SEED: u64 = 7;

#[derive(Parser)]
#[command(
    name = "edm",
    version,
    about = "Approximate edit distance with moves via a two-party protocol",
    long_about = "Computes an approximation of the edit distance with moves between two \
                  texts through a semi-honest two-party protocol: each party parses its \
                  text into a hierarchy of consistently labeled blocks, the parties agree \
                  on joint label ranks without revealing their label sets, and one party \
                  learns the L1 distance between the resulting characteristic vectors."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size the rolling-hash modulus for a label budget and conflict probability.
    HashParams(HashParamsArgs),
    /// Parse one input and print its labeled tree.
    Parse(ParseArgs),
    /// Run only the joint labeling phase between two inputs.
    Phase1(PairArgs),
    /// Run the full distance protocol between two inputs.
    Edm(PairArgs),
    /// Compare the L1 approximation against brute-force distances.
    OracleEdm(OracleArgs),
    /// Time the labeling phase at a ladder of union sizes.
    Bench(BenchArgs),
    /// Internal: run one protocol party over a socket (spawned by `--transport socket`).
    #[command(hide = true)]
    Party(PartyArgs),
}

#[derive(Args)]
struct HashParamsArgs {
    /// Number of distinct values the hash must keep conflict-free.
    #[arg(long)]
    n: u64,
    /// Acceptable conflict probability.
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Also evaluate this specific modulus against the bound.
    #[arg(long)]
    m: Option<u64>,
}

#[derive(Args, Clone)]
struct TextOpts {
    /// Hash modulus; defaults to a built-in ladder keyed by input size.
    #[arg(long)]
    m: Option<u64>,
    /// Derive the modulus from the conflict bound instead of the ladder.
    #[arg(long, conflicts_with = "m")]
    auto_m: bool,
    /// Rolling-hash base; input symbols must stay below it.
    #[arg(long, default_value_t = 256)]
    b: u64,
    /// Treat inputs as FASTA: drop '>'/';' header lines and all whitespace.
    #[arg(long)]
    fasta: bool,
}

#[derive(Args)]
struct ParseArgs {
    /// Input file.
    file: PathBuf,
    #[command(flatten)]
    text: TextOpts,
}

#[derive(Args, Clone)]
struct RunOpts {
    #[command(flatten)]
    text: TextOpts,
    /// Backend for the oblivious comparisons.
    #[arg(long, value_enum, default_value_t = BackendArg::Clear)]
    backend: BackendArg,
    /// Key size for the crypto backend.
    #[arg(long, default_value_t = 256)]
    security_bits: u32,
    /// Blinding slack in bits; defaults to 30 (clear) or 12 (crypto).
    #[arg(long)]
    sigma: Option<u32>,
    /// Public cap on the label-union size; defaults to the modulus.
    #[arg(long)]
    n_cap: Option<u64>,
    /// Decryption window bound; defaults to the largest the config allows.
    #[arg(long)]
    bound: Option<i64>,
    /// RNG seed; overrides the EDM_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
    /// How the two parties exchange frames.
    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    transport: TransportArg,
    /// Listen address for the socket transport.
    #[arg(long, default_value = "127.0.0.1:0")]
    addr: String,
}

#[derive(Args)]
struct PairArgs {
    /// Party A's input file.
    file_a: PathBuf,
    /// Party B's input file.
    file_b: PathBuf,
    #[command(flatten)]
    run: RunOpts,
}

#[derive(Args)]
struct OracleArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    /// Give up on the exact move-aware distance beyond this many operations.
    #[arg(long, default_value_t = 4)]
    cap: u64,
    #[command(flatten)]
    text: TextOpts,
}

#[derive(Args)]
struct BenchArgs {
    /// Union sizes to time, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [100u64, 1000])]
    n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = BackendArg::Clear)]
    backend: BackendArg,
    #[arg(long, default_value_t = 256)]
    security_bits: u32,
    /// Fixed modulus; defaults to the ladder row for each union size.
    #[arg(long)]
    m: Option<u64>,
    /// Blinding slack in bits; defaults to 30 (clear) or 12 (crypto).
    #[arg(long)]
    sigma: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PartyArgs {
    /// Address of the parent party's listener.
    #[arg(long)]
    connect: String,
    #[arg(long, value_enum)]
    mode: PartyMode,
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    b: u64,
    #[arg(long)]
    sigma: u32,
    #[arg(long, value_enum)]
    backend: BackendArg,
    #[arg(long)]
    security_bits: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    n_cap: Option<u64>,
    #[arg(long)]
    bound: Option<i64>,
    #[arg(long)]
    fasta: bool,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum BackendArg {
    Clear,
    Crypto,
}

impl BackendArg {
    fn kind(self) -> BackendKind {
        match self {
            BackendArg::Clear => BackendKind::Clear,
            BackendArg::Crypto => BackendKind::Crypto,
        }
    }

    fn name(self) -> &'static str {
        match self {
            BackendArg::Clear => "clear",
            BackendArg::Crypto => "crypto",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum TransportArg {
    Inproc,
    Socket,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum PartyMode {
    Phase1,
    Edm,
}

impl PartyMode {
    fn name(self) -> &'static str {
        match self {
            PartyMode::Phase1 => "phase1",
            PartyMode::Edm => "edm",
        }
    }
}

/// Error with the exit code already decided: configuration/input problems
/// exit 2, protocol/backend failures exit 3 (usage errors exit 1 before this
/// type is ever constructed).
enum CliError {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl CliError {
    fn config(e: impl Into<anyhow::Error>) -> CliError {
        CliError::Config(e.into())
    }

    fn run(e: impl Into<anyhow::Error>) -> CliError {
        CliError::Run(e.into())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> CliError {
        match e {
            ProtocolError::Config(_) | ProtocolError::Esp(_) => CliError::config(e),
            _ => CliError::run(e),
        }
    }
}

impl From<HashError> for CliError {
    fn from(e: HashError) -> CliError {
        CliError::config(e)
    }
}

impl From<EspError> for CliError {
    fn from(e: EspError) -> CliError {
        CliError::config(e)
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::HashParams(args) => cmd_hash_params(args),
        Command::Parse(args) => cmd_parse(args),
        Command::Phase1(args) => cmd_pair(args, PartyMode::Phase1),
        Command::Edm(args) => cmd_pair(args, PartyMode::Edm),
        Command::OracleEdm(args) => cmd_oracle(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Party(args) => cmd_party(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Config(e)) => {
            eprintln!("error: config: {e:#}");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: run: {e:#}");
            3
        }
    }
}

// ---------------------------------------------------------------------------
// Report plumbing

/// Ordered `key=value` report printed to stdout.
struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    fn new(command: &str) -> Report {
        let mut r = Report { lines: Vec::new() };
        r.push("schema", 1);
        r.push("command", command);
        r
    }

    fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn print(&self) {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        print!("{out}");
    }
}

fn fmt_opt<T: Display>(v: Option<T>) -> String {
    match v {
        Some(v) => v.to_string(),
        None => "none".into(),
    }
}

/// Append the shared configuration keys for a protocol run.
fn push_config(report: &mut Report, rc: &RunConfig) {
    report.push("backend", rc.backend.name());
    report.push("security_bits", rc.cfg.security_bits);
    report.push("b", rc.cfg.hash.b);
    report.push("m", rc.cfg.hash.m);
    report.push("sigma", rc.cfg.sigma);
    report.push("n_cap", rc.n_cap_effective);
    report.push("bound", rc.bound_effective);
    report.push("seed", rc.seed);
    report.push("fasta", rc.fasta);
}

/// Append the transcript accounting keys.
fn push_metrics(report: &mut Report, metrics: &Metrics) {
    report.push("rounds_total", metrics.total_rounds());
    for phase in Phase::ALL {
        report.push(format!("rounds_{phase}"), metrics.rounds_in(phase));
    }
    report.push("messages_total", metrics.sends().len());
    report.push("bytes_total", metrics.total_bytes());
    let by_party = |party: u8| -> u64 {
        metrics.sends().iter().filter(|s| s.party == party).map(|s| s.entry.bytes).sum()
    };
    report.push("bytes_a_to_b", by_party(0));
    report.push("bytes_b_to_a", by_party(1));
    for phase in Phase::ALL {
        report.push(format!("bytes_{phase}"), metrics.bytes_in(phase));
    }
    for (tag, bytes) in metrics.bytes_by_tag() {
        report.push(format!("bytes_tag_0x{tag:02x}"), bytes);
    }
}

/// Human-readable transcript summary on stderr.
fn print_metrics_table(metrics: &Metrics, transport: &str) {
    eprintln!("{:>8}  {:>6}  {:>8}  {:>10}", "phase", "rounds", "messages", "bytes");
    for phase in Phase::ALL {
        eprintln!(
            "{:>8}  {:>6}  {:>8}  {:>10}",
            phase.to_string(),
            metrics.rounds_in(phase),
            metrics.messages_in(phase),
            metrics.bytes_in(phase)
        );
    }
    eprintln!(
        "{:>8}  {:>6}  {:>8}  {:>10}",
        "total",
        metrics.total_rounds(),
        metrics.sends().len(),
        metrics.total_bytes()
    );
    eprintln!("transport = {transport}");
}

// ---------------------------------------------------------------------------
// Configuration resolution

/// A fully resolved protocol configuration plus the report-facing facts
/// about how it was chosen.
struct RunConfig {
    cfg: ProtocolConfig,
    backend: BackendArg,
    seed: u64,
    fasta: bool,
    n_cap_effective: u64,
    bound_effective: i64,
}

/// Smallest ladder row covering the estimate; the largest row is the final
/// fallback for estimates beyond the ladder.
fn ladder_modulus(n_estimate: u64) -> u64 {
    for (n, m) in MODULUS_LADDER {
        if n_estimate <= n {
            return m;
        }
    }
    MODULUS_LADDER[MODULUS_LADDER.len() - 1].1
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("EDM_SEED") {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|_| CliError::config(anyhow!("EDM_SEED must be an unsigned integer, got {raw:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SEED),
        Err(e) => Err(CliError::config(anyhow!("EDM_SEED is unreadable: {e}"))),
    }
}

fn resolve_modulus(text: &TextOpts, n_estimate: u64) -> Result<u64, CliError> {
    match (text.m, text.auto_m) {
        (Some(m), _) => Ok(m),
        (None, true) => Ok(min_modulus(n_estimate.max(2), 0.05)?),
        (None, false) => Ok(ladder_modulus(n_estimate)),
    }
}

fn default_sigma(backend: BackendArg) -> u32 {
    match backend {
        // The clear backend pays nothing for wide blinds. The crypto backend
        // sizes its discrete-log window by n_cap * 2^sigma, so the default
        // keeps interactive runs fast; raise it for a smaller statistical
        // leak at the price of a slower first decryption.
        BackendArg::Clear => 30,
        BackendArg::Crypto => 12,
    }
}

fn resolve_run(opts: &RunOpts, n_estimate: u64) -> Result<RunConfig, CliError> {
    let m = resolve_modulus(&opts.text, n_estimate)?;
    let sigma = opts.sigma.unwrap_or_else(|| default_sigma(opts.backend));
    let cfg = ProtocolConfig {
        backend: opts.backend.kind(),
        security_bits: opts.security_bits,
        hash: HashConfig::new(opts.text.b, m)?,
        sigma,
        n_cap: opts.n_cap,
        bound: opts.bound,
    };
    cfg.validate()?;
    Ok(RunConfig {
        n_cap_effective: cfg.effective_n_cap(),
        bound_effective: cfg.effective_bound()?,
        backend: opts.backend,
        seed: resolve_seed(opts.seed)?,
        fasta: opts.text.fasta,
        cfg,
    })
}

// ---------------------------------------------------------------------------
// Input loading

fn read_input(path: &Path, fasta: bool) -> Result<Text, CliError> {
    let raw = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Config)?;
    let bytes = if fasta {
        strip_fasta(&raw)
    } else {
        // Keep the payload verbatim except for one trailing newline, so
        // `printf 'abc\n' > f` compares the three bytes a user means.
        let mut raw = raw;
        if raw.last() == Some(&b'\n') {
            raw.pop();
            if raw.last() == Some(&b'\r') {
                raw.pop();
            }
        }
        raw
    };
    Ok(Text::from_bytes(&bytes))
}

/// Drop `>`/`;` header lines and every whitespace byte.
fn strip_fasta(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len());
    for line in raw.split(|&b| b == b'\n') {
        let trimmed: &[u8] = match line.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(start) => &line[start..],
            None => continue,
        };
        if trimmed.first().is_some_and(|&b| b == b'>' || b == b';') {
            continue;
        }
        out.extend(line.iter().copied().filter(|b| !b.is_ascii_whitespace()));
    }
    out
}

// ---------------------------------------------------------------------------
// Simple subcommands

fn cmd_hash_params(args: HashParamsArgs) -> Result<(), CliError> {
    let minimum = min_modulus(args.n, args.p)?;
    let mut report = Report::new("hash-params");
    report.push("n", args.n);
    report.push("p", args.p);
    report.push("min_modulus", minimum);
    report.push("conflict_probability", conflict_probability(args.n, minimum));
    if let Some(m) = args.m {
        let p_at_m = conflict_probability(args.n, m);
        report.push("m", m);
        report.push("conflict_probability_at_m", p_at_m);
        report.push("satisfies_bound", p_at_m <= args.p);
    }
    report.print();
    eprintln!(
        "smallest modulus keeping {} labels conflict-free with probability >= {} is {}",
        args.n,
        1.0 - args.p,
        minimum
    );
    Ok(())
}

fn cmd_parse(args: ParseArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let text = read_input(&args.file, args.text.fasta)?;
    let m = resolve_modulus(&args.text, (text.len() as u64).saturating_mul(2))?;
    let cfg = HashConfig::new(args.text.b, m)?;
    let tree = EspTree::build(&text, cfg)?;
    let parse_s = started.elapsed().as_secs_f64();

    let mut report = Report::new("parse");
    report.push("b", cfg.b);
    report.push("m", cfg.m);
    report.push("fasta", args.text.fasta);
    report.push("len", text.len());
    report.push("labels", tree.tentative_label_set().len());
    report.push("nodes", tree.nodes().len());
    report.push("height", tree.height());
    report.push("height_bound", tree.height_bound());
    report.push("time_parse_s", format!("{parse_s:.6}"));
    report.print();
    println!("tree:");
    print!("{}", tree.dump());
    eprintln!(
        "parsed {} symbols into {} nodes ({} distinct labels), height {} <= bound {}",
        text.len(),
        tree.nodes().len(),
        tree.tentative_label_set().len(),
        tree.height(),
        tree.height_bound()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let x = read_input(&args.file_a, args.text.fasta)?;
    let y = read_input(&args.file_b, args.text.fasta)?;
    // The exact distance is found by searching the whole radius-`cap` ball
    // around one input, which grows as alphabet^(length+cap): refuse runs
    // that cannot finish instead of spinning forever.
    let distinct: std::collections::HashSet<u64> =
        x.symbols().iter().chain(y.symbols().iter()).copied().collect();
    let alphabet = distinct.len() as f64 + 1.0;
    let reach = x.len().max(y.len()) as f64 + args.cap as f64;
    if reach * alphabet.ln() > 1e7f64.ln() {
        return Err(CliError::config(anyhow!(
            "inputs too large for the brute-force search ({} distinct symbols, \
             length {}, cap {}); shorten the inputs or lower --cap",
            distinct.len(),
            x.len().max(y.len()),
            args.cap
        )));
    }
    let estimate = (x.len().max(y.len()) as u64).saturating_mul(2);
    let m = resolve_modulus(&args.text, estimate)?;
    let cfg = HashConfig::new(args.text.b, m)?;
    let result = approximation_report(&x, &y, cfg, args.cap)?;
    let lower_bound_ok = result.edm.map(|d| 2 * result.l1 >= d);

    let mut report = Report::new("oracle-edm");
    report.push("b", cfg.b);
    report.push("m", cfg.m);
    report.push("cap", args.cap);
    report.push("len_a", x.len());
    report.push("len_b", y.len());
    report.push("l1", result.l1);
    report.push("edm", fmt_opt(result.edm));
    report.push("levenshtein", result.levenshtein);
    report.push("ratio", fmt_opt(result.ratio));
    report.push("lower_bound_ok", fmt_opt(lower_bound_ok));
    report.push("time_total_s", format!("{:.6}", started.elapsed().as_secs_f64()));
    report.print();
    match result.edm {
        Some(d) => eprintln!(
            "l1 approximation {} vs exact move-aware distance {} (levenshtein {})",
            result.l1, d, result.levenshtein
        ),
        None => eprintln!(
            "l1 approximation {}; exact move-aware distance exceeds cap {} (levenshtein {})",
            result.l1, args.cap, result.levenshtein
        ),
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let sigma = args.sigma.unwrap_or_else(|| default_sigma(args.backend));
    let mut report = Report::new("bench");
    report.push("backend", args.backend.name());
    report.push("security_bits", args.security_bits);
    report.push("sigma", sigma);
    report.push("seed", seed);
    eprintln!("{:>8}  {:>8}  {:>16}  {:>14}", "n", "m", "preprocessing_s", "per_label_s");
    for &n in &args.n {
        if n == 0 {
            return Err(CliError::config(anyhow!("bench sizes must be positive")));
        }
        let m = args.m.unwrap_or_else(|| ladder_modulus(n));
        if n >= m {
            return Err(CliError::config(anyhow!(
                "bench size {n} must stay below the modulus {m}"
            )));
        }
        let cfg = ProtocolConfig {
            backend: args.backend.kind(),
            security_bits: args.security_bits,
            hash: HashConfig::new(256, m)?,
            sigma,
            n_cap: None,
            bound: None,
        };
        cfg.validate()?;
        // Preprocessing = a run with empty label sets (key generation and
        // setup only); the per-label cost is the marginal time for n labels
        // on both sides over that baseline.
        let t0 = Instant::now();
        run_phase1_with_sets(&[], &[], &cfg, seed)?;
        let pre_s = t0.elapsed().as_secs_f64();
        let labels: Vec<u64> = (1..=n).collect();
        let t1 = Instant::now();
        let outcome = run_phase1_with_sets(&labels, &labels, &cfg, seed)?;
        let full_s = t1.elapsed().as_secs_f64();
        if outcome.a.union_size != Some(n) {
            return Err(CliError::run(anyhow!(
                "bench run for n={n} reported union {:?}",
                outcome.a.union_size
            )));
        }
        let per_label_s = ((full_s - pre_s) / n as f64).max(0.0);
        report.push(format!("bench.{n}.m"), m);
        report.push(format!("bench.{n}.preprocessing_s"), format!("{pre_s:.6}"));
        report.push(format!("bench.{n}.per_label_s"), format!("{per_label_s:.6}"));
        eprintln!("{n:>8}  {m:>8}  {pre_s:>16.6}  {per_label_s:>14.6}");
    }
    report.push("time_total_s", format!("{:.6}", started.elapsed().as_secs_f64()));
    report.print();
    Ok(())
}

// ---------------------------------------------------------------------------
// Protocol runs (phase1 / edm over both transports)

/// What a protocol run produced, independent of transport.
struct RunOutcome {
    l1: Option<u64>,
    n: Option<u64>,
    metrics: Metrics,
}

fn cmd_pair(args: PairArgs, mode: PartyMode) -> Result<(), CliError> {
    let started = Instant::now();
    let text_a = read_input(&args.file_a, args.run.text.fasta)?;
    let text_b = read_input(&args.file_b, args.run.text.fasta)?;
    let estimate = (text_a.len().max(text_b.len()) as u64).saturating_mul(2);
    let rc = resolve_run(&args.run, estimate)?;

    // Parse both texts up front for the report's label counts; the protocol
    // drivers re-parse internally, which is cheap at CLI scale.
    let parse_started = Instant::now();
    let tree_a = EspTree::build(&text_a, rc.cfg.hash)?;
    let tree_b = EspTree::build(&text_b, rc.cfg.hash)?;
    let labels_a = tree_a.tentative_label_set();
    let labels_b = tree_b.tentative_label_set();
    let parse_s = parse_started.elapsed().as_secs_f64();

    let transport = args.run.transport;
    let protocol_started = Instant::now();
    let outcome = match transport {
        TransportArg::Inproc => run_inproc(mode, &text_a, &text_b, &labels_a, &labels_b, &rc)?,
        TransportArg::Socket => run_socket(mode, &args, &text_a, &labels_a, &rc)?,
    };
    let protocol_s = protocol_started.elapsed().as_secs_f64();

    let mut report = Report::new(mode.name());
    push_config(&mut report, &rc);
    report.push("len_a", text_a.len());
    report.push("len_b", text_b.len());
    report.push("labels_a", labels_a.len());
    report.push("labels_b", labels_b.len());
    report.push("n", fmt_opt(outcome.n));
    if mode == PartyMode::Edm {
        report.push("l1", fmt_opt(outcome.l1));
    }
    push_metrics(&mut report, &outcome.metrics);
    report.push("time_parse_s", format!("{parse_s:.6}"));
    report.push("time_protocol_s", format!("{protocol_s:.6}"));
    report.push("time_total_s", format!("{:.6}", started.elapsed().as_secs_f64()));
    report.print();

    print_metrics_table(
        &outcome.metrics,
        match transport {
            TransportArg::Inproc => "inproc",
            TransportArg::Socket => "socket",
        },
    );
    match mode {
        PartyMode::Edm => eprintln!(
            "l1 distance = {} over {} joint labels (backend {}, seed {})",
            fmt_opt(outcome.l1),
            fmt_opt(outcome.n),
            rc.backend.name(),
            rc.seed
        ),
        PartyMode::Phase1 => eprintln!(
            "joint labeling agreed on {} labels ({} + {} tentative; backend {}, seed {})",
            fmt_opt(outcome.n),
            labels_a.len(),
            labels_b.len(),
            rc.backend.name(),
            rc.seed
        ),
    }
    Ok(())
}

fn run_inproc(
    mode: PartyMode,
    text_a: &Text,
    text_b: &Text,
    labels_a: &[u64],
    labels_b: &[u64],
    rc: &RunConfig,
) -> Result<RunOutcome, CliError> {
    match mode {
        PartyMode::Edm => {
            let outcome = run_edm(text_a, text_b, &rc.cfg, rc.seed)?;
            Ok(RunOutcome { l1: Some(outcome.l1), n: Some(outcome.n), metrics: outcome.metrics })
        }
        PartyMode::Phase1 => {
            let outcome = run_phase1_with_sets(labels_a, labels_b, &rc.cfg, rc.seed)?;
            Ok(RunOutcome { l1: None, n: outcome.a.union_size, metrics: outcome.metrics })
        }
    }
}

fn run_socket(
    mode: PartyMode,
    args: &PairArgs,
    text_a: &Text,
    labels_a: &[u64],
    rc: &RunConfig,
) -> Result<RunOutcome, CliError> {
    let listener = TcpListener::bind(&args.run.addr)
        .with_context(|| format!("binding {}", args.run.addr))
        .map_err(CliError::Config)?;
    let local = listener.local_addr().map_err(CliError::run)?;

    let exe = std::env::current_exe()
        .context("locating the current executable")
        .map_err(CliError::Run)?;
    let mut command = ProcessCommand::new(exe);
    command
        .arg("party")
        .arg("--connect")
        .arg(local.to_string())
        .arg("--mode")
        .arg(mode.name())
        .arg("--file")
        .arg(&args.file_b)
        .arg("--m")
        .arg(rc.cfg.hash.m.to_string())
        .arg("--b")
        .arg(rc.cfg.hash.b.to_string())
        .arg("--sigma")
        .arg(rc.cfg.sigma.to_string())
        .arg("--backend")
        .arg(rc.backend.name())
        .arg("--security-bits")
        .arg(rc.cfg.security_bits.to_string())
        .arg("--seed")
        .arg(rc.seed.to_string());
    if let Some(n_cap) = rc.cfg.n_cap {
        command.arg("--n-cap").arg(n_cap.to_string());
    }
    if let Some(bound) = rc.cfg.bound {
        command.arg("--bound").arg(bound.to_string());
    }
    if rc.fasta {
        command.arg("--fasta");
    }
    command.stdout(Stdio::piped());
    let mut child = command.spawn().context("spawning party B").map_err(CliError::Run)?;

    let mut run = || -> Result<(RunOutcome, PartyLog), CliError> {
        let stream = accept_party(&listener, &mut child)?;
        let mut channel = SocketChannel::new(stream).map_err(CliError::run)?;
        let (outcome, log_a) = match mode {
            PartyMode::Edm => {
                let (result, log) =
                    run_edm_party(Role::A, text_a, &rc.cfg, rc.seed, &mut channel)?;
                (RunOutcome { l1: result.l1, n: Some(result.n), metrics: empty_metrics() }, log)
            }
            PartyMode::Phase1 => {
                let (result, log) =
                    run_phase1_party(Role::A, labels_a, &rc.cfg, rc.seed, &mut channel)?;
                (RunOutcome { l1: None, n: result.union_size, metrics: empty_metrics() }, log)
            }
        };
        channel.finish().map_err(CliError::run)?;
        Ok((outcome, log_a))
    };
    let result = run();
    if result.is_err() {
        let _ = child.kill();
        let _ = child.wait();
    }
    let (mut outcome, log_a) = result?;

    let mut wire = String::new();
    child
        .stdout
        .take()
        .expect("stdout was piped")
        .read_to_string(&mut wire)
        .context("reading party B's transcript log")
        .map_err(CliError::Run)?;
    let status = child.wait().context("waiting for party B").map_err(CliError::Run)?;
    if !status.success() {
        return Err(CliError::run(anyhow!("party B exited with {status}")));
    }
    let log_b = PartyLog::from_wire(&wire).map_err(CliError::run)?;
    outcome.metrics = Metrics::merge(&log_a, &log_b).map_err(CliError::run)?;
    Ok(outcome)
}

/// Placeholder merged later from the two party logs.
fn empty_metrics() -> Metrics {
    Metrics::merge(&PartyLog::new(), &PartyLog::new()).expect("empty logs merge")
}

/// Accept party B's connection, noticing early death of the child instead of
/// blocking forever on a connection that will never come.
fn accept_party(listener: &TcpListener, child: &mut Child) -> Result<TcpStream, CliError> {
    listener.set_nonblocking(true).map_err(CliError::run)?;
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false).map_err(CliError::run)?;
                return Ok(stream);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if let Some(status) = child.try_wait().map_err(CliError::run)? {
                    return Err(CliError::run(anyhow!(
                        "party B exited with {status} before connecting"
                    )));
                }
                if Instant::now() >= deadline {
                    return Err(CliError::run(anyhow!("party B never connected")));
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(CliError::run(e)),
        }
    }
}

fn cmd_party(args: PartyArgs) -> Result<(), CliError> {
    let cfg = ProtocolConfig {
        backend: args.backend.kind(),
        security_bits: args.security_bits,
        hash: HashConfig::new(args.b, args.m)?,
        sigma: args.sigma,
        n_cap: args.n_cap,
        bound: args.bound,
    };
    cfg.validate()?;
    let text = read_input(&args.file, args.fasta)?;
    let stream = TcpStream::connect(&args.connect)
        .with_context(|| format!("connecting to {}", args.connect))
        .map_err(CliError::Run)?;
    let mut channel = SocketChannel::new(stream).map_err(CliError::run)?;
    let log = match args.mode {
        PartyMode::Edm => run_edm_party(Role::B, &text, &cfg, args.seed, &mut channel)?.1,
        PartyMode::Phase1 => {
            let labels = EspTree::build(&text, cfg.hash)?.tentative_label_set();
            run_phase1_party(Role::B, &labels, &cfg, args.seed, &mut channel)?.1
        }
    };
    channel.finish().map_err(CliError::run)?;
    print!("{}", log.to_wire());
    Ok(())
}
