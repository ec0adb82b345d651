//! Command-line front end.
//!
//! Exit codes are shared by every subcommand: 0 when the run completed or all
//! requested properties hold, 1 when a property is violated or a schedule is
//! illegal, 2 for usage and capacity errors.

pub mod report;
pub mod trace_io;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checker::{self, KRule, ModelChecker, Property, Verdict, DEFAULT_STATE_LIMIT};
use crate::daemon::{self, ChoiceFn, Daemon, DaemonStrategy, RunOptions, StopReason};
use crate::error::Error;
use crate::protocol::{Configuration, NodeId, Params};
use crate::theorem::{self, MilestoneMode};

use report::{CheckReport, PropertyEntry, ProveReport, SweepReport};
use trace_io::{parse_trace, write_header, write_record, TraceHeader};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stabring",
    version,
    about = "Simulate and model-check the K-state self-stabilizing token ring"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the protocol under a central daemon and emit a JSONL trace
    Simulate(SimulateArgs),
    /// Model-check convergence, closure, non-termination, node-0 liveness
    Check(CheckArgs),
    /// Check convergence over a range of ring sizes
    Sweep(SweepArgs),
    /// Check the stabilization argument's milestones
    Prove(ProveArgs),
    /// Validate a JSONL trace against the protocol
    Replay(ReplayArgs),
}

/// Ring size. `--n` is the highest node index; `--nodes` is the node count.
#[derive(Debug, Clone, Args)]
pub struct RingArgs {
    /// Highest node index (the ring has n+1 nodes)
    #[arg(long, conflicts_with = "nodes", required_unless_present = "nodes")]
    pub n: Option<usize>,
    /// Number of nodes on the ring (alias for n+1)
    #[arg(long)]
    pub nodes: Option<usize>,
    /// States per node
    #[arg(long)]
    pub k: u32,
}

impl RingArgs {
    fn params(&self) -> Result<Params, Failure> {
        let n = match (self.n, self.nodes) {
            (Some(n), _) => n,
            (None, Some(nodes)) => nodes
                .checked_sub(1)
                .ok_or_else(|| Failure::usage("--nodes must be at least 2".to_string()))?,
            (None, None) => return Err(Failure::usage("one of --n or --nodes is required".into())),
        };
        let params = Params::new(n, self.k).map_err(Failure::from_error)?;
        eprintln!(
            "ring: n={} (highest node index), {} nodes (--nodes {}), k={}",
            params.n(),
            params.nodes(),
            params.nodes(),
            params.k()
        );
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    /// Comma-separated states, "random", or "all-equal:<v>"
    #[arg(long, default_value = "random")]
    pub init: String,
    /// round-robin | random | adversarial | scripted:<n1,n2,...> | interactive
    #[arg(long, default_value = "round-robin")]
    pub daemon: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to 10 * k^(n+1)
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub stop_on_legit: bool,
    /// Output path, or "stdout"
    #[arg(long, default_value = "stdout")]
    pub trace_out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropertyArg {
    All,
    Convergence,
    Closure,
    NoTermination,
    #[value(name = "node0-liveness")]
    Node0Liveness,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub property: PropertyArg,
    #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
    pub state_limit: u64,
    #[arg(long, default_value = "stdout")]
    pub report_out: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write any convergence counterexample (stem then cycle) as a JSONL trace
    #[arg(long)]
    pub lasso_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n_from: usize,
    #[arg(long)]
    pub n_to: usize,
    /// n-1 | n | n+1 | list:<k1,k2,...>
    #[arg(long, default_value = "n")]
    pub k_rule: String,
    #[arg(long, value_enum, default_value = "text")]
    pub format: SweepFormat,
    #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
    pub state_limit: u64,
    /// Leave out wall-clock times, for byte-stable output
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProveMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Args)]
pub struct ProveArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: ProveMode,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
    /// Steps per sampled run; defaults to 10 * k^(n+1)
    #[arg(long)]
    pub depth: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
    pub state_limit: u64,
    #[arg(long, default_value = "stdout")]
    pub report_out: String,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// JSONL trace path, or "-" for standard input
    #[arg(long)]
    pub trace_in: String,
}

/// Message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: String) -> Self {
        Failure {
            code: EXIT_USAGE,
            message,
        }
    }

    fn violation(message: String) -> Self {
        Failure {
            code: EXIT_VIOLATION,
            message,
        }
    }

    fn io(context: &str, e: io::Error) -> Self {
        Failure::usage(format!("{context}: {e}"))
    }

    fn from_error(e: Error) -> Self {
        match e {
            Error::IllegalSchedule { .. } | Error::IllegalMove { .. } => {
                Failure::violation(e.to_string())
            }
            _ => Failure::usage(e.to_string()),
        }
    }
}

/// Parses the process arguments and runs the command; returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Prove(a) => cmd_prove(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn open_output(target: &str) -> Result<Box<dyn Write>, Failure> {
    if target == "stdout" || target == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let file = File::create(target).map_err(|e| Failure::io(target, e))?;
        Ok(Box::new(BufWriter::new(file)))
    }
}

fn emit(target: &str, body: &str) -> Result<(), Failure> {
    let mut out = open_output(target)?;
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(target, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_init(params: &Params, spec: &str, seed: u64) -> Result<Configuration, Failure> {
    if spec == "random" {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        return Ok(daemon::random_configuration(params, &mut rng));
    }
    if let Some(v) = spec.strip_prefix("all-equal:") {
        let v: u32 = v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("bad --init value {spec:?}")))?;
        return Configuration::uniform(params, v).map_err(Failure::from_error);
    }
    let states = spec
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure::usage(format!("bad --init list {spec:?}")))?;
    Configuration::new(params, states).map_err(Failure::from_error)
}

pub fn parse_strategy(spec: &str, seed: u64) -> Result<DaemonStrategy, Failure> {
    let strategy = match spec {
        "round-robin" => DaemonStrategy::RoundRobin,
        "random" => DaemonStrategy::Random { seed },
        "adversarial" => DaemonStrategy::Adversarial,
        "interactive" => DaemonStrategy::Interactive(terminal_chooser()),
        other => {
            let list = other
                .strip_prefix("scripted:")
                .ok_or_else(|| Failure::usage(format!("unknown daemon {other:?}")))?;
            let nodes = list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<usize>().map(NodeId))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::usage(format!("bad scripted node list {list:?}")))?;
            DaemonStrategy::Scripted(nodes)
        }
    };
    Ok(strategy)
}

/// Prompts on standard error, reads node ids from standard input. Input that
/// is not a privileged node id is re-prompted; EOF stops the run.
fn terminal_chooser() -> ChoiceFn {
    let stdin = io::stdin();
    Box::new(move |cfg, privs| {
        let listed: Vec<String> = privs.iter().map(|p| p.to_string()).collect();
        loop {
            eprint!(
                "configuration {cfg}, privileged {{{}}}; fire node: ",
                listed.join(",")
            );
            let mut line = String::new();
            match stdin.read_line(&mut line) {
                Ok(0) | Err(_) => {
                    eprintln!();
                    return None;
                }
                Ok(_) => {}
            }
            match line.trim().parse::<usize>() {
                Ok(id) if privs.contains(&NodeId(id)) => return Some(NodeId(id)),
                _ => eprintln!("not a privileged node: {:?}", line.trim()),
            }
        }
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<i32, Failure> {
    let params = args.ring.params()?;
    let initial = parse_init(&params, &args.init, args.seed)?;
    let strategy = parse_strategy(&args.daemon, args.seed)?;
    let header = TraceHeader::new(&params, strategy.label(), Some(args.seed));
    let mut daemon = Daemon::new(&params, strategy).map_err(Failure::from_error)?;
    let options = RunOptions {
        max_steps: args
            .max_steps
            .unwrap_or_else(|| daemon::default_max_steps(&params)),
        stop_on_legitimate: args.stop_on_legit,
    };

    let mut out = open_output(&args.trace_out)?;
    write_header(&mut out, &header).map_err(|e| Failure::io(&args.trace_out, e))?;
    let result = daemon::execute(&params, &initial, &mut daemon, options, |step| {
        write_record(&mut out, step).map_err(|e| Error::InvalidConfiguration(e.to_string()))
    });
    out.flush().map_err(|e| Failure::io(&args.trace_out, e))?;

    let summary = result.map_err(Failure::from_error)?;
    eprintln!(
        "final configuration {} after {} steps: {}",
        summary.final_configuration, summary.steps, summary.reason
    );
    if summary.reason == StopReason::MaxSteps && args.stop_on_legit {
        eprintln!("note: step limit reached before a legitimate configuration");
    }
    Ok(EXIT_OK)
}

fn requested(p: PropertyArg) -> Vec<Property> {
    match p {
        PropertyArg::All => Property::ALL.to_vec(),
        PropertyArg::Convergence => vec![Property::Convergence],
        PropertyArg::Closure => vec![Property::Closure],
        PropertyArg::NoTermination => vec![Property::NoTermination],
        PropertyArg::Node0Liveness => vec![Property::Node0Liveness],
    }
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32, Failure> {
    let params = args.ring.params()?;
    let checker = ModelChecker::new(&params, args.state_limit).map_err(Failure::from_error)?;
    let mut entries = Vec::new();
    for property in requested(args.property) {
        if property != Property::Convergence {
            entries.push(PropertyEntry::from_report(&checker.check(property)));
            continue;
        }
        let mut entry = PropertyEntry::from_report(&checker.check(property));
        match checker.check_convergence() {
            Verdict::Converges { worst_case_steps } => {
                entry.verdict = Some("converges");
                entry.worst_case_steps = Some(worst_case_steps);
                entry.worst_case_configuration = checker
                    .step_table()
                    .maximizing_configuration()
                    .map(|c| c.states().to_vec());
            }
            Verdict::Diverges { lasso } => {
                entry.verdict = Some("diverges");
                entry.lasso = Some((&lasso).into());
                if let Some(path) = &args.lasso_out {
                    write_lasso(path, &params, &lasso)?;
                }
            }
        }
        entries.push(entry);
    }
    let report = CheckReport::new(&params, entries);
    let body = match args.format {
        Format::Json => to_json(&report),
        Format::Text => report.to_text(),
    };
    emit(&args.report_out, &body)?;
    Ok(if report.all_hold {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

fn write_lasso(path: &Path, params: &Params, lasso: &checker::Lasso) -> Result<(), Failure> {
    let display = path.display().to_string();
    let mut out = open_output(&display)?;
    let header = TraceHeader::new(params, "lasso".into(), None);
    write_header(&mut out, &header)
        .and_then(|_| {
            lasso
                .stem
                .iter()
                .chain(&lasso.cycle)
                .try_for_each(|s| write_record(&mut out, s))
        })
        .and_then(|_| out.flush())
        .map_err(|e| Failure::io(&display, e))
}

pub fn parse_k_rule(spec: &str) -> Result<KRule, Failure> {
    match spec {
        "n-1" => Ok(KRule::BelowN),
        "n" => Ok(KRule::EqualN),
        "n+1" => Ok(KRule::AboveN),
        other => {
            let list = other
                .strip_prefix("list:")
                .ok_or_else(|| Failure::usage(format!("unknown k rule {other:?}")))?;
            list.split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map(KRule::List)
                .map_err(|_| Failure::usage(format!("bad k list {list:?}")))
        }
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32, Failure> {
    if args.n_from < 1 || args.n_from > args.n_to {
        return Err(Failure::usage(format!(
            "need 1 <= --n-from <= --n-to, got {}..{}",
            args.n_from, args.n_to
        )));
    }
    let rule = parse_k_rule(&args.k_rule)?;
    let rows = checker::sweep(args.n_from..=args.n_to, &rule, args.state_limit);
    let report = SweepReport::new(&rows, !args.no_timing);
    let body = match args.format {
        SweepFormat::Json => to_json(&report),
        SweepFormat::Csv => report.to_csv(),
        SweepFormat::Text => report.to_text(),
    };
    emit("stdout", &body)?;
    let unexpected = report
        .rows
        .iter()
        .any(|r| r.verdict == "diverges" && r.k >= r.n as u64);
    Ok(if unexpected { EXIT_VIOLATION } else { EXIT_OK })
}

pub fn cmd_prove(args: &ProveArgs) -> Result<i32, Failure> {
    let params = args.ring.params()?;
    let mode = match args.mode {
        ProveMode::Exhaustive => MilestoneMode::Exhaustive,
        ProveMode::Sampled => MilestoneMode::Sampled {
            seed: args.seed,
            count: args.count,
            depth: args
                .depth
                .unwrap_or_else(|| daemon::default_max_steps(&params)),
        },
    };
    let report = theorem::check_theorem_milestones(&params, mode, args.state_limit)
        .map_err(Failure::from_error)?;
    let doc = ProveReport::new(&report);
    let body = match args.format {
        Format::Json => to_json(&doc),
        Format::Text => doc.to_text(),
    };
    emit(&args.report_out, &body)?;
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<i32, Failure> {
    let reader: Box<dyn BufRead> = if args.trace_in == "-" {
        Box::new(BufReader::new(io::stdin()))
    } else {
        let file = File::open(&args.trace_in).map_err(|e| Failure::io(&args.trace_in, e))?;
        Box::new(BufReader::new(file))
    };
    let parsed = parse_trace(reader).map_err(|e| Failure::usage(e.to_string()))?;
    let params = Params::new(parsed.header.n, parsed.header.k)
        .map_err(|e| Failure::usage(format!("line 1: {e}")))?;

    let mut steps = Vec::with_capacity(parsed.records.len());
    for (i, rec) in parsed.records.iter().enumerate() {
        let step = rec.to_step(&params).map_err(|e| {
            Failure::violation(format!(
                "divergence at step {i} (line {}): {e}",
                parsed.lines[i]
            ))
        })?;
        steps.push(step);
    }
    let verdict = daemon::replay_steps(&params, &steps);
    match verdict.divergence {
        None => {
            eprintln!(
                "valid: {} steps replayed for {params}",
                verdict.steps_checked
            );
            Ok(EXIT_OK)
        }
        Some(d) => Err(Failure::violation(format!(
            "divergence at step {} (line {}): {}",
            d.step, parsed.lines[d.step], d.reason
        ))),
    }
}
