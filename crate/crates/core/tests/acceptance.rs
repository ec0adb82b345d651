//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.
//!
//! Runs without the libtest harness: `cargo test --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stabring::checker::{ModelChecker, Property, Verdict, DEFAULT_STATE_LIMIT};
use stabring::daemon::{self, Daemon, DaemonStrategy, RunOptions, StopReason};
use stabring::protocol;
use stabring::Params;

/// Per-instance budget for criterion 1.
const THEOREM_INSTANCE_BUDGET: Duration = Duration::from_secs(10);
/// Total budget for criterion 7.
const FRONTIER_BUDGET: Duration = Duration::from_secs(10);
const RANDOM_RUNS: u64 = 10_000;
const ROUND_TRIP_INSTANCES: u64 = 100;

const THEOREM_INSTANCES: [(usize, u32); 4] = [(2, 2), (3, 3), (4, 4), (5, 5)];
const CLASSICAL_INSTANCES: [(usize, u32); 3] = [(2, 3), (3, 4), (4, 5)];
const FRONTIER_INSTANCES: [(usize, u32); 3] = [(3, 2), (4, 2), (4, 3)];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(n: usize, k: u32) -> Params {
    Params::new(n, k).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stabring"))
}

fn run_bin(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("binary runs")
}

fn grid() -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    for n in 2..=5 {
        for k in 2..=6u32 {
            if params(n, k).state_space() <= DEFAULT_STATE_LIMIT {
                out.push((n, k));
            }
        }
    }
    out
}

fn converges_within(n: usize, k: u32, budget: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let checker =
        ModelChecker::new(&params(n, k), DEFAULT_STATE_LIMIT).map_err(|e| e.to_string())?;
    let verdict = checker.check_convergence();
    let elapsed = start.elapsed();
    match verdict {
        Verdict::Converges { worst_case_steps } => match budget {
            Some(b) if elapsed > b => Err(format!("({n},{k}) took {elapsed:?}")),
            _ => Ok(format!(
                "({n},{k}) worst={worst_case_steps} in {elapsed:.2?}"
            )),
        },
        Verdict::Diverges { .. } => Err(format!("({n},{k}) diverges")),
    }
}

fn criterion_1() -> Outcome {
    let mut parts = Vec::new();
    for (n, k) in THEOREM_INSTANCES {
        parts.push(converges_within(n, k, Some(THEOREM_INSTANCE_BUDGET))?);
    }
    Ok(parts.join(", "))
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    for (n, k) in CLASSICAL_INSTANCES {
        parts.push(converges_within(n, k, None)?);
    }
    Ok(parts.join(", "))
}

fn grid_property(property: Property) -> Outcome {
    let instances = grid();
    for &(n, k) in &instances {
        let p = params(n, k);
        let checker = ModelChecker::new(&p, DEFAULT_STATE_LIMIT).map_err(|e| e.to_string())?;
        let report = checker.check(property);
        if !report.holds {
            return Err(format!("({n},{k}): {:?}", report.counterexample));
        }
        if property == Property::Closure {
            // Independent of the checker: walk the legitimate set directly.
            for v in 0..checker.graph().len() {
                let cfg = checker.graph().configuration(v);
                if protocol::is_legitimate(&p, &cfg).is_none() {
                    continue;
                }
                let privs = protocol::privileged_set(&p, &cfg);
                if privs.len() != 1 {
                    return Err(format!("({n},{k}) {cfg} has {} privileged", privs.len()));
                }
                let next = protocol::fire(&p, &cfg, privs[0]).map_err(|e| e.to_string())?;
                if protocol::is_legitimate(&p, &next).is_none() {
                    return Err(format!("({n},{k}) {cfg} -> {next} leaves"));
                }
            }
        }
    }
    Ok(format!("{} instances, 0 counterexamples", instances.len()))
}

fn prove_violations(args: &[&str]) -> Result<u64, String> {
    let o = run_bin(args);
    if o.status.code() != Some(0) {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())?;
    doc["total_violations"]
        .as_u64()
        .ok_or_else(|| "report lacks total_violations".to_string())
}

fn criterion_6() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["prove", "--n", "2", "--k", "2", "--mode", "exhaustive"],
        &["prove", "--n", "3", "--k", "3", "--mode", "exhaustive"],
        &[
            "prove", "--n", "4", "--k", "4", "--mode", "sampled", "--count", "10000",
        ],
    ];
    let mut parts = Vec::new();
    for args in runs {
        let v = prove_violations(args)?;
        if v != 0 {
            return Err(format!("{args:?}: {v} violations"));
        }
        parts.push(format!("({},{}) {}", args[2], args[4], args[6]));
    }
    Ok(format!("0 violations: {}", parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let mut parts = Vec::new();
    for (n, k) in FRONTIER_INSTANCES {
        let (ns, ks) = (n.to_string(), k.to_string());
        let lasso_path = dir.path().join(format!("lasso_{n}_{k}.jsonl"));
        let o = run_bin(&[
            "check",
            "--n",
            &ns,
            "--k",
            &ks,
            "--property",
            "convergence",
            "--lasso-out",
            lasso_path.to_str().unwrap(),
        ]);
        let doc: serde_json::Value =
            serde_json::from_slice(&o.stdout).map_err(|e| format!("({n},{k}) report: {e}"))?;
        let entry = &doc["properties"][0];
        if entry["verdict"] == "converges" {
            parts.push(format!("({n},{k}) converges"));
            continue;
        }
        if !lasso_path.exists() {
            return Err(format!("({n},{k}) diverges but no lasso was written"));
        }
        let replay = run_bin(&["replay", "--trace-in", lasso_path.to_str().unwrap()]);
        if replay.status.code() != Some(0) {
            return Err(format!(
                "({n},{k}) lasso replay failed: {}",
                String::from_utf8_lossy(&replay.stderr)
            ));
        }
        let p = params(n, k);
        let cycle = entry["lasso"]["cycle"].as_array().ok_or("no cycle")?;
        for rec in cycle {
            let states: Vec<u32> =
                serde_json::from_value(rec["before"].clone()).map_err(|e| e.to_string())?;
            let cfg = protocol::Configuration::new(&p, states).map_err(|e| e.to_string())?;
            if protocol::is_legitimate(&p, &cfg).is_some() {
                return Err(format!("({n},{k}) cycle visits legitimate {cfg}"));
            }
        }
        parts.push(format!("({n},{k}) diverges, cycle {} replays", cycle.len()));
    }
    let elapsed = start.elapsed();
    if elapsed > FRONTIER_BUDGET {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} in {elapsed:.2?}", parts.join(", ")))
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    for (n, k) in THEOREM_INSTANCES.into_iter().chain(CLASSICAL_INSTANCES) {
        let p = params(n, k);
        let checker = ModelChecker::new(&p, DEFAULT_STATE_LIMIT).map_err(|e| e.to_string())?;
        let worst = checker.worst_case_steps().map_err(|e| e.to_string())?;

        let failures: Vec<String> = (0..RANDOM_RUNS)
            .into_par_iter()
            .filter_map(|run| {
                let mut rng = ChaCha8Rng::seed_from_u64(run);
                rng.set_stream(1);
                let initial = daemon::random_configuration(&p, &mut rng);
                let trace = daemon::run(
                    &p,
                    &initial,
                    DaemonStrategy::Random { seed: run },
                    Some(worst),
                    true,
                )
                .ok()?;
                let legit = protocol::is_legitimate(&p, trace.final_configuration()).is_some();
                (trace.terminated_reason != StopReason::ReachedLegitimate || !legit)
                    .then(|| format!("run {run} from {initial}"))
            })
            .collect();
        if let Some(f) = failures.first() {
            return Err(format!("({n},{k}) {} failures, e.g. {f}", failures.len()));
        }

        let table = Arc::new(checker.step_table().clone());
        let start = table.maximizing_configuration().ok_or("no maximizer")?;
        let mut adversary = Daemon::adversarial_with_table(table);
        let summary = daemon::execute(
            &p,
            &start,
            &mut adversary,
            RunOptions {
                max_steps: worst + 1,
                stop_on_legitimate: true,
            },
            |_| Ok(()),
        )
        .map_err(|e| e.to_string())?;
        if summary.steps != worst || summary.reason != StopReason::ReachedLegitimate {
            return Err(format!(
                "({n},{k}) adversary took {} steps ({:?}), worst is {worst}",
                summary.steps, summary.reason
            ));
        }
        parts.push(format!("({n},{k}) worst={worst}"));
    }
    Ok(format!(
        "{RANDOM_RUNS} random runs each; adversary exact: {}",
        parts.join(", ")
    ))
}

fn twice_identical(args: &[&str], dir: &Path, trace_flag: Option<&str>) -> Result<(), String> {
    let mut outputs = Vec::new();
    for i in 0..2 {
        let mut full: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let file = dir.join(format!("out_{i}"));
        if let Some(flag) = trace_flag {
            full.push(flag.into());
            full.push(file.to_str().unwrap().into());
        }
        let o = bin().args(&full).output().map_err(|e| e.to_string())?;
        let mut bytes = o.stdout;
        if trace_flag.is_some() {
            bytes.extend(std::fs::read(&file).map_err(|e| e.to_string())?);
        }
        outputs.push(bytes);
    }
    if outputs[0] != outputs[1] {
        return Err(format!("{args:?} differs between runs"));
    }
    Ok(())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let deterministic: [(&[&str], Option<&str>); 6] = [
        (&["check", "--n", "3", "--k", "3"], Some("--report-out")),
        (
            &["check", "--n", "4", "--k", "2", "--property", "convergence"],
            None,
        ),
        (
            &[
                "prove", "--n", "3", "--k", "3", "--mode", "sampled", "--seed", "7", "--count",
                "200",
            ],
            None,
        ),
        (
            &[
                "sweep",
                "--n-from",
                "2",
                "--n-to",
                "4",
                "--k-rule",
                "n",
                "--format",
                "json",
                "--no-timing",
            ],
            None,
        ),
        (
            &[
                "simulate", "--n", "4", "--k", "4", "--daemon", "random", "--seed", "42",
            ],
            Some("--trace-out"),
        ),
        (
            &[
                "simulate",
                "--n",
                "3",
                "--k",
                "5",
                "--daemon",
                "adversarial",
                "--seed",
                "9",
            ],
            None,
        ),
    ];
    for (args, flag) in deterministic {
        twice_identical(args, dir.path(), flag)?;
    }

    let daemons = ["round-robin", "random", "adversarial"];
    let failures: Vec<String> = (0..ROUND_TRIP_INSTANCES)
        .into_par_iter()
        .filter_map(|i| {
            let n = 1 + (i % 5) as usize;
            let k = 1 + ((i / 5) % 6) as u32;
            let daemon = daemons[(i % 3) as usize];
            let path = dir.path().join(format!("rt_{i}.jsonl"));
            let (ns, ks, seed) = (n.to_string(), k.to_string(), (1000 + i).to_string());
            let sim = run_bin(&[
                "simulate",
                "--n",
                &ns,
                "--k",
                &ks,
                "--daemon",
                daemon,
                "--seed",
                &seed,
                "--max-steps",
                "500",
                "--stop-on-legit",
                if i % 2 == 0 { "true" } else { "false" },
                "--trace-out",
                path.to_str().unwrap(),
            ]);
            if sim.status.code() != Some(0) {
                return Some(format!("simulate #{i} exited {:?}", sim.status.code()));
            }
            let rep = run_bin(&["replay", "--trace-in", path.to_str().unwrap()]);
            (rep.status.code() != Some(0)).then(|| format!("replay #{i} ({n},{k},{daemon})"))
        })
        .collect();
    if let Some(f) = failures.first() {
        return Err(format!("{} round-trip failures, e.g. {f}", failures.len()));
    }
    Ok(format!(
        "6 commands byte-identical; {ROUND_TRIP_INSTANCES} simulate->replay round trips"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 convergence, k = n", criterion_1),
        ("2 convergence, k > n", criterion_2),
        ("3 closure", || grid_property(Property::Closure)),
        ("4 non-termination", || {
            grid_property(Property::NoTermination)
        }),
        ("5 node-0 liveness", || {
            grid_property(Property::Node0Liveness)
        }),
        ("6 proof milestones", criterion_6),
        ("7 k < n frontier artifacts", criterion_7),
        ("8 oracle agreement", criterion_8),
        ("9 determinism and round trip", criterion_9),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(reason) => {
                println!("FAIL criterion {name}: {reason}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
