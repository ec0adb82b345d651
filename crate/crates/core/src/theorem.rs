//! Mechanical checks of the stabilization argument's intermediate steps.
//!
//! Three milestones are probed:
//!
//! * **three-share**: between two consecutive firings of node 0 (the first
//!   one moving `x[0]` from `b` to `b+1`), node `n` must adopt `b+1` by
//!   copying it from node `n-1`, and right after that copy nodes `n-1`, `n`
//!   and `0` all hold `b+1`.
//! * **absent-value**: at that moment, when `k >= n`, some value is held by
//!   no node (pigeonhole over the remaining `n-2` nodes).
//! * **sweep**: once node 0 holds a value `a` that no other node holds, the
//!   next firing of node 0 happens from the all-`a` configuration.
//!
//! The `probe_*` functions work on recorded traces. [`check_theorem_milestones`]
//! runs the same checks online, either over every schedule (a product of
//! configuration and probe phase) or over seeded random runs.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::daemon::{default_max_steps, random_configuration, replay, Trace, TraceStep};
use crate::error::{Error, Result};
use crate::protocol::{
    self, decode_into, encode_raw, fire_raw, privileged_into, Configuration, NodeId, Params,
};

/// Violations kept verbatim in an aggregate report; the rest are only counted.
pub const MAX_RECORDED_VIOLATIONS: usize = 16;

/// Product states per configuration (three phase bits).
const PHASES: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeEventKind {
    Node0FirstFire,
    NodeNAdopts,
    Node0SecondFire,
    AbsentValueObserved,
    UniqueValueAtNode0,
    SweepComplete,
}

impl ProbeEventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeEventKind::Node0FirstFire => "node0-first-fire",
            ProbeEventKind::NodeNAdopts => "nodeN-adopts",
            ProbeEventKind::Node0SecondFire => "node0-second-fire",
            ProbeEventKind::AbsentValueObserved => "absent-value-observed",
            ProbeEventKind::UniqueValueAtNode0 => "unique-value-at-node0",
            ProbeEventKind::SweepComplete => "sweep-complete",
        }
    }
}

/// `value` is `b` for the first firing, `b+1` for adoption and the second
/// firing, and `a` for the absent-value and sweep events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeEvent {
    pub kind: ProbeEventKind,
    pub step_index: usize,
    pub value: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Milestone {
    ThreeShare,
    AbsentValue,
    Sweep,
}

impl Milestone {
    pub fn as_str(self) -> &'static str {
        match self {
            Milestone::ThreeShare => "three-share",
            Milestone::AbsentValue => "absent-value",
            Milestone::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Milestone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub milestone: Milestone,
    pub expected: String,
    pub step_index: usize,
}

/// Result of probing one trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReport {
    pub trace_len: usize,
    /// False when the probe's precondition (n > 1, and k >= n for the
    /// absent-value probe) does not hold; no claim is made then.
    pub applicable: bool,
    pub note: Option<String>,
    pub events: Vec<ProbeEvent>,
    pub violations: Vec<Violation>,
    /// Histories the argument does not describe (only possible with k = 1,
    /// where firing node 0 leaves its value unchanged).
    pub outside_pattern: usize,
    /// Armed sweep probes the trace ended before resolving.
    pub inconclusive: usize,
}

impl ProbeReport {
    fn new(trace: &Trace) -> Self {
        ProbeReport {
            trace_len: trace.steps.len(),
            applicable: true,
            note: None,
            events: Vec::new(),
            violations: Vec::new(),
            outside_pattern: 0,
            inconclusive: 0,
        }
    }

    fn not_applicable(trace: &Trace, note: String) -> Self {
        ProbeReport {
            applicable: false,
            note: Some(note),
            ..Self::new(trace)
        }
    }

    fn event(&mut self, kind: ProbeEventKind, step_index: usize, value: u32) {
        self.events.push(ProbeEvent {
            kind,
            step_index,
            value,
        });
    }

    fn violation(&mut self, milestone: Milestone, step_index: usize, expected: String) {
        self.violations.push(Violation {
            milestone,
            expected,
            step_index,
        });
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn validated(trace: &Trace) -> Result<()> {
    match replay(trace).divergence {
        None => Ok(()),
        Some(d) => Err(Error::InvalidTrace {
            step: d.step,
            reason: d.reason,
        }),
    }
}

/// Step at which node `n` adopted `b+1` between two node-0 firings.
struct ShareMoment {
    step: usize,
    value: u32,
}

fn three_share_scan(trace: &Trace, report: &mut ProbeReport) -> Vec<ShareMoment> {
    let n = trace.params.n();
    let firings: Vec<usize> = trace
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.fired == NodeId::ZERO)
        .map(|(t, _)| t)
        .collect();
    let mut moments = Vec::new();
    for pair in firings.windows(2) {
        let (first, second) = (pair[0], pair[1]);
        let b = trace.steps[first].before.states()[0];
        let raised = trace.steps[first].after.states()[0];
        if raised == b || trace.steps[first].after.states()[n] == raised {
            report.outside_pattern += 1;
            continue;
        }
        report.event(ProbeEventKind::Node0FirstFire, first, b);
        let adoption = (first + 1..second).find(|&t| trace.steps[t].after.states()[n] == raised);
        let Some(s) = adoption else {
            report.violation(
                Milestone::ThreeShare,
                second,
                format!("node {n} adopts {raised} before node 0 fires again"),
            );
            report.event(ProbeEventKind::Node0SecondFire, second, raised);
            continue;
        };
        report.event(ProbeEventKind::NodeNAdopts, s, raised);
        let step = &trace.steps[s];
        let x = step.after.states();
        if step.fired.index() != n || x[n - 1] != raised || x[0] != raised {
            report.violation(
                Milestone::ThreeShare,
                s,
                format!(
                    "node {n} copies {raised} from node {} while node 0 holds it, got {} firing node {}",
                    n - 1,
                    step.after,
                    step.fired
                ),
            );
        } else {
            moments.push(ShareMoment {
                step: s,
                value: raised,
            });
        }
        report.event(ProbeEventKind::Node0SecondFire, second, raised);
    }
    moments
}

/// Checks that node `n` picks up node 0's new value `b+1` by a copy from node
/// `n-1`, leaving three distinct nodes holding `b+1`, before node 0 fires
/// again. Every consecutive pair of node-0 firings is probed.
pub fn probe_three_share(trace: &Trace) -> Result<ProbeReport> {
    validated(trace)?;
    if trace.params.n() < 2 {
        return Ok(ProbeReport::not_applicable(
            trace,
            "requires n > 1 (three distinct nodes)".into(),
        ));
    }
    let mut report = ProbeReport::new(trace);
    three_share_scan(trace, &mut report);
    Ok(report)
}

/// At every three-share moment, with `k >= n`, some value must be absent
/// from the ring, and `b+1` is never among the absent values.
pub fn probe_absent_value(trace: &Trace) -> Result<ProbeReport> {
    validated(trace)?;
    let params = trace.params;
    if params.n() < 2 {
        return Ok(ProbeReport::not_applicable(trace, "requires n > 1".into()));
    }
    if (params.k() as usize) < params.n() {
        return Ok(ProbeReport::not_applicable(
            trace,
            format!(
                "precondition not met: k={} < n={}, no claim is made",
                params.k(),
                params.n()
            ),
        ));
    }
    let mut scratch = ProbeReport::new(trace);
    let moments = three_share_scan(trace, &mut scratch);
    let mut report = ProbeReport::new(trace);
    for m in moments {
        let cfg = &trace.steps[m.step].after;
        let absent = protocol::absent_values(&params, cfg);
        match absent.first() {
            Some(&a) if !absent.contains(&m.value) => {
                report.event(ProbeEventKind::AbsentValueObserved, m.step, a)
            }
            _ => report.violation(
                Milestone::AbsentValue,
                m.step,
                format!("some value other than {} absent from {cfg}", m.value),
            ),
        }
    }
    Ok(report)
}

/// Once a step leaves node 0 as the only holder of its value `a`, node 0's
/// next firing must start from the all-`a` configuration.
pub fn probe_sweep(trace: &Trace) -> Result<ProbeReport> {
    validated(trace)?;
    let mut report = ProbeReport::new(trace);
    let mut armed: Option<u32> = None;
    for (t, step) in trace.steps.iter().enumerate() {
        if step.fired == NodeId::ZERO {
            if let Some(a) = armed.take() {
                if step.before.states().iter().all(|&v| v == a) {
                    report.event(ProbeEventKind::SweepComplete, t, a);
                } else {
                    report.violation(
                        Milestone::Sweep,
                        t,
                        format!("all nodes hold {a} when node 0 fires, got {}", step.before),
                    );
                }
            }
        }
        if armed.is_none() && unique_at_node0(step.after.states()) {
            let a = step.after.states()[0];
            report.event(ProbeEventKind::UniqueValueAtNode0, t, a);
            armed = Some(a);
        }
    }
    if armed.is_some() {
        report.inconclusive += 1;
    }
    Ok(report)
}

#[inline]
fn unique_at_node0(states: &[u32]) -> bool {
    !states[1..].contains(&states[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilestoneMode {
    /// Every schedule from every configuration.
    Exhaustive,
    /// `count` random-daemon runs of `depth` steps from random configurations.
    Sampled { seed: u64, count: u64, depth: u64 },
}

impl MilestoneMode {
    /// Sampled mode with the default depth `10 * k^(n+1)`.
    pub fn sampled(params: &Params, seed: u64, count: u64) -> Self {
        MilestoneMode::Sampled {
            seed,
            count,
            depth: default_max_steps(params),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub checks: u64,
    pub violations: u64,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
        }
    }

    fn merge(&mut self, other: Tally) {
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

/// A violated milestone with the move that exposed it and, in exhaustive
/// mode, a shortest schedule reaching that move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationRecord {
    pub milestone: Milestone,
    pub expected: String,
    pub before: Configuration,
    pub fired: NodeId,
    pub after: Configuration,
    pub run: Option<u64>,
    pub step_index: Option<u64>,
    pub witness: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilestoneReport {
    pub params: Params,
    pub mode: MilestoneMode,
    /// Product states in exhaustive mode, runs in sampled mode.
    pub explored: u64,
    pub transitions: u64,
    pub three_share: Tally,
    pub absent_value: Tally,
    pub absent_value_applicable: bool,
    pub sweep: Tally,
    pub sweeps_armed: u64,
    pub sweeps_inconclusive: u64,
    pub outside_pattern: u64,
    pub violations: Vec<ViolationRecord>,
}

impl MilestoneReport {
    pub fn total_violations(&self) -> u64 {
        self.three_share.violations + self.absent_value.violations + self.sweep.violations
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }
}

/// Probe automaton state carried alongside a configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Phase {
    /// Node 0 has fired at least once.
    fired: bool,
    /// Node `n` has picked up node 0's current value since node 0 last fired.
    adopted: bool,
    /// Node 0 held a value no other node held; waiting for its next firing.
    armed: bool,
}

impl Phase {
    fn bits(self) -> u64 {
        u64::from(self.fired) | u64::from(self.adopted) << 1 | u64::from(self.armed) << 2
    }

    fn from_bits(bits: u64) -> Self {
        Phase {
            fired: bits & 1 != 0,
            adopted: bits & 2 != 0,
            armed: bits & 4 != 0,
        }
    }
}

/// What a single move did to the probes.
#[derive(Debug, Default)]
struct Outcome {
    checks: Vec<(Milestone, bool, String)>,
    outside_pattern: bool,
    armed: bool,
}

/// Online version of the three probes: advances the phase over one move.
fn advance(
    phase: Phase,
    before: &[u32],
    node: usize,
    after: &[u32],
    check_absent: bool,
    k: u32,
    out: &mut Outcome,
) -> Phase {
    let n = before.len() - 1;
    let mut next = phase;
    out.checks.clear();
    out.outside_pattern = false;
    out.armed = false;

    if node == 0 {
        if phase.fired && !phase.adopted {
            out.checks.push((
                Milestone::ThreeShare,
                false,
                format!("node {n} adopts {} before node 0 fires again", before[0]),
            ));
        }
        if phase.armed {
            let a = before[0];
            let ok = before.iter().all(|&v| v == a);
            out.checks.push((
                Milestone::Sweep,
                ok,
                format!("all nodes hold {a} when node 0 fires"),
            ));
        }
        next = Phase {
            fired: true,
            adopted: false,
            armed: false,
        };
        if after[n] == after[0] {
            // Only when k = 1: node n already "holds" the new value.
            out.outside_pattern = true;
            next.adopted = true;
        }
    } else if phase.fired && !phase.adopted && after[n] == after[0] {
        next.adopted = true;
        if node != n {
            out.outside_pattern = true;
        } else {
            let value = after[0];
            let ok = after[n - 1] == value;
            out.checks.push((
                Milestone::ThreeShare,
                ok,
                format!("nodes {}, {n} and 0 all hold {value}", n - 1),
            ));
            if check_absent {
                let ok = distinct_values(after) < k as usize;
                out.checks.push((
                    Milestone::AbsentValue,
                    ok,
                    "some value held by no node".into(),
                ));
            }
        }
    }

    if !next.armed && unique_at_node0(after) {
        next.armed = true;
        out.armed = true;
    }
    next
}

fn distinct_values(states: &[u32]) -> usize {
    states
        .iter()
        .enumerate()
        .filter(|(i, v)| !states[..*i].contains(v))
        .count()
}

#[derive(Debug, Default)]
struct Totals {
    three_share: Tally,
    absent_value: Tally,
    sweep: Tally,
    armed: u64,
    outside_pattern: u64,
    transitions: u64,
}

impl Totals {
    fn absorb(&mut self, out: &Outcome) {
        self.transitions += 1;
        for (milestone, ok, _) in &out.checks {
            match milestone {
                Milestone::ThreeShare => self.three_share.record(*ok),
                Milestone::AbsentValue => self.absent_value.record(*ok),
                Milestone::Sweep => self.sweep.record(*ok),
            }
        }
        self.armed += u64::from(out.armed);
        self.outside_pattern += u64::from(out.outside_pattern);
    }

    fn merge(&mut self, other: &Totals) {
        self.three_share.merge(other.three_share);
        self.absent_value.merge(other.absent_value);
        self.sweep.merge(other.sweep);
        self.armed += other.armed;
        self.outside_pattern += other.outside_pattern;
        self.transitions += other.transitions;
    }
}

/// Runs every milestone check either exhaustively or by sampling.
///
/// Exhaustive mode needs `8 * k^(n+1)` product states within `state_limit`.
pub fn check_theorem_milestones(
    params: &Params,
    mode: MilestoneMode,
    state_limit: u64,
) -> Result<MilestoneReport> {
    match mode {
        MilestoneMode::Exhaustive => exhaustive(params, state_limit),
        MilestoneMode::Sampled { seed, count, depth } => Ok(sampled(params, seed, count, depth)),
    }
}

fn check_absent_applies(params: &Params) -> bool {
    params.n() >= 2 && params.k() as usize >= params.n()
}

fn exhaustive(params: &Params, state_limit: u64) -> Result<MilestoneReport> {
    let configs = params.state_space();
    let product = configs
        .checked_mul(PHASES)
        .filter(|&p| p <= state_limit.min(u32::MAX as u64));
    let Some(product) = product else {
        return Err(Error::StateSpaceTooLarge {
            size: configs.checked_mul(PHASES),
            limit: state_limit,
        });
    };
    let k = params.k();
    let nodes = params.nodes();
    let check_absent = check_absent_applies(params);
    let encode_product = |cfg: u64, phase: Phase| cfg * PHASES + phase.bits();

    const ROOT: u32 = u32::MAX;
    // Parent product state and fired node, for witness reconstruction.
    let mut parent = vec![(ROOT, 0u32); product as usize];
    let mut seen = vec![false; product as usize];
    let mut queue = VecDeque::new();
    for cfg in 0..configs {
        let id = encode_product(cfg, Phase::default());
        seen[id as usize] = true;
        queue.push_back(id);
    }

    let mut totals = Totals::default();
    let mut records = Vec::new();
    let mut before = vec![0u32; nodes];
    let mut after = vec![0u32; nodes];
    let mut privs = Vec::with_capacity(nodes);
    let mut out = Outcome::default();
    let mut explored = 0u64;

    while let Some(id) = queue.pop_front() {
        explored += 1;
        let phase = Phase::from_bits(id % PHASES);
        decode_into(id / PHASES, k, &mut before);
        privileged_into(&before, &mut privs);
        for &node in &privs {
            after.copy_from_slice(&before);
            fire_raw(&mut after, k, node);
            let next_phase = advance(phase, &before, node, &after, check_absent, k, &mut out);
            totals.absorb(&out);
            for (milestone, ok, expected) in &out.checks {
                if !ok && records.len() < MAX_RECORDED_VIOLATIONS {
                    let mut witness = witness_path(params, &parent, id);
                    let step = TraceStep {
                        step_index: witness.len(),
                        fired: NodeId(node),
                        before: Configuration::from_states_unchecked(before.clone().into()),
                        after: Configuration::from_states_unchecked(after.clone().into()),
                    };
                    witness.push(step.clone());
                    records.push(ViolationRecord {
                        milestone: *milestone,
                        expected: expected.clone(),
                        before: step.before,
                        fired: step.fired,
                        after: step.after,
                        run: None,
                        step_index: None,
                        witness,
                    });
                }
            }
            let succ = encode_product(encode_raw(&after, k), next_phase);
            if !seen[succ as usize] {
                seen[succ as usize] = true;
                parent[succ as usize] = (id as u32, node as u32);
                queue.push_back(succ);
            }
        }
    }

    Ok(MilestoneReport {
        params: *params,
        mode: MilestoneMode::Exhaustive,
        explored,
        transitions: totals.transitions,
        three_share: totals.three_share,
        absent_value: totals.absent_value,
        absent_value_applicable: check_absent,
        sweep: totals.sweep,
        sweeps_armed: totals.armed,
        // Runs never terminate, so no armed probe is left hanging.
        sweeps_inconclusive: 0,
        outside_pattern: totals.outside_pattern,
        violations: records,
    })
}

fn witness_path(params: &Params, parent: &[(u32, u32)], mut id: u64) -> Vec<TraceStep> {
    let mut rev = Vec::new();
    while parent[id as usize].0 != u32::MAX {
        let (prev, node) = parent[id as usize];
        let before = protocol::decode(params, u64::from(prev) / PHASES).expect("in range");
        let after = protocol::decode(params, id / PHASES).expect("in range");
        rev.push((NodeId(node as usize), before, after));
        id = u64::from(prev);
    }
    rev.into_iter()
        .rev()
        .enumerate()
        .map(|(i, (fired, before, after))| TraceStep {
            step_index: i,
            fired,
            before,
            after,
        })
        .collect()
}

struct RunResult {
    totals: Totals,
    inconclusive: bool,
    records: Vec<ViolationRecord>,
}

fn sampled(params: &Params, seed: u64, count: u64, depth: u64) -> MilestoneReport {
    let results: Vec<RunResult> = (0..count)
        .into_par_iter()
        .map(|run| sample_run(params, seed, run, depth))
        .collect();

    let mut totals = Totals::default();
    let mut inconclusive = 0;
    let mut records = Vec::new();
    for r in results {
        totals.merge(&r.totals);
        inconclusive += u64::from(r.inconclusive);
        for rec in r.records {
            if records.len() < MAX_RECORDED_VIOLATIONS {
                records.push(rec);
            }
        }
    }
    MilestoneReport {
        params: *params,
        mode: MilestoneMode::Sampled { seed, count, depth },
        explored: count,
        transitions: totals.transitions,
        three_share: totals.three_share,
        absent_value: totals.absent_value,
        absent_value_applicable: check_absent_applies(params),
        sweep: totals.sweep,
        sweeps_armed: totals.armed,
        sweeps_inconclusive: inconclusive,
        outside_pattern: totals.outside_pattern,
        violations: records,
    }
}

/// Generator for run `run` of a sampled batch: one ChaCha8 stream per run.
pub fn sample_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

fn sample_run(params: &Params, seed: u64, run: u64, depth: u64) -> RunResult {
    let k = params.k();
    let check_absent = check_absent_applies(params);
    let mut rng = sample_rng(seed, run);
    let mut states = random_configuration(params, &mut rng).states().to_vec();
    let mut before = states.clone();
    let mut privs = Vec::with_capacity(states.len());
    let mut phase = Phase::default();
    let mut out = Outcome::default();
    let mut totals = Totals::default();
    let mut records = Vec::new();

    for step in 0..depth {
        privileged_into(&states, &mut privs);
        let node = privs[rng.random_range(0..privs.len() as u32) as usize];
        before.copy_from_slice(&states);
        fire_raw(&mut states, k, node);
        phase = advance(phase, &before, node, &states, check_absent, k, &mut out);
        totals.absorb(&out);
        for (milestone, ok, expected) in &out.checks {
            if !ok && records.len() < MAX_RECORDED_VIOLATIONS {
                records.push(ViolationRecord {
                    milestone: *milestone,
                    expected: expected.clone(),
                    before: Configuration::from_states_unchecked(before.clone().into()),
                    fired: NodeId(node),
                    after: Configuration::from_states_unchecked(states.clone().into()),
                    run: Some(run),
                    step_index: Some(step),
                    witness: Vec::new(),
                });
            }
        }
    }
    RunResult {
        totals,
        inconclusive: phase.armed,
        records,
    }
}
