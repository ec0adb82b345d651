//! JSON report documents written by `check`, `sweep` and `prove`.
//!
//! These are the stable machine-readable contract; field order is fixed by
//! declaration order and optional fields are omitted when absent.

use std::fmt::Write as _;

use serde::Serialize;

use super::trace_io::{TraceRecord, VERSION};
use crate::checker::{Counterexample, Lasso, PropertyReport, SweepOutcome, SweepRow};
use crate::protocol::Params;
use crate::theorem::{MilestoneMode, MilestoneReport, Tally, ViolationRecord};

pub const TOOL: &str = "stabring";

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub n: usize,
    pub k: u32,
    pub nodes: usize,
    pub state_space: u64,
    pub all_hold: bool,
    pub properties: Vec<PropertyEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyEntry {
    pub property: &'static str,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_configuration: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lasso: Option<LassoEntry>,
}

impl PropertyEntry {
    pub fn from_report(report: &PropertyReport) -> Self {
        PropertyEntry {
            property: report.property.name(),
            holds: report.holds,
            verdict: None,
            worst_case_steps: None,
            worst_case_configuration: None,
            counterexample: report
                .counterexample
                .as_ref()
                .map(CounterexampleEntry::from),
            lasso: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleEntry {
    pub configuration: Vec<u32>,
    pub fired: Option<usize>,
    pub successor: Option<Vec<u32>>,
}

impl From<&Counterexample> for CounterexampleEntry {
    fn from(c: &Counterexample) -> Self {
        CounterexampleEntry {
            configuration: c.configuration.states().to_vec(),
            fired: c.fired.map(|n| n.index()),
            successor: c.successor.as_ref().map(|s| s.states().to_vec()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LassoEntry {
    pub stem: Vec<TraceRecord>,
    pub cycle: Vec<TraceRecord>,
}

impl From<&Lasso> for LassoEntry {
    fn from(l: &Lasso) -> Self {
        LassoEntry {
            stem: l.stem.iter().map(TraceRecord::from).collect(),
            cycle: l.cycle.iter().map(TraceRecord::from).collect(),
        }
    }
}

impl CheckReport {
    pub fn new(params: &Params, properties: Vec<PropertyEntry>) -> Self {
        CheckReport {
            tool: TOOL,
            version: VERSION,
            n: params.n(),
            k: params.k(),
            nodes: params.nodes(),
            state_space: params.state_space(),
            all_hold: properties.iter().all(|p| p.holds),
            properties,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "n={} ({} nodes), k={}, {} configurations",
            self.n, self.nodes, self.k, self.state_space
        );
        for p in &self.properties {
            let _ = write!(
                s,
                "{}: {}",
                p.property,
                if p.holds { "holds" } else { "FAILS" }
            );
            if let Some(w) = p.worst_case_steps {
                let _ = write!(s, " (worst case {w} steps)");
            }
            if let Some(l) = &p.lasso {
                let _ = write!(
                    s,
                    " (lasso: stem {} steps, cycle {} steps)",
                    l.stem.len(),
                    l.cycle.len()
                );
            }
            if let Some(c) = &p.counterexample {
                let _ = write!(s, " counterexample at {:?}", c.configuration);
                if let (Some(node), Some(succ)) = (c.fired, &c.successor) {
                    let _ = write!(s, " --{node}--> {succ:?}");
                }
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub rows: Vec<SweepEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub n: usize,
    pub k: u64,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stem_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl SweepEntry {
    pub fn new(row: &SweepRow, timing: bool) -> Self {
        let mut entry = SweepEntry {
            n: row.n,
            k: row.k,
            verdict: "converges",
            worst_case_steps: None,
            stem_length: None,
            cycle_length: None,
            reason: None,
            wall_time_ms: timing.then_some(row.elapsed.as_secs_f64() * 1000.0),
        };
        match &row.outcome {
            SweepOutcome::Converges { worst_case_steps } => {
                entry.worst_case_steps = Some(*worst_case_steps)
            }
            SweepOutcome::Diverges {
                stem_len,
                cycle_len,
            } => {
                entry.verdict = "diverges";
                entry.stem_length = Some(*stem_len);
                entry.cycle_length = Some(*cycle_len);
            }
            SweepOutcome::Skipped { reason } => {
                entry.verdict = "skipped";
                entry.reason = Some(reason.clone());
            }
        }
        entry
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl SweepReport {
    pub fn new(rows: &[SweepRow], timing: bool) -> Self {
        SweepReport {
            tool: TOOL,
            version: VERSION,
            rows: rows.iter().map(|r| SweepEntry::new(r, timing)).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "n,k,verdict,worst_case_steps,stem_length,cycle_length,wall_time_ms,reason\n",
        );
        for r in &self.rows {
            let reason = r
                .reason
                .as_ref()
                .map(|x| format!("\"{}\"", x.replace('"', "\"\"")))
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.k,
                r.verdict,
                opt(&r.worst_case_steps),
                opt(&r.stem_length),
                opt(&r.cycle_length),
                r.wall_time_ms
                    .map(|t| format!("{t:.3}"))
                    .unwrap_or_default(),
                reason
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:>4} {:>4}  {:<10} {:>10} {:>6} {:>6} {:>10}\n",
            "n", "k", "verdict", "worst-case", "stem", "cycle", "ms"
        );
        for r in &self.rows {
            let _ = write!(
                s,
                "{:>4} {:>4}  {:<10} {:>10} {:>6} {:>6} {:>10}",
                r.n,
                r.k,
                r.verdict,
                opt(&r.worst_case_steps),
                opt(&r.stem_length),
                opt(&r.cycle_length),
                r.wall_time_ms
                    .map(|t| format!("{t:.1}"))
                    .unwrap_or_default(),
            );
            if let Some(reason) = &r.reason {
                let _ = write!(s, "  {reason}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProveReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub n: usize,
    pub k: u32,
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u64>,
    pub explored: u64,
    pub transitions: u64,
    pub milestones: Milestones,
    pub outside_pattern: u64,
    pub total_violations: u64,
    pub violations: Vec<ViolationEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Milestones {
    pub three_share: TallyEntry,
    pub absent_value: AbsentEntry,
    pub sweep: SweepTallyEntry,
}

#[derive(Debug, Clone, Serialize)]
pub struct TallyEntry {
    pub checks: u64,
    pub violations: u64,
}

impl From<Tally> for TallyEntry {
    fn from(t: Tally) -> Self {
        TallyEntry {
            checks: t.checks,
            violations: t.violations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsentEntry {
    pub applicable: bool,
    pub checks: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTallyEntry {
    pub armed: u64,
    pub checks: u64,
    pub violations: u64,
    pub inconclusive: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationEntry {
    pub milestone: &'static str,
    pub expected: String,
    pub before: Vec<u32>,
    pub node: usize,
    pub after: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<TraceRecord>,
}

impl From<&ViolationRecord> for ViolationEntry {
    fn from(v: &ViolationRecord) -> Self {
        ViolationEntry {
            milestone: v.milestone.as_str(),
            expected: v.expected.clone(),
            before: v.before.states().to_vec(),
            node: v.fired.index(),
            after: v.after.states().to_vec(),
            run: v.run,
            step: v.step_index,
            witness: v.witness.iter().map(TraceRecord::from).collect(),
        }
    }
}

impl ProveReport {
    pub fn new(report: &MilestoneReport) -> Self {
        let (mode, seed, count, depth) = match report.mode {
            MilestoneMode::Exhaustive => ("exhaustive", None, None, None),
            MilestoneMode::Sampled { seed, count, depth } => {
                ("sampled", Some(seed), Some(count), Some(depth))
            }
        };
        ProveReport {
            tool: TOOL,
            version: VERSION,
            n: report.params.n(),
            k: report.params.k(),
            mode,
            seed,
            count,
            depth,
            explored: report.explored,
            transitions: report.transitions,
            milestones: Milestones {
                three_share: report.three_share.into(),
                absent_value: AbsentEntry {
                    applicable: report.absent_value_applicable,
                    checks: report.absent_value.checks,
                    violations: report.absent_value.violations,
                },
                sweep: SweepTallyEntry {
                    armed: report.sweeps_armed,
                    checks: report.sweep.checks,
                    violations: report.sweep.violations,
                    inconclusive: report.sweeps_inconclusive,
                },
            },
            outside_pattern: report.outside_pattern,
            total_violations: report.total_violations(),
            violations: report.violations.iter().map(ViolationEntry::from).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let m = &self.milestones;
        let mut s = format!("n={}, k={}, mode {}", self.n, self.k, self.mode);
        if let (Some(seed), Some(count), Some(depth)) = (self.seed, self.count, self.depth) {
            let _ = write!(s, " (seed {seed}, {count} runs of {depth} steps)");
        }
        s.push('\n');
        let _ = writeln!(
            s,
            "three-share:  {} checks, {} violations",
            m.three_share.checks, m.three_share.violations
        );
        if m.absent_value.applicable {
            let _ = writeln!(
                s,
                "absent-value: {} checks, {} violations",
                m.absent_value.checks, m.absent_value.violations
            );
        } else {
            let _ = writeln!(s, "absent-value: precondition k >= n > 1 not met, no claim");
        }
        let _ = writeln!(
            s,
            "sweep:        {} armed, {} resolved, {} violations, {} inconclusive",
            m.sweep.armed, m.sweep.checks, m.sweep.violations, m.sweep.inconclusive
        );
        let _ = writeln!(s, "outside the described pattern: {}", self.outside_pattern);
        let _ = writeln!(s, "total violations: {}", self.total_violations);
        for v in &self.violations {
            let _ = writeln!(
                s,
                "  {}: expected {} at {:?} --{}--> {:?}",
                v.milestone, v.expected, v.before, v.node, v.after
            );
        }
        s
    }
}
