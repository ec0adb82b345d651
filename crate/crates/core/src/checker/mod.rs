//! Explicit-state model checking over the full configuration graph.
//!
//! Every configuration is an admissible initial state, so the checker builds
//! the complete move relation over all `k^(n+1)` configurations and decides:
//!
//! * convergence under every central-daemon schedule, reduced to "no cycle
//!   among illegitimate configurations" (the legitimate set is closed, so any
//!   run that never stabilizes must loop among illegitimate ones),
//! * the worst-case number of daemon steps before the first legitimate
//!   configuration, by memoized longest path over the illegitimate DAG,
//! * closure, non-termination and node-0 liveness as separate properties,
//! * a lasso-shaped counterexample when convergence fails.
//!
//! Results hold for the finite instance checked, nothing more.

mod scc;

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::daemon::{replay_steps, TraceStep};
use crate::error::{Error, Result};
use crate::protocol::{
    self, decode_into, encode_raw, fire_raw, legitimacy_raw, privileged_raw, Configuration, NodeId,
    Params,
};

pub use scc::{tarjan, Components};

/// Default cap on the number of configurations the checker will enumerate.
pub const DEFAULT_STATE_LIMIT: u64 = 10_000_000;

/// Vertex ids are stored as `u32`, whatever limit the caller asks for.
const HARD_STATE_LIMIT: u64 = u32::MAX as u64 - 1;

const CHUNK: usize = 1 << 14;
const UNBOUNDED: u32 = u32::MAX;

/// One outgoing move: the fired node and the encoded successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub node: u32,
    pub succ: u32,
}

/// The complete move relation, in compressed sparse row form, indexed by
/// [`protocol::encode`]. Successors of each vertex are ordered by fired node.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    params: Params,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    legitimate: Vec<bool>,
}

impl TransitionGraph {
    /// Builds a graph from explicit successor lists instead of the protocol's
    /// own moves. Used to exercise the property checks on faulty relations.
    pub fn from_successor_lists(params: Params, lists: Vec<Vec<(NodeId, u64)>>) -> Result<Self> {
        if lists.len() as u64 != params.state_space() {
            return Err(Error::InvalidParams(format!(
                "expected {} successor lists, got {}",
                params.state_space(),
                lists.len()
            )));
        }
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut edges = Vec::new();
        let mut legitimate = Vec::with_capacity(lists.len());
        let mut states = vec![0u32; params.nodes()];
        offsets.push(0);
        for (v, list) in lists.into_iter().enumerate() {
            decode_into(v as u64, params.k(), &mut states);
            legitimate.push(legitimacy_raw(&states, params.k()).is_some());
            for (node, succ) in list {
                params.node(node.0)?;
                if succ >= params.state_space() {
                    return Err(Error::IndexOutOfRange {
                        index: succ,
                        size: params.state_space(),
                    });
                }
                edges.push(Edge {
                    node: node.0 as u32,
                    succ: succ as u32,
                });
            }
            offsets.push(edges.len());
        }
        Ok(TransitionGraph {
            params,
            offsets,
            edges,
            legitimate,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Number of vertices, `k^(n+1)`.
    pub fn len(&self) -> usize {
        self.legitimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legitimate.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn successors(&self, v: usize) -> &[Edge] {
        &self.edges[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn is_legitimate(&self, v: usize) -> bool {
        self.legitimate[v]
    }

    pub fn configuration(&self, v: usize) -> Configuration {
        protocol::decode(&self.params, v as u64).expect("vertex within state space")
    }

    fn step(&self, step_index: usize, from: usize, edge: Edge) -> TraceStep {
        TraceStep {
            step_index,
            fired: NodeId(edge.node as usize),
            before: self.configuration(from),
            after: self.configuration(edge.succ as usize),
        }
    }
}

/// Enumerates every configuration and its moves.
pub fn build_graph(params: &Params, state_limit: u64) -> Result<TransitionGraph> {
    let limit = state_limit.min(HARD_STATE_LIMIT);
    params.ensure_within(limit)?;
    let len = params.state_space() as usize;
    let k = params.k();
    let nodes = params.nodes();

    let chunks: Vec<(Vec<u32>, Vec<Edge>, Vec<bool>)> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            let mut degrees = Vec::with_capacity(hi - lo);
            let mut edges = Vec::new();
            let mut legit = Vec::with_capacity(hi - lo);
            let mut states = vec![0u32; nodes];
            let mut next = vec![0u32; nodes];
            for v in lo..hi {
                decode_into(v as u64, k, &mut states);
                legit.push(legitimacy_raw(&states, k).is_some());
                let before = edges.len();
                for node in 0..nodes {
                    if privileged_raw(&states, node) {
                        next.copy_from_slice(&states);
                        fire_raw(&mut next, k, node);
                        edges.push(Edge {
                            node: node as u32,
                            succ: encode_raw(&next, k) as u32,
                        });
                    }
                }
                degrees.push((edges.len() - before) as u32);
            }
            (degrees, edges, legit)
        })
        .collect();

    let total_edges = chunks.iter().map(|c| c.1.len()).sum();
    let mut offsets = Vec::with_capacity(len + 1);
    let mut edges = Vec::with_capacity(total_edges);
    let mut legitimate = Vec::with_capacity(len);
    offsets.push(0);
    for (degrees, chunk_edges, legit) in chunks {
        for d in degrees {
            let last = *offsets.last().expect("non-empty");
            offsets.push(last + d as usize);
        }
        edges.extend(chunk_edges);
        legitimate.extend(legit);
    }

    Ok(TransitionGraph {
        params: *params,
        offsets,
        edges,
        legitimate,
    })
}

/// For every configuration, the longest number of daemon steps any schedule
/// can take before first entering the legitimate set (0 for legitimate
/// configurations, unbounded for configurations that can avoid it forever).
#[derive(Debug, Clone)]
pub struct StepTable {
    params: Params,
    steps: Vec<u32>,
}

impl StepTable {
    /// Iterative memoized DFS. A successor still on the DFS stack closes a
    /// cycle, which makes every configuration that reaches it unbounded.
    pub fn compute(graph: &TransitionGraph) -> Self {
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;

        let len = graph.len();
        let mut steps = vec![0u32; len];
        let mut color = vec![WHITE; len];
        let mut stack: Vec<(usize, usize)> = Vec::new();

        let extend = |d: u32| if d == UNBOUNDED { UNBOUNDED } else { d + 1 };

        for root in 0..len {
            if color[root] != WHITE {
                continue;
            }
            if graph.is_legitimate(root) {
                color[root] = BLACK;
                continue;
            }
            color[root] = GREY;
            stack.push((root, 0));
            while let Some(frame) = stack.last_mut() {
                let v = frame.0;
                let edges = graph.successors(v);
                if frame.1 < edges.len() {
                    let w = edges[frame.1].succ as usize;
                    frame.1 += 1;
                    let candidate = if graph.is_legitimate(w) {
                        1
                    } else {
                        match color[w] {
                            WHITE => {
                                color[w] = GREY;
                                stack.push((w, 0));
                                continue;
                            }
                            GREY => UNBOUNDED,
                            _ => extend(steps[w]),
                        }
                    };
                    steps[v] = steps[v].max(candidate);
                } else {
                    stack.pop();
                    color[v] = BLACK;
                    if let Some(&(parent, _)) = stack.last() {
                        steps[parent] = steps[parent].max(extend(steps[v]));
                    }
                }
            }
        }

        StepTable {
            params: *graph.params(),
            steps,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// `None` when some schedule from `cfg` never reaches legitimacy.
    pub fn steps_to_legitimacy(&self, cfg: &Configuration) -> Option<u64> {
        self.steps_at(protocol::encode(&self.params, cfg) as usize)
    }

    pub fn steps_at(&self, v: usize) -> Option<u64> {
        match self.steps[v] {
            UNBOUNDED => None,
            d => Some(u64::from(d)),
        }
    }

    pub fn converges(&self) -> bool {
        !self.steps.contains(&UNBOUNDED)
    }

    /// `None` for diverging instances.
    pub fn worst_case_steps(&self) -> Option<u64> {
        self.converges()
            .then(|| self.steps.iter().copied().max().map_or(0, u64::from))
    }

    /// The smallest-encoded configuration attaining the worst case.
    pub fn maximizing_configuration(&self) -> Option<Configuration> {
        let worst = self.worst_case_steps()? as u32;
        let v = self.steps.iter().position(|&d| d == worst)?;
        protocol::decode(&self.params, v as u64).ok()
    }

    fn first_unbounded(&self) -> Option<usize> {
        self.steps.iter().position(|&d| d == UNBOUNDED)
    }
}

/// A counterexample to convergence: a stem leading into a cycle of
/// illegitimate configurations that the daemon can repeat forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<TraceStep>,
    pub cycle: Vec<TraceStep>,
}

impl Lasso {
    pub fn start(&self) -> &Configuration {
        self.stem
            .first()
            .or(self.cycle.first())
            .map(|s| &s.before)
            .expect("lasso cycle is non-empty")
    }

    /// Replays stem and cycle, and checks the cycle closes on itself through
    /// illegitimate configurations only.
    pub fn validate(&self, params: &Params) -> Result<()> {
        if self.cycle.is_empty() {
            return Err(Error::InvalidTrace {
                step: self.stem.len(),
                reason: "lasso cycle is empty".into(),
            });
        }
        let all: Vec<TraceStep> = self.stem.iter().chain(&self.cycle).cloned().collect();
        if let Some(d) = replay_steps(params, &all).divergence {
            return Err(Error::InvalidTrace {
                step: d.step,
                reason: d.reason,
            });
        }
        let first = &self.cycle[0].before;
        let last = &self.cycle[self.cycle.len() - 1].after;
        if first != last {
            return Err(Error::InvalidTrace {
                step: all.len() - 1,
                reason: format!("cycle ends at {last}, expected {first}"),
            });
        }
        for step in &self.cycle {
            if protocol::is_legitimate(params, &step.before).is_some() {
                return Err(Error::InvalidTrace {
                    step: step.step_index,
                    reason: format!("cycle visits legitimate configuration {}", step.before),
                });
            }
        }
        Ok(())
    }
}

/// Outcome of the convergence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Converges { worst_case_steps: u64 },
    Diverges { lasso: Lasso },
}

impl Verdict {
    pub fn converges(&self) -> bool {
        matches!(self, Verdict::Converges { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Convergence,
    Closure,
    NoTermination,
    Node0Liveness,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::Convergence,
        Property::Closure,
        Property::NoTermination,
        Property::Node0Liveness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Convergence => "convergence",
            Property::Closure => "closure",
            Property::NoTermination => "no-termination",
            Property::Node0Liveness => "node0-liveness",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single offending configuration, with the move that exhibits the problem
/// when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub configuration: Configuration,
    pub fired: Option<NodeId>,
    pub successor: Option<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyReport {
    pub property: Property,
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

impl PropertyReport {
    fn holds(property: Property) -> Self {
        PropertyReport {
            property,
            holds: true,
            counterexample: None,
        }
    }

    fn fails(property: Property, counterexample: Counterexample) -> Self {
        PropertyReport {
            property,
            holds: false,
            counterexample: Some(counterexample),
        }
    }
}

/// Checker for one instance: owns the transition graph and memoizes the
/// step table.
#[derive(Debug)]
pub struct ModelChecker {
    graph: TransitionGraph,
    table: OnceLock<StepTable>,
}

impl ModelChecker {
    pub fn new(params: &Params, state_limit: u64) -> Result<Self> {
        Ok(Self::from_graph(build_graph(params, state_limit)?))
    }

    pub fn from_graph(graph: TransitionGraph) -> Self {
        ModelChecker {
            graph,
            table: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &Params {
        self.graph.params()
    }

    pub fn graph(&self) -> &TransitionGraph {
        &self.graph
    }

    pub fn step_table(&self) -> &StepTable {
        self.table.get_or_init(|| StepTable::compute(&self.graph))
    }

    pub fn check_convergence(&self) -> Verdict {
        match self.step_table().worst_case_steps() {
            Some(worst_case_steps) => Verdict::Converges { worst_case_steps },
            None => Verdict::Diverges {
                lasso: self
                    .extract_lasso()
                    .expect("unbounded vertex implies a cycle"),
            },
        }
    }

    pub fn worst_case_steps(&self) -> Result<u64> {
        self.step_table()
            .worst_case_steps()
            .ok_or(Error::NotConvergent)
    }

    pub fn find_counterexample(&self) -> Option<Lasso> {
        match self.check_convergence() {
            Verdict::Converges { .. } => None,
            Verdict::Diverges { lasso } => Some(lasso),
        }
    }

    pub fn check(&self, property: Property) -> PropertyReport {
        match property {
            Property::Convergence => self.check_convergence_property(),
            Property::Closure => self.check_closure(),
            Property::NoTermination => self.check_no_termination(),
            Property::Node0Liveness => self.check_node0_liveness(),
        }
    }

    fn check_convergence_property(&self) -> PropertyReport {
        match self.find_counterexample() {
            None => PropertyReport::holds(Property::Convergence),
            Some(lasso) => {
                let step = &lasso.cycle[0];
                PropertyReport::fails(
                    Property::Convergence,
                    Counterexample {
                        configuration: step.before.clone(),
                        fired: Some(step.fired),
                        successor: Some(step.after.clone()),
                    },
                )
            }
        }
    }

    /// Every legitimate configuration has exactly one privileged node and
    /// every move from it stays legitimate.
    pub fn check_closure(&self) -> PropertyReport {
        let g = &self.graph;
        let bad = (0..g.len()).into_par_iter().find_map_first(|v| {
            if !g.is_legitimate(v) {
                return None;
            }
            let edges = g.successors(v);
            if edges.len() != 1 {
                let edge = edges.get(1).or(edges.first());
                return Some(self.counterexample(v, edge));
            }
            edges
                .iter()
                .find(|e| !g.is_legitimate(e.succ as usize))
                .map(|e| self.counterexample(v, Some(e)))
        });
        match bad {
            None => PropertyReport::holds(Property::Closure),
            Some(cx) => PropertyReport::fails(Property::Closure, cx),
        }
    }

    /// Every configuration has at least one privileged node.
    pub fn check_no_termination(&self) -> PropertyReport {
        let g = &self.graph;
        match (0..g.len())
            .into_par_iter()
            .find_first(|&v| g.out_degree(v) == 0)
        {
            None => PropertyReport::holds(Property::NoTermination),
            Some(v) => PropertyReport::fails(Property::NoTermination, self.counterexample(v, None)),
        }
    }

    /// The moves of nodes `1..=n` alone form an acyclic graph, so no infinite
    /// schedule avoids node 0.
    pub fn check_node0_liveness(&self) -> PropertyReport {
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let g = &self.graph;
        let mut color = vec![WHITE; g.len()];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..g.len() {
            if color[root] != WHITE {
                continue;
            }
            color[root] = GREY;
            stack.push((root, 0));
            while let Some(frame) = stack.last_mut() {
                let v = frame.0;
                let edges = g.successors(v);
                if frame.1 < edges.len() {
                    let edge = edges[frame.1];
                    frame.1 += 1;
                    if edge.node == 0 {
                        continue;
                    }
                    let w = edge.succ as usize;
                    match color[w] {
                        WHITE => {
                            color[w] = GREY;
                            stack.push((w, 0));
                        }
                        GREY => {
                            return PropertyReport::fails(
                                Property::Node0Liveness,
                                self.counterexample(v, Some(&edge)),
                            );
                        }
                        _ => {}
                    }
                } else {
                    color[v] = BLACK;
                    stack.pop();
                }
            }
        }
        PropertyReport::holds(Property::Node0Liveness)
    }

    fn counterexample(&self, v: usize, edge: Option<&Edge>) -> Counterexample {
        Counterexample {
            configuration: self.graph.configuration(v),
            fired: edge.map(|e| NodeId(e.node as usize)),
            successor: edge.map(|e| self.graph.configuration(e.succ as usize)),
        }
    }

    /// Stem: shortest path from the smallest configuration that can avoid
    /// legitimacy forever to the nearest configuration on a cycle (smallest
    /// encoding among equally near ones). Cycle: shortest cycle through it.
    fn extract_lasso(&self) -> Option<Lasso> {
        let g = &self.graph;
        let table = self.step_table();
        let start = table.first_unbounded()?;
        let in_basin = |v: usize| table.steps[v] == UNBOUNDED;
        let comps = tarjan(g.len(), in_basin, |v, out| {
            out.extend(g.successors(v).iter().map(|e| e.succ as usize))
        });

        let (entry, stem_edges) = shortest_path(g, start, in_basin, |layer| {
            layer.iter().copied().filter(|&v| comps.on_cycle(v)).min()
        })?;

        let comp = comps.component[entry];
        let mut cycle_edges = None;
        let mut parent: Vec<Option<(usize, Edge)>> = Vec::new();
        bfs(
            g,
            entry,
            |w| comps.component[w] == comp,
            |v, e| {
                if e.succ as usize == entry && cycle_edges.is_none() {
                    cycle_edges = Some((v, e));
                    return true;
                }
                false
            },
            &mut parent,
        );
        let (last, closing) = cycle_edges?;
        let mut cycle_path = path_to(&parent, entry, last);
        cycle_path.push((last, closing));

        let stem_len = stem_edges.len();
        let mut steps = stem_edges
            .into_iter()
            .chain(cycle_path)
            .enumerate()
            .map(|(i, (v, e))| g.step(i, v, e))
            .collect::<Vec<_>>();
        let cycle = steps.split_off(stem_len);
        Some(Lasso { stem: steps, cycle })
    }
}

/// Layered BFS from `start` within `include`. `pick` inspects each layer in
/// discovery order and returns the target once one is present. Returns the
/// target and the edge path to it.
fn shortest_path<F, P>(
    g: &TransitionGraph,
    start: usize,
    include: F,
    mut pick: P,
) -> Option<(usize, Vec<(usize, Edge)>)>
where
    F: Fn(usize) -> bool,
    P: FnMut(&[usize]) -> Option<usize>,
{
    let mut parent: Vec<Option<(usize, Edge)>> = vec![None; g.len()];
    let mut seen = vec![false; g.len()];
    seen[start] = true;
    let mut layer = vec![start];
    while !layer.is_empty() {
        if let Some(target) = pick(&layer) {
            return Some((target, path_to(&parent, start, target)));
        }
        let mut next = Vec::new();
        for &v in &layer {
            for &e in g.successors(v) {
                let w = e.succ as usize;
                if include(w) && !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    next.push(w);
                }
            }
        }
        layer = next;
    }
    None
}

/// Plain BFS recording parents; stops as soon as `visit` returns true.
fn bfs<F, V>(
    g: &TransitionGraph,
    start: usize,
    include: F,
    mut visit: V,
    parent: &mut Vec<Option<(usize, Edge)>>,
) where
    F: Fn(usize) -> bool,
    V: FnMut(usize, Edge) -> bool,
{
    parent.clear();
    parent.resize(g.len(), None);
    let mut seen = vec![false; g.len()];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &e in g.successors(v) {
            if visit(v, e) {
                return;
            }
            let w = e.succ as usize;
            if include(w) && !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, e));
                queue.push_back(w);
            }
        }
    }
}

fn path_to(parent: &[Option<(usize, Edge)>], start: usize, target: usize) -> Vec<(usize, Edge)> {
    let mut path = Vec::new();
    let mut v = target;
    while v != start {
        let (p, e) = parent[v].expect("target reachable from start");
        path.push((p, e));
        v = p;
    }
    path.reverse();
    path
}

/// Convergence verdict with the default state limit.
pub fn check_convergence(params: &Params) -> Result<Verdict> {
    Ok(ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.check_convergence())
}

pub fn worst_case_steps(params: &Params) -> Result<u64> {
    ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.worst_case_steps()
}

pub fn find_counterexample(params: &Params) -> Result<Option<Lasso>> {
    Ok(ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.find_counterexample())
}

pub fn check_closure(params: &Params) -> Result<PropertyReport> {
    Ok(ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.check_closure())
}

pub fn check_no_termination(params: &Params) -> Result<PropertyReport> {
    Ok(ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.check_no_termination())
}

pub fn check_node0_liveness(params: &Params) -> Result<PropertyReport> {
    Ok(ModelChecker::new(params, DEFAULT_STATE_LIMIT)?.check_node0_liveness())
}

/// How a sweep picks `k` for each `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KRule {
    /// k = n - 1
    BelowN,
    /// k = n
    EqualN,
    /// k = n + 1
    AboveN,
    List(Vec<u64>),
}

impl KRule {
    fn ks(&self, n: usize) -> Vec<u64> {
        let n = n as u64;
        match self {
            KRule::BelowN => vec![n.wrapping_sub(1)],
            KRule::EqualN => vec![n],
            KRule::AboveN => vec![n + 1],
            KRule::List(ks) => ks.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepOutcome {
    Converges { worst_case_steps: u64 },
    Diverges { stem_len: usize, cycle_len: usize },
    Skipped { reason: String },
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub k: u64,
    pub outcome: SweepOutcome,
    pub elapsed: Duration,
}

/// One row per `(n, k)` instance, sorted by `(n, k)`. Instances that cannot
/// be checked become `Skipped` rows.
pub fn sweep(n_range: RangeInclusive<usize>, rule: &KRule, state_limit: u64) -> Vec<SweepRow> {
    let mut instances: Vec<(usize, u64)> = n_range
        .flat_map(|n| rule.ks(n).into_iter().map(move |k| (n, k)))
        .collect();
    instances.sort_unstable();
    instances.dedup();
    instances
        .into_par_iter()
        .map(|(n, k)| {
            let started = Instant::now();
            let outcome = sweep_instance(n, k, state_limit);
            SweepRow {
                n,
                k,
                outcome,
                elapsed: started.elapsed(),
            }
        })
        .collect()
}

fn sweep_instance(n: usize, k: u64, state_limit: u64) -> SweepOutcome {
    let params = match u32::try_from(k)
        .map_err(|_| Error::InvalidParams(format!("k={k} is too large")))
        .and_then(|k| Params::new(n, k))
    {
        Ok(p) => p,
        Err(e) => {
            return SweepOutcome::Skipped {
                reason: e.to_string(),
            }
        }
    };
    match ModelChecker::new(&params, state_limit) {
        Err(e) => SweepOutcome::Skipped {
            reason: e.to_string(),
        },
        Ok(checker) => match checker.check_convergence() {
            Verdict::Converges { worst_case_steps } => SweepOutcome::Converges { worst_case_steps },
            Verdict::Diverges { lasso } => SweepOutcome::Diverges {
                stem_len: lasso.stem.len(),
                cycle_len: lasso.cycle.len(),
            },
        },
    }
}
