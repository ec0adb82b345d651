//! Central-daemon run engine.
//!
//! At every step the daemon picks exactly one privileged node and the engine
//! fires it. Strategies only decide *which* privileged node; nothing here
//! enforces fairness.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checker::{ModelChecker, StepTable, DEFAULT_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::protocol::{self, Configuration, NodeId, Params};

/// One daemon choice and the atomic move it triggers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub step_index: usize,
    pub fired: NodeId,
    pub before: Configuration,
    pub after: Configuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    ReachedLegitimate,
    MaxSteps,
    UserStop,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ReachedLegitimate => "reached-legitimate",
            StopReason::MaxSteps => "max-steps",
            StopReason::UserStop => "user-stop",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub params: Params,
    /// Strategy label, e.g. `round-robin` or `scripted:1,2`.
    pub strategy: String,
    pub seed: Option<u64>,
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub terminated_reason: StopReason,
}

impl Trace {
    pub fn final_configuration(&self) -> &Configuration {
        self.steps.last().map_or(&self.initial, |s| &s.after)
    }
}

/// Callback for the interactive strategy: sees the configuration and its
/// privileged nodes, returns the node to fire or `None` to stop the run.
pub type ChoiceFn = Box<dyn FnMut(&Configuration, &[NodeId]) -> Option<NodeId> + Send>;

pub enum DaemonStrategy {
    RoundRobin,
    Random { seed: u64 },
    Adversarial,
    Scripted(Vec<NodeId>),
    Interactive(ChoiceFn),
}

impl DaemonStrategy {
    pub fn label(&self) -> String {
        match self {
            DaemonStrategy::RoundRobin => "round-robin".into(),
            DaemonStrategy::Random { .. } => "random".into(),
            DaemonStrategy::Adversarial => "adversarial".into(),
            DaemonStrategy::Scripted(nodes) => {
                let list: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                format!("scripted:{}", list.join(","))
            }
            DaemonStrategy::Interactive(_) => "interactive".into(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            DaemonStrategy::Random { seed } => Some(*seed),
            _ => None,
        }
    }
}

impl fmt::Debug for DaemonStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DaemonStrategy::Random { seed } => write!(f, "Random {{ seed: {seed} }}"),
            other => f.write_str(&other.label()),
        }
    }
}

/// How the adversary ranks moves.
#[derive(Debug, Clone)]
enum Adversary {
    /// Longest remaining path to legitimacy, from the checker.
    Exact(Arc<StepTable>),
    /// Successor with the most privileged nodes.
    Greedy,
}

/// A strategy plus the state it carries across steps.
pub struct Daemon {
    params: Params,
    strategy: DaemonStrategy,
    rng: Option<ChaCha8Rng>,
    adversary: Option<Adversary>,
    script_pos: usize,
    last_fired: Option<NodeId>,
}

impl fmt::Debug for Daemon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Daemon")
            .field("params", &self.params)
            .field("strategy", &self.strategy)
            .field("exact", &self.is_exact())
            .finish()
    }
}

impl Daemon {
    /// The adversarial strategy computes an exact step table when the state
    /// space fits [`DEFAULT_STATE_LIMIT`].
    pub fn new(params: &Params, strategy: DaemonStrategy) -> Result<Self> {
        Self::with_state_limit(params, strategy, DEFAULT_STATE_LIMIT)
    }

    pub fn with_state_limit(params: &Params, strategy: DaemonStrategy, limit: u64) -> Result<Self> {
        let adversary = match strategy {
            DaemonStrategy::Adversarial => Some(if params.state_space() <= limit {
                let checker = ModelChecker::new(params, limit)?;
                Adversary::Exact(Arc::new(checker.step_table().clone()))
            } else {
                Adversary::Greedy
            }),
            _ => None,
        };
        Ok(Self::assemble(params, strategy, adversary))
    }

    /// Adversarial daemon driven by an already computed table.
    pub fn adversarial_with_table(table: Arc<StepTable>) -> Self {
        let params = *table.params();
        Self::assemble(
            &params,
            DaemonStrategy::Adversarial,
            Some(Adversary::Exact(table)),
        )
    }

    fn assemble(params: &Params, strategy: DaemonStrategy, adversary: Option<Adversary>) -> Self {
        let rng = match strategy {
            DaemonStrategy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Daemon {
            params: *params,
            strategy,
            rng,
            adversary,
            script_pos: 0,
            last_fired: None,
        }
    }

    pub fn strategy(&self) -> &DaemonStrategy {
        &self.strategy
    }

    /// Whether the adversary plays from an exact step table.
    pub fn is_exact(&self) -> bool {
        matches!(self.adversary, Some(Adversary::Exact(_)))
    }

    /// Picks the node to fire at step `step_index`; `None` means the
    /// interactive caller stopped the run.
    pub fn select(&mut self, cfg: &Configuration, step_index: usize) -> Result<Option<NodeId>> {
        let privs = protocol::privileged_set(&self.params, cfg);
        let illegal = |reason: String| Error::IllegalSchedule {
            step: step_index,
            reason,
        };
        let choice = match &mut self.strategy {
            DaemonStrategy::RoundRobin => {
                let nodes = self.params.nodes();
                let start = self.last_fired.map_or(0, |n| (n.0 + 1) % nodes);
                (0..nodes)
                    .map(|offset| NodeId((start + offset) % nodes))
                    .find(|n| privs.contains(n))
            }
            DaemonStrategy::Random { .. } => {
                let rng = self.rng.as_mut().expect("random strategy owns a generator");
                Some(privs[rng.random_range(0..privs.len() as u32) as usize])
            }
            DaemonStrategy::Adversarial => {
                let adversary = self.adversary.as_ref().expect("adversary configured");
                Some(adversarial_choice(&self.params, adversary, cfg, &privs))
            }
            DaemonStrategy::Scripted(script) => {
                let node = *script.get(self.script_pos).ok_or_else(|| {
                    illegal(format!("script exhausted after {} moves", script.len()))
                })?;
                self.script_pos += 1;
                Some(node)
            }
            DaemonStrategy::Interactive(choose) => match choose(cfg, &privs) {
                None => return Ok(None),
                Some(node) => Some(node),
            },
        };
        let node = choice.expect("privileged set is never empty");
        if !privs.contains(&node) {
            return Err(illegal(format!("node {node} is not privileged in {cfg}")));
        }
        self.last_fired = Some(node);
        Ok(Some(node))
    }
}

fn adversarial_choice(
    params: &Params,
    adversary: &Adversary,
    cfg: &Configuration,
    privs: &[NodeId],
) -> NodeId {
    let successor = |node: NodeId| protocol::fire(params, cfg, node).expect("privileged");
    match adversary {
        // Unbounded successors rank above every finite distance.
        Adversary::Exact(table) => *privs
            .iter()
            .rev()
            .max_by_key(|&&node| {
                table
                    .steps_to_legitimacy(&successor(node))
                    .map_or(u64::MAX, |d| d)
            })
            .expect("non-empty"),
        Adversary::Greedy => *privs
            .iter()
            .rev()
            .max_by_key(|&&node| protocol::privilege_count(params, &successor(node)))
            .expect("non-empty"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub max_steps: u64,
    pub stop_on_legitimate: bool,
}

impl RunOptions {
    /// `10 * k^(n+1)` steps, stopping at the first legitimate configuration.
    pub fn defaults(params: &Params) -> Self {
        RunOptions {
            max_steps: default_max_steps(params),
            stop_on_legitimate: true,
        }
    }
}

pub fn default_max_steps(params: &Params) -> u64 {
    params.state_space().saturating_mul(10)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub steps: u64,
    pub final_configuration: Configuration,
    pub reason: StopReason,
}

/// Runs the engine, handing every step to `on_step` as it happens.
pub fn execute<F>(
    params: &Params,
    initial: &Configuration,
    daemon: &mut Daemon,
    options: RunOptions,
    mut on_step: F,
) -> Result<RunSummary>
where
    F: FnMut(&TraceStep) -> Result<()>,
{
    if initial.len() != params.nodes() {
        // Re-validate through the constructor for a uniform error message.
        Configuration::new(params, initial.states().to_vec())?;
    }
    let mut current = initial.clone();
    let mut taken = 0u64;
    let reason = loop {
        if options.stop_on_legitimate && protocol::is_legitimate(params, &current).is_some() {
            break StopReason::ReachedLegitimate;
        }
        if taken >= options.max_steps {
            break StopReason::MaxSteps;
        }
        let step_index = taken as usize;
        let Some(node) = daemon.select(&current, step_index)? else {
            break StopReason::UserStop;
        };
        let next = protocol::fire(params, &current, node)?;
        let step = TraceStep {
            step_index,
            fired: node,
            before: current,
            after: next,
        };
        on_step(&step)?;
        current = step.after;
        taken += 1;
    };
    Ok(RunSummary {
        steps: taken,
        final_configuration: current,
        reason,
    })
}

/// Runs to completion and collects the trace.
pub fn run(
    params: &Params,
    initial: &Configuration,
    strategy: DaemonStrategy,
    max_steps: Option<u64>,
    stop_on_legitimate: bool,
) -> Result<Trace> {
    let label = strategy.label();
    let seed = strategy.seed();
    let mut daemon = Daemon::new(params, strategy)?;
    let options = RunOptions {
        max_steps: max_steps.unwrap_or_else(|| default_max_steps(params)),
        stop_on_legitimate,
    };
    let mut steps = Vec::new();
    let summary = execute(params, initial, &mut daemon, options, |s| {
        steps.push(s.clone());
        Ok(())
    })?;
    Ok(Trace {
        params: *params,
        strategy: label,
        seed,
        initial: initial.clone(),
        steps,
        terminated_reason: summary.reason,
    })
}

/// Uniformly random configuration.
pub fn random_configuration<R: Rng>(params: &Params, rng: &mut R) -> Configuration {
    let states = (0..params.nodes())
        .map(|_| rng.random_range(0..params.k()))
        .collect::<Vec<_>>()
        .into_boxed_slice();
    Configuration::from_states_unchecked(states)
}

/// First point where a trace disagrees with the protocol. `step` is the
/// position in the step sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayVerdict {
    pub steps_checked: usize,
    pub divergence: Option<Divergence>,
}

impl ReplayVerdict {
    pub fn is_valid(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-executes a trace and reports the first divergence.
pub fn replay(trace: &Trace) -> ReplayVerdict {
    if let Some(first) = trace.steps.first() {
        if first.before != trace.initial {
            return ReplayVerdict {
                steps_checked: 0,
                divergence: Some(Divergence {
                    step: 0,
                    reason: format!(
                        "first step starts at {}, trace starts at {}",
                        first.before, trace.initial
                    ),
                }),
            };
        }
    }
    replay_steps(&trace.params, &trace.steps)
}

/// Checks every step in isolation (valid states, privileged node, correct
/// successor) and that consecutive steps chain.
pub fn replay_steps(params: &Params, steps: &[TraceStep]) -> ReplayVerdict {
    for (t, step) in steps.iter().enumerate() {
        if let Err(reason) = check_step(params, step, t.checked_sub(1).map(|p| &steps[p])) {
            return ReplayVerdict {
                steps_checked: t,
                divergence: Some(Divergence { step: t, reason }),
            };
        }
    }
    ReplayVerdict {
        steps_checked: steps.len(),
        divergence: None,
    }
}

fn check_step(
    params: &Params,
    step: &TraceStep,
    previous: Option<&TraceStep>,
) -> std::result::Result<(), String> {
    for cfg in [&step.before, &step.after] {
        Configuration::new(params, cfg.states().to_vec()).map_err(|e| e.to_string())?;
    }
    if let Some(prev) = previous {
        if prev.after != step.before {
            return Err(format!(
                "step starts at {} but the previous step ended at {}",
                step.before, prev.after
            ));
        }
    }
    let expected = protocol::fire(params, &step.before, step.fired).map_err(|e| e.to_string())?;
    if expected != step.after {
        return Err(format!(
            "firing node {} in {} yields {}, trace records {}",
            step.fired, step.before, expected, step.after
        ));
    }
    Ok(())
}
