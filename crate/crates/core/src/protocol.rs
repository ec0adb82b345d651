//! The K-state token ring: state space, privilege guards, moves and the
//! legitimate set.
//!
//! The ring has nodes `0..=n`. Note that `n` is the *highest node index*, so
//! a ring with `n` set to 3 has four nodes. Every node holds a state in
//! `0..k`. Node 0 is the exceptional node:
//!
//! ```text
//! node 0:       privileged when x[0] == x[n];     move: x[0] := (x[0] + 1) mod k
//! node i >= 1:  privileged when x[i] != x[i-1];   move: x[i] := x[i-1]
//! ```
//!
//! Everything here is a pure function of its inputs.

use std::fmt;

use crate::error::{Error, Result};

/// Ring parameters.
///
/// `n` is the highest node index (the ring has `n + 1` nodes) and `k` is the
/// number of states per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    n: usize,
    k: u32,
    state_space: u64,
}

impl Params {
    /// Rejects `n == 0`, `k == 0`, and pairs whose state space `k^(n+1)` does
    /// not fit in a `u64`.
    pub fn new(n: usize, k: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParams(
                "n (highest node index) must be at least 1; the ring needs two nodes".into(),
            ));
        }
        if k < 1 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let state_space = u32::try_from(n + 1)
            .ok()
            .and_then(|exp| u64::from(k).checked_pow(exp))
            .ok_or(Error::StateSpaceTooLarge {
                size: None,
                limit: u64::MAX,
            })?;
        Ok(Params { n, k, state_space })
    }

    /// Highest node index.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes on the ring, `n + 1`.
    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of configurations, `k^(n+1)`.
    pub fn state_space(&self) -> u64 {
        self.state_space
    }

    /// Fails with [`Error::StateSpaceTooLarge`] when the state space exceeds `limit`.
    pub fn ensure_within(&self, limit: u64) -> Result<()> {
        if self.state_space > limit {
            Err(Error::StateSpaceTooLarge {
                size: Some(self.state_space),
                limit,
            })
        } else {
            Ok(())
        }
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..=self.n).map(NodeId)
    }

    pub fn node(&self, id: usize) -> Result<NodeId> {
        if id > self.n {
            Err(Error::NodeOutOfRange {
                node: id,
                n: self.n,
            })
        } else {
            Ok(NodeId(id))
        }
    }

    fn check_node(&self, node: NodeId) -> Result<()> {
        self.node(node.0).map(|_| ())
    }

    fn check_len(&self, cfg: &Configuration) -> Result<()> {
        if cfg.len() != self.nodes() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} node states for n={}, got {}",
                self.nodes(),
                self.n,
                cfg.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} ({} nodes), k={}", self.n, self.nodes(), self.k)
    }
}

/// Index of a node on the ring, in `0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ZERO: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The vector of node states `x[0..=n]`. Immutable; [`fire`] returns a new one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(Box<[u32]>);

impl Configuration {
    pub fn new(params: &Params, states: Vec<u32>) -> Result<Self> {
        let cfg = Configuration(states.into_boxed_slice());
        params.check_len(&cfg)?;
        if let Some((i, v)) = cfg.0.iter().enumerate().find(|(_, &v)| v >= params.k) {
            return Err(Error::InvalidConfiguration(format!(
                "node {i} holds {v}, states must lie in 0..{}",
                params.k
            )));
        }
        Ok(cfg)
    }

    /// Every node holds `value`.
    pub fn uniform(params: &Params, value: u32) -> Result<Self> {
        Self::new(params, vec![value; params.nodes()])
    }

    /// Wraps states that are already known to be valid.
    pub(crate) fn from_states_unchecked(states: Box<[u32]>) -> Self {
        Configuration(states)
    }

    pub fn states(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: NodeId) -> u32 {
        self.0[node.0]
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

/// Certifies that `x[i] = a` for `i < j` and `x[i] = (a - 1) mod k` for
/// `j <= i <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LegitimacyWitness {
    pub a: u32,
    pub j: usize,
}

impl LegitimacyWitness {
    /// Rebuilds the configuration this witness describes.
    pub fn reconstruct(&self, params: &Params) -> Result<Configuration> {
        if self.j > params.nodes() {
            return Err(Error::InvalidParams(format!(
                "split index {} exceeds ring size {}",
                self.j,
                params.nodes()
            )));
        }
        let below = pred(self.a, params.k);
        let states = (0..params.nodes())
            .map(|i| if i < self.j { self.a } else { below })
            .collect();
        Configuration::new(params, states)
    }
}

#[inline]
fn pred(v: u32, k: u32) -> u32 {
    if v == 0 {
        k - 1
    } else {
        v - 1
    }
}

#[inline]
pub(crate) fn privileged_raw(states: &[u32], node: usize) -> bool {
    if node == 0 {
        states[0] == states[states.len() - 1]
    } else {
        states[node] != states[node - 1]
    }
}

/// Applies a move in place without checking the guard.
#[inline]
pub(crate) fn fire_raw(states: &mut [u32], k: u32, node: usize) {
    if node == 0 {
        states[0] = if states[0] + 1 == k { 0 } else { states[0] + 1 };
    } else {
        states[node] = states[node - 1];
    }
}

/// Writes the privileged nodes of `states` into `out` in ascending order.
#[inline]
pub(crate) fn privileged_into(states: &[u32], out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..states.len()).filter(|&i| privileged_raw(states, i)));
}

pub(crate) fn legitimacy_raw(states: &[u32], k: u32) -> Option<LegitimacyWitness> {
    let a = states[0];
    let j = states.iter().position(|&v| v != a).unwrap_or(states.len());
    if j == states.len() {
        return Some(LegitimacyWitness { a, j });
    }
    let below = pred(a, k);
    states[j..]
        .iter()
        .all(|&v| v == below)
        .then_some(LegitimacyWitness { a, j })
}

/// Whether `node` holds the privilege in `cfg`.
pub fn privileged(params: &Params, cfg: &Configuration, node: NodeId) -> Result<bool> {
    params.check_node(node)?;
    params.check_len(cfg)?;
    Ok(privileged_raw(cfg.states(), node.0))
}

/// All privileged nodes, ascending. Never empty for a valid configuration.
pub fn privileged_set(params: &Params, cfg: &Configuration) -> Vec<NodeId> {
    debug_assert_eq!(cfg.len(), params.nodes());
    (0..cfg.len())
        .filter(|&i| privileged_raw(cfg.states(), i))
        .map(NodeId)
        .collect()
}

pub fn privilege_count(params: &Params, cfg: &Configuration) -> usize {
    debug_assert_eq!(cfg.len(), params.nodes());
    (0..cfg.len())
        .filter(|&i| privileged_raw(cfg.states(), i))
        .count()
}

/// Executes the move of `node`, which must be privileged.
pub fn fire(params: &Params, cfg: &Configuration, node: NodeId) -> Result<Configuration> {
    if !privileged(params, cfg, node)? {
        return Err(Error::IllegalMove {
            node,
            config: cfg.states().to_vec(),
        });
    }
    let mut states = cfg.0.clone();
    fire_raw(&mut states, params.k, node.0);
    Ok(Configuration(states))
}

/// Returns the legitimacy witness of `cfg`, if it has one.
///
/// An all-equal configuration with value `v` is reported as `(a = v, j = n + 1)`,
/// the description with the largest split index. Every other legitimate
/// configuration has exactly one witness.
pub fn is_legitimate(params: &Params, cfg: &Configuration) -> Option<LegitimacyWitness> {
    debug_assert_eq!(cfg.len(), params.nodes());
    legitimacy_raw(cfg.states(), params.k)
}

/// State values held by no node, ascending.
pub fn absent_values(params: &Params, cfg: &Configuration) -> Vec<u32> {
    let mut present = vec![false; params.k as usize];
    for &v in cfg.states() {
        present[v as usize] = true;
    }
    present
        .iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(v, _)| v as u32)
        .collect()
}

/// Dense base-`k` index of a configuration; `x[0]` is the most significant digit.
pub fn encode(params: &Params, cfg: &Configuration) -> u64 {
    encode_raw(cfg.states(), params.k)
}

#[inline]
pub(crate) fn encode_raw(states: &[u32], k: u32) -> u64 {
    states
        .iter()
        .fold(0u64, |acc, &v| acc * u64::from(k) + u64::from(v))
}

pub fn decode(params: &Params, index: u64) -> Result<Configuration> {
    if index >= params.state_space {
        return Err(Error::IndexOutOfRange {
            index,
            size: params.state_space,
        });
    }
    let mut states = vec![0u32; params.nodes()].into_boxed_slice();
    decode_into(index, params.k, &mut states);
    Ok(Configuration(states))
}

#[inline]
pub(crate) fn decode_into(mut index: u64, k: u32, states: &mut [u32]) {
    let k = u64::from(k);
    for slot in states.iter_mut().rev() {
        *slot = (index % k) as u32;
        index /= k;
    }
}
