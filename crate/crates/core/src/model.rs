//! Payment network data model.
//!
//! A [`Network`] is a directed multigraph: nodes carry an initial capital and
//! channels an initial capacity. Transactions arrive one per time step with an
//! explicit path, and a [`Schedule`] lists per-channel capacity resets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num;

/// Whether executed transactions move funds.
///
/// In `NonConsuming` mode capacities and capitals change only through
/// modifications; transactions are merely checked for routability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Consuming,
    NonConsuming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub capital: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: String,
    pub source: String,
    pub target: String,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Network {
    #[serde(default)]
    pub mode: Mode,
    pub nodes: Vec<Node>,
    pub channels: Vec<Channel>,
}

impl Network {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            nodes: Vec::new(),
            channels: Vec::new(),
        }
    }

    pub fn with_node(mut self, id: impl Into<String>, capital: f64) -> Self {
        self.nodes.push(Node {
            id: id.into(),
            capital,
        });
        self
    }

    pub fn with_channel(
        mut self,
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        capacity: f64,
    ) -> Self {
        self.channels.push(Channel {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            capacity,
        });
        self
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    /// Outgoing channel indices per node index, in channel order.
    pub fn outgoing_index(&self) -> Vec<Vec<usize>> {
        let pos: HashMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (ci, c) in self.channels.iter().enumerate() {
            if let Some(&u) = pos.get(c.source.as_str()) {
                out[u].push(ci);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "fwd")]
    Forward,
    #[serde(rename = "rev")]
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub channel: String,
    pub dir: Direction,
}

impl Hop {
    pub fn fwd(channel: impl Into<String>) -> Self {
        Self {
            channel: channel.into(),
            dir: Direction::Forward,
        }
    }

    pub fn rev(channel: impl Into<String>) -> Self {
        Self {
            channel: channel.into(),
            dir: Direction::Reverse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub time: usize,
    pub source: String,
    pub dest: String,
    pub path: Vec<Hop>,
    pub value: f64,
}

/// Transactions ordered by time, exactly one per step `1..=n`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Transaction>", into = "Vec<Transaction>")]
pub struct TransactionSet(Vec<Transaction>);

impl TryFrom<Vec<Transaction>> for TransactionSet {
    type Error = Error;

    fn try_from(txns: Vec<Transaction>) -> Result<Self> {
        Self::new(txns)
    }
}

impl From<TransactionSet> for Vec<Transaction> {
    fn from(set: TransactionSet) -> Self {
        set.0
    }
}

impl TransactionSet {
    pub fn new(txns: Vec<Transaction>) -> Result<Self> {
        for (i, t) in txns.iter().enumerate() {
            if t.time != i + 1 {
                return Err(Error::MalformedTransactions(format!(
                    "expected time {} at position {}, found {}",
                    i + 1,
                    i,
                    t.time
                )));
            }
            if !(t.value.is_finite() && t.value > 0.0) {
                return Err(Error::MalformedTransactions(format!(
                    "transaction {} has non-positive value {}",
                    t.time, t.value
                )));
            }
            if t.path.is_empty() {
                return Err(Error::MalformedTransactions(format!(
                    "transaction {} has an empty path",
                    t.time
                )));
            }
        }
        Ok(Self(txns))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transaction> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Transaction] {
        &self.0
    }

    /// Transaction at step `t` (1-based).
    pub fn at(&self, t: usize) -> Option<&Transaction> {
        t.checked_sub(1).and_then(|i| self.0.get(i))
    }
}

impl<'a> IntoIterator for &'a TransactionSet {
    type Item = &'a Transaction;
    type IntoIter = std::slice::Iter<'a, Transaction>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modification {
    pub time: usize,
    pub value: f64,
}

/// Per-channel capacity resets. Keys iterate in id order, which keeps the
/// JSON form canonical.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(BTreeMap<String, Vec<Modification>>);

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a modification; callers are responsible for time ordering.
    pub fn push(&mut self, channel: impl Into<String>, time: usize, value: f64) {
        self.0
            .entry(channel.into())
            .or_default()
            .push(Modification { time, value });
    }

    pub fn with(mut self, channel: impl Into<String>, time: usize, value: f64) -> Self {
        self.push(channel, time, value);
        self
    }

    pub fn get(&self, channel: &str) -> &[Modification] {
        self.0.get(channel).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[Modification])> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Total number of stored modifications.
    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops channels with no entries.
    pub fn compact(&mut self) {
        self.0.retain(|_, v| !v.is_empty());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkIssue {
    DuplicateNodeId,
    DuplicateChannelId,
    UnknownEndpoint,
    SelfLoop,
    NegativeCapacity,
    NegativeCapital,
    CapitalExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkViolation {
    pub issue: NetworkIssue,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<NetworkViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?} at {}", v.issue, v.id)?;
        }
        Ok(())
    }
}

/// Checks the structural invariants and the capital constraint at t = 0.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |issue, id: &str| {
        violations.push(NetworkViolation {
            issue,
            id: id.to_string(),
        })
    };

    let mut seen = HashSet::new();
    for n in &net.nodes {
        if !seen.insert(n.id.as_str()) {
            push(NetworkIssue::DuplicateNodeId, &n.id);
        }
        if !(n.capital >= 0.0) {
            push(NetworkIssue::NegativeCapital, &n.id);
        }
    }
    let mut seen_ch = HashSet::new();
    let mut out_sum: HashMap<&str, f64> = HashMap::new();
    for c in &net.channels {
        if !seen_ch.insert(c.id.as_str()) {
            push(NetworkIssue::DuplicateChannelId, &c.id);
        }
        if !seen.contains(c.source.as_str()) || !seen.contains(c.target.as_str()) {
            push(NetworkIssue::UnknownEndpoint, &c.id);
        }
        if c.source == c.target {
            push(NetworkIssue::SelfLoop, &c.id);
        }
        if !(c.capacity >= 0.0) {
            push(NetworkIssue::NegativeCapacity, &c.id);
        }
        *out_sum.entry(c.source.as_str()).or_default() += c.capacity;
    }
    for n in &net.nodes {
        if let Some(&s) = out_sum.get(n.id.as_str()) {
            if !num::le(s, n.capital) {
                push(NetworkIssue::CapitalExceeded, &n.id);
            }
        }
    }
    ValidationReport { violations }
}

/// Capital of `node` after the first `t` transactions have executed.
///
/// Independent of any schedule: every transaction up to `t` is assumed to
/// execute. In non-consuming mode this is the initial capital.
pub fn capital_at(net: &Network, txns: &TransactionSet, node: &str, t: usize) -> Result<f64> {
    let n = net
        .node(node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
    let mut capital = n.capital;
    if net.mode == Mode::NonConsuming {
        return Ok(capital);
    }
    for tx in txns.iter().take(t) {
        if tx.source == node {
            capital -= tx.value;
        }
        if tx.dest == node {
            capital += tx.value;
        }
    }
    Ok(capital)
}

/// One resolved transaction step.
#[derive(Debug, Clone)]
pub struct Step {
    pub source: usize,
    pub dest: usize,
    pub hops: Vec<(usize, Direction)>,
    pub value: f64,
}

/// A network and transaction set with ids resolved to dense indices.
///
/// Construction checks every precondition the solvers rely on: a valid
/// network, known ids, and node-contiguous paths without repeated channels.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mode: Mode,
    pub node_ids: Vec<String>,
    pub channel_ids: Vec<String>,
    pub capital0: Vec<f64>,
    pub capacity0: Vec<f64>,
    pub tail: Vec<usize>,
    pub head: Vec<usize>,
    pub outgoing: Vec<Vec<usize>>,
    pub steps: Vec<Step>,
    node_pos: HashMap<String, usize>,
    channel_pos: HashMap<String, usize>,
}

impl Instance {
    pub fn new(net: &Network, txns: &TransactionSet) -> Result<Self> {
        let report = validate_network(net);
        if !report.is_ok() {
            return Err(Error::InvalidNetwork(report.to_string()));
        }
        let node_pos: HashMap<String, usize> = net
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let channel_pos: HashMap<String, usize> = net
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        let tail: Vec<usize> = net.channels.iter().map(|c| node_pos[&c.source]).collect();
        let head: Vec<usize> = net.channels.iter().map(|c| node_pos[&c.target]).collect();

        let mut steps = Vec::with_capacity(txns.len());
        for tx in txns {
            let source = *node_pos
                .get(&tx.source)
                .ok_or_else(|| Error::UnknownNode(tx.source.clone()))?;
            let dest = *node_pos
                .get(&tx.dest)
                .ok_or_else(|| Error::UnknownNode(tx.dest.clone()))?;
            let mut hops = Vec::with_capacity(tx.path.len());
            let mut at = source;
            let mut used = HashSet::new();
            for hop in &tx.path {
                let ci = *channel_pos
                    .get(&hop.channel)
                    .ok_or_else(|| Error::UnknownChannel(hop.channel.clone()))?;
                if !used.insert(ci) {
                    return Err(Error::MalformedTransactions(format!(
                        "transaction {} uses channel {} twice",
                        tx.time, hop.channel
                    )));
                }
                let (from, to) = match hop.dir {
                    Direction::Forward => (tail[ci], head[ci]),
                    Direction::Reverse => (head[ci], tail[ci]),
                };
                if from != at {
                    return Err(Error::MalformedTransactions(format!(
                        "transaction {} path is not contiguous at channel {}",
                        tx.time, hop.channel
                    )));
                }
                at = to;
                hops.push((ci, hop.dir));
            }
            if at != dest {
                return Err(Error::MalformedTransactions(format!(
                    "transaction {} path ends at {} instead of {}",
                    tx.time, net.nodes[at].id, tx.dest
                )));
            }
            steps.push(Step {
                source,
                dest,
                hops,
                value: tx.value,
            });
        }

        Ok(Self {
            mode: net.mode,
            node_ids: net.nodes.iter().map(|n| n.id.clone()).collect(),
            channel_ids: net.channels.iter().map(|c| c.id.clone()).collect(),
            capital0: net.nodes.iter().map(|n| n.capital).collect(),
            capacity0: net.channels.iter().map(|c| c.capacity).collect(),
            tail,
            head,
            outgoing: net.outgoing_index(),
            steps,
            node_pos,
            channel_pos,
        })
    }

    /// Number of time steps.
    pub fn n(&self) -> usize {
        self.steps.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channel_ids.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.node_pos
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn channel_index(&self, id: &str) -> Result<usize> {
        self.channel_pos
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownChannel(id.to_string()))
    }

    /// Capitals assuming every transaction executes:
    /// `table[u][t]` for `t` in `0..=n`.
    pub fn capital_table(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut table: Vec<Vec<f64>> = self
            .capital0
            .iter()
            .map(|&c| {
                let mut row = Vec::with_capacity(n + 1);
                row.push(c);
                row
            })
            .collect();
        let mut cur = self.capital0.clone();
        for step in &self.steps {
            if self.mode == Mode::Consuming {
                cur[step.source] -= step.value;
                cur[step.dest] += step.value;
            }
            for (u, row) in table.iter_mut().enumerate() {
                row.push(cur[u]);
            }
        }
        table
    }

    /// Net capacity change of every channel caused by the flow of step `t`
    /// (1-based), assuming it executes. Zero in non-consuming mode.
    pub fn flow_delta(&self, t: usize) -> Vec<(usize, f64)> {
        if self.mode == Mode::NonConsuming {
            return Vec::new();
        }
        let step = &self.steps[t - 1];
        step.hops
            .iter()
            .map(|&(ci, dir)| match dir {
                Direction::Forward => (ci, -step.value),
                Direction::Reverse => (ci, step.value),
            })
            .collect()
    }

    /// Validates a schedule against this instance and groups it by step:
    /// `result[t - 1]` lists `(channel, lambda)` pairs applied at step `t`.
    pub fn resolve_schedule(&self, sched: &Schedule) -> Result<Vec<Vec<(usize, f64)>>> {
        let n = self.n();
        let mut by_step = vec![Vec::new(); n];
        for (id, mods) in sched.channels() {
            let ci = self.channel_index(id)?;
            let mut last = 0;
            for m in mods {
                if m.time <= last {
                    return Err(Error::MalformedSchedule(format!(
                        "channel {id}: times must be strictly increasing (got {} after {last})",
                        m.time
                    )));
                }
                if m.time > n {
                    return Err(Error::MalformedSchedule(format!(
                        "channel {id}: time {} outside 1..={n}",
                        m.time
                    )));
                }
                if !(m.value.is_finite() && m.value >= 0.0) {
                    return Err(Error::MalformedSchedule(format!(
                        "channel {id}: capacity {} at time {} is negative",
                        m.value, m.time
                    )));
                }
                last = m.time;
                by_step[m.time - 1].push((ci, m.value));
            }
        }
        for mods in &mut by_step {
            mods.sort_by_key(|&(ci, _)| ci);
        }
        Ok(by_step)
    }
}
