//! Channel-graph snapshots in the `describegraph` shape.
//!
//! ```json
//! {"nodes": [{"pub_key": "02ab..", "alias": "alice"}],
//!  "edges": [{"channel_id": "7001", "node1_pub": "02ab..", "node2_pub": "03cd..", "capacity": "1000"}]}
//! ```
//!
//! Capacities are satoshis, given as a number or a decimal string, and stay
//! in satoshis. Each edge becomes one channel directed `node1 -> node2`.
//! Unknown keys are ignored.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::io::read_to_string;
use crate::model::{validate_network, Channel, Mode, Network, Node};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub pub_key: String,
    #[serde(default)]
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub channel_id: String,
    pub node1_pub: String,
    pub node2_pub: String,
    #[serde(deserialize_with = "number_or_string")]
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SnapshotGraph {
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<SnapshotEdge>,
}

fn number_or_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(x) => Ok(x),
        Raw::Str(s) => s.trim().parse().map_err(serde::de::Error::custom),
    }
}

/// How node capitals are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CapitalPolicy {
    /// Sum of outgoing capacities times the factor (at least 1).
    Slack(f64),
}

impl Default for CapitalPolicy {
    fn default() -> Self {
        CapitalPolicy::Slack(1.5)
    }
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<SnapshotGraph> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::InvalidSnapshot(e.to_string()))
}

pub fn import_snapshot(raw: &SnapshotGraph, policy: CapitalPolicy) -> Result<Network> {
    let CapitalPolicy::Slack(slack) = policy;
    if !(slack.is_finite() && slack >= 1.0) {
        return Err(Error::InvalidSnapshot(format!(
            "slack factor must be at least 1, got {slack}"
        )));
    }
    let mut seen = HashSet::new();
    for n in &raw.nodes {
        if !seen.insert(n.pub_key.as_str()) {
            return Err(Error::InvalidSnapshot(format!(
                "duplicate node {}",
                n.pub_key
            )));
        }
    }
    let mut out_sum: HashMap<&str, f64> = HashMap::new();
    let mut channels = Vec::with_capacity(raw.edges.len());
    for e in &raw.edges {
        for end in [&e.node1_pub, &e.node2_pub] {
            if !seen.contains(end.as_str()) {
                return Err(Error::InvalidSnapshot(format!(
                    "edge {} references missing node {end}",
                    e.channel_id
                )));
            }
        }
        if !(e.capacity.is_finite() && e.capacity >= 0.0) {
            return Err(Error::InvalidSnapshot(format!(
                "edge {} has capacity {}",
                e.channel_id, e.capacity
            )));
        }
        *out_sum.entry(e.node1_pub.as_str()).or_default() += e.capacity;
        channels.push(Channel {
            id: e.channel_id.clone(),
            source: e.node1_pub.clone(),
            target: e.node2_pub.clone(),
            capacity: e.capacity,
        });
    }
    let nodes = raw
        .nodes
        .iter()
        .map(|n| Node {
            id: n.pub_key.clone(),
            capital: out_sum.get(n.pub_key.as_str()).copied().unwrap_or(0.0) * slack,
        })
        .collect();
    let net = Network {
        mode: Mode::Consuming,
        nodes,
        channels,
    };
    let report = validate_network(&net);
    if !report.is_ok() {
        return Err(Error::InvalidSnapshot(report.to_string()));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(cap: &str) -> SnapshotGraph {
        serde_json::from_str(&format!(
            r#"{{"nodes":[{{"pub_key":"a"}},{{"pub_key":"b","alias":"bob"}}],
                "edges":[{{"channel_id":"1","node1_pub":"a","node2_pub":"b","capacity":{cap}}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn default_slack_scales_outgoing_sum() {
        let net = import_snapshot(&pair("1000"), CapitalPolicy::default()).unwrap();
        assert_eq!(net.node("a").unwrap().capital, 1500.0);
        assert_eq!(net.node("b").unwrap().capital, 0.0);
        assert_eq!(net.channel("1").unwrap().capacity, 1000.0);
    }

    #[test]
    fn string_capacities_parse() {
        let net = import_snapshot(&pair("\"250\""), CapitalPolicy::Slack(2.0)).unwrap();
        assert_eq!(net.node("a").unwrap().capital, 500.0);
    }

    #[test]
    fn tight_slack_still_validates() {
        let net = import_snapshot(&pair("1000"), CapitalPolicy::Slack(1.0)).unwrap();
        assert!(validate_network(&net).is_ok());
        assert_eq!(net.node("a").unwrap().capital, 1000.0);
    }

    #[test]
    fn bad_snapshots_are_rejected() {
        let mut g = pair("1000");
        g.edges[0].node2_pub = "zz".into();
        assert!(matches!(
            import_snapshot(&g, CapitalPolicy::default()),
            Err(Error::InvalidSnapshot(_))
        ));
        let mut g = pair("1000");
        g.edges[0].capacity = -1.0;
        assert!(import_snapshot(&g, CapitalPolicy::default()).is_err());
        assert!(import_snapshot(&pair("1"), CapitalPolicy::Slack(0.5)).is_err());
    }
}
