//! Connected subsampling and random transaction workloads.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hop, Network, Transaction, TransactionSet};

fn node_positions(net: &Network) -> HashMap<&str, usize> {
    net.nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect()
}

/// Undirected neighbour lists, sorted and deduplicated.
fn undirected_adjacency(net: &Network) -> Vec<Vec<usize>> {
    let pos = node_positions(net);
    let mut adj = vec![Vec::new(); net.nodes.len()];
    for c in &net.channels {
        if let (Some(&u), Some(&v)) = (pos.get(c.source.as_str()), pos.get(c.target.as_str())) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    adj
}

fn component_sizes(adj: &[Vec<usize>]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut sizes = Vec::new();
    for s in 0..adj.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut count = 0;
        let mut stack = vec![s];
        comp[s] = id;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    stack.push(v);
                }
            }
        }
        sizes.push(count);
    }
    comp.iter().map(|&c| sizes[c]).collect()
}

/// Breadth-first sample of `target` nodes from a seeded random start.
///
/// The start is drawn among nodes whose weak component holds at least
/// `target` nodes. Node order, capitals, mode and induced channels are
/// carried over from `net`.
pub fn sample_connected_subgraph(net: &Network, target: usize, seed: u64) -> Result<Network> {
    if target == 0 || target > net.nodes.len() {
        return Err(Error::Sampling(format!(
            "target {target} outside 1..={}",
            net.nodes.len()
        )));
    }
    let adj = undirected_adjacency(net);
    let sizes = component_sizes(&adj);
    let starts: Vec<usize> = (0..adj.len()).filter(|&u| sizes[u] >= target).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let &start = starts.choose(&mut rng).ok_or_else(|| {
        Error::Sampling(format!("no weakly connected component has {target} nodes"))
    })?;

    let mut keep = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    keep[start] = true;
    let mut taken = 1;
    'bfs: while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if taken == target {
                break 'bfs;
            }
            if !keep[v] {
                keep[v] = true;
                taken += 1;
                queue.push_back(v);
            }
        }
    }

    let kept: HashSet<&str> = net
        .nodes
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(n, _)| n.id.as_str())
        .collect();
    Ok(Network {
        mode: net.mode,
        nodes: net
            .nodes
            .iter()
            .filter(|n| kept.contains(n.id.as_str()))
            .cloned()
            .collect(),
        channels: net
            .channels
            .iter()
            .filter(|c| kept.contains(c.source.as_str()) && kept.contains(c.target.as_str()))
            .cloned()
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Workload("count must be at least 1".into()));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi) {
            return Err(Error::Workload(format!(
                "value range [{}, {}] must satisfy 0 < lo <= hi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Forward-directed routing tables over a network.
struct Router<'a> {
    net: &'a Network,
    /// `(channel index, head)` per tail, sorted by channel id.
    out: Vec<Vec<(usize, usize)>>,
    /// `(tail)` per head.
    inc: Vec<Vec<usize>>,
}

impl<'a> Router<'a> {
    fn new(net: &'a Network) -> Self {
        let pos = node_positions(net);
        let mut out = vec![Vec::new(); net.nodes.len()];
        let mut inc = vec![Vec::new(); net.nodes.len()];
        for (ci, c) in net.channels.iter().enumerate() {
            if let (Some(&u), Some(&v)) = (pos.get(c.source.as_str()), pos.get(c.target.as_str())) {
                out[u].push((ci, v));
                inc[v].push(u);
            }
        }
        for row in &mut out {
            row.sort_by(|a, b| net.channels[a.0].id.cmp(&net.channels[b.0].id));
        }
        Self { net, out, inc }
    }

    fn reachable(&self, s: usize) -> Vec<usize> {
        let mut seen = vec![false; self.out.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(_, v) in &self.out[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        (0..seen.len()).filter(|&v| v != s && seen[v]).collect()
    }

    /// Shortest-hop path, lexicographically smallest channel id sequence.
    fn path(&self, s: usize, d: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.inc.len()];
        dist[d] = 0;
        let mut queue = VecDeque::from([d]);
        while let Some(v) = queue.pop_front() {
            for &u in &self.inc[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let mut path = Vec::with_capacity(dist[s]);
        let mut u = s;
        while u != d {
            let &(ci, v) = self.out[u]
                .iter()
                .find(|&&(_, v)| dist[v] != usize::MAX && dist[v] + 1 == dist[u])
                .expect("a reachable node has a next hop");
            path.push(ci);
            u = v;
        }
        path
    }
}

/// Random transactions over shortest-hop forward paths.
///
/// Each step draws a source uniformly among nodes that reach some other
/// node, then a destination uniformly among the nodes it reaches.
pub fn gen_transactions(net: &Network, spec: &WorkloadSpec) -> Result<TransactionSet> {
    spec.validate()?;
    let router = Router::new(net);
    let reach: Vec<Vec<usize>> = (0..net.nodes.len()).map(|s| router.reachable(s)).collect();
    let sources: Vec<usize> = (0..reach.len()).filter(|&s| !reach[s].is_empty()).collect();
    if sources.is_empty() {
        return Err(Error::Workload("no node reaches another node".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut txns = Vec::with_capacity(spec.count);
    for time in 1..=spec.count {
        let &s = sources.choose(&mut rng).expect("non-empty");
        let &d = reach[s].choose(&mut rng).expect("non-empty");
        let value = if spec.lo == spec.hi {
            spec.lo
        } else {
            rng.random_range(spec.lo..=spec.hi)
        };
        txns.push(Transaction {
            time,
            source: net.nodes[s].id.clone(),
            dest: net.nodes[d].id.clone(),
            path: router
                .path(s, d)
                .into_iter()
                .map(|ci| Hop::fwd(router.net.channels[ci].id.clone()))
                .collect(),
            value,
        });
    }
    TransactionSet::new(txns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_network, Instance, Mode};

    fn single_channel() -> Network {
        Network::new(Mode::Consuming)
            .with_node("A", 10.0)
            .with_node("B", 10.0)
            .with_channel("e1", "A", "B", 5.0)
    }

    fn ladder() -> Network {
        // a -> b -> d and a -> c -> d, plus an isolated pair x -> y
        Network::new(Mode::Consuming)
            .with_node("a", 10.0)
            .with_node("b", 10.0)
            .with_node("c", 10.0)
            .with_node("d", 0.0)
            .with_node("x", 10.0)
            .with_node("y", 0.0)
            .with_channel("k2", "a", "c", 1.0)
            .with_channel("k1", "a", "b", 1.0)
            .with_channel("k4", "c", "d", 1.0)
            .with_channel("k3", "b", "d", 1.0)
            .with_channel("k5", "x", "y", 1.0)
    }

    #[test]
    fn full_size_sample_is_identity_on_nodes() {
        let net = ladder();
        let sub = sample_connected_subgraph(&net, 4, 9).unwrap();
        let ids: Vec<&str> = sub.nodes.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "d"]);
        assert_eq!(sub.channels.len(), 4);
    }

    #[test]
    fn single_node_sample_has_no_channels() {
        let sub = sample_connected_subgraph(&ladder(), 1, 3).unwrap();
        assert_eq!(sub.nodes.len(), 1);
        assert!(sub.channels.is_empty());
    }

    #[test]
    fn sampling_is_seeded_and_checked() {
        let net = ladder();
        for seed in 0..10 {
            let a = sample_connected_subgraph(&net, 3, seed).unwrap();
            assert_eq!(a, sample_connected_subgraph(&net, 3, seed).unwrap());
            assert!(validate_network(&a).is_ok());
            assert_eq!(a.nodes.len(), 3);
        }
        assert!(sample_connected_subgraph(&net, 5, 0).is_err());
        assert!(sample_connected_subgraph(&net, 0, 0).is_err());
    }

    #[test]
    fn single_channel_workload() {
        let spec = WorkloadSpec {
            count: 1,
            lo: 1.0,
            hi: 4.0,
            seed: 5,
        };
        let txns = gen_transactions(&single_channel(), &spec).unwrap();
        let tx = txns.at(1).unwrap();
        assert_eq!((tx.source.as_str(), tx.dest.as_str()), ("A", "B"));
        assert_eq!(tx.path, vec![Hop::fwd("e1")]);
        assert!((1.0..=4.0).contains(&tx.value));
    }

    #[test]
    fn degenerate_range_is_exact() {
        let spec = WorkloadSpec {
            count: 20,
            lo: 2.5,
            hi: 2.5,
            seed: 1,
        };
        let txns = gen_transactions(&ladder(), &spec).unwrap();
        assert!(txns.iter().all(|t| t.value == 2.5));
        assert!(Instance::new(&ladder(), &txns).is_ok());
    }

    #[test]
    fn ties_break_on_smallest_channel_ids() {
        let net = ladder();
        let router = Router::new(&net);
        let ids: Vec<&str> = router
            .path(0, 3)
            .into_iter()
            .map(|c| net.channels[c].id.as_str())
            .collect();
        assert_eq!(ids, ["k1", "k3"]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = WorkloadSpec {
            count: 1,
            lo: 3.0,
            hi: 2.0,
            seed: 0,
        };
        assert!(gen_transactions(&single_channel(), &bad).is_err());
        let lonely = Network::new(Mode::Consuming).with_node("A", 1.0);
        let spec = WorkloadSpec {
            count: 1,
            lo: 1.0,
            hi: 1.0,
            seed: 0,
        };
        assert!(matches!(
            gen_transactions(&lonely, &spec),
            Err(Error::Workload(_))
        ));
    }
}
