#![allow(dead_code)]

use chansched::hardness::{CachingInstance, Page};
use chansched::{Hop, Mode, Network, Transaction, TransactionSet};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NODES: [&str; 3] = ["A", "B", "C"];

/// Tiny consuming-mode instance on integer amounts: up to 3 nodes, 4
/// channels and 6 transactions. With `reverse` some hops run against a
/// channel's direction.
pub fn tiny_instance(seed: u64, reverse: bool) -> (Network, TransactionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nodes = rng.random_range(2..=3);
    let n_channels = rng.random_range(1..=4);
    let n_txns = rng.random_range(1..=6);
    let nodes = &NODES[..n_nodes];

    let mut chans: Vec<(String, usize, usize, f64)> = Vec::new();
    for i in 0..n_channels {
        let u = rng.random_range(0..n_nodes);
        let mut v = rng.random_range(0..n_nodes - 1);
        if v >= u {
            v += 1;
        }
        chans.push((format!("e{}", i + 1), u, v, rng.random_range(0..=6) as f64));
    }
    let mut net = Network::new(Mode::Consuming);
    for (u, id) in nodes.iter().enumerate() {
        let out: f64 = chans.iter().filter(|c| c.1 == u).map(|c| c.3).sum();
        net = net.with_node(*id, out + rng.random_range(0..=6) as f64);
    }
    for (id, u, v, cap) in &chans {
        net = net.with_channel(id.clone(), nodes[*u], nodes[*v], *cap);
    }

    let mut txns = Vec::new();
    while txns.len() < n_txns {
        let start = rng.random_range(0..n_nodes);
        let hops = rng.random_range(1..=2);
        let mut at = start;
        let mut visited = vec![start];
        let mut path = Vec::new();
        for _ in 0..hops {
            let options: Vec<(usize, bool)> = chans
                .iter()
                .enumerate()
                .filter_map(|(ci, c)| {
                    if c.1 == at && !visited.contains(&c.2) {
                        Some((ci, true))
                    } else if reverse && c.2 == at && !visited.contains(&c.1) {
                        Some((ci, false))
                    } else {
                        None
                    }
                })
                .collect();
            let Some(&(ci, fwd)) = options.choose(&mut rng) else {
                break;
            };
            let c = &chans[ci];
            at = if fwd { c.2 } else { c.1 };
            visited.push(at);
            path.push(if fwd {
                Hop::fwd(c.0.clone())
            } else {
                Hop::rev(c.0.clone())
            });
        }
        if path.is_empty() {
            continue;
        }
        txns.push(Transaction {
            time: txns.len() + 1,
            source: nodes[start].to_string(),
            dest: nodes[at].to_string(),
            path,
            value: rng.random_range(1..=4) as f64,
        });
    }
    (net, TransactionSet::new(txns).unwrap())
}

/// Random caching instance: up to 4 pages and 6 requests, integer sizes.
pub fn caching_instance(seed: u64) -> CachingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pages = rng.random_range(1..=4);
    let pages: Vec<Page> = (0..n_pages)
        .map(|i| Page {
            id: format!("p{}", i + 1),
            size: rng.random_range(1..=4) as f64,
        })
        .collect();
    let largest = pages.iter().map(|p| p.size).fold(0.0, f64::max);
    let total: f64 = pages.iter().map(|p| p.size).sum();
    let cache_size = rng.random_range(largest as u32..=total as u32) as f64;
    let n_req = rng.random_range(1..=6);
    let requests = (0..n_req)
        .map(|_| pages.choose(&mut rng).unwrap().id.clone())
        .collect();
    CachingInstance {
        cache_size,
        pages,
        requests,
        fault_budget: 4 * n_req + n_pages,
    }
}

/// Uniform coefficient array.
pub fn random_array(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
