//! Exact fault caching by dynamic programming over cache contents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardness::{CachingInstance, CachingPolicy};
use crate::num;

pub const MAX_CACHE_PAGES: usize = 10;
pub const MAX_CACHE_REQUESTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachingOptimum {
    /// Fewest pages brought in.
    pub faults: usize,
    /// Fewest brings plus drops; the quantity the scheduling reduction
    /// preserves.
    pub changes: usize,
    /// A policy attaining `changes`.
    pub policy: CachingPolicy,
}

/// Minimum cost over sequences of cache contents serving every request,
/// with one sequence attaining it (entry 0 is the empty starting cache).
fn best(ci: &CachingInstance, cost: impl Fn(u32, u32) -> usize) -> (usize, Vec<u32>) {
    let p = ci.pages.len();
    let n = ci.requests.len();
    let sizes: Vec<f64> = ci.pages.iter().map(|pg| pg.size).collect();
    let states = 1u32 << p;
    let fits: Vec<bool> = (0..states)
        .map(|s| {
            let w: f64 = (0..p).filter(|i| s >> i & 1 == 1).map(|i| sizes[i]).sum();
            num::le(w, ci.cache_size)
        })
        .collect();
    let req: Vec<u32> = ci
        .requests
        .iter()
        .map(|r| ci.pages.iter().position(|pg| &pg.id == r).unwrap() as u32)
        .collect();

    let inf = usize::MAX / 2;
    let mut dist = vec![inf; states as usize];
    dist[0] = 0;
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(n);
    for &r in &req {
        let mut next = vec![inf; states as usize];
        let mut from = vec![0u32; states as usize];
        for s2 in 0..states {
            if s2 >> r & 1 == 0 || !fits[s2 as usize] {
                continue;
            }
            for s1 in 0..states {
                let d = dist[s1 as usize];
                if d >= inf {
                    continue;
                }
                let c = d + cost(s1, s2);
                if c < next[s2 as usize] {
                    next[s2 as usize] = c;
                    from[s2 as usize] = s1;
                }
            }
        }
        dist = next;
        back.push(from);
    }
    let (mut state, total) = dist
        .iter()
        .enumerate()
        .min_by_key(|&(s, &d)| (d, s))
        .map(|(s, &d)| (s as u32, d))
        .unwrap();
    let mut path = vec![state];
    for from in back.iter().rev() {
        state = from[state as usize];
        path.push(state);
    }
    path.reverse();
    (total, path)
}

pub fn brute_force_caching(ci: &CachingInstance) -> Result<CachingOptimum> {
    ci.validate()?;
    if ci.pages.len() > MAX_CACHE_PAGES || ci.requests.len() > MAX_CACHE_REQUESTS {
        return Err(Error::OracleCap(format!(
            "{} pages and {} requests (limits {MAX_CACHE_PAGES} and {MAX_CACHE_REQUESTS})",
            ci.pages.len(),
            ci.requests.len()
        )));
    }
    let (faults, _) = best(ci, |a, b| (b & !a).count_ones() as usize);
    let (changes, path) = best(ci, |a, b| (a ^ b).count_ones() as usize);
    let mut policy = CachingPolicy::default();
    for (t, pair) in path.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        for (i, page) in ci.pages.iter().enumerate() {
            let bit = 1u32 << i;
            if a & bit != 0 && b & bit == 0 {
                policy.d.entry(t + 1).or_default().insert(page.id.clone());
            }
            if a & bit == 0 && b & bit != 0 {
                policy.b.entry(t + 1).or_default().insert(page.id.clone());
            }
        }
    }
    Ok(CachingOptimum {
        faults,
        changes,
        policy,
    })
}
