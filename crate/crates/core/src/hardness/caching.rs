//! Fault caching as channel scheduling, and back.
//!
//! Each page becomes a channel from `v1` to `v2`; `v1` holds capital `W`,
//! and request `i` becomes a payment of the page's size over its channel.
//! A channel holding at least the page size is a cached page, so a
//! schedule's changes are exactly a policy's brings and drops.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Hop, Mode, Network, Schedule, Transaction, TransactionSet};
use crate::num;
use crate::sim::simulate;
use crate::PenaltyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub id: String,
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachingInstance {
    #[serde(rename = "W")]
    pub cache_size: f64,
    pub pages: Vec<Page>,
    pub requests: Vec<String>,
    #[serde(rename = "F")]
    pub fault_budget: usize,
}

impl CachingInstance {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCaching(msg));
        if !(self.cache_size.is_finite() && self.cache_size >= 0.0) {
            return bad(format!("cache size {} is negative", self.cache_size));
        }
        let mut seen = BTreeSet::new();
        for p in &self.pages {
            if !seen.insert(p.id.as_str()) {
                return bad(format!("duplicate page {}", p.id));
            }
            if !(p.size.is_finite() && p.size > 0.0) {
                return bad(format!("page {} has non-positive size {}", p.id, p.size));
            }
            if !num::le(p.size, self.cache_size) {
                return bad(format!("page {} is larger than the cache", p.id));
            }
        }
        for r in &self.requests {
            if !seen.contains(r.as_str()) {
                return bad(format!("request for unknown page {r}"));
            }
        }
        Ok(())
    }

    fn page_index(&self) -> HashMap<&str, usize> {
        self.pages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect()
    }

    /// Page index requested at each step (0-based steps).
    fn request_indices(&self) -> Vec<usize> {
        let idx = self.page_index();
        self.requests.iter().map(|r| idx[r.as_str()]).collect()
    }
}

/// Channel id standing for page `i` (0-based).
fn channel_for(i: usize) -> String {
    format!("e{}", i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub network: Network,
    pub transactions: TransactionSet,
    pub budget: usize,
}

pub fn reduce_caching(ci: &CachingInstance) -> Result<Reduction> {
    reduce_caching_with_mode(ci, Mode::NonConsuming)
}

/// The reduction with an explicit mode. In consuming mode repeated requests
/// drain `v1`, so the value-preservation argument no longer applies.
pub fn reduce_caching_with_mode(ci: &CachingInstance, mode: Mode) -> Result<Reduction> {
    ci.validate()?;
    let mut net = Network::new(mode)
        .with_node("v1", ci.cache_size)
        .with_node("v2", 0.0);
    for i in 0..ci.pages.len() {
        net = net.with_channel(channel_for(i), "v1", "v2", 0.0);
    }
    let txns = ci
        .request_indices()
        .into_iter()
        .enumerate()
        .map(|(t, p)| Transaction {
            time: t + 1,
            source: "v1".into(),
            dest: "v2".into(),
            path: vec![Hop::fwd(channel_for(p))],
            value: ci.pages[p].size,
        })
        .collect();
    Ok(Reduction {
        network: net,
        transactions: TransactionSet::new(txns)?,
        budget: ci.fault_budget,
    })
}

/// Pages brought into and dropped from the cache, keyed by 1-based step.
/// Drops at a step happen before brings, and both before the request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CachingPolicy {
    pub b: BTreeMap<usize, BTreeSet<String>>,
    pub d: BTreeMap<usize, BTreeSet<String>>,
}

impl CachingPolicy {
    pub fn faults(&self) -> usize {
        self.b.values().map(BTreeSet::len).sum()
    }

    /// Brings plus drops.
    pub fn changes(&self) -> usize {
        self.faults() + self.d.values().map(BTreeSet::len).sum::<usize>()
    }

    fn bring(&mut self, t: usize, page: &str) {
        self.b.entry(t).or_default().insert(page.to_string());
    }

    fn drop_page(&mut self, t: usize, page: &str) {
        self.d.entry(t).or_default().insert(page.to_string());
    }
}

/// Replays a policy from an empty cache and checks every request is served
/// without the cache outgrowing `W`.
pub fn check_policy(ci: &CachingInstance, policy: &CachingPolicy) -> Result<()> {
    ci.validate()?;
    let n = ci.requests.len();
    let idx = ci.page_index();
    let bad = |msg: String| Err(Error::InvalidCaching(msg));
    for t in policy.b.keys().chain(policy.d.keys()) {
        if *t == 0 || *t > n {
            return bad(format!("policy step {t} outside 1..={n}"));
        }
    }
    let mut cache: BTreeSet<&str> = BTreeSet::new();
    let empty = BTreeSet::new();
    for t in 1..=n {
        for p in policy.d.get(&t).unwrap_or(&empty) {
            if !cache.remove(p.as_str()) {
                return bad(format!("step {t} drops {p}, which is not cached"));
            }
        }
        for p in policy.b.get(&t).unwrap_or(&empty) {
            let Some(&i) = idx.get(p.as_str()) else {
                return bad(format!("step {t} brings unknown page {p}"));
            };
            if !cache.insert(ci.pages[i].id.as_str()) {
                return bad(format!("step {t} brings {p}, which is already cached"));
            }
        }
        let used: f64 = cache.iter().map(|p| ci.pages[idx[p]].size).sum();
        if !num::le(used, ci.cache_size) {
            return bad(format!("cache holds {used} > W at step {t}"));
        }
        let want = &ci.requests[t - 1];
        if !cache.contains(want.as_str()) {
            return bad(format!("step {t} requests {want}, which is not cached"));
        }
    }
    Ok(())
}

/// The schedule that sets a page's channel to its size when brought and to
/// zero when dropped.
pub fn policy_to_schedule(ci: &CachingInstance, policy: &CachingPolicy) -> Result<Schedule> {
    check_policy(ci, policy)?;
    let idx = ci.page_index();
    let mut entries: Entries = vec![BTreeMap::new(); ci.pages.len()];
    for (&t, pages) in &policy.d {
        for p in pages {
            entries[idx[p.as_str()]].insert(t, 0.0);
        }
    }
    for (&t, pages) in &policy.b {
        for p in pages {
            let i = idx[p.as_str()];
            entries[i].insert(t, ci.pages[i].size);
        }
    }
    Ok(schedule_of(&entries))
}

fn schedule_of(entries: &Entries) -> Schedule {
    let mut sched = Schedule::new();
    for (i, chan) in entries.iter().enumerate() {
        for (&t, &lambda) in chan {
            sched.push(channel_for(i), t, lambda);
        }
    }
    sched
}

/// Per-channel modification lists as `(time, lambda)` pairs, indexed by page.
type Entries = Vec<BTreeMap<usize, f64>>;

fn entries_of(ci: &CachingInstance, sched: &Schedule) -> Result<Entries> {
    let mut out = vec![BTreeMap::new(); ci.pages.len()];
    for (id, mods) in sched.channels() {
        let i = (0..ci.pages.len())
            .find(|&i| channel_for(i) == id)
            .ok_or_else(|| Error::UnknownChannel(id.to_string()))?;
        for m in mods {
            out[i].insert(m.time, m.value);
        }
    }
    Ok(out)
}

fn capacity_before(entries: &BTreeMap<usize, f64>, t: usize) -> f64 {
    entries.range(..t).next_back().map_or(0.0, |(_, &v)| v)
}

/// Checks `sched` is a feasible schedule for the reduced instance within
/// the fault budget, then rewrites it so every channel only ever holds zero
/// or its page size and raises happen only when the page is requested.
pub fn normalize_schedule(ci: &CachingInstance, sched: &Schedule) -> Result<Schedule> {
    let red = reduce_caching(ci)?;
    let trace = simulate(
        &red.network,
        &red.transactions,
        sched,
        &PenaltyConfig::for_steps(ci.requests.len()),
    )?;
    if !trace.is_clean() {
        return Err(Error::InfeasibleSchedule(format!(
            "{} skipped steps, {} capital violations",
            trace.skipped.len(),
            trace.violations.len()
        )));
    }
    if trace.sc > ci.fault_budget {
        return Err(Error::InfeasibleSchedule(format!(
            "{} changes exceed the budget {}",
            trace.sc, ci.fault_budget
        )));
    }
    let n = ci.requests.len();
    let req = ci.request_indices();
    let mut entries = entries_of(ci, sched)?;

    // Delay raises on channels nobody asks for until their page is requested.
    for t in 1..=n {
        for (i, chan) in entries.iter_mut().enumerate() {
            if i == req[t - 1] {
                continue;
            }
            let Some(&lambda) = chan.get(&t) else {
                continue;
            };
            let before = capacity_before(chan, t);
            if lambda < before {
                continue;
            }
            chan.remove(&t);
            if lambda > before && t < n && !chan.contains_key(&(t + 1)) {
                chan.insert(t + 1, lambda);
            }
        }
    }

    // Every value is now either enough for the page or useless.
    for (i, chan) in entries.iter_mut().enumerate() {
        let size = ci.pages[i].size;
        for lambda in chan.values_mut() {
            *lambda = if num::ge(*lambda, size) { size } else { 0.0 };
        }
        let mut prev = 0.0;
        chan.retain(|_, lambda| {
            let keep = *lambda != prev;
            prev = *lambda;
            keep
        });
    }

    Ok(schedule_of(&entries))
}

/// Turns a feasible schedule for the reduced instance into a caching policy
/// with no more changes than the schedule.
pub fn lift_schedule(ci: &CachingInstance, sched: &Schedule) -> Result<CachingPolicy> {
    let normalized = normalize_schedule(ci, sched)?;
    let entries = entries_of(ci, &normalized)?;
    let mut policy = CachingPolicy::default();
    for (i, chan) in entries.iter().enumerate() {
        let id = &ci.pages[i].id;
        let mut prev = 0.0;
        for (&t, &lambda) in chan {
            if lambda > prev {
                policy.bring(t, id);
            } else {
                policy.drop_page(t, id);
            }
            prev = lambda;
        }
    }
    check_policy(ci, &policy)?;
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn instance(sizes: &[f64], w: f64, reqs: &[&str], f: usize) -> CachingInstance {
        CachingInstance {
            cache_size: w,
            pages: sizes
                .iter()
                .enumerate()
                .map(|(i, &size)| Page {
                    id: format!("p{}", i + 1),
                    size,
                })
                .collect(),
            requests: reqs.iter().map(|s| s.to_string()).collect(),
            fault_budget: f,
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reduction_shape() {
        let ci = instance(&[2.0, 3.0], 4.0, &["p1", "p2", "p1"], 5);
        let red = reduce_caching(&ci).unwrap();
        assert_eq!(red.network.nodes.len(), 2);
        assert_eq!(red.network.mode, Mode::NonConsuming);
        assert_eq!(red.network.channels.len(), 2);
        assert!(red
            .network
            .channels
            .iter()
            .all(|c| c.source == "v1" && c.target == "v2" && c.capacity == 0.0));
        let values: Vec<f64> = red.transactions.iter().map(|t| t.value).collect();
        assert_eq!(values, vec![2.0, 3.0, 2.0]);
        assert_eq!(red.transactions.at(2).unwrap().path[0].channel, "e2");
        assert_eq!(red.budget, 5);
    }

    #[test]
    fn file_format_keys() {
        let json = r#"{"W":4.0,"pages":[{"id":"p1","size":2.0}],"requests":["p1"],"F":3}"#;
        let ci: CachingInstance = serde_json::from_str(json).unwrap();
        assert_eq!(ci.cache_size, 4.0);
        assert_eq!(ci.fault_budget, 3);
        assert_eq!(serde_json::to_string(&ci).unwrap(), json);
    }

    #[test]
    fn invalid_instances_are_rejected() {
        assert!(instance(&[5.0], 4.0, &["p1"], 1).validate().is_err());
        assert!(instance(&[1.0], 4.0, &["p9"], 1).validate().is_err());
        assert!(instance(&[0.0], 4.0, &["p1"], 1).validate().is_err());
    }

    #[test]
    fn single_bring_lifts_to_single_fault() {
        let ci = instance(&[2.0], 4.0, &["p1"], 1);
        let policy = lift_schedule(&ci, &Schedule::new().with("e1", 1, 2.0)).unwrap();
        assert_eq!(policy.b, BTreeMap::from([(1, set(&["p1"]))]));
        assert!(policy.d.is_empty());
    }

    #[test]
    fn oversized_raise_is_lowered_to_page_size() {
        let ci = instance(&[2.0], 10.0, &["p1", "p1"], 1);
        let sched = Schedule::new().with("e1", 1, 10.0);
        let norm = normalize_schedule(&ci, &sched).unwrap();
        assert_eq!(norm, Schedule::new().with("e1", 1, 2.0));
        assert_eq!(lift_schedule(&ci, &sched).unwrap().changes(), 1);
    }

    #[test]
    fn early_raise_is_delayed_to_its_request() {
        let ci = instance(&[2.0, 2.0], 4.0, &["p1", "p1", "p2"], 2);
        let sched = Schedule::new().with("e1", 1, 2.0).with("e2", 1, 2.0);
        let norm = normalize_schedule(&ci, &sched).unwrap();
        assert_eq!(norm, Schedule::new().with("e1", 1, 2.0).with("e2", 3, 2.0));
    }

    #[test]
    fn raise_never_requested_is_removed() {
        let ci = instance(&[2.0, 2.0], 4.0, &["p1", "p1"], 2);
        let sched = Schedule::new().with("e1", 1, 2.0).with("e2", 2, 1.0);
        let norm = normalize_schedule(&ci, &sched).unwrap();
        assert_eq!(norm, Schedule::new().with("e1", 1, 2.0));
    }

    #[test]
    fn swap_keeps_its_drop() {
        let ci = instance(&[3.0, 3.0], 4.0, &["p1", "p2", "p1", "p2"], 7);
        let sched = Schedule::new()
            .with("e1", 1, 3.0)
            .with("e1", 2, 0.0)
            .with("e1", 3, 3.0)
            .with("e1", 4, 0.5)
            .with("e2", 2, 3.0)
            .with("e2", 3, 1.0)
            .with("e2", 4, 3.0);
        let policy = lift_schedule(&ci, &sched).unwrap();
        assert_eq!(policy.faults(), 4);
        assert_eq!(policy.changes(), 7);
        let back = policy_to_schedule(&ci, &policy).unwrap();
        assert_eq!(lift_schedule(&ci, &back).unwrap(), policy);
    }

    #[test]
    fn infeasible_or_over_budget_schedules_are_rejected() {
        let ci = instance(&[2.0], 4.0, &["p1"], 1);
        assert!(matches!(
            lift_schedule(&ci, &Schedule::new()),
            Err(Error::InfeasibleSchedule(_))
        ));
        let ci0 = instance(&[2.0], 4.0, &["p1"], 0);
        assert!(matches!(
            lift_schedule(&ci0, &Schedule::new().with("e1", 1, 2.0)),
            Err(Error::InfeasibleSchedule(_))
        ));
    }

    #[test]
    fn policy_checks() {
        let ci = instance(&[3.0, 3.0], 4.0, &["p1", "p2"], 4);
        let mut ok = CachingPolicy::default();
        ok.bring(1, "p1");
        ok.drop_page(2, "p1");
        ok.bring(2, "p2");
        check_policy(&ci, &ok).unwrap();

        let mut full = CachingPolicy::default();
        full.bring(1, "p1");
        full.bring(2, "p2");
        assert!(check_policy(&ci, &full).is_err());

        let mut missing = CachingPolicy::default();
        missing.bring(1, "p1");
        assert!(check_policy(&ci, &missing).is_err());
    }
}
