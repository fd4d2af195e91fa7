//! Executable versions of the two hardness constructions: the reduction from
//! fault caching, and the adversary that forces online schedulers to pay for
//! every request.

mod adversary;
mod caching;

pub use adversary::{
    adversary_run, greedy_online, offline_schedule, AdversaryConfig, AdversaryReport, ChannelValue,
    Greedy, OnlineAlgorithm, OnlineState, TranscriptEntry,
};
pub use caching::{
    check_policy, lift_schedule, normalize_schedule, policy_to_schedule, reduce_caching,
    reduce_caching_with_mode, CachingInstance, CachingPolicy, Page, Reduction,
};
