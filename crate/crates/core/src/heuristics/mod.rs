//! Coefficient-array heuristics for the step-cost problem.
//!
//! A candidate solution is an array of numbers in `[0, 1]`. The decoder
//! walks the transactions in order and spends one coefficient per decision
//! (how far past the minimum to raise a channel, how much of a sibling to
//! keep when freeing capital). The searches only ever see arrays and their
//! fitness.

mod decode;
pub(crate) mod search;

pub use decode::{decode, decode_instance, evaluate, CoeffArray, DecodeOutcome, Decoder, Fitness};
pub use search::{run_search, Knobs, Method, SearchParams, SearchResult};
