use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Direction, Instance, Network, Schedule, TransactionSet};
use crate::num;
use crate::sim::{apply_flow, capital_violations, routable, PenaltyConfig, Trace};

/// Coefficients in `[0, 1]`; reads past the end yield 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoeffArray(Vec<f64>);

impl CoeffArray {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::CoefficientOutOfRange { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for CoeffArray {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<CoeffArray> for Vec<f64> {
    fn from(a: CoeffArray) -> Self {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub sc: usize,
    pub skips: usize,
    pub value: f64,
}

impl Fitness {
    fn new(sc: usize, skips: usize, pen: &PenaltyConfig) -> Self {
        Self {
            sc,
            skips,
            value: sc as f64 + pen.penalty_per_skip * skips as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub schedule: Schedule,
    pub fitness: Fitness,
    pub trace: Trace,
}

struct Recording {
    schedule: Schedule,
    trace: Trace,
}

/// Reusable decoder for one instance.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    inst: &'a Instance,
    pen: PenaltyConfig,
    /// Position of each channel in id order, for shrink tie-breaks.
    id_rank: Vec<usize>,
}

impl<'a> Decoder<'a> {
    pub fn new(inst: &'a Instance, pen: PenaltyConfig) -> Self {
        let mut order: Vec<usize> = (0..inst.num_channels()).collect();
        order.sort_by(|&a, &b| inst.channel_ids[a].cmp(&inst.channel_ids[b]));
        let mut id_rank = vec![0; order.len()];
        for (rank, &e) in order.iter().enumerate() {
            id_rank[e] = rank;
        }
        Self { inst, pen, id_rank }
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn penalty(&self) -> &PenaltyConfig {
        &self.pen
    }

    /// Fitness only.
    pub fn evaluate(&self, coeffs: &[f64]) -> Fitness {
        self.run(coeffs, None)
    }

    pub fn decode(&self, coeffs: &[f64]) -> DecodeOutcome {
        let mut rec = Recording {
            schedule: Schedule::new(),
            trace: Trace::start(self.inst),
        };
        let fitness = self.run(coeffs, Some(&mut rec));
        DecodeOutcome {
            schedule: rec.schedule,
            fitness,
            trace: rec.trace,
        }
    }

    fn run(&self, coeffs: &[f64], mut rec: Option<&mut Recording>) -> Fitness {
        let inst = self.inst;
        let mut caps = inst.capacity0.clone();
        let mut capitals = inst.capital0.clone();
        let mut cursor = 0usize;
        let next = |cursor: &mut usize| {
            let c = coeffs.get(*cursor).copied().unwrap_or(0.0);
            *cursor += 1;
            c
        };
        let (mut sc, mut skips) = (0usize, 0usize);
        let mut undo: Vec<(usize, f64)> = Vec::new();
        let mut siblings: Vec<usize> = Vec::new();
        let mut changed: Vec<(usize, f64)> = Vec::new();

        for t in 1..=inst.n() {
            let step = &inst.steps[t - 1];
            let v = step.value;
            let start_cursor = cursor;
            undo.clear();
            let on_path = |c: usize| {
                step.hops
                    .iter()
                    .any(|&(h, d)| h == c && d == Direction::Forward)
            };
            let mut ok = true;
            for &(e, dir) in &step.hops {
                if dir == Direction::Reverse || num::ge(caps[e], v) {
                    continue;
                }
                let u = inst.tail[e];
                let out = &inst.outgoing[u];
                let need = v - caps[e];
                let mut headroom = capitals[u] - out.iter().map(|&i| caps[i]).sum::<f64>();
                if !num::ge(headroom, need) {
                    siblings.clear();
                    siblings.extend(
                        out.iter()
                            .copied()
                            .filter(|&i| !on_path(i) && caps[i] > 0.0),
                    );
                    siblings.sort_by(|&a, &b| {
                        caps[b]
                            .total_cmp(&caps[a])
                            .then(self.id_rank[a].cmp(&self.id_rank[b]))
                    });
                    for &s in &siblings {
                        let shrunk = next(&mut cursor) * caps[s];
                        if shrunk != caps[s] {
                            undo.push((s, caps[s]));
                            headroom += caps[s] - shrunk;
                            caps[s] = shrunk;
                        }
                        if num::ge(headroom, need) {
                            break;
                        }
                    }
                    if !num::ge(headroom, need) {
                        ok = false;
                        break;
                    }
                }
                let extra = (headroom - need).max(0.0);
                undo.push((e, caps[e]));
                caps[e] = v + next(&mut cursor) * extra;
            }

            if !ok {
                for &(c, old) in undo.iter().rev() {
                    caps[c] = old;
                }
                cursor = start_cursor;
            }

            // One entry per touched channel, valued at its final capacity.
            changed.clear();
            for &(c, old) in &undo {
                if ok && !changed.iter().any(|&(x, _)| x == c) {
                    changed.push((c, old));
                }
            }
            changed.retain(|&(c, old)| caps[c] != old);
            changed.sort_by_key(|&(c, _)| c);
            sc += changed.len();
            if let Some(r) = rec.as_deref_mut() {
                for &(c, old) in &changed {
                    r.trace.lc += (caps[c] - old).abs();
                    r.trace.sc += 1;
                    r.schedule.push(inst.channel_ids[c].clone(), t, caps[c]);
                }
                capital_violations(inst, t, &caps, &capitals, &mut r.trace.violations);
            }

            if routable(inst, t, &caps) {
                apply_flow(inst, t, &mut caps, &mut capitals);
                if let Some(r) = rec.as_deref_mut() {
                    r.trace.executed.push(t);
                }
            } else {
                skips += 1;
                if let Some(r) = rec.as_deref_mut() {
                    r.trace.skipped.push(t);
                }
            }
            if let Some(r) = rec.as_deref_mut() {
                r.trace.record_column(&caps, &capitals);
            }
        }
        Fitness::new(sc, skips, &self.pen)
    }
}

pub fn decode_instance(inst: &Instance, arr: &CoeffArray, pen: &PenaltyConfig) -> DecodeOutcome {
    Decoder::new(inst, *pen).decode(arr.as_slice())
}

pub fn decode(
    net: &Network,
    txns: &TransactionSet,
    arr: &CoeffArray,
    pen: &PenaltyConfig,
) -> Result<DecodeOutcome> {
    let inst = Instance::new(net, txns)?;
    Ok(decode_instance(&inst, arr, pen))
}

pub fn evaluate(
    net: &Network,
    txns: &TransactionSet,
    arr: &CoeffArray,
    pen: &PenaltyConfig,
) -> Result<Fitness> {
    let inst = Instance::new(net, txns)?;
    Ok(Decoder::new(&inst, *pen).evaluate(arr.as_slice()))
}
