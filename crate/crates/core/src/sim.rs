//! Slot-stepped Monte-Carlo simulation of the scheduler and backhaul queue.
//!
//! Within a slot the backhaul departure (if any) is processed before the
//! arrival, matching the kernel's convention that the `n` slots of an
//! inter-arrival gap include the slot of the next arrival.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delay::{DelayModel, DelaySampler};
use crate::error::{Error, Result};
use crate::kernel::{Action, QueueState, SystemParams};
use crate::policy::PolicyTable;
use crate::rng::{stream_rng, PRNG_ALGORITHM};
use crate::scalar::Scalar;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Batch count for the batch-means interval.
const BATCHES: usize = 40;

/// Below this many measured packets per batch the interval falls back to the
/// independent-Bernoulli formula.
const MIN_BATCH_LEN: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_packets: u64,
    pub seed: u64,
    /// Leading arrivals excluded from the statistics.
    pub warmup_packets: u64,
    /// ChaCha stream index; distinct runs sharing a seed use distinct streams.
    pub stream: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_packets: 1_000_000,
            seed: 1,
            warmup_packets: 100_000,
            stream: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_packets == 0 {
            return Err(Error::param("n_packets", "must be at least 1"));
        }
        if self.warmup_packets >= self.n_packets {
            return Err(Error::param("warmup_packets", "must be below n_packets"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Fraction of measured packets delivered within the deadline.
    pub success_rate: f64,
    /// Normal-approximation 95% half-width by the method of batch means over
    /// consecutive measured arrivals. Successive packets share the queue, so
    /// their outcomes are correlated; see `ci_halfwidth_95_iid`.
    pub ci_halfwidth_95: f64,
    /// `1.96 sqrt(r (1 - r) / n)`, valid only for independent outcomes.
    pub ci_halfwidth_95_iid: f64,
    pub batches: usize,
    pub measured_packets: u64,
    pub breakout_packets: u64,
    pub breakout_successes: u64,
    pub core_packets: u64,
    pub core_successes: u64,
    /// Queue length seen by measured arrivals, averaged.
    pub mean_queue_len: f64,
    pub max_queue_len: usize,
    pub slots: u64,
    pub seed: u64,
    pub stream: u64,
    pub prng: String,
}

struct Queued {
    arrival_slot: u64,
    /// Batch of a measured packet; `None` during warmup.
    batch: Option<usize>,
}

struct Tally {
    breakout: u64,
    breakout_ok: u64,
    core: u64,
    core_ok: u64,
    queue_sum: u64,
    max_queue: usize,
    batch_ok: Vec<u64>,
    batch_len: Vec<u64>,
}

impl Tally {
    fn new(batches: usize) -> Self {
        Tally {
            breakout: 0,
            breakout_ok: 0,
            core: 0,
            core_ok: 0,
            queue_sum: 0,
            max_queue: 0,
            batch_ok: vec![0; batches],
            batch_len: vec![0; batches],
        }
    }
}

fn batch_means_halfwidth(ok: &[u64], len: &[u64]) -> f64 {
    let means: Vec<f64> = ok
        .iter()
        .zip(len)
        .map(|(&k, &n)| k as f64 / n as f64)
        .collect();
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    Z95 * (var / b).sqrt()
}

/// Runs one simulation. Deterministic in `(params, delay, table, cfg)`.
pub fn run<F: Scalar>(
    params: &SystemParams<F>,
    delay: &DelayModel<F>,
    table: &PolicyTable,
    cfg: &SimConfig,
) -> Result<SimulationReport> {
    params.validate()?;
    delay.validate()?;
    cfg.validate()?;
    if table.buffer_size() != params.buffer_size {
        return Err(Error::Config(format!(
            "policy table covers buffer {} but params say {}",
            table.buffer_size(),
            params.buffer_size
        )));
    }

    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let sampler = DelaySampler::new(delay);
    let p = params.p.as_f64();
    let q = params.q.as_f64();
    let deadline = params.deadline_slots as u64;
    let cn_budget = params.deadline_ms().as_f64();
    let buffer = params.buffer_size;

    let measured = cfg.n_packets - cfg.warmup_packets;
    let batches = if measured >= BATCHES as u64 * MIN_BATCH_LEN {
        BATCHES
    } else {
        1
    };
    let batch_of = |index: u64| ((index as u128 * batches as u128) / measured as u128) as usize;

    let mut queue: VecDeque<Queued> = VecDeque::with_capacity(buffer + 1);
    let mut tally = Tally::new(batches);
    let mut arrivals = 0u64;
    let mut slot = 0u64;

    let depart = |queue: &mut VecDeque<Queued>, slot: u64, tally: &mut Tally| {
        if let Some(pkt) = queue.pop_front() {
            if let Some(b) = pkt.batch {
                if slot - pkt.arrival_slot <= deadline {
                    tally.breakout_ok += 1;
                    tally.batch_ok[b] += 1;
                }
            }
        }
    };

    while arrivals < cfg.n_packets {
        slot += 1;
        if !queue.is_empty() && rng.random::<f64>() < q {
            depart(&mut queue, slot, &mut tally);
        }
        if rng.random::<f64>() < p {
            arrivals += 1;
            let batch = (arrivals > cfg.warmup_packets)
                .then(|| batch_of(arrivals - cfg.warmup_packets - 1));
            let len = queue.len();
            debug_assert!(len <= buffer);
            if let Some(b) = batch {
                tally.queue_sum += len as u64;
                tally.max_queue = tally.max_queue.max(len);
                tally.batch_len[b] += 1;
            }
            match table.decide(QueueState(len)) {
                Action::Breakout => {
                    queue.push_back(Queued {
                        arrival_slot: slot,
                        batch,
                    });
                    if batch.is_some() {
                        tally.breakout += 1;
                    }
                }
                Action::CoreNetwork => {
                    let ok = sampler.sample_f64(&mut rng) <= cn_budget;
                    if let Some(b) = batch {
                        tally.core += 1;
                        tally.core_ok += u64::from(ok);
                        tally.batch_ok[b] += u64::from(ok);
                    }
                }
            }
        }
    }
    // FIFO: later arrivals cannot affect packets already queued, so the
    // remaining packets are resolved by departures alone.
    while !queue.is_empty() {
        slot += 1;
        if rng.random::<f64>() < q {
            depart(&mut queue, slot, &mut tally);
        }
    }

    let successes = tally.breakout_ok + tally.core_ok;
    let rate = successes as f64 / measured as f64;
    let iid = Z95 * (rate * (1.0 - rate) / measured as f64).sqrt();
    Ok(SimulationReport {
        success_rate: rate,
        ci_halfwidth_95: if batches > 1 {
            batch_means_halfwidth(&tally.batch_ok, &tally.batch_len)
        } else {
            iid
        },
        ci_halfwidth_95_iid: iid,
        batches,
        measured_packets: measured,
        breakout_packets: tally.breakout,
        breakout_successes: tally.breakout_ok,
        core_packets: tally.core,
        core_successes: tally.core_ok,
        mean_queue_len: tally.queue_sum as f64 / measured as f64,
        max_queue_len: tally.max_queue,
        slots: slot,
        seed: cfg.seed,
        stream: cfg.stream,
        prng: PRNG_ALGORITHM.to_string(),
    })
}
