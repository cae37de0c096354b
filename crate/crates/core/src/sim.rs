//! Seeded multi-hop path simulator.
//!
//! Each hop adds `W / C + propagation + processing` plus an optional one-sided
//! exponential queueing delay, and may drop the probe. With noise and loss off,
//! every probe sees exactly [`fixed_delay`], so the estimator's output can be
//! checked against [`ground_truth_rate`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{ProbeMethod, ProbeSample};

/// Recorded in session metadata so a run can be tied to its generator.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9)";

pub const DEFAULT_GAP_US: u64 = 50_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("path has no hops")]
    NoHops,
    #[error("hop {index}: {reason}")]
    InvalidHop { index: usize, reason: &'static str },
    #[error("probe sizes must be distinct and positive")]
    InvalidSizes,
    #[error("count per size must be at least 1")]
    ZeroCount,
    #[error("path config: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub capacity_bps: f64,
    #[serde(default)]
    pub propagation_s: f64,
    #[serde(default)]
    pub processing_s: f64,
    /// Mean of the exponential queueing delay; 0 disables it.
    #[serde(default)]
    pub queue_noise_mean_s: f64,
    #[serde(default)]
    pub loss_prob: f64,
}

impl Hop {
    pub fn link(capacity_bps: f64, propagation_s: f64) -> Self {
        Hop {
            capacity_bps,
            propagation_s,
            processing_s: 0.0,
            queue_noise_mean_s: 0.0,
            loss_prob: 0.0,
        }
    }

    fn validate(&self, index: usize) -> Result<(), SimError> {
        let bad = |reason| Err(SimError::InvalidHop { index, reason });
        if !(self.capacity_bps.is_finite() && self.capacity_bps > 0.0) {
            return bad("capacity_bps must be positive");
        }
        for d in [self.propagation_s, self.processing_s, self.queue_noise_mean_s] {
            if !(d.is_finite() && d >= 0.0) {
                return bad("delays must be non-negative");
            }
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return bad("loss_prob must be in [0, 1)");
        }
        Ok(())
    }

    fn fixed_delay(&self, wire_bits: u64) -> f64 {
        wire_bits as f64 / self.capacity_bps + self.propagation_s + self.processing_s
    }
}

/// The simulator's ground truth. Serialized as the path config file:
/// `{"seed": u64, "hops": [{"capacity_bps": .., ...}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPath {
    pub seed: u64,
    pub hops: Vec<Hop>,
}

impl SimPath {
    pub fn new(hops: Vec<Hop>, seed: u64) -> Result<Self, SimError> {
        let path = SimPath { seed, hops };
        path.validate()?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.hops.is_empty() {
            return Err(SimError::NoHops);
        }
        self.hops.iter().enumerate().try_for_each(|(i, h)| h.validate(i))
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let path: SimPath = serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        path.validate()?;
        Ok(path)
    }

    /// Sum of propagation and processing delays: the intercept of the fixed delay.
    pub fn size_independent_delay(&self) -> f64 {
        self.hops.iter().map(|h| h.propagation_s + h.processing_s).sum()
    }
}

/// `Σ (W / C_i + propagation_i + processing_i)`.
pub fn fixed_delay(path: &SimPath, wire_bits: u64) -> f64 {
    path.hops.iter().map(|h| h.fixed_delay(wire_bits)).sum()
}

/// `1 / Σ (1 / C_i)`, the inverse slope of [`fixed_delay`] in the size.
pub fn ground_truth_rate(path: &SimPath) -> f64 {
    1.0 / path.hops.iter().map(|h| 1.0 / h.capacity_bps).sum::<f64>()
}

/// Draws one probe's delay, or `None` if some hop drops it.
pub fn simulate_probe<R: Rng + ?Sized>(path: &SimPath, wire_bits: u64, rng: &mut R) -> Option<f64> {
    let mut delay = 0.0;
    for hop in &path.hops {
        if hop.loss_prob > 0.0 && rng.random::<f64>() < hop.loss_prob {
            return None;
        }
        delay += hop.fixed_delay(wire_bits);
        if hop.queue_noise_mean_s > 0.0 {
            let exp = Exp::new(1.0 / hop.queue_noise_mean_s).expect("positive rate");
            delay += exp.sample(rng);
        }
    }
    Some(delay)
}

/// A probe size with both its payload and on-the-wire sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSize {
    pub payload_bytes: u32,
    pub wire_bits: u64,
}

impl ProbeSize {
    /// A size known only by its wire length; the whole frame counts as payload.
    pub fn from_wire_bits(wire_bits: u64) -> Self {
        ProbeSize {
            payload_bytes: u32::try_from(wire_bits / 8).unwrap_or(u32::MAX),
            wire_bits,
        }
    }
}

/// Runs `count_per_size` probes of each size, round-robin across sizes, from
/// the path's seed. Samples are spaced [`DEFAULT_GAP_US`] apart.
pub fn run_experiment(
    path: &SimPath,
    sizes_wire_bits: &[u64],
    count_per_size: usize,
) -> Result<Vec<ProbeSample>, SimError> {
    let sizes: Vec<ProbeSize> = sizes_wire_bits.iter().copied().map(ProbeSize::from_wire_bits).collect();
    Experiment::new(path, &sizes, count_per_size)?.run()
}

/// Experiment configuration beyond the bare path.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub path: &'a SimPath,
    pub sizes: &'a [ProbeSize],
    pub count_per_size: usize,
    pub gap_us: u64,
    pub path_id: String,
}

impl<'a> Experiment<'a> {
    pub fn new(path: &'a SimPath, sizes: &'a [ProbeSize], count_per_size: usize) -> Result<Self, SimError> {
        path.validate()?;
        if count_per_size == 0 {
            return Err(SimError::ZeroCount);
        }
        let mut seen = std::collections::HashSet::new();
        if sizes.is_empty() || sizes.iter().any(|s| s.wire_bits == 0 || !seen.insert(s.wire_bits)) {
            return Err(SimError::InvalidSizes);
        }
        Ok(Experiment {
            path,
            sizes,
            count_per_size,
            gap_us: DEFAULT_GAP_US,
            path_id: format!("sim-{:016x}", path.seed),
        })
    }

    pub fn run(&self) -> Result<Vec<ProbeSample>, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.path.seed);
        let mut out = Vec::with_capacity(self.sizes.len() * self.count_per_size);
        let mut seq = 0u64;
        for _round in 0..self.count_per_size {
            for size in self.sizes {
                let sent_at_us = seq * self.gap_us;
                let sample = match simulate_probe(self.path, size.wire_bits, &mut rng) {
                    Some(d) => ProbeSample::delivered(
                        self.path_id.clone(),
                        seq,
                        size.payload_bytes,
                        size.wire_bits,
                        sent_at_us,
                        d,
                        ProbeMethod::Simulated,
                    ),
                    None => ProbeSample::lost(
                        self.path_id.clone(),
                        seq,
                        size.payload_bytes,
                        size.wire_bits,
                        sent_at_us,
                        ProbeMethod::Simulated,
                    ),
                };
                out.push(sample);
                seq += 1;
            }
        }
        Ok(out)
    }
}
