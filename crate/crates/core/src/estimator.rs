//! Bandwidth and intercept estimators over per-size minimum delays.
//!
//! Delay is modelled as `D = a + W / B`: a size-independent intercept `a`
//! (propagation, per-packet processing, header cost) plus a term that grows
//! linearly with the wire size `W`. Sizes are carried in bits and delays in
//! seconds throughout.

// Negated comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::ProbeSample;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("invalid point: size {size_bits} bits, delay {delay_s} s (both must be positive)")]
    InvalidPoint { size_bits: u64, delay_s: f64 },
    #[error("no samples supplied")]
    NoSamples,
    #[error("samples span several paths ({0} and {1})")]
    MixedPaths(String, String),
    #[error("no probe size has at least {min_samples} delivered samples")]
    NoUsableSizes {
        min_samples: usize,
        dropped: Vec<DroppedSize>,
    },
    #[error("both points have the same size ({0} bits)")]
    EqualSizes(u64),
    #[error("larger packet is not slower: delay difference {0} s")]
    NonPositiveDelayDifference(f64),
    #[error("delay {delay_s} s is not above intercept {intercept_s} s")]
    DelayNotAboveIntercept { delay_s: f64, intercept_s: f64 },
    #[error("at least two sizes are needed for a fit, got {0}")]
    InsufficientPoints(usize),
    #[error("fitted slope {0} s/bit is not positive")]
    NonPositiveSlope(f64),
    #[error("min_samples_per_size must be at least 1")]
    ZeroThreshold,
}

pub type Result<T> = std::result::Result<T, EstimateError>;

pub const NEGATIVE_INTERCEPT_WARNING: &str = "negative intercept";

/// One (size, delay) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDelayPoint {
    size_bits: u64,
    delay_s: f64,
}

impl SizeDelayPoint {
    pub fn new(size_bits: u64, delay_s: f64) -> Result<Self> {
        if size_bits == 0 || !(delay_s.is_finite() && delay_s > 0.0) {
            return Err(EstimateError::InvalidPoint { size_bits, delay_s });
        }
        Ok(SizeDelayPoint { size_bits, delay_s })
    }

    pub fn from_bytes(size_bytes: u64, delay_s: f64) -> Result<Self> {
        Self::new(crate::units::bytes_to_bits(size_bytes), delay_s)
    }

    pub fn size_bits(&self) -> u64 {
        self.size_bits
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedSize {
    pub size_bits: u64,
    pub delivered: usize,
}

/// Minimum delay per probe size for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    pub path_id: String,
    points: Vec<SizeDelayPoint>,
    samples_per_size: BTreeMap<u64, usize>,
    /// Sizes that fell below the sample threshold.
    pub dropped: Vec<DroppedSize>,
}

impl DelayProfile {
    /// Builds a profile directly from points, one sample per size.
    ///
    /// Points are sorted by size; duplicate sizes are rejected.
    pub fn from_points(path_id: impl Into<String>, mut points: Vec<SizeDelayPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(EstimateError::InsufficientPoints(0));
        }
        points.sort_by_key(|p| p.size_bits);
        if let Some(w) = points.windows(2).find(|w| w[0].size_bits == w[1].size_bits) {
            return Err(EstimateError::EqualSizes(w[0].size_bits));
        }
        let samples_per_size = points.iter().map(|p| (p.size_bits, 1)).collect();
        Ok(DelayProfile {
            path_id: path_id.into(),
            points,
            samples_per_size,
            dropped: Vec::new(),
        })
    }

    pub fn points(&self) -> &[SizeDelayPoint] {
        &self.points
    }

    pub fn samples_per_size(&self) -> &BTreeMap<u64, usize> {
        &self.samples_per_size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Divides every delay by two (round trip to one way, assuming symmetry).
    pub fn halved(&self) -> DelayProfile {
        DelayProfile {
            points: self
                .points
                .iter()
                .map(|p| SizeDelayPoint {
                    size_bits: p.size_bits,
                    delay_s: p.delay_s / 2.0,
                })
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Direct,
    Pairwise,
    Regression,
    InterceptCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthEstimate {
    pub b_av_bps: f64,
    pub intercept_s: f64,
    pub method: EstimateMethod,
    pub residual_rms_s: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope_s_per_bit: f64,
    pub intercept_s: f64,
    pub residual_rms_s: f64,
    pub n_points: usize,
}

/// Groups delivered samples by wire size and keeps the minimum delay of each
/// size that has at least `min_samples_per_size` delivered samples.
pub fn min_delay_profile(samples: &[ProbeSample], min_samples_per_size: usize) -> Result<DelayProfile> {
    if min_samples_per_size == 0 {
        return Err(EstimateError::ZeroThreshold);
    }
    let first = samples.first().ok_or(EstimateError::NoSamples)?;
    if let Some(other) = samples.iter().find(|s| s.path_id != first.path_id) {
        return Err(EstimateError::MixedPaths(first.path_id.clone(), other.path_id.clone()));
    }

    // size -> (delivered count, running minimum)
    let mut groups: BTreeMap<u64, (usize, f64)> = BTreeMap::new();
    for s in samples {
        let entry = groups.entry(s.wire_bits).or_insert((0, f64::INFINITY));
        if let Some(d) = s.delay() {
            entry.0 += 1;
            entry.1 = entry.1.min(d);
        }
    }

    let mut points = Vec::new();
    let mut samples_per_size = BTreeMap::new();
    let mut dropped = Vec::new();
    for (size_bits, (count, min)) in groups {
        if count >= min_samples_per_size {
            // A zero delay (possible on coarse clocks) cannot form a point.
            match SizeDelayPoint::new(size_bits, min) {
                Ok(p) => {
                    points.push(p);
                    samples_per_size.insert(size_bits, count);
                }
                Err(_) => dropped.push(DroppedSize {
                    size_bits,
                    delivered: count,
                }),
            }
        } else {
            dropped.push(DroppedSize {
                size_bits,
                delivered: count,
            });
        }
    }

    if points.is_empty() {
        return Err(EstimateError::NoUsableSizes {
            min_samples: min_samples_per_size,
            dropped,
        });
    }
    Ok(DelayProfile {
        path_id: first.path_id.clone(),
        points,
        samples_per_size,
        dropped,
    })
}

/// `B = W / D`, treating the whole delay as transmission time.
pub fn estimate_direct(point: SizeDelayPoint) -> BandwidthEstimate {
    BandwidthEstimate {
        b_av_bps: point.size_bits as f64 / point.delay_s,
        intercept_s: 0.0,
        method: EstimateMethod::Direct,
        residual_rms_s: 0.0,
        warnings: Vec::new(),
    }
}

fn ordered(p1: SizeDelayPoint, p2: SizeDelayPoint) -> Result<(SizeDelayPoint, SizeDelayPoint)> {
    match p1.size_bits.cmp(&p2.size_bits) {
        std::cmp::Ordering::Equal => Err(EstimateError::EqualSizes(p1.size_bits)),
        std::cmp::Ordering::Less => Ok((p1, p2)),
        std::cmp::Ordering::Greater => Ok((p2, p1)),
    }
}

/// Two-size estimate: `B = (W2 - W1) / (D2 - D1)` with `W2 > W1`, and the
/// intercept from [`estimate_intercept`].
pub fn estimate_pairwise(p1: SizeDelayPoint, p2: SizeDelayPoint) -> Result<BandwidthEstimate> {
    let (small, large) = ordered(p1, p2)?;
    let dd = large.delay_s - small.delay_s;
    if dd <= 0.0 {
        return Err(EstimateError::NonPositiveDelayDifference(dd));
    }
    let dw = (large.size_bits - small.size_bits) as f64;
    let intercept_s = intercept_of_ordered(small, large);
    let mut warnings = Vec::new();
    if intercept_s < 0.0 {
        warnings.push(NEGATIVE_INTERCEPT_WARNING.to_string());
    }
    Ok(BandwidthEstimate {
        b_av_bps: dw / dd,
        intercept_s,
        method: EstimateMethod::Pairwise,
        residual_rms_s: 0.0,
        warnings,
    })
}

fn intercept_of_ordered(small: SizeDelayPoint, large: SizeDelayPoint) -> f64 {
    let (w1, d1) = (small.size_bits as f64, small.delay_s);
    let (w2, d2) = (large.size_bits as f64, large.delay_s);
    (w2 * d1 - w1 * d2) / (w2 - w1)
}

/// Size-independent delay of the line through two points:
/// `a = (W2·D1 − W1·D2) / (W2 − W1)`.
pub fn estimate_intercept(p1: SizeDelayPoint, p2: SizeDelayPoint) -> Result<f64> {
    let (small, large) = ordered(p1, p2)?;
    Ok(intercept_of_ordered(small, large))
}

/// `B = W / (D − a)` for a known intercept `a`.
pub fn estimate_from_intercept(point: SizeDelayPoint, intercept_s: f64) -> Result<BandwidthEstimate> {
    if !(point.delay_s > intercept_s) {
        return Err(EstimateError::DelayNotAboveIntercept {
            delay_s: point.delay_s,
            intercept_s,
        });
    }
    let mut warnings = Vec::new();
    if intercept_s < 0.0 {
        warnings.push(NEGATIVE_INTERCEPT_WARNING.to_string());
    }
    Ok(BandwidthEstimate {
        b_av_bps: point.size_bits as f64 / (point.delay_s - intercept_s),
        intercept_s,
        method: EstimateMethod::InterceptCorrected,
        residual_rms_s: 0.0,
        warnings,
    })
}

/// Ordinary least squares of delay against size.
pub fn fit_linear(profile: &DelayProfile) -> Result<LinearFit> {
    let points = profile.points();
    let n = points.len();
    if n < 2 {
        return Err(EstimateError::InsufficientPoints(n));
    }

    if n == 2 {
        // Closed form; the line passes through both points exactly.
        let (small, large) = (points[0], points[1]);
        let slope = (large.delay_s - small.delay_s) / (large.size_bits - small.size_bits) as f64;
        if slope <= 0.0 {
            return Err(EstimateError::NonPositiveSlope(slope));
        }
        return Ok(LinearFit {
            slope_s_per_bit: slope,
            intercept_s: intercept_of_ordered(small, large),
            residual_rms_s: 0.0,
            n_points: 2,
        });
    }

    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.size_bits as f64).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.delay_s).sum::<f64>() / nf;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), p| {
        let dx = p.size_bits as f64 - mean_x;
        (sxy + dx * (p.delay_s - mean_y), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(EstimateError::NonPositiveSlope(slope));
    }
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|p| {
            let r = p.delay_s - (intercept + slope * p.size_bits as f64);
            r * r
        })
        .sum();

    Ok(LinearFit {
        slope_s_per_bit: slope,
        intercept_s: intercept,
        residual_rms_s: (sse / nf).sqrt(),
        n_points: n,
    })
}

/// The delay-vs-size slope is the inverse of the available bandwidth.
pub fn invert_slope(slope_s_per_bit: f64) -> Result<f64> {
    if !(slope_s_per_bit > 0.0) {
        return Err(EstimateError::NonPositiveSlope(slope_s_per_bit));
    }
    Ok(1.0 / slope_s_per_bit)
}

pub fn estimate_regression(profile: &DelayProfile) -> Result<BandwidthEstimate> {
    let fit = fit_linear(profile)?;
    let mut warnings = Vec::new();
    if fit.intercept_s < 0.0 {
        warnings.push(NEGATIVE_INTERCEPT_WARNING.to_string());
    }
    Ok(BandwidthEstimate {
        b_av_bps: invert_slope(fit.slope_s_per_bit)?,
        intercept_s: fit.intercept_s,
        method: EstimateMethod::Regression,
        residual_rms_s: fit.residual_rms_s,
        warnings,
    })
}

/// Pairwise for exactly two sizes, regression for more.
pub fn estimate_profile(profile: &DelayProfile) -> Result<BandwidthEstimate> {
    match profile.points() {
        [] | [_] => Err(EstimateError::InsufficientPoints(profile.len())),
        [a, b] => estimate_pairwise(*a, *b),
        _ => estimate_regression(profile),
    }
}
