//! Delay summaries: trimmed bounds, jitter and loss.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::ProbeSample;

/// Fraction cut from each tail of the sorted delays.
pub const TRIM_FRACTION: f64 = 0.025;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no samples")]
    NoSamples,
    #[error("all {n_total} probes were lost")]
    AllLost { n_total: usize },
    #[error("jitter window must cover at least 2 samples, got {0}")]
    InvalidWindow(usize),
    #[error("need at least {needed} delivered samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySummary {
    pub n_total: usize,
    pub n_lost: usize,
    pub mean_s: f64,
    pub lower_2_5_s: f64,
    pub upper_97_5_s: f64,
    pub jitter_s: f64,
    pub loss_rate: f64,
}

/// Index of the lower trimmed bound among `m` sorted values: `floor(0.025 m)`.
pub fn trim_count(m: usize) -> usize {
    (TRIM_FRACTION * m as f64).floor() as usize
}

/// Mean absolute difference of consecutive values; 0 for fewer than two.
pub fn mean_abs_successive_difference(delays: &[f64]) -> f64 {
    if delays.len() < 2 {
        return 0.0;
    }
    let total: f64 = delays.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    total / (delays.len() - 1) as f64
}

fn delivered_in_send_order(samples: &[ProbeSample]) -> Vec<(u64, f64)> {
    let mut ordered: Vec<&ProbeSample> = samples.iter().collect();
    ordered.sort_by_key(|s| (s.sent_at_us, s.seq));
    ordered
        .into_iter()
        .filter_map(|s| s.delay().map(|d| (s.sent_at_us, d)))
        .collect()
}

pub fn summarize(samples: &[ProbeSample]) -> Result<DelaySummary, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::NoSamples);
    }
    let n_total = samples.len();
    let n_lost = samples.iter().filter(|s| s.delay().is_none()).count();
    if n_lost == n_total {
        return Err(StatsError::AllLost { n_total });
    }

    let delays: Vec<f64> = delivered_in_send_order(samples).into_iter().map(|(_, d)| d).collect();
    let jitter_s = mean_abs_successive_difference(&delays);

    // Summing in sorted order keeps the mean independent of sample order.
    let mut sorted = delays;
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let mean_s = sorted.iter().sum::<f64>() / m as f64;
    let k = trim_count(m);

    Ok(DelaySummary {
        n_total,
        n_lost,
        mean_s,
        lower_2_5_s: sorted[k],
        upper_97_5_s: sorted[m - 1 - k],
        jitter_s,
        loss_rate: n_lost as f64 / n_total as f64,
    })
}

/// Jitter over each run of `window` consecutive delivered samples, stamped
/// with the send time of the window's last sample.
pub fn jitter_series(samples: &[ProbeSample], window: usize) -> Result<Vec<(u64, f64)>, StatsError> {
    if window < 2 {
        return Err(StatsError::InvalidWindow(window));
    }
    let needed = window;
    let delivered = delivered_in_send_order(samples);
    if delivered.len() < needed {
        return Err(StatsError::InsufficientSamples {
            needed,
            got: delivered.len(),
        });
    }
    let delays: Vec<f64> = delivered.iter().map(|(_, d)| *d).collect();
    Ok(delays
        .windows(needed)
        .zip(delivered.iter().skip(needed - 1))
        .map(|(w, (t, _))| (*t, mean_abs_successive_difference(w)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::ProbeMethod;

    fn series(delays: &[Option<f64>]) -> Vec<ProbeSample> {
        delays
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let i = i as u64;
                match d {
                    Some(d) => ProbeSample::delivered("p", i, 100, 1024, i * 1000, *d, ProbeMethod::IcmpEcho),
                    None => ProbeSample::lost("p", i, 100, 1024, i * 1000, ProbeMethod::IcmpEcho),
                }
            })
            .collect()
    }

    #[test]
    fn trimmed_bounds_on_ramp() {
        let s = series(&(0..100).map(|ms| Some(ms as f64 * 1e-3)).collect::<Vec<_>>());
        let sum = summarize(&s).unwrap();
        assert_eq!(sum.lower_2_5_s, 0.002);
        assert_eq!(sum.upper_97_5_s, 0.097);
        assert!((sum.mean_s - 0.0495).abs() < 1e-15);
        assert!((sum.jitter_s - 0.001).abs() < 1e-15);
    }

    #[test]
    fn constant_series() {
        let s = series(&vec![Some(0.010); 50]);
        let sum = summarize(&s).unwrap();
        assert_eq!(sum.jitter_s, 0.0);
        assert_eq!(sum.lower_2_5_s, 0.010);
        assert_eq!(sum.upper_97_5_s, 0.010);
        assert!((sum.mean_s - 0.010).abs() < 1e-15);
    }

    #[test]
    fn loss_rate_ratio() {
        let mut d = vec![Some(0.02); 90];
        d.extend(vec![None; 10]);
        let sum = summarize(&series(&d)).unwrap();
        assert_eq!(sum.loss_rate, 0.10);
        assert_eq!((sum.n_total, sum.n_lost), (100, 10));
    }

    #[test]
    fn empty_and_all_lost() {
        assert_eq!(summarize(&[]), Err(StatsError::NoSamples));
        assert_eq!(
            summarize(&series(&[None, None])),
            Err(StatsError::AllLost { n_total: 2 })
        );
    }

    #[test]
    fn lost_samples_are_skipped_by_jitter() {
        let sum = summarize(&series(&[Some(0.010), None, Some(0.014), Some(0.012)])).unwrap();
        assert!((sum.jitter_s - 0.003).abs() < 1e-15);
    }

    #[test]
    fn windowed_jitter() {
        let alt: Vec<_> = (0..30).map(|i| Some(if i % 2 == 0 { 0.010 } else { 0.020 })).collect();
        let js = jitter_series(&series(&alt), 10).unwrap();
        assert_eq!(js.len(), 21);
        assert!(js.iter().all(|(_, j)| (j - 0.010).abs() < 1e-15));
        assert_eq!(js[0].0, 9000);

        let flat = jitter_series(&series(&[Some(0.05); 12]), 4).unwrap();
        assert!(flat.iter().all(|(_, j)| *j == 0.0));

        assert_eq!(
            jitter_series(&series(&[Some(0.01)]), 2),
            Err(StatsError::InsufficientSamples { needed: 2, got: 1 })
        );
    }
}
