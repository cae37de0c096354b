//! Linear model of the intercept in terms of hop count and route length,
//! `a ≈ α·n + β·l`, fitted across several measured paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{self, BandwidthEstimate, EstimateError, SizeDelayPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("at least {needed} observations are needed, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("design matrix is rank deficient (hop count and route length are collinear)")]
    RankDeficient,
    #[error("invalid path features for `{0}`: hop count must be >= 1 and route length >= 0")]
    InvalidFeatures(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

/// Hop count and summed route length of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFeatures {
    pub path_id: String,
    pub hop_count_n: u32,
    pub route_length_l_km: f64,
}

impl PathFeatures {
    pub fn new(path_id: impl Into<String>, hop_count_n: u32, route_length_l_km: f64) -> Result<Self, ModelError> {
        let path_id = path_id.into();
        if hop_count_n == 0 || !(route_length_l_km.is_finite() && route_length_l_km >= 0.0) {
            return Err(ModelError::InvalidFeatures(path_id));
        }
        Ok(PathFeatures {
            path_id,
            hop_count_n,
            route_length_l_km,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptModel {
    pub alpha_s_per_hop: f64,
    pub beta_s_per_km: f64,
    /// Constant term; zero unless the fit was asked for one.
    #[serde(default)]
    pub constant_s: f64,
    pub residual_rms_s: f64,
    pub n_observations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    pub with_constant: bool,
}

/// Least-squares fit of `a = α·n + β·l` (no constant term by default).
pub fn fit_intercept_model(observations: &[(PathFeatures, f64)]) -> Result<InterceptModel, ModelError> {
    fit_intercept_model_with(observations, FitOptions::default())
}

pub fn fit_intercept_model_with(
    observations: &[(PathFeatures, f64)],
    options: FitOptions,
) -> Result<InterceptModel, ModelError> {
    let cols = if options.with_constant { 3 } else { 2 };
    if observations.len() < cols {
        return Err(ModelError::InsufficientObservations {
            needed: cols,
            got: observations.len(),
        });
    }

    let mut design: Vec<Vec<f64>> = observations
        .iter()
        .map(|(f, _)| {
            let mut row = vec![f64::from(f.hop_count_n), f.route_length_l_km];
            if options.with_constant {
                row.push(1.0);
            }
            row
        })
        .collect();
    let mut rhs: Vec<f64> = observations.iter().map(|(_, a)| *a).collect();

    let coef = householder_least_squares(&mut design, &mut rhs, cols).ok_or(ModelError::RankDeficient)?;

    let sse: f64 = observations
        .iter()
        .map(|(f, a)| {
            let mut pred = coef[0] * f64::from(f.hop_count_n) + coef[1] * f.route_length_l_km;
            if options.with_constant {
                pred += coef[2];
            }
            (a - pred).powi(2)
        })
        .sum();

    Ok(InterceptModel {
        alpha_s_per_hop: coef[0],
        beta_s_per_km: coef[1],
        constant_s: if options.with_constant { coef[2] } else { 0.0 },
        residual_rms_s: (sse / observations.len() as f64).sqrt(),
        n_observations: observations.len(),
    })
}

/// Solves `min ||A x − b||` by Householder QR, overwriting `a` and `b`.
/// Returns `None` when a diagonal entry of `R` vanishes relative to its column.
#[allow(clippy::needless_range_loop)]
fn householder_least_squares(a: &mut [Vec<f64>], b: &mut [f64], cols: usize) -> Option<Vec<f64>> {
    let m = a.len();
    let col_norms: Vec<f64> = (0..cols)
        .map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();

    for k in 0..cols {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm <= 1e-12 * col_norms[k].max(f64::MIN_POSITIVE) {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }

    let mut x = vec![0.0; cols];
    for k in (0..cols).rev() {
        let tail: f64 = (k + 1..cols).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - tail) / a[k][k];
    }
    Some(x)
}

pub fn predict_intercept(model: &InterceptModel, features: &PathFeatures) -> f64 {
    model.alpha_s_per_hop * f64::from(features.hop_count_n)
        + model.beta_s_per_km * features.route_length_l_km
        + model.constant_s
}

/// Bandwidth from a single point with the intercept predicted by the model.
pub fn estimate_with_model(
    point: SizeDelayPoint,
    model: &InterceptModel,
    features: &PathFeatures,
) -> Result<BandwidthEstimate, ModelError> {
    let a = predict_intercept(model, features);
    Ok(estimator::estimate_from_intercept(point, a)?)
}
