//! Means, standard deviations, the percentile bootstrap of a mean
//! difference and score per thousand input tokens.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1); 0 for a single value.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    /// mean(a) − mean(b)
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub significant: bool,
    pub resamples: usize,
    pub level: f64,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

fn stream(seed: u64, slot: u8) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"statebench/bootstrap/v1");
    h.update(seed.to_le_bytes());
    h.update([slot]);
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn resample_means(xs: &[f64], rng: &mut ChaCha8Rng, resamples: usize) -> Vec<f64> {
    let n = xs.len();
    (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect()
}

/// Order statistic index of the lower percentile bound.
pub fn lower_index(resamples: usize, level: f64) -> usize {
    (((1.0 - level) / 2.0) * resamples as f64 + 1e-9).floor() as usize
}

/// Percentile bootstrap of mean(a) − mean(b), resampling each group
/// independently.
///
/// Each group draws from a stream picked by the canonical order of the two
/// samples, and the bounds are the order statistics k and B−1−k, so
/// swapping the groups exactly negates and mirrors the interval. Equal
/// samples share one stream.
pub fn bootstrap_mean_diff(a: &[f64], b: &[f64], resamples: usize, level: f64, seed: u64) -> ComparisonResult {
    assert!(!a.is_empty() && !b.is_empty(), "bootstrap needs two non-empty samples");
    assert!(resamples > 0 && level > 0.0 && level < 1.0);
    let order = lexicographic(a, b);
    let (slot_a, slot_b) = match order {
        Ordering::Less => (0, 1),
        Ordering::Greater => (1, 0),
        Ordering::Equal => (0, 0),
    };
    let ma = resample_means(a, &mut stream(seed, slot_a), resamples);
    let mb = resample_means(b, &mut stream(seed, slot_b), resamples);
    let mut diffs: Vec<f64> = ma.iter().zip(&mb).map(|(x, y)| x - y).collect();
    diffs.sort_by(f64::total_cmp);
    let k = lower_index(resamples, level).min(resamples - 1);
    let (ci_low, ci_high) = (diffs[k], diffs[resamples - 1 - k]);
    let (mean_a, mean_b) = (mean(a), mean(b));
    ComparisonResult {
        mean_a,
        mean_b,
        sd_a: sd(a),
        sd_b: sd(b),
        mean_diff: mean_a - mean_b,
        ci_low,
        ci_high,
        significant: 0.0 < ci_low || 0.0 > ci_high,
        resamples,
        level,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no records")]
    Empty,
    #[error("mean input tokens is zero")]
    ZeroTokens,
}

/// mean(score) / mean(avg agent input tokens) × 1000, each pair being one
/// episode's score and its average agent-prompt input tokens.
pub fn score_per_kilo_token(episodes: &[(f64, f64)]) -> Result<f64, MetricError> {
    if episodes.is_empty() {
        return Err(MetricError::Empty);
    }
    let scores: Vec<f64> = episodes.iter().map(|e| e.0).collect();
    let tokens: Vec<f64> = episodes.iter().map(|e| e.1).collect();
    let denom = mean(&tokens);
    if denom == 0.0 {
        return Err(MetricError::ZeroTokens);
    }
    Ok(mean(&scores) / denom * 1000.0)
}
