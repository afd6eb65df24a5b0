//! Per-frame split of detections into high- and low-confidence sets.
//!
//! The adaptive rule sorts the frame's scores in decreasing order and places
//! the threshold at the upper endpoint of the steepest drop, i.e. the most
//! negative first difference `s[j+1] - s[j]`. The earliest such drop wins a
//! tie. Detections scoring at or above the threshold are high, so the
//! detection that defines the threshold is always in the high set.

use crate::error::{Error, Result};
use crate::tracker::Detection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitMode {
    Adaptive,
    Fixed(f64),
}

/// Optional clamp applied to the adaptive threshold. Defaults to `[0, 1]`,
/// which leaves it untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdBand {
    pub min: f64,
    pub max: f64,
}

impl Default for ThresholdBand {
    fn default() -> Self {
        Self { min: 0.0, max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSplit {
    pub threshold: f64,
    /// Input indices with score >= threshold, in input order.
    pub high: Vec<usize>,
    /// Input indices with score < threshold, in input order.
    pub low: Vec<usize>,
}

/// Threshold at the steepest drop of the descending-sorted scores.
pub fn adaptive_threshold(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some((index, &score)) = scores
        .iter()
        .enumerate()
        .find(|(_, s)| !(0.0..=1.0).contains(*s))
    {
        return Err(Error::ScoreOutOfRange { index, score });
    }
    let mut sorted = scores.to_vec();
    Ok(steepest_drop(&mut sorted))
}

/// Sorts `scores` descending in place and returns the threshold. `scores`
/// must be non-empty and NaN-free.
fn steepest_drop(scores: &mut [f64]) -> f64 {
    scores.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut best = 0;
    let mut best_diff = f64::INFINITY;
    for (j, w) in scores.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d < best_diff {
            best_diff = d;
            best = j;
        }
    }
    scores[best]
}

pub fn split_detections(dets: &[Detection], mode: SplitMode) -> ConfidenceSplit {
    split_detections_in_band(dets, mode, ThresholdBand::default())
}

pub fn split_detections_in_band(
    dets: &[Detection],
    mode: SplitMode,
    band: ThresholdBand,
) -> ConfidenceSplit {
    let scores: Vec<f64> = dets.iter().map(|d| sanitize(d.score)).collect();
    split_scores(&scores, mode, band)
}

fn sanitize(score: f64) -> f64 {
    if score.is_nan() {
        0.0
    } else {
        score.clamp(0.0, 1.0)
    }
}

/// Split over raw scores; scores must lie in `[0, 1]`.
pub fn split_scores(scores: &[f64], mode: SplitMode, band: ThresholdBand) -> ConfidenceSplit {
    let threshold = match mode {
        SplitMode::Fixed(t) => t,
        SplitMode::Adaptive if scores.is_empty() => 1.0,
        SplitMode::Adaptive => {
            let mut sorted = scores.to_vec();
            steepest_drop(&mut sorted).clamp(band.min, band.max)
        }
    };
    let (high, low) = (0..scores.len()).partition(|&i| scores[i] >= threshold);
    ConfidenceSplit {
        threshold,
        high,
        low,
    }
}
