use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kalman::KalmanFilter;
use crate::threshold::ThresholdBand;

/// Association pipeline variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackerMode {
    /// One association round over detections scoring at least `fixed_threshold`.
    Sort,
    /// Two rounds, high/low split at `fixed_threshold`.
    ByteFixed,
    /// Two rounds, high/low split at the per-frame steepest score drop.
    ByteAdaptive,
}

impl TrackerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerMode::Sort => "sort",
            TrackerMode::ByteFixed => "byte-fixed",
            TrackerMode::ByteAdaptive => "byte-adaptive",
        }
    }

    pub fn uses_fixed_threshold(&self) -> bool {
        !matches!(self, TrackerMode::ByteAdaptive)
    }
}

impl fmt::Display for TrackerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sort" => Ok(TrackerMode::Sort),
            "byte-fixed" => Ok(TrackerMode::ByteFixed),
            "byte-adaptive" => Ok(TrackerMode::ByteAdaptive),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode `{other}` (expected sort, byte-fixed or byte-adaptive)"
            ))),
        }
    }
}

/// Gates are costs (`1 - IoU`): a pair is admissible when its cost is at most the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub mode: TrackerMode,
    pub fixed_threshold: f64,
    /// Detections below this score are dropped before splitting.
    pub score_floor: f64,
    pub first_match_gate: f64,
    pub second_match_gate: f64,
    pub tentative_match_gate: f64,
    /// Frames a lost track is kept without an update.
    pub track_buffer: u32,
    pub min_box_area: f64,
    /// In fixed-threshold modes, births need a score of at least
    /// threshold + this margin.
    pub new_track_margin: f64,
    /// Same, for the adaptive threshold. The adaptive split already sits on
    /// top of a score drop, and every high detection scores at or above it,
    /// so a positive margin here blocks births whenever the high set is
    /// tightly grouped.
    pub adaptive_track_margin: f64,
    pub weight_position: f64,
    pub weight_velocity: f64,
    /// When off, newborn tracks are confirmed immediately and the third
    /// (tentative) association round is skipped.
    pub handle_tentative: bool,
    pub adaptive_band: ThresholdBand,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let kf = KalmanFilter::default();
        Self {
            mode: TrackerMode::ByteAdaptive,
            fixed_threshold: 0.6,
            score_floor: 0.1,
            first_match_gate: 0.8,
            second_match_gate: 0.5,
            tentative_match_gate: 0.3,
            track_buffer: 30,
            min_box_area: 10.0,
            new_track_margin: 0.1,
            adaptive_track_margin: 0.0,
            weight_position: kf.weight_position,
            weight_velocity: kf.weight_velocity,
            handle_tentative: true,
            adaptive_band: ThresholdBand::default(),
        }
    }
}

impl TrackerConfig {
    pub fn with_mode(mode: TrackerMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn kalman(&self) -> KalmanFilter {
        KalmanFilter::new(self.weight_position, self.weight_velocity)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("fixed_threshold", self.fixed_threshold)?;
        unit("score_floor", self.score_floor)?;
        unit("first_match_gate", self.first_match_gate)?;
        unit("second_match_gate", self.second_match_gate)?;
        unit("tentative_match_gate", self.tentative_match_gate)?;
        unit("adaptive_min", self.adaptive_band.min)?;
        unit("adaptive_max", self.adaptive_band.max)?;
        if self.adaptive_band.min > self.adaptive_band.max {
            return Err(Error::InvalidConfig(
                "adaptive_min must not exceed adaptive_max".into(),
            ));
        }
        if self.track_buffer < 1 {
            return Err(Error::InvalidConfig("track_buffer must be at least 1".into()));
        }
        if self.min_box_area.is_nan()
            || self.min_box_area < 0.0
            || !self.new_track_margin.is_finite()
            || !self.adaptive_track_margin.is_finite()
        {
            return Err(Error::InvalidConfig(
                "min_box_area must be >= 0 and track margins finite".into(),
            ));
        }
        if !(self.weight_position > 0.0 && self.weight_velocity > 0.0) {
            return Err(Error::InvalidConfig("Kalman weights must be positive".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` setting using the field names above.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("{key}: `{value}` is not a number")))
        }
        match key {
            "mode" => self.mode = value.parse()?,
            "fixed_threshold" => self.fixed_threshold = num(key, value)?,
            "score_floor" => self.score_floor = num(key, value)?,
            "first_match_gate" => self.first_match_gate = num(key, value)?,
            "second_match_gate" => self.second_match_gate = num(key, value)?,
            "tentative_match_gate" => self.tentative_match_gate = num(key, value)?,
            "track_buffer" => {
                self.track_buffer = value.parse().map_err(|_| {
                    Error::InvalidConfig(format!("{key}: `{value}` is not a frame count"))
                })?
            }
            "min_box_area" => self.min_box_area = num(key, value)?,
            "new_track_margin" => self.new_track_margin = num(key, value)?,
            "adaptive_track_margin" => self.adaptive_track_margin = num(key, value)?,
            "weight_position" => self.weight_position = num(key, value)?,
            "weight_velocity" => self.weight_velocity = num(key, value)?,
            "handle_tentative" => {
                self.handle_tentative = match value {
                    "true" | "1" | "on" => true,
                    "false" | "0" | "off" => false,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "{key}: `{value}` is not a boolean"
                        )))
                    }
                }
            }
            "adaptive_min" => self.adaptive_band.min = num(key, value)?,
            "adaptive_max" => self.adaptive_band.max = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrackerConfig::default().validate().unwrap();
    }

    #[test]
    fn set_and_validate() {
        let mut c = TrackerConfig::default();
        c.set("mode", "sort").unwrap();
        c.set("fixed_threshold", "0.65").unwrap();
        c.set("handle_tentative", "off").unwrap();
        assert_eq!(c.mode, TrackerMode::Sort);
        assert_eq!(c.fixed_threshold, 0.65);
        assert!(!c.handle_tentative);
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("track_buffer", "-3").is_err());
        c.set("first_match_gate", "1.5").unwrap();
        assert!(c.validate().is_err());
        let c = TrackerConfig {
            track_buffer: 0,
            ..TrackerConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
