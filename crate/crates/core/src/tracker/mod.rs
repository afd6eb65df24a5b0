//! Tracking-by-detection state machine.
//!
//! Each frame runs: filter detections, split high/low, predict all tracks,
//! associate tracked and lost tracks with the high set, associate the
//! tracks that were confirmed last frame but missed with the low set,
//! confirm or drop tentative tracks, age lost tracks, then birth new tracks
//! from leftover high detections.

mod config;
mod track;

use std::collections::BTreeMap;

pub use config::{TrackerConfig, TrackerMode};
pub use track::{Detection, FrameResult, Track, TrackOutput, TrackStatus};

use crate::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::kalman::KalmanFilter;
use crate::threshold::{split_scores, SplitMode};

/// A status change observed during one step. `from` is `None` for births.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub track_id: u64,
    pub from: Option<TrackStatus>,
    pub to: TrackStatus,
}

/// Bookkeeping for the most recent step, for traces and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub frame: u32,
    pub threshold: f64,
    /// Indices into the step's detection slice.
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    /// `(track id, detection index)` for every birth.
    pub births: Vec<(u64, usize)>,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    kalman: KalmanFilter,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
    report: StepReport,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            kalman: config.kalman(),
            config,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            report: StepReport::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks (tentative, tracked and lost).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn last_report(&self) -> &StepReport {
        &self.report
    }

    /// Processes one frame. Skipped frame indices are run as empty frames first.
    pub fn step(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult> {
        if let Some(prev) = self.last_frame {
            if frame <= prev {
                return Err(Error::NonMonotonicFrame {
                    frame,
                    previous: prev,
                });
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::FrameMismatch {
                frame,
                detection_frame: d.frame,
            });
        }
        if let Some(prev) = self.last_frame {
            for skipped in prev + 1..frame {
                self.process(skipped, &[])?;
            }
        }
        self.process(frame, detections)
    }

    fn process(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult> {
        let first_frame = self.last_frame.is_none();
        self.last_frame = Some(frame);
        let cfg = self.config.clone();

        // 1. drop noise and degenerate boxes
        let kept: Vec<usize> = detections
            .iter()
            .enumerate()
            .filter(|(_, d)| {
                d.score >= cfg.score_floor
                    && d.bbox.width > 0.0
                    && d.bbox.height > 0.0
                    && d.bbox.area() >= cfg.min_box_area
            })
            .map(|(i, _)| i)
            .collect();

        // 2. high/low split
        let scores: Vec<f64> = kept.iter().map(|&i| detections[i].score.min(1.0)).collect();
        let mode = match cfg.mode {
            TrackerMode::ByteAdaptive => SplitMode::Adaptive,
            TrackerMode::Sort | TrackerMode::ByteFixed => SplitMode::Fixed(cfg.fixed_threshold),
        };
        let split = split_scores(&scores, mode, cfg.adaptive_band);
        let high: Vec<usize> = split.high.iter().map(|&k| kept[k]).collect();
        let low: Vec<usize> = match cfg.mode {
            TrackerMode::Sort => Vec::new(),
            _ => split.low.iter().map(|&k| kept[k]).collect(),
        };
        let birth_gate = split.threshold
            + match cfg.mode {
                TrackerMode::ByteAdaptive => cfg.adaptive_track_margin,
                _ => cfg.new_track_margin,
            };

        let mut report = StepReport {
            frame,
            threshold: split.threshold,
            high: high.clone(),
            low: low.clone(),
            ..StepReport::default()
        };

        // 3. predict
        let prior: Vec<TrackStatus> = self.tracks.iter().map(|t| t.status).collect();
        for t in &mut self.tracks {
            t.state = self.kalman.predict(&t.state);
            t.age += 1;
        }

        let mut track_matched = vec![false; self.tracks.len()];
        let mut det_used = vec![false; detections.len()];

        // 4. first association: tracked + lost against high
        let pool: Vec<usize> = (0..self.tracks.len())
            .filter(|&k| matches!(prior[k], TrackStatus::Tracked | TrackStatus::Lost))
            .collect();
        self.associate(
            frame,
            &pool,
            &high,
            detections,
            cfg.first_match_gate,
            &mut track_matched,
            &mut det_used,
        )?;

        // 5. second association: last frame's confirmed tracks against low
        if cfg.mode != TrackerMode::Sort {
            let pool: Vec<usize> = (0..self.tracks.len())
                .filter(|&k| prior[k] == TrackStatus::Tracked && !track_matched[k])
                .collect();
            let gate = self.config.second_match_gate;
            self.associate(
                frame,
                &pool,
                &low,
                detections,
                gate,
                &mut track_matched,
                &mut det_used,
            )?;
        }

        // 6. tentative tracks against what is left of the high set
        let tentative: Vec<usize> = (0..self.tracks.len())
            .filter(|&k| prior[k] == TrackStatus::Tentative)
            .collect();
        if !tentative.is_empty() {
            let remaining: Vec<usize> = high.iter().copied().filter(|&i| !det_used[i]).collect();
            let gate = self.config.tentative_match_gate;
            self.associate(
                frame,
                &tentative,
                &remaining,
                detections,
                gate,
                &mut track_matched,
                &mut det_used,
            )?;
        }

        // 7. lifecycle of everything left unmatched
        let buffer = self.config.track_buffer;
        for (k, t) in self.tracks.iter_mut().enumerate() {
            if track_matched[k] {
                t.status = TrackStatus::Tracked;
            } else {
                t.frames_since_update += 1;
                t.status = match prior[k] {
                    TrackStatus::Tentative => TrackStatus::Removed,
                    TrackStatus::Tracked => TrackStatus::Lost,
                    TrackStatus::Lost if t.frames_since_update > buffer => TrackStatus::Removed,
                    other => other,
                };
            }
            if t.status != prior[k] {
                report.transitions.push(Transition {
                    track_id: t.id,
                    from: Some(prior[k]),
                    to: t.status,
                });
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Removed);

        // 8. births from unmatched high detections
        let born_status = if first_frame || !self.config.handle_tentative {
            TrackStatus::Tracked
        } else {
            TrackStatus::Tentative
        };
        for &i in &high {
            let d = &detections[i];
            if det_used[i] || d.score < birth_gate {
                continue;
            }
            let state = self.kalman.initiate(d.bbox.to_state_vector()?)?;
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track {
                id,
                state,
                status: born_status,
                start_frame: frame,
                last_update_frame: frame,
                frames_since_update: 0,
                score: d.score,
                age: 0,
            });
            report.births.push((id, i));
            report.transitions.push(Transition {
                track_id: id,
                from: None,
                to: born_status,
            });
        }

        // 9. emit confirmed tracks
        let min_area = self.config.min_box_area;
        let mut outputs: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Tracked)
            .map(|t| TrackOutput {
                id: t.id,
                bbox: t.bbox(),
                score: t.score,
            })
            .filter(|o| o.bbox.area() >= min_area)
            .collect();
        outputs.sort_by_key(|o| o.id);

        self.report = report;
        Ok(FrameResult { frame, outputs })
    }

    #[allow(clippy::too_many_arguments)]
    fn associate(
        &mut self,
        frame: u32,
        track_idx: &[usize],
        det_idx: &[usize],
        detections: &[Detection],
        gate: f64,
        track_matched: &mut [bool],
        det_used: &mut [bool],
    ) -> Result<()> {
        if track_idx.is_empty() || det_idx.is_empty() {
            return Ok(());
        }
        let predicted: Vec<_> = track_idx.iter().map(|&k| self.tracks[k].bbox()).collect();
        let cost = CostMatrix::from_fn(track_idx.len(), det_idx.len(), |r, c| {
            1.0 - iou(&predicted[r], &detections[det_idx[c]].bbox)
        });
        let result = solve(&cost, gate)?;
        for (r, c) in result.matches {
            let (k, i) = (track_idx[r], det_idx[c]);
            let d = &detections[i];
            let t = &mut self.tracks[k];
            t.state = self.kalman.update(&t.state, d.bbox.to_state_vector()?)?;
            t.frames_since_update = 0;
            t.last_update_frame = frame;
            t.score = d.score;
            track_matched[k] = true;
            det_used[i] = true;
        }
        Ok(())
    }
}

/// Runs a whole sequence, one step per frame from 1 to the last frame.
///
/// Frames missing from `detections_by_frame` are processed as empty.
/// `frame_count` extends the run past the last frame with detections.
pub fn run_sequence(
    config: &TrackerConfig,
    detections_by_frame: &BTreeMap<u32, Vec<Detection>>,
    frame_count: Option<u32>,
) -> Result<Vec<FrameResult>> {
    run_sequence_with(config, detections_by_frame, frame_count, |_| {})
}

/// [`run_sequence`] with a callback receiving each step's report.
pub fn run_sequence_with(
    config: &TrackerConfig,
    detections_by_frame: &BTreeMap<u32, Vec<Detection>>,
    frame_count: Option<u32>,
    mut on_step: impl FnMut(&StepReport),
) -> Result<Vec<FrameResult>> {
    let mut tracker = Tracker::new(config.clone())?;
    let first = detections_by_frame
        .keys()
        .next()
        .copied()
        .unwrap_or(1)
        .min(1);
    let last = detections_by_frame
        .keys()
        .next_back()
        .copied()
        .unwrap_or(0)
        .max(frame_count.unwrap_or(0));
    let mut results = Vec::with_capacity(last.saturating_sub(first) as usize + 1);
    for frame in first..=last {
        let dets = detections_by_frame
            .get(&frame)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        let r = tracker.step(frame, dets).map_err(|e| Error::AtFrame {
            frame,
            source: Box::new(e),
        })?;
        on_step(tracker.last_report());
        results.push(r);
    }
    Ok(results)
}
