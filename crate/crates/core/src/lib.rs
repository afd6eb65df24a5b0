//! Tracking-by-detection with ByteTrack-style two-round association and a
//! per-frame adaptive high/low confidence split.
//!
//! Modules, bottom up:
//! - [`geometry`]: boxes and IoU
//! - [`kalman`]: constant-velocity filter over `(cx, cy, aspect, h)`
//! - [`assignment`]: gated linear assignment (plus a brute-force oracle)
//! - [`threshold`]: the steepest-drop confidence split
//! - [`tracker`]: the per-frame state machine
//! - [`mot_io`]: MOT Challenge CSV files and sequence layout
//! - [`metrics`]: CLEAR MOT and IDF1
//! - [`synth`]: seeded synthetic scenarios

pub mod assignment;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod kalman;
pub mod metrics;
pub mod mot_io;
pub mod synth;
pub mod threshold;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{iou, BBox};
pub use tracker::{
    run_sequence, Detection, FrameResult, TrackOutput, Tracker, TrackerConfig, TrackerMode,
};
