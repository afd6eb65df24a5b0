use crate::geometry::BBox;
use crate::kalman::KalmanState;

/// One detector output at a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub bbox: BBox,
    pub score: f64,
    /// 1-based line in the file it was read from, if any.
    pub source_line: Option<usize>,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, score: f64) -> Self {
        Self {
            frame,
            bbox,
            score,
            source_line: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrackStatus {
    /// Born last frame, waiting for a confirming match.
    Tentative,
    Tracked,
    Lost,
    Removed,
}

impl TrackStatus {
    /// Whether `self -> next` is a legal lifecycle transition.
    pub fn can_become(self, next: TrackStatus) -> bool {
        use TrackStatus::*;
        matches!(
            (self, next),
            (Tentative, Tracked)
                | (Tentative, Removed)
                | (Tracked, Tracked)
                | (Tracked, Lost)
                | (Lost, Lost)
                | (Lost, Tracked)
                | (Lost, Removed)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: KalmanState,
    pub status: TrackStatus,
    pub start_frame: u32,
    pub last_update_frame: u32,
    pub frames_since_update: u32,
    /// Score of the last matched detection.
    pub score: f64,
    /// Frames since birth.
    pub age: u32,
}

impl Track {
    pub fn bbox(&self) -> BBox {
        self.state.to_bbox()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    pub score: f64,
}

/// Confirmed tracks at one frame, ordered by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameResult {
    pub frame: u32,
    pub outputs: Vec<TrackOutput>,
}
