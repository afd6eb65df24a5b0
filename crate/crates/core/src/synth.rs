//! Synthetic scenarios: linear ground-truth trajectories plus a detector
//! model with banded confidence.
//!
//! Generation is driven by a single `ChaCha8Rng` seeded with
//! `ScenarioSpec::seed`, so a spec reproduces the same streams on every
//! platform. Per frame, objects are visited in order. Each object draws a
//! detection trial, four Gaussian offsets (left, top, width, height) and a
//! score. After the objects, the frame draws a Poisson clutter count and then,
//! for each clutter box, a template object for its size, a position and a
//! score.
//!
//! Objects move at constant velocity and are held inside the arena: a box
//! that reaches an edge stays there.

use std::ops::RangeInclusive;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::mot_io::{self, DetectionsByFrame, GroundTruth, GtEntry};
use crate::tracker::Detection;

pub const PRESETS: [&str; 4] = ["clean", "occlusion-dip", "dense-clutter", "mot20-like"];
pub const DEFAULT_SEED: u64 = 7;
pub const FRAME_RATE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMotion {
    /// Box at frame 1.
    pub start: BBox,
    /// Pixels per frame.
    pub velocity: (f64, f64),
}

/// Frames in which one object's detections score in `scores` instead of the
/// true band. `object` is the 1-based ground-truth id.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionWindow {
    pub object: u64,
    pub frames: RangeInclusive<u32>,
    pub scores: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub frames: u32,
    pub arena: (f64, f64),
    pub objects: Vec<ObjectMotion>,
    pub noise_sigma: f64,
    pub detect_prob: f64,
    pub occlusion_windows: Vec<OcclusionWindow>,
    /// Expected clutter boxes per frame.
    pub clutter_rate: f64,
    pub clutter_score_range: (f64, f64),
    pub true_score_range: (f64, f64),
}

fn check_range(what: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi {
        Ok(())
    } else {
        Err(Error::InvalidScenario(format!(
            "{what} ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"
        )))
    }
}

impl ScenarioSpec {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        let (aw, ah) = self.arena;
        if !(aw.is_finite() && ah.is_finite() && aw > 0.0 && ah > 0.0) {
            return bad(format!("arena ({aw}, {ah}) must be positive"));
        }
        for (i, o) in self.objects.iter().enumerate() {
            let b = &o.start;
            let finite = [b.left, b.top, b.width, b.height, o.velocity.0, o.velocity.1]
                .iter()
                .all(|v| v.is_finite());
            if !finite || b.width <= 0.0 || b.height <= 0.0 || b.width > aw || b.height > ah {
                return bad(format!("object {} has an invalid start box or velocity", i + 1));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} must be >= 0", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.detect_prob) {
            return bad(format!("detect_prob {} must lie in [0, 1]", self.detect_prob));
        }
        if !(self.clutter_rate.is_finite() && self.clutter_rate >= 0.0) {
            return bad(format!("clutter_rate {} must be >= 0", self.clutter_rate));
        }
        check_range("clutter_score_range", self.clutter_score_range)?;
        check_range("true_score_range", self.true_score_range)?;
        for w in &self.occlusion_windows {
            if w.object == 0 || w.object as usize > self.objects.len() {
                return bad(format!("occlusion window names unknown object {}", w.object));
            }
            if w.frames.is_empty() {
                return bad(format!("occlusion window for object {} is empty", w.object));
            }
            check_range("occlusion score range", w.scores)?;
        }
        Ok(())
    }

    /// Ground-truth box of `object` (0-based) at `frame`.
    pub fn box_at(&self, object: usize, frame: u32) -> BBox {
        let o = &self.objects[object];
        let t = f64::from(frame - 1);
        let b = o.start;
        let left = (b.left + o.velocity.0 * t).clamp(0.0, self.arena.0 - b.width);
        let top = (b.top + o.velocity.1 * t).clamp(0.0, self.arena.1 - b.height);
        BBox::new(left, top, b.width, b.height)
    }

    fn occlusion(&self, id: u64, frame: u32) -> Option<(f64, f64)> {
        self.occlusion_windows
            .iter()
            .find(|w| w.object == id && w.frames.contains(&frame))
            .map(|w| w.scores)
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<(GroundTruth, DetectionsByFrame)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidScenario(e.to_string()))?;
    let clutter = if spec.clutter_rate > 0.0 {
        Some(Poisson::new(spec.clutter_rate).map_err(|e| Error::InvalidScenario(e.to_string()))?)
    } else {
        None
    };

    let mut gt = GroundTruth::new();
    let mut dets = DetectionsByFrame::new();
    for frame in 1..=spec.frames {
        let mut objs = Vec::with_capacity(spec.objects.len());
        let mut frame_dets = Vec::new();
        for i in 0..spec.objects.len() {
            let id = i as u64 + 1;
            let b = spec.box_at(i, frame);
            objs.push(GtEntry {
                id,
                bbox: b,
                visibility: 1.0,
            });
            let detected = rng.random::<f64>() < spec.detect_prob;
            let d: [f64; 4] = std::array::from_fn(|_| noise.sample(&mut rng));
            let band = spec.occlusion(id, frame).unwrap_or(spec.true_score_range);
            let score = uniform(&mut rng, band);
            if detected {
                let bbox = BBox::new(
                    b.left + d[0],
                    b.top + d[1],
                    (b.width + d[2]).max(1.0),
                    (b.height + d[3]).max(1.0),
                );
                frame_dets.push(Detection::new(frame, bbox, score));
            }
        }
        if let Some(poisson) = &clutter {
            let n = poisson.sample(&mut rng) as usize;
            for _ in 0..n {
                let (w, h) = if objs.is_empty() {
                    (20.0, 50.0)
                } else {
                    let t = &objs[rng.random_range(0..objs.len())].bbox;
                    (t.width, t.height)
                };
                let left = rng.random_range(0.0..=(spec.arena.0 - w).max(0.0));
                let top = rng.random_range(0.0..=(spec.arena.1 - h).max(0.0));
                let score = uniform(&mut rng, spec.clutter_score_range);
                frame_dets.push(Detection::new(frame, BBox::new(left, top, w, h), score));
            }
        }
        gt.insert(frame, objs);
        dets.insert(frame, frame_dets);
    }
    Ok((gt, dets))
}

/// Horizontal walkers on separate lanes, sized like distant pedestrians.
/// Each walker starts `speed * U(30, 320)` pixels from the edge it walks
/// towards, so a good share of them reach that edge and stop mid-sequence.
fn lanes(rng: &mut ChaCha8Rng, n: usize, arena: (f64, f64)) -> Vec<ObjectMotion> {
    let pitch = arena.1 / n as f64;
    (0..n)
        .map(|i| {
            let h = rng.random_range(0.7..=0.85) * pitch.min(100.0);
            let w = h * rng.random_range(0.35..=0.45);
            let top = i as f64 * pitch + (pitch - h) / 2.0;
            let speed: f64 = rng.random_range(1.5..=3.0);
            let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let to_edge: f64 = (speed * rng.random_range(30.0..=320.0)).min(arena.0 - w);
            let left = if dir > 0.0 { arena.0 - w - to_edge } else { to_edge };
            ObjectMotion {
                start: BBox::new(left, top, w, h),
                velocity: (dir * speed, 0.0),
            }
        })
        .collect()
}

/// First frame at which `object` sits against an arena edge, if any.
fn edge_arrival(spec: &ScenarioSpec, object: usize) -> Option<u32> {
    (2..=spec.frames).find(|&f| {
        let b = spec.box_at(object, f);
        let moving = spec.objects[object].velocity != (0.0, 0.0);
        moving && (b.left <= 0.0 || b.right() >= spec.arena.0 || b.top <= 0.0 || b.bottom() >= spec.arena.1)
    })
}

/// One 15-frame dip per object. A walker that reaches the arena edge is cut
/// by the image border and dips from the frame before it stops; the others
/// dip at staggered times.
fn border_dips(spec: &ScenarioSpec, scores: (f64, f64)) -> Vec<OcclusionWindow> {
    (0..spec.objects.len())
        .map(|i| {
            let start = match edge_arrival(spec, i) {
                Some(a) if a + 13 <= spec.frames => a - 1,
                _ => 20 + (i as u32 * 17) % spec.frames.saturating_sub(35).max(1),
            };
            OcclusionWindow {
                object: i as u64 + 1,
                frames: start..=start + 14,
                scores,
            }
        })
        .collect()
}

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    preset_with_seed(name, DEFAULT_SEED)
}

/// Named scenario; `seed` drives both the layout and the generated streams.
pub fn preset_with_seed(name: &str, seed: u64) -> Result<ScenarioSpec> {
    let mut layout = ChaCha8Rng::seed_from_u64(seed);
    layout.set_stream(1);
    let arena = (1920.0, 1080.0);
    let frames = 200;
    let clean = |layout: &mut ChaCha8Rng, n| ScenarioSpec {
        seed,
        frames,
        arena,
        objects: lanes(layout, n, arena),
        noise_sigma: 1.5,
        detect_prob: 1.0,
        occlusion_windows: Vec::new(),
        clutter_rate: 0.0,
        clutter_score_range: (0.0, 0.0),
        true_score_range: (0.8, 1.0),
    };
    let spec = match name {
        "clean" => clean(&mut layout, 10),
        "occlusion-dip" => {
            let mut s = clean(&mut layout, 10);
            s.occlusion_windows = border_dips(&s, (0.35, 0.5));
            s
        }
        "dense-clutter" => {
            let mut s = clean(&mut layout, 20);
            s.clutter_rate = 10.0;
            s.clutter_score_range = (0.05, 0.3);
            s
        }
        "mot20-like" => {
            let n = 40;
            let objects = (0..n)
                .map(|_| {
                    let h = layout.random_range(40.0..=70.0);
                    let w = h * layout.random_range(0.35..=0.45);
                    ObjectMotion {
                        start: BBox::new(
                            layout.random_range(0.0..=arena.0 - w),
                            layout.random_range(0.0..=arena.1 - h),
                            w,
                            h,
                        ),
                        velocity: (layout.random_range(-2.5..=2.5), layout.random_range(-1.0..=1.0)),
                    }
                })
                .collect();
            let occlusion_windows = (0..n as u64)
                .map(|i| {
                    let start = layout.random_range(10..=170);
                    OcclusionWindow {
                        object: i + 1,
                        frames: start..=start + 14,
                        scores: (0.15, 0.4),
                    }
                })
                .collect();
            ScenarioSpec {
                seed,
                frames,
                arena,
                objects,
                noise_sigma: 2.0,
                detect_prob: 0.9,
                occlusion_windows,
                clutter_rate: 5.0,
                clutter_score_range: (0.05, 0.35),
                true_score_range: (0.5, 0.9),
            }
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

/// Writes `det/det.txt`, `gt/gt.txt` and `seqinfo.ini` under `dir`.
pub fn write_sequence(
    dir: &Path,
    name: &str,
    spec: &ScenarioSpec,
    gt: &GroundTruth,
    dets: &DetectionsByFrame,
) -> Result<()> {
    for sub in ["det", "gt"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    mot_io::write_atomic(&dir.join("det/det.txt"), mot_io::format_detections(dets).as_bytes())?;
    mot_io::write_atomic(&dir.join("gt/gt.txt"), mot_io::format_ground_truth(gt).as_bytes())?;
    let info = mot_io::format_seqinfo(name, spec.frames, FRAME_RATE, spec.arena.0, spec.arena.1);
    mot_io::write_atomic(&dir.join("seqinfo.ini"), info.as_bytes())
}
