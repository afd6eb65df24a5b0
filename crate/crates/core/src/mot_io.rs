//! MOT Challenge text formats.
//!
//! * detections (`det/det.txt`): `frame,-1,left,top,width,height,conf[,x,y,z]`
//! * ground truth (`gt/gt.txt`): `frame,id,left,top,width,height,flag,class,visibility`
//! * results: `frame,id,left,top,width,height,conf,-1,-1,-1`
//! * `seqinfo.ini`: only `seqLength` and `frameRate` from `[Sequence]` are read.
//!
//! Results are written with two decimals for geometry and six for the score,
//! one `\n`-terminated line per box, so output is byte-stable across runs and
//! platforms. Negative zero is printed as zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::tracker::{Detection, FrameResult, TrackOutput};

/// Ground-truth box of one object at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtEntry {
    pub id: u64,
    pub bbox: BBox,
    pub visibility: f64,
}

pub type GroundTruth = BTreeMap<u32, Vec<GtEntry>>;
pub type Hypotheses = BTreeMap<u32, Vec<TrackOutput>>;
pub type DetectionsByFrame = BTreeMap<u32, Vec<Detection>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceData {
    pub name: String,
    pub frame_count: u32,
    pub frame_rate: Option<f64>,
    /// Every frame in `1..=frame_count` has an entry, possibly empty.
    pub detections_by_frame: DetectionsByFrame,
    pub ground_truth_by_frame: Option<GroundTruth>,
    /// Scores outside `[0, 1]` that were clamped while reading.
    pub clamped_scores: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeqInfo {
    pub seq_length: Option<u32>,
    pub frame_rate: Option<f64>,
}

/// Locations of one sequence inside a MOTChallenge-style dataset directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePaths {
    pub name: String,
    pub dir: PathBuf,
    pub detections: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub seqinfo: Option<PathBuf>,
}

struct Fields<'a> {
    path: &'a Path,
    line: usize,
    cols: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(path: &'a Path, line: usize, text: &'a str, min: usize) -> Result<Self> {
        let cols: Vec<&str> = text.split(',').map(str::trim).collect();
        if cols.len() < min {
            return Err(Error::parse(
                path,
                line,
                format!("expected at least {min} columns, found {}", cols.len()),
            ));
        }
        Ok(Self { path, line, cols })
    }

    fn has(&self, i: usize) -> bool {
        self.cols.get(i).is_some_and(|c| !c.is_empty())
    }

    fn f64(&self, i: usize, name: &str) -> Result<f64> {
        let raw = self.cols[i];
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                self.path,
                self.line,
                format!("column {} ({name}): `{raw}` is not a finite number", i + 1),
            )),
        }
    }

    /// Frame indices and ids are integers; tolerate `12.0`.
    fn integer(&self, i: usize, name: &str) -> Result<i64> {
        let v = self.f64(i, name)?;
        if v.fract() != 0.0 {
            return Err(Error::parse(
                self.path,
                self.line,
                format!("column {} ({name}): `{}` is not an integer", i + 1, self.cols[i]),
            ));
        }
        Ok(v as i64)
    }

    fn frame(&self) -> Result<u32> {
        let f = self.integer(0, "frame")?;
        u32::try_from(f)
            .ok()
            .filter(|f| *f >= 1)
            .ok_or_else(|| Error::parse(self.path, self.line, format!("frame {f} must be >= 1")))
    }

    fn bbox(&self) -> Result<BBox> {
        let b = BBox::new(
            self.f64(2, "bb_left")?,
            self.f64(3, "bb_top")?,
            self.f64(4, "bb_width")?,
            self.f64(5, "bb_height")?,
        );
        if b.width < 0.0 || b.height < 0.0 {
            return Err(Error::parse(self.path, self.line, "negative box size"));
        }
        Ok(b)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a detection file. Frame count is the largest frame seen.
pub fn read_detections(path: impl AsRef<Path>) -> Result<SequenceData> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut seq = parse_detections(&text, path)?;
    seq.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(seq)
}

pub fn parse_detections(text: &str, path: &Path) -> Result<SequenceData> {
    let mut by_frame = DetectionsByFrame::new();
    let mut clamped = 0;
    for (line, raw) in data_lines(text) {
        let f = Fields::new(path, line, raw, 7)?;
        let frame = f.frame()?;
        let bbox = f.bbox()?;
        let mut score = f.f64(6, "conf")?;
        if !(0.0..=1.0).contains(&score) {
            score = score.clamp(0.0, 1.0);
            clamped += 1;
        }
        by_frame.entry(frame).or_default().push(Detection {
            frame,
            bbox,
            score,
            source_line: Some(line),
        });
    }
    if clamped > 0 {
        log::warn!("{}: clamped {clamped} scores into [0, 1]", path.display());
    }
    let frame_count = by_frame.keys().next_back().copied().unwrap_or(0);
    let mut seq = SequenceData {
        frame_count,
        detections_by_frame: by_frame,
        clamped_scores: clamped,
        ..SequenceData::default()
    };
    seq.extend_to(frame_count);
    Ok(seq)
}

impl SequenceData {
    /// Grows `frame_count` to at least `frames` and fills missing frames.
    pub fn extend_to(&mut self, frames: u32) {
        self.frame_count = self.frame_count.max(frames);
        for f in 1..=self.frame_count {
            self.detections_by_frame.entry(f).or_default();
        }
    }
}

/// Reads `gt.txt`, keeping rows with flag 1 and pedestrian class.
///
/// Missing flag/class/visibility columns default to 1. A class of -1 means
/// "unspecified" (older benchmark files) and is kept.
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    parse_ground_truth(&read_text(path)?, path)
}

pub fn parse_ground_truth(text: &str, path: &Path) -> Result<GroundTruth> {
    let mut gt = GroundTruth::new();
    for (line, raw) in data_lines(text) {
        let f = Fields::new(path, line, raw, 6)?;
        let frame = f.frame()?;
        let id = f.integer(1, "id")?;
        let bbox = f.bbox()?;
        let flag = if f.has(6) { f.f64(6, "flag")? } else { 1.0 };
        let class = if f.has(7) { f.integer(7, "class")? } else { 1 };
        let visibility = if f.has(8) { f.f64(8, "visibility")? } else { 1.0 };
        if flag != 1.0 || !(class == 1 || class == -1) {
            continue;
        }
        let id = u64::try_from(id)
            .map_err(|_| Error::parse(path, line, format!("ground-truth id {id} is negative")))?;
        gt.entry(frame).or_default().push(GtEntry {
            id,
            bbox,
            visibility,
        });
    }
    Ok(gt)
}

/// Reads a tracker result file back into per-frame outputs.
pub fn read_results(path: impl AsRef<Path>) -> Result<Hypotheses> {
    let path = path.as_ref();
    parse_results(&read_text(path)?, path)
}

pub fn parse_results(text: &str, path: &Path) -> Result<Hypotheses> {
    let mut out = Hypotheses::new();
    for (line, raw) in data_lines(text) {
        let f = Fields::new(path, line, raw, 6)?;
        let frame = f.frame()?;
        let id = f.integer(1, "id")?;
        let id = u64::try_from(id)
            .map_err(|_| Error::parse(path, line, format!("track id {id} is negative")))?;
        let bbox = f.bbox()?;
        let score = if f.has(6) { f.f64(6, "conf")? } else { 1.0 };
        out.entry(frame)
            .or_default()
            .push(TrackOutput { id, bbox, score });
    }
    Ok(out)
}

/// Result lines keyed by frame, for evaluation of in-memory runs.
pub fn hypotheses_from_results(results: &[FrameResult]) -> Hypotheses {
    results
        .iter()
        .filter(|r| !r.outputs.is_empty())
        .map(|r| (r.frame, r.outputs.clone()))
        .collect()
}

fn fixed(out: &mut String, v: f64, decimals: usize) {
    let s = format!("{v:.decimals$}");
    // "-0.00" and friends
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        out.push_str(&s[1..]);
    } else {
        out.push_str(&s);
    }
}

fn push_box_line(out: &mut String, frame: u32, id: i64, b: &BBox, score: f64) {
    let _ = write!(out, "{frame},{id},");
    for v in [b.left, b.top, b.width, b.height] {
        fixed(out, v, 2);
        out.push(',');
    }
    fixed(out, score, 6);
    out.push_str(",-1,-1,-1\n");
}

pub fn format_results(results: &[FrameResult]) -> String {
    let mut out = String::new();
    for r in results {
        for o in &r.outputs {
            push_box_line(&mut out, r.frame, o.id as i64, &o.bbox, o.score);
        }
    }
    out
}

/// Same layout as [`format_results`], from parsed result rows.
pub fn format_hypotheses(hyp: &Hypotheses) -> String {
    let mut out = String::new();
    for (frame, outputs) in hyp {
        for o in outputs {
            push_box_line(&mut out, *frame, o.id as i64, &o.bbox, o.score);
        }
    }
    out
}

pub fn write_results(path: impl AsRef<Path>, results: &[FrameResult]) -> Result<()> {
    write_atomic(path.as_ref(), format_results(results).as_bytes())
}

/// Detection file in the same fixed-decimal layout, id column `-1`.
pub fn format_detections(dets: &DetectionsByFrame) -> String {
    let mut out = String::new();
    for (frame, ds) in dets {
        for d in ds {
            push_box_line(&mut out, *frame, -1, &d.bbox, d.score);
        }
    }
    out
}

pub fn format_ground_truth(gt: &GroundTruth) -> String {
    let mut out = String::new();
    for (frame, entries) in gt {
        for e in entries {
            let _ = write!(out, "{frame},{},", e.id);
            for v in [e.bbox.left, e.bbox.top, e.bbox.width, e.bbox.height] {
                fixed(&mut out, v, 2);
                out.push(',');
            }
            out.push_str("1,1,");
            fixed(&mut out, e.visibility, 6);
            out.push('\n');
        }
    }
    out
}

pub fn read_seqinfo(path: impl AsRef<Path>) -> Result<SeqInfo> {
    let path = path.as_ref();
    parse_seqinfo(&read_text(path)?, path)
}

pub fn parse_seqinfo(text: &str, path: &Path) -> Result<SeqInfo> {
    let mut info = SeqInfo::default();
    let mut in_sequence = false;
    for (line, raw) in data_lines(text) {
        if raw.starts_with(';') || raw.starts_with('#') {
            continue;
        }
        if let Some(section) = raw.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            in_sequence = section.trim().eq_ignore_ascii_case("sequence");
            continue;
        }
        let Some((key, value)) = raw.split_once('=') else {
            return Err(Error::parse(path, line, "expected key=value"));
        };
        if !in_sequence {
            continue;
        }
        let value = value.trim();
        match key.trim() {
            "seqLength" => {
                info.seq_length = Some(value.parse().map_err(|_| {
                    Error::parse(path, line, format!("seqLength `{value}` is not a frame count"))
                })?)
            }
            "frameRate" => {
                info.frame_rate = Some(value.parse().map_err(|_| {
                    Error::parse(path, line, format!("frameRate `{value}` is not a number"))
                })?)
            }
            _ => {}
        }
    }
    Ok(info)
}

pub fn format_seqinfo(name: &str, seq_length: u32, frame_rate: f64, width: f64, height: f64) -> String {
    format!(
        "[Sequence]\nname={name}\nimDir=img1\nframeRate={frame_rate}\nseqLength={seq_length}\nimWidth={width}\nimHeight={height}\nimExt=.jpg\n"
    )
}

/// Lists sequences under `root`: every subdirectory with `det/det.txt`,
/// sorted by name.
pub fn discover_sequences(root: impl AsRef<Path>) -> Result<Vec<SequencePaths>> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let dir = entry.path();
        if !dir.is_dir() {
            continue;
        }
        if let Some(p) = sequence_paths(&dir) {
            out.push(p);
        }
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Paths for a single sequence directory, if it has a detection file.
pub fn sequence_paths(dir: &Path) -> Option<SequencePaths> {
    let detections = dir.join("det").join("det.txt");
    if !detections.is_file() {
        return None;
    }
    let gt = dir.join("gt").join("gt.txt");
    let info = dir.join("seqinfo.ini");
    Some(SequencePaths {
        name: dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        dir: dir.to_path_buf(),
        detections,
        ground_truth: gt.is_file().then_some(gt),
        seqinfo: info.is_file().then_some(info),
    })
}

/// Loads detections, ground truth (if present) and seqinfo of one sequence.
pub fn load_sequence(paths: &SequencePaths) -> Result<SequenceData> {
    let mut seq = read_detections(&paths.detections)?;
    seq.name = paths.name.clone();
    if let Some(info) = &paths.seqinfo {
        let info = read_seqinfo(info)?;
        seq.frame_rate = info.frame_rate;
        if let Some(n) = info.seq_length {
            seq.extend_to(n);
        }
    }
    if let Some(gt) = &paths.ground_truth {
        seq.ground_truth_by_frame = Some(read_ground_truth(gt)?);
    }
    Ok(seq)
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
