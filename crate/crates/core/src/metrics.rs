//! CLEAR MOT and IDF1 evaluation.
//!
//! Per frame, ground truth and hypotheses are matched on `1 - IoU` with an
//! IoU gate. A ground-truth object keeps last frame's hypothesis whenever
//! that pair is still within the gate; the remaining objects are matched by
//! min-cost assignment. An identity switch is counted when an object is
//! matched to a different hypothesis than at its previous match, gaps
//! included. A fragmentation is counted each time an object becomes matched
//! again after having been matched and then missed.
//!
//! IDF1 uses one global one-to-one matching of ground-truth ids to track ids
//! that maximizes the number of frames in which the pair overlaps within the
//! gate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::mot_io::{GroundTruth, Hypotheses};

pub const DEFAULT_IOU_GATE: f64 = 0.5;

/// Keys of [`EvalReport::to_kv`], in output order.
pub const KV_KEYS: [&str; 9] = [
    "mota",
    "idf1",
    "fp",
    "fn",
    "id_switches",
    "fragmentations",
    "mostly_tracked",
    "mostly_lost",
    "gt_count",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub mota: f64,
    pub idf1: f64,
    pub fp: usize,
    pub fn_: usize,
    pub id_switches: usize,
    pub fragmentations: usize,
    pub mostly_tracked: usize,
    pub mostly_lost: usize,
    /// Ground-truth boxes.
    pub gt_count: usize,
    pub gt_trajectories: usize,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    /// Not computed; kept so the report can grow without breaking callers.
    pub hota: Option<f64>,
}

impl EvalReport {
    /// One `key=value` line per metric; reals with six decimals.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mota={:.6}", self.mota);
        let _ = writeln!(s, "idf1={:.6}", self.idf1);
        let _ = writeln!(s, "fp={}", self.fp);
        let _ = writeln!(s, "fn={}", self.fn_);
        let _ = writeln!(s, "id_switches={}", self.id_switches);
        let _ = writeln!(s, "fragmentations={}", self.fragmentations);
        let _ = writeln!(s, "mostly_tracked={}", self.mostly_tracked);
        let _ = writeln!(s, "mostly_lost={}", self.mostly_lost);
        let _ = writeln!(s, "gt_count={}", self.gt_count);
        if let Some(h) = self.hota {
            let _ = writeln!(s, "hota={h:.6}");
        }
        s
    }

    pub fn to_table(&self) -> String {
        let rows = [
            ("MOTA", format!("{:.2}%", 100.0 * self.mota)),
            ("IDF1", format!("{:.2}%", 100.0 * self.idf1)),
            ("FP", self.fp.to_string()),
            ("FN", self.fn_.to_string()),
            ("ID switches", self.id_switches.to_string()),
            ("Fragmentations", self.fragmentations.to_string()),
            (
                "Mostly tracked",
                format!("{} / {}", self.mostly_tracked, self.gt_trajectories),
            ),
            (
                "Mostly lost",
                format!("{} / {}", self.mostly_lost, self.gt_trajectories),
            ),
            ("GT boxes", self.gt_count.to_string()),
        ];
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<16}{v:>14}");
        }
        s
    }
}

#[derive(Default)]
struct Trajectory {
    present: usize,
    matched: usize,
    last_hyp: Option<u64>,
    seen_match: bool,
    in_gap: bool,
    fragmentations: usize,
}

pub fn evaluate(gt: &GroundTruth, results: &Hypotheses, iou_gate: f64) -> Result<EvalReport> {
    if !(iou_gate > 0.0 && iou_gate <= 1.0) {
        return Err(Error::InvalidIouGate(iou_gate));
    }
    let gt_count: usize = gt.values().map(Vec::len).sum();
    if gt_count == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let hyp_count: usize = results.values().map(Vec::len).sum();

    let frames: BTreeSet<u32> = gt.keys().chain(results.keys()).copied().collect();
    let mut trajectories: BTreeMap<u64, Trajectory> = BTreeMap::new();
    let mut overlaps: HashMap<(u64, u64), usize> = HashMap::new();
    let (mut fp, mut fn_, mut idsw) = (0usize, 0usize, 0usize);

    for frame in frames {
        let objs = gt.get(&frame).map(Vec::as_slice).unwrap_or(&[]);
        let hyps = results.get(&frame).map(Vec::as_slice).unwrap_or(&[]);
        let ious: Vec<Vec<f64>> = objs
            .iter()
            .map(|o| hyps.iter().map(|h| iou(&o.bbox, &h.bbox)).collect())
            .collect();

        for (i, o) in objs.iter().enumerate() {
            for (j, h) in hyps.iter().enumerate() {
                if ious[i][j] >= iou_gate {
                    *overlaps.entry((o.id, h.id)).or_default() += 1;
                }
            }
        }

        let mut obj_match: Vec<Option<usize>> = vec![None; objs.len()];
        let mut hyp_taken = vec![false; hyps.len()];

        // keep last correspondences that are still within the gate
        let mut order: Vec<usize> = (0..objs.len()).collect();
        order.sort_by_key(|&i| objs[i].id);
        for &i in &order {
            let Some(prev) = trajectories.get(&objs[i].id).and_then(|t| t.last_hyp) else {
                continue;
            };
            if let Some(j) = (0..hyps.len())
                .find(|&j| !hyp_taken[j] && hyps[j].id == prev && ious[i][j] >= iou_gate)
            {
                obj_match[i] = Some(j);
                hyp_taken[j] = true;
            }
        }

        let free_objs: Vec<usize> = (0..objs.len()).filter(|&i| obj_match[i].is_none()).collect();
        let free_hyps: Vec<usize> = (0..hyps.len()).filter(|&j| !hyp_taken[j]).collect();
        let cost = CostMatrix::from_fn(free_objs.len(), free_hyps.len(), |r, c| {
            let v = ious[free_objs[r]][free_hyps[c]];
            if v >= iou_gate {
                1.0 - v
            } else {
                2.0
            }
        });
        for (r, c) in solve(&cost, 1.0)?.matches {
            obj_match[free_objs[r]] = Some(free_hyps[c]);
            hyp_taken[free_hyps[c]] = true;
        }

        fp += hyp_taken.iter().filter(|t| !**t).count();
        for (i, o) in objs.iter().enumerate() {
            let t = trajectories.entry(o.id).or_default();
            t.present += 1;
            match obj_match[i] {
                Some(j) => {
                    let h = hyps[j].id;
                    if t.last_hyp.is_some_and(|prev| prev != h) {
                        idsw += 1;
                    }
                    t.last_hyp = Some(h);
                    t.matched += 1;
                    if t.in_gap {
                        t.in_gap = false;
                        t.fragmentations += 1;
                    }
                    t.seen_match = true;
                }
                None => {
                    fn_ += 1;
                    if t.seen_match {
                        t.in_gap = true;
                    }
                }
            }
        }
    }

    let mut fragmentations = 0;
    let (mut mt, mut ml) = (0, 0);
    for t in trajectories.values() {
        fragmentations += t.fragmentations;
        let ratio = t.matched as f64 / t.present as f64;
        if ratio >= 0.8 {
            mt += 1;
        }
        if ratio <= 0.2 {
            ml += 1;
        }
    }

    let idtp = identity_true_positives(&trajectories, results, &overlaps)?;
    Ok(EvalReport {
        mota: 1.0 - (fp + fn_ + idsw) as f64 / gt_count as f64,
        idf1: 2.0 * idtp as f64 / (gt_count + hyp_count) as f64,
        fp,
        fn_,
        id_switches: idsw,
        fragmentations,
        mostly_tracked: mt,
        mostly_lost: ml,
        gt_count,
        gt_trajectories: trajectories.len(),
        idtp,
        idfp: hyp_count - idtp,
        idfn: gt_count - idtp,
        hota: None,
    })
}

fn identity_true_positives(
    trajectories: &BTreeMap<u64, Trajectory>,
    results: &Hypotheses,
    overlaps: &HashMap<(u64, u64), usize>,
) -> Result<usize> {
    let gt_ids: Vec<u64> = trajectories.keys().copied().collect();
    let hyp_ids: Vec<u64> = results
        .values()
        .flatten()
        .map(|h| h.id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Every pair is admissible (cost <= 0), so the maximum-cardinality
    // optimum is also a maximum-overlap matching.
    let cost = CostMatrix::from_fn(gt_ids.len(), hyp_ids.len(), |r, c| {
        -(overlaps.get(&(gt_ids[r], hyp_ids[c])).copied().unwrap_or(0) as f64)
    });
    let matching = solve(&cost, 0.0)?;
    Ok(matching
        .matches
        .iter()
        .map(|&(r, c)| overlaps.get(&(gt_ids[r], hyp_ids[c])).copied().unwrap_or(0))
        .sum())
}
