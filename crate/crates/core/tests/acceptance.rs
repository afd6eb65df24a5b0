//! Acceptance criteria A1-A9. Runs without the libtest harness so every
//! criterion is evaluated and reported on its own line; the process fails
//! if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use byteadapt::assignment::{solve, solve_bruteforce, CostMatrix};
use byteadapt::kalman::KalmanFilter;
use byteadapt::metrics::{evaluate, EvalReport};
use byteadapt::mot_io::{self, GroundTruth, GtEntry, Hypotheses};
use byteadapt::synth::{self, ObjectMotion, ScenarioSpec};
use byteadapt::threshold::{adaptive_threshold, split_scores, SplitMode, ThresholdBand};
use byteadapt::{run_sequence, BBox, TrackOutput, TrackerConfig, TrackerMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("A1", "adaptive threshold equals the largest-gap oracle", a1),
        ("A2", "assignment equals the brute-force oracle", a2),
        ("A3", "Kalman one-step prediction within 1e-6 px after 10 cycles", a3),
        ("A4", "clean preset: MOTA >= 0.99, no id switches", a4),
        ("A5", "sweep: adaptive within 0.02 of best fixed, 0.10 above worst", a5),
        ("A6", "occlusion-dip: fewer id switches than sort at 0.6", a6),
        ("A7", "adaptive split cost and threshold latency", a7),
        ("A8", "result files and tracking runs are byte-stable", a8),
        ("A9", "metric fixtures and self-evaluation", a9),
    ];
    let mut failed = Vec::new();
    for (id, title, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{id} PASS  {title}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                println!("{id} FAIL  {title}: {detail} ({secs:.2}s)");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: {} of 9 failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}

/// Earliest largest gap of the descending sort.
fn gap_oracle(scores: &[f64]) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut best = 0;
    for j in 1..s.len() - 1 {
        if s[j] - s[j + 1] > s[best] - s[best + 1] {
            best = j;
        }
    }
    s[best]
}

fn a1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases: Vec<Vec<f64>> = (0..1000)
        .map(|k| {
            let n = rng.random_range(2..=200);
            match k % 4 {
                // duplicate-heavy: a handful of levels
                0 => (0..n).map(|_| f64::from(rng.random_range(0..5u8)) / 4.0).collect(),
                1 => (0..n).map(|_| (rng.random::<f64>() * 10.0).floor() / 10.0).collect(),
                _ => (0..n).map(|_| rng.random::<f64>()).collect(),
            }
        })
        .collect();
    cases.push(vec![0.5; 2]);
    cases.push(vec![0.7; 200]);
    cases.push(vec![1.0, 0.0]);
    cases.push(vec![0.9, 0.6, 0.3, 0.0]);
    let mut mismatches = 0;
    for c in &cases {
        if adaptive_threshold(c).unwrap() != gap_oracle(c) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(1),
        format!("{} lists, {mismatches} mismatches, {:.1} ms", cases.len(), elapsed.as_secs_f64() * 1e3),
    )
}

/// All optimal partial assignments under the gate, by (cardinality, cost).
fn all_optima(cost: &CostMatrix, gate: f64) -> (usize, f64, Vec<Vec<(usize, usize)>>) {
    fn walk(
        c: &CostMatrix,
        gate: f64,
        row: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        best: &mut (usize, f64, Vec<Vec<(usize, usize)>>),
    ) {
        if row == c.rows() {
            let card = cur.len();
            let total: f64 = cur.iter().map(|&(r, k)| c.get(r, k)).sum();
            if card > best.0 || (card == best.0 && total < best.1) {
                *best = (card, total, vec![cur.clone()]);
            } else if card == best.0 && total == best.1 {
                best.2.push(cur.clone());
            }
            return;
        }
        walk(c, gate, row + 1, used, cur, best);
        for k in 0..c.cols() {
            if !used[k] && c.get(row, k) <= gate {
                used[k] = true;
                cur.push((row, k));
                walk(c, gate, row + 1, used, cur, best);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut best = (0, 0.0, vec![Vec::new()]);
    walk(cost, gate, 0, &mut vec![false; cost.cols()], &mut Vec::new(), &mut best);
    best
}

fn a2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gates = [0.3, 0.5, 0.8, 1.0];
    let (mut bad, mut unique, mut bf_bad) = (0, 0, 0);
    for k in 0..1000 {
        let rows = rng.random_range(1..=6);
        let cols = rng.random_range(1..=6);
        let gate = gates[k % 4];
        // every fifth matrix uses coarse dyadic values to exercise ties
        let coarse = k % 5 == 0;
        let cost = CostMatrix::from_fn(rows, cols, |_, _| {
            if coarse {
                f64::from(rng.random_range(0..=4u8)) / 4.0
            } else {
                rng.random::<f64>()
            }
        });
        let got = solve(&cost, gate).unwrap();
        let (card, total, optima) = all_optima(&cost, gate);
        let mut matches = got.matches.clone();
        matches.sort_unstable();
        if matches.len() != card || got.total_cost(&cost) != total {
            bad += 1;
        }
        if optima.len() == 1 {
            unique += 1;
            if matches != optima[0] {
                bad += 1;
            }
        }
        let bf = solve_bruteforce(&cost, gate).unwrap();
        if bf.matches.len() != card || bf.total_cost(&cost) != total {
            bf_bad += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        bad == 0 && bf_bad == 0 && elapsed < Duration::from_secs(10),
        format!(
            "1000 matrices ({unique} with a unique optimum), {bad} solver and {bf_bad} brute-force disagreements, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn a3() -> Outcome {
    let kf = KalmanFilter::default();
    let (w, h) = (32.0, 80.0);
    let (vx, vy) = (3.0, 1.0);
    let truth = |t: f64| [100.0 + vx * t, 200.0 + vy * t, w / h, h];
    let mut state = kf.initiate(truth(0.0)).unwrap();
    for t in 1..=10 {
        state = kf.update(&kf.predict(&state), truth(f64::from(t))).unwrap();
    }
    let pred = kf.predict(&state).measurement();
    let want = truth(11.0);
    let err = (pred[0] - want[0]).hypot(pred[1] - want[1]);
    // how many cycles the default filter needs to get there
    let mut s = kf.initiate(truth(0.0)).unwrap();
    let mut needed = None;
    for t in 1..=1000 {
        s = kf.update(&kf.predict(&s), truth(f64::from(t))).unwrap();
        let p = kf.predict(&s).measurement();
        let w = truth(f64::from(t + 1));
        if (p[0] - w[0]).hypot(p[1] - w[1]) <= 1e-6 {
            needed = Some(t);
            break;
        }
    }
    check(
        err <= 1e-6,
        format!(
            "center error {err:.3e} px after 10 cycles; default weights reach 1e-6 after {}",
            needed.map_or("more than 1000 cycles".to_string(), |n| format!("{n} cycles"))
        ),
    )
}

fn evaluate_preset(name: &str, cfg: &TrackerConfig) -> EvalReport {
    let spec = synth::preset(name).unwrap();
    let (gt, dets) = synth::generate(&spec).unwrap();
    let results = run_sequence(cfg, &dets, Some(spec.frames)).unwrap();
    evaluate(&gt, &mot_io::hypotheses_from_results(&results), 0.5).unwrap()
}

fn a4() -> Outcome {
    let r = evaluate_preset("clean", &TrackerConfig::with_mode(TrackerMode::ByteAdaptive));
    check(
        r.mota >= 0.99 && r.id_switches == 0,
        format!("seed {} MOTA {:.4}, {} id switches", synth::DEFAULT_SEED, r.mota, r.id_switches),
    )
}

fn binary(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_byteadapt"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn sweep_preset(dir: &Path, preset: &str) -> Result<(f64, f64, f64), String> {
    let seq = dir.join(preset);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    binary(&["synth", "--preset", preset, "--seed", "7", "--output-dir", &s(&seq)])?;
    let csv = dir.join(format!("{preset}.csv"));
    binary(&[
        "sweep",
        "--detections",
        &s(&seq.join("det/det.txt")),
        "--gt",
        &s(&seq.join("gt/gt.txt")),
        "--grid",
        "0.1:0.9:0.1",
        "--output",
        &s(&csv),
        "--jobs",
        "0",
    ])?;
    let text = fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    let (mut fixed, mut adaptive) = (Vec::new(), None);
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let mota: f64 = cols[2].parse().map_err(|_| format!("bad row {line}"))?;
        match cols[0] {
            "fixed" => fixed.push(mota),
            "adaptive" => adaptive = Some(mota),
            _ => return Err(format!("bad row {line}")),
        }
    }
    if fixed.len() != 9 {
        return Err(format!("{} fixed rows", fixed.len()));
    }
    let best = fixed.iter().copied().fold(f64::MIN, f64::max);
    let worst = fixed.iter().copied().fold(f64::MAX, f64::min);
    Ok((adaptive.ok_or("no adaptive row")?, best, worst))
}

fn a5() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for preset in ["occlusion-dip", "dense-clutter"] {
        let (adaptive, best, worst) = sweep_preset(tmp.path(), preset)?;
        ok &= adaptive >= best - 0.02 && adaptive - worst >= 0.10;
        parts.push(format!("{preset} adaptive {adaptive:.4} / best {best:.4} / worst {worst:.4}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    check(ok, format!("{}; {:.1} s", parts.join("; "), elapsed.as_secs_f64()))
}

fn a6() -> Outcome {
    let adaptive = evaluate_preset("occlusion-dip", &TrackerConfig::with_mode(TrackerMode::ByteAdaptive));
    let mut sort = TrackerConfig::with_mode(TrackerMode::Sort);
    sort.fixed_threshold = 0.6;
    let sort = evaluate_preset("occlusion-dip", &sort);
    check(
        adaptive.id_switches < sort.id_switches,
        format!(
            "byte-adaptive {} id switches (MOTA {:.4}) vs sort {} (MOTA {:.4})",
            adaptive.id_switches, adaptive.mota, sort.id_switches, sort.mota
        ),
    )
}

/// 1,000 frames of exactly 100 detections: a 10 x 10 grid of slow walkers
/// with scores spread over [0.1, 1].
fn hundred_per_frame() -> ScenarioSpec {
    let objects = (0..100)
        .map(|i| {
            let (r, c) = (f64::from(i / 10), f64::from(i % 10));
            ObjectMotion {
                start: BBox::new(40.0 + 180.0 * c, 15.0 + 105.0 * r, 30.0, 75.0),
                velocity: (0.05 * (c - 4.5), 0.02 * (r - 4.5)),
            }
        })
        .collect();
    ScenarioSpec {
        seed: 17,
        frames: 1000,
        arena: (1920.0, 1080.0),
        objects,
        noise_sigma: 1.5,
        detect_prob: 1.0,
        occlusion_windows: Vec::new(),
        clutter_rate: 0.0,
        clutter_score_range: (0.0, 0.0),
        true_score_range: (0.1, 1.0),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn a7() -> Outcome {
    let (_, dets) = synth::generate(&hundred_per_frame()).unwrap();
    let frames: Vec<Vec<f64>> = dets.values().map(|d| d.iter().map(|x| x.score).collect()).collect();
    if frames.iter().any(|f| f.len() != 100) {
        return Err("generator did not produce 100 detections per frame".into());
    }

    let pipeline = |mode| {
        let cfg = TrackerConfig::with_mode(mode);
        let t = Instant::now();
        let r = run_sequence(&cfg, &dets, None).unwrap();
        std::hint::black_box(r);
        t.elapsed().as_secs_f64()
    };
    let split = |mode: SplitMode| {
        let t = Instant::now();
        for f in &frames {
            std::hint::black_box(split_scores(std::hint::black_box(f), mode, ThresholdBand::default()));
        }
        t.elapsed().as_secs_f64()
    };
    pipeline(TrackerMode::ByteFixed);
    let fixed_total = median((0..5).map(|_| pipeline(TrackerMode::ByteFixed)).collect());
    let adaptive_total = median((0..5).map(|_| pipeline(TrackerMode::ByteAdaptive)).collect());
    let split_fixed = median((0..11).map(|_| split(SplitMode::Fixed(0.6))).collect());
    let split_adaptive = median((0..11).map(|_| split(SplitMode::Adaptive)).collect());
    let overhead = (split_adaptive - split_fixed) / fixed_total;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lists: Vec<Vec<f64>> = (0..1001).map(|_| (0..200).map(|_| rng.random()).collect()).collect();
    let latency = median(
        lists
            .iter()
            .map(|l| {
                let t = Instant::now();
                std::hint::black_box(adaptive_threshold(std::hint::black_box(l)).unwrap());
                t.elapsed().as_secs_f64()
            })
            .collect(),
    );

    check(
        overhead < 0.05 && latency < 50e-6,
        format!(
            "split overhead {:.3}% of the byte-fixed pipeline ({:.1} ms / 1000 frames); \
             whole pipelines adaptive/fixed {:.3}; median threshold latency at n=200 {:.2} us",
            100.0 * overhead,
            fixed_total * 1e3,
            adaptive_total / fixed_total,
            latency * 1e6
        ),
    )
}

fn a8() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut text = String::new();
    for i in 0..1000 {
        let frame = 1 + i / 10;
        let id = 1 + i % 10;
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-50.0..2000.0)).collect();
        text.push_str(&format!(
            "{frame},{id},{:.2},{:.2},{:.2},{:.2},{:.6},-1,-1,-1\n",
            v[0],
            v[1],
            v[2].abs(),
            v[3].abs(),
            rng.random::<f64>()
        ));
    }
    let first = tmp.path().join("first.txt");
    fs::write(&first, &text).map_err(|e| e.to_string())?;
    let parsed = mot_io::read_results(&first).map_err(|e| e.to_string())?;
    let rewritten = mot_io::format_hypotheses(&parsed);
    let second = tmp.path().join("second.txt");
    fs::write(&second, &rewritten).map_err(|e| e.to_string())?;
    let reparsed = mot_io::read_results(&second).map_err(|e| e.to_string())?;
    let round_trip = rewritten == text && mot_io::format_hypotheses(&reparsed) == rewritten;

    let seq = tmp.path().join("seq");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    binary(&["synth", "--preset", "dense-clutter", "--output-dir", &s(&seq)])?;
    let mut outputs = Vec::new();
    for name in ["a.txt", "b.txt"] {
        let out = tmp.path().join(name);
        binary(&["track", "--detections", &s(&seq.join("det/det.txt")), "--output", &s(&out)])?;
        outputs.push(fs::read(&out).map_err(|e| e.to_string())?);
    }
    let identical_runs = outputs[0] == outputs[1] && !outputs[0].is_empty();
    check(
        round_trip && identical_runs,
        format!(
            "1000-line write/read/write identical: {round_trip}; two track runs identical: {identical_runs}"
        ),
    )
}

fn grid_gt() -> GroundTruth {
    (1..=10)
        .map(|f| {
            let objs = (1..=10)
                .map(|k| GtEntry {
                    id: k,
                    bbox: BBox::new(100.0 * k as f64, 50.0, 50.0, 80.0),
                    visibility: 1.0,
                })
                .collect();
            (f, objs)
        })
        .collect()
}

fn out(id: u64, bbox: BBox) -> TrackOutput {
    TrackOutput { id, bbox, score: 1.0 }
}

fn a9() -> Outcome {
    let gt = grid_gt();
    let mut hyp: Hypotheses = BTreeMap::new();
    for f in 1..=10u32 {
        let mut v = Vec::new();
        for o in &gt[&f] {
            let k = o.id;
            if (k == 5 && (f == 2 || f == 3)) || (k == 6 && f == 7) || (k == 7 && f >= 9) {
                continue;
            }
            let id = match k {
                1 if f > 5 => 201,
                2 if f > 3 => 202,
                _ => 100 + k,
            };
            v.push(out(id, o.bbox));
        }
        if f <= 3 {
            v.push(out(999, BBox::new(2000.0, 2000.0, 40.0, 40.0)));
        }
        hyp.insert(f, v);
    }
    let mota = evaluate(&gt, &hyp, 0.5).unwrap().mota;

    let single: GroundTruth = (1..=10).map(|f| (f, vec![gt[&1][0]])).collect();
    let split_ids: Hypotheses = (1..=10)
        .map(|f| (f, vec![out(if f <= 5 { 7 } else { 8 }, gt[&1][0].bbox)]))
        .collect();
    let idf1 = evaluate(&single, &split_ids, 0.5).unwrap().idf1;

    let mut imperfect = Vec::new();
    for name in synth::PRESETS {
        let (g, _) = synth::generate(&synth::preset(name).unwrap()).unwrap();
        let as_hyp: Hypotheses = g
            .iter()
            .map(|(&f, v)| (f, v.iter().map(|e| out(e.id, e.bbox)).collect()))
            .collect();
        let r = evaluate(&g, &as_hyp, 0.5).unwrap();
        let perfect = r.mota == 1.0
            && r.idf1 == 1.0
            && r.fp + r.fn_ + r.id_switches + r.fragmentations == 0;
        if !perfect {
            imperfect.push(name);
        }
    }
    check(
        (mota - 0.90).abs() < 1e-12 && (idf1 - 0.5).abs() < 1e-12 && imperfect.is_empty(),
        format!(
            "fixture MOTA {mota:.6}, IDF1 {idf1:.6}; self-evaluation perfect on {}/{} presets",
            synth::PRESETS.len() - imperfect.len(),
            synth::PRESETS.len()
        ),
    )
}
