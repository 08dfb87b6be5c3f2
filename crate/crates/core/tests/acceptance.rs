//! Acceptance checks. Prints one PASS/FAIL line per criterion, with the
//! measured values and wall time. Always exits 0 so that a failing
//! criterion is reported rather than hidden behind a harness abort.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikemotion::bench::{
    compute_metrics, score_binary, score_frame, synth_generate, ConfusionCounts, GtFrame, GtLabel,
    Metric, SyntheticSceneSpec,
};
use spikemotion::hsmd::{
    encode_currents, BackendKind, BackendParams, BsBackendState, ComputeMode, HsmdConfig, Pipeline,
    SnnState,
};
use spikemotion::imaging::{Direction, GrayFrame};
use spikemotion::lif::{integrate, LifParams};
use spikemotion::mhsnn::{
    backend_masks, classify, codd_track, direction_suite, evaluate, resume_delta, resume_window,
    topology_counts, train, DirectionLabel, LabelledSequence, MhsnnNetwork, MhsnnParams,
    ResumeParams, SuiteSpec, SynapseKind, TrainOptions,
};
use std::time::{Duration, Instant};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn main() {
    let checks: [(&str, &str, u64, fn() -> Outcome); 10] = [
        ("AC1", "topology counts and enumeration", 1, topology),
        ("AC2", "LIF spike time and refractory bound", 10, lif),
        (
            "AC3",
            "dense and sparse spike sums identical",
            30,
            dense_sparse,
        ),
        ("AC4", "metrics match exact rationals", 5, metric_oracle),
        (
            "AC5",
            "synthetic scene per-frame F1 >= 0.90",
            120,
            hsmd_quality,
        ),
        (
            "AC6",
            "direction network PCC >= 85% and mirror symmetry",
            600,
            direction_network,
        ),
        ("AC7", "centre-of-mass baseline PCC", 120, codd_baseline),
        (
            "AC8",
            "throughput, scaling and sparse speed-up",
            120,
            throughput,
        ),
        ("AC9", "learning rule properties", 30, resume_properties),
        (
            "AC10",
            "scoring exclusions and shadows",
            5,
            scoring_protocol,
        ),
    ];
    let mut passed = 0;
    for (id, name, limit, check) in checks {
        let t = Instant::now();
        let out = check();
        let elapsed = t.elapsed();
        let in_time = elapsed < Duration::from_secs(limit);
        let ok = out.ok && in_time;
        passed += ok as usize;
        let timing = if in_time {
            String::new()
        } else {
            format!(" over {limit}s limit")
        };
        println!(
            "{id} {}: {name} ({}) [{:.2}s{timing}]",
            if ok { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} passed", checks.len());
}

fn topology() -> Outcome {
    let t = topology_counts(40, 40, 4, 3, 3).unwrap();
    let mut ok = (t.n_neurons, t.n_synapses) == (17000, 173700);
    let mut bad = Vec::new();
    for l in 5..=12 {
        for w in 5..=12 {
            let net = MhsnnNetwork::new(l, w, MhsnnParams::default()).unwrap();
            let want = topology_counts(l, w, 4, 3, 3).unwrap();
            if (net.neuron_count() as u64, net.synapses().len() as u64)
                != (want.n_neurons, want.n_synapses)
            {
                bad.push((l, w));
            }
        }
    }
    ok &= bad.is_empty();
    outcome(
        ok,
        format!(
            "40x40: {} neurons, {} synapses; enumeration mismatches {bad:?}",
            t.n_neurons, t.n_synapses
        ),
    )
}

fn lif() -> Outcome {
    let p = LifParams::default();
    let (dt, current) = (0.01, 20.0);
    let ri = p.r_m * current;
    let closed = p.tau_m * (ri / (ri - (p.v_th - p.e_l))).ln();
    let (mut v, mut r) = (p.e_l, 0.0);
    let mut steps = 0u64;
    while !integrate(&p, &mut v, &mut r, current, dt) {
        steps += 1;
    }
    let euler = (steps + 1) as f64 * dt;
    let rel = (euler - closed).abs() / closed;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dt = 0.1;
    let (mut v, mut r) = (p.e_l, 0.0);
    let mut spikes = 0u64;
    let mut violations = 0u64;
    for k in 1..=1_000_000u64 {
        let i = rng.gen_range(-20.0..200.0);
        spikes += integrate(&p, &mut v, &mut r, i, dt) as u64;
        let bound = ((k as f64 * dt) / p.t_ref).floor() as u64 + 1;
        violations += (spikes > bound) as u64;
    }
    outcome(
        rel < 0.01 && violations == 0,
        format!("euler {euler:.3} ms vs closed {closed:.3} ms ({:.3}%), {spikes} spikes, {violations} bound violations", rel * 100.0),
    )
}

fn random_foreground(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> GrayFrame {
    let data = (0..w * h)
        .map(|_| {
            if rng.gen_bool(density) {
                rng.gen_range(0.05..=1.0)
            } else {
                0.0
            }
        })
        .collect();
    GrayFrame::new(w, h, data).unwrap()
}

fn dense_sparse() -> Outcome {
    let (w, h) = (160, 120);
    let dense_cfg = HsmdConfig::default();
    let sparse_cfg = HsmdConfig {
        mode: ComputeMode::Sparse,
        ..HsmdConfig::default()
    };
    let mut dense = SnnState::new(w * h, dense_cfg.lif).unwrap();
    let mut sparse = SnnState::new(w * h, sparse_cfg.lif).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut total_spikes = 0u64;
    for f in 0..100 {
        let fg = random_foreground(&mut rng, w, h, f as f64 / 99.0);
        let cur = encode_currents(&fg, &dense_cfg);
        let a = dense.process_frame(&cur, &dense_cfg).unwrap();
        let b = sparse.process_frame(&cur, &sparse_cfg).unwrap();
        total_spikes += a.l4.iter().map(|&x| x as u64).sum::<u64>();
        mismatches += (a != b) as usize;
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} of 100 frames differ, {total_spikes} output spikes compared"),
    )
}

fn metric_oracle() -> Outcome {
    type Q = Ratio<u64>;
    let q = |n: u64, d: u64| if d == 0 { None } else { Some(Q::new(n, d)) };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    let mut identity_failures = 0;
    for i in 0..1000 {
        let mut draw = || {
            if i % 10 == 0 {
                rng.gen_range(0..3)
            } else {
                rng.gen_range(0..10_000)
            }
        };
        let c = ConfusionCounts {
            tp: draw(),
            tn: draw(),
            fp: draw(),
            fn_: draw(),
        };
        let (tp, tn, fp, fn_) = (c.tp, c.tn, c.fp, c.fn_);
        let n = tp + tn + fp + fn_;
        let re = q(tp, tp + fn_);
        let pr = q(tp, tp + fp);
        let f1 = match (pr, re) {
            (Some(p), Some(r)) if p + r != Q::from_integer(0) => {
                Some(Q::from_integer(2) * p * r / (p + r))
            }
            _ => None,
        };
        let hand = [
            (Metric::Re, re),
            (Metric::Sp, q(tn, tn + fp)),
            (Metric::Fpr, q(fp, fp + tn)),
            (Metric::Fnr, q(fn_, tp + fn_)),
            (Metric::Wcr, q(fp + fn_, n)),
            (Metric::Ccr, q(tp + tn, n)),
            (Metric::Pr, pr),
            (Metric::F1, f1),
        ];
        let report = compute_metrics(&c);
        for (m, want) in hand {
            let frac = c.fraction(m);
            let got = report.get(m);
            let agrees = match want {
                Some(w) => {
                    let exact = Q::new(frac.num, frac.den) == w;
                    let float = *w.numer() as f64 / *w.denom() as f64;
                    exact
                        && (got - float).abs() <= 1e-15 * float.abs().max(1.0)
                        && !report.undefined.contains(&m)
                }
                None => got == 0.0 && report.undefined.contains(&m),
            };
            mismatches += (!agrees) as usize;
        }
        let one = Q::from_integer(1);
        for (a, b) in [
            (Metric::Re, Metric::Fnr),
            (Metric::Sp, Metric::Fpr),
            (Metric::Wcr, Metric::Ccr),
        ] {
            let (fa, fb) = (c.fraction(a), c.fraction(b));
            if fa.den != 0 && Q::new(fa.num, fa.den) + Q::new(fb.num, fb.den) != one {
                identity_failures += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && identity_failures == 0,
        format!("{mismatches} metric mismatches, {identity_failures} identity failures over 1000 quadruples"),
    )
}

fn hsmd_quality() -> Outcome {
    let scene = SyntheticSceneSpec::default();
    let seq = synth_generate(&scene).unwrap();
    let backend =
        BsBackendState::new(BackendKind::RunningGaussian, BackendParams::default()).unwrap();
    let mut p = Pipeline::new(HsmdConfig::default(), Box::new(backend)).unwrap();
    let mut worst = (f64::INFINITY, 0);
    let mut sum = 0.0;
    for (i, (frame, gt)) in seq.frames.iter().zip(&seq.gt).enumerate() {
        let out = p.process_raw(frame).unwrap();
        if i < 100 {
            continue;
        }
        let f1 = compute_metrics(&score_frame(&out.mask, gt).unwrap()).f1;
        sum += f1;
        if f1 < worst.0 {
            worst = (f1, i);
        }
    }
    outcome(
        worst.0 >= 0.90,
        format!(
            "min F1 {:.4} at frame {}, mean {:.4} over frames 100-199",
            worst.0,
            worst.1,
            sum / 100.0
        ),
    )
}

fn suite() -> (Vec<LabelledSequence>, Vec<LabelledSequence>) {
    direction_suite(&SuiteSpec::default()).unwrap()
}

fn direction_network() -> Outcome {
    let (train_set, test_set) = suite();
    let size = SuiteSpec::default().size;
    let mut net = MhsnnNetwork::new(size, size, MhsnnParams::default()).unwrap();
    let opts = TrainOptions {
        iterations: 200,
        ..TrainOptions::default()
    };
    train(&mut net, &train_set, &opts).unwrap();
    let scores = evaluate(&mut net, &test_set, 0).unwrap();
    let mut mirror_ok = 0;
    for s in &test_set {
        let a = classify(&mut net, &s.frames, 0).unwrap();
        let b = classify(&mut net, &s.flip_horizontal().frames, 0).unwrap();
        mirror_ok += a.iter().map(|l| l.mirrored()).eq(b.iter().copied()) as usize;
    }
    let pcc: Vec<String> = scores
        .iter()
        .map(|s| format!("{} {:.1}%", s.direction.name(), s.pcc))
        .collect();
    outcome(
        scores.len() == 4 && scores.iter().all(|s| s.pcc >= 85.0) && mirror_ok == test_set.len(),
        format!("{}; mirror {mirror_ok}/{}", pcc.join(", "), test_set.len()),
    )
}

/// Per-direction PCC of the centroid baseline, first frame excluded.
fn codd_pcc(
    test_set: &[LabelledSequence],
    masks: impl Fn(&LabelledSequence) -> Vec<Vec<bool>>,
) -> [f64; 4] {
    let mut tally = [(0u64, 0u64); 4];
    for s in test_set {
        let d = s.label.unwrap();
        let k = Direction::ALL.iter().position(|&x| x == d).unwrap();
        let m = masks(s);
        for out in codd_track(s.frames[0].width(), m.iter().map(Vec::as_slice))
            .iter()
            .skip(1)
        {
            if out.label == DirectionLabel::from(d) {
                tally[k].0 += 1;
            } else {
                tally[k].1 += 1;
            }
        }
    }
    tally.map(|(c, w)| 100.0 * c as f64 / (c + w).max(1) as f64)
}

fn codd_baseline() -> Outcome {
    let (_, test_set) = suite();
    let oracle = codd_pcc(&test_set, |s| {
        s.gt.iter().map(GtFrame::moving_mask).collect()
    });
    let diff = codd_pcc(&test_set, |s| {
        backend_masks(BackendKind::FrameDiff, BackendParams::default(), &s.frames).unwrap()
    });
    let fmt = |v: &[f64; 4]| {
        Direction::ALL
            .iter()
            .zip(v)
            .map(|(d, p)| format!("{} {p:.1}%", d.name()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        oracle.iter().all(|&p| p == 100.0) && diff.iter().all(|&p| p >= 85.0),
        format!("oracle [{}]; frame diff [{}]", fmt(&oracle), fmt(&diff)),
    )
}

/// Mean milliseconds per SNN step over `frames` foreground frames.
fn snn_ms(w: usize, h: usize, density: f64, mode: ComputeMode, frames: usize) -> f64 {
    let cfg = HsmdConfig {
        mode,
        ..HsmdConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inputs: Vec<Vec<f64>> = (0..frames.min(8))
        .map(|_| encode_currents(&random_foreground(&mut rng, w, h, density), &cfg))
        .collect();
    let mut snn = SnnState::new(w * h, cfg.lif).unwrap();
    snn.process_frame(&inputs[0], &cfg).unwrap();
    let t = Instant::now();
    for f in 0..frames {
        snn.process_frame(&inputs[f % inputs.len()], &cfg).unwrap();
    }
    t.elapsed().as_secs_f64() * 1e3 / frames as f64
}

fn throughput() -> Outcome {
    let fps = 1e3 / snn_ms(320, 240, 0.05, ComputeMode::Dense, 60);
    let sizes = [(160, 120), (320, 240), (640, 480)];
    let per_px: Vec<f64> = sizes
        .iter()
        .map(|&(w, h)| snn_ms(w, h, 0.05, ComputeMode::Dense, 40) / (w * h) as f64)
        .collect();
    let mean = per_px.iter().sum::<f64>() / per_px.len() as f64;
    let spread = per_px
        .iter()
        .map(|p| (p / mean - 1.0).abs())
        .fold(0.0, f64::max);
    let dense = snn_ms(720, 480, 0.01, ComputeMode::Dense, 20);
    let sparse = snn_ms(720, 480, 0.01, ComputeMode::Sparse, 20);
    let speedup = dense / sparse;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        fps >= 30.0 && spread <= 0.25 && speedup >= 2.0,
        format!(
            "{fps:.0} fps at 320x240 dense; per-pixel time within {:.0}% across sizes; sparse {speedup:.1}x faster at 1% density 720x480; {cores} core(s), 1 worker",
            spread * 100.0
        ),
    )
}

fn resume_properties() -> Outcome {
    let p = ResumeParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut antisym = 0;
    let mut window = 0;
    for _ in 0..10_000 {
        let pre: Vec<f64> = (0..rng.gen_range(0..5))
            .map(|_| rng.gen_range(0.0..50.0))
            .collect();
        let now = rng.gen_range(0.0..60.0);
        for kind in [SynapseKind::Excitatory, SynapseKind::Inhibitory] {
            let a = resume_delta(&pre, now, kind, false, true, &p);
            let b = resume_delta(&pre, now, kind, true, false, &p);
            antisym += (a != -b) as usize;
            let s = -rng.gen_range(0.0..10.0);
            window += (resume_window(s, kind, &p) != 0.0) as usize;
        }
    }
    let (train_set, _) = suite();
    let rightward: Vec<LabelledSequence> = train_set
        .into_iter()
        .filter(|s| s.label == Some(Direction::Right))
        .collect();
    let size = SuiteSpec::default().size;
    let mut net = MhsnnNetwork::new(size, size, MhsnnParams::default()).unwrap();
    let log = train(
        &mut net,
        &rightward,
        &TrainOptions {
            iterations: 200,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    let k = Direction::ALL
        .iter()
        .position(|&d| d == Direction::Right)
        .unwrap();
    let traj: Vec<f64> = log.mean_weights.iter().map(|m| m[k]).collect();
    let drops = traj.windows(2).filter(|w| w[1] < w[0]).count();
    outcome(
        antisym == 0 && window == 0 && drops == 0 && traj.len() == 200,
        format!(
            "{antisym} antisymmetry and {window} window violations; rightward cell mean weight {:.4} -> {:.4} with {drops} decreases",
            traj.first().copied().unwrap_or(f64::NAN),
            traj.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn scoring_protocol() -> Outcome {
    let (w, h) = (16, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let labels: Vec<GtLabel> = (0..w * h)
        .map(|_| match rng.gen_range(0..5) {
            0 => GtLabel::Static,
            1 => GtLabel::Shadow,
            2 => GtLabel::NonRoi,
            3 => GtLabel::Unknown,
            _ => GtLabel::Moving,
        })
        .collect();
    let gt = GtFrame::new(w, h, labels).unwrap();
    let mut exclusion_ok = true;
    let excluded = gt.labels.iter().filter(|l| l.is_excluded()).count() as u64;
    for _ in 0..50 {
        let mask: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.5)).collect();
        let flipped: Vec<bool> = mask
            .iter()
            .zip(&gt.labels)
            .map(|(&m, l)| if l.is_excluded() { !m } else { m })
            .collect();
        let a = score_binary(w, h, &mask, &gt).unwrap();
        let b = score_binary(w, h, &flipped, &gt).unwrap();
        exclusion_ok &= a == b && a.total() == (w * h) as u64 - excluded;
    }
    let shadow = GtFrame::filled(4, 4, GtLabel::Shadow);
    let mut mask = vec![false; 16];
    let before = score_binary(4, 4, &mask, &shadow).unwrap();
    mask[5] = true;
    let after = score_binary(4, 4, &mask, &shadow).unwrap();
    let shadow_ok = after.fp == before.fp + 1 && after.tn + 1 == before.tn && after.tp == 0;
    outcome(
        exclusion_ok && shadow_ok,
        format!("exclusion invariant {exclusion_ok} ({excluded} excluded pixels), shadow counted as fp {shadow_ok}"),
    )
}
