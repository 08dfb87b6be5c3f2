use spikemotion::bench::{
    compute_metrics, export_cdnet, load_cdnet, score_frame, synth_generate, ConfusionCounts, Shape,
    SyntheticSceneSpec,
};
use spikemotion::hsmd::{
    BackendKind, BackendParams, BsBackendState, ComputeMode, HsmdConfig, MotionMask, Pipeline,
};

fn scene() -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        width: 200,
        height: 60,
        shape: Shape::Rect {
            width: 10,
            height: 10,
        },
        start: (25.0, 0.0),
        n_frames: 95,
        // no wrap: a second pass over warm-up columns would meet an
        // inflated variance there
        wrap: false,
        ..SyntheticSceneSpec::default()
    }
}

fn run(mode: ComputeMode, kind: BackendKind) -> Vec<MotionMask> {
    let seq = synth_generate(&scene()).unwrap();
    let cfg = HsmdConfig {
        mode,
        ..HsmdConfig::default()
    };
    let backend = BsBackendState::new(kind, BackendParams::default()).unwrap();
    let mut p = Pipeline::new(cfg, Box::new(backend)).unwrap();
    seq.frames
        .iter()
        .map(|f| p.process_raw(f).unwrap().mask)
        .collect()
}

#[test]
fn gaussian_backend_tracks_square() {
    let seq = synth_generate(&scene()).unwrap();
    let masks = run(ComputeMode::Dense, BackendKind::RunningGaussian);
    let mut total = ConfusionCounts::default();
    for (m, gt) in masks.iter().zip(&seq.gt).skip(60) {
        total.add(&score_frame(m, gt).unwrap());
    }
    let r = compute_metrics(&total);
    assert!(r.f1 > 0.9, "{r:?}");
}

#[test]
fn modes_agree_end_to_end() {
    for kind in [BackendKind::FrameDiff, BackendKind::RunningGaussian] {
        assert_eq!(
            run(ComputeMode::Dense, kind),
            run(ComputeMode::Sparse, kind)
        );
    }
}

#[test]
fn exported_fixture_scores_like_memory() {
    let dir = tempfile::tempdir().unwrap();
    let seq = synth_generate(&scene()).unwrap();
    export_cdnet(dir.path(), &seq, Some((5, 95))).unwrap();
    let loaded = load_cdnet(dir.path()).unwrap();
    assert_eq!(loaded.len(), 95);
    assert!(!loaded.in_temporal_roi(3) && loaded.in_temporal_roi(4));
    for i in [0, 17, 94] {
        assert_eq!(loaded.load_frame(i).unwrap(), seq.frames[i]);
        assert_eq!(loaded.load_gt(i).unwrap(), seq.gt[i]);
    }
    let oracle = MotionMask::from_binary(200, 60, seq.gt[20].moving_mask()).unwrap();
    let c = score_frame(&oracle, &loaded.load_gt(20).unwrap()).unwrap();
    assert_eq!((c.fp, c.fn_), (0, 0));
    assert_eq!(compute_metrics(&c).f1, 1.0);
}
