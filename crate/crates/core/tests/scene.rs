use chanlab::channel::{ChannelConfig, PsduSource};
use chanlab::estimation::{ground_truth_estimate, phase_correct};
use chanlab::scene::{
    generate_scene_trace, path_contributions, read_depth, render_depth, scene_to_cir, segment_distance,
    write_depth, Point, SceneState, SceneTraceConfig, Viewport, WalkModel, DEPTH_COLS, DEPTH_ROWS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ChannelConfig {
    ChannelConfig {
        snr_db: 30.0,
        ..Default::default()
    }
}

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Point::new(x, y))
}

#[test]
fn identical_states_give_identical_outputs() {
    let s = SceneState::default().with_blocker(Point::new(3.3, -0.7));
    assert_eq!(scene_to_cir(&s, &cfg()).unwrap(), scene_to_cir(&s.clone(), &cfg()).unwrap());
    assert_eq!(render_depth(&s), render_depth(&s.clone()));
}

fn los_only() -> SceneState {
    SceneState {
        reflectors: vec![],
        ..Default::default()
    }
}

#[test]
fn blocker_on_line_of_sight_reduces_main_tap() {
    let s = los_only();
    let clear = scene_to_cir(&s.with_blocker(Point::new(4.0, 1.5)), &cfg()).unwrap();
    let blocked = scene_to_cir(&s.with_blocker(Point::new(4.0, 0.0)), &cfg()).unwrap();
    assert!(blocked.main_tap().norm() < clear.main_tap().norm());
    assert!((blocked.main_tap().norm() - s.blockage_factor * clear.main_tap().norm()).abs() < 1e-15);
}

#[test]
fn main_tap_dips_exactly_while_crossing_line_of_sight() {
    let scene_cfg = SceneTraceConfig {
        walk: WalkModel {
            start: Point::new(4.0, 1.0),
            step_std_m: 0.3,
            ..Default::default()
        },
        scene: los_only(),
        ..Default::default()
    };
    let c = ChannelConfig { rng_seed: 21, ..cfg() };
    let trace = generate_scene_trace(&c, &scene_cfg, 300, PsduSource::Random, 1).unwrap();
    let s = &scene_cfg.scene;
    let (mut blocked, mut clear) = (0, 0);
    for (rec, pos) in trace.set.records.iter().zip(&trace.blocker_path) {
        let on_los = segment_distance(*pos, s.tx_pos, s.rx_pos) <= s.blocker_radius;
        let expect = if on_los { s.blockage_factor } else { 1.0 } / s.tx_pos.distance(s.rx_pos);
        // taps carry a 1e-3 perturbation
        assert!((rec.true_cir.main_tap().norm() - expect).abs() < 6e-3, "at {pos:?}");
        if on_los { blocked += 1 } else { clear += 1 }
    }
    assert!(blocked > 0 && clear > 0, "walk never crossed: {blocked} blocked");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closer_blocker_never_strengthens_a_path(p in point(-12.0, 32.0), f in 0.0f64..1.0) {
        let s = SceneState::default().with_blocker(p);
        let far = path_contributions(&s).unwrap();
        let corners = |i: Option<usize>| match i {
            None => vec![s.tx_pos, s.rx_pos],
            Some(r) => vec![s.tx_pos, s.reflectors[r], s.rx_pos],
        };
        for path in &far {
            let c = corners(path.reflector);
            // move towards the nearest point of the path's nearest segment
            let seg = c.windows(2)
                .min_by(|a, b| segment_distance(p, a[0], a[1]).total_cmp(&segment_distance(p, b[0], b[1])))
                .unwrap();
            let (a, b) = (seg[0], seg[1]);
            let d = Point::new(b.x - a.x, b.y - a.y);
            let t = (((p.x - a.x) * d.x + (p.y - a.y) * d.y) / (d.x * d.x + d.y * d.y)).clamp(0.0, 1.0);
            let foot = Point::new(a.x + t * d.x, a.y + t * d.y);
            let q = Point::new(p.x + f * (foot.x - p.x), p.y + f * (foot.y - p.y));
            let near = path_contributions(&s.with_blocker(q)).unwrap();
            let idx = path.reflector.map_or(0, |r| r + 1);
            prop_assert!(near[idx].gain.norm() <= path.gain.norm() + 1e-18);
        }
    }

    #[test]
    fn depth_differs_only_on_disc_pixels(a in point(-1.0, 9.0), b in point(-1.0, 9.0)) {
        let s = SceneState::default();
        let ta = render_depth(&s.with_blocker(a));
        let tb = render_depth(&s.with_blocker(b));
        let view = Viewport::default();
        for row in 0..DEPTH_ROWS {
            for col in 0..DEPTH_COLS {
                let fx = (col as f64 + 0.5) / DEPTH_COLS as f64;
                let fy = (row as f64 + 0.5) / DEPTH_ROWS as f64;
                let c = Point::new(
                    view.min.x + fx * (view.max.x - view.min.x),
                    view.max.y - fy * (view.max.y - view.min.y),
                );
                let in_a = c.distance(a) <= s.blocker_radius;
                let in_b = c.distance(b) <= s.blocker_radius;
                let (va, vb) = (ta.get(row, col), tb.get(row, col));
                if !in_a && !in_b {
                    prop_assert_eq!(va, vb);
                } else if in_a != in_b {
                    // disc pixels are at least 0.6, background at most 0.5
                    prop_assert!(va != vb);
                }
            }
        }
    }
}

#[test]
fn depth_values_stay_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10_000 {
        let s = SceneState {
            blocker_pos: Point::new(rng.random_range(-20.0..30.0), rng.random_range(-20.0..20.0)),
            blocker_radius: rng.random_range(0.01..3.0),
            ..Default::default()
        };
        let t = render_depth(&s);
        assert_eq!(t.shape(), (50, 90));
        assert!(t.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn blocker_outside_view_renders_background_only() {
    let s = SceneState::default();
    let a = render_depth(&s.with_blocker(Point::new(100.0, 100.0)));
    let b = render_depth(&s.with_blocker(Point::new(-100.0, 40.0)));
    assert_eq!(a, b);
    assert!(a.values().iter().all(|&v| v <= 0.5));
}

#[test]
fn coincident_endpoints_are_rejected() {
    let s = SceneState {
        rx_pos: Point::new(0.0, 0.0),
        ..Default::default()
    };
    assert!(scene_to_cir(&s, &cfg()).is_err());
}

#[test]
fn stationary_blocker_gives_constant_channel_up_to_perturbation() {
    let scene_cfg = SceneTraceConfig {
        walk: WalkModel {
            step_std_m: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let trace = generate_scene_trace(&cfg(), &scene_cfg, 20, PsduSource::Random, 1).unwrap();
    let clean = scene_to_cir(&scene_cfg.scene.with_blocker(scene_cfg.walk.start), &cfg()).unwrap();
    for rec in &trace.set.records {
        // 11 taps of 1e-3 complex noise: squared distance near 1.1e-5
        assert!(rec.true_cir.squared_distance(&clean) < 1e-4);
    }
}

#[test]
fn revisited_position_reproduces_channel_after_phase_correction() {
    let scene_cfg = SceneTraceConfig {
        walk: WalkModel {
            step_std_m: 0.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let c = ChannelConfig {
        snr_db: 35.0,
        phase_drift_std_rad: 0.3,
        rng_seed: 5,
        ..Default::default()
    };
    let trace = generate_scene_trace(&c, &scene_cfg, 30, PsduSource::Random, 1).unwrap();
    let first = ground_truth_estimate(&trace.set.records[0]).unwrap();
    let last = ground_truth_estimate(&trace.set.records[29]).unwrap();
    let drift = trace.set.records[29].phase_offset_rad - trace.set.records[0].phase_offset_rad;
    assert!(drift.abs() > 0.1, "phase barely moved");
    let raw = last.squared_distance(&first);
    let aligned = phase_correct(&last, &first).unwrap().rotated.squared_distance(&first);
    assert!(aligned < 1e-4, "aligned distance {aligned}");
    assert!(aligned < raw / 10.0);
}

#[test]
fn scene_traces_are_seeded_and_framed() {
    let c = ChannelConfig { rng_seed: 9, ..cfg() };
    let sc = SceneTraceConfig::default();
    let a = generate_scene_trace(&c, &sc, 6, PsduSource::Random, 2).unwrap();
    let b = generate_scene_trace(&c, &sc, 6, PsduSource::Random, 2).unwrap();
    assert_eq!(a.set, b.set);
    assert_eq!(a.frames, b.frames);
    assert_eq!(a.frames.len(), 18);
    for (k, rec) in a.set.records.iter().enumerate() {
        let f = &a.frames[3 * k..3 * k + 3];
        assert_eq!(rec.scene_id, Some(f[0].scene_id));
        assert_eq!(f.iter().map(|x| x.aligned).collect::<Vec<_>>(), [true, false, false]);
        assert_eq!(f.iter().map(|x| x.timestamp_ms - rec.timestamp_ms).collect::<Vec<_>>(), [0, 33, 67]);
        assert!(f.iter().all(|x| x.seq_no == rec.seq_no));
    }

    let mut buf = Vec::new();
    write_depth(&a.frames, &mut buf).unwrap();
    assert_eq!(read_depth(&buf[..]).unwrap(), a.frames);
    assert!(read_depth(&buf[..buf.len() - 1]).is_err());
    let mut dup = a.frames.clone();
    dup[1].scene_id = dup[0].scene_id;
    assert!(write_depth(&dup, Vec::new()).is_err());
}
