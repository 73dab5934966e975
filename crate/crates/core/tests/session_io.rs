mod common;

use common::{random_noiseless, rng};
use gyrocal::session_io::{classify, session_from_logs, MotionLabel, SegmentRef, GUARD_SECONDS};
use gyrocal::{
    auto_segment, calibrate, format_csv, load_session, parse_csv, parse_csv_str, simulate_session, write_csv,
    ImuSample, ScenarioConfig, SessionManifest, UnitScale, Vec3,
};
use rand::Rng;

fn random_samples(n: usize, seed: u64) -> Vec<ImuSample> {
    let mut r = rng(seed);
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += r.random_range(1e-4..0.1);
            let mut v = || {
                let mag = 10f64.powi(r.random_range(-6..4));
                r.random_range(-1.0..1.0) * mag
            };
            ImuSample {
                t,
                accel: Vec3::new(v(), v(), v()),
                gyro: Vec3::new(v(), v(), v()),
            }
        })
        .collect()
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let samples = random_samples(10_000, 21);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("log.csv");
    write_csv(&path, &samples, Some("seed=21")).unwrap();
    let back = parse_csv(&path).unwrap();
    assert_eq!(back.len(), samples.len());
    for (a, b) in samples.iter().zip(&back) {
        assert_eq!(a.t.to_bits(), b.t.to_bits());
        for i in 0..3 {
            assert_eq!(a.accel[i].to_bits(), b.accel[i].to_bits());
            assert_eq!(a.gyro[i].to_bits(), b.gyro[i].to_bits());
        }
    }
    assert_eq!(
        format_csv(&back, Some("seed=21")),
        std::fs::read_to_string(&path).unwrap()
    );
}

#[test]
fn unit_scale_applies_on_parse() {
    let text = "t,ax,ay,az,gx,gy,gz\n0,9.80665,0,0,1,0,0\n";
    let s = parse_csv_str(
        text,
        UnitScale {
            accel: 1.0 / 9.80665,
            gyro: 180.0 / std::f64::consts::PI,
        },
    )
    .unwrap();
    assert!((s[0].accel.x - 1.0).abs() < 1e-15);
    assert!((s[0].gyro.x - 57.29577951308232).abs() < 1e-12);
}

#[test]
fn manifest_load_matches_in_memory() {
    let mut r = rng(22);
    for case in 0..5 {
        let mut cfg = random_noiseless(&mut r);
        if case % 2 == 1 {
            cfg.noise_sigma_gyro = 0.1;
            cfg.noise_sigma_gyro_static = None;
            cfg.noise_sigma_accel = 0.002;
        }
        let sim = simulate_session(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_csv(dir.path().join("log.csv"), &sim.log, None).unwrap();
        let manifest = SessionManifest::from_ranges("log.csv", &sim.segments, cfg.speed);
        manifest.write(dir.path().join("manifest.json")).unwrap();

        let read = SessionManifest::read(dir.path().join("manifest.json")).unwrap();
        assert_eq!(read, manifest);
        let loaded = load_session(&read, dir.path()).unwrap();
        assert_eq!(loaded.session, sim.session);
        let a = serde_json::to_string(&calibrate(&loaded.session, None).unwrap()).unwrap();
        let b = serde_json::to_string(&calibrate(&sim.session, None).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn manifest_rejects_pose_during_motion() {
    let sim = simulate_session(&ScenarioConfig::reference()).unwrap();
    let mut m = SessionManifest::from_ranges("log.csv", &sim.segments, 50.0);
    // the hand turn between the first two poses
    m.poses[1] = SegmentRef::new(0, sim.segments.poses[0].end..sim.segments.poses[1].start);
    assert!(session_from_logs(&m, std::slice::from_ref(&sim.log)).is_err());
}

fn seconds(n: usize, rate: f64) -> f64 {
    n as f64 / rate
}

#[test]
fn auto_segment_recovers_simulated_layout() {
    for seed in [1, 2, 3] {
        let cfg = ScenarioConfig {
            speed: 30.0,
            n_poses: 4,
            seed,
            ..ScenarioConfig::reference()
        };
        let sim = simulate_session(&cfg).unwrap();
        let seg = auto_segment(&sim.log).unwrap();
        assert_eq!(seg.poses.len(), 4, "seed {seed}");
        let rate = cfg.sample_rate;
        let truth = std::iter::once(&sim.segments.bias)
            .chain(&sim.segments.poses)
            .chain(std::iter::once(&sim.segments.rotation));
        let found = std::iter::once(&seg.bias)
            .chain(&seg.poses)
            .chain(std::iter::once(&seg.rotation));
        for (t, f) in truth.zip(found) {
            assert!(f.start >= t.start && f.end <= t.end, "seed {seed}: {f:?} outside {t:?}");
            // truth as the segmenter should report it: 0.5 s guard at both ends
            let guard = (GUARD_SECONDS * rate).round() as i64;
            let (ts, te) = (t.start as i64 + guard, t.end as i64 - guard);
            assert!(
                seconds((f.start as i64 - ts).unsigned_abs() as usize, rate) <= 0.5,
                "seed {seed}: {f:?} vs {t:?}"
            );
            assert!(
                seconds((f.end as i64 - te).unsigned_abs() as usize, rate) <= 0.5,
                "seed {seed}: {f:?} vs {t:?}"
            );
        }

        // each proposed segment classifies the same way on its own
        for r in std::iter::once(&seg.bias).chain(&seg.poses) {
            let labels = classify(&sim.log[r.clone()], seg.rest_reference);
            assert!(labels.iter().all(|l| *l == MotionLabel::Static));
        }
        let labels = classify(&sim.log[seg.rotation.clone()], seg.rest_reference);
        assert!(labels.iter().all(|l| *l == MotionLabel::Rotating));

        let manifest = seg.into_manifest("log.csv", 30.0);
        let session = session_from_logs(&manifest, std::slice::from_ref(&sim.log)).unwrap();
        let res = calibrate(&session, None).unwrap();
        assert!(common::max_rel_err(res.gyro.scale, cfg.true_gyro.scale) < 0.01);
    }
}

#[test]
fn json_floats_round_trip_exactly() {
    let samples = random_samples(2000, 23);
    for s in &samples {
        let text = serde_json::to_string(&s.gyro).unwrap();
        let back: Vec3 = serde_json::from_str(&text).unwrap();
        for i in 0..3 {
            assert_eq!(back[i].to_bits(), s.gyro[i].to_bits(), "{text}");
        }
    }
}
