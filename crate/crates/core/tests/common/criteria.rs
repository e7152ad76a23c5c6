//! One check per acceptance criterion. Each returns whether it held and a
//! one-line summary of what was measured.

use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use stereo_vo::descriptor::{build_pattern, cascade_match, compute_all, hamming, BinaryDescriptor};
use stereo_vo::detector::detect;
use stereo_vo::egomotion::{jacobian, ransac_estimate, residuals, Observation};
use stereo_vo::eval::{evaluate, evaluate_with, path_distances, EvalOptions};
use stereo_vo::geometry::{project_camera, triangulate, Landmark, Side};
use stereo_vo::io::render::{render_sequence, render_sprites, RenderOptions};
use stereo_vo::io::synth::{build_sprite_scene, default_motions, generate_tracks, random_landmarks, SpriteLayout, SyntheticScene};
use stereo_vo::matching::{circular_match, horizontal_filter, vertical_filter, Features, StereoFeatures, StereoMatch};
use stereo_vo::{run, MotionParams, PipelineConfig, Pose, StereoCalib};

use super::*;

pub struct Check {
    pub ok: bool,
    pub detail: String,
}

fn check(ok: bool, detail: String) -> Check {
    Check { ok, detail }
}

pub fn kitti_calib() -> StereoCalib {
    StereoCalib::new(718.856, 607.1928, 185.2157, 0.5371657).unwrap()
}

pub fn sprite_calib() -> StereoCalib {
    StereoCalib::new(450.0, 320.0, 200.0, 0.5).unwrap()
}

fn rotation_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let c = (((a.transpose() * b).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

/// 100 clean landmarks plus 43 gross outliers (30% of all observations).
pub fn egomotion_oracle(seed: u64) -> (bool, String) {
    let calib = kitti_calib();
    let mut r = rng(seed);
    let deg = |d: f64| d.to_radians();
    let truth = MotionParams::new(
        [deg(r.gen_range(-2.5..2.5)), deg(r.gen_range(-2.5..2.5)), deg(r.gen_range(-2.5..2.5))],
        [r.gen_range(-0.4..0.4), r.gen_range(-0.2..0.2), r.gen_range(-0.85..-0.5)],
    );
    let scene = SyntheticScene {
        landmarks: random_landmarks(&mut r, 143, (-12.0, 12.0), (-3.0, 2.0), (6.0, 45.0)),
        motions: vec![truth],
        noise_sigma: 0.1,
        outlier_rate: 43.0 / 143.0,
        seed,
    };
    let tracks = generate_tracks(&scene, &calib).unwrap();
    let obs = tracks.observations(1);
    let planted = tracks.outliers(1);
    assert_eq!(planted.len(), 43);
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let start = Instant::now();
    let est = ransac_estimate(&obs, &calib, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let t_err = (est.params.translation() - truth.translation()).norm() / truth.translation().norm();
    let r_err = rotation_angle_deg(&est.params.rotation(), &truth.rotation());
    let kept = est.inlier_indices.iter().filter(|i| !planted.contains(i)).count();
    let ok = t_err < 0.01 && r_err < 0.05 && kept >= 95 && secs < 1.0;
    (
        ok,
        format!(
            "seed {seed}: t err {:.3}%, r err {:.4} deg, {kept}/100 inliers, {:.0} ms",
            100.0 * t_err,
            r_err,
            secs * 1e3
        ),
    )
}

pub fn criterion_1() -> Check {
    let runs: Vec<_> = (1..=5).map(egomotion_oracle).collect();
    let ok = runs.iter().all(|r| r.0);
    let worst = runs.iter().find(|r| !r.0).unwrap_or(&runs[0]);
    check(ok, format!("5 seeds; {}", worst.1))
}

pub fn criterion_2() -> Check {
    let calib = kitti_calib();
    let mut r = rng(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut entries = 0;
    for _ in 0..100 {
        let m = MotionParams::new(
            [r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1)],
            [r.gen_range(-1.0..1.0), r.gen_range(-0.5..0.5), r.gen_range(-1.0..1.0)],
        );
        let obs: Vec<Observation> = (0..5)
            .map(|_| Observation {
                landmark: Landmark(Vector3::new(r.gen_range(-10.0..10.0), r.gen_range(-3.0..3.0), r.gen_range(5.0..40.0))),
                x_l: [r.gen_range(0.0..1240.0), r.gen_range(0.0..370.0)],
                x_r: [r.gen_range(0.0..1240.0), r.gen_range(0.0..370.0)],
            })
            .collect();
        let j = jacobian(&m, &obs, &calib).unwrap();
        let v = m.to_vector();
        for col in 0..6 {
            let (mut vp, mut vm) = (v, v);
            vp[col] += h;
            vm[col] -= h;
            let rp = residuals(&MotionParams::from_vector(&vp), &obs, &calib).unwrap();
            let rm = residuals(&MotionParams::from_vector(&vm), &obs, &calib).unwrap();
            for row in 0..rp.len() {
                let fd = (rp[row] - rm[row]) / (2.0 * h);
                let an = j[(row, col)];
                // entries that are exactly zero analytically get an absolute floor
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-2);
                worst = worst.max(rel);
                entries += 1;
            }
        }
    }
    check(worst < 1e-4, format!("{entries} entries, worst relative error {worst:.2e}"))
}

pub fn criterion_3() -> Check {
    let calib = kitti_calib();
    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = Vector3::new(r.gen_range(-20.0..20.0), r.gen_range(-5.0..5.0), r.gen_range(1.0..80.0));
        let l = project_camera(&p, &calib, Side::Left).unwrap();
        let rr = project_camera(&p, &calib, Side::Right).unwrap();
        let q = triangulate(l, rr, &calib, 1e-6).unwrap();
        worst = worst.max((q.0 - p).norm());
    }
    let small = StereoCalib::new(100.0, 50.0, 50.0, 0.5).unwrap();
    let ex = triangulate([60.0, 50.0], [50.0, 50.0], &small, 0.5).unwrap();
    let exact = ex.0 == Vector3::new(0.5, 0.0, 5.0);
    check(
        worst < 1e-9 && exact,
        format!("1000 points, worst roundtrip {worst:.2e} m; example {:?}", ex.0.as_slice()),
    )
}

pub fn criterion_4() -> Check {
    let cfg = PipelineConfig::default();
    let mut r = rng(4);
    let mut total = 0;
    let mut mismatched = 0;
    for i in 0..20 {
        // mix pure noise with blocky images so both many and few corners occur
        let img = if i % 2 == 0 {
            random_image(64, 64, &mut r)
        } else {
            let cells: Vec<u8> = (0..64).map(|_| r.gen()).collect();
            GrayImage::from_fn(64, 64, |x, y| cells[(y / 8) * 8 + x / 8])
        };
        let got = detect(&img, &cfg).unwrap();
        let want = oracle_detect(&img, &cfg);
        total += want.len();
        if got != want {
            mismatched += 1;
        }
    }
    check(mismatched == 0, format!("20 images, {total} keypoints, {mismatched} images differ"))
}

/// Self-match rate of keypoints between a sprite frame and the same frame
/// rolled by `roll_deg`.
pub fn rotation_self_match(roll_deg: f64, seed: u64) -> (usize, usize) {
    let calib = sprite_calib();
    let mut layout = SpriteLayout::new(640, 400);
    layout.max_radius_px = Some(170.0);
    layout.cell_px = 4;
    layout.spacing_px = 72.0;
    let scene = build_sprite_scene(&calib, &layout, default_motions(1, seed), 12, seed).unwrap();
    let mut opts = RenderOptions::new(640, 400);
    opts.cell_px = 4;
    let (a, _) = render_sprites(&scene, 0, &calib, &opts).unwrap();
    let (b, _) = render_sprites(&scene, 0, &calib, &opts.with_roll(roll_deg.to_radians())).unwrap();
    let cfg = PipelineConfig::default();
    let pattern = build_pattern();
    let (ka, da) = compute_all(&a, &detect(&a, &cfg).unwrap(), &pattern, cfg.scale_factor);
    let (kb, db) = compute_all(&b, &detect(&b, &cfg).unwrap(), &pattern, cfg.scale_factor);
    let (s, c) = roll_deg.to_radians().sin_cos();
    let (mut paired, mut below) = (0, 0);
    for (k, d) in ka.iter().zip(&da) {
        let (dx, dy) = (k.x - calib.cu, k.y - calib.cv);
        let (x, y) = (calib.cu + c * dx - s * dy, calib.cv + s * dx + c * dy);
        let dist = |j: usize| (kb[j].x - x).hypot(kb[j].y - y);
        let nearest = (0..kb.len())
            .filter(|&j| kb[j].octave == k.octave)
            .min_by(|&i, &j| dist(i).total_cmp(&dist(j)));
        let Some(j) = nearest.filter(|&j| dist(j) <= 1.5 * cfg.scale_factor.powi(k.octave as i32)) else {
            continue;
        };
        paired += 1;
        if hamming(d, &db[j]) < cfg.full_hamming_max {
            below += 1;
        }
    }
    (below, paired)
}

/// Random candidate sets, a third of them near copies of the query.
pub fn cascade_equivalence(sets: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let cfg = PipelineConfig::default();
    let mut mismatches = 0;
    for _ in 0..sets {
        let q = random_descriptor(&mut r);
        let n = r.gen_range(0..40);
        let cands: Vec<(usize, BinaryDescriptor)> = (0..n)
            .map(|i| {
                let d = match r.gen_range(0..3) {
                    0 => random_descriptor(&mut r),
                    1 => perturb(&q, r.gen_range(0..200), &mut r),
                    _ => perturb(&q, r.gen_range(100..140), &mut r),
                };
                (i * 3 + 1, d)
            })
            .collect();
        let got = cascade_match(&q, cands.iter().map(|(i, d)| (*i, d)), cfg.coarse_hamming_max, cfg.full_hamming_max);
        if got != oracle_cascade(&q, &cands, cfg.coarse_hamming_max, cfg.full_hamming_max) {
            mismatches += 1;
        }
    }
    mismatches
}

pub fn criterion_5() -> Check {
    let (below, paired) = rotation_self_match(30.0, 1);
    let rate = below as f64 / paired.max(1) as f64;
    let mismatches = cascade_equivalence(1000, 5);
    check(
        rate >= 0.8 && mismatches == 0,
        format!(
            "30 deg roll: {below}/{paired} = {:.1}% below full_hamming_max; cascade vs exhaustive: {mismatches}/1000 differ",
            100.0 * rate
        ),
    )
}

/// Match sets whose row offsets and disparities straddle the thresholds,
/// including values exactly on them.
pub fn planted_filter_case(seed: u64) -> (Vec<Keypoint>, Vec<Keypoint>, Vec<StereoMatch>) {
    let mut r = rng(seed);
    let dys = [0.0, 0.5, 2.5, 3.0, -3.0, 3.0001, -3.5, 10.0];
    let disps = [-5.0, 0.0, 0.25, 0.5, 0.75, 64.0, 128.0, 128.5, 300.0];
    let (mut left, mut right, mut matches) = (vec![], vec![], vec![]);
    for _ in 0..400 {
        let (x, y) = (r.gen_range(0..1000) as f64, r.gen_range(0..370) as f64);
        let dy = dys[r.gen_range(0..dys.len())];
        let d = disps[r.gen_range(0..disps.len())];
        left.push(kp(x, y));
        right.push(kp(x - d, y + dy));
        let i = left.len() - 1;
        matches.push(StereoMatch {
            left_idx: i,
            right_idx: i,
            distance: 0,
        });
    }
    (left, right, matches)
}

pub fn criterion_6() -> Check {
    let cfg = PipelineConfig::default();
    let mut differ = 0;
    let mut kept = 0;
    for seed in 0..10 {
        let (l, r, m) = planted_filter_case(seed);
        let got = horizontal_filter(
            &vertical_filter(&m, &l, &r, cfg.vertical_max_px),
            &l,
            &r,
            cfg.horizontal_max_px,
            cfg.min_disparity_px,
        );
        let want: Vec<StereoMatch> = m
            .iter()
            .filter(|s| {
                let dy = (l[s.left_idx].y - r[s.right_idx].y).abs();
                let d = l[s.left_idx].x - r[s.right_idx].x;
                dy <= cfg.vertical_max_px && d >= cfg.min_disparity_px && d <= cfg.horizontal_max_px
            })
            .copied()
            .collect();
        kept += want.len();
        if got != want {
            differ += 1;
        }
    }
    check(differ == 0, format!("10 sets of 400 planted matches, {kept} pass the predicate, {differ} sets differ"))
}

pub fn circular_case(t: &TwoFrames, cfg: &PipelineConfig) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let prev = StereoFeatures {
        left: Features::new(&t.prev_l.0, &t.prev_l.1),
        right: Features::new(&t.prev_r.0, &t.prev_r.1),
        stereo: &t.prev_stereo,
    };
    let curr = StereoFeatures {
        left: Features::new(&t.curr_l.0, &t.curr_l.1),
        right: Features::new(&t.curr_r.0, &t.curr_r.1),
        stereo: &t.curr_stereo,
    };
    let got = circular_match(&prev, &curr, cfg)
        .iter()
        .map(|c| (c.prev_match, c.curr_match))
        .collect();
    (got, oracle_circular(&prev, &curr, cfg))
}

pub fn criterion_7() -> Check {
    let cfg = PipelineConfig::default();
    let mut differ = 0;
    let mut loops = 0;
    let mut corrupted_found = 0;
    for (seed, drift) in [(1, 20.0), (2, 60.0), (3, 99.0), (4, 140.0), (5, 5.0)] {
        let t = planted_tracks(240, drift, 12, 50, seed);
        let (got, want) = circular_case(&t, &cfg);
        loops += want.len();
        corrupted_found += got.iter().filter(|(_, c)| t.corrupted.contains(c)).count();
        if got != want {
            differ += 1;
        }
    }
    check(
        differ == 0 && corrupted_found == 0,
        format!("5 frame pairs (290 keypoints per image), {loops} loops, {differ} differ, {corrupted_found} corrupted tracks closed"),
    )
}

pub struct EndToEnd {
    pub path_length: f64,
    pub whole_path_error: f64,
    pub worst_segment_gap: f64,
    pub segments: usize,
}

/// Rendered 20-frame sequence through the full pipeline.
pub fn end_to_end(seed: u64) -> EndToEnd {
    let calib = sprite_calib();
    let scene = build_sprite_scene(&calib, &SpriteLayout::new(640, 400), default_motions(20, seed), 40, seed).unwrap();
    let frames = render_sequence(&scene, &calib, &RenderOptions::new(640, 400)).unwrap();
    let out = run(frames.into_iter().map(Ok), &calib, &PipelineConfig::default()).unwrap();
    let gt = scene.camera_poses();
    let est = out.trajectory;

    let report = evaluate(&est, &gt, None).unwrap();
    let dist = path_distances(&gt);
    let opts = EvalOptions {
        step_frames: 1,
        lengths: vec![2.0, 4.0, 6.0, 8.0],
        ..EvalOptions::default()
    };
    let fine = evaluate_with(&est, &gt, None, &opts).unwrap();
    // recompute every segment straight from the relative transforms
    let mut gap = 0.0f64;
    for s in report.segments.iter().chain(&fine.segments) {
        let e: Pose = (gt[s.first].inverse() * gt[s.last]).inverse() * (est[s.first].inverse() * est[s.last]);
        let len = dist[s.last] - dist[s.first];
        let angle = ((e.rotation.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
        gap = gap.max((e.translation.norm() / len - s.trans).abs());
        gap = gap.max((angle / len - s.rot).abs());
    }
    EndToEnd {
        path_length: *dist.last().unwrap(),
        whole_path_error: report.overall_translation,
        worst_segment_gap: gap,
        segments: report.segments.len() + fine.segments.len(),
    }
}

pub fn criterion_8() -> Check {
    let e = end_to_end(1);
    check(
        e.whole_path_error < 0.01 && e.worst_segment_gap < 1e-6,
        format!(
            "{:.2} m path, translational error {:.3}% of path length; {} segments agree with direct recomputation to {:.1e}",
            e.path_length,
            100.0 * e.whole_path_error,
            e.segments,
            e.worst_segment_gap
        ),
    )
}

pub fn straight(n: usize, step: f64) -> Vec<Pose> {
    (0..n)
        .map(|i| Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, step * i as f64)))
        .collect()
}

pub fn random_trajectory(n: usize, seed: u64) -> Vec<Pose> {
    let mut r = rng(seed);
    let mut poses = vec![MotionParams::new([r.gen(), r.gen(), r.gen()], [r.gen(), r.gen(), r.gen()]).to_transform()];
    for _ in 1..n {
        let m = MotionParams::new(
            [r.gen_range(-0.05..0.05), r.gen_range(-0.05..0.05), r.gen_range(-0.05..0.05)],
            [r.gen_range(-0.5..0.5), r.gen_range(-0.2..0.2), r.gen_range(0.5..2.5)],
        );
        let last = *poses.last().unwrap();
        poses.push((last * m.to_transform()).orthonormalized());
    }
    poses
}

pub fn criterion_9() -> Check {
    let report = evaluate(&straight(120, 1.012), &straight(120, 1.0), None).unwrap();
    let (len, bin) = report.per_length[0];
    let overshoot_ok = len == 100.0 && (bin.trans - 0.012).abs() < 1e-12;
    let mut nonzero = 0;
    for seed in 0..20 {
        let t = random_trajectory(300, seed);
        let r = evaluate(&t, &t, None).unwrap();
        if r.overall_translation != 0.0 || r.overall_rotation != 0.0 || r.segments.iter().any(|s| s.trans != 0.0 || s.rot != 0.0) {
            nonzero += 1;
        }
    }
    check(
        overshoot_ok && nonzero == 0,
        format!(
            "100 m bin {:.12}% (|err| {:.1e}); evaluate(T,T) nonzero on {nonzero}/20 random trajectories",
            100.0 * bin.trans,
            (bin.trans - 0.012).abs()
        ),
    )
}

/// `None` when no dataset is configured.
pub fn criterion_10() -> Option<Check> {
    let seq = std::env::var_os("KITTI_SEQ_DIR")?;
    let poses = std::env::var_os("KITTI_POSES")?;
    let seq = std::path::PathBuf::from(seq);
    let source = match stereo_vo::io::load_kitti(&seq, &seq.join("calib.txt"), Some(std::path::Path::new(&poses))) {
        Ok(s) => s,
        Err(e) => return Some(check(false, format!("cannot load dataset: {e}"))),
    };
    let limit = std::env::var("KITTI_MAX_FRAMES").ok().and_then(|v| v.parse().ok()).unwrap_or(usize::MAX);
    let n = source.len().min(limit);
    let out = match run(source.frames().take(n), &source.calib, &PipelineConfig::default()) {
        Ok(o) => o,
        Err(e) => return Some(check(false, format!("run failed: {e}"))),
    };
    let gt = &source.ground_truth.as_ref().unwrap()[..n];
    let report = evaluate(&out.trajectory, gt, source.timestamps.as_ref().map(|t| &t[..n])).unwrap();
    let pct: Vec<f64> = out.stats.iter().skip(1).map(|s| s.inlier_pct).collect();
    let in_band = pct.iter().filter(|&&p| (50.0..=100.0).contains(&p)).count() as f64 / pct.len().max(1) as f64;
    Some(check(
        report.overall_translation <= 0.05 && report.overall_rotation <= 0.02 && in_band > 0.5,
        format!(
            "{n} frames: {:.3}% / {:.5} deg/m, {:.0}% of frames with 50-100% inliers",
            100.0 * report.overall_translation,
            report.overall_rotation,
            100.0 * in_band
        ),
    ))
}
