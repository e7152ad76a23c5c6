//! Stereo matching of one rendered pair: raw mutual matches, the effect of
//! each geometric filter, and depth accuracy against the known scene.
//!
//! `cargo run --release --example stereo_matching`

use stereo_vo::geometry::{project_camera, triangulate, Side};
use stereo_vo::io::synth::{build_sprite_scene, default_motions, SpriteLayout};
use stereo_vo::io::{render_sprites, RenderOptions};
use stereo_vo::matching::{horizontal_filter, match_stereo, vertical_filter};
use stereo_vo::pipeline::Extractor;
use stereo_vo::{PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let calib = StereoCalib::new(450.0, 320.0, 200.0, 0.5)?;
    let scene = build_sprite_scene(&calib, &SpriteLayout::new(640, 400), default_motions(1, 2), 40, 2)?;
    let (left, right) = render_sprites(&scene, 0, &calib, &RenderOptions::new(640, 400))?;

    let cfg = PipelineConfig::default();
    let features = Extractor::new(cfg.clone())?.extract(&left, &right)?;
    let frame = features.as_stereo();
    let raw = match_stereo(frame.left, frame.right, &cfg);
    let vertical = vertical_filter(&raw, &features.left_kps, &features.right_kps, cfg.vertical_max_px);
    let both = horizontal_filter(
        &vertical,
        &features.left_kps,
        &features.right_kps,
        cfg.horizontal_max_px,
        cfg.min_disparity_px,
    );
    println!(
        "{} left / {} right keypoints: {} mutual matches, {} after vertical, {} after horizontal",
        features.left_kps.len(),
        features.right_kps.len(),
        raw.len(),
        vertical.len(),
        both.len()
    );

    // compare each triangulated match with the depth of the nearest sprite
    let truth: Vec<_> = scene.landmarks_in_frame(0);
    let mut rel_errors = Vec::new();
    for m in &both {
        let l = features.left_kps[m.left_idx];
        let r = features.right_kps[m.right_idx];
        let Ok(p) = triangulate([l.x, l.y], [r.x, r.y], &calib, cfg.min_disparity_px) else {
            continue;
        };
        let nearest = truth
            .iter()
            .min_by(|a, b| {
                let da = project_camera(a, &calib, Side::Left).map(|q| (q[0] - l.x).hypot(q[1] - l.y));
                let db = project_camera(b, &calib, Side::Left).map(|q| (q[0] - l.x).hypot(q[1] - l.y));
                da.unwrap_or(f64::MAX).total_cmp(&db.unwrap_or(f64::MAX))
            })
            .unwrap();
        rel_errors.push((p.0.z - nearest.z).abs() / nearest.z);
    }
    rel_errors.sort_by(f64::total_cmp);
    if !rel_errors.is_empty() {
        println!(
            "relative depth error: median {:.2}%, 90th percentile {:.2}%",
            100.0 * rel_errors[rel_errors.len() / 2],
            100.0 * rel_errors[rel_errors.len() * 9 / 10]
        );
    }
    Ok(())
}
