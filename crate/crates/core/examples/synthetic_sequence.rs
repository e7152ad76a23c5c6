//! Renders a 20-frame sprite sequence with known motion, runs the odometry
//! over it and reports the drift against ground truth.
//!
//! `cargo run --release --example synthetic_sequence -- [seed]`

use stereo_vo::eval::evaluate;
use stereo_vo::io::synth::{build_sprite_scene, default_motions, SpriteLayout};
use stereo_vo::io::{render_sequence, RenderOptions};
use stereo_vo::{run, PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let calib = StereoCalib::new(450.0, 320.0, 200.0, 0.5)?;
    let layout = SpriteLayout::new(640, 400);
    let scene = build_sprite_scene(&calib, &layout, default_motions(20, seed), 40, seed)?;
    let frames = render_sequence(&scene, &calib, &RenderOptions::new(640, 400))?;

    let out = run(frames.into_iter().map(Ok), &calib, &PipelineConfig::default())?;
    for s in &out.stats {
        println!(
            "frame {:2}: {:3} stereo, {:3} circular, {:3} inliers{}",
            s.frame,
            s.stereo_matches,
            s.circular_matches,
            s.inliers,
            if s.flagged { " (flagged)" } else { "" }
        );
    }
    let gt = scene.camera_poses();
    let est_end = out.trajectory.last().unwrap().translation;
    let gt_end = gt.last().unwrap().translation;
    let path: f64 = gt.windows(2).map(|w| (w[1].translation - w[0].translation).norm()).sum();
    println!("path length {path:.3} m, end-point error {:.4} m ({:.3}%)", (est_end - gt_end).norm(), 100.0 * (est_end - gt_end).norm() / path);
    let report = evaluate(&out.trajectory, &gt, None)?;
    println!("whole-path translational error {:.3}%", 100.0 * report.overall_translation);
    Ok(())
}
