//! Runs the odometry on a KITTI odometry sequence and scores it when ground
//! truth is available.
//!
//! `cargo run --release --example kitti_sequence -- <sequences/00> [poses/00.txt] [max_frames]`

use std::path::{Path, PathBuf};

use stereo_vo::eval::evaluate;
use stereo_vo::io::load_kitti;
use stereo_vo::{run, PipelineConfig};

fn main() -> stereo_vo::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(seq) = args.next().map(PathBuf::from) else {
        eprintln!("usage: kitti_sequence <sequence dir> [poses file] [max frames]");
        std::process::exit(64);
    };
    let poses = args.next().map(PathBuf::from);
    let limit: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(usize::MAX);
    let source = load_kitti(&seq, &seq.join("calib.txt"), poses.as_deref().map(Path::new))?;
    let n = source.len().min(limit);
    println!("{n} frames, baseline {:.3} m, f {:.1} px", source.calib.baseline, source.calib.f);

    let out = run(source.frames().take(n), &source.calib, &PipelineConfig::default())?;
    let inliers: Vec<f64> = out.stats.iter().skip(1).map(|s| s.inlier_pct).collect();
    let in_band = inliers.iter().filter(|&&p| p >= 50.0).count();
    println!(
        "{:.1}% of frames flagged, {:.1}% of frames with inlier ratio >= 50%",
        100.0 * out.flagged_fraction(),
        100.0 * in_band as f64 / inliers.len().max(1) as f64
    );
    if let Some(gt) = &source.ground_truth {
        let report = evaluate(&out.trajectory, &gt[..n], source.timestamps.as_ref().map(|t| &t[..n]))?;
        println!(
            "translational error {:.3}%, rotational error {:.6} deg/m",
            100.0 * report.overall_translation,
            report.overall_rotation
        );
    }
    Ok(())
}
