//! KITTI-protocol evaluation of a trajectory against ground truth.
//!
//! `cargo run --release --example evaluate_trajectory -- est.txt gt.txt [times.txt]`
//! Without arguments a 1.2% scale overshoot on a straight 900 m path is scored.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use stereo_vo::eval::evaluate;
use stereo_vo::io::{read_timestamps, read_trajectory};
use stereo_vo::Pose;

fn main() -> stereo_vo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (est, gt, times) = if args.len() >= 2 {
        let times = args.get(2).map(|t| read_timestamps(Path::new(t))).transpose()?;
        (read_trajectory(Path::new(&args[0]))?, read_trajectory(Path::new(&args[1]))?, times)
    } else {
        let line = |step: f64| -> Vec<Pose> {
            (0..900).map(|i| Pose::new(Matrix3::identity(), Vector3::new(0.0, 0.0, step * i as f64))).collect()
        };
        let times = (0..900).map(|i| i as f64 * 0.1).collect();
        (line(1.012), line(1.0), Some(times))
    };
    let report = evaluate(&est, &gt, times.as_deref())?;
    println!("length_m  trans_%  rot_deg/m  segments");
    for (len, b) in &report.per_length {
        println!("{len:8.0}  {:7.3}  {:9.6}  {}", 100.0 * b.trans, b.rot, b.count);
    }
    for (speed, b) in &report.per_speed {
        println!("{speed:5.0} km/h  {:7.3}%  {:9.6} deg/m  ({} segments)", 100.0 * b.trans, b.rot, b.count);
    }
    println!(
        "overall {:.3}% {:.6} deg/m{}",
        100.0 * report.overall_translation,
        report.overall_rotation,
        if report.short_path { " (path shorter than 100 m)" } else { "" }
    );
    Ok(())
}
