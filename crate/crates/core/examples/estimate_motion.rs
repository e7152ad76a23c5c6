//! RANSAC and Gauss-Newton ego-motion on synthetic tracks with pixel noise
//! and gross outliers.
//!
//! `cargo run --release --example estimate_motion -- [outlier_rate]`

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stereo_vo::egomotion::ransac_estimate;
use stereo_vo::io::synth::{generate_tracks, random_landmarks, SyntheticScene};
use stereo_vo::{MotionParams, PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let rate: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let calib = StereoCalib::new(718.856, 607.19, 185.22, 0.537)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = MotionParams::new([0.02, -0.05, 0.01], [0.1, -0.05, -0.9]);
    let scene = SyntheticScene {
        landmarks: random_landmarks(&mut rng, 100, (-10.0, 10.0), (-3.0, 2.0), (8.0, 40.0)),
        motions: vec![truth],
        noise_sigma: 0.1,
        outlier_rate: rate,
        seed: 11,
    };
    let tracks = generate_tracks(&scene, &calib)?;
    let obs = tracks.observations(1);
    let planted = tracks.outliers(1);

    let start = Instant::now();
    let est = ransac_estimate(&obs, &calib, &PipelineConfig::default())?;
    let elapsed = start.elapsed();

    let t_err = (est.params.translation() - truth.translation()).norm() / truth.translation().norm();
    let r_err = (est.params.rotation().transpose() * truth.rotation()).trace();
    let r_err = ((r_err - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
    let recovered = est.inlier_indices.iter().filter(|i| !planted.contains(i)).count();
    println!("true      r {:?} t {:?}", truth.r, truth.t);
    println!("estimated r {:?} t {:?}", est.params.r, est.params.t);
    println!(
        "translation error {:.3}%, rotation error {:.4} deg, {recovered} of {} clean points kept, {:.1} ms",
        100.0 * t_err,
        r_err,
        obs.len() - planted.len(),
        elapsed.as_secs_f64() * 1e3
    );
    Ok(())
}
