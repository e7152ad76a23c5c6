//! Multi-scale FAST detection with orientation.
//!
//! `cargo run --release --example detect_features -- [image.png]`
//! Without an argument a rendered sprite frame is used.

use stereo_vo::detector::detect;
use stereo_vo::io::synth::{build_sprite_scene, default_motions, SpriteLayout};
use stereo_vo::io::{load_gray, render_sprites, RenderOptions};
use stereo_vo::{PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let img = match std::env::args().nth(1) {
        Some(path) => load_gray(path.as_ref())?,
        None => {
            let calib = StereoCalib::new(450.0, 320.0, 200.0, 0.5)?;
            let scene = build_sprite_scene(&calib, &SpriteLayout::new(640, 400), default_motions(1, 0), 40, 0)?;
            render_sprites(&scene, 0, &calib, &RenderOptions::new(640, 400))?.0
        }
    };
    let cfg = PipelineConfig::default();
    let kps = detect(&img, &cfg)?;
    println!("{} keypoints in {}x{}", kps.len(), img.width(), img.height());
    for level in 0..cfg.pyramid_levels {
        let n = kps.iter().filter(|k| k.octave == level).count();
        if n > 0 {
            println!("  octave {level}: {n}");
        }
    }
    for k in kps.iter().take(5) {
        println!(
            "  ({:7.2}, {:7.2}) response {:5} angle {:6.1} deg octave {}",
            k.x,
            k.y,
            k.response,
            k.angle.to_degrees(),
            k.octave
        );
    }
    Ok(())
}
