//! Circular matching between two consecutive rendered frames.
//!
//! `cargo run --release --example circular_matching`

use stereo_vo::io::synth::{build_sprite_scene, default_motions, SpriteLayout};
use stereo_vo::io::{render_sprites, RenderOptions};
use stereo_vo::matching::circular_match;
use stereo_vo::pipeline::Extractor;
use stereo_vo::{PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let calib = StereoCalib::new(450.0, 320.0, 200.0, 0.5)?;
    let scene = build_sprite_scene(&calib, &SpriteLayout::new(640, 400), default_motions(2, 3), 40, 3)?;
    let opts = RenderOptions::new(640, 400);
    let cfg = PipelineConfig::default();
    let extractor = Extractor::new(cfg.clone())?;
    let (l0, r0) = render_sprites(&scene, 0, &calib, &opts)?;
    let (l1, r1) = render_sprites(&scene, 1, &calib, &opts)?;
    let prev = extractor.extract(&l0, &r0)?;
    let curr = extractor.extract(&l1, &r1)?;

    let loops = circular_match(&prev.as_stereo(), &curr.as_stereo(), &cfg);
    println!(
        "{} stereo matches before, {} after, {} closed loops",
        prev.stereo.len(),
        curr.stereo.len(),
        loops.len()
    );
    let mean_flow = loops
        .iter()
        .map(|c| (c.p_l_curr[0] - c.p_l_prev[0]).hypot(c.p_l_curr[1] - c.p_l_prev[1]))
        .sum::<f64>()
        / loops.len().max(1) as f64;
    println!("mean left-image displacement {mean_flow:.1} px");
    for c in loops.iter().take(5) {
        println!(
            "  prev L({:.0},{:.0}) R({:.0},{:.0}) -> curr L({:.0},{:.0}) R({:.0},{:.0})",
            c.p_l_prev[0], c.p_l_prev[1], c.p_r_prev[0], c.p_r_prev[1], c.p_l_curr[0], c.p_l_curr[1], c.p_r_curr[0], c.p_r_curr[1]
        );
    }
    Ok(())
}
