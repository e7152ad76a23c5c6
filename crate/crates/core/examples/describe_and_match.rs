//! Describes a rendered frame and the same frame rolled by 30 degrees, then
//! checks how many keypoints find their rotated counterpart.
//!
//! `cargo run --release --example describe_and_match -- [roll_deg]`

use stereo_vo::descriptor::{build_pattern, cascade_match, compute_all, hamming};
use stereo_vo::detector::detect;
use stereo_vo::io::synth::{build_sprite_scene, default_motions, SpriteLayout};
use stereo_vo::io::{render_sprites, RenderOptions};
use stereo_vo::{PipelineConfig, StereoCalib};

fn main() -> stereo_vo::Result<()> {
    let roll: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    let calib = StereoCalib::new(450.0, 320.0, 200.0, 0.5)?;
    let mut layout = SpriteLayout::new(640, 400);
    // keep sprites inside the image after rolling
    layout.max_radius_px = Some(170.0);
    layout.cell_px = 4;
    layout.spacing_px = 72.0;
    let scene = build_sprite_scene(&calib, &layout, default_motions(1, 1), 12, 1)?;
    let mut opts = RenderOptions::new(640, 400);
    opts.cell_px = 4;
    let (a, _) = render_sprites(&scene, 0, &calib, &opts)?;
    let (b, _) = render_sprites(&scene, 0, &calib, &opts.with_roll(roll.to_radians()))?;

    let cfg = PipelineConfig::default();
    let pattern = build_pattern();
    let (ka, da) = compute_all(&a, &detect(&a, &cfg)?, &pattern, cfg.scale_factor);
    let (kb, db) = compute_all(&b, &detect(&b, &cfg)?, &pattern, cfg.scale_factor);

    let (s, c) = roll.to_radians().sin_cos();
    let mut paired = 0;
    let mut below = 0;
    let mut cascade_hits = 0;
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
        let hit = cascade_match(d, db.iter().enumerate(), cfg.coarse_hamming_max, cfg.full_hamming_max);
        if hit.map(|(i, _)| (kb[i].x - x).hypot(kb[i].y - y) < 3.0).unwrap_or(false) {
            cascade_hits += 1;
        }
    }
    println!("{} / {} keypoints described", ka.len(), kb.len());
    println!(
        "{paired} with a rotated counterpart, {below} ({:.1}%) below the full threshold, {cascade_hits} recovered by cascade matching",
        100.0 * below as f64 / paired.max(1) as f64
    );
    Ok(())
}
