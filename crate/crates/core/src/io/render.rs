//! Renders synthetic scenes as point sprites: every landmark becomes a
//! 9x9-cell black/white pattern, unique per landmark, centred on its
//! projection over a mid-gray background.

use crate::config::StereoCalib;
use crate::error::{Error, Result};
use crate::geometry::{project_camera, Side};
use crate::image::GrayImage;
use crate::io::synth::SyntheticScene;

pub const BACKGROUND: u8 = 128;
pub const SPRITE_CELLS: usize = 9;
const SUPERSAMPLE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    pub cell_px: usize,
    /// In-plane camera roll in radians; sprite positions rotate about the
    /// principal point and the patterns rotate with them.
    pub roll: f64,
}

impl RenderOptions {
    pub fn new(width: usize, height: usize) -> Self {
        RenderOptions {
            width,
            height,
            cell_px: 3,
            roll: 0.0,
        }
    }

    pub fn with_roll(mut self, roll: f64) -> Self {
        self.roll = roll;
        self
    }

    pub fn sprite_px(&self) -> f64 {
        (SPRITE_CELLS * self.cell_px) as f64
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 81 cells derived from the landmark index, row-major, `true` = white.
pub fn sprite_pattern(id: usize) -> [bool; SPRITE_CELLS * SPRITE_CELLS] {
    let a = splitmix64(id as u64);
    let b = splitmix64(a ^ 0xa076_1d64_78bd_642f);
    let mut cells = [false; SPRITE_CELLS * SPRITE_CELLS];
    for (k, c) in cells.iter_mut().enumerate() {
        *c = if k < 64 { a >> k & 1 == 1 } else { b >> (k - 64) & 1 == 1 };
    }
    cells
}

/// Where each sprite lands in the rendered image, after roll.
pub fn sprite_centers(
    scene: &SyntheticScene,
    frame: usize,
    calib: &StereoCalib,
    roll: f64,
    side: Side,
) -> Result<Vec<[f64; 2]>> {
    let (s, c) = roll.sin_cos();
    scene
        .landmarks_in_frame(frame)
        .iter()
        .map(|p| {
            let q = project_camera(p, calib, side)?;
            let (dx, dy) = (q[0] - calib.cu, q[1] - calib.cv);
            Ok([calib.cu + c * dx - s * dy, calib.cv + s * dx + c * dy])
        })
        .collect()
}

fn render_one(centers: &[[f64; 2]], opts: &RenderOptions) -> Result<GrayImage> {
    let size = opts.sprite_px();
    let half = size / 2.0;
    // circumscribed radius: rotated sprites closer than this may touch
    let reach = half * std::f64::consts::SQRT_2;
    let (w, h) = (opts.width as f64, opts.height as f64);
    let on_screen: Vec<usize> = (0..centers.len())
        .filter(|&i| {
            let p = centers[i];
            p[0] > -reach && p[0] < w + reach && p[1] > -reach && p[1] < h + reach
        })
        .collect();
    for (a_pos, &a) in on_screen.iter().enumerate() {
        for &b in &on_screen[a_pos + 1..] {
            let d = (centers[a][0] - centers[b][0]).hypot(centers[a][1] - centers[b][1]);
            if d < 2.0 * reach {
                return Err(Error::SpriteOverlap { frame: 0, a, b });
            }
        }
    }

    let mut img = GrayImage::filled(opts.width, opts.height, BACKGROUND);
    let (s, c) = opts.roll.sin_cos();
    let n = SUPERSAMPLE as f64;
    for &id in &on_screen {
        let cells = sprite_pattern(id);
        let [cx, cy] = centers[id];
        let x0 = ((cx - reach).floor().max(0.0)) as usize;
        let y0 = ((cy - reach).floor().max(0.0)) as usize;
        let x1 = ((cx + reach).ceil().min(w - 1.0)).max(0.0) as usize;
        let y1 = ((cy + reach).ceil().min(h - 1.0)).max(0.0) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let mut acc = 0.0;
                let mut touched = false;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let px = x as f64 - 0.5 + (sx as f64 + 0.5) / n - cx;
                        let py = y as f64 - 0.5 + (sy as f64 + 0.5) / n - cy;
                        // undo the roll to reach pattern coordinates
                        let a = c * px + s * py + half;
                        let b = -s * px + c * py + half;
                        if a >= 0.0 && a < size && b >= 0.0 && b < size {
                            let col = (a / opts.cell_px as f64) as usize;
                            let row = (b / opts.cell_px as f64) as usize;
                            let white = cells[row.min(SPRITE_CELLS - 1) * SPRITE_CELLS + col.min(SPRITE_CELLS - 1)];
                            acc += if white { 255.0 } else { 0.0 };
                            touched = true;
                        } else {
                            acc += BACKGROUND as f64;
                        }
                    }
                }
                if touched {
                    img.set(x, y, (acc / (n * n)).round() as u8);
                }
            }
        }
    }
    Ok(img)
}

/// Left and right images of `frame`.
pub fn render_sprites(
    scene: &SyntheticScene,
    frame: usize,
    calib: &StereoCalib,
    opts: &RenderOptions,
) -> Result<(GrayImage, GrayImage)> {
    let tag = |e: Error| match e {
        Error::SpriteOverlap { a, b, .. } => Error::SpriteOverlap { frame, a, b },
        other => other,
    };
    let left = render_one(&sprite_centers(scene, frame, calib, opts.roll, Side::Left)?, opts).map_err(tag)?;
    let right = render_one(&sprite_centers(scene, frame, calib, opts.roll, Side::Right)?, opts).map_err(tag)?;
    Ok((left, right))
}

/// Every frame of the scene, in order.
pub fn render_sequence(
    scene: &SyntheticScene,
    calib: &StereoCalib,
    opts: &RenderOptions,
) -> Result<Vec<(GrayImage, GrayImage)>> {
    (0..scene.frames()).map(|k| render_sprites(scene, k, calib, opts)).collect()
}
