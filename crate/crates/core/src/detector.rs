//! Oriented FAST keypoints over a scale pyramid.
//!
//! Corners come from the FAST-9 segment test on the 16-pixel Bresenham circle
//! of radius 3, are thinned by 3x3 non-maximum suppression, ranked by response
//! across all pyramid levels and finally oriented by the intensity centroid of
//! a disc around the corner.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::{GrayImage, Pyramid};

/// Bresenham circle of radius 3, clockwise from twelve o'clock.
pub const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Minimum contiguous arc length of the segment test.
pub const ARC_LENGTH: usize = 9;

/// A segment-test corner in the coordinates of the image it was found in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corner {
    pub x: usize,
    pub y: usize,
    pub score: u32,
}

/// Oriented multi-scale keypoint. Position is in level-0 pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub response: f64,
    /// Radians in `[0, 2π)`.
    pub angle: f64,
    pub octave: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OrientationMoments {
    pub m00: i64,
    pub m10: i64,
    pub m01: i64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Orientation {
    pub angle: f64,
    /// Both first-order moments vanished; the angle carries no information.
    pub degenerate: bool,
}

/// Segment-test score of the pixel at `(x, y)`, or `None` when it is not a
/// corner. The caller guarantees a 3 pixel margin.
///
/// The score sums `|p - center| - threshold` over the maximal contiguous arc
/// that passes the test.
pub fn segment_score(img: &GrayImage, x: usize, y: usize, threshold: u8) -> Option<u32> {
    let c = img.get(x, y) as i32;
    let t = threshold as i32;
    // +1 brighter, -1 darker, 0 similar; with the exceedance of each pixel
    let mut class = [0i8; 16];
    let mut excess = [0u32; 16];
    for (k, &(dx, dy)) in CIRCLE.iter().enumerate() {
        let p = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32;
        if p > c + t {
            class[k] = 1;
            excess[k] = (p - c - t) as u32;
        } else if p < c - t {
            class[k] = -1;
            excess[k] = (c - t - p) as u32;
        }
    }
    for sign in [1i8, -1] {
        if class.iter().all(|&c| c == sign) {
            return Some(excess.iter().sum());
        }
        // walk twice around the circle so runs crossing index 0 are seen whole
        let mut run = 0usize;
        let mut sum = 0u32;
        let mut best: Option<u32> = None;
        for i in 0..32 {
            let k = i % 16;
            if class[k] == sign {
                run += 1;
                sum += excess[k];
                if run >= ARC_LENGTH && run <= 16 {
                    best = Some(best.map_or(sum, |b: u32| b.max(sum)));
                }
            } else {
                run = 0;
                sum = 0;
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// FAST-9 corners at least `border` pixels (and never less than 3) from every
/// image edge, after 3x3 non-maximum suppression.
///
/// A candidate is suppressed when a neighbour scores higher, or scores equal
/// and precedes it in raster order.
pub fn fast_detect(img: &GrayImage, threshold: u8, border: usize) -> Vec<Corner> {
    let border = border.max(3);
    let (w, h) = img.dimensions();
    if w < 2 * border + 1 || h < 2 * border + 1 {
        return Vec::new();
    }
    let mut scores = vec![0u32; w * h];
    let mut candidates = Vec::new();
    for y in border..h - border {
        for x in border..w - border {
            if let Some(s) = segment_score(img, x, y, threshold) {
                scores[y * w + x] = s;
                candidates.push((x, y));
            }
        }
    }
    candidates
        .into_iter()
        .filter_map(|(x, y)| {
            let s = scores[y * w + x];
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    if (nx, ny) == (x, y) {
                        continue;
                    }
                    let ns = scores[ny * w + nx];
                    let earlier = (ny, nx) < (y, x);
                    if ns > s || (ns == s && earlier) {
                        return None;
                    }
                }
            }
            Some(Corner { x, y, score: s })
        })
        .collect()
}

/// Half-widths of the integer disc `dx² + dy² <= r²`, indexed by `dy + r`.
pub(crate) fn disc_half_widths(radius: u32) -> Vec<i64> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let rem = r * r - dy * dy;
            let mut dx = (rem as f64).sqrt() as i64;
            while dx * dx > rem {
                dx -= 1;
            }
            while (dx + 1) * (dx + 1) <= rem {
                dx += 1;
            }
            dx
        })
        .collect()
}

/// Intensity moments `m_pq = Σ xᵖ yᵠ I(x, y)` over the disc of `radius`
/// around `(cx, cy)`, with offsets relative to the centre.
pub fn compute_moments(img: &GrayImage, cx: i64, cy: i64, radius: u32) -> Result<OrientationMoments> {
    let r = radius as i64;
    let (w, h) = (img.width() as i64, img.height() as i64);
    if cx - r < 0 || cy - r < 0 || cx + r >= w || cy + r >= h {
        return Err(Error::DiscOutOfBounds { cx, cy, radius });
    }
    let mut m = OrientationMoments::default();
    for (row, half) in disc_half_widths(radius).into_iter().enumerate() {
        let dy = row as i64 - r;
        let y = (cy + dy) as usize;
        let mut row_sum = 0i64;
        let mut row_m10 = 0i64;
        for dx in -half..=half {
            let v = img.get((cx + dx) as usize, y) as i64;
            row_sum += v;
            row_m10 += dx * v;
        }
        m.m00 += row_sum;
        m.m10 += row_m10;
        m.m01 += dy * row_sum;
    }
    Ok(m)
}

/// Angle of the vector from the corner to the intensity centroid,
/// `atan2(m01, m10)` mapped into `[0, 2π)`.
pub fn orientation(m: &OrientationMoments) -> Orientation {
    if m.m10 == 0 && m.m01 == 0 {
        return Orientation {
            angle: 0.0,
            degenerate: true,
        };
    }
    Orientation {
        angle: normalize_angle((m.m01 as f64).atan2(m.m10 as f64)),
        degenerate: false,
    }
}

pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % TAU;
    if a < 0.0 {
        a += TAU;
    }
    if a >= TAU {
        a = 0.0;
    }
    a
}

/// Ranking used for the top-N cut: response descending, then octave, y, x ascending.
pub fn rank_order(a: &Keypoint, b: &Keypoint) -> Ordering {
    b.response
        .total_cmp(&a.response)
        .then(a.octave.cmp(&b.octave))
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
}

/// Oriented FAST keypoints over the scale pyramid, strongest first, at most
/// `cfg.max_features` of them.
pub fn detect(img: &GrayImage, cfg: &PipelineConfig) -> Result<Vec<Keypoint>> {
    let pyramid = Pyramid::build(img, cfg.pyramid_levels, cfg.scale_factor)?;
    Ok(detect_in_pyramid(&pyramid, cfg))
}

pub fn detect_in_pyramid(pyramid: &Pyramid, cfg: &PipelineConfig) -> Vec<Keypoint> {
    let border = cfg.patch_radius as usize;
    let per_level: Vec<Vec<(Keypoint, usize, usize)>> = pyramid
        .levels()
        .par_iter()
        .enumerate()
        .map(|(octave, level)| {
            let scale = pyramid.scale(octave);
            fast_detect(level, cfg.fast_threshold, border)
                .into_iter()
                .map(|c| {
                    let kp = Keypoint {
                        x: c.x as f64 * scale,
                        y: c.y as f64 * scale,
                        response: c.score as f64,
                        angle: 0.0,
                        octave,
                    };
                    (kp, c.x, c.y)
                })
                .collect()
        })
        .collect();
    let mut all: Vec<_> = per_level.into_iter().flatten().collect();
    all.sort_by(|a, b| rank_order(&a.0, &b.0));
    all.truncate(cfg.max_features);
    all.into_iter()
        .map(|(mut kp, lx, ly)| {
            // border >= patch_radius, so the disc always fits
            let m = compute_moments(
                pyramid.level(kp.octave),
                lx as i64,
                ly as i64,
                cfg.patch_radius,
            )
            .expect("detection border keeps the moment disc inside the level");
            kp.angle = orientation(&m).angle;
            kp
        })
        .collect()
}
