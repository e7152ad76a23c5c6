//! Retina-pattern binary descriptors.
//!
//! 43 receptive fields on a centre point plus seven concentric rings, compared
//! pairwise into a 512-bit code. Pairs are ordered coarse to fine, so the
//! first 16 bytes only involve the three outermost rings and serve as a cheap
//! rejection stage when matching.

use std::cmp::Reverse;
use std::fmt;

use crate::detector::Keypoint;
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const NUM_POINTS: usize = 43;
pub const NUM_RINGS: usize = 7;
pub const POINTS_PER_RING: usize = 6;
pub const NUM_PAIRS: usize = 512;
pub const DESCRIPTOR_BYTES: usize = NUM_PAIRS / 8;
/// Bytes compared in the coarse cascade stage.
pub const COARSE_BYTES: usize = 16;
pub const INNER_RADIUS: f64 = 1.5;
pub const OUTER_RADIUS: f64 = 22.0;
pub const CENTER_SIGMA: f64 = 1.0;

/// One receptive field at unit scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceptiveField {
    pub dx: f64,
    pub dy: f64,
    pub sigma: f64,
    /// 0 for the centre, 1 (innermost) to 7 (outermost) otherwise.
    pub ring: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPattern {
    pub points: Vec<ReceptiveField>,
    pub pairs: Vec<(usize, usize)>,
}

impl SamplingPattern {
    /// Largest extent of any receptive field at unit scale.
    pub fn extent(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.dx.hypot(p.dy) + p.sigma)
            .fold(0.0, f64::max)
    }
}

pub fn ring_radius(ring: usize) -> f64 {
    let ratio = (OUTER_RADIUS / INNER_RADIUS).powf(1.0 / (NUM_RINGS - 1) as f64);
    INNER_RADIUS * ratio.powi(ring as i32 - 1)
}

/// Deterministic pattern: rings with geometric radii, alternate rings offset
/// by half the angular step, and pairs ranked coarse first.
pub fn build_pattern() -> SamplingPattern {
    let mut points = vec![ReceptiveField {
        dx: 0.0,
        dy: 0.0,
        sigma: CENTER_SIGMA,
        ring: 0,
    }];
    for ring in 1..=NUM_RINGS {
        let radius = ring_radius(ring);
        let gap = if ring < NUM_RINGS {
            ring_radius(ring + 1) - radius
        } else {
            radius - ring_radius(ring - 1)
        };
        let step = std::f64::consts::TAU / POINTS_PER_RING as f64;
        let offset = if ring % 2 == 0 { step / 2.0 } else { 0.0 };
        for k in 0..POINTS_PER_RING {
            let a = offset + k as f64 * step;
            points.push(ReceptiveField {
                dx: radius * a.cos(),
                dy: radius * a.sin(),
                sigma: 0.5 * gap,
                ring,
            });
        }
    }

    let mut candidates = Vec::with_capacity(NUM_POINTS * (NUM_POINTS - 1) / 2);
    for i in 0..NUM_POINTS {
        for j in i + 1..NUM_POINTS {
            candidates.push((i, j));
        }
    }
    // ring sum stands in for the mean ring index; more balanced pairs first
    candidates.sort_by_key(|&(i, j)| {
        let (ri, rj) = (points[i].ring, points[j].ring);
        (Reverse(ri + rj), Reverse(ri.min(rj)), i, j)
    });
    candidates.truncate(NUM_PAIRS);
    SamplingPattern {
        points,
        pairs: candidates,
    }
}

/// 512-bit descriptor. Bit `k` lives in byte `k / 8` at position `k % 8`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryDescriptor(pub [u8; DESCRIPTOR_BYTES]);

impl fmt::Debug for BinaryDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryDescriptor(")?;
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

impl BinaryDescriptor {
    pub const ZEROS: BinaryDescriptor = BinaryDescriptor([0; DESCRIPTOR_BYTES]);
    pub const ONES: BinaryDescriptor = BinaryDescriptor([0xff; DESCRIPTOR_BYTES]);

    pub fn bit(&self, k: usize) -> bool {
        self.0[k / 8] >> (k % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, k: usize, value: bool) {
        if value {
            self.0[k / 8] |= 1 << (k % 8);
        } else {
            self.0[k / 8] &= !(1 << (k % 8));
        }
    }
}

fn popcount_xor(a: &[u8], b: &[u8]) -> u32 {
    a.chunks_exact(8)
        .zip(b.chunks_exact(8))
        .map(|(x, y)| {
            let x = u64::from_le_bytes(x.try_into().unwrap());
            let y = u64::from_le_bytes(y.try_into().unwrap());
            (x ^ y).count_ones()
        })
        .sum()
}

pub fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> u32 {
    popcount_xor(&a.0, &b.0)
}

/// Hamming distance over the first 16 bytes only.
pub fn coarse_hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> u32 {
    popcount_xor(&a.0[..COARSE_BYTES], &b.0[..COARSE_BYTES])
}

/// Half-widths of the disc `dx² + dy² <= radius²` for `dy` in `-n..=n`,
/// `n = floor(radius)`.
fn disc_rows(radius: f64) -> Vec<i64> {
    let n = radius.floor() as i64;
    let r2 = radius * radius;
    (-n..=n)
        .map(|dy| (r2 - (dy * dy) as f64).max(0.0).sqrt().floor() as i64)
        .collect()
}

fn disc_mean(img: &GrayImage, cx: i64, cy: i64, rows: &[i64]) -> f64 {
    let n = (rows.len() / 2) as i64;
    let mut sum = 0u64;
    let mut count = 0u64;
    for (k, &half) in rows.iter().enumerate() {
        let y = (cy + k as i64 - n) as usize;
        let start = y * img.width() + (cx - half) as usize;
        let row = &img.data()[start..=start + 2 * half as usize];
        sum += row.iter().map(|&v| v as u64).sum::<u64>();
        count += row.len() as u64;
    }
    sum as f64 / count as f64
}

/// Descriptor of `kp`: the pattern is rotated by the keypoint angle and scaled
/// by `scale_factor^octave`, each field is the mean over an integer disc, and
/// bit `k` is set iff field `pairs[k].0` is strictly brighter than `pairs[k].1`.
pub fn compute(
    img: &GrayImage,
    kp: &Keypoint,
    pattern: &SamplingPattern,
    scale_factor: f64,
) -> Result<BinaryDescriptor> {
    let scale = scale_factor.powi(kp.octave as i32);
    let (s, c) = kp.angle.sin_cos();
    let (w, h) = (img.width() as i64, img.height() as i64);

    // fields on one ring share a radius, so cache the disc per ring
    let mut rows_by_ring: Vec<Option<Vec<i64>>> = vec![None; NUM_RINGS + 1];
    let mut values = [0.0f64; NUM_POINTS];
    for (idx, field) in pattern.points.iter().enumerate() {
        let px = kp.x + scale * (c * field.dx - s * field.dy);
        let py = kp.y + scale * (s * field.dx + c * field.dy);
        let cx = px.round() as i64;
        let cy = py.round() as i64;
        let rows = rows_by_ring[field.ring].get_or_insert_with(|| disc_rows(field.sigma * scale));
        let n = (rows.len() / 2) as i64;
        if cx - n < 0 || cy - n < 0 || cx + n >= w || cy + n >= h {
            return Err(Error::DescriptorOutOfBounds);
        }
        values[idx] = disc_mean(img, cx, cy, rows);
    }

    let mut desc = BinaryDescriptor::ZEROS;
    for (k, &(i, j)) in pattern.pairs.iter().enumerate() {
        if values[i] > values[j] {
            desc.set_bit(k, true);
        }
    }
    Ok(desc)
}

/// Computes descriptors for every keypoint whose pattern fits the image and
/// returns the surviving keypoints with their descriptors, index-aligned.
pub fn compute_all(
    img: &GrayImage,
    keypoints: &[Keypoint],
    pattern: &SamplingPattern,
    scale_factor: f64,
) -> (Vec<Keypoint>, Vec<BinaryDescriptor>) {
    keypoints
        .iter()
        .filter_map(|kp| {
            compute(img, kp, pattern, scale_factor)
                .ok()
                .map(|d| (*kp, d))
        })
        .unzip()
}

/// Best candidate for `query` after the coarse rejection stage.
///
/// Candidates whose first 16 bytes differ in more than `coarse_max` bits are
/// skipped; among the rest the smallest full distance wins if it is at most
/// `full_max`, ties going to the lowest index. Returns `(index, distance)`.
pub fn cascade_match<'a, I>(
    query: &BinaryDescriptor,
    candidates: I,
    coarse_max: u32,
    full_max: u32,
) -> Option<(usize, u32)>
where
    I: IntoIterator<Item = (usize, &'a BinaryDescriptor)>,
{
    let mut best: Option<(usize, u32)> = None;
    for (idx, cand) in candidates {
        if coarse_hamming(query, cand) > coarse_max {
            continue;
        }
        let d = hamming(query, cand);
        if d > full_max {
            continue;
        }
        best = match best {
            Some((bi, bd)) if bd < d || (bd == d && bi < idx) => Some((bi, bd)),
            _ => Some((idx, d)),
        };
    }
    best
}
