//! Brute-force reference implementations and scenario builders shared by the
//! integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod criteria;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_vo::descriptor::BinaryDescriptor;
use stereo_vo::detector::{Keypoint, CIRCLE};
use stereo_vo::image::{GrayImage, Pyramid};
use stereo_vo::matching::{StereoFeatures, StereoMatch};
use stereo_vo::PipelineConfig;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kp(x: f64, y: f64) -> Keypoint {
    Keypoint {
        x,
        y,
        response: 1.0,
        angle: 0.0,
        octave: 0,
    }
}

pub fn random_descriptor(rng: &mut impl Rng) -> BinaryDescriptor {
    let mut d = [0u8; 64];
    rng.fill(&mut d[..]);
    BinaryDescriptor(d)
}

/// Flips `n` distinct random bits.
pub fn perturb(d: &BinaryDescriptor, n: usize, rng: &mut impl Rng) -> BinaryDescriptor {
    let mut out = *d;
    for bit in rand::seq::index::sample(rng, 512, n) {
        out.0[bit / 8] ^= 1 << (bit % 8);
    }
    out
}

pub fn random_image(w: usize, h: usize, rng: &mut impl Rng) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen())
}

// ---- segment test -------------------------------------------------------

/// Score by enumerating every arc `(start, len)` with `len >= 9` whose pixels
/// all pass, keeping the longest one and summing its exceedances.
pub fn oracle_segment_score(img: &GrayImage, x: usize, y: usize, t: u8) -> Option<u32> {
    let c = img.get(x, y) as i32;
    let t = t as i32;
    let ring: Vec<i32> = CIRCLE
        .iter()
        .map(|&(dx, dy)| img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i32)
        .collect();
    let mut best: Option<(usize, u32)> = None;
    for brighter in [true, false] {
        let pass = |p: i32| if brighter { p > c + t } else { p < c - t };
        let excess = |p: i32| if brighter { (p - c - t) as u32 } else { (c - t - p) as u32 };
        for start in 0..16 {
            for len in 9..=16 {
                let idx: Vec<usize> = (0..len).map(|k| (start + k) % 16).collect();
                if idx.iter().all(|&i| pass(ring[i])) {
                    let s: u32 = idx.iter().map(|&i| excess(ring[i])).sum();
                    let better = match best {
                        None => true,
                        Some((bl, bs)) => len > bl || (len == bl && s > bs),
                    };
                    if better {
                        best = Some((len, s));
                    }
                }
            }
        }
    }
    best.map(|(_, s)| s)
}

/// Segment test everywhere in the valid area followed by a 3x3 suppression
/// that keeps a corner only if every neighbour scores lower, or equal and
/// later in raster order. Returns `(x, y, score)` in raster order.
pub fn oracle_fast(img: &GrayImage, t: u8, border: usize) -> Vec<(usize, usize, u32)> {
    let border = border.max(3);
    let (w, h) = img.dimensions();
    let inside = |x: i64, y: i64| {
        x >= border as i64 && y >= border as i64 && x < (w - border) as i64 && y < (h - border) as i64
    };
    let score = |x: i64, y: i64| -> u32 {
        if inside(x, y) {
            oracle_segment_score(img, x as usize, y as usize, t).unwrap_or(0)
        } else {
            0
        }
    };
    let mut out = Vec::new();
    if w < 2 * border + 1 || h < 2 * border + 1 {
        return out;
    }
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            if !inside(x, y) {
                continue;
            }
            let Some(s) = oracle_segment_score(img, x as usize, y as usize, t) else {
                continue;
            };
            let mut keep = true;
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = score(x + dx, y + dy);
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if n > s || (n == s && n > 0 && earlier) {
                        keep = false;
                    }
                }
            }
            if keep {
                out.push((x as usize, y as usize, s));
            }
        }
    }
    out
}

/// Disc moments by testing every offset of the bounding square.
pub fn oracle_moments(img: &GrayImage, cx: i64, cy: i64, r: i64) -> (i64, i64, i64) {
    let (mut m00, mut m10, mut m01) = (0, 0, 0);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                let v = img.get((cx + dx) as usize, (cy + dy) as usize) as i64;
                m00 += v;
                m10 += dx * v;
                m01 += dy * v;
            }
        }
    }
    (m00, m10, m01)
}

/// Full detector from the oracle pieces: per-level corners, level-0
/// coordinates, ranking, top-N cut and centroid orientation.
pub fn oracle_detect(img: &GrayImage, cfg: &PipelineConfig) -> Vec<Keypoint> {
    let pyr = Pyramid::build(img, cfg.pyramid_levels, cfg.scale_factor).unwrap();
    let mut all = Vec::new();
    for (octave, level) in pyr.levels().iter().enumerate() {
        let s = cfg.scale_factor.powi(octave as i32);
        for (x, y, score) in oracle_fast(level, cfg.fast_threshold, cfg.patch_radius as usize) {
            let (_, m10, m01) = oracle_moments(level, x as i64, y as i64, cfg.patch_radius as i64);
            let angle = if m10 == 0 && m01 == 0 {
                0.0
            } else {
                let a = (m01 as f64).atan2(m10 as f64).rem_euclid(std::f64::consts::TAU);
                if a >= std::f64::consts::TAU {
                    0.0
                } else {
                    a
                }
            };
            all.push(Keypoint {
                x: x as f64 * s,
                y: y as f64 * s,
                response: score as f64,
                angle,
                octave,
            });
        }
    }
    all.sort_by(|a, b| {
        b.response
            .partial_cmp(&a.response)
            .unwrap()
            .then(a.octave.cmp(&b.octave))
            .then(a.y.partial_cmp(&b.y).unwrap())
            .then(a.x.partial_cmp(&b.x).unwrap())
    });
    all.truncate(cfg.max_features);
    all
}

// ---- descriptors and matching -------------------------------------------

pub fn oracle_hamming(a: &BinaryDescriptor, b: &BinaryDescriptor, bytes: usize) -> u32 {
    let mut n = 0;
    for k in 0..bytes * 8 {
        let ba = a.0[k / 8] >> (k % 8) & 1;
        let bb = b.0[k / 8] >> (k % 8) & 1;
        n += u32::from(ba != bb);
    }
    n
}

/// Exhaustive two-stage match: every candidate is scored on both stages, then
/// the admissible one with the smallest (distance, index) wins.
pub fn oracle_cascade(
    query: &BinaryDescriptor,
    candidates: &[(usize, BinaryDescriptor)],
    coarse_max: u32,
    full_max: u32,
) -> Option<(usize, u32)> {
    candidates
        .iter()
        .map(|(i, d)| (*i, oracle_hamming(query, d, 16), oracle_hamming(query, d, 64)))
        .filter(|&(_, c, f)| c <= coarse_max && f <= full_max)
        .map(|(i, _, f)| (f, i))
        .min()
        .map(|(f, i)| (i, f))
}

pub fn oracle_stereo(
    left: &[BinaryDescriptor],
    right: &[BinaryDescriptor],
    cfg: &PipelineConfig,
) -> Vec<StereoMatch> {
    let (c, f) = (cfg.coarse_hamming_max, cfg.full_hamming_max);
    let l: Vec<_> = left.iter().copied().enumerate().collect();
    let r: Vec<_> = right.iter().copied().enumerate().collect();
    let mut out = Vec::new();
    for (i, d) in left.iter().enumerate() {
        let Some((j, dist)) = oracle_cascade(d, &r, c, f) else { continue };
        if oracle_cascade(&right[j], &l, c, f).map(|(k, _)| k) == Some(i) {
            out.push(StereoMatch {
                left_idx: i,
                right_idx: j,
                distance: dist,
            });
        }
    }
    out
}

fn window(keypoints: &[Keypoint], descs: &[BinaryDescriptor], c: &Keypoint, half: f64) -> Vec<(usize, BinaryDescriptor)> {
    (0..keypoints.len())
        .filter(|&i| (keypoints[i].x - c.x).abs() <= half && (keypoints[i].y - c.y).abs() <= half)
        .map(|i| (i, descs[i]))
        .collect()
}

/// The four steps, written as plain loops. Returns `(prev_match, curr_match)`.
pub fn oracle_circular(prev: &StereoFeatures, curr: &StereoFeatures, cfg: &PipelineConfig) -> Vec<(usize, usize)> {
    let (c, f, half) = (cfg.coarse_hamming_max, cfg.full_hamming_max, cfg.circular_window_px);
    let mut out = Vec::new();
    for (ck, m) in curr.stereo.iter().enumerate() {
        let kl = &curr.left.keypoints[m.left_idx];
        let cands = window(prev.left.keypoints, prev.left.descriptors, kl, half);
        let Some((pl, _)) = oracle_cascade(&curr.left.descriptors[m.left_idx], &cands, c, f) else {
            continue;
        };
        let Some(pk) = prev.stereo.iter().position(|s| s.left_idx == pl) else {
            continue;
        };
        let pr = prev.stereo[pk].right_idx;
        let kr = &prev.right.keypoints[pr];
        let cands = window(curr.right.keypoints, curr.right.descriptors, kr, half);
        let Some((cr, _)) = oracle_cascade(&prev.right.descriptors[pr], &cands, c, f) else {
            continue;
        };
        if cr == m.right_idx {
            out.push((pk, ck));
        }
    }
    out
}

/// Two frames of planted tracks: every track has a stereo pair in both
/// frames, drifts by up to `drift` px between frames and its descriptors pick
/// up a few flipped bits. Returns the frames as owned features plus the
/// indices of tracks whose previous-left descriptor was replaced by noise.
pub struct TwoFrames {
    pub prev_l: (Vec<Keypoint>, Vec<BinaryDescriptor>),
    pub prev_r: (Vec<Keypoint>, Vec<BinaryDescriptor>),
    pub curr_l: (Vec<Keypoint>, Vec<BinaryDescriptor>),
    pub curr_r: (Vec<Keypoint>, Vec<BinaryDescriptor>),
    pub prev_stereo: Vec<StereoMatch>,
    pub curr_stereo: Vec<StereoMatch>,
    pub corrupted: Vec<usize>,
}

pub fn planted_tracks(n: usize, drift: f64, corrupt: usize, distractors: usize, seed: u64) -> TwoFrames {
    let mut rng = rng(seed);
    let mut t = TwoFrames {
        prev_l: (vec![], vec![]),
        prev_r: (vec![], vec![]),
        curr_l: (vec![], vec![]),
        curr_r: (vec![], vec![]),
        prev_stereo: vec![],
        curr_stereo: vec![],
        corrupted: vec![],
    };
    let corrupted: Vec<usize> = rand::seq::index::sample(&mut rng, n, corrupt).into_vec();
    for i in 0..n {
        let (x, y) = (rng.gen_range(150.0..1100.0), rng.gen_range(20.0..350.0));
        let disp = rng.gen_range(2.0..90.0);
        let (dx, dy) = (rng.gen_range(-drift..drift), rng.gen_range(-drift..drift));
        let base_l = random_descriptor(&mut rng);
        let base_r = perturb(&base_l, 10, &mut rng);
        let mut pl = perturb(&base_l, 6, &mut rng);
        if corrupted.contains(&i) {
            pl = random_descriptor(&mut rng);
        }
        t.prev_l.0.push(kp(x, y));
        t.prev_l.1.push(pl);
        t.prev_r.0.push(kp(x - disp, y));
        t.prev_r.1.push(perturb(&base_r, 6, &mut rng));
        t.curr_l.0.push(kp(x + dx, y + dy));
        t.curr_l.1.push(perturb(&base_l, 6, &mut rng));
        t.curr_r.0.push(kp(x + dx - disp * 1.05, y + dy));
        t.curr_r.1.push(perturb(&base_r, 6, &mut rng));
        for s in [&mut t.prev_stereo, &mut t.curr_stereo] {
            s.push(StereoMatch {
                left_idx: i,
                right_idx: i,
                distance: 0,
            });
        }
    }
    // unmatched clutter near real tracks, some close to existing descriptors
    for set in [&mut t.prev_l, &mut t.prev_r, &mut t.curr_l, &mut t.curr_r] {
        for _ in 0..distractors {
            let src = rng.gen_range(0..n);
            let (x, y) = (set.0[src].x + rng.gen_range(-60.0..60.0), set.0[src].y + rng.gen_range(-60.0..60.0));
            let d = if rng.gen_bool(0.5) {
                perturb(&set.1[src], 40, &mut rng)
            } else {
                random_descriptor(&mut rng)
            };
            set.0.push(kp(x, y));
            set.1.push(d);
        }
    }
    t.corrupted = corrupted;
    t
}
