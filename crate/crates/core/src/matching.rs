//! Stereo matching, the vertical/horizontal match constraints and circular
//! matching across two stereo frames.

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::descriptor::{cascade_match, BinaryDescriptor};
use crate::detector::Keypoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StereoMatch {
    pub left_idx: usize,
    pub right_idx: usize,
    /// Hamming distance in bits.
    pub distance: u32,
}

/// Keypoints of one image with their index-aligned descriptors.
#[derive(Clone, Copy, Debug)]
pub struct Features<'a> {
    pub keypoints: &'a [Keypoint],
    pub descriptors: &'a [BinaryDescriptor],
}

impl<'a> Features<'a> {
    pub fn new(keypoints: &'a [Keypoint], descriptors: &'a [BinaryDescriptor]) -> Self {
        assert_eq!(
            keypoints.len(),
            descriptors.len(),
            "keypoints and descriptors must be index-aligned"
        );
        Features {
            keypoints,
            descriptors,
        }
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// One image pair's features plus its filtered stereo matches.
#[derive(Clone, Copy, Debug)]
pub struct StereoFeatures<'a> {
    pub left: Features<'a>,
    pub right: Features<'a>,
    pub stereo: &'a [StereoMatch],
}

/// Feature positions closing the loop prev-left, prev-right, curr-right, curr-left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularMatch {
    pub p_l_prev: [f64; 2],
    pub p_r_prev: [f64; 2],
    pub p_l_curr: [f64; 2],
    pub p_r_curr: [f64; 2],
    /// Index of the closing stereo match in the previous frame.
    pub prev_match: usize,
    /// Index of the stereo match in the current frame the loop started from.
    pub curr_match: usize,
}

fn all<'a>(desc: &'a [BinaryDescriptor]) -> impl Iterator<Item = (usize, &'a BinaryDescriptor)> {
    desc.iter().enumerate()
}

/// Mutual-best cascade matches between the left and right images.
pub fn match_stereo(left: Features<'_>, right: Features<'_>, cfg: &PipelineConfig) -> Vec<StereoMatch> {
    let (coarse, full) = (cfg.coarse_hamming_max, cfg.full_hamming_max);
    let backward: Vec<Option<usize>> = right
        .descriptors
        .par_iter()
        .map(|d| cascade_match(d, all(left.descriptors), coarse, full).map(|(i, _)| i))
        .collect();
    left.descriptors
        .par_iter()
        .enumerate()
        .filter_map(|(i, d)| {
            let (j, distance) = cascade_match(d, all(right.descriptors), coarse, full)?;
            (backward[j] == Some(i)).then_some(StereoMatch {
                left_idx: i,
                right_idx: j,
                distance,
            })
        })
        .collect()
}

/// Keeps matches whose row difference is at most `max_dy`.
pub fn vertical_filter(
    matches: &[StereoMatch],
    left: &[Keypoint],
    right: &[Keypoint],
    max_dy: f64,
) -> Vec<StereoMatch> {
    matches
        .iter()
        .filter(|m| (left[m.left_idx].y - right[m.right_idx].y).abs() <= max_dy)
        .copied()
        .collect()
}

/// Keeps matches with disparity `x_left - x_right` in `[min_disp, max_dx]`.
pub fn horizontal_filter(
    matches: &[StereoMatch],
    left: &[Keypoint],
    right: &[Keypoint],
    max_dx: f64,
    min_disp: f64,
) -> Vec<StereoMatch> {
    matches
        .iter()
        .filter(|m| {
            let d = left[m.left_idx].x - right[m.right_idx].x;
            d >= min_disp && d <= max_dx
        })
        .copied()
        .collect()
}

fn in_window(kp: &Keypoint, cx: f64, cy: f64, half: f64) -> bool {
    (kp.x - cx).abs() <= half && (kp.y - cy).abs() <= half
}

fn windowed<'a>(
    feats: Features<'a>,
    center: &'a Keypoint,
    half: f64,
) -> impl Iterator<Item = (usize, &'a BinaryDescriptor)> + 'a {
    feats
        .keypoints
        .iter()
        .zip(feats.descriptors)
        .enumerate()
        .filter(move |(_, (kp, _))| in_window(kp, center.x, center.y, half))
        .map(|(i, (_, d))| (i, d))
}

fn pos(kp: &Keypoint) -> [f64; 2] {
    [kp.x, kp.y]
}

/// Loop closure test for every current stereo match, in current-match order.
///
/// The current left descriptor is matched into the previous left image inside
/// a square window; that feature's previous stereo partner is matched into the
/// current right image inside a window around it; the loop closes when this
/// lands on the current match's own right feature.
pub fn circular_match(
    prev: &StereoFeatures<'_>,
    curr: &StereoFeatures<'_>,
    cfg: &PipelineConfig,
) -> Vec<CircularMatch> {
    let (coarse, full) = (cfg.coarse_hamming_max, cfg.full_hamming_max);
    let half = cfg.circular_window_px;

    let mut prev_partner = vec![None; prev.left.len()];
    for (k, m) in prev.stereo.iter().enumerate() {
        prev_partner[m.left_idx] = Some(k);
    }

    curr.stereo
        .par_iter()
        .enumerate()
        .filter_map(|(curr_k, m)| {
            let kl = &curr.left.keypoints[m.left_idx];
            let dl = &curr.left.descriptors[m.left_idx];
            let (prev_l, _) = cascade_match(dl, windowed(prev.left, kl, half), coarse, full)?;
            let prev_k = prev_partner[prev_l]?;
            let prev_r = prev.stereo[prev_k].right_idx;
            let kr_prev = &prev.right.keypoints[prev_r];
            let dr_prev = &prev.right.descriptors[prev_r];
            let (curr_r, _) = cascade_match(dr_prev, windowed(curr.right, kr_prev, half), coarse, full)?;
            (curr_r == m.right_idx).then(|| CircularMatch {
                p_l_prev: pos(&prev.left.keypoints[prev_l]),
                p_r_prev: pos(kr_prev),
                p_l_curr: pos(kl),
                p_r_curr: pos(&curr.right.keypoints[m.right_idx]),
                prev_match: prev_k,
                curr_match: curr_k,
            })
        })
        .collect()
}
