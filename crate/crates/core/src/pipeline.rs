//! The frame loop: extract stereo features, close circular matches against
//! the previous frame, estimate motion and chain poses.

use crate::config::{PipelineConfig, StereoCalib};
use crate::descriptor::{self, BinaryDescriptor, SamplingPattern};
use crate::detector::{self, Keypoint};
use crate::egomotion::{ransac_estimate, Observation};
use crate::error::{Error, Result};
use crate::geometry::triangulate;
use crate::image::GrayImage;
use crate::matching::{
    circular_match, horizontal_filter, match_stereo, vertical_filter, CircularMatch, Features,
    StereoFeatures, StereoMatch,
};
use crate::pose::{compose, MotionParams, Pose};

/// Everything extracted from one stereo pair.
#[derive(Clone, Debug, Default)]
pub struct FrameFeatures {
    pub left_kps: Vec<Keypoint>,
    pub right_kps: Vec<Keypoint>,
    pub left_desc: Vec<BinaryDescriptor>,
    pub right_desc: Vec<BinaryDescriptor>,
    /// Stereo matches that passed both geometric constraints.
    pub stereo: Vec<StereoMatch>,
}

impl FrameFeatures {
    pub fn as_stereo(&self) -> StereoFeatures<'_> {
        StereoFeatures {
            left: Features::new(&self.left_kps, &self.left_desc),
            right: Features::new(&self.right_kps, &self.right_desc),
            stereo: &self.stereo,
        }
    }
}

/// Per-frame bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameStats {
    pub frame: usize,
    pub left_features: usize,
    pub right_features: usize,
    pub stereo_matches: usize,
    pub circular_matches: usize,
    pub inliers: usize,
    /// `inliers / circular_matches * 100`, zero when there were no circular matches.
    pub inlier_pct: f64,
    /// Motion was not estimated for this frame and the previous one was reused.
    pub flagged: bool,
    pub motion: MotionParams,
}

/// Reusable extractor: holds the sampling pattern and the configuration.
#[derive(Clone, Debug)]
pub struct Extractor {
    cfg: PipelineConfig,
    pattern: SamplingPattern,
}

impl Extractor {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Extractor {
            cfg,
            pattern: descriptor::build_pattern(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    fn describe(&self, img: &GrayImage) -> Result<(Vec<Keypoint>, Vec<BinaryDescriptor>)> {
        let kps = detector::detect(img, &self.cfg)?;
        Ok(descriptor::compute_all(img, &kps, &self.pattern, self.cfg.scale_factor))
    }

    /// Detect, describe, stereo-match, then apply the vertical and horizontal
    /// constraints.
    pub fn extract(&self, left: &GrayImage, right: &GrayImage) -> Result<FrameFeatures> {
        if left.dimensions() != right.dimensions() {
            return Err(Error::ImageSizeMismatch {
                left: left.dimensions(),
                right: right.dimensions(),
            });
        }
        let (l, r) = rayon::join(|| self.describe(left), || self.describe(right));
        let (left_kps, left_desc) = l?;
        let (right_kps, right_desc) = r?;
        let cfg = &self.cfg;
        let matches = match_stereo(
            Features::new(&left_kps, &left_desc),
            Features::new(&right_kps, &right_desc),
            cfg,
        );
        let matches = vertical_filter(&matches, &left_kps, &right_kps, cfg.vertical_max_px);
        let stereo = horizontal_filter(
            &matches,
            &left_kps,
            &right_kps,
            cfg.horizontal_max_px,
            cfg.min_disparity_px,
        );
        Ok(FrameFeatures {
            left_kps,
            right_kps,
            left_desc,
            right_desc,
            stereo,
        })
    }
}

pub fn extract(left: &GrayImage, right: &GrayImage, cfg: &PipelineConfig) -> Result<FrameFeatures> {
    Extractor::new(cfg.clone())?.extract(left, right)
}

/// Observations for ego-motion: previous pair triangulated, current pair observed.
pub fn build_observations(
    circular: &[CircularMatch],
    calib: &StereoCalib,
    min_disparity: f64,
) -> Vec<Observation> {
    circular
        .iter()
        .filter_map(|c| {
            let landmark = triangulate(c.p_l_prev, c.p_r_prev, calib, min_disparity).ok()?;
            Some(Observation {
                landmark,
                x_l: c.p_l_curr,
                x_r: c.p_r_curr,
            })
        })
        .collect()
}

/// Odometry state carried between frames.
#[derive(Clone, Debug)]
pub struct VoState {
    pub prev: Option<FrameFeatures>,
    /// Camera-to-world pose of the latest frame.
    pub world_pose: Pose,
    /// Number of frames processed so far.
    pub frame_index: usize,
    pub last_motion: MotionParams,
    pub stats: Vec<FrameStats>,
}

impl Default for VoState {
    fn default() -> Self {
        VoState {
            prev: None,
            world_pose: Pose::identity(),
            frame_index: 0,
            last_motion: MotionParams::ZERO,
            stats: Vec::new(),
        }
    }
}

/// Stateful odometry front end.
#[derive(Clone, Debug)]
pub struct Odometry {
    extractor: Extractor,
    calib: StereoCalib,
    state: VoState,
}

impl Odometry {
    pub fn new(calib: StereoCalib, cfg: PipelineConfig) -> Result<Self> {
        calib.validate()?;
        Ok(Odometry {
            extractor: Extractor::new(cfg)?,
            calib,
            state: VoState::default(),
        })
    }

    pub fn state(&self) -> &VoState {
        &self.state
    }

    pub fn into_state(self) -> VoState {
        self.state
    }

    pub fn pose(&self) -> Pose {
        self.state.world_pose
    }

    /// Processes one stereo pair and returns the new camera-to-world pose.
    pub fn step(&mut self, left: &GrayImage, right: &GrayImage) -> Result<Pose> {
        let curr = self.extractor.extract(left, right)?;
        let cfg = self.extractor.config();
        let frame = self.state.frame_index;
        let mut stats = FrameStats {
            frame,
            left_features: curr.left_kps.len(),
            right_features: curr.right_kps.len(),
            stereo_matches: curr.stereo.len(),
            ..FrameStats::default()
        };

        if let Some(prev) = self.state.prev.take() {
            let circular = circular_match(&prev.as_stereo(), &curr.as_stereo(), cfg);
            stats.circular_matches = circular.len();
            let obs = build_observations(&circular, &self.calib, cfg.min_disparity_px);
            let motion = match ransac_estimate(&obs, &self.calib, cfg) {
                Ok(est) => {
                    stats.inliers = est.inlier_indices.len();
                    if !circular.is_empty() {
                        stats.inlier_pct = 100.0 * stats.inliers as f64 / circular.len() as f64;
                    }
                    est.params
                }
                Err(_) => {
                    stats.flagged = true;
                    self.state.last_motion
                }
            };
            stats.motion = motion;
            self.state.last_motion = motion;
            // motion maps previous-frame coordinates into the current frame
            let delta = motion.to_transform();
            self.state.world_pose = compose(&self.state.world_pose, &delta.inverse()).orthonormalized();
        }

        self.state.prev = Some(curr);
        self.state.frame_index += 1;
        self.state.stats.push(stats);
        Ok(self.state.world_pose)
    }
}

/// Trajectory (one camera-to-world pose per frame) and per-frame statistics.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub trajectory: Vec<Pose>,
    pub stats: Vec<FrameStats>,
}

impl RunOutput {
    pub fn flagged_fraction(&self) -> f64 {
        if self.stats.len() <= 1 {
            return 0.0;
        }
        // the first frame can never be estimated
        let flagged = self.stats.iter().filter(|s| s.flagged).count();
        flagged as f64 / (self.stats.len() - 1) as f64
    }
}

/// Folds [`Odometry::step`] over a sequence of stereo pairs. Errors carry the
/// index of the offending frame.
pub fn run<I>(sequence: I, calib: &StereoCalib, cfg: &PipelineConfig) -> Result<RunOutput>
where
    I: IntoIterator<Item = Result<(GrayImage, GrayImage)>>,
{
    let mut odo = Odometry::new(*calib, cfg.clone())?;
    let mut trajectory = Vec::new();
    for (index, pair) in sequence.into_iter().enumerate() {
        let wrap = |e: Error| Error::Frame {
            index,
            source: Box::new(e),
        };
        let (left, right) = pair.map_err(wrap)?;
        trajectory.push(odo.step(&left, &right).map_err(wrap)?);
    }
    if trajectory.is_empty() {
        return Err(Error::Dataset("sequence contains no frames".into()));
    }
    Ok(RunOutput {
        trajectory,
        stats: odo.into_state().stats,
    })
}
