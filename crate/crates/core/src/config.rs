//! Camera calibration and pipeline parameters.

use std::path::Path;

use crate::error::{Error, Result};

/// Rectified stereo rig: both cameras share focal length and principal point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoCalib {
    /// Focal length in pixels.
    pub f: f64,
    pub cu: f64,
    pub cv: f64,
    /// Baseline in meters.
    pub baseline: f64,
}

impl StereoCalib {
    pub fn new(f: f64, cu: f64, cv: f64, baseline: f64) -> Result<Self> {
        let calib = StereoCalib {
            f,
            cu,
            cv,
            baseline,
        };
        calib.validate()?;
        Ok(calib)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(Error::Calibration(format!(
                "focal length must be positive, got {}",
                self.f
            )));
        }
        if !(self.baseline > 0.0 && self.baseline.is_finite()) {
            return Err(Error::Calibration(format!(
                "baseline must be positive, got {}",
                self.baseline
            )));
        }
        if !self.cu.is_finite() || !self.cv.is_finite() {
            return Err(Error::Calibration("principal point must be finite".into()));
        }
        Ok(())
    }
}

/// Every tunable of the pipeline in one place.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub fast_threshold: u8,
    pub max_features: usize,
    pub pyramid_levels: usize,
    pub scale_factor: f64,
    /// Radius of the intensity-centroid disc, also the detection border.
    pub patch_radius: u32,
    /// Bound on the Hamming distance of the first 16 descriptor bytes.
    pub coarse_hamming_max: u32,
    pub full_hamming_max: u32,
    pub vertical_max_px: f64,
    pub horizontal_max_px: f64,
    pub min_disparity_px: f64,
    pub circular_window_px: f64,
    pub ransac_iterations: usize,
    pub ransac_sample_size: usize,
    /// Inlier bound on the summed squared left and right reprojection error.
    pub inlier_threshold: f64,
    pub gn_max_iters: usize,
    pub gn_step_tol: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            fast_threshold: 20,
            max_features: 2000,
            pyramid_levels: 8,
            scale_factor: 1.2,
            patch_radius: 15,
            coarse_hamming_max: 40,
            full_hamming_max: 128,
            vertical_max_px: 3.0,
            horizontal_max_px: 128.0,
            min_disparity_px: 0.5,
            circular_window_px: 100.0,
            ransac_iterations: 50,
            ransac_sample_size: 3,
            inlier_threshold: 4.0,
            gn_max_iters: 50,
            gn_step_tol: 1e-9,
            seed: 0,
        }
    }
}

fn positive(name: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        positive("fast_threshold", self.fast_threshold > 0)?;
        positive("max_features", self.max_features > 0)?;
        positive("pyramid_levels", self.pyramid_levels > 0)?;
        positive("patch_radius", self.patch_radius > 0)?;
        positive("coarse_hamming_max", self.coarse_hamming_max > 0)?;
        positive("full_hamming_max", self.full_hamming_max > 0)?;
        positive("vertical_max_px", self.vertical_max_px > 0.0)?;
        positive("horizontal_max_px", self.horizontal_max_px > 0.0)?;
        positive("min_disparity_px", self.min_disparity_px > 0.0)?;
        positive("circular_window_px", self.circular_window_px > 0.0)?;
        positive("ransac_iterations", self.ransac_iterations > 0)?;
        positive("inlier_threshold", self.inlier_threshold > 0.0)?;
        positive("gn_max_iters", self.gn_max_iters > 0)?;
        positive("gn_step_tol", self.gn_step_tol > 0.0)?;
        if !(self.scale_factor > 1.0 && self.scale_factor.is_finite()) {
            return Err(Error::InvalidConfig("scale_factor must exceed 1".into()));
        }
        if self.ransac_sample_size < 3 {
            return Err(Error::InvalidConfig("ransac_sample_size must be at least 3".into()));
        }
        if self.coarse_hamming_max > 128 {
            return Err(Error::InvalidConfig("coarse_hamming_max must not exceed 128".into()));
        }
        if self.full_hamming_max > 512 {
            return Err(Error::InvalidConfig("full_hamming_max must not exceed 512".into()));
        }
        if self.min_disparity_px > self.horizontal_max_px {
            return Err(Error::InvalidConfig(
                "min_disparity_px must not exceed horizontal_max_px".into(),
            ));
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// unknown keys are rejected.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .map_err(|msg| Error::parse(origin, line_no, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value `{value}` for `{key}`"))
        }
        match key {
            "fast_threshold" => self.fast_threshold = num(key, value)?,
            "max_features" => self.max_features = num(key, value)?,
            "pyramid_levels" => self.pyramid_levels = num(key, value)?,
            "scale_factor" => self.scale_factor = num(key, value)?,
            "patch_radius" => self.patch_radius = num(key, value)?,
            "coarse_hamming_max" => self.coarse_hamming_max = num(key, value)?,
            "full_hamming_max" => self.full_hamming_max = num(key, value)?,
            "vertical_max_px" => self.vertical_max_px = num(key, value)?,
            "horizontal_max_px" => self.horizontal_max_px = num(key, value)?,
            "min_disparity_px" => self.min_disparity_px = num(key, value)?,
            "circular_window_px" => self.circular_window_px = num(key, value)?,
            "ransac_iterations" => self.ransac_iterations = num(key, value)?,
            "ransac_sample_size" => self.ransac_sample_size = num(key, value)?,
            "inlier_threshold" => self.inlier_threshold = num(key, value)?,
            "gn_max_iters" => self.gn_max_iters = num(key, value)?,
            "gn_step_tol" => self.gn_step_tol = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}
