//! Stereo sequence readers for the KITTI odometry layout and a plain
//! `left/ right/ calib.txt` layout.

use std::path::{Path, PathBuf};

use image::DynamicImage;

use crate::config::StereoCalib;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io::trajectory::{read_timestamps, read_trajectory};
use crate::pose::Pose;

/// A rectified stereo sequence on disk. Images are decoded lazily.
#[derive(Clone, Debug)]
pub struct SequenceSource {
    pub left: Vec<PathBuf>,
    pub right: Vec<PathBuf>,
    pub timestamps: Option<Vec<f64>>,
    pub calib: StereoCalib,
    pub ground_truth: Option<Vec<Pose>>,
}

impl SequenceSource {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn load_pair(&self, index: usize) -> Result<(GrayImage, GrayImage)> {
        Ok((load_gray(&self.left[index])?, load_gray(&self.right[index])?))
    }

    /// Decodes pairs in order, one at a time.
    pub fn frames(&self) -> impl Iterator<Item = Result<(GrayImage, GrayImage)>> + '_ {
        (0..self.len()).map(move |i| self.load_pair(i))
    }

    fn check(self) -> Result<Self> {
        if self.left.len() != self.right.len() {
            return Err(Error::Dataset(format!(
                "{} left images but {} right images",
                self.left.len(),
                self.right.len()
            )));
        }
        if let Some(t) = &self.timestamps {
            if t.len() != self.left.len() {
                return Err(Error::Dataset(format!(
                    "{} timestamps for {} frames",
                    t.len(),
                    self.left.len()
                )));
            }
        }
        if let Some(gt) = &self.ground_truth {
            if gt.len() != self.left.len() {
                return Err(Error::Dataset(format!(
                    "{} ground-truth poses for {} frames",
                    gt.len(),
                    self.left.len()
                )));
            }
        }
        Ok(self)
    }
}

/// Decodes an 8-bit grayscale image (PNG or binary PGM). Colour input is
/// reduced with `0.299 R + 0.587 G + 0.114 B`.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw(),
        DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(|v| (v >> 8) as u8).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
                    .round()
                    .clamp(0.0, 255.0) as u8
            })
            .collect(),
    };
    GrayImage::new(w, h, data)
}

/// Writes an 8-bit grayscale PNG (or PGM, by extension).
pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("png" | "pgm")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_floats(text: &str) -> Option<Vec<f64>> {
    text.split_whitespace().map(|t| t.parse().ok()).collect()
}

/// Rig from KITTI `P0:` / `P1:` projection rows.
pub fn parse_kitti_calib(text: &str, origin: &Path) -> Result<StereoCalib> {
    let mut p0 = None;
    let mut p1 = None;
    for (idx, line) in text.lines().enumerate() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let slot = match key.trim() {
            "P0" => &mut p0,
            "P1" => &mut p1,
            _ => continue,
        };
        let values = parse_floats(rest)
            .filter(|v| v.len() == 12)
            .ok_or_else(|| Error::parse(origin, idx + 1, format!("{} needs 12 numbers", key.trim())))?;
        *slot = Some(values);
    }
    let p0 = p0.ok_or_else(|| Error::Calibration(format!("{}: missing P0 line", origin.display())))?;
    let p1 = p1.ok_or_else(|| Error::Calibration(format!("{}: missing P1 line", origin.display())))?;
    let f = p0[0];
    if !(p1[0] != 0.0) {
        return Err(Error::Calibration(format!("{}: P1 focal length is zero", origin.display())));
    }
    let baseline = -p1[3] / p1[0];
    StereoCalib::new(f, p0[2], p0[6], baseline)
        .map_err(|e| Error::Calibration(format!("{}: {e}", origin.display())))
}

pub fn read_kitti_calib(path: &Path) -> Result<StereoCalib> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kitti_calib(&text, path)
}

/// KITTI odometry layout: `image_0/` (left) and `image_1/` (right) under
/// `sequence_dir`, optional `times.txt` next to them.
pub fn load_kitti(sequence_dir: &Path, calib_file: &Path, poses_file: Option<&Path>) -> Result<SequenceSource> {
    let calib = read_kitti_calib(calib_file)?;
    let left = list_images(&sequence_dir.join("image_0"))?;
    let right = list_images(&sequence_dir.join("image_1"))?;
    let times = sequence_dir.join("times.txt");
    let timestamps = if times.exists() {
        Some(read_timestamps(&times)?)
    } else {
        None
    };
    let ground_truth = poses_file.map(read_trajectory).transpose()?;
    SequenceSource {
        left,
        right,
        timestamps,
        calib,
        ground_truth,
    }
    .check()
}

/// The `calib.txt` line of the plain layout: `f cu cv baseline`.
pub fn parse_dirs_calib(text: &str, origin: &Path) -> Result<StereoCalib> {
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = parse_floats(line)
            .filter(|v| v.len() == 4)
            .ok_or_else(|| Error::parse(origin, idx + 1, "expected `f cu cv baseline`"))?;
        return StereoCalib::new(v[0], v[1], v[2], v[3])
            .map_err(|e| Error::Calibration(format!("{}: {e}", origin.display())));
    }
    Err(Error::Calibration(format!("{}: no calibration line", origin.display())))
}

pub fn format_dirs_calib(calib: &StereoCalib) -> String {
    format!("{} {} {} {}\n", calib.f, calib.cu, calib.cv, calib.baseline)
}

/// Plain layout: `left/`, `right/`, `calib.txt`, and optionally `times.txt`
/// and `poses.txt` (ground truth).
pub fn load_dirs(dir: &Path) -> Result<SequenceSource> {
    let calib_path = dir.join("calib.txt");
    let text = std::fs::read_to_string(&calib_path).map_err(|e| Error::io(&calib_path, e))?;
    let calib = parse_dirs_calib(&text, &calib_path)?;
    let left = list_images(&dir.join("left"))?;
    let right = list_images(&dir.join("right"))?;
    let times = dir.join("times.txt");
    let timestamps = if times.exists() {
        Some(read_timestamps(&times)?)
    } else {
        None
    };
    let poses = dir.join("poses.txt");
    let ground_truth = if poses.exists() {
        Some(read_trajectory(&poses)?)
    } else {
        None
    };
    SequenceSource {
        left,
        right,
        timestamps,
        calib,
        ground_truth,
    }
    .check()
}
