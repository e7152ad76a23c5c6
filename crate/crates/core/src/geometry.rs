//! Rectified stereo geometry: triangulation, reprojection and the epipolar
//! residual.

use nalgebra::{Matrix3, Vector3};

use crate::config::StereoCalib;
use crate::error::{Error, Result};
use crate::pose::MotionParams;

/// A point in the left camera frame of the image pair it was triangulated
/// from, in meters. Always in front of the camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark(pub Vector3<f64>);

impl Landmark {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Landmark(Vector3::new(x, y, z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Triangulates a rectified correspondence. The row of the left pixel is
/// used; the right row is ignored.
pub fn triangulate(p_l: [f64; 2], p_r: [f64; 2], calib: &StereoCalib, min_disparity: f64) -> Result<Landmark> {
    let d = p_l[0] - p_r[0];
    if !(d >= min_disparity) || d <= 0.0 {
        return Err(Error::DisparityTooSmall {
            disparity: d,
            min: min_disparity,
        });
    }
    let z = calib.f * calib.baseline / d;
    Ok(Landmark::new(
        (p_l[0] - calib.cu) * z / calib.f,
        (p_l[1] - calib.cv) * z / calib.f,
        z,
    ))
}

/// Pixel of a camera-frame point, without applying any motion.
pub fn project_camera(p: &Vector3<f64>, calib: &StereoCalib, side: Side) -> Result<[f64; 2]> {
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera { depth: p.z });
    }
    let x = match side {
        Side::Left => p.x,
        Side::Right => p.x - calib.baseline,
    };
    Ok([calib.f * x / p.z + calib.cu, calib.f * p.y / p.z + calib.cv])
}

/// Projects `R(r) X + t` into the chosen camera.
pub fn project(x: &Landmark, m: &MotionParams, calib: &StereoCalib, side: Side) -> Result<[f64; 2]> {
    let p = m.rotation() * x.0 + m.translation();
    project_camera(&p, calib, side)
}

/// `m'ᵀ F m` for homogeneous pixels.
pub fn epipolar_residual(m: &Vector3<f64>, m_prime: &Vector3<f64>, f: &Matrix3<f64>) -> f64 {
    m_prime.dot(&(f * m))
}

/// Fundamental matrix of an ideal rectified pair with the conventions used
/// here: correspondences share an image row.
pub fn rectified_fundamental() -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
}

/// Homogeneous pixel `(u, v, 1)`.
pub fn homogeneous(p: [f64; 2]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], 1.0)
}
