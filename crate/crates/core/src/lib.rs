//! Feature-based stereo visual odometry.
//!
//! Frames go through [`pipeline::Odometry`]: multi-scale FAST corners, 512-bit
//! binary descriptors, stereo matching under rectified-geometry constraints,
//! circular matching against the previous pair and RANSAC ego-motion.

pub mod cli;
pub mod config;
pub mod descriptor;
pub mod detector;
pub mod egomotion;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod pose;

pub use config::{PipelineConfig, StereoCalib};
pub use error::{Error, Result};
pub use image::GrayImage;
pub use pipeline::{run, Odometry, RunOutput};
pub use pose::{MotionParams, Pose};
