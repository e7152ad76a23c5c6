//! Synthetic stereo scenes with known motion, used as ground truth for tests,
//! examples and the `synth` command.

use nalgebra::Vector3;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::StereoCalib;
use crate::egomotion::Observation;
use crate::error::{Error, Result};
use crate::geometry::{project_camera, Landmark, Side};
use crate::pose::{compose, MotionParams, Pose};

/// Static world points observed by a moving stereo rig.
///
/// World coordinates are the left-camera coordinates of frame 0. `motions[k]`
/// maps camera coordinates of frame `k` into those of frame `k + 1`, so a
/// scene with `n` motions has `n + 1` frames.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub landmarks: Vec<Vector3<f64>>,
    pub motions: Vec<MotionParams>,
    /// Standard deviation of the pixel noise added to every coordinate.
    pub noise_sigma: f64,
    /// Fraction of observations per frame replaced by uniform random pixels.
    pub outlier_rate: f64,
    pub seed: u64,
}

impl SyntheticScene {
    pub fn frames(&self) -> usize {
        self.motions.len() + 1
    }

    /// Camera-to-world pose of every frame.
    pub fn camera_poses(&self) -> Vec<Pose> {
        let mut poses = vec![Pose::identity()];
        for m in &self.motions {
            let last = *poses.last().unwrap();
            poses.push(compose(&last, &m.to_transform().inverse()));
        }
        poses
    }

    /// Landmark positions in the camera frame of `frame`.
    pub fn landmarks_in_frame(&self, frame: usize) -> Vec<Vector3<f64>> {
        let world_to_cam = self.camera_poses()[frame].inverse();
        self.landmarks.iter().map(|p| world_to_cam.transform_point(p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.outlier_rate) {
            return Err(Error::SceneConstruction(format!(
                "outlier rate {} outside [0, 1)",
                self.outlier_rate
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::SceneConstruction("noise sigma must be non-negative".into()));
        }
        for (k, pose) in self.camera_poses().iter().enumerate() {
            let inv = pose.inverse();
            for (i, p) in self.landmarks.iter().enumerate() {
                let z = inv.transform_point(p).z;
                if !(z > 0.0) {
                    return Err(Error::SceneConstruction(format!(
                        "landmark {i} behind camera in frame {k} (depth {z})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One landmark as seen in one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    pub landmark: usize,
    /// Exact position in this frame's left-camera coordinates.
    pub camera_point: Vector3<f64>,
    pub x_l: [f64; 2],
    pub x_r: [f64; 2],
    pub outlier: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTracks {
    /// `frames[k][i]` is landmark `i` in frame `k`.
    pub frames: Vec<Vec<TrackPoint>>,
    pub motions: Vec<MotionParams>,
    pub poses: Vec<Pose>,
}

impl SyntheticTracks {
    /// Observations for the motion from `frame - 1` to `frame`: exact
    /// previous-frame landmarks with the current (noisy) pixels.
    pub fn observations(&self, frame: usize) -> Vec<Observation> {
        assert!(frame >= 1 && frame < self.frames.len(), "frame {frame} has no predecessor");
        self.frames[frame - 1]
            .iter()
            .zip(&self.frames[frame])
            .map(|(prev, curr)| Observation {
                landmark: Landmark(prev.camera_point),
                x_l: curr.x_l,
                x_r: curr.x_r,
            })
            .collect()
    }

    /// Indices of planted outliers in `frame`.
    pub fn outliers(&self, frame: usize) -> Vec<usize> {
        self.frames[frame]
            .iter()
            .enumerate()
            .filter(|(_, p)| p.outlier)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Projects every landmark into every frame, adds Gaussian pixel noise and
/// replaces a fixed fraction per frame with uniform pixels inside
/// `[0, 2 cu] x [0, 2 cv]`. Deterministic for a given seed.
pub fn generate_tracks(scene: &SyntheticScene, calib: &StereoCalib) -> Result<SyntheticTracks> {
    scene.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = Normal::new(0.0, scene.noise_sigma)
        .map_err(|e| Error::SceneConstruction(format!("noise: {e}")))?;
    let poses = scene.camera_poses();
    let n = scene.landmarks.len();
    let n_out = (scene.outlier_rate * n as f64).round() as usize;
    let mut frames = Vec::with_capacity(poses.len());
    for pose in &poses {
        let inv = pose.inverse();
        let mut is_outlier = vec![false; n];
        for i in index::sample(&mut rng, n, n_out.min(n)) {
            is_outlier[i] = true;
        }
        let mut points = Vec::with_capacity(n);
        for (i, world) in scene.landmarks.iter().enumerate() {
            let cam = inv.transform_point(world);
            let mut l = project_camera(&cam, calib, Side::Left)?;
            let mut r = project_camera(&cam, calib, Side::Right)?;
            if is_outlier[i] {
                let (w, h) = (2.0 * calib.cu, 2.0 * calib.cv);
                l = [rng.gen_range(0.0..w), rng.gen_range(0.0..h)];
                r = [rng.gen_range(0.0..w), rng.gen_range(0.0..h)];
            } else {
                for v in l.iter_mut().chain(r.iter_mut()) {
                    *v += noise.sample(&mut rng);
                }
            }
            points.push(TrackPoint {
                landmark: i,
                camera_point: cam,
                x_l: l,
                x_r: r,
                outlier: is_outlier[i],
            });
        }
        frames.push(points);
    }
    Ok(SyntheticTracks {
        frames,
        motions: scene.motions.clone(),
        poses,
    })
}

/// Uniform landmarks in a box of camera-0 coordinates.
pub fn random_landmarks(
    rng: &mut impl Rng,
    n: usize,
    x: (f64, f64),
    y: (f64, f64),
    z: (f64, f64),
) -> Vec<Vector3<f64>> {
    (0..n)
        .map(|_| {
            Vector3::new(
                rng.gen_range(x.0..x.1),
                rng.gen_range(y.0..y.1),
                rng.gen_range(z.0..z.1),
            )
        })
        .collect()
}

/// Smooth drive-like motion: steady sideways and forward travel with small
/// wobbling rotations. Returns `frames - 1` motions.
pub fn default_motions(frames: usize, seed: u64) -> Vec<MotionParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_7469_6f6e);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (1..frames)
        .map(|k| {
            let s = k as f64 * 0.4 + phase;
            MotionParams::new(
                [0.004 * s.sin(), 0.008 * (0.7 * s).cos(), 0.003 * (1.3 * s).sin()],
                [-0.45 + 0.05 * s.cos(), 0.02 * s.sin(), -0.2],
            )
        })
        .collect()
}

/// Landmarks seeded uniformly in a box in front of a randomly chosen frame,
/// kept only if at least 1 m in front of every camera of the scene.
pub fn scatter_landmarks(poses: &[Pose], n: usize, seed: u64) -> Result<Vec<Vector3<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6e64);
    let inverses: Vec<Pose> = poses.iter().map(|p| p.inverse()).collect();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::SceneConstruction("cannot keep landmarks in front of every camera".into()));
        }
        let k = rng.gen_range(0..poses.len());
        let cam = Vector3::new(rng.gen_range(-8.0..8.0), rng.gen_range(-3.0..3.0), rng.gen_range(6.0..30.0));
        let world = poses[k].transform_point(&cam);
        if inverses.iter().all(|inv| inv.transform_point(&world).z >= 1.0) {
            out.push(world);
        }
    }
    Ok(out)
}

/// Placement rules for sprite scenes meant to be rendered.
#[derive(Clone, Debug, PartialEq)]
pub struct SpriteLayout {
    pub width: usize,
    pub height: usize,
    /// Side of one pattern cell in pixels; sprites are 9 cells wide.
    pub cell_px: usize,
    /// Minimum distance between sprite centres in any rendered image.
    pub spacing_px: f64,
    /// Depth range of a landmark in the frame it is seeded from.
    pub depth: (f64, f64),
    /// Distance of seeded sprite centres from the image border.
    pub border_px: f64,
    /// Restrict seeded centres to a disc around the principal point.
    pub max_radius_px: Option<f64>,
}

impl SpriteLayout {
    pub fn new(width: usize, height: usize) -> Self {
        let cell_px = 3;
        SpriteLayout {
            width,
            height,
            cell_px,
            spacing_px: 52.0,
            depth: (4.0, 12.0),
            border_px: 40.0,
            max_radius_px: None,
        }
    }

    pub fn sprite_px(&self) -> f64 {
        (9 * self.cell_px) as f64
    }
}

fn project_pair(cam: &Vector3<f64>, calib: &StereoCalib) -> Option<([f64; 2], [f64; 2])> {
    let l = project_camera(cam, calib, Side::Left).ok()?;
    let r = project_camera(cam, calib, Side::Right).ok()?;
    Some((l, r))
}

/// Randomly seeds `count` landmarks so that, in every frame, rendered sprites
/// keep `spacing_px` apart in both images. Each landmark is seeded at a random
/// pixel and depth of a random frame and must stay at least 1 m in front of
/// every camera.
pub fn build_sprite_scene(
    calib: &StereoCalib,
    layout: &SpriteLayout,
    motions: Vec<MotionParams>,
    count: usize,
    seed: u64,
) -> Result<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = SyntheticScene {
        landmarks: Vec::with_capacity(count),
        motions,
        noise_sigma: 0.0,
        outlier_rate: 0.0,
        seed,
    };
    let poses = scene.camera_poses();
    let inverses: Vec<Pose> = poses.iter().map(|p| p.inverse()).collect();
    let reach = layout.sprite_px() + layout.spacing_px;
    let (w, h) = (layout.width as f64, layout.height as f64);
    // projections of accepted landmarks per frame: (left, right)
    let mut placed: Vec<Vec<([f64; 2], [f64; 2])>> = vec![Vec::new(); poses.len()];

    let max_attempts = 400 * count.max(1);
    let mut attempts = 0;
    while scene.landmarks.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::SceneConstruction(format!(
                "placed only {} of {count} landmarks; layout too dense",
                scene.landmarks.len()
            )));
        }
        let k = rng.gen_range(0..poses.len());
        let u = rng.gen_range(layout.border_px..w - layout.border_px);
        let v = rng.gen_range(layout.border_px..h - layout.border_px);
        let z = rng.gen_range(layout.depth.0..layout.depth.1);
        if let Some(r) = layout.max_radius_px {
            if (u - calib.cu).hypot(v - calib.cv) > r {
                continue;
            }
        }
        let cam = Vector3::new((u - calib.cu) * z / calib.f, (v - calib.cv) * z / calib.f, z);
        let world = poses[k].transform_point(&cam);

        let mut proj = Vec::with_capacity(poses.len());
        let mut ok = true;
        for inv in &inverses {
            let c = inv.transform_point(&world);
            if c.z < 1.0 {
                ok = false;
                break;
            }
            proj.push(project_pair(&c, calib).expect("depth checked"));
        }
        if !ok {
            continue;
        }
        let visible = |p: &[f64; 2]| p[0] > -reach && p[0] < w + reach && p[1] > -reach && p[1] < h + reach;
        let clash = proj.iter().zip(&placed).any(|((l, r), others)| {
            others.iter().any(|(ol, or)| {
                let near = |a: &[f64; 2], b: &[f64; 2]| {
                    visible(a) && visible(b) && (a[0] - b[0]).hypot(a[1] - b[1]) < layout.spacing_px
                };
                near(l, ol) || near(r, or)
            })
        });
        if clash {
            continue;
        }
        for (slot, p) in placed.iter_mut().zip(proj) {
            slot.push(p);
        }
        scene.landmarks.push(world);
    }
    Ok(scene)
}
