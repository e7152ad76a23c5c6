//! Command-line front end: `run`, `eval` and `synth`.
//!
//! Exit codes: 0 success, 2 data or I/O error, 3 more than half of the frames
//! fell back to the previous motion, 64 usage error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{PipelineConfig, StereoCalib};
use crate::error::{Error, Result};
use crate::eval::{evaluate, export_csv};
use crate::io::dataset::{format_dirs_calib, load_dirs, load_kitti, save_gray};
use crate::io::render::{render_sprites, RenderOptions};
use crate::io::synth::{
    build_sprite_scene, default_motions, generate_tracks, scatter_landmarks, SpriteLayout, SyntheticScene,
};
use crate::io::trajectory::{read_timestamps, read_trajectory, write_timestamps, write_trajectory};
use crate::pipeline::{run as run_pipeline, FrameStats};
use crate::pose::{MotionParams, Pose};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_COLLAPSE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Rig and image size of generated datasets.
pub const SYNTH_WIDTH: usize = 640;
pub const SYNTH_HEIGHT: usize = 400;
pub const SYNTH_FRAME_PERIOD: f64 = 0.1;

pub fn synth_calib() -> StereoCalib {
    StereoCalib {
        f: 450.0,
        cu: 320.0,
        cv: 200.0,
        baseline: 0.5,
    }
}

#[derive(Debug, Parser)]
#[command(name = "stereo-vo", version, about = "Feature-based stereo visual odometry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// `image_0/`, `image_1/`, `calib.txt`, `times.txt`
    Kitti,
    /// `left/`, `right/`, `calib.txt` with `f cu cv baseline`
    Dirs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the trajectory of a stereo sequence.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// `key = value` pipeline parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the RANSAC seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        traj_out: PathBuf,
        /// Per-frame statistics as CSV.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Score an estimated trajectory against ground truth.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Timestamps, enables the per-speed table.
        #[arg(long)]
        times: Option<PathBuf>,
        /// Prefix of the `_length.csv`, `_speed.csv` and `_frames.csv` outputs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset with known motion.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        frames: u64,
        #[arg(long, default_value_t = 40)]
        landmarks: usize,
        /// Pixel noise sigma of the track tables.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Fraction of outlier observations per frame in the track tables.
        #[arg(long, default_value_t = 0.0)]
        outliers: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also render stereo images of sprite landmarks.
        #[arg(long)]
        render: bool,
    },
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

pub fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run {
            dataset,
            format,
            config,
            seed,
            traj_out,
            stats_out,
        } => cmd_run(&dataset, format, config.as_deref(), seed, &traj_out, stats_out.as_deref()),
        Command::Eval { est, gt, times, out } => cmd_eval(&est, &gt, times.as_deref(), &out),
        Command::Synth {
            seed,
            frames,
            landmarks,
            noise,
            outliers,
            out,
            render,
        } => {
            let opts = SynthOptions {
                seed,
                frames: frames as usize,
                landmarks,
                noise,
                outliers,
                render,
            };
            write_synthetic_dataset(&opts, &out)?;
            Ok(EXIT_OK)
        }
    }
}

pub const STATS_HEADER: &str =
    "frame,left_features,right_features,stereo_matches,circular_matches,inliers,inlier_pct,flagged";

pub fn stats_csv(stats: &[FrameStats]) -> String {
    let mut out = format!("{STATS_HEADER}\n");
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.frame,
            s.left_features,
            s.right_features,
            s.stereo_matches,
            s.circular_matches,
            s.inliers,
            s.inlier_pct,
            u8::from(s.flagged)
        );
    }
    out
}

fn cmd_run(
    dataset: &Path,
    format: Format,
    config: Option<&Path>,
    seed: Option<u64>,
    traj_out: &Path,
    stats_out: Option<&Path>,
) -> Result<i32> {
    let mut cfg = match config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let source = match format {
        Format::Kitti => load_kitti(dataset, &dataset.join("calib.txt"), None)?,
        Format::Dirs => load_dirs(dataset)?,
    };
    let out = run_pipeline(source.frames(), &source.calib, &cfg)?;
    write_trajectory(&out.trajectory, traj_out)?;
    if let Some(path) = stats_out {
        std::fs::write(path, stats_csv(&out.stats)).map_err(|e| Error::io(path, e))?;
    }
    let flagged = out.flagged_fraction();
    if flagged > 0.5 {
        eprintln!(
            "error: motion estimation failed on {:.0}% of frames",
            100.0 * flagged
        );
        return Ok(EXIT_COLLAPSE);
    }
    Ok(EXIT_OK)
}

fn cmd_eval(est: &Path, gt: &Path, times: Option<&Path>, out: &Path) -> Result<i32> {
    let est = read_trajectory(est)?;
    let gt = read_trajectory(gt)?;
    let times = times.map(read_timestamps).transpose()?;
    let report = evaluate(&est, &gt, times.as_deref())?;
    export_csv(&report, out)?;
    println!(
        "overall_trans_pct={:.3} overall_rot_degm={:.6}",
        100.0 * report.overall_translation,
        report.overall_rotation
    );
    Ok(EXIT_OK)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub frames: usize,
    pub landmarks: usize,
    pub noise: f64,
    pub outliers: f64,
    pub render: bool,
}

/// Builds the scene `synth` writes: sprite-spaced landmarks when rendering,
/// otherwise landmarks scattered in front of the cameras.
pub fn synthetic_scene(opts: &SynthOptions) -> Result<SyntheticScene> {
    let calib = synth_calib();
    let motions: Vec<MotionParams> = default_motions(opts.frames, opts.seed);
    let mut scene = if opts.render {
        let layout = SpriteLayout::new(SYNTH_WIDTH, SYNTH_HEIGHT);
        build_sprite_scene(&calib, &layout, motions, opts.landmarks, opts.seed)?
    } else {
        let mut scene = SyntheticScene {
            landmarks: Vec::new(),
            motions,
            noise_sigma: 0.0,
            outlier_rate: 0.0,
            seed: opts.seed,
        };
        scene.landmarks = scatter_landmarks(&scene.camera_poses(), opts.landmarks, opts.seed)?;
        scene
    };
    scene.noise_sigma = opts.noise;
    scene.outlier_rate = opts.outliers;
    Ok(scene)
}

/// Writes `calib.txt`, `poses.txt`, `times.txt` and `tracks.csv` into `dir`,
/// plus `left/` and `right/` PNGs when rendering.
pub fn write_synthetic_dataset(opts: &SynthOptions, dir: &Path) -> Result<SyntheticScene> {
    let calib = synth_calib();
    let scene = synthetic_scene(opts)?;
    let tracks = generate_tracks(&scene, &calib)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("calib.txt", format_dirs_calib(&calib))?;
    let poses: Vec<Pose> = scene.camera_poses();
    write_trajectory(&poses, &dir.join("poses.txt"))?;
    let times: Vec<f64> = (0..scene.frames()).map(|k| k as f64 * SYNTH_FRAME_PERIOD).collect();
    write_timestamps(&times, &dir.join("times.txt"))?;

    let mut csv = String::from("frame,landmark,xl,yl,xr,yr,outlier\n");
    for (k, frame) in tracks.frames.iter().enumerate() {
        for p in frame {
            let _ = writeln!(
                csv,
                "{k},{},{},{},{},{},{}",
                p.landmark,
                p.x_l[0],
                p.x_l[1],
                p.x_r[0],
                p.x_r[1],
                u8::from(p.outlier)
            );
        }
    }
    write("tracks.csv", csv)?;

    if opts.render {
        let render = RenderOptions::new(SYNTH_WIDTH, SYNTH_HEIGHT);
        for side in ["left", "right"] {
            let d = dir.join(side);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        for k in 0..scene.frames() {
            let (l, r) = render_sprites(&scene, k, &calib, &render)?;
            save_gray(&l, &dir.join("left").join(format!("{k:06}.png")))?;
            save_gray(&r, &dir.join("right").join(format!("{k:06}.png")))?;
        }
    }
    Ok(scene)
}
