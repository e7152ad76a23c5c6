//! KITTI-style trajectory error: relative pose error over path segments of
//! 100 to 800 m, averaged per length, per speed and overall.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::FrameStats;
use crate::pose::Pose;

pub const SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    /// Distance in frames between segment start frames.
    pub step_frames: usize,
    pub lengths: Vec<f64>,
    pub speed_bin_kmh: f64,
    /// Speed bins with fewer segments are dropped.
    pub min_speed_samples: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            step_frames: 10,
            lengths: SEGMENT_LENGTHS.to_vec(),
            speed_bin_kmh: 10.0,
            min_speed_samples: 3,
        }
    }
}

/// Error of one path segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentError {
    pub first: usize,
    pub last: usize,
    /// Nominal segment length the segment was selected for.
    pub length: f64,
    /// Ground-truth distance actually travelled between `first` and `last`.
    pub distance: f64,
    /// Translational error as a fraction of `distance`.
    pub trans: f64,
    /// Rotational error in degrees per metre.
    pub rot: f64,
    /// km/h, when timestamps were given.
    pub speed_kmh: Option<f64>,
}

/// Average errors of one bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinError {
    pub trans: f64,
    pub rot: f64,
    pub count: usize,
}

/// Per-frame statistics carried into the `_frames.csv` export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame: usize,
    pub inlier_pct: f64,
    pub circular_matches: usize,
    pub flagged: bool,
}

impl From<&FrameStats> for FrameRecord {
    fn from(s: &FrameStats) -> Self {
        FrameRecord {
            frame: s.frame,
            inlier_pct: s.inlier_pct,
            circular_matches: s.circular_matches,
            flagged: s.flagged,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    /// Keyed by segment length in metres.
    pub per_length: Vec<(f64, BinError)>,
    /// Keyed by bin centre in km/h.
    pub per_speed: Vec<(f64, BinError)>,
    /// Fraction, averaged over every segment.
    pub overall_translation: f64,
    /// Degrees per metre, averaged over every segment.
    pub overall_rotation: f64,
    /// The path was shorter than the shortest segment length, so the overall
    /// numbers come from one segment spanning the whole path.
    pub short_path: bool,
    pub segments: Vec<SegmentError>,
    pub frames: Vec<FrameRecord>,
}

impl EvalReport {
    pub fn with_frame_stats(mut self, stats: &[FrameStats]) -> Self {
        self.frames = stats.iter().map(FrameRecord::from).collect();
        self
    }

    pub fn per_frame_inlier_pct(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.inlier_pct).collect()
    }
}

/// Cumulative ground-truth path length at every frame.
pub fn path_distances(poses: &[Pose]) -> Vec<f64> {
    let mut out = Vec::with_capacity(poses.len());
    let mut acc = 0.0;
    for (i, p) in poses.iter().enumerate() {
        if i > 0 {
            acc += (p.translation - poses[i - 1].translation).norm();
        }
        out.push(acc);
    }
    out
}

/// First frame at least `length` metres of path after `first`.
pub fn last_frame_from_segment_length(dist: &[f64], first: usize, length: f64) -> Option<usize> {
    (first..dist.len()).find(|&i| dist[i] >= dist[first] + length)
}

/// Angle in radians between two rotations, from their chordal distance
/// `|a - b|_F = 2 sqrt(2) sin(angle / 2)`. Exactly zero for equal inputs,
/// unlike the trace formula whose `acos` amplifies round-off near zero.
pub fn rotation_difference(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let chord = (a - b).norm() / (2.0 * std::f64::consts::SQRT_2);
    2.0 * chord.clamp(0.0, 1.0).asin()
}

/// Translational (metres) and rotational (radians) error of the segment
/// `first..=last`, i.e. of `inv(gt_rel) * est_rel`.
pub fn segment_error(est: &[Pose], gt: &[Pose], first: usize, last: usize) -> (f64, f64) {
    let d_gt = gt[first].inverse() * gt[last];
    let d_est = est[first].inverse() * est[last];
    // inv(d_gt) * d_est has translation R_gt^T (t_est - t_gt), whose norm is |t_est - t_gt|
    let trans = (d_est.translation - d_gt.translation).norm();
    (trans, rotation_difference(&d_gt.rotation, &d_est.rotation))
}

fn average(segs: &[&SegmentError]) -> BinError {
    let n = segs.len() as f64;
    BinError {
        trans: segs.iter().map(|s| s.trans).sum::<f64>() / n,
        rot: segs.iter().map(|s| s.rot).sum::<f64>() / n,
        count: segs.len(),
    }
}

pub fn evaluate(est: &[Pose], gt: &[Pose], timestamps: Option<&[f64]>) -> Result<EvalReport> {
    evaluate_with(est, gt, timestamps, &EvalOptions::default())
}

pub fn evaluate_with(
    est: &[Pose],
    gt: &[Pose],
    timestamps: Option<&[f64]>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if est.len() != gt.len() {
        return Err(Error::TrajectoryLengthMismatch {
            est: est.len(),
            gt: gt.len(),
        });
    }
    if gt.len() < 2 {
        return Err(Error::Dataset("evaluation needs at least two poses".into()));
    }
    if let Some(t) = timestamps {
        if t.len() != gt.len() {
            return Err(Error::Dataset(format!(
                "{} timestamps for {} poses",
                t.len(),
                gt.len()
            )));
        }
    }
    if opts.step_frames == 0 {
        return Err(Error::InvalidConfig("segment step must be positive".into()));
    }

    let dist = path_distances(gt);
    let dist = &dist[..];
    let make = |first: usize, last: usize, length: f64| {
        let distance = dist[last] - dist[first];
        let (t, r) = segment_error(est, gt, first, last);
        let speed_kmh = timestamps.map(|ts| 3.6 * distance / (ts[last] - ts[first]));
        SegmentError {
            first,
            last,
            length,
            distance,
            trans: t / distance,
            rot: r.to_degrees() / distance,
            speed_kmh,
        }
    };

    let starts: Vec<usize> = (0..gt.len()).step_by(opts.step_frames).collect();
    let segments: Vec<SegmentError> = starts
        .par_iter()
        .flat_map_iter(|&first| {
            let make = &make;
            opts.lengths.iter().filter_map(move |&len| {
                let last = last_frame_from_segment_length(dist, first, len)?;
                Some(make(first, last, len))
            })
        })
        .collect();

    let mut report = EvalReport::default();
    if segments.is_empty() {
        let total = *dist.last().unwrap();
        report.short_path = true;
        if total > 0.0 {
            let s = make(0, gt.len() - 1, total);
            report.overall_translation = s.trans;
            report.overall_rotation = s.rot;
            report.segments.push(s);
        }
        return Ok(report);
    }

    for &len in &opts.lengths {
        let bin: Vec<&SegmentError> = segments.iter().filter(|s| s.length == len).collect();
        if !bin.is_empty() {
            report.per_length.push((len, average(&bin)));
        }
    }

    let mut by_speed: BTreeMap<i64, Vec<&SegmentError>> = BTreeMap::new();
    for s in &segments {
        if let Some(v) = s.speed_kmh.filter(|v| v.is_finite()) {
            by_speed
                .entry((v / opts.speed_bin_kmh).round() as i64)
                .or_default()
                .push(s);
        }
    }
    for (bin, segs) in by_speed {
        if segs.len() >= opts.min_speed_samples {
            report.per_speed.push((bin as f64 * opts.speed_bin_kmh, average(&segs)));
        }
    }

    let all: Vec<&SegmentError> = segments.iter().collect();
    let overall = average(&all);
    report.overall_translation = overall.trans;
    report.overall_rotation = overall.rot;
    report.segments = segments;
    Ok(report)
}

fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

fn bins_csv(header: &str, bins: &[(f64, BinError)]) -> String {
    let mut out = format!("{header}\n");
    for (key, b) in bins {
        let _ = writeln!(out, "{},{},{}", fmt(*key), fmt(100.0 * b.trans), fmt(b.rot));
    }
    out
}

pub const LENGTH_HEADER: &str = "length_m,trans_pct,rot_degm";
pub const SPEED_HEADER: &str = "speed_kmh,trans_pct,rot_degm";
pub const FRAMES_HEADER: &str = "frame,inlier_pct,circular_matches,flagged";

pub fn length_csv(report: &EvalReport) -> String {
    bins_csv(LENGTH_HEADER, &report.per_length)
}

pub fn speed_csv(report: &EvalReport) -> String {
    bins_csv(SPEED_HEADER, &report.per_speed)
}

pub fn frames_csv(frames: &[FrameRecord]) -> String {
    let mut out = format!("{FRAMES_HEADER}\n");
    for f in frames {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            f.frame,
            fmt(f.inlier_pct),
            f.circular_matches,
            u8::from(f.flagged)
        );
    }
    out
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>_length.csv`, `<prefix>_speed.csv` and `<prefix>_frames.csv`.
/// Translational errors are written in percent.
pub fn export_csv(report: &EvalReport, prefix: &Path) -> Result<[PathBuf; 3]> {
    let files = [
        (with_suffix(prefix, "_length.csv"), length_csv(report)),
        (with_suffix(prefix, "_speed.csv"), speed_csv(report)),
        (with_suffix(prefix, "_frames.csv"), frames_csv(&report.frames)),
    ];
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    let [(a, _), (b, _), (c, _)] = files;
    Ok([a, b, c])
}

/// Reads back a `_length.csv` or `_speed.csv` table as
/// `(key, trans_pct, rot_degm)` rows.
pub fn parse_bins_csv(text: &str, origin: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(origin, idx + 1, format!("bad number: {e}")))?;
        match vals[..] {
            [k, t, r] => rows.push((k, t, r)),
            _ => return Err(Error::parse(origin, idx + 1, "expected 3 columns")),
        }
    }
    Ok(rows)
}
