//! Pose files: one 3x4 row-major matrix per line, 12 space-separated values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pose::Pose;

fn fmt_value(v: f64) -> String {
    // shortest representation that round-trips; never prints "-0"
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn format_trajectory(poses: &[Pose]) -> String {
    let mut out = String::new();
    for pose in poses {
        let line: Vec<String> = pose.to_row_major().iter().map(|&v| fmt_value(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_trajectory(poses: &[Pose], path: &Path) -> Result<()> {
    std::fs::write(path, format_trajectory(poses)).map_err(|e| Error::io(path, e))
}

pub fn parse_trajectory(text: &str, origin: &Path) -> Result<Vec<Pose>> {
    let mut poses = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(origin, idx + 1, format!("bad number: {e}")))?;
        let arr: [f64; 12] = values
            .try_into()
            .map_err(|v: Vec<f64>| Error::parse(origin, idx + 1, format!("expected 12 values, got {}", v.len())))?;
        poses.push(Pose::from_row_major(&arr));
    }
    Ok(poses)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<Pose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

/// One float per line, e.g. KITTI `times.txt`.
pub fn read_timestamps(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let t: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("bad timestamp `{line}`")))?;
        if let Some(&prev) = out.last() {
            if !(t > prev) {
                return Err(Error::parse(path, idx + 1, "timestamps must be strictly increasing"));
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_timestamps(times: &[f64], path: &Path) -> Result<()> {
    let mut out = String::new();
    for t in times {
        let _ = writeln!(out, "{}", fmt_value(*t));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
