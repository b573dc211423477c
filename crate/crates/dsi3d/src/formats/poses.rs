//! Pose lists: KITTI odometry 3x4 matrices and `x,y,z,t` CSV.

use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use dsi3d_core::dataset::{Pose, FRAME_PERIOD};
use serde::{Deserialize, Serialize};

use super::{create, finish, open};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoseFormat {
    /// 12 whitespace-separated numbers per line, a row-major 3x4 transform.
    #[serde(rename = "KITTI_ODOMETRY_3x4", alias = "KITTI", alias = "kitti")]
    KittiOdometry3x4,
    /// CSV with header `x,y,z,t`.
    #[serde(rename = "XYZT_CSV", alias = "XYZT", alias = "csv")]
    XyztCsv,
}

impl FromStr for PoseFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "kitti" | "kitti_odometry_3x4" => Ok(PoseFormat::KittiOdometry3x4),
            "xyzt" | "csv" | "xyzt_csv" => Ok(PoseFormat::XyztCsv),
            other => Err(format!("unknown pose format {other:?}")),
        }
    }
}

pub fn load_poses(path: &Path, format: PoseFormat) -> Result<Vec<Pose>> {
    match format {
        PoseFormat::KittiOdometry3x4 => parse_kitti(open(path)?, path, FRAME_PERIOD),
        PoseFormat::XyztCsv => read_xyzt(path),
    }
}

/// Parses KITTI odometry poses, stamping line `i` with `i * period` seconds.
/// Blank lines are skipped but still count towards line numbers.
pub fn parse_kitti(reader: impl BufRead, path: &Path, period: f64) -> Result<Vec<Pose>> {
    let mut poses = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line: i + 1,
            message,
        };
        let values = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 12 {
            return Err(bad(format!("expected 12 values, found {}", values.len())));
        }
        let pose = Pose::new(values[3], values[7], values[11], poses.len() as f64 * period);
        if !pose.is_valid() {
            return Err(bad("non-finite translation".into()));
        }
        poses.push(pose);
    }
    Ok(poses)
}

#[derive(Serialize, Deserialize)]
struct XyztRow {
    x: f64,
    y: f64,
    z: f64,
    t: f64,
}

fn read_xyzt(path: &Path) -> Result<Vec<Pose>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })?;
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "z", "t"] {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: "header must be x,y,z,t".into(),
        });
    }
    let mut poses = Vec::new();
    for (i, row) in rdr.deserialize::<XyztRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 2,
            message: e.to_string(),
        })?;
        let pose = Pose::new(row.x, row.y, row.z, row.t);
        if !pose.is_valid() {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 2,
                message: "non-finite coordinate or negative time".into(),
            });
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn write_xyzt(path: &Path, poses: &[Pose]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "x,y,z,t").map_err(io)?;
    for p in poses {
        // `{}` prints the shortest string that parses back to the same f64.
        writeln!(w, "{},{},{},{}", p.x, p.y, p.z, p.t).map_err(io)?;
    }
    finish(path, w)
}
