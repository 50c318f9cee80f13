use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{Pose, Trajectory, TrajectoryEntry, Vector3};
use crate::{Error, Result};

const QUATERNION_TOLERANCE: f64 = 1e-3;

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

/// Parses TUM trajectory text. Keyframe ids are data-line ordinals; `path`
/// is only used for error messages.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<Trajectory> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut entries = BTreeMap::new();
    let mut last_timestamp = f64::NEG_INFINITY;
    for (line_no, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(err(
                line_no,
                format!("expected 8 fields (timestamp tx ty tz qx qy qz qw), found {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 8];
        for (v, f) in values.iter_mut().zip(&fields) {
            *v = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line_no, format!("invalid number '{f}'")))?;
        }
        let [t, tx, ty, tz, qx, qy, qz, qw] = values;
        let norm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
        if (norm - 1.0).abs() > QUATERNION_TOLERANCE {
            return Err(err(line_no, format!("quaternion norm {norm} is not 1")));
        }
        if t <= last_timestamp {
            return Err(err(line_no, format!("timestamp {t} does not increase")));
        }
        last_timestamp = t;
        let pose = Pose::from_xyzw(qx, qy, qz, qw, Vector3::new(tx, ty, tz));
        let id = entries.len() as u64;
        entries.insert(id, TrajectoryEntry { timestamp: t, pose });
    }
    Trajectory::from_map(entries)
}

/// TUM text for a trajectory. Entries are written in keyframe order, so ids
/// survive a round trip only when they are dense from zero.
pub fn write_trajectory(trajectory: &Trajectory) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for (_, entry) in trajectory.iter() {
        let t = entry.pose.translation();
        let q = entry.pose.quaternion();
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            entry.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        );
    }
    out
}

pub fn save_trajectory(path: impl AsRef<Path>, trajectory: &Trajectory) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_trajectory(trajectory)).map_err(|e| Error::io(path, e))
}
