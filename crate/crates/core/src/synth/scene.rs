use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frameio::CameraIntrinsics;
use crate::geometry::{Point3, Pose, Trajectory, Vector3};
use crate::{Error, Result};

/// A finite rectangle. `extent` runs along the in-plane axes `u` and `v`,
/// where `u` is a reference axis projected into the plane and turned by
/// `yaw_deg` about the normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    pub extent: [f64; 2],
    #[serde(default)]
    pub yaw_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `dimensions = [size_x, size_y, size_z]`.
    Box,
    /// `dimensions = [radius]`.
    Sphere,
    /// Vertical axis; `dimensions = [radius, height]`.
    Cylinder,
}

/// A primitive placed with its center at `position`, turned by `yaw_deg`
/// about the world z axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub dimensions: Vec<f64>,
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    pub class_name: String,
}

/// Camera path: `frames` positions spaced evenly by arc length along the
/// waypoint polyline, each looking at `look_at` with world z up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub waypoints: Vec<[f64; 3]>,
    pub look_at: [f64; 3],
    pub frames: usize,
    /// Seconds between consecutive frames.
    #[serde(default = "default_frame_interval")]
    pub frame_interval: f64,
}

fn default_frame_interval() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSpec {
    /// Probability that a visible object is not reported in a frame.
    pub dropout: f64,
    /// Each bbox coordinate moves by up to this many pixels.
    pub bbox_jitter_px: f64,
    pub score_range: [f64; 2],
    /// Objects covering fewer pixels in a frame count as not visible.
    pub min_visible_pixels: usize,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        DetectorSpec {
            dropout: 0.0,
            bbox_jitter_px: 0.0,
            score_range: [0.6, 0.95],
            min_visible_pixels: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default = "CameraIntrinsics::qvga")]
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub planes: Vec<PlaneSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    /// Standard deviation of additive depth noise, meters.
    #[serde(default)]
    pub depth_noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn v3(a: [f64; 3]) -> Vector3 {
    Vector3::new(a[0], a[1], a[2])
}

fn p3(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

fn finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl PlaneSpec {
    pub fn center(&self) -> Point3 {
        p3(self.center)
    }

    pub fn unit_normal(&self) -> Vector3 {
        v3(self.normal).normalize()
    }

    /// In-plane axes `(u, v)`.
    pub fn axes(&self) -> (Vector3, Vector3) {
        let n = self.unit_normal();
        let reference = if n.z.abs() < 0.9 { Vector3::z() } else { Vector3::x() };
        let u0 = (reference - n * reference.dot(&n)).normalize();
        let v0 = n.cross(&u0);
        let (s, c) = self.yaw_deg.to_radians().sin_cos();
        (u0 * c + v0 * s, v0 * c - u0 * s)
    }

    fn is_horizontal(&self) -> bool {
        self.unit_normal().z.abs() > 0.99
    }

    /// Whether the vertical line through `p` crosses the rectangle.
    fn covers_xy(&self, p: &Point3) -> bool {
        let (u, v) = self.axes();
        let n = self.unit_normal();
        // drop p onto the plane along z
        let t = n.dot(&(self.center() - p)) / n.z;
        let on = p + Vector3::z() * t - self.center();
        on.dot(&u).abs() <= self.extent[0] / 2.0 + 1e-9 && on.dot(&v).abs() <= self.extent[1] / 2.0 + 1e-9
    }
}

impl ObjectSpec {
    pub fn center(&self) -> Point3 {
        p3(self.position)
    }

    /// Half of the vertical size.
    pub fn half_height(&self) -> f64 {
        match self.shape {
            Shape::Box => self.dimensions[2] / 2.0,
            Shape::Sphere => self.dimensions[0],
            Shape::Cylinder => self.dimensions[1] / 2.0,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let expected = match self.shape {
            Shape::Box => 3,
            Shape::Sphere => 1,
            Shape::Cylinder => 2,
        };
        let bad = |m: String| Err(Error::Validation(format!("objects[{index}]: {m}")));
        if self.dimensions.len() != expected {
            return bad(format!(
                "{:?} takes {expected} dimensions, got {}",
                self.shape,
                self.dimensions.len()
            ));
        }
        if !self.dimensions.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return bad("dimensions must be positive".into());
        }
        if !finite(&self.position) || !self.yaw_deg.is_finite() {
            return bad("non-finite pose".into());
        }
        if self.class_name.trim().is_empty() {
            return bad("empty class_name".into());
        }
        Ok(())
    }
}

impl SceneSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        for (i, p) in self.planes.iter().enumerate() {
            let bad = |m: &str| Err(Error::Validation(format!("planes[{i}]: {m}")));
            if !finite(&p.center) || !finite(&p.normal) || !p.yaw_deg.is_finite() {
                return bad("non-finite value");
            }
            if v3(p.normal).norm() < 1e-9 {
                return bad("zero normal");
            }
            if !(p.extent[0] > 0.0 && p.extent[1] > 0.0) {
                return bad("extent must be positive");
            }
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.validate(i)?;
            let bottom = o.center().z - o.half_height();
            let supported = self.planes.iter().any(|p| {
                if !p.is_horizontal() || !p.covers_xy(&o.center()) {
                    return false;
                }
                let n = p.unit_normal();
                let plane_z = p.center[2] - (n.x * (o.position[0] - p.center[0]) + n.y * (o.position[1] - p.center[1])) / n.z;
                bottom >= plane_z - 1e-6
            });
            if !supported {
                return Err(Error::Validation(format!(
                    "objects[{i}] ({}) does not rest on or above a horizontal plane",
                    o.class_name
                )));
            }
        }
        let t = &self.trajectory;
        if t.frames == 0 {
            return Err(Error::Validation("trajectory.frames must be at least 1".into()));
        }
        if t.waypoints.is_empty() {
            return Err(Error::Validation("trajectory.waypoints is empty".into()));
        }
        if !t.waypoints.iter().all(|w| finite(w)) || !finite(&t.look_at) {
            return Err(Error::Validation("trajectory: non-finite coordinate".into()));
        }
        if !(t.frame_interval > 0.0 && t.frame_interval.is_finite()) {
            return Err(Error::Validation("trajectory.frame_interval must be positive".into()));
        }
        let d = &self.detector;
        if !(0.0..=1.0).contains(&d.dropout) {
            return Err(Error::Validation(format!("detector.dropout {} outside [0, 1]", d.dropout)));
        }
        if !(d.bbox_jitter_px >= 0.0 && d.bbox_jitter_px.is_finite()) {
            return Err(Error::Validation("detector.bbox_jitter_px must be non-negative".into()));
        }
        let [lo, hi] = d.score_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Validation(format!(
                "detector.score_range [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        if !(self.depth_noise_std >= 0.0 && self.depth_noise_std.is_finite()) {
            return Err(Error::Validation("depth_noise_std must be non-negative".into()));
        }
        Ok(())
    }

    /// Distinct class names in sorted order; a name's position is its id.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.objects.iter().map(|o| o.class_name.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn class_id(&self, name: &str) -> Option<u32> {
        self.class_names().iter().position(|n| n == name).map(|i| i as u32)
    }

    /// Camera positions spaced evenly by arc length along the waypoints.
    pub fn camera_positions(&self) -> Vec<Point3> {
        let t = &self.trajectory;
        let pts: Vec<Point3> = t.waypoints.iter().map(|w| p3(*w)).collect();
        if t.frames == 1 || pts.len() == 1 {
            return vec![pts[0]; t.frames];
        }
        let lengths: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
        let total: f64 = lengths.iter().sum();
        (0..t.frames)
            .map(|i| {
                let mut s = total * i as f64 / (t.frames - 1) as f64;
                for (k, &len) in lengths.iter().enumerate() {
                    if s <= len || k == lengths.len() - 1 {
                        let a = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                        return pts[k] + (pts[k + 1] - pts[k]) * a;
                    }
                    s -= len;
                }
                unreachable!("loop returns on the last segment")
            })
            .collect()
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let target = p3(self.trajectory.look_at);
        let poses = self
            .camera_positions()
            .into_iter()
            .map(|eye| Pose::look_at(eye, target, Vector3::z()))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::from_sequence(
            poses
                .into_iter()
                .enumerate()
                .map(|(i, p)| (i as f64 * self.trajectory.frame_interval, p)),
        )
    }
}
