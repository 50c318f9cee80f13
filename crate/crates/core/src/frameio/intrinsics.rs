use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;
use crate::{Error, Result};

fn default_depth_scale() -> f64 {
    0.001
}

/// Pinhole intrinsics plus the raw-depth-unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Meters per raw depth unit.
    #[serde(default = "default_depth_scale")]
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale: default_depth_scale(),
        };
        k.validate()?;
        Ok(k)
    }

    /// 320x240 camera with half the focal length of a Kinect-class sensor.
    pub fn qvga() -> Self {
        CameraIntrinsics {
            fx: 262.5,
            fy: 262.5,
            cx: 159.5,
            cy: 119.5,
            width: 320,
            height: 240,
            depth_scale: 0.001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.depth_scale]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("intrinsics: non-finite value".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Validation("intrinsics: fx and fy must be positive".into()));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(Error::Validation("intrinsics: cx outside [0, width)".into()));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::Validation("intrinsics: cy outside [0, height)".into()));
        }
        if !(self.depth_scale > 0.0) {
            return Err(Error::Validation("intrinsics: depth_scale must be positive".into()));
        }
        Ok(())
    }

    /// Pixel coordinates `(u, v)` of a camera-frame point; `None` behind the
    /// camera.
    pub fn project(&self, p: &Point3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Camera-frame point at depth `z` through pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Point3 {
        Point3::new(z * (u - self.cx) / self.fx, z * (v - self.cy) / self.fy, z)
    }
}

pub fn load_intrinsics(path: impl AsRef<Path>) -> Result<CameraIntrinsics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let k: CameraIntrinsics = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    k.validate()?;
    Ok(k)
}

pub fn save_intrinsics(path: impl AsRef<Path>, k: &CameraIntrinsics) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(k).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 4.0, 1.0, 4, 4).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 3.9, 0.0, 4, 4).is_ok());
        CameraIntrinsics::qvga().validate().unwrap();
    }

    #[test]
    fn json_defaults_depth_scale() {
        let k: CameraIntrinsics =
            serde_json::from_str(r#"{"fx":500,"fy":500,"cx":319.5,"cy":239.5,"width":640,"height":480}"#)
                .unwrap();
        assert_eq!(k.depth_scale, 0.001);
        assert!(serde_json::from_str::<CameraIntrinsics>(
            r#"{"fx":500,"fy":500,"cx":1,"cy":1,"width":4,"height":4,"focal":3}"#
        )
        .is_err());
    }
}
