use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CameraIntrinsics;
use crate::{Error, Result};

/// Axis-aligned pixel box, serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl From<[f64; 4]> for BBox {
    fn from([xmin, ymin, xmax, ymax]: [f64; 4]) -> Self {
        BBox {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.xmin, b.ymin, b.xmax, b.ymax]
    }
}

impl BBox {
    pub fn is_valid(&self) -> bool {
        [self.xmin, self.ymin, self.xmax, self.ymax]
            .iter()
            .all(|v| v.is_finite())
            && self.xmin < self.xmax
            && self.ymin < self.ymax
    }

    /// Inclusive containment test.
    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.xmin && u <= self.xmax && v >= self.ymin && v <= self.ymax
    }

    /// Clamped to the pixel area `[0, width-1] x [0, height-1]`.
    pub fn clamped(&self, k: &CameraIntrinsics) -> BBox {
        let w = (k.width.max(1) - 1) as f64;
        let h = (k.height.max(1) - 1) as f64;
        BBox {
            xmin: self.xmin.clamp(0.0, w),
            ymin: self.ymin.clamp(0.0, h),
            xmax: self.xmax.clamp(0.0, w),
            ymax: self.ymax.clamp(0.0, h),
        }
    }
}

/// A 2D object proposal with class and detector confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub keyframe_id: u64,
    pub class_id: u32,
    pub class_name: String,
    pub score: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("score {} outside [0, 1]", self.score));
        }
        if !self.bbox.is_valid() {
            return Err(format!("invalid bbox {:?}", <[f64; 4]>::from(self.bbox)));
        }
        Ok(())
    }
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, path)
}

/// Parses JSON Lines detections, validates each, and sorts stably by
/// keyframe id.
pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.trim().is_empty() {
            continue;
        }
        let det: Detection = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        det.validate().map_err(|m| {
            Error::Validation(format!("{}:{line_no}: {m}", path.display()))
        })?;
        out.push(det);
    }
    out.sort_by_key(|d| d.keyframe_id);
    Ok(out)
}

pub fn write_detections(detections: &[Detection]) -> String {
    let mut out = String::new();
    for d in detections {
        let _ = writeln!(out, "{}", serde_json::to_string(d).expect("detection serializes"));
    }
    out
}

pub fn save_detections(path: impl AsRef<Path>, detections: &[Detection]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_detections(detections)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use super::*;

    fn parse(text: &str) -> Result<Vec<Detection>> {
        parse_detections(text, &PathBuf::from("d.jsonl"))
    }

    #[test]
    fn single_detection() {
        let d = parse(
            r#"{"keyframe_id":0,"class_id":62,"class_name":"monitor","score":0.9,"bbox":[10,10,100,80]}"#,
        )
        .unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].class_name, "monitor");
        assert_eq!(d[0].bbox, BBox::from([10.0, 10.0, 100.0, 80.0]));
    }

    #[test]
    fn score_and_bbox_validated() {
        let e = parse(
            r#"{"keyframe_id":0,"class_id":1,"class_name":"a","score":1.5,"bbox":[0,0,1,1]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Validation(_)), "{e}");
        let e = parse(
            r#"{"keyframe_id":0,"class_id":1,"class_name":"a","score":0.5,"bbox":[5,0,1,1]}"#,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Validation(_)), "{e}");
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("\n\n").unwrap().is_empty());
    }

    #[test]
    fn sorted_by_keyframe_stably() {
        let text = [
            r#"{"keyframe_id":2,"class_id":0,"class_name":"a","score":0.1,"bbox":[0,0,1,1]}"#,
            r#"{"keyframe_id":1,"class_id":0,"class_name":"b","score":0.2,"bbox":[0,0,1,1]}"#,
            r#"{"keyframe_id":2,"class_id":0,"class_name":"c","score":0.3,"bbox":[0,0,1,1]}"#,
            r#"{"keyframe_id":1,"class_id":0,"class_name":"d","score":0.4,"bbox":[0,0,1,1]}"#,
        ]
        .join("\n");
        let names: Vec<String> = parse(&text).unwrap().into_iter().map(|d| d.class_name).collect();
        assert_eq!(names, ["b", "d", "a", "c"]);
    }

    #[test]
    fn write_parse_round_trip() {
        let d = parse(
            r#"{"keyframe_id":3,"class_id":7,"class_name":"cup","score":0.75,"bbox":[1.5,2,30,40.25]}"#,
        )
        .unwrap();
        assert_eq!(parse(&write_detections(&d)).unwrap(), d);
    }

    #[test]
    fn clamping() {
        let k = CameraIntrinsics::qvga();
        let b = BBox::from([-5.0, 10.0, 400.0, 300.0]).clamped(&k);
        assert_eq!(<[f64; 4]>::from(b), [0.0, 10.0, 319.0, 239.0]);
    }
}
