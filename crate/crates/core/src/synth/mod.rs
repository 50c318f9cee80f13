//! Synthetic scenes with exact ground truth: analytic primitives rendered
//! into depth frames, simulated detections, and inventory scoring.

mod detector;
mod render;
mod scene;
mod score;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use detector::simulate_detections;
pub use render::{render_depth, PixelLabel, Rendering, PLANE_LABEL_BASE};
pub use scene::{DetectorSpec, ObjectSpec, PlaneSpec, SceneSpec, Shape, TrajectorySpec};
pub use score::{score_inventory, ClassScore, InventoryScore, MATCH_DISTANCE};

use crate::frameio::{
    back_project, frame_file_name, save_detections, save_intrinsics, save_trajectory, write_pgm16,
    BBox, CameraIntrinsics, DepthImage, Detection, KeyframeRecord,
};
use crate::geometry::Trajectory;
use crate::pipeline::{DETECTIONS_FILE, FRAMES_DIR, INTRINSICS_FILE, TRAJECTORY_FILE};
use crate::{Error, Result};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const LABELS_DIR: &str = "labels";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub object_id: u32,
    pub class_id: u32,
    pub class_name: String,
    pub shape: Shape,
    /// Center of the primitive, world frame.
    pub centroid: [f64; 3],
    /// Frames in which the object covers enough pixels to be detected.
    pub visible_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPlane {
    pub plane_id: u32,
    pub center: [f64; 3],
    pub normal: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub object_id: u32,
    /// Tight box around the object's visible pixels.
    pub bbox: BBox,
    pub pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFrame {
    pub keyframe_id: u64,
    pub visible: Vec<VisibleObject>,
}

/// Per-pixel labels live in `labels/frame_<id>.pgm`, encoded as described
/// for [`PixelLabel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub classes: Vec<String>,
    pub objects: Vec<GroundTruthObject>,
    pub planes: Vec<GroundTruthPlane>,
    pub frames: Vec<GroundTruthFrame>,
}

impl GroundTruth {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Objects seen in at least one frame.
    pub fn visible_objects(&self) -> impl Iterator<Item = &GroundTruthObject> {
        self.objects.iter().filter(|o| o.visible_frames > 0)
    }
}

/// Everything a scene produces, in memory.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub intrinsics: CameraIntrinsics,
    pub trajectory: Trajectory,
    pub renderings: Vec<Rendering>,
    pub truth: GroundTruth,
    pub detections: Vec<Detection>,
}

impl SyntheticDataset {
    /// Back-projected frames paired with their detections.
    pub fn keyframes(&self) -> Result<Vec<KeyframeRecord>> {
        self.trajectory
            .iter()
            .zip(&self.renderings)
            .map(|((kf, entry), r)| {
                let cloud = back_project(&r.depth, &self.intrinsics)?;
                let dets = self
                    .detections
                    .iter()
                    .filter(|d| d.keyframe_id == kf)
                    .cloned()
                    .collect();
                KeyframeRecord::new(kf, entry.pose, cloud, dets)
            })
            .collect()
    }
}

fn visible_objects(r: &Rendering, min_pixels: usize) -> Vec<VisibleObject> {
    let mut boxes: std::collections::BTreeMap<u32, (usize, [usize; 4])> = Default::default();
    for v in 0..r.depth.height {
        for u in 0..r.depth.width {
            if let PixelLabel::Object(id) = r.label(u, v) {
                let e = boxes.entry(id).or_insert((0, [u, v, u, v]));
                e.0 += 1;
                e.1 = [e.1[0].min(u), e.1[1].min(v), e.1[2].max(u), e.1[3].max(v)];
            }
        }
    }
    boxes
        .into_iter()
        .filter(|(_, (n, _))| *n >= min_pixels)
        .map(|(object_id, (pixels, b))| VisibleObject {
            object_id,
            // pixel centres sit on integer coordinates, so the box covers half a pixel more
            bbox: BBox {
                xmin: b[0] as f64 - 0.5,
                ymin: b[1] as f64 - 0.5,
                xmax: b[2] as f64 + 0.5,
                ymax: b[3] as f64 + 0.5,
            },
            pixels,
        })
        .collect()
}

/// Renders every frame of the scene and simulates its detections.
pub fn generate(scene: &SceneSpec) -> Result<SyntheticDataset> {
    scene.validate()?;
    let trajectory = scene.trajectory()?;
    let intrinsics = scene.intrinsics;
    let classes = scene.class_names();
    let mut renderings = Vec::with_capacity(trajectory.len());
    let mut frames = Vec::with_capacity(trajectory.len());
    for (kf, entry) in trajectory.iter() {
        let mut rng = detector::frame_rng(scene.seed, kf, detector::DEPTH_STREAM);
        let r = render_depth(scene, &entry.pose, &intrinsics, scene.depth_noise_std, &mut rng);
        frames.push(GroundTruthFrame {
            keyframe_id: kf,
            visible: visible_objects(&r, scene.detector.min_visible_pixels),
        });
        renderings.push(r);
    }
    let objects = scene
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| GroundTruthObject {
            object_id: i as u32,
            class_id: scene.class_id(&o.class_name).expect("class list built from objects"),
            class_name: o.class_name.clone(),
            shape: o.shape,
            centroid: o.position,
            visible_frames: frames
                .iter()
                .filter(|f| f.visible.iter().any(|v| v.object_id == i as u32))
                .count(),
        })
        .collect();
    let planes = scene
        .planes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = p.unit_normal();
            GroundTruthPlane {
                plane_id: i as u32,
                center: p.center,
                normal: [n.x, n.y, n.z],
            }
        })
        .collect();
    let truth = GroundTruth {
        classes,
        objects,
        planes,
        frames,
    };
    let detections = simulate_detections(&truth, &scene.detector, scene.seed);
    Ok(SyntheticDataset {
        intrinsics,
        trajectory,
        renderings,
        truth,
        detections,
    })
}

/// Writes a complete dataset directory plus ground truth for the scene.
pub fn write_dataset(scene: &SceneSpec, out_dir: impl AsRef<Path>) -> Result<SyntheticDataset> {
    let out = out_dir.as_ref();
    let data = generate(scene)?;
    let frames_dir = out.join(FRAMES_DIR);
    let labels_dir = out.join(LABELS_DIR);
    for dir in [&frames_dir, &labels_dir] {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_intrinsics(out.join(INTRINSICS_FILE), &data.intrinsics)?;
    save_trajectory(out.join(TRAJECTORY_FILE), &data.trajectory)?;
    save_detections(out.join(DETECTIONS_FILE), &data.detections)?;
    data.truth.save(out.join(GROUND_TRUTH_FILE))?;
    for (kf, r) in data.trajectory.keyframe_ids().zip(&data.renderings) {
        write_pgm16(frames_dir.join(frame_file_name(kf)), &r.depth)?;
        let labels = DepthImage {
            width: r.depth.width,
            height: r.depth.height,
            data: r.labels.iter().map(|l| l.encode()).collect(),
        };
        write_pgm16(labels_dir.join(frame_file_name(kf)), &labels)?;
    }
    Ok(data)
}

#[cfg(test)]
mod tests;
