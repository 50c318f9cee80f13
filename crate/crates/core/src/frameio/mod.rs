//! Dataset ingestion and export.
//!
//! | artifact     | format                                                   |
//! |--------------|----------------------------------------------------------|
//! | trajectory   | TUM text, `timestamp tx ty tz qx qy qz qw` per line       |
//! | depth        | binary 16-bit PGM (`P5`, maxval 65535, big-endian)        |
//! | clouds       | PLY, `ascii` or `binary_little_endian`                    |
//! | detections   | JSON Lines, one detection object per line                 |
//! | intrinsics   | JSON `{fx, fy, cx, cy, width, height, depth_scale}`       |
//! | inventory    | JSON `{objects: [...], class_counts: {...}}`              |

mod depth;
mod detections;
mod intrinsics;
mod inventory;
mod ply;
mod trajectory;

pub use depth::{back_project, load_depth_frame, read_pgm16, write_pgm16, DepthImage};
pub use detections::{load_detections, parse_detections, save_detections, write_detections, BBox, Detection};
pub use intrinsics::{load_intrinsics, save_intrinsics, CameraIntrinsics};
pub use inventory::{
    build_inventory, export_inventory, load_inventory, save_inventory, Inventory, InventoryObject,
};
pub use ply::{
    load_point_cloud, read_ply, read_ply_from, save_point_cloud, write_ply_to, ExtraAttributes,
    PlyCloud, PlyEncoding,
};
pub use trajectory::{load_trajectory, parse_trajectory, save_trajectory, write_trajectory};

use crate::geometry::{PointCloud, Pose};

/// One keyframe's worth of pipeline input.
#[derive(Debug, Clone)]
pub struct KeyframeRecord {
    pub keyframe_id: u64,
    pub pose: Pose,
    /// Camera-frame, organized cloud.
    pub cloud: PointCloud,
    pub detections: Vec<Detection>,
}

impl KeyframeRecord {
    pub fn new(
        keyframe_id: u64,
        pose: Pose,
        cloud: PointCloud,
        detections: Vec<Detection>,
    ) -> crate::Result<Self> {
        if let Some(d) = detections.iter().find(|d| d.keyframe_id != keyframe_id) {
            return Err(crate::Error::Validation(format!(
                "detection for keyframe {} in record for keyframe {keyframe_id}",
                d.keyframe_id
            )));
        }
        Ok(KeyframeRecord {
            keyframe_id,
            pose,
            cloud,
            detections,
        })
    }
}

/// File name of a keyframe's depth raster inside `frames/`.
pub fn frame_file_name(keyframe_id: u64) -> String {
    format!("frame_{keyframe_id}.pgm")
}
