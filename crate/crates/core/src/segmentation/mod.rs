//! Supporting-plane extraction, edge weighting, graph partitioning and the
//! binding of 3D segments to 2D detections.

mod assign;
mod graph;
mod planes;
mod weights;

use serde::{Deserialize, Serialize};

pub use assign::{assign_segments_to_detections, overlap_ratio, SegmentedDetection};
pub use graph::{felzenszwalb, segment_graph};
pub use planes::{extract_supporting_planes, PlaneParams, SupportingPlane};
pub use weights::{assign_edge_weights, edge_weight};

use crate::geometry::{Point3, PointCloud};

/// A connected group of supervoxels with its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment3D {
    pub id: usize,
    pub supervoxel_ids: Vec<usize>,
    pub cloud: PointCloud,
    pub centroid: Point3,
    /// Set for segments made of supporting-plane supervoxels.
    pub plane_id: Option<usize>,
}

impl Segment3D {
    /// Returns `None` for an empty cloud.
    pub fn new(id: usize, supervoxel_ids: Vec<usize>, cloud: PointCloud) -> Option<Self> {
        let centroid = cloud.centroid()?;
        Some(Segment3D {
            id,
            supervoxel_ids,
            cloud,
            centroid,
            plane_id: None,
        })
    }

    pub fn is_plane(&self) -> bool {
        self.plane_id.is_some()
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}
