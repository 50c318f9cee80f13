//! Core geometric types: point clouds, rigid transforms, voxel-grid
//! downsampling, normal estimation and a k-d tree for exact nearest-neighbor
//! queries.

mod cloud;
mod kdtree;
mod normals;
mod pose;
mod voxel;

pub use cloud::{PointCloud, Rgb};
pub use kdtree::SpatialIndex;
pub use normals::{estimate_normals, pca_normal, NormalEstimate, SENSOR_FACING_AXIS};
pub use pose::{transform_cloud, Pose, Trajectory, TrajectoryEntry};
pub use voxel::{voxel_cell, voxel_downsample, VoxelCell};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Matrix3 = nalgebra::Matrix3<f64>;

/// Tolerance on `|n| - 1` for any normal stored in a cloud.
pub const UNIT_TOLERANCE: f64 = 1e-6;

pub fn build_spatial_index(cloud: &PointCloud) -> crate::Result<SpatialIndex> {
    SpatialIndex::build(cloud.points())
}

pub fn nearest_distance(index: &SpatialIndex, query: &Point3) -> f64 {
    index.nearest(query).1
}
