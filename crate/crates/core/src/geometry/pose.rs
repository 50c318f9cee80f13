use std::collections::BTreeMap;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{Matrix3, Point3, PointCloud, Vector3};
use crate::{Error, Result};

const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// Rigid camera-to-world transform `p_world = R p_camera + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    rotation: Rotation3<f64>,
    translation: Vector3,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3) -> Self {
        Pose {
            rotation: Rotation3::identity(),
            translation,
        }
    }

    /// Builds a pose from a 3x3 matrix, rejecting anything that is not a
    /// proper rotation to within 1e-9 per entry.
    pub fn from_matrix(rotation: Matrix3, translation: Vector3) -> Result<Self> {
        let gram = rotation.transpose() * rotation - Matrix3::identity();
        if gram.iter().any(|e| e.abs() > ORTHONORMAL_TOLERANCE) {
            return Err(Error::InvalidArgument("rotation is not orthonormal".into()));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOLERANCE {
            return Err(Error::InvalidArgument("rotation determinant is not +1".into()));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite translation".into()));
        }
        Ok(Pose {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            translation,
        })
    }

    pub fn from_rotation(rotation: Rotation3<f64>, translation: Vector3) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    /// Quaternion given as `(qx, qy, qz, qw)`; must already be unit length.
    pub fn from_quaternion(q: UnitQuaternion<f64>, translation: Vector3) -> Self {
        Pose {
            rotation: q.to_rotation_matrix(),
            translation,
        }
    }

    pub fn from_xyzw(qx: f64, qy: f64, qz: f64, qw: f64, translation: Vector3) -> Self {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(qw, qx, qy, qz));
        Pose::from_quaternion(q, translation)
    }

    /// Camera at `eye` looking at `target` with world `up`. Camera axes
    /// follow the pinhole convention: x right, y down, z forward.
    pub fn look_at(eye: Point3, target: Point3, up: Vector3) -> Result<Self> {
        let forward = target - eye;
        if forward.norm() < 1e-12 {
            return Err(Error::InvalidArgument("eye and target coincide".into()));
        }
        let forward = forward.normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-9 {
            return Err(Error::InvalidArgument("view direction parallel to up".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        Ok(Pose {
            rotation: Rotation3::from_matrix_unchecked(m),
            translation: eye.coords,
        })
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn matrix(&self) -> &Matrix3 {
        self.rotation.matrix()
    }

    pub fn translation(&self) -> &Vector3 {
        &self.translation
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&self.rotation)
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Pose {
        let r_inv = self.rotation.inverse();
        Pose {
            rotation: r_inv,
            translation: -(r_inv * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

pub fn transform_cloud(cloud: &PointCloud, pose: &Pose) -> PointCloud {
    let points = cloud.points().iter().map(|p| pose.transform_point(p)).collect();
    let normals = cloud
        .normals()
        .map(|ns| ns.iter().map(|n| pose.transform_vector(n)).collect());
    PointCloud::from_raw(
        points,
        cloud.colors().map(<[_]>::to_vec),
        normals,
        cloud.organized_shape(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub timestamp: f64,
    pub pose: Pose,
}

/// Camera poses keyed by keyframe id, timestamps strictly increasing with id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    entries: BTreeMap<u64, TrajectoryEntry>,
}

impl Trajectory {
    /// Keyframe ids are the ordinals of the given entries.
    pub fn from_sequence(entries: impl IntoIterator<Item = (f64, Pose)>) -> Result<Self> {
        Trajectory::from_map(
            entries
                .into_iter()
                .enumerate()
                .map(|(i, (timestamp, pose))| (i as u64, TrajectoryEntry { timestamp, pose }))
                .collect(),
        )
    }

    pub fn from_map(entries: BTreeMap<u64, TrajectoryEntry>) -> Result<Self> {
        let mut previous: Option<(u64, f64)> = None;
        for (&id, entry) in &entries {
            if !entry.timestamp.is_finite() {
                return Err(Error::Validation(format!(
                    "keyframe {id}: non-finite timestamp"
                )));
            }
            if let Some((prev_id, prev_t)) = previous {
                if entry.timestamp <= prev_t {
                    return Err(Error::Validation(format!(
                        "keyframe {id}: timestamp {} not after keyframe {prev_id} ({prev_t})",
                        entry.timestamp
                    )));
                }
            }
            previous = Some((id, entry.timestamp));
        }
        Ok(Trajectory { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, keyframe_id: u64) -> Option<&TrajectoryEntry> {
        self.entries.get(&keyframe_id)
    }

    pub fn pose(&self, keyframe_id: u64) -> Option<&Pose> {
        self.entries.get(&keyframe_id).map(|e| &e.pose)
    }

    pub fn contains(&self, keyframe_id: u64) -> bool {
        self.entries.contains_key(&keyframe_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &TrajectoryEntry)> {
        self.entries.iter().map(|(&id, e)| (id, e))
    }

    pub fn keyframe_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    /// Applies `correction` in the world frame to every pose:
    /// `pose' = correction ∘ pose`.
    pub fn left_multiplied(&self, correction: &Pose) -> Trajectory {
        Trajectory {
            entries: self
                .entries
                .iter()
                .map(|(&id, e)| {
                    (
                        id,
                        TrajectoryEntry {
                            timestamp: e.timestamp,
                            pose: correction.compose(&e.pose),
                        },
                    )
                })
                .collect(),
        }
    }
}
