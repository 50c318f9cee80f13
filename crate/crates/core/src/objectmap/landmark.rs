use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::ClassRegistry;
use crate::geometry::{
    transform_cloud, voxel_downsample, Point3, PointCloud, SpatialIndex, Trajectory, Vector3,
};
use crate::{Error, Result};

/// One associated detection: the camera-frame segment and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentObservation {
    pub keyframe_id: u64,
    pub class_id: u32,
    pub score: f64,
    pub cloud: Arc<PointCloud>,
}

/// A mapped object instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectLandmark {
    id: u64,
    segments: Vec<SegmentObservation>,
    pose_indices: Vec<u64>,
    s: Vec<f64>,
    model: PointCloud,
    model_centroid: Point3,
    /// Running sum and count of every stored segment point in world frame.
    point_sum: Vector3,
    point_count: usize,
    #[serde(skip)]
    index: OnceLock<Arc<SpatialIndex>>,
}

impl PartialEq for ObjectLandmark {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.segments == other.segments
            && self.pose_indices == other.pose_indices
            && self.s == other.s
            && self.model == other.model
            && self.model_centroid == other.model_centroid
    }
}

impl ObjectLandmark {
    pub(crate) fn new(id: u64, n_classes: usize) -> Self {
        ObjectLandmark {
            id,
            segments: Vec::new(),
            pose_indices: Vec::new(),
            s: vec![0.0; n_classes],
            model: PointCloud::default(),
            model_centroid: Point3::origin(),
            point_sum: Vector3::zeros(),
            point_count: 0,
            index: OnceLock::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn segments(&self) -> &[SegmentObservation] {
        &self.segments
    }

    /// Distinct keyframes this object was observed in, in first-seen order.
    pub fn pose_indices(&self) -> &[u64] {
        &self.pose_indices
    }

    /// Accumulated per-class detector scores.
    pub fn class_scores(&self) -> &[f64] {
        &self.s
    }

    /// Number of associated observations.
    pub fn n(&self) -> usize {
        self.segments.len()
    }

    /// World-frame model, one point per occupied 5 mm cell.
    pub fn model(&self) -> &PointCloud {
        &self.model
    }

    /// Centroid of all stored segment points placed in the world frame.
    pub fn model_centroid(&self) -> Point3 {
        self.model_centroid
    }

    /// Lazily built k-d tree over the model.
    pub fn model_index(&self) -> Arc<SpatialIndex> {
        self.index
            .get_or_init(|| {
                Arc::new(SpatialIndex::build(self.model.points()).expect("landmark model is never empty"))
            })
            .clone()
    }

    pub fn label(&self, registry: &ClassRegistry) -> Result<(u32, String)> {
        object_label(self, registry)
    }

    pub fn confidence(&self) -> Result<f64> {
        object_confidence(self)
    }

    /// Best class id by accumulated score, ties to the lowest id.
    pub fn best_class(&self) -> Option<u32> {
        if self.segments.is_empty() {
            return None;
        }
        let mut best = 0;
        for (c, &v) in self.s.iter().enumerate() {
            if v > self.s[best] {
                best = c;
            }
        }
        Some(best as u32)
    }

    pub(crate) fn push(
        &mut self,
        observation: SegmentObservation,
        trajectory: &Trajectory,
        resolution: f64,
    ) -> Result<()> {
        let pose = trajectory.pose(observation.keyframe_id).ok_or_else(|| {
            Error::Consistency(format!(
                "keyframe {} has no pose in the trajectory",
                observation.keyframe_id
            ))
        })?;
        let world = transform_cloud(&observation.cloud, pose);
        let model = if self.model.is_empty() {
            voxel_downsample(&world, resolution)?
        } else {
            voxel_downsample(&PointCloud::concat([&self.model, &world]), resolution)?
        };
        self.model = model;
        self.point_sum += world.points().iter().fold(Vector3::zeros(), |a, p| a + p.coords);
        self.point_count += world.len();
        self.model_centroid = Point3::from(self.point_sum / self.point_count as f64);
        self.index = OnceLock::new();

        self.s[observation.class_id as usize] += observation.score;
        if !self.pose_indices.contains(&observation.keyframe_id) {
            self.pose_indices.push(observation.keyframe_id);
        }
        self.segments.push(observation);
        Ok(())
    }

    /// Re-places every stored segment under `trajectory`, replaying the
    /// original insertion order. Scores and counts are untouched.
    pub(crate) fn rebuild(&mut self, trajectory: &Trajectory, resolution: f64) -> Result<()> {
        let mut fresh = ObjectLandmark::new(self.id, self.s.len());
        for obs in &self.segments {
            fresh.push(obs.clone(), trajectory, resolution)?;
        }
        self.model = fresh.model;
        self.model_centroid = fresh.model_centroid;
        self.point_sum = fresh.point_sum;
        self.point_count = fresh.point_count;
        self.index = OnceLock::new();
        Ok(())
    }

    pub(crate) fn check(&self, registry: &ClassRegistry, trajectory: &Trajectory) -> Result<()> {
        let bad = |m: String| Err(Error::Consistency(format!("landmark {}: {m}", self.id)));
        if self.segments.is_empty() {
            return bad("no observations".into());
        }
        if self.s.len() != registry.len() {
            return bad(format!("{} class scores for {} classes", self.s.len(), registry.len()));
        }
        let mut sums = vec![0.0; self.s.len()];
        let mut kfs = Vec::new();
        for obs in &self.segments {
            registry.check(obs.class_id)?;
            if !trajectory.contains(obs.keyframe_id) {
                return bad(format!("keyframe {} missing from trajectory", obs.keyframe_id));
            }
            sums[obs.class_id as usize] += obs.score;
            if !kfs.contains(&obs.keyframe_id) {
                kfs.push(obs.keyframe_id);
            }
        }
        if sums.iter().zip(&self.s).any(|(a, b)| (a - b).abs() > 1e-9) {
            return bad("class scores disagree with observations".into());
        }
        if kfs != self.pose_indices {
            return bad("pose indices disagree with observations".into());
        }
        Ok(())
    }
}

/// Class with the highest accumulated score; ties go to the lowest class id.
pub fn object_label(landmark: &ObjectLandmark, registry: &ClassRegistry) -> Result<(u32, String)> {
    let class_id = landmark.best_class().ok_or(Error::UndefinedLabel)?;
    let name = registry
        .name(class_id)
        .ok_or_else(|| Error::Registry(format!("unknown class id {class_id}")))?;
    Ok((class_id, name.to_owned()))
}

/// `max_c s_c / n`.
pub fn object_confidence(landmark: &ObjectLandmark) -> Result<f64> {
    let best = landmark.best_class().ok_or(Error::UndefinedLabel)?;
    Ok(landmark.s[best as usize] / landmark.n() as f64)
}
