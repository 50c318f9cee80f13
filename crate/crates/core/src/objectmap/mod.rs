//! The semantic map: object landmarks with point-cloud models and
//! accumulated class confidences, plus the non-object background clouds.
//!
//! All stored clouds are kept in their keyframe's camera frame, so a
//! trajectory correction only needs to re-place them.

mod landmark;
mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use landmark::{object_confidence, object_label, ObjectLandmark, SegmentObservation};
pub use registry::ClassRegistry;

use crate::geometry::{
    transform_cloud, voxel_cell, voxel_downsample, PointCloud, Trajectory, VoxelCell,
};
use crate::segmentation::SegmentedDetection;
use crate::{Error, Result};

/// Voxel size of object models and of the exported object cloud.
pub const OBJECT_RESOLUTION: f64 = 0.005;
/// Voxel size of the exported non-object cloud.
pub const NONOBJECT_RESOLUTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticMap {
    registry: ClassRegistry,
    trajectory: Trajectory,
    landmarks: BTreeMap<u64, ObjectLandmark>,
    nonobject_clouds: BTreeMap<u64, Arc<PointCloud>>,
    next_landmark_id: u64,
}

/// Output of [`SemanticMap::generate_map`]. Per-point attribute vectors run
/// parallel to `objects`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMap {
    pub objects: PointCloud,
    pub class_ids: Vec<u32>,
    pub object_ids: Vec<u64>,
    pub confidences: Vec<f64>,
    pub nonobjects: PointCloud,
}

impl SemanticMap {
    pub fn new(registry: ClassRegistry, trajectory: Trajectory) -> Self {
        SemanticMap {
            registry,
            trajectory,
            landmarks: BTreeMap::new(),
            nonobject_clouds: BTreeMap::new(),
            next_landmark_id: 0,
        }
    }

    pub fn registry(&self) -> &ClassRegistry {
        &self.registry
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn landmarks(&self) -> impl ExactSizeIterator<Item = &ObjectLandmark> {
        self.landmarks.values()
    }

    pub fn landmark(&self, id: u64) -> Option<&ObjectLandmark> {
        self.landmarks.get(&id)
    }

    pub fn landmark_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.landmarks.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// Background clouds per keyframe, camera frame.
    pub fn nonobject_clouds(&self) -> &BTreeMap<u64, Arc<PointCloud>> {
        &self.nonobject_clouds
    }

    /// Creates a landmark from a detection's camera-frame segment.
    pub fn insert_object(&mut self, seg_det: &SegmentedDetection, keyframe_id: u64) -> Result<u64> {
        let d = &seg_det.detection;
        self.insert_cloud(d.class_id, d.score, keyframe_id, &seg_det.segment.cloud)
    }

    /// Adds a detection's camera-frame segment to an existing landmark.
    pub fn update_object(
        &mut self,
        landmark_id: u64,
        seg_det: &SegmentedDetection,
        keyframe_id: u64,
    ) -> Result<()> {
        let d = &seg_det.detection;
        self.update_cloud(landmark_id, d.class_id, d.score, keyframe_id, &seg_det.segment.cloud)
    }

    pub fn insert_cloud(
        &mut self,
        class_id: u32,
        score: f64,
        keyframe_id: u64,
        cloud: &PointCloud,
    ) -> Result<u64> {
        let observation = self.observation(class_id, score, keyframe_id, cloud)?;
        let id = self.next_landmark_id;
        let mut lm = ObjectLandmark::new(id, self.registry.len());
        lm.push(observation, &self.trajectory, OBJECT_RESOLUTION)?;
        self.landmarks.insert(id, lm);
        self.next_landmark_id += 1;
        Ok(id)
    }

    pub fn update_cloud(
        &mut self,
        landmark_id: u64,
        class_id: u32,
        score: f64,
        keyframe_id: u64,
        cloud: &PointCloud,
    ) -> Result<()> {
        if !self.landmarks.contains_key(&landmark_id) {
            return Err(Error::NotFound(landmark_id));
        }
        let observation = self.observation(class_id, score, keyframe_id, cloud)?;
        let lm = self.landmarks.get_mut(&landmark_id).expect("checked above");
        lm.push(observation, &self.trajectory, OBJECT_RESOLUTION)
    }

    fn observation(
        &self,
        class_id: u32,
        score: f64,
        keyframe_id: u64,
        cloud: &PointCloud,
    ) -> Result<SegmentObservation> {
        self.registry.check(class_id)?;
        if !(score.is_finite() && score >= 0.0) {
            return Err(Error::InvalidArgument(format!("detection score {score}")));
        }
        if cloud.is_empty() {
            return Err(Error::InvalidArgument("empty segment".into()));
        }
        self.require_pose(keyframe_id)?;
        Ok(SegmentObservation {
            keyframe_id,
            class_id,
            score,
            cloud: Arc::new(voxel_downsample(cloud, OBJECT_RESOLUTION)?),
        })
    }

    /// Stores the points of a keyframe not claimed by any object. Replaces
    /// any cloud previously stored for that keyframe.
    pub fn set_nonobject_cloud(&mut self, keyframe_id: u64, cloud: &PointCloud) -> Result<()> {
        self.require_pose(keyframe_id)?;
        let stored = if cloud.is_empty() {
            PointCloud::default()
        } else {
            voxel_downsample(cloud, OBJECT_RESOLUTION)?
        };
        self.nonobject_clouds.insert(keyframe_id, Arc::new(stored));
        Ok(())
    }

    fn require_pose(&self, keyframe_id: u64) -> Result<()> {
        if self.trajectory.contains(keyframe_id) {
            Ok(())
        } else {
            Err(Error::Consistency(format!(
                "keyframe {keyframe_id} has no pose in the trajectory"
            )))
        }
    }

    /// Every keyframe id some stored cloud depends on.
    pub fn referenced_keyframes(&self) -> BTreeSet<u64> {
        self.landmarks
            .values()
            .flat_map(|lm| lm.pose_indices().iter().copied())
            .chain(self.nonobject_clouds.keys().copied())
            .collect()
    }

    fn check_coverage(&self, trajectory: &Trajectory) -> Result<()> {
        let missing: Vec<u64> = self
            .referenced_keyframes()
            .into_iter()
            .filter(|k| !trajectory.contains(*k))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Consistency(format!(
                "trajectory lacks poses for keyframes {missing:?}"
            )))
        }
    }

    /// Replaces the trajectory and rebuilds every landmark model from its
    /// stored segments. On error the map is unchanged.
    pub fn apply_trajectory_update(&mut self, trajectory: Trajectory) -> Result<()> {
        self.check_coverage(&trajectory)?;
        let mut rebuilt = self.landmarks.clone();
        for lm in rebuilt.values_mut() {
            lm.rebuild(&trajectory, OBJECT_RESOLUTION)?;
        }
        self.landmarks = rebuilt;
        self.trajectory = trajectory;
        Ok(())
    }

    /// Places all stored clouds in the world frame. Objects are voxelized at
    /// `object_resolution`; each output point carries the landmark holding
    /// most model points in its cell (ties to the lowest id).
    pub fn generate_map(&self, object_resolution: f64, nonobject_resolution: f64) -> Result<GeneratedMap> {
        self.check_coverage(&self.trajectory)?;

        let models: Vec<&PointCloud> = self.landmarks.values().map(|lm| lm.model()).collect();
        let (objects, class_ids, object_ids, confidences) = if models.is_empty() {
            (PointCloud::default(), Vec::new(), Vec::new(), Vec::new())
        } else {
            let objects = voxel_downsample(&PointCloud::concat(models), object_resolution)?;
            let mut votes: BTreeMap<VoxelCell, BTreeMap<u64, usize>> = BTreeMap::new();
            for lm in self.landmarks.values() {
                for p in lm.model().points() {
                    *votes
                        .entry(voxel_cell(p, object_resolution))
                        .or_default()
                        .entry(lm.id())
                        .or_default() += 1;
                }
            }
            debug_assert_eq!(votes.len(), objects.len());
            let mut class_ids = Vec::with_capacity(objects.len());
            let mut object_ids = Vec::with_capacity(objects.len());
            let mut confidences = Vec::with_capacity(objects.len());
            // Both sequences are ordered by cell index.
            for counts in votes.values() {
                let mut winner = (0u64, 0usize);
                for (&id, &c) in counts {
                    if c > winner.1 {
                        winner = (id, c);
                    }
                }
                let lm = &self.landmarks[&winner.0];
                class_ids.push(lm.best_class().expect("landmarks have observations"));
                object_ids.push(winner.0);
                confidences.push(lm.confidence()?);
            }
            (objects, class_ids, object_ids, confidences)
        };

        let placed: Vec<PointCloud> = self
            .nonobject_clouds
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(k, c)| transform_cloud(c, self.trajectory.pose(*k).expect("coverage checked")))
            .collect();
        let nonobjects = if placed.is_empty() {
            PointCloud::default()
        } else {
            voxel_downsample(&PointCloud::concat(&placed), nonobject_resolution)?
        };

        Ok(GeneratedMap {
            objects,
            class_ids,
            object_ids,
            confidences,
            nonobjects,
        })
    }

    /// Checks every structural invariant; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        for (&id, lm) in &self.landmarks {
            if id != lm.id() || id >= self.next_landmark_id {
                return Err(Error::Consistency(format!("landmark id {id} out of sequence")));
            }
            lm.check(&self.registry, &self.trajectory)?;
        }
        self.check_coverage(&self.trajectory)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self).map_err(|e| Error::json(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map: SemanticMap = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::json(path, e))?;
        map.validate()?;
        for lm in map.landmarks.values_mut() {
            lm.rebuild(&map.trajectory, OBJECT_RESOLUTION)?;
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests;
