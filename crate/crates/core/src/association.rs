//! Decides whether a segmented detection re-observes a mapped object or
//! founds a new one.
//!
//! Landmarks are first gated by centroid distance. Every gated candidate is
//! then scored by the fraction of the segment's points lying within
//! `point_distance` of the landmark model; the best score wins if it reaches
//! `min_fraction`.

use serde::{Deserialize, Serialize};

use crate::geometry::{transform_cloud, Point3, PointCloud, Pose, SpatialIndex};
use crate::objectmap::SemanticMap;
use crate::segmentation::SegmentedDetection;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssociationConfig {
    /// Largest centroid distance for a landmark to be considered, meters.
    pub gate_radius: f64,
    /// Largest point-to-model distance counted as a match, meters.
    pub point_distance: f64,
    /// Smallest matched fraction accepted.
    pub min_fraction: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        AssociationConfig {
            gate_radius: 1.0,
            point_distance: 0.02,
            min_fraction: 0.5,
        }
    }
}

impl AssociationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("association.{name} must be positive, got {v}")))
            }
        };
        positive("gate_radius", self.gate_radius)?;
        positive("point_distance", self.point_distance)?;
        positive("min_fraction", self.min_fraction)?;
        if self.min_fraction > 1.0 {
            return Err(Error::Validation(format!(
                "association.min_fraction must be at most 1, got {}",
                self.min_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AssociationOutcome {
    Matched { landmark_id: u64, fraction: f64 },
    NewObject,
    /// The segment had no points; nothing should change in the map.
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    /// Position of the detection in its keyframe's detection list.
    pub detection_index: usize,
    pub outcome: AssociationOutcome,
    pub candidates_checked: usize,
}

/// Landmarks whose model centroid lies within `gate_radius` of `centroid`,
/// nearest first (ties by id).
pub fn candidate_landmarks(centroid: &Point3, map: &SemanticMap, gate_radius: f64) -> Vec<u64> {
    let mut found: Vec<(f64, u64)> = map
        .landmarks()
        .map(|lm| ((lm.model_centroid() - centroid).norm(), lm.id()))
        .filter(|(d, _)| *d <= gate_radius)
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    found.into_iter().map(|(_, id)| id).collect()
}

/// Fraction of `segment` points whose nearest model point is at most
/// `point_distance` away. An empty segment scores 0.
pub fn match_fraction(segment: &PointCloud, model: &SpatialIndex, point_distance: f64) -> f64 {
    if segment.is_empty() {
        return 0.0;
    }
    let hits = segment
        .points()
        .iter()
        .filter(|p| model.nearest(p).1 <= point_distance)
        .count();
    hits as f64 / segment.len() as f64
}

/// Associates a detection whose segment is in the camera frame of the
/// keyframe at `pose`.
pub fn associate(
    seg_det: &SegmentedDetection,
    pose: &Pose,
    map: &SemanticMap,
    cfg: &AssociationConfig,
) -> AssociationResult {
    let world = transform_cloud(&seg_det.segment.cloud, pose);
    associate_world(seg_det.detection_index, &world, map, cfg)
}

/// Associates a segment already placed in the world frame.
pub fn associate_world(
    detection_index: usize,
    world_segment: &PointCloud,
    map: &SemanticMap,
    cfg: &AssociationConfig,
) -> AssociationResult {
    let Some(centroid) = world_segment.centroid() else {
        return AssociationResult {
            detection_index,
            outcome: AssociationOutcome::Skip,
            candidates_checked: 0,
        };
    };
    let candidates = candidate_landmarks(&centroid, map, cfg.gate_radius);
    let mut best: Option<(f64, u64)> = None;
    for &id in &candidates {
        let lm = map.landmark(id).expect("candidate ids come from the map");
        let f = match_fraction(world_segment, &lm.model_index(), cfg.point_distance);
        let better = match best {
            None => true,
            Some((bf, bid)) => f > bf || (f == bf && id < bid),
        };
        if better {
            best = Some((f, id));
        }
    }
    let outcome = match best {
        Some((fraction, landmark_id)) if fraction >= cfg.min_fraction => {
            AssociationOutcome::Matched {
                landmark_id,
                fraction,
            }
        }
        _ => AssociationOutcome::NewObject,
    };
    AssociationResult {
        detection_index,
        outcome,
        candidates_checked: candidates.len(),
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{Trajectory, Vector3};
    use crate::objectmap::ClassRegistry;

    fn grid(origin: Point3, n: usize, step: f64) -> PointCloud {
        (0..n * n)
            .map(|i| origin + Vector3::new(step * (i % n) as f64, step * (i / n) as f64, 0.0))
            .collect()
    }

    fn map_with(clouds: &[PointCloud]) -> SemanticMap {
        let traj = Trajectory::from_sequence([(0.0, Pose::identity())]).unwrap();
        let mut map = SemanticMap::new(ClassRegistry::from_names(["thing"]), traj);
        for c in clouds {
            map.insert_cloud(0, 0.9, 0, c).unwrap();
        }
        map
    }

    fn index(c: &PointCloud) -> SpatialIndex {
        SpatialIndex::build(c.points()).unwrap()
    }

    #[test]
    fn gating() {
        let map = map_with(&[grid(Point3::new(0.5, 0.0, 0.0), 3, 0.0)]);
        assert!(candidate_landmarks(&Point3::origin(), &map_with(&[]), 1.0).is_empty());
        let c = map.landmark(0).unwrap().model_centroid();
        assert_eq!(candidate_landmarks(&(c - Vector3::new(0.5, 0.0, 0.0)), &map, 1.0), vec![0]);
        assert!(candidate_landmarks(&(c - Vector3::new(2.0, 0.0, 0.0)), &map, 1.0).is_empty());
    }

    #[test]
    fn fraction_examples() {
        let patch = grid(Point3::origin(), 10, 0.01);
        let idx = index(&patch);
        assert_eq!(match_fraction(&patch, &idx, 0.02), 1.0);
        let lifted: PointCloud = patch.points().iter().map(|p| p + Vector3::new(0.0, 0.0, 0.1)).collect();
        assert_eq!(match_fraction(&lifted, &idx, 0.02), 0.0);
        let half: PointCloud = patch
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| if i % 2 == 0 { *p } else { p + Vector3::new(0.0, 0.0, 0.1) })
            .collect();
        assert_eq!(match_fraction(&half, &idx, 0.02), 0.5);
    }

    #[test]
    fn exact_half_is_matched() {
        let patch = grid(Point3::new(0.0, 0.0, 1.0), 10, 0.01);
        let map = map_with(&[patch.clone()]);
        let half: PointCloud = patch
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| if i < 50 { *p } else { p + Vector3::new(0.0, 0.0, 0.1) })
            .collect();
        let r = associate_world(0, &half, &map, &AssociationConfig::default());
        assert_eq!(r.outcome, AssociationOutcome::Matched { landmark_id: 0, fraction: 0.5 });
    }

    #[test]
    fn static_object_matches_fully() {
        let obj = grid(Point3::new(0.0, 0.0, 1.0), 20, 0.005);
        let map = map_with(&[obj.clone()]);
        let r = associate_world(3, &obj, &map, &AssociationConfig::default());
        assert_eq!(r.detection_index, 3);
        assert_eq!(r.outcome, AssociationOutcome::Matched { landmark_id: 0, fraction: 1.0 });
    }

    #[test]
    fn far_object_is_new() {
        let map = map_with(&[grid(Point3::new(0.0, 0.0, 1.0), 10, 0.01)]);
        let far = grid(Point3::new(5.0, 0.0, 1.0), 10, 0.01);
        let r = associate_world(0, &far, &map, &AssociationConfig::default());
        assert_eq!(r.outcome, AssociationOutcome::NewObject);
        assert_eq!(r.candidates_checked, 0);
    }

    #[test]
    fn coincident_landmark_wins() {
        let a = grid(Point3::new(0.0, 0.0, 1.0), 10, 0.01);
        let b = grid(Point3::new(0.5, 0.0, 1.0), 10, 0.01);
        let map = map_with(&[a, b.clone()]);
        let r = associate_world(0, &b, &map, &AssociationConfig::default());
        assert_eq!(r.candidates_checked, 2);
        assert_eq!(r.outcome, AssociationOutcome::Matched { landmark_id: 1, fraction: 1.0 });
    }

    #[test]
    fn empty_segment_skips() {
        let map = map_with(&[grid(Point3::origin(), 3, 0.01)]);
        let before = map.clone();
        let r = associate_world(0, &PointCloud::default(), &map, &AssociationConfig::default());
        assert_eq!(r.outcome, AssociationOutcome::Skip);
        assert_eq!(map, before);
    }

    #[test]
    fn config_validation() {
        assert!(AssociationConfig::default().validate().is_ok());
        let bad = AssociationConfig { min_fraction: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = AssociationConfig { gate_radius: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn fraction_monotone_in_distance(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..60),
            model in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..60),
            d1 in 0.0f64..0.5,
            d2 in 0.0f64..0.5,
        ) {
            let seg: PointCloud = pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let m: PointCloud = model.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let idx = index(&m);
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(match_fraction(&seg, &idx, lo) <= match_fraction(&seg, &idx, hi));
        }
    }
}
