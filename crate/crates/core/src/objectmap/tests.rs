use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::frameio::{BBox, Detection};
use crate::geometry::{Point3, Pose, Vector3};
use crate::segmentation::Segment3D;

const MONITOR: u32 = 0;
const TV: u32 = 1;
const CUP: u32 = 2;

fn registry() -> ClassRegistry {
    ClassRegistry::from_names(["monitor", "tv", "cup"])
}

fn trajectory(n: usize) -> Trajectory {
    Trajectory::from_sequence((0..n).map(|i| {
        let pose = Pose::from_translation(Vector3::new(0.1 * i as f64, 0.0, 0.0));
        (i as f64, pose)
    }))
    .unwrap()
}

fn identity_trajectory(n: usize) -> Trajectory {
    Trajectory::from_sequence((0..n).map(|i| (i as f64, Pose::identity()))).unwrap()
}

fn cube(origin: Point3, side: f64, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            origin
                + Vector3::new(
                    rng.random_range(0.0..side),
                    rng.random_range(0.0..side),
                    rng.random_range(0.0..side),
                )
        })
        .collect()
}

fn patch(origin: Point3) -> PointCloud {
    (0..100)
        .map(|i| origin + Vector3::new(0.01 * (i % 10) as f64, 0.01 * (i / 10) as f64, 0.0))
        .collect()
}

fn map() -> SemanticMap {
    SemanticMap::new(registry(), trajectory(4))
}

#[test]
fn insert_initializes_scores() {
    let mut m = map();
    let cloud = patch(Point3::new(0.0, 0.0, 1.0));
    let seg = Segment3D::new(0, vec![0], cloud).unwrap();
    let sd = SegmentedDetection {
        detection_index: 0,
        detection: Detection {
            keyframe_id: 0,
            class_id: MONITOR,
            class_name: "monitor".into(),
            score: 0.9,
            bbox: BBox::from([0.0, 0.0, 10.0, 10.0]),
        },
        segment: seg,
        overlap_ratio: 1.0,
    };
    let id = m.insert_object(&sd, 0).unwrap();
    let lm = m.landmark(id).unwrap();
    assert_eq!(lm.class_scores(), &[0.9, 0.0, 0.0]);
    assert_eq!(lm.n(), 1);
    assert_eq!(lm.pose_indices(), &[0]);
    let id2 = m.insert_object(&sd, 1).unwrap();
    assert_eq!(id2, id + 1);
}

#[test]
fn model_bounded_by_voxel_count() {
    let mut m = map();
    let id = m
        .insert_cloud(CUP, 0.5, 0, &cube(Point3::new(0.0, 0.0, 1.0), 0.05, 10_000, 1))
        .unwrap();
    assert!(m.landmark(id).unwrap().model().len() <= 1331);
}

#[test]
fn update_accumulates() {
    let mut m = map();
    let base = patch(Point3::new(0.0, 0.0, 1.0));
    let id = m.insert_cloud(MONITOR, 0.9, 0, &base).unwrap();
    let before = m.landmark(id).unwrap().model().len();

    m.update_cloud(id, MONITOR, 0.8, 0, &base).unwrap();
    let lm = m.landmark(id).unwrap();
    assert!((lm.class_scores()[MONITOR as usize] - 1.7).abs() < 1e-12);
    assert_eq!(lm.n(), 2);
    assert_eq!(lm.model().len(), before);
    assert_eq!(lm.pose_indices(), &[0]);

    m.update_cloud(id, MONITOR, 0.5, 1, &patch(Point3::new(0.05, 0.05, 1.05))).unwrap();
    let lm = m.landmark(id).unwrap();
    assert!(lm.model().len() > before);
    assert_eq!(lm.pose_indices(), &[0, 1]);
}

#[test]
fn update_errors() {
    let mut m = map();
    let c = patch(Point3::new(0.0, 0.0, 1.0));
    assert!(matches!(m.update_cloud(7, MONITOR, 0.5, 0, &c), Err(Error::NotFound(7))));
    assert!(matches!(m.insert_cloud(9, 0.5, 0, &c), Err(Error::Registry(_))));
    assert!(matches!(m.insert_cloud(MONITOR, 0.5, 99, &c), Err(Error::Consistency(_))));
    assert!(m.insert_cloud(MONITOR, 0.5, 0, &PointCloud::default()).is_err());
    assert!(m.is_empty());
}

fn landmark_with(scores: &[(u32, f64)]) -> (SemanticMap, u64) {
    let mut m = map();
    let c = patch(Point3::new(0.0, 0.0, 1.0));
    let id = m.insert_cloud(scores[0].0, scores[0].1, 0, &c).unwrap();
    for &(class, s) in &scores[1..] {
        m.update_cloud(id, class, s, 0, &c).unwrap();
    }
    (m, id)
}

#[test]
fn label_examples() {
    let r = registry();
    let (m, id) = landmark_with(&[(MONITOR, 0.9), (MONITOR, 0.8), (TV, 0.95)]);
    assert_eq!(object_label(m.landmark(id).unwrap(), &r).unwrap(), (MONITOR, "monitor".into()));
    let (m, id) = landmark_with(&[(CUP, 0.4)]);
    assert_eq!(object_label(m.landmark(id).unwrap(), &r).unwrap().1, "cup");
    let (m, id) = landmark_with(&[(TV, 1.0), (MONITOR, 1.0)]);
    assert_eq!(object_label(m.landmark(id).unwrap(), &r).unwrap().0, MONITOR);
}

#[test]
fn label_undefined_without_observations() {
    let lm = ObjectLandmark::new(0, 3);
    assert!(matches!(object_label(&lm, &registry()), Err(Error::UndefinedLabel)));
    assert!(matches!(object_confidence(&lm), Err(Error::UndefinedLabel)));
}

#[test]
fn confidence_examples() {
    let (m, id) = landmark_with(&[(MONITOR, 0.8), (MONITOR, 0.9), (MONITOR, 0.7)]);
    assert!((object_confidence(m.landmark(id).unwrap()).unwrap() - 0.8).abs() < 1e-12);
    let (m, id) = landmark_with(&[(CUP, 0.6)]);
    assert_eq!(object_confidence(m.landmark(id).unwrap()).unwrap(), 0.6);
    let (m, id) = landmark_with(&[(MONITOR, 0.9), (MONITOR, 0.8), (TV, 0.95)]);
    assert!((object_confidence(m.landmark(id).unwrap()).unwrap() - 1.7 / 3.0).abs() < 1e-12);
}

#[test]
fn generate_empty_map() {
    let g = map().generate_map(OBJECT_RESOLUTION, NONOBJECT_RESOLUTION).unwrap();
    assert!(g.objects.is_empty() && g.nonobjects.is_empty() && g.class_ids.is_empty());
}

#[test]
fn generate_single_landmark_identity() {
    let mut m = SemanticMap::new(registry(), identity_trajectory(2));
    let id = m
        .insert_cloud(CUP, 0.7, 0, &cube(Point3::new(0.0, 0.0, 1.0), 0.05, 3000, 2))
        .unwrap();
    let g = m.generate_map(OBJECT_RESOLUTION, NONOBJECT_RESOLUTION).unwrap();
    let model = m.landmark(id).unwrap().model();
    assert_eq!(&g.objects, &voxel_downsample(model, OBJECT_RESOLUTION).unwrap());
    assert_eq!(g.objects.len(), model.len());
    assert!(g.object_ids.iter().all(|&o| o == id));
    assert!(g.class_ids.iter().all(|&c| c == CUP));
    assert!(g.confidences.iter().all(|&s| (s - 0.7).abs() < 1e-12));
}

#[test]
fn generate_keeps_sparse_nonobjects() {
    let mut m = SemanticMap::new(registry(), trajectory(2));
    let sparse: PointCloud = (0..200)
        .map(|i| Point3::new(0.02 * (i % 20) as f64 + 0.001, 0.02 * (i / 20) as f64 + 0.001, 2.0005))
        .collect();
    m.set_nonobject_cloud(1, &sparse).unwrap();
    let g = m.generate_map(OBJECT_RESOLUTION, NONOBJECT_RESOLUTION).unwrap();
    assert_eq!(g.nonobjects.len(), 200);
}

#[test]
fn generate_majority_label_per_cell() {
    let mut m = SemanticMap::new(registry(), identity_trajectory(1));
    let a = m.insert_cloud(MONITOR, 0.9, 0, &cube(Point3::new(0.0, 0.0, 1.0), 0.02, 500, 3)).unwrap();
    let b = m.insert_cloud(CUP, 0.9, 0, &cube(Point3::new(0.5, 0.0, 1.0), 0.02, 500, 4)).unwrap();
    let g = m.generate_map(OBJECT_RESOLUTION, NONOBJECT_RESOLUTION).unwrap();
    for (p, (&o, &c)) in g.objects.points().iter().zip(g.object_ids.iter().zip(&g.class_ids)) {
        if p.x < 0.25 {
            assert_eq!((o, c), (a, MONITOR));
        } else {
            assert_eq!((o, c), (b, CUP));
        }
    }
}

fn populated() -> SemanticMap {
    let mut m = map();
    let a = m.insert_cloud(MONITOR, 0.9, 0, &cube(Point3::new(0.0, 0.0, 1.0), 0.1, 800, 5)).unwrap();
    m.update_cloud(a, MONITOR, 0.8, 1, &cube(Point3::new(-0.1, 0.0, 1.0), 0.1, 800, 6)).unwrap();
    let b = m.insert_cloud(CUP, 0.6, 2, &cube(Point3::new(0.4, 0.1, 1.2), 0.05, 400, 7)).unwrap();
    m.update_cloud(b, TV, 0.3, 3, &cube(Point3::new(0.3, 0.1, 1.2), 0.05, 400, 8)).unwrap();
    m.set_nonobject_cloud(1, &patch(Point3::new(0.0, 0.5, 2.0))).unwrap();
    m
}

#[test]
fn identity_update_keeps_models() {
    let mut m = populated();
    let before = m.clone();
    m.apply_trajectory_update(before.trajectory().clone()).unwrap();
    assert_eq!(m, before);
}

#[test]
fn rigid_update_moves_centroids() {
    let mut m = populated();
    let before = m.clone();
    let g = Pose::from_xyzw(0.02, -0.03, 0.01, 0.998, Vector3::new(0.3, -0.2, 0.1));
    m.apply_trajectory_update(before.trajectory().left_multiplied(&g)).unwrap();
    for (old, new) in before.landmarks().zip(m.landmarks()) {
        let expected = g.transform_point(&old.model_centroid());
        assert!((new.model_centroid() - expected).norm() < 1e-9);
        assert_eq!(old.class_scores(), new.class_scores());
        assert_eq!(old.n(), new.n());
    }
}

#[test]
fn perturb_and_restore_round_trips() {
    let mut m = populated();
    let before = m.clone();
    let g = Pose::from_xyzw(0.0, 0.0, 0.04, 0.999, Vector3::new(0.05, 0.0, -0.02));
    m.apply_trajectory_update(before.trajectory().left_multiplied(&g)).unwrap();
    assert_ne!(m, before);
    m.apply_trajectory_update(before.trajectory().clone()).unwrap();
    assert_eq!(m, before);
}

#[test]
fn update_without_coverage_is_rejected() {
    let mut m = populated();
    let before = m.clone();
    let err = m.apply_trajectory_update(trajectory(2)).unwrap_err();
    assert!(matches!(err, Error::Consistency(_)));
    assert_eq!(m, before);
}

#[test]
fn json_round_trip() {
    let m = populated();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.json");
    m.save_json(&path).unwrap();
    let back = SemanticMap::load_json(&path).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_conserved_and_label_scale_invariant(
        events in prop::collection::vec((0u32..3, 0.0f64..1.0, any::<bool>(), 0usize..4), 1..30),
        scale in 0.01f64..100.0,
    ) {
        let mut m = map();
        let mut scaled = map();
        let c = patch(Point3::new(0.0, 0.0, 1.0));
        let mut total = 0.0;
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for &(class, score, new, target) in &events {
            let ids: Vec<u64> = m.landmark_ids().collect();
            if new || ids.is_empty() {
                let id = m.insert_cloud(class, score, 0, &c).unwrap();
                scaled.insert_cloud(class, score * scale, 0, &c).unwrap();
                *counts.entry(id).or_default() += 1;
            } else {
                let id = ids[target % ids.len()];
                m.update_cloud(id, class, score, 1, &c).unwrap();
                scaled.update_cloud(id, class, score * scale, 1, &c).unwrap();
                *counts.entry(id).or_default() += 1;
            }
            total += score;
        }
        let sum: f64 = m.landmarks().flat_map(|lm| lm.class_scores().iter()).sum();
        prop_assert!((sum - total).abs() <= 1e-9);
        for lm in m.landmarks() {
            prop_assert_eq!(lm.n(), counts[&lm.id()]);
            let max = lm.class_scores().iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(object_confidence(lm).unwrap(), max / lm.n() as f64);
            let other = scaled.landmark(lm.id()).unwrap();
            prop_assert_eq!(
                object_label(lm, m.registry()).unwrap(),
                object_label(other, scaled.registry()).unwrap()
            );
        }
        prop_assert!(m.validate().is_ok());
    }
}
