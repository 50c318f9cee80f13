use super::*;
use crate::frameio::{write_detections, InventoryObject};

fn desk() -> SceneSpec {
    serde_json::from_str(include_str!("../../scenes/desk.json")).unwrap()
}

fn small_desk() -> SceneSpec {
    let mut s = desk();
    s.trajectory.frames = 4;
    s
}

#[test]
fn bundled_scenes_validate() {
    for text in [
        include_str!("../../scenes/desk.json"),
        include_str!("../../scenes/dual_monitor.json"),
        include_str!("../../scenes/two_spheres.json"),
    ] {
        let s: SceneSpec = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
    }
}

#[test]
fn floating_below_plane_rejected() {
    let mut s = desk();
    s.objects[3].position[2] = 0.01;
    assert!(s.validate().is_err());
    let mut s = desk();
    s.objects[0].dimensions.push(1.0);
    assert!(s.validate().is_err());
}

#[test]
fn camera_path_spacing() {
    let s = desk();
    let pos = s.camera_positions();
    assert_eq!(pos.len(), 20);
    let first = s.trajectory.waypoints[0];
    let last = *s.trajectory.waypoints.last().unwrap();
    assert!((pos[0] - Point3::new(first[0], first[1], first[2])).norm() < 1e-12);
    assert!((pos[19] - Point3::new(last[0], last[1], last[2])).norm() < 1e-9);
}

#[test]
fn perfect_detector_reports_true_boxes() {
    let data = generate(&small_desk()).unwrap();
    let expected: Vec<(u64, BBox)> = data
        .truth
        .frames
        .iter()
        .flat_map(|f| f.visible.iter().map(move |v| (f.keyframe_id, v.bbox)))
        .collect();
    let got: Vec<(u64, BBox)> = data.detections.iter().map(|d| (d.keyframe_id, d.bbox)).collect();
    assert_eq!(got, expected);
    assert!(!got.is_empty());
    assert!(data.detections.iter().all(|d| (0.6..=0.95).contains(&d.score)));
}

#[test]
fn full_dropout_is_empty() {
    let data = generate(&small_desk()).unwrap();
    let noise = DetectorSpec {
        dropout: 1.0,
        ..DetectorSpec::default()
    };
    assert!(simulate_detections(&data.truth, &noise, 1).is_empty());
}

#[test]
fn detector_is_deterministic() {
    let data = generate(&small_desk()).unwrap();
    let noise = DetectorSpec {
        dropout: 0.3,
        bbox_jitter_px: 4.0,
        ..DetectorSpec::default()
    };
    let a = write_detections(&simulate_detections(&data.truth, &noise, 11));
    let b = write_detections(&simulate_detections(&data.truth, &noise, 11));
    assert_eq!(a, b);
    let c = write_detections(&simulate_detections(&data.truth, &noise, 12));
    assert_ne!(a, c);
}

#[test]
fn desk_objects_all_visible() {
    let data = generate(&desk()).unwrap();
    assert_eq!(data.truth.classes, vec!["cup", "keyboard", "monitor"]);
    for o in &data.truth.objects {
        assert!(o.visible_frames >= 3, "{} seen in {} frames", o.class_name, o.visible_frames);
    }
}

#[test]
fn dataset_written_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&small_desk(), dir.path()).unwrap();
    for f in [INTRINSICS_FILE, TRAJECTORY_FILE, DETECTIONS_FILE, GROUND_TRUTH_FILE] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let frame = dir.path().join(FRAMES_DIR).join(frame_file_name(3));
    assert_eq!(crate::frameio::read_pgm16(frame).unwrap(), data.renderings[3].depth);
    assert_eq!(GroundTruth::load(dir.path().join(GROUND_TRUTH_FILE)).unwrap(), data.truth);
}

fn truth(objects: &[(&str, [f64; 3])]) -> GroundTruth {
    GroundTruth {
        classes: vec![],
        objects: objects
            .iter()
            .enumerate()
            .map(|(i, (c, p))| GroundTruthObject {
                object_id: i as u32,
                class_id: 0,
                class_name: c.to_string(),
                shape: Shape::Box,
                centroid: *p,
                visible_frames: 1,
            })
            .collect(),
        planes: vec![],
        frames: vec![],
    }
}

fn inventory(objects: &[(&str, [f64; 3])]) -> Inventory {
    let mut inv = Inventory::default();
    for (i, (c, p)) in objects.iter().enumerate() {
        inv.objects.push(InventoryObject {
            object_id: i as u64,
            class_id: 0,
            class_name: c.to_string(),
            confidence: 0.9,
            n_observations: 1,
            centroid: *p,
            point_count: 10,
        });
        *inv.class_counts.entry(c.to_string()).or_default() += 1;
    }
    inv
}

const THREE: [(&str, [f64; 3]); 3] = [
    ("monitor", [0.0, 0.0, 0.0]),
    ("monitor", [1.0, 0.0, 0.0]),
    ("cup", [0.0, 1.0, 0.0]),
];

#[test]
fn scoring_examples() {
    let gt = truth(&THREE);
    let s = score_inventory(&inventory(&THREE), &gt, MATCH_DISTANCE);
    assert_eq!((s.true_pos, s.false_pos, s.false_neg), (3, 0, 0));
    let s = score_inventory(&Inventory::default(), &gt, MATCH_DISTANCE);
    assert_eq!((s.true_pos, s.false_pos, s.false_neg), (0, 0, 3));
    let mut extra = THREE.to_vec();
    extra.push(("cup", [3.0, 3.0, 0.0]));
    let s = score_inventory(&inventory(&extra), &gt, MATCH_DISTANCE);
    assert_eq!((s.true_pos, s.false_pos, s.false_neg), (3, 1, 0));
    // class must agree
    let wrong = [("tv", [0.0, 0.0, 0.0])];
    let s = score_inventory(&inventory(&wrong), &truth(&THREE[..1]), MATCH_DISTANCE);
    assert_eq!((s.true_pos, s.false_pos, s.false_neg), (0, 1, 1));
}

#[test]
fn scoring_ignores_relabeling() {
    let gt = truth(&THREE);
    let mapped = [
        ("cup", [0.05, 1.0, 0.0]),
        ("monitor", [0.9, 0.0, 0.0]),
        ("monitor", [0.3, 0.0, 0.0]),
    ];
    let a = score_inventory(&inventory(&mapped), &gt, MATCH_DISTANCE);
    let mut reversed = mapped;
    reversed.reverse();
    let b = score_inventory(&inventory(&reversed), &gt, MATCH_DISTANCE);
    assert_eq!(a, b);
    assert_eq!((a.true_pos, a.false_pos, a.false_neg), (2, 1, 1));
}

use crate::geometry::Point3;
use crate::frameio::Inventory;
