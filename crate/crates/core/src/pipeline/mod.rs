//! Per-keyframe orchestration from a depth frame and its detections to map
//! updates, and the driver that replays a whole dataset directory.

mod config;
mod dataset;

use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};

pub use config::{ExportConfig, PipelineConfig, SegmentationConfig, SupervoxelConfig};
pub use dataset::{
    load_dataset_detections, run_sequence, Dataset, DETECTIONS_FILE, FRAMES_DIR, INTRINSICS_FILE,
    TRAJECTORY_FILE, UPDATES_DIR,
};

use crate::association::{associate, AssociationOutcome};
use crate::frameio::{CameraIntrinsics, KeyframeRecord};
use crate::geometry::{estimate_normals, voxel_downsample, PointCloud, Vector3};
use crate::objectmap::SemanticMap;
use crate::segmentation::{
    assign_edge_weights, assign_segments_to_detections, extract_supporting_planes, segment_graph,
    Segment3D, SupportingPlane,
};
use crate::supervoxel::{build_adjacency, oversegment, SegmentGraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub points: usize,
    pub supervoxels: usize,
    pub edges: usize,
    pub planes: usize,
    pub segments: usize,
    pub detections: usize,
    pub assigned: usize,
    pub matched: usize,
    pub new_objects: usize,
    pub skipped: usize,
    /// Landmark models scored during association.
    pub association_pairs: usize,
}

/// Wall time per stage in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub normals: f64,
    pub supervoxels: f64,
    pub adjacency: f64,
    pub planes: f64,
    pub weights: f64,
    pub graph: f64,
    pub assignment: f64,
    pub association: f64,
    pub map_update: f64,
    pub total: f64,
}

impl StageTimings {
    /// Everything from normal estimation to the graph cut.
    pub fn segmentation(&self) -> f64 {
        self.normals + self.supervoxels + self.adjacency + self.planes + self.weights + self.graph
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyframeReport {
    pub keyframe_id: u64,
    pub counts: StageCounts,
    pub timings_ms: StageTimings,
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(Instant::now())
    }

    /// Milliseconds since the last lap.
    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let ms = (now - self.0).as_secs_f64() * 1e3;
        self.0 = now;
        ms
    }
}

/// Output of the segmentation stages for one frame.
#[derive(Debug, Clone)]
pub struct FrameSegmentation {
    /// The frame after downsampling; supervoxel point indices refer to it.
    pub cloud: PointCloud,
    pub graph: SegmentGraph,
    pub planes: Vec<SupportingPlane>,
    pub segments: Vec<Segment3D>,
    /// Only the segmentation fields are filled in.
    pub timings: StageTimings,
}

/// Runs the unsupervised 3D segmentation on a camera-frame cloud.
///
/// `up` is the gravity direction in the camera frame; when given, only
/// planes roughly perpendicular to it count as supporting planes.
pub fn segment_frame(
    cloud: &PointCloud,
    up: Option<Vector3>,
    cfg: &PipelineConfig,
) -> Result<FrameSegmentation> {
    let sv_cfg = &cfg.supervoxel;
    let mut timings = StageTimings::default();
    let mut clock = Stopwatch::start();
    let cloud = if cloud.is_empty() {
        PointCloud::default()
    } else {
        voxel_downsample(&cloud.clone().without_normals(), sv_cfg.voxel_resolution)?
    };
    if cloud.len() < sv_cfg.normal_neighbors {
        let graph = build_adjacency(Vec::new(), &cloud, sv_cfg.contact_distance)?;
        return Ok(FrameSegmentation {
            cloud,
            graph,
            planes: Vec::new(),
            segments: Vec::new(),
            timings,
        });
    }

    let with_normals = estimate_normals(&cloud, sv_cfg.normal_neighbors)?.cloud;
    timings.normals = clock.lap();
    let supervoxels = oversegment(
        &with_normals,
        sv_cfg.seed_resolution,
        sv_cfg.weights,
        sv_cfg.max_iterations,
    )?;
    timings.supervoxels = clock.lap();
    let mut graph = build_adjacency(supervoxels, &with_normals, sv_cfg.contact_distance)?;
    timings.adjacency = clock.lap();
    let mut plane_params = cfg.segmentation.planes.clone();
    plane_params.up = up;
    let planes = extract_supporting_planes(&mut graph.nodes, &plane_params);
    timings.planes = clock.lap();
    assign_edge_weights(&mut graph);
    timings.weights = clock.lap();
    let segments = segment_graph(&graph, &cloud, cfg.segmentation.k)?;
    timings.graph = clock.lap();
    Ok(FrameSegmentation {
        cloud,
        graph,
        planes,
        segments,
        timings,
    })
}

/// Runs one keyframe through segmentation, association and map update.
///
/// The map is only modified if every stage succeeds; errors come back
/// wrapped in [`Error::Keyframe`].
pub fn process_keyframe(
    map: &mut SemanticMap,
    frame: &KeyframeRecord,
    intrinsics: &CameraIntrinsics,
    cfg: &PipelineConfig,
) -> Result<KeyframeReport> {
    let mut work = map.clone();
    let report = process_into(&mut work, frame, intrinsics, cfg).map_err(|e| Error::Keyframe {
        keyframe_id: frame.keyframe_id,
        source: Box::new(e),
    })?;
    *map = work;
    Ok(report)
}

fn process_into(
    map: &mut SemanticMap,
    frame: &KeyframeRecord,
    intrinsics: &CameraIntrinsics,
    cfg: &PipelineConfig,
) -> Result<KeyframeReport> {
    let total = Instant::now();
    let mut clock = Stopwatch::start();
    let kf = frame.keyframe_id;
    let pose = *map.trajectory().pose(kf).ok_or_else(|| {
        Error::Precondition(format!("keyframe {kf} has no pose in the map trajectory"))
    })?;
    let mut report = KeyframeReport {
        keyframe_id: kf,
        ..Default::default()
    };
    report.counts.detections = frame.detections.len();

    let up = cfg
        .segmentation
        .world_up
        .map(|[x, y, z]| pose.inverse().transform_vector(&Vector3::new(x, y, z)));
    let FrameSegmentation {
        cloud,
        graph,
        planes,
        segments,
        timings,
    } = segment_frame(&frame.cloud, up, cfg)?;
    report.timings_ms = timings;
    report.counts.points = cloud.len();
    report.counts.supervoxels = graph.nodes.len();
    report.counts.edges = graph.edges.len();
    report.counts.planes = planes.len();
    report.counts.segments = segments.len();
    clock.lap();

    // Highest-scoring detections are handled first.
    let mut detections = frame.detections.clone();
    detections.sort_by(|a, b| b.score.total_cmp(&a.score));
    // Fragments too small to become landmarks must not take a detection away
    // from the segment that actually explains it.
    let candidates: Vec<_> = segments
        .iter()
        .filter(|s| s.len() >= cfg.min_segment_points)
        .cloned()
        .collect();
    let assigned = assign_segments_to_detections(
        &candidates,
        &detections,
        intrinsics,
        cfg.segmentation.min_overlap,
    );
    report.counts.assigned = assigned.len();
    report.timings_ms.assignment = clock.lap();

    let mut claimed = vec![false; cloud.len()];
    for sd in &assigned {
        let t = Instant::now();
        let result = associate(sd, &pose, map, &cfg.association);
        report.timings_ms.association += t.elapsed().as_secs_f64() * 1e3;
        report.counts.association_pairs += result.candidates_checked;

        let t = Instant::now();
        match result.outcome {
            AssociationOutcome::Matched { landmark_id, fraction } => {
                debug!("keyframe {kf}: {} -> landmark {landmark_id} ({fraction:.3})", sd.detection.class_name);
                map.update_object(landmark_id, sd, kf)?;
                report.counts.matched += 1;
            }
            AssociationOutcome::NewObject => {
                let id = map.insert_object(sd, kf)?;
                debug!("keyframe {kf}: {} -> new landmark {id}", sd.detection.class_name);
                report.counts.new_objects += 1;
            }
            AssociationOutcome::Skip => {
                report.counts.skipped += 1;
                continue;
            }
        }
        report.timings_ms.map_update += t.elapsed().as_secs_f64() * 1e3;
        for &node in &sd.segment.supervoxel_ids {
            for &i in &graph.nodes[node].point_indices {
                claimed[i] = true;
            }
        }
    }

    let t = Instant::now();
    let rest: Vec<usize> = (0..cloud.len()).filter(|&i| !claimed[i]).collect();
    map.set_nonobject_cloud(kf, &cloud.select(&rest))?;
    report.timings_ms.map_update += t.elapsed().as_secs_f64() * 1e3;
    report.timings_ms.total = total.elapsed().as_secs_f64() * 1e3;
    info!(
        "keyframe {kf}: {} supervoxels, {} planes, {} segments, {}/{} detections assigned, {} matched, {} new, {} skipped ({:.0} ms)",
        report.counts.supervoxels,
        report.counts.planes,
        report.counts.segments,
        report.counts.assigned,
        report.counts.detections,
        report.counts.matched,
        report.counts.new_objects,
        report.counts.skipped,
        report.timings_ms.total
    );
    Ok(report)
}
