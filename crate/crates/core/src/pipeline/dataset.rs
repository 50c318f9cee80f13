use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;

use super::{process_keyframe, KeyframeReport, PipelineConfig};
use crate::frameio::{
    frame_file_name, load_depth_frame, load_detections, load_intrinsics, load_trajectory,
    CameraIntrinsics, Detection, KeyframeRecord,
};
use crate::geometry::Trajectory;
use crate::objectmap::{ClassRegistry, SemanticMap};
use crate::{Error, Result};

pub const INTRINSICS_FILE: &str = "intrinsics.json";
pub const TRAJECTORY_FILE: &str = "trajectory.tum";
pub const DETECTIONS_FILE: &str = "detections.jsonl";
pub const FRAMES_DIR: &str = "frames";
pub const UPDATES_DIR: &str = "updates";

/// A dataset directory with everything except the depth frames loaded.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    pub trajectory: Trajectory,
    /// Detections grouped by keyframe, in file order.
    pub detections: BTreeMap<u64, Vec<Detection>>,
    /// Trajectory replacements keyed by the keyframe they precede.
    pub updates: BTreeMap<u64, Trajectory>,
}

/// Detections of a dataset; a missing file means no detections.
pub fn load_dataset_detections(root: &Path) -> Result<Vec<Detection>> {
    let path = root.join(DETECTIONS_FILE);
    if path.exists() {
        load_detections(path)
    } else {
        Ok(Vec::new())
    }
}

impl Dataset {
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        if !root.is_dir() {
            return Err(Error::Validation(format!(
                "dataset directory {} does not exist",
                root.display()
            )));
        }
        let intrinsics = load_intrinsics(root.join(INTRINSICS_FILE))?;
        let trajectory = load_trajectory(root.join(TRAJECTORY_FILE))?;
        let mut detections: BTreeMap<u64, Vec<Detection>> = BTreeMap::new();
        for d in load_dataset_detections(&root)? {
            if !trajectory.contains(d.keyframe_id) {
                return Err(Error::Validation(format!(
                    "{}: detection for keyframe {} which is not in {TRAJECTORY_FILE}",
                    root.join(DETECTIONS_FILE).display(),
                    d.keyframe_id
                )));
            }
            detections.entry(d.keyframe_id).or_default().push(d);
        }

        let mut updates = BTreeMap::new();
        let dir = root.join(UPDATES_DIR);
        if dir.is_dir() {
            let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
            for entry in entries {
                let path = entry.map_err(|e| Error::io(&dir, e))?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("tum") {
                    continue;
                }
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.parse::<u64>().ok())
                    .ok_or_else(|| {
                        Error::Validation(format!(
                            "{}: update files must be named <keyframe_id>.tum",
                            path.display()
                        ))
                    })?;
                updates.insert(id, load_trajectory(&path)?);
            }
        }
        Ok(Dataset {
            root,
            intrinsics,
            trajectory,
            detections,
            updates,
        })
    }

    pub fn registry(&self) -> Result<ClassRegistry> {
        let all: Vec<Detection> = self.detections.values().flatten().cloned().collect();
        ClassRegistry::from_detections(&all)
    }

    pub fn frame_path(&self, keyframe_id: u64) -> PathBuf {
        self.root.join(FRAMES_DIR).join(frame_file_name(keyframe_id))
    }

    /// Loads the depth frame of a keyframe and pairs it with its detections.
    pub fn keyframe(&self, keyframe_id: u64, trajectory: &Trajectory) -> Result<KeyframeRecord> {
        let pose = *trajectory.pose(keyframe_id).ok_or_else(|| {
            Error::Consistency(format!("keyframe {keyframe_id} has no pose"))
        })?;
        let cloud = load_depth_frame(self.frame_path(keyframe_id), &self.intrinsics)?;
        let detections = self.detections.get(&keyframe_id).cloned().unwrap_or_default();
        KeyframeRecord::new(keyframe_id, pose, cloud, detections)
    }

    /// Processes all keyframes in ascending id order, applying each
    /// trajectory update right before the keyframe it is filed under.
    pub fn run(&self, cfg: &PipelineConfig) -> Result<(SemanticMap, Vec<KeyframeReport>)> {
        let mut map = SemanticMap::new(self.registry()?, self.trajectory.clone());
        let mut reports = Vec::with_capacity(self.trajectory.len());
        let mut pending = self.updates.iter().peekable();
        let keyframes: Vec<u64> = self.trajectory.keyframe_ids().collect();
        for kf in keyframes {
            while let Some((_, update)) = pending.next_if(|(id, _)| **id <= kf) {
                map.apply_trajectory_update(update.clone())?;
                info!("trajectory update applied before keyframe {kf}");
            }
            if !map.trajectory().contains(kf) {
                continue;
            }
            let frame = self.keyframe(kf, map.trajectory()).map_err(|e| Error::Keyframe {
                keyframe_id: kf,
                source: Box::new(e),
            })?;
            reports.push(process_keyframe(&mut map, &frame, &self.intrinsics, cfg)?);
        }
        for (_, update) in pending {
            map.apply_trajectory_update(update.clone())?;
        }
        Ok((map, reports))
    }
}

/// Loads a dataset directory and runs the whole sequence.
pub fn run_sequence(
    dataset_dir: impl AsRef<Path>,
    cfg: &PipelineConfig,
) -> Result<(SemanticMap, Vec<KeyframeReport>)> {
    cfg.validate()?;
    Dataset::load(dataset_dir)?.run(cfg)
}
