use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::association::AssociationConfig;
use crate::objectmap::{NONOBJECT_RESOLUTION, OBJECT_RESOLUTION};
use crate::segmentation::PlaneParams;
use crate::supervoxel::DistanceWeights;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupervoxelConfig {
    /// Input clouds are voxelized at this size before anything else, meters.
    pub voxel_resolution: f64,
    /// Neighbors used for normal estimation.
    pub normal_neighbors: usize,
    /// Seed grid pitch, meters.
    pub seed_resolution: f64,
    pub weights: DistanceWeights,
    pub max_iterations: usize,
    /// Adjacency contact distance, meters; twice the median point spacing
    /// when absent.
    pub contact_distance: Option<f64>,
}

impl Default for SupervoxelConfig {
    fn default() -> Self {
        SupervoxelConfig {
            voxel_resolution: 0.005,
            normal_neighbors: 10,
            seed_resolution: 0.05,
            weights: DistanceWeights::default(),
            max_iterations: 10,
            contact_distance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationConfig {
    /// Felzenszwalb merge scale.
    pub k: f64,
    /// Smallest segment-in-box fraction for a detection to claim a segment.
    pub min_overlap: f64,
    pub planes: PlaneParams,
    /// World-frame up direction; supporting planes must face along it.
    pub world_up: Option<[f64; 3]>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            k: 0.6,
            min_overlap: 0.5,
            planes: PlaneParams::default(),
            world_up: Some([0.0, 0.0, 1.0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    pub object_resolution: f64,
    pub nonobject_resolution: f64,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            object_resolution: OBJECT_RESOLUTION,
            nonobject_resolution: NONOBJECT_RESOLUTION,
        }
    }
}

/// Every tunable of the mapping pipeline. Missing JSON fields take their
/// defaults; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub supervoxel: SupervoxelConfig,
    pub segmentation: SegmentationConfig,
    pub association: AssociationConfig,
    /// Segments with fewer points are discarded instead of mapped.
    pub min_segment_points: usize,
    pub export: ExportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            supervoxel: SupervoxelConfig::default(),
            segmentation: SegmentationConfig::default(),
            association: AssociationConfig::default(),
            min_segment_points: 50,
            export: ExportConfig::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{field} must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Validation(format!("{field} must be non-negative, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Validation(format!("{field} must be at least {min}, got {v}")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let sv = &self.supervoxel;
        positive("supervoxel.voxel_resolution", sv.voxel_resolution)?;
        at_least("supervoxel.normal_neighbors", sv.normal_neighbors, 3)?;
        positive("supervoxel.seed_resolution", sv.seed_resolution)?;
        non_negative("supervoxel.weights.spatial", sv.weights.spatial)?;
        non_negative("supervoxel.weights.normal", sv.weights.normal)?;
        non_negative("supervoxel.weights.color", sv.weights.color)?;
        at_least("supervoxel.max_iterations", sv.max_iterations, 1)?;
        if let Some(d) = sv.contact_distance {
            positive("supervoxel.contact_distance", d)?;
        }

        let seg = &self.segmentation;
        positive("segmentation.k", seg.k)?;
        positive("segmentation.min_overlap", seg.min_overlap)?;
        if seg.min_overlap > 1.0 {
            return Err(Error::Validation(format!(
                "segmentation.min_overlap must be at most 1, got {}",
                seg.min_overlap
            )));
        }
        let p = &seg.planes;
        positive("segmentation.planes.angle_tol_deg", p.angle_tol_deg)?;
        if p.angle_tol_deg >= 90.0 {
            return Err(Error::Validation(format!(
                "segmentation.planes.angle_tol_deg must be below 90, got {}",
                p.angle_tol_deg
            )));
        }
        positive("segmentation.planes.dist_tol", p.dist_tol)?;
        at_least("segmentation.planes.min_support", p.min_support, 3)?;
        at_least("segmentation.planes.iterations", p.iterations, 1)?;
        if !(p.max_tilt_deg >= 0.0 && p.max_tilt_deg <= 90.0) {
            return Err(Error::Validation(format!(
                "segmentation.planes.max_tilt_deg must be within [0, 90], got {}",
                p.max_tilt_deg
            )));
        }
        if let Some(up) = seg.world_up {
            let n = (up[0] * up[0] + up[1] * up[1] + up[2] * up[2]).sqrt();
            if !(n > 1e-9 && n.is_finite()) {
                return Err(Error::Validation("segmentation.world_up must be a non-zero vector".into()));
            }
        }

        self.association.validate()?;
        at_least("min_segment_points", self.min_segment_points, 1)?;
        positive("export.object_resolution", self.export.object_resolution)?;
        positive("export.nonobject_resolution", self.export.nonobject_resolution)?;
        Ok(())
    }

    /// Parses and validates a JSON config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
