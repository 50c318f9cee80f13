//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists built from the library's JSON forms.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use objmap::frameio::{build_inventory, load_trajectory};
use objmap::geometry::{voxel_downsample, Point3, PointCloud, SpatialIndex, Vector3};
use objmap::objectmap::SemanticMap;
use objmap::pipeline::PipelineConfig;
use objmap::supervoxel::Supervoxel;

fn to_pyerr(e: objmap::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn cloud(points: Vec<[f64; 3]>) -> PyResult<PointCloud> {
    PointCloud::new(points.into_iter().map(Point3::from).collect()).map_err(to_pyerr)
}

fn xyz(cloud: &PointCloud) -> Vec<[f64; 3]> {
    cloud.points().iter().map(|p| [p.x, p.y, p.z]).collect()
}

#[pyclass(name = "PipelineConfig", from_py_object)]
#[derive(Clone, Default)]
struct PyPipelineConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyPipelineConfig {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Parses a JSON document; missing fields keep their defaults.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: PipelineConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_pyerr)?;
        Ok(PyPipelineConfig { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyPipelineConfig {
            inner: PipelineConfig::load(path).map_err(to_pyerr)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("config serializes")
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_pyerr)
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.segmentation.k
    }

    #[setter]
    fn set_k(&mut self, k: f64) {
        self.inner.segmentation.k = k;
    }

    #[getter]
    fn min_segment_points(&self) -> usize {
        self.inner.min_segment_points
    }

    #[setter]
    fn set_min_segment_points(&mut self, n: usize) {
        self.inner.min_segment_points = n;
    }

    fn __repr__(&self) -> String {
        format!(
            "PipelineConfig(k={}, min_segment_points={})",
            self.inner.segmentation.k, self.inner.min_segment_points
        )
    }
}

#[pyclass(name = "SemanticMap")]
struct PySemanticMap {
    inner: SemanticMap,
}

#[pymethods]
impl PySemanticMap {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PySemanticMap {
            inner: SemanticMap::load_json(path).map_err(to_pyerr)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_json(path).map_err(to_pyerr)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn landmark_ids(&self) -> Vec<u64> {
        self.inner.landmark_ids().collect()
    }

    /// Summary of one landmark: label, confidence, observations and model.
    fn landmark<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Bound<'py, PyAny>> {
        let lm = self
            .inner
            .landmark(id)
            .ok_or_else(|| PyValueError::new_err(format!("landmark {id} not found")))?;
        let (class_id, class_name) = lm.label(self.inner.registry()).map_err(to_pyerr)?;
        let c = lm.model_centroid();
        let summary = serde_json::json!({
            "id": id,
            "class_id": class_id,
            "class_name": class_name,
            "confidence": lm.confidence().map_err(to_pyerr)?,
            "n_observations": lm.n(),
            "class_scores": lm.class_scores(),
            "keyframes": lm.pose_indices(),
            "centroid": [c.x, c.y, c.z],
            "model_points": lm.model().len(),
        });
        to_py(py, &summary)
    }

    fn inventory<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &build_inventory(&self.inner).map_err(to_pyerr)?)
    }

    /// Object points with per-point class and object ids, plus the
    /// non-object points.
    #[pyo3(signature = (object_resolution = 0.005, nonobject_resolution = 0.01))]
    fn generate_map<'py>(
        &self,
        py: Python<'py>,
        object_resolution: f64,
        nonobject_resolution: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let g = self
            .inner
            .generate_map(object_resolution, nonobject_resolution)
            .map_err(to_pyerr)?;
        let out = serde_json::json!({
            "objects": xyz(&g.objects),
            "class_ids": g.class_ids,
            "object_ids": g.object_ids,
            "confidences": g.confidences,
            "nonobjects": xyz(&g.nonobjects),
        });
        to_py(py, &out)
    }

    /// Re-projects every landmark with the poses of a TUM trajectory file.
    fn apply_trajectory_update(&mut self, tum_path: PathBuf) -> PyResult<()> {
        let trajectory = load_trajectory(tum_path).map_err(to_pyerr)?;
        self.inner.apply_trajectory_update(trajectory).map_err(to_pyerr)
    }

    fn __repr__(&self) -> String {
        format!("SemanticMap({} landmarks)", self.inner.len())
    }
}

/// Maps a dataset directory; returns the map and one report dict per keyframe.
#[pyfunction]
#[pyo3(signature = (dataset_dir, config = None))]
fn run_sequence<'py>(
    py: Python<'py>,
    dataset_dir: PathBuf,
    config: Option<PyPipelineConfig>,
) -> PyResult<(PySemanticMap, Bound<'py, PyAny>)> {
    let cfg = config.unwrap_or_default().inner;
    let (map, reports) = objmap::pipeline::run_sequence(dataset_dir, &cfg).map_err(to_pyerr)?;
    Ok((PySemanticMap { inner: map }, to_py(py, &reports)?))
}

/// Renders a scene description into a dataset directory with ground truth.
#[pyfunction]
#[pyo3(signature = (scene_path, out_dir, seed = None))]
fn synthesize<'py>(
    py: Python<'py>,
    scene_path: PathBuf,
    out_dir: PathBuf,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let outcome = objmap::cli::cmd_synth(&scene_path, &out_dir, seed).map_err(to_pyerr)?;
    to_py(py, &outcome.json)
}

/// Scores `out_dir/inventory.json` against a ground-truth file.
#[pyfunction]
#[pyo3(signature = (out_dir, ground_truth, max_distance = objmap::synth::MATCH_DISTANCE))]
fn evaluate<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    ground_truth: PathBuf,
    max_distance: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let outcome = objmap::cli::cmd_eval(&out_dir, &ground_truth, max_distance).map_err(to_pyerr)?;
    to_py(py, &outcome.json)
}

/// Fraction of segment points with a model point within `point_distance`.
#[pyfunction]
#[pyo3(signature = (segment, model, point_distance = 0.02))]
fn match_fraction(segment: Vec<[f64; 3]>, model: Vec<[f64; 3]>, point_distance: f64) -> PyResult<f64> {
    let model = cloud(model)?;
    let index = SpatialIndex::build(model.points()).map_err(to_pyerr)?;
    Ok(objmap::association::match_fraction(&cloud(segment)?, &index, point_distance))
}

/// Component label per node after the Kruskal cut of `(i, j, weight)` edges.
#[pyfunction]
fn felzenszwalb(n_nodes: usize, edges: Vec<(usize, usize, f64)>, k: f64) -> PyResult<Vec<usize>> {
    if let Some(&(i, j, _)) = edges.iter().find(|e| e.0 >= n_nodes || e.1 >= n_nodes) {
        return Err(PyValueError::new_err(format!("edge ({i}, {j}) outside {n_nodes} nodes")));
    }
    Ok(objmap::segmentation::felzenszwalb(n_nodes, &edges, k))
}

/// Weight and junction type of the edge between two supervoxels given by
/// centroid, normal and optional supporting-plane id.
#[pyfunction]
#[pyo3(signature = (centroid_i, normal_i, centroid_j, normal_j, plane_i = None, plane_j = None))]
fn edge_weight(
    centroid_i: [f64; 3],
    normal_i: [f64; 3],
    centroid_j: [f64; 3],
    normal_j: [f64; 3],
    plane_i: Option<usize>,
    plane_j: Option<usize>,
) -> PyResult<(f64, String)> {
    let node = |c: [f64; 3], n: [f64; 3], plane: Option<usize>| -> PyResult<Supervoxel> {
        let normal = Vector3::from(n)
            .try_normalize(1e-12)
            .ok_or_else(|| PyValueError::new_err("normal has zero length"))?;
        Ok(Supervoxel {
            id: 0,
            point_indices: Vec::new(),
            centroid: Point3::from(c),
            normal,
            mean_color: None,
            on_plane_id: plane,
        })
    };
    let w = objmap::segmentation::edge_weight(
        &node(centroid_i, normal_i, plane_i)?,
        &node(centroid_j, normal_j, plane_j)?,
    );
    let relation = serde_json::to_value(w.relation).expect("relation serializes");
    Ok((w.value, relation.as_str().unwrap_or_default().to_string()))
}

/// Voxel-grid centroids of a point list.
#[pyfunction]
fn downsample(points: Vec<[f64; 3]>, resolution: f64) -> PyResult<Vec<[f64; 3]>> {
    Ok(xyz(&voxel_downsample(&cloud(points)?, resolution).map_err(to_pyerr)?))
}

#[pymodule]
fn pyobjmap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPipelineConfig>()?;
    m.add_class::<PySemanticMap>()?;
    m.add_function(wrap_pyfunction!(run_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(match_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(felzenszwalb, m)?)?;
    m.add_function(wrap_pyfunction!(edge_weight, m)?)?;
    m.add_function(wrap_pyfunction!(downsample, m)?)?;
    Ok(())
}
