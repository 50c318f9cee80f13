#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;

use objmap::objectmap::{ClassRegistry, SemanticMap};
use objmap::pipeline::{process_keyframe, KeyframeReport, PipelineConfig};
use objmap::synth::{generate, SceneSpec, SyntheticDataset};

pub fn scene_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenes")
        .join(format!("{name}.json"))
}

pub fn scene(name: &str) -> SceneSpec {
    SceneSpec::load(scene_path(name)).unwrap()
}

/// Writes a scene file so the CLI can consume a modified scene.
pub fn write_scene(scene: &SceneSpec, dir: &std::path::Path) -> PathBuf {
    let path = dir.join("scene.json");
    std::fs::write(&path, serde_json::to_string_pretty(scene).unwrap()).unwrap();
    path
}

pub struct InMemoryRun {
    pub data: SyntheticDataset,
    pub map: SemanticMap,
    pub reports: Vec<KeyframeReport>,
}

/// Renders a scene and maps it without touching the filesystem.
pub fn map_scene(scene: &SceneSpec, cfg: &PipelineConfig) -> InMemoryRun {
    let data = generate(scene).unwrap();
    let registry = ClassRegistry::from_detections(&data.detections).unwrap();
    let mut map = SemanticMap::new(registry, data.trajectory.clone());
    let mut reports = Vec::new();
    for frame in data.keyframes().unwrap() {
        reports.push(process_keyframe(&mut map, &frame, &data.intrinsics, cfg).unwrap());
    }
    InMemoryRun { data, map, reports }
}

/// One result line, written past the test harness's output capture so it
/// always shows up in the log.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion:>2}: {verdict}  {detail}");
}
