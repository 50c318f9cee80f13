//! Command-line front end: `synth`, `run`, `eval` and `export`.
//!
//! Exit codes: 0 on success, 1 when an input file, config or argument is
//! invalid, 2 when processing valid input fails part-way (the message names
//! the keyframe).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::frameio::{
    build_inventory, load_inventory, save_inventory, save_point_cloud, ExtraAttributes, PlyEncoding,
};
use crate::objectmap::SemanticMap;
use crate::pipeline::{run_sequence, ExportConfig, KeyframeReport, PipelineConfig};
use crate::synth::{score_inventory, write_dataset, GroundTruth, InventoryScore, SceneSpec, MATCH_DISTANCE};
use crate::{Error, Result};

pub const MAP_FILE: &str = "map.json";
pub const INVENTORY_FILE: &str = "inventory.json";
pub const REPORTS_FILE: &str = "reports.jsonl";
pub const RESOLVED_CONFIG_FILE: &str = "config_resolved.json";
pub const OBJECTS_PLY: &str = "objects.ply";
pub const NONOBJECTS_PLY: &str = "nonobjects.ply";

#[derive(Debug, Parser)]
#[command(name = "objmap", version, about = "Object-oriented semantic mapping from RGB-D keyframes")]
pub struct Cli {
    /// Print the summary as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene into a dataset directory with ground truth.
    Synth(SynthArgs),
    /// Run the mapping pipeline over a dataset directory.
    Run(RunArgs),
    /// Score a run's inventory against ground truth.
    Eval(EvalArgs),
    /// Re-emit the map point clouds of a finished run.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description (JSON).
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scene's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub dataset: PathBuf,
    /// Pipeline config (JSON); missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the plane-fitting RANSAC seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output directory of a previous `run`.
    pub out_dir: PathBuf,
    /// Ground truth written by `synth`.
    pub ground_truth: PathBuf,
    /// Largest centroid distance for a match, in meters.
    #[arg(long, default_value_t = MATCH_DISTANCE)]
    pub max_distance: f64,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Output directory of a previous `run`.
    pub out_dir: PathBuf,
    /// Write only the object cloud.
    #[arg(long, conflicts_with = "full")]
    pub objects_only: bool,
    /// Write object and non-object clouds (the default).
    #[arg(long)]
    pub full: bool,
    /// Destination directory; defaults to `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a command reports back: exit code, text summary and JSON summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub summary: String,
    pub json: Value,
}

impl CommandOutcome {
    fn ok(summary: String, json: Value) -> Self {
        CommandOutcome {
            exit_code: 0,
            summary,
            json,
        }
    }

    fn from_error(command: &str, e: &Error) -> Self {
        let exit_code = if e.is_validation() { 1 } else { 2 };
        let keyframe_id = match e {
            Error::Keyframe { keyframe_id, .. } => Some(*keyframe_id),
            _ => None,
        };
        CommandOutcome {
            exit_code,
            summary: format!("error: {e}"),
            json: json!({
                "command": command,
                "status": "error",
                "exit_code": exit_code,
                "error": e.to_string(),
                "keyframe_id": keyframe_id,
            }),
        }
    }

    /// The text printed on standard output.
    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            self.json.to_string()
        } else {
            self.summary.clone()
        }
    }
}

pub fn execute(cli: &Cli) -> CommandOutcome {
    let (name, result) = match &cli.command {
        Command::Synth(a) => ("synth", cmd_synth(&a.scene, &a.out, a.seed)),
        Command::Run(a) => ("run", cmd_run(&a.dataset, a.config.as_deref(), &a.out, a.seed)),
        Command::Eval(a) => ("eval", cmd_eval(&a.out_dir, &a.ground_truth, a.max_distance)),
        Command::Export(a) => (
            "export",
            cmd_export(&a.out_dir, a.out.as_deref(), a.objects_only && !a.full),
        ),
    };
    result.unwrap_or_else(|e| CommandOutcome::from_error(name, &e))
}

pub fn cmd_synth(scene_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<CommandOutcome> {
    let mut scene = SceneSpec::load(scene_path)?;
    if let Some(seed) = seed {
        scene.seed = seed;
    }
    let data = write_dataset(&scene, out_dir)?;
    let detections: usize = data.detections.len();
    let summary = format!(
        "wrote {} keyframes, {} detections, {} objects to {}",
        data.trajectory.len(),
        detections,
        data.truth.objects.len(),
        out_dir.display()
    );
    Ok(CommandOutcome::ok(
        summary,
        json!({
            "command": "synth",
            "status": "ok",
            "out_dir": out_dir,
            "keyframes": data.trajectory.len(),
            "detections": detections,
            "objects": data.truth.objects.len(),
            "seed": scene.seed,
        }),
    ))
}

/// Reads the config file (if any), then applies flag overrides.
pub fn resolve_config(config_path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let mut cfg = match config_path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.segmentation.planes.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_run(
    dataset: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<CommandOutcome> {
    let cfg = resolve_config(config_path, seed)?;
    create_dir(out_dir)?;
    cfg.save(out_dir.join(RESOLVED_CONFIG_FILE))?;
    let (map, reports) = run_sequence(dataset, &cfg)?;

    map.save_json(out_dir.join(MAP_FILE))?;
    let inventory = build_inventory(&map)?;
    save_inventory(&inventory, out_dir.join(INVENTORY_FILE))?;
    write_reports(&out_dir.join(REPORTS_FILE), &reports)?;
    let written = write_map_clouds(&map, &cfg.export, out_dir, false)?;

    let mut summary = format!(
        "processed {} keyframes, mapped {} objects\n",
        reports.len(),
        inventory.objects.len()
    );
    for (class, count) in &inventory.class_counts {
        let _ = writeln!(summary, "  {class}: {count}");
    }
    let _ = write!(summary, "results in {}", out_dir.display());
    Ok(CommandOutcome::ok(
        summary,
        json!({
            "command": "run",
            "status": "ok",
            "out_dir": out_dir,
            "keyframes": reports.len(),
            "objects": inventory.objects.len(),
            "class_counts": inventory.class_counts,
            "files": written,
        }),
    ))
}

pub fn cmd_eval(out_dir: &Path, ground_truth: &Path, max_distance: f64) -> Result<CommandOutcome> {
    if !(max_distance.is_finite() && max_distance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max_distance must be positive, got {max_distance}"
        )));
    }
    let inventory = load_inventory(out_dir.join(INVENTORY_FILE))?;
    let truth = GroundTruth::load(ground_truth)?;
    let score = score_inventory(&inventory, &truth, max_distance);
    let mut json = serde_json::to_value(&score).expect("scores serialize");
    json["command"] = json!("eval");
    json["status"] = json!("ok");
    Ok(CommandOutcome::ok(score_table(&score), json))
}

fn score_table(score: &InventoryScore) -> String {
    let width = score
        .classes
        .iter()
        .map(|c| c.class_name.len())
        .chain([5])
        .max()
        .unwrap_or(5);
    let mut out = format!("{:<width$}  {:>4}  {:>4}  {:>4}\n", "class", "tp", "fp", "fn");
    for c in &score.classes {
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>4}  {:>4}",
            c.class_name, c.true_pos, c.false_pos, c.false_neg
        );
    }
    let _ = write!(
        out,
        "{:<width$}  {:>4}  {:>4}  {:>4}",
        "total", score.true_pos, score.false_pos, score.false_neg
    );
    out
}

pub fn cmd_export(out_dir: &Path, dest: Option<&Path>, objects_only: bool) -> Result<CommandOutcome> {
    let map = SemanticMap::load_json(out_dir.join(MAP_FILE))?;
    let resolved = out_dir.join(RESOLVED_CONFIG_FILE);
    let export = if resolved.exists() {
        PipelineConfig::load(&resolved)?.export
    } else {
        ExportConfig::default()
    };
    let dest = dest.unwrap_or(out_dir);
    create_dir(dest)?;
    let written = write_map_clouds(&map, &export, dest, objects_only)?;
    let summary = format!("wrote {}", written.join(", "));
    Ok(CommandOutcome::ok(
        summary,
        json!({
            "command": "export",
            "status": "ok",
            "out_dir": dest,
            "files": written,
        }),
    ))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_reports(path: &Path, reports: &[KeyframeReport]) -> Result<()> {
    let mut text = String::new();
    for r in reports {
        text += &serde_json::to_string(r).map_err(|e| Error::json(path, e))?;
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `objects.ply` (with per-point class and object ids) and, unless
/// `objects_only`, `nonobjects.ply`. Returns the file names written.
pub fn write_map_clouds(
    map: &SemanticMap,
    export: &ExportConfig,
    dir: &Path,
    objects_only: bool,
) -> Result<Vec<String>> {
    let generated = map.generate_map(export.object_resolution, export.nonobject_resolution)?;
    let to_i32 = |what: &str, v: u64| {
        i32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit a PLY int")))
    };
    let extra = ExtraAttributes {
        class_ids: Some(
            generated
                .class_ids
                .iter()
                .map(|&c| to_i32("class id", u64::from(c)))
                .collect::<Result<_>>()?,
        ),
        object_ids: Some(
            generated
                .object_ids
                .iter()
                .map(|&o| to_i32("object id", o))
                .collect::<Result<_>>()?,
        ),
    };
    let enc = PlyEncoding::BinaryLittleEndian;
    save_point_cloud(dir.join(OBJECTS_PLY), &generated.objects, &extra, enc)?;
    let mut written = vec![OBJECTS_PLY.to_string()];
    if !objects_only {
        save_point_cloud(dir.join(NONOBJECTS_PLY), &generated.nonobjects, &ExtraAttributes::default(), enc)?;
        written.push(NONOBJECTS_PLY.to_string());
    }
    Ok(written)
}
