use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::objectmap::SemanticMap;
use crate::{Error, Result};

/// One mapped object as listed in the inventory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryObject {
    pub object_id: u64,
    pub class_id: u32,
    pub class_name: String,
    pub confidence: f64,
    pub n_observations: usize,
    pub centroid: [f64; 3],
    pub point_count: usize,
}

/// Object list plus a per-class instance count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub objects: Vec<InventoryObject>,
    pub class_counts: BTreeMap<String, usize>,
}

/// Objects ordered by id.
pub fn build_inventory(map: &SemanticMap) -> Result<Inventory> {
    let mut inv = Inventory::default();
    for lm in map.landmarks() {
        let (class_id, class_name) = lm.label(map.registry())?;
        let c = lm.model_centroid();
        *inv.class_counts.entry(class_name.clone()).or_default() += 1;
        inv.objects.push(InventoryObject {
            object_id: lm.id(),
            class_id,
            class_name,
            confidence: lm.confidence()?,
            n_observations: lm.n(),
            centroid: [c.x, c.y, c.z],
            point_count: lm.model().len(),
        });
    }
    Ok(inv)
}

pub fn export_inventory(map: &SemanticMap, path: impl AsRef<Path>) -> Result<()> {
    save_inventory(&build_inventory(map)?, path)
}

pub fn save_inventory(inventory: &Inventory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(inventory).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_inventory(path: impl AsRef<Path>) -> Result<Inventory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
