use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::frameio::Inventory;

/// Largest centroid distance for a mapped object to count as a ground-truth
/// object, meters.
pub const MATCH_DISTANCE: f64 = 0.25;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_name: String,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InventoryScore {
    /// Sorted by class name.
    pub classes: Vec<ClassScore>,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

/// Greedy one-to-one matching of mapped to ground-truth objects of the same
/// class by ascending centroid distance, up to `max_distance`. Only
/// ground-truth objects seen in at least one frame count.
pub fn score_inventory(inventory: &Inventory, truth: &GroundTruth, max_distance: f64) -> InventoryScore {
    let gt: Vec<_> = truth.objects.iter().filter(|o| o.visible_frames > 0).collect();
    let mut pairs = Vec::new();
    for (m, obj) in inventory.objects.iter().enumerate() {
        for (g, t) in gt.iter().enumerate() {
            if obj.class_name != t.class_name {
                continue;
            }
            let d = (0..3)
                .map(|a| (obj.centroid[a] - t.centroid[a]).powi(2))
                .sum::<f64>()
                .sqrt();
            if d <= max_distance {
                pairs.push((d, m, g));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut map_used = vec![false; inventory.objects.len()];
    let mut gt_used = vec![false; gt.len()];
    for (_, m, g) in pairs {
        if !map_used[m] && !gt_used[g] {
            map_used[m] = true;
            gt_used[g] = true;
        }
    }

    let mut rows: BTreeMap<&str, ClassScore> = BTreeMap::new();
    for (m, obj) in inventory.objects.iter().enumerate() {
        let r = rows.entry(&obj.class_name).or_default();
        if map_used[m] {
            r.true_pos += 1;
        } else {
            r.false_pos += 1;
        }
    }
    for (g, t) in gt.iter().enumerate() {
        if !gt_used[g] {
            rows.entry(&t.class_name).or_default().false_neg += 1;
        } else {
            rows.entry(&t.class_name).or_default();
        }
    }
    let classes: Vec<ClassScore> = rows
        .into_iter()
        .map(|(name, mut s)| {
            s.class_name = name.to_owned();
            s
        })
        .collect();
    InventoryScore {
        true_pos: classes.iter().map(|c| c.true_pos).sum(),
        false_pos: classes.iter().map(|c| c.false_pos).sum(),
        false_neg: classes.iter().map(|c| c.false_neg).sum(),
        classes,
    }
}
