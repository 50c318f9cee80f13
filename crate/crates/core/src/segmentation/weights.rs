use crate::supervoxel::{EdgeWeight, Relation, SegmentGraph, Supervoxel};

const COINCIDENT: f64 = 1e-9;

/// Boundary evidence between two adjacent supervoxels:
///
/// | case                               | weight              |
/// |------------------------------------|---------------------|
/// | both on the same supporting plane  | 0                   |
/// | one on a plane, or distinct planes | 1                   |
/// | convex junction                    | (1 - n_i . n_j)^2   |
/// | concave junction                   | 1 - n_i . n_j       |
///
/// The junction is convex iff `n_i . d - n_j . d >= 0` with `d` the unit
/// vector from `c_j` to `c_i`; coincident centroids count as convex.
pub fn edge_weight(si: &Supervoxel, sj: &Supervoxel) -> EdgeWeight {
    match (si.on_plane_id, sj.on_plane_id) {
        (Some(a), Some(b)) if a == b => EdgeWeight {
            value: 0.0,
            relation: Relation::SamePlane,
        },
        (Some(_), _) | (_, Some(_)) => EdgeWeight {
            value: 1.0,
            relation: Relation::PlaneAdjacent,
        },
        (None, None) => {
            let dot = si.normal.dot(&sj.normal).clamp(-1.0, 1.0);
            let offset = si.centroid - sj.centroid;
            let length = offset.norm();
            let convex = length < COINCIDENT || {
                let d = offset / length;
                si.normal.dot(&d) - sj.normal.dot(&d) >= 0.0
            };
            if convex {
                EdgeWeight {
                    value: (1.0 - dot).powi(2),
                    relation: Relation::Convex,
                }
            } else {
                EdgeWeight {
                    value: 1.0 - dot,
                    relation: Relation::Concave,
                }
            }
        }
    }
}

pub fn assign_edge_weights(graph: &mut SegmentGraph) {
    let nodes = &graph.nodes;
    for e in &mut graph.edges {
        e.weight = Some(edge_weight(&nodes[e.i], &nodes[e.j]));
    }
}
