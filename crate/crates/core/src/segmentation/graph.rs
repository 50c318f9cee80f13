use std::collections::BTreeMap;

use super::Segment3D;
use crate::geometry::PointCloud;
use crate::supervoxel::SegmentGraph;
use crate::{Error, Result};

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    size: Vec<usize>,
    internal: Vec<f64>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize, weight: f64) {
        let (hi, lo) = if self.rank[a] >= self.rank[b] { (a, b) } else { (b, a) };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.size[hi] += self.size[lo];
        self.internal[hi] = weight;
    }
}

/// Graph-based segmentation by Kruskal merging.
///
/// Edges are visited by ascending weight (ties by `(i, j)`). Components `A`
/// and `B` merge over an edge of weight `w` iff
/// `w <= min(Int(A) + k/|A|, Int(B) + k/|B|)`, where `Int` is the largest
/// weight in the component's merge tree. Returns a component label per
/// node; labels are dense and numbered by each component's lowest node.
pub fn felzenszwalb(n_nodes: usize, edges: &[(usize, usize, f64)], k: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&edges[a], &edges[b]);
        ea.2.total_cmp(&eb.2)
            .then(ea.0.cmp(&eb.0))
            .then(ea.1.cmp(&eb.1))
    });
    let mut sets = DisjointSet::new(n_nodes);
    for idx in order {
        let (i, j, w) = edges[idx];
        let (a, b) = (sets.find(i), sets.find(j));
        if a == b {
            continue;
        }
        let threshold_a = sets.internal[a] + k / sets.size[a] as f64;
        let threshold_b = sets.internal[b] + k / sets.size[b] as f64;
        if w <= threshold_a.min(threshold_b) {
            sets.union(a, b, w);
        }
    }
    let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
    (0..n_nodes)
        .map(|node| {
            let root = sets.find(node);
            let next = dense.len();
            *dense.entry(root).or_insert(next)
        })
        .collect()
}

/// Cuts the weighted supervoxel graph into segments.
///
/// Supervoxels on supporting planes are pulled out of their components and
/// returned as one plane segment per plane, after all object segments.
pub fn segment_graph(graph: &SegmentGraph, cloud: &PointCloud, k: f64) -> Result<Vec<Segment3D>> {
    let mut edges = Vec::with_capacity(graph.edges.len());
    for e in &graph.edges {
        let w = e.weight.ok_or_else(|| {
            Error::Precondition(format!("edge ({}, {}) has no weight", e.i, e.j))
        })?;
        edges.push((e.i, e.j, w.value));
    }
    let labels = felzenszwalb(graph.nodes.len(), &edges, k);

    let mut objects: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut planes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, sv) in graph.nodes.iter().enumerate() {
        match sv.on_plane_id {
            Some(plane) => planes.entry(plane).or_default().push(node),
            None => objects.entry(labels[node]).or_default().push(node),
        }
    }

    let build = |id: usize, members: Vec<usize>| {
        let indices: Vec<usize> = members
            .iter()
            .flat_map(|&m| graph.nodes[m].point_indices.iter().copied())
            .collect();
        Segment3D::new(id, members, cloud.select(&indices))
    };
    let mut segments = Vec::with_capacity(objects.len() + planes.len());
    for members in objects.into_values() {
        if let Some(seg) = build(segments.len(), members) {
            segments.push(seg);
        }
    }
    for (plane, members) in planes {
        if let Some(mut seg) = build(segments.len(), members) {
            seg.plane_id = Some(plane);
            segments.push(seg);
        }
    }
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_traced_three_nodes() {
        // (A,B,0): 0 <= 0.5 merges. (B,C,1): 1 > min(0 + 0.25, 0 + 0.5) stays cut.
        let labels = felzenszwalb(3, &[(0, 1, 0.0), (1, 2, 1.0)], 0.5);
        assert_eq!(labels, vec![0, 0, 1]);
    }

    #[test]
    fn zero_weights_give_one_component() {
        let edges: Vec<_> = (0..9).map(|i| (i, i + 1, 0.0)).collect();
        assert!(felzenszwalb(10, &edges, 0.01).iter().all(|&l| l == 0));
    }

    #[test]
    fn no_edges_one_component_per_node() {
        assert_eq!(felzenszwalb(4, &[], 10.0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn unweighted_edges_rejected() {
        let graph = SegmentGraph {
            nodes: Vec::new(),
            edges: vec![crate::supervoxel::Edge { i: 0, j: 1, weight: None }],
        };
        assert!(segment_graph(&graph, &PointCloud::default(), 1.0).is_err());
    }
}
