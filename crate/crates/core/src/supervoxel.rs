//! Supervoxel over-segmentation of a camera-frame cloud and the adjacency
//! graph between neighboring supervoxels.
//!
//! Seeds start at the centroids of the occupied cells of a cubic grid
//! (pitch = seed resolution, anchored at the cloud's lower bound). Each
//! growth iteration assigns every point to the best seed within one seed
//! resolution under
//!
//! ```text
//! D = w_spatial * |p - c| / r + w_normal * (1 - n . n_seed) + w_color * |rgb - rgb_seed| / 441.67
//! ```
//!
//! and then moves each seed to the mean of its members. A point with no seed
//! in range founds a new seed. Because members are always within `r` of the
//! seed they were assigned to, every member ends within `2r` of its
//! supervoxel centroid.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geometry::{pca_normal, Point3, PointCloud, Rgb, SpatialIndex, Vector3, SENSOR_FACING_AXIS};
use crate::{Error, Result};

/// Largest RGB distance, `sqrt(3 * 255^2)`.
const MAX_COLOR_DISTANCE: f64 = 441.67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceWeights {
    pub spatial: f64,
    pub normal: f64,
    pub color: f64,
}

impl Default for DistanceWeights {
    fn default() -> Self {
        DistanceWeights {
            spatial: 0.4,
            normal: 0.4,
            color: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Supervoxel {
    pub id: usize,
    pub point_indices: Vec<usize>,
    pub centroid: Point3,
    pub normal: Vector3,
    pub mean_color: Option<Rgb>,
    pub on_plane_id: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    SamePlane,
    PlaneAdjacent,
    Convex,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeight {
    pub value: f64,
    pub relation: Relation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: Option<EdgeWeight>,
}

/// Supervoxels plus undirected edges stored once with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentGraph {
    pub nodes: Vec<Supervoxel>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Copy)]
struct Seed {
    center: Point3,
    normal: Vector3,
    color: [f64; 3],
    alive: bool,
}

type Cell = [i64; 3];

struct Grid {
    origin: Point3,
    resolution: f64,
}

impl Grid {
    fn cell(&self, p: &Point3) -> Cell {
        let d = (p - self.origin) / self.resolution;
        [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64]
    }
}

fn neighborhood(c: Cell) -> impl Iterator<Item = Cell> {
    (-1..=1).flat_map(move |dx| {
        (-1..=1).flat_map(move |dy| (-1..=1).map(move |dz| [c[0] + dx, c[1] + dy, c[2] + dz]))
    })
}

fn color_of(colors: Option<&[Rgb]>, i: usize) -> [f64; 3] {
    colors.map_or([0.0; 3], |c| c[i].map(f64::from))
}

/// Occupied cells of the seeding grid, sorted by cell index. Each entry is
/// the range of `order` holding that cell's point indices.
fn bucket_points(cloud: &PointCloud, grid: &Grid) -> (Vec<usize>, Vec<(Cell, Range<usize>)>) {
    let mut keyed: Vec<(Cell, usize)> = cloud
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (grid.cell(p), i))
        .collect();
    keyed.sort_unstable();
    let mut buckets = Vec::new();
    let mut start = 0;
    for i in 1..=keyed.len() {
        if i == keyed.len() || keyed[i].0 != keyed[start].0 {
            buckets.push((keyed[start].0, start..i));
            start = i;
        }
    }
    (keyed.into_iter().map(|(_, i)| i).collect(), buckets)
}

/// Number of occupied seed cells, i.e. supervoxel seeds before growth.
pub fn seed_count(cloud: &PointCloud, seed_resolution: f64) -> usize {
    if cloud.is_empty() {
        return 0;
    }
    let grid = Grid {
        origin: lower_bound(cloud),
        resolution: seed_resolution,
    };
    bucket_points(cloud, &grid).1.len()
}

fn lower_bound(cloud: &PointCloud) -> Point3 {
    cloud.points().iter().fold(
        Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        |acc, p| Point3::new(acc.x.min(p.x), acc.y.min(p.y), acc.z.min(p.z)),
    )
}

pub fn oversegment(
    cloud: &PointCloud,
    seed_resolution: f64,
    weights: DistanceWeights,
    max_iterations: usize,
) -> Result<Vec<Supervoxel>> {
    let normals = cloud.normals().ok_or_else(|| {
        Error::Precondition("over-segmentation needs a cloud with normals".into())
    })?;
    if !(seed_resolution > 0.0) || !seed_resolution.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "seed resolution must be positive, got {seed_resolution}"
        )));
    }
    if cloud.is_empty() {
        return Ok(Vec::new());
    }
    let points = cloud.points();
    let colors = cloud.colors();
    let grid = Grid {
        origin: lower_bound(cloud),
        resolution: seed_resolution,
    };
    let (order, buckets) = bucket_points(cloud, &grid);
    let bucket_of: HashMap<Cell, Range<usize>> = buckets.iter().cloned().collect();

    let mut seeds: Vec<Seed> = buckets
        .iter()
        .map(|(_, range)| {
            let members = &order[range.clone()];
            let mut center = Vector3::zeros();
            let mut normal = Vector3::zeros();
            let mut color = [0.0; 3];
            for &i in members {
                center += points[i].coords;
                normal += normals[i];
                let c = color_of(colors, i);
                for k in 0..3 {
                    color[k] += c[k];
                }
            }
            let n = members.len() as f64;
            Seed {
                center: Point3::from(center / n),
                normal: normal.try_normalize(1e-12).unwrap_or(normals[members[0]]),
                color: color.map(|c| c / n),
                alive: true,
            }
        })
        .collect();

    let distance = |i: usize, seed: &Seed| -> Option<f64> {
        let d = (points[i] - seed.center).norm();
        if d > seed_resolution {
            return None;
        }
        let mut cost = weights.spatial * d / seed_resolution
            + weights.normal * (1.0 - normals[i].dot(&seed.normal));
        if colors.is_some() {
            let c = color_of(colors, i);
            let dc = ((c[0] - seed.color[0]).powi(2)
                + (c[1] - seed.color[1]).powi(2)
                + (c[2] - seed.color[2]).powi(2))
            .sqrt();
            cost += weights.color * dc / MAX_COLOR_DISTANCE;
        }
        Some(cost)
    };

    let mut labels: Vec<usize> = vec![usize::MAX; points.len()];
    for _ in 0..max_iterations.max(1) {
        let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); points.len()];
        for (sid, seed) in seeds.iter().enumerate().filter(|(_, s)| s.alive) {
            for cell in neighborhood(grid.cell(&seed.center)) {
                let Some(range) = bucket_of.get(&cell) else { continue };
                for &i in &order[range.clone()] {
                    if let Some(cost) = distance(i, seed) {
                        if cost < best[i].0 {
                            best[i] = (cost, sid);
                        }
                    }
                }
            }
        }

        // points out of reach of every seed found new seeds, in index order
        let mut spawned: HashMap<Cell, Vec<usize>> = HashMap::new();
        for i in 0..points.len() {
            if best[i].1 != usize::MAX {
                continue;
            }
            let mut choice = (f64::INFINITY, usize::MAX);
            for cell in neighborhood(grid.cell(&points[i])) {
                for &sid in spawned.get(&cell).into_iter().flatten() {
                    if let Some(cost) = distance(i, &seeds[sid]) {
                        if cost < choice.0 || (cost == choice.0 && sid < choice.1) {
                            choice = (cost, sid);
                        }
                    }
                }
            }
            if choice.1 == usize::MAX {
                seeds.push(Seed {
                    center: points[i],
                    normal: normals[i],
                    color: color_of(colors, i),
                    alive: true,
                });
                let sid = seeds.len() - 1;
                spawned.entry(grid.cell(&points[i])).or_default().push(sid);
                choice = (0.0, sid);
            }
            best[i] = choice;
        }

        let new_labels: Vec<usize> = best.iter().map(|b| b.1).collect();
        let converged = new_labels == labels;
        labels = new_labels;

        let mut sums = vec![(Vector3::zeros(), Vector3::zeros(), [0.0f64; 3], 0usize); seeds.len()];
        for (i, &l) in labels.iter().enumerate() {
            let s = &mut sums[l];
            s.0 += points[i].coords;
            s.1 += normals[i];
            let c = color_of(colors, i);
            for k in 0..3 {
                s.2[k] += c[k];
            }
            s.3 += 1;
        }
        for (seed, (center, normal, color, count)) in seeds.iter_mut().zip(sums) {
            if count == 0 {
                seed.alive = false;
                continue;
            }
            let n = count as f64;
            seed.center = Point3::from(center / n);
            if let Some(normal) = normal.try_normalize(1e-12) {
                seed.normal = normal;
            }
            seed.color = color.map(|c| c / n);
        }
        if converged {
            break;
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); seeds.len()];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    Ok(members
        .into_iter()
        .filter(|m| !m.is_empty())
        .enumerate()
        .map(|(id, point_indices)| make_supervoxel(id, point_indices, cloud))
        .collect())
}

fn make_supervoxel(id: usize, point_indices: Vec<usize>, cloud: &PointCloud) -> Supervoxel {
    let points = cloud.points();
    let n = point_indices.len() as f64;
    let centroid = Point3::from(
        point_indices
            .iter()
            .fold(Vector3::zeros(), |acc, &i| acc + points[i].coords)
            / n,
    );
    let normal = pca_normal(point_indices.iter().map(|&i| &points[i]))
        .or_else(|| {
            let normals = cloud.normals()?;
            point_indices
                .iter()
                .fold(Vector3::zeros(), |acc, &i| acc + normals[i])
                .try_normalize(1e-12)
        })
        .unwrap_or(SENSOR_FACING_AXIS);
    let normal = if normal.dot(&centroid.coords) > 0.0 {
        -normal
    } else {
        normal
    };
    let mean_color = cloud.colors().map(|colors| {
        let mut sum = [0u64; 3];
        for &i in &point_indices {
            for k in 0..3 {
                sum[k] += u64::from(colors[i][k]);
            }
        }
        let count = point_indices.len() as u64;
        sum.map(|s| ((2 * s + count) / (2 * count)) as u8)
    });
    Supervoxel {
        id,
        point_indices,
        centroid,
        normal,
        mean_color,
        on_plane_id: None,
    }
}

/// Twice the median nearest-neighbor distance of the cloud.
pub fn default_contact_distance(cloud: &PointCloud, index: &SpatialIndex) -> f64 {
    let mut spacing: Vec<f64> = cloud
        .points()
        .iter()
        .filter_map(|p| index.knn(p, 2).get(1).map(|&(_, d)| d))
        .collect();
    if spacing.is_empty() {
        return 0.0;
    }
    let mid = spacing.len() / 2;
    let (_, median, _) = spacing.select_nth_unstable_by(mid, f64::total_cmp);
    2.0 * *median
}

/// Connects supervoxels `i < j` whenever some point of `i` lies within
/// `contact_distance` of some point of `j`. `None` uses
/// [`default_contact_distance`].
pub fn build_adjacency(
    supervoxels: Vec<Supervoxel>,
    cloud: &PointCloud,
    contact_distance: Option<f64>,
) -> Result<SegmentGraph> {
    if cloud.is_empty() || supervoxels.is_empty() {
        return Ok(SegmentGraph {
            nodes: supervoxels,
            edges: Vec::new(),
        });
    }
    let mut label = vec![usize::MAX; cloud.len()];
    for (pos, sv) in supervoxels.iter().enumerate() {
        if sv.id != pos {
            return Err(Error::InvalidArgument(format!(
                "supervoxel at position {pos} has id {}",
                sv.id
            )));
        }
        for &i in &sv.point_indices {
            if i >= cloud.len() {
                return Err(Error::InvalidArgument(format!(
                    "supervoxel {pos} references point {i} outside the cloud"
                )));
            }
            label[i] = pos;
        }
    }
    let index = SpatialIndex::build(cloud.points())?;
    let radius = contact_distance.unwrap_or_else(|| default_contact_distance(cloud, &index));
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for (i, p) in cloud.points().iter().enumerate() {
        let a = label[i];
        if a == usize::MAX {
            continue;
        }
        for j in index.within_radius(p, radius) {
            let b = label[j];
            if j > i && b != usize::MAX && b != a {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    let mut edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(i, j)| Edge { i, j, weight: None })
        .collect();
    edges.sort_unstable_by_key(|e| (e.i, e.j));
    Ok(SegmentGraph {
        nodes: supervoxels,
        edges,
    })
}
