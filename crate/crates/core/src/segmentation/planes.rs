use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{pca_normal, Point3, Vector3};
use crate::supervoxel::Supervoxel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneParams {
    /// Largest angle between a supervoxel normal and the plane normal.
    pub angle_tol_deg: f64,
    /// Largest centroid-to-plane distance, meters.
    pub dist_tol: f64,
    /// Fewest inlier supervoxels for a plane to count as supporting.
    pub min_support: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Largest angle between a plane normal and `up`.
    pub max_tilt_deg: f64,
    /// Up direction in the cloud's frame. When set, only planes roughly
    /// perpendicular to it are accepted.
    #[serde(skip)]
    pub up: Option<Vector3>,
}

impl Default for PlaneParams {
    fn default() -> Self {
        PlaneParams {
            angle_tol_deg: 10.0,
            dist_tol: 0.01,
            min_support: 150,
            iterations: 200,
            seed: 42,
            max_tilt_deg: 15.0,
            up: None,
        }
    }
}

/// Plane `normal . p = offset`, with the normal facing the camera origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingPlane {
    pub id: usize,
    pub normal: Vector3,
    pub offset: f64,
    pub inliers: Vec<usize>,
}

impl SupportingPlane {
    pub fn distance(&self, p: &Point3) -> f64 {
        (self.normal.dot(&p.coords) - self.offset).abs()
    }
}

fn plane_through(a: &Point3, b: &Point3, c: &Point3) -> Option<(Vector3, f64)> {
    let n = (b - a).cross(&(c - a));
    let scale = (b - a).norm() * (c - a).norm();
    if !(scale > 0.0) || n.norm() < 1e-6 * scale {
        return None;
    }
    let n = n.normalize();
    Some((n, n.dot(&a.coords)))
}

fn inliers(
    svs: &[Supervoxel],
    pool: &[usize],
    normal: &Vector3,
    offset: f64,
    params: &PlaneParams,
    cos_tol: f64,
) -> Vec<usize> {
    pool.iter()
        .copied()
        .filter(|&s| {
            let sv = &svs[s];
            (normal.dot(&sv.centroid.coords) - offset).abs() <= params.dist_tol
                && sv.normal.dot(normal).abs() >= cos_tol
        })
        .collect()
}

/// Greedy sequential RANSAC over supervoxel centroids.
///
/// Each round keeps the three-centroid hypothesis with the most inliers
/// (centroid within `dist_tol`, normal within `angle_tol_deg`), refits it to
/// the inlier centroids, and accepts it when at least `min_support`
/// supervoxels agree. Accepted supervoxels get `on_plane_id` and leave the
/// pool. Deterministic for a fixed seed.
pub fn extract_supporting_planes(
    supervoxels: &mut [Supervoxel],
    params: &PlaneParams,
) -> Vec<SupportingPlane> {
    let cos_tol = params.angle_tol_deg.to_radians().cos();
    let cos_tilt = params.max_tilt_deg.to_radians().cos();
    let up = params.up.and_then(|u| u.try_normalize(1e-12));
    let level = |n: &Vector3| up.is_none_or(|u| n.dot(&u).abs() >= cos_tilt);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pool: Vec<usize> = (0..supervoxels.len())
        .filter(|&i| supervoxels[i].on_plane_id.is_none())
        .collect();
    let mut planes = Vec::new();
    let min_support = params.min_support.max(3);

    while pool.len() >= min_support {
        let mut best: Vec<usize> = Vec::new();
        for _ in 0..params.iterations {
            let pick = sample(&mut rng, pool.len(), 3);
            let [a, b, c] = [pick.index(0), pick.index(1), pick.index(2)]
                .map(|i| &supervoxels[pool[i]].centroid);
            let Some((normal, offset)) = plane_through(a, b, c) else { continue };
            if !level(&normal) {
                continue;
            }
            let found = inliers(supervoxels, &pool, &normal, offset, params, cos_tol);
            if found.len() > best.len() {
                best = found;
            }
        }
        if best.len() < min_support {
            break;
        }
        let Some(refined) = pca_normal(best.iter().map(|&s| &supervoxels[s].centroid)) else {
            break;
        };
        let mean = best
            .iter()
            .fold(Vector3::zeros(), |acc, &s| acc + supervoxels[s].centroid.coords)
            / best.len() as f64;
        if !level(&refined) {
            break;
        }
        let (mut normal, mut offset) = (refined, refined.dot(&mean));
        if offset > 0.0 {
            normal = -normal;
            offset = -offset;
        }
        let members = inliers(supervoxels, &pool, &normal, offset, params, cos_tol);
        if members.len() < min_support {
            break;
        }
        let id = planes.len();
        for &s in &members {
            supervoxels[s].on_plane_id = Some(id);
        }
        pool.retain(|s| supervoxels[*s].on_plane_id.is_none());
        planes.push(SupportingPlane {
            id,
            normal,
            offset,
            inliers: members,
        });
    }
    planes
}
