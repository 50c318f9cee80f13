use nalgebra::SymmetricEigen;

use super::{Matrix3, Point3, PointCloud, SpatialIndex, Vector3};
use crate::{Error, Result};

/// Normal assigned to rank-deficient neighborhoods: the reversed optical
/// axis, facing the camera.
pub const SENSOR_FACING_AXIS: Vector3 = Vector3::new(0.0, 0.0, -1.0);

/// Relative eigenvalue floor below which a neighborhood counts as
/// rank-deficient.
const RANK_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub cloud: PointCloud,
    /// Points whose neighborhood had rank < 2.
    pub degenerate: usize,
}

/// Smallest-eigenvalue eigenvector of the covariance of `points`, or `None`
/// when the points span fewer than two dimensions. Sign is arbitrary.
pub fn pca_normal<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<Vector3> {
    let mut n = 0usize;
    let mut sum = Vector3::zeros();
    let mut outer = Matrix3::zeros();
    for p in points {
        n += 1;
        sum += p.coords;
        outer += p.coords * p.coords.transpose();
    }
    if n < 3 {
        return None;
    }
    let mean = sum / n as f64;
    let cov = outer / n as f64 - mean * mean.transpose();
    smallest_eigenvector(cov)
}

fn smallest_eigenvector(cov: Matrix3) -> Option<Vector3> {
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if !(largest > 0.0) || middle <= RANK_EPS * largest {
        return None;
    }
    let v = eig.eigenvectors.column(order[0]).into_owned();
    let norm = v.norm();
    (norm > 0.0).then(|| v / norm)
}

/// Flips `n` so it points from `p` toward the sensor origin.
pub(crate) fn orient_toward_origin(n: Vector3, p: &Point3) -> Vector3 {
    if n.dot(&p.coords) > 0.0 {
        -n
    } else {
        n
    }
}

/// Per-point normals from the covariance of the `k` nearest neighbors
/// (the point itself included), oriented toward the camera origin.
pub fn estimate_normals(cloud: &PointCloud, k_neighbors: usize) -> Result<NormalEstimate> {
    if k_neighbors < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs k >= 3, got {k_neighbors}"
        )));
    }
    if cloud.len() < k_neighbors {
        return Err(Error::InvalidArgument(format!(
            "normal estimation needs at least k = {k_neighbors} points, got {}",
            cloud.len()
        )));
    }
    let index = SpatialIndex::build(cloud.points())?;
    let points = cloud.points();
    let mut degenerate = 0;
    let normals: Vec<Vector3> = points
        .iter()
        .map(|p| {
            let neighbors = index.knn(p, k_neighbors);
            match pca_normal(neighbors.iter().map(|&(i, _)| &points[i])) {
                Some(n) => orient_toward_origin(n, p),
                None => {
                    degenerate += 1;
                    SENSOR_FACING_AXIS
                }
            }
        })
        .collect();
    let out = cloud.clone().with_normals(normals)?;
    Ok(NormalEstimate {
        cloud: out,
        degenerate,
    })
}
