use serde::{Deserialize, Serialize};

use super::{Point3, Vector3, UNIT_TOLERANCE};
use crate::{Error, Result};

pub type Rgb = [u8; 3];

/// An ordered set of 3D points in meters with optional parallel colors and
/// unit normals.
///
/// Fields are private so the parallel-length, finiteness and unit-normal
/// invariants hold for every instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    colors: Option<Vec<Rgb>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normals: Option<Vec<Vector3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    organized_shape: Option<(usize, usize)>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(PointCloud {
            points,
            ..Default::default()
        })
    }

    pub fn from_parts(
        points: Vec<Point3>,
        colors: Option<Vec<Rgb>>,
        normals: Option<Vec<Vector3>>,
        organized_shape: Option<(usize, usize)>,
    ) -> Result<Self> {
        let mut cloud = PointCloud::new(points)?;
        if let Some(colors) = colors {
            cloud = cloud.with_colors(colors)?;
        }
        if let Some(normals) = normals {
            cloud = cloud.with_normals(normals)?;
        }
        if let Some((w, h)) = organized_shape {
            cloud = cloud.with_organized_shape(w, h)?;
        }
        Ok(cloud)
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} colors for {} points",
                colors.len(),
                self.points.len()
            )));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_normals(mut self, normals: Vec<Vector3>) -> Result<Self> {
        if normals.len() != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > UNIT_TOLERANCE)
        {
            return Err(Error::InvalidArgument(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn with_organized_shape(mut self, width: usize, height: usize) -> Result<Self> {
        if width * height < self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "organized shape {width}x{height} smaller than {} points",
                self.points.len()
            )));
        }
        self.organized_shape = Some((width, height));
        Ok(self)
    }

    pub fn without_normals(mut self) -> Self {
        self.normals = None;
        self
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vector3]> {
        self.normals.as_deref()
    }

    pub fn organized_shape(&self) -> Option<(usize, usize)> {
        self.organized_shape
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arithmetic mean of the points, `None` for an empty cloud.
    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self
            .points
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    /// Sub-cloud with the given point indices, in the given order. Parallel
    /// attributes are carried over; the organized shape is not.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
            organized_shape: None,
        }
    }

    /// Concatenation of clouds. Colors and normals survive only when every
    /// part carries them.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a PointCloud>) -> PointCloud {
        let parts: Vec<&PointCloud> = parts.into_iter().collect();
        let all_colors = !parts.is_empty() && parts.iter().all(|p| p.colors.is_some());
        let all_normals = !parts.is_empty() && parts.iter().all(|p| p.normals.is_some());
        let mut out = PointCloud::default();
        for part in &parts {
            out.points.extend_from_slice(&part.points);
        }
        if all_colors {
            out.colors = Some(
                parts
                    .iter()
                    .flat_map(|p| p.colors.as_ref().unwrap().iter().copied())
                    .collect(),
            );
        }
        if all_normals {
            out.normals = Some(
                parts
                    .iter()
                    .flat_map(|p| p.normals.as_ref().unwrap().iter().copied())
                    .collect(),
            );
        }
        out
    }

    pub(crate) fn from_raw(
        points: Vec<Point3>,
        colors: Option<Vec<Rgb>>,
        normals: Option<Vec<Vector3>>,
        organized_shape: Option<(usize, usize)>,
    ) -> PointCloud {
        debug_assert!(colors.as_ref().map_or(true, |c| c.len() == points.len()));
        debug_assert!(normals.as_ref().map_or(true, |n| n.len() == points.len()));
        PointCloud {
            points,
            colors,
            normals,
            organized_shape,
        }
    }
}

impl FromIterator<Point3> for PointCloud {
    /// Panics on non-finite coordinates.
    fn from_iter<I: IntoIterator<Item = Point3>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().collect()).expect("finite points")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_points() {
        assert!(PointCloud::new(vec![Point3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(PointCloud::new(vec![Point3::new(0.0, f64::INFINITY, 0.0)]).is_err());
    }

    #[test]
    fn parallel_lengths_enforced() {
        let c = PointCloud::new(vec![Point3::origin(); 3]).unwrap();
        assert!(c.clone().with_colors(vec![[0, 0, 0]; 2]).is_err());
        assert!(c.clone().with_normals(vec![Vector3::z(); 4]).is_err());
        assert!(c.clone().with_normals(vec![Vector3::new(0.0, 0.0, 2.0); 3]).is_err());
        assert!(c.clone().with_organized_shape(1, 2).is_err());
        assert!(c.with_organized_shape(2, 2).is_ok());
    }

    #[test]
    fn centroid_and_select() {
        let c: PointCloud = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(4.0, 3.0, 0.0),
        ]
        .into_iter()
        .collect();
        assert_eq!(c.centroid().unwrap(), Point3::new(2.0, 1.0, 0.0));
        let s = c.select(&[2, 0]);
        assert_eq!(s.points(), &[Point3::new(4.0, 3.0, 0.0), Point3::origin()]);
        assert!(PointCloud::default().centroid().is_none());
    }

    #[test]
    fn concat_drops_partial_attributes() {
        let a = PointCloud::new(vec![Point3::origin()])
            .unwrap()
            .with_colors(vec![[1, 2, 3]])
            .unwrap();
        let b = PointCloud::new(vec![Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let ab = PointCloud::concat([&a, &b]);
        assert_eq!(ab.len(), 2);
        assert!(ab.colors().is_none());
        let aa = PointCloud::concat([&a, &a]);
        assert_eq!(aa.colors().unwrap(), &[[1, 2, 3], [1, 2, 3]]);
    }
}
