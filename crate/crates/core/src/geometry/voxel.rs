use std::collections::HashMap;

use super::{Point3, PointCloud, Vector3};
use crate::{Error, Result};

/// Integer index of the axis-aligned cubic cell containing a point; cells are
/// anchored at the world origin.
pub type VoxelCell = [i64; 3];

pub fn voxel_cell(p: &Point3, resolution: f64) -> VoxelCell {
    [
        (p.x / resolution).floor() as i64,
        (p.y / resolution).floor() as i64,
        (p.z / resolution).floor() as i64,
    ]
}

struct CellAccumulator {
    cell: VoxelCell,
    sum: Vector3,
    color_sum: [u64; 3],
    count: usize,
}

/// Replaces all points of each occupied cell by their centroid. Colors are
/// averaged per channel and rounded; normals are dropped. Output is ordered
/// by cell index.
pub fn voxel_downsample(cloud: &PointCloud, resolution: f64) -> Result<PointCloud> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "voxel resolution must be positive, got {resolution}"
        )));
    }
    let mut slots: HashMap<VoxelCell, usize> = HashMap::with_capacity(cloud.len() / 2 + 1);
    let mut cells: Vec<CellAccumulator> = Vec::new();
    let colors = cloud.colors();
    for (i, p) in cloud.points().iter().enumerate() {
        let cell = voxel_cell(p, resolution);
        let slot = *slots.entry(cell).or_insert_with(|| {
            cells.push(CellAccumulator {
                cell,
                sum: Vector3::zeros(),
                color_sum: [0; 3],
                count: 0,
            });
            cells.len() - 1
        });
        let acc = &mut cells[slot];
        acc.sum += p.coords;
        acc.count += 1;
        if let Some(colors) = colors {
            for (s, &c) in acc.color_sum.iter_mut().zip(colors[i].iter()) {
                *s += u64::from(c);
            }
        }
    }
    cells.sort_unstable_by_key(|c| c.cell);

    let points = cells
        .iter()
        .map(|c| Point3::from(c.sum / c.count as f64))
        .collect();
    let out_colors = colors.map(|_| {
        cells
            .iter()
            .map(|c| {
                let n = c.count as u64;
                // round half up
                c.color_sum.map(|s| ((2 * s + n) / (2 * n)) as u8)
            })
            .collect()
    });
    Ok(PointCloud::from_raw(points, out_colors, None, None))
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use proptest::prelude::*;

    use super::*;

    #[test]
    fn merges_points_in_one_cell() {
        let c = PointCloud::new(vec![Point3::new(0.001, 0.0, 0.0), Point3::new(0.002, 0.0, 0.0)])
            .unwrap();
        let out = voxel_downsample(&c, 0.005).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out.points()[0] - Point3::new(0.0015, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn keeps_distinct_cells() {
        let c = PointCloud::new(vec![Point3::origin(), Point3::new(0.010, 0.0, 0.0)]).unwrap();
        assert_eq!(voxel_downsample(&c, 0.005).unwrap().len(), 2);
    }

    #[test]
    fn empty_and_bad_resolution() {
        assert!(voxel_downsample(&PointCloud::default(), 0.005).unwrap().is_empty());
        assert!(voxel_downsample(&PointCloud::default(), 0.0).is_err());
        assert!(voxel_downsample(&PointCloud::default(), -1.0).is_err());
        assert!(voxel_downsample(&PointCloud::default(), f64::NAN).is_err());
    }

    #[test]
    fn colors_are_rounded_means() {
        let c = PointCloud::new(vec![Point3::origin(), Point3::new(0.001, 0.0, 0.0)])
            .unwrap()
            .with_colors(vec![[0, 10, 255], [1, 11, 254]])
            .unwrap();
        let out = voxel_downsample(&c, 0.005).unwrap();
        assert_eq!(out.colors().unwrap(), &[[1, 11, 255]]);
    }

    #[test]
    fn negative_coordinates_use_floor() {
        let c = PointCloud::new(vec![Point3::new(-0.001, 0.0, 0.0), Point3::new(0.001, 0.0, 0.0)])
            .unwrap();
        assert_eq!(voxel_downsample(&c, 0.005).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn at_most_one_point_per_cell(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 0..400),
            res in 0.01f64..0.5,
        ) {
            let cloud: PointCloud = pts.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let out = voxel_downsample(&cloud, res).unwrap();
            let input_cells: HashSet<VoxelCell> =
                cloud.points().iter().map(|p| voxel_cell(p, res)).collect();
            let output_cells: Vec<VoxelCell> =
                out.points().iter().map(|p| voxel_cell(p, res)).collect();
            let unique: HashSet<VoxelCell> = output_cells.iter().copied().collect();
            prop_assert_eq!(unique.len(), output_cells.len());
            prop_assert_eq!(unique, input_cells);
        }
    }
}
