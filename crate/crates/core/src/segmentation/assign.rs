use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::Segment3D;
use crate::frameio::{BBox, CameraIntrinsics, Detection};

/// A detection paired with the segment that carries its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedDetection {
    /// Position of the detection in the input list.
    pub detection_index: usize,
    pub detection: Detection,
    pub segment: Segment3D,
    pub overlap_ratio: f64,
}

/// Fraction of the segment's camera-frame points that project inside `bbox`.
/// Points behind the camera never count. An empty segment scores 0.
pub fn overlap_ratio(segment: &Segment3D, bbox: &BBox, intrinsics: &CameraIntrinsics) -> f64 {
    if segment.is_empty() {
        return 0.0;
    }
    let inside = segment
        .cloud
        .points()
        .iter()
        .filter(|p| {
            intrinsics
                .project(p)
                .is_some_and(|(u, v)| bbox.contains(u, v))
        })
        .count();
    inside as f64 / segment.len() as f64
}

/// Greedy one-to-one matching of object segments to detections.
///
/// Every (segment, detection) pair reaching `min_overlap` is a candidate.
/// Candidates are taken by descending overlap, then larger segment, then
/// lower segment id, then earlier detection; a pair is accepted when neither
/// side is already used. Plane segments never take part. The result follows
/// detection order.
pub fn assign_segments_to_detections(
    segments: &[Segment3D],
    detections: &[Detection],
    intrinsics: &CameraIntrinsics,
    min_overlap: f64,
) -> Vec<SegmentedDetection> {
    let mut candidates = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        let bbox = det.bbox.clamped(intrinsics);
        for (s, seg) in segments.iter().enumerate() {
            if seg.is_plane() || seg.is_empty() {
                continue;
            }
            let r = overlap_ratio(seg, &bbox, intrinsics);
            if r >= min_overlap && r > 0.0 {
                candidates.push((r, s, d));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| segments[b.1].len().cmp(&segments[a.1].len()))
            .then_with(|| segments[a.1].id.cmp(&segments[b.1].id))
            .then_with(|| a.2.cmp(&b.2))
    });

    let mut seg_used = vec![false; segments.len()];
    let mut det_match: Vec<Option<(usize, f64)>> = vec![None; detections.len()];
    for (r, s, d) in candidates {
        if seg_used[s] || det_match[d].is_some() {
            continue;
        }
        seg_used[s] = true;
        det_match[d] = Some((s, r));
    }
    det_match
        .into_iter()
        .enumerate()
        .filter_map(|(d, m)| {
            m.map(|(s, r)| SegmentedDetection {
                detection_index: d,
                detection: detections[d].clone(),
                segment: segments[s].clone(),
                overlap_ratio: r,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{Point3, PointCloud};

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::qvga()
    }

    /// Camera-frame points at depth 1 hitting the given pixels.
    fn segment_at(id: usize, pixels: &[(f64, f64)]) -> Segment3D {
        let k = k();
        let pts: Vec<Point3> = pixels.iter().map(|&(u, v)| k.unproject(u, v, 1.0)).collect();
        Segment3D::new(id, vec![id], PointCloud::new(pts).unwrap()).unwrap()
    }

    fn grid(u0: f64, v0: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n * n).map(|i| (u0 + (i % n) as f64, v0 + (i / n) as f64)).collect()
    }

    fn det(bbox: [f64; 4]) -> Detection {
        Detection {
            keyframe_id: 0,
            class_id: 0,
            class_name: "thing".into(),
            score: 0.9,
            bbox: bbox.into(),
        }
    }

    #[test]
    fn fully_inside_is_assigned() {
        let seg = segment_at(0, &grid(50.0, 50.0, 10));
        let d = det([40.0, 40.0, 70.0, 70.0]);
        assert_eq!(overlap_ratio(&seg, &d.bbox, &k()), 1.0);
        let out = assign_segments_to_detections(&[seg], &[d], &k(), 0.5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].overlap_ratio, 1.0);
    }

    #[test]
    fn fully_outside_is_unassigned() {
        let seg = segment_at(0, &grid(200.0, 200.0, 10));
        let d = det([0.0, 0.0, 50.0, 50.0]);
        assert_eq!(overlap_ratio(&seg, &d.bbox, &k()), 0.0);
        assert!(assign_segments_to_detections(&[seg], &[d], &k(), 0.5).is_empty());
    }

    #[test]
    fn plane_segments_never_assigned() {
        let mut seg = segment_at(0, &grid(50.0, 50.0, 10));
        seg.plane_id = Some(0);
        let d = det([0.0, 0.0, 100.0, 100.0]);
        assert!(assign_segments_to_detections(&[seg], &[d], &k(), 0.5).is_empty());
    }

    #[test]
    fn higher_overlap_detection_wins() {
        // 10 columns; detection A covers 9, detection B covers 6.
        let seg = segment_at(0, &grid(50.0, 50.0, 10));
        let a = det([49.0, 40.0, 58.5, 70.0]);
        let b = det([54.0, 40.0, 70.0, 70.0]);
        assert!((overlap_ratio(&seg, &a.bbox, &k()) - 0.9).abs() < 1e-12);
        assert!((overlap_ratio(&seg, &b.bbox, &k()) - 0.6).abs() < 1e-12);
        let out = assign_segments_to_detections(&[seg], &[b.clone(), a.clone()], &k(), 0.5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].detection, a);
    }

    #[test]
    fn tie_prefers_larger_segment() {
        let small = segment_at(0, &grid(50.0, 50.0, 5));
        let big = segment_at(1, &grid(100.0, 50.0, 10));
        let d = det([0.0, 0.0, 200.0, 200.0]);
        let out = assign_segments_to_detections(&[small, big], &[d], &k(), 0.5);
        assert_eq!(out[0].segment.id, 1);
    }

    fn brute_force(ratios: &[Vec<f64>], sizes: &[usize], min_overlap: f64) -> Vec<Option<usize>> {
        // Replays the greedy order over an explicit candidate enumeration.
        let mut all = Vec::new();
        for (d, row) in ratios.iter().enumerate() {
            for (s, &r) in row.iter().enumerate() {
                if r >= min_overlap && r > 0.0 {
                    all.push((r, s, d));
                }
            }
        }
        let mut out = vec![None; ratios.len()];
        let mut used = vec![false; sizes.len()];
        while !all.is_empty() {
            let best = (0..all.len())
                .min_by(|&x, &y| {
                    let (a, b) = (all[x], all[y]);
                    b.0.partial_cmp(&a.0)
                        .unwrap()
                        .then(sizes[b.1].cmp(&sizes[a.1]))
                        .then(a.1.cmp(&b.1))
                        .then(a.2.cmp(&b.2))
                })
                .unwrap();
            let (_, s, d) = all.swap_remove(best);
            if !used[s] && out[d].is_none() {
                used[s] = true;
                out[d] = Some(s);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_injective(
            cells in prop::collection::vec((0usize..6, 0usize..4, 2usize..6), 1..5),
            boxes in prop::collection::vec((0usize..6, 0usize..4, 1usize..4, 1usize..4), 1..5),
        ) {
            // Segments sit on a coarse 20 px lattice so overlaps vary.
            let segs: Vec<Segment3D> = cells
                .iter()
                .enumerate()
                .map(|(i, &(cx, cy, n))| segment_at(i, &grid(20.0 * cx as f64 + 5.0, 20.0 * cy as f64 + 5.0, n)))
                .collect();
            let dets: Vec<Detection> = boxes
                .iter()
                .map(|&(x, y, w, h)| {
                    let (x0, y0) = (20.0 * x as f64 + 7.0, 20.0 * y as f64 + 4.0);
                    det([x0, y0, x0 + 20.0 * w as f64 - 8.0, y0 + 20.0 * h as f64 - 9.0])
                })
                .collect();
            let ratios: Vec<Vec<f64>> = dets
                .iter()
                .map(|d| segs.iter().map(|s| overlap_ratio(s, &d.bbox.clamped(&k()), &k())).collect())
                .collect();
            let sizes: Vec<usize> = segs.iter().map(|s| s.len()).collect();
            let expected = brute_force(&ratios, &sizes, 0.5);
            let out = assign_segments_to_detections(&segs, &dets, &k(), 0.5);
            let mut got = vec![None; dets.len()];
            for sd in &out {
                got[sd.detection_index] = Some(sd.segment.id);
            }
            let mut ids: Vec<usize> = out.iter().map(|s| s.segment.id).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), out.len());
            prop_assert_eq!(got, expected);
            prop_assert!(out.iter().all(|s| s.overlap_ratio >= 0.5));
        }
    }
}
