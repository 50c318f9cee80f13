use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Point3;
use crate::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Immutable k-d tree over a fixed set of points.
///
/// Queries are exact; among equidistant points the lowest point index wins.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Heap entry ordered by (squared distance, index).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    pub fn build(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot build a spatial index over an empty cloud".into(),
            ));
        }
        let mut index = SpatialIndex {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = self.widest_dim(start, end);
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim]
                .total_cmp(&points[b][dim])
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    fn widest_dim(&self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            let p = &self.points[i];
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Index and Euclidean distance of the closest point.
    pub fn nearest(&self, query: &Point3) -> (usize, f64) {
        let mut best = Candidate {
            d2: f64::INFINITY,
            index: usize::MAX,
        };
        self.nearest_in(0, query, &mut best);
        (best.index, best.d2.sqrt())
    }

    fn nearest_in(&self, node: usize, q: &Point3, best: &mut Candidate) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: (self.points[i] - q).norm_squared(),
                        index: i,
                    };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_in(near, q, best);
                if diff * diff <= best.d2 {
                    self.nearest_in(far, q, best);
                }
            }
        }
    }

    /// The `k` closest points as `(index, distance)`, ascending by distance
    /// then index.
    pub fn knn(&self, query: &Point3, k: usize) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_in(0, query, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort_unstable();
        out.into_iter().map(|c| (c.index, c.d2.sqrt())).collect()
    }

    fn knn_in(&self, node: usize, q: &Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        d2: (self.points[i] - q).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.knn_in(near, q, k, heap);
                let bound = if heap.len() < k {
                    f64::INFINITY
                } else {
                    heap.peek().unwrap().d2
                };
                if diff * diff <= bound {
                    self.knn_in(far, q, k, heap);
                }
            }
        }
    }

    /// Indices of all points within `radius` (inclusive), ascending.
    pub fn within_radius(&self, query: &Point3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.radius_in(0, query, radius * radius, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_in(&self, node: usize, q: &Point3, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => out.extend(
                self.order[start..end]
                    .iter()
                    .copied()
                    .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
            ),
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.radius_in(near, q, r2, out);
                if diff * diff <= r2 {
                    self.radius_in(far, q, r2, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn brute_nearest(points: &[Point3], q: &Point3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = (p - q).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn single_point() {
        let idx = SpatialIndex::build(&[Point3::origin()]).unwrap();
        assert_eq!(idx.nearest(&Point3::new(0.0, 0.02, 0.0)), (0, 0.02));
        assert_eq!(idx.nearest(&Point3::origin()), (0, 0.0));
    }

    #[test]
    fn empty_rejected() {
        assert!(SpatialIndex::build(&[]).is_err());
    }

    #[test]
    fn uniform_cube_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..1000)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let idx = SpatialIndex::build(&pts).unwrap();
        for _ in 0..100 {
            let q = Point3::new(rng.random(), rng.random(), rng.random());
            assert_eq!(idx.nearest(&q), brute_nearest(&pts, &q));
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let pts = vec![
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(-1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
        ];
        let idx = SpatialIndex::build(&pts).unwrap();
        assert_eq!(idx.nearest(&Point3::origin()).0, 0);
        let dup: Vec<Point3> = (0..50).map(|_| Point3::new(0.5, 0.5, 0.5)).collect();
        let idx = SpatialIndex::build(&dup).unwrap();
        assert_eq!(idx.nearest(&Point3::origin()).0, 0);
        let knn: Vec<usize> = idx.knn(&Point3::origin(), 3).iter().map(|c| c.0).collect();
        assert_eq!(knn, vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn nearest_equals_brute_force(
            pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..5000),
            queries in prop::collection::vec((-6.0f64..6.0, -6.0f64..6.0, -6.0f64..6.0), 1..20),
        ) {
            let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let idx = SpatialIndex::build(&pts).unwrap();
            for (x, y, z) in queries {
                let q = Point3::new(x, y, z);
                prop_assert_eq!(idx.nearest(&q), brute_nearest(&pts, &q));
            }
        }

        #[test]
        fn knn_and_radius_match_brute_force(
            pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..600),
            q in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
            k in 1usize..20,
            r in 0.0f64..0.4,
        ) {
            let pts: Vec<Point3> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            let q = Point3::new(q.0, q.1, q.2);
            let idx = SpatialIndex::build(&pts).unwrap();
            let mut all: Vec<(f64, usize)> =
                pts.iter().enumerate().map(|(i, p)| ((p - q).norm(), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expect: Vec<(usize, f64)> = all.iter().take(k).map(|&(d, i)| (i, d)).collect();
            prop_assert_eq!(idx.knn(&q, k), expect);
            let within: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i] - q).norm_squared() <= r * r)
                .collect();
            prop_assert_eq!(idx.within_radius(&q, r), within);
        }
    }
}
