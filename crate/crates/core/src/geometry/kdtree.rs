use super::{PointCloud, Vec3};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static k-d tree over a point cloud.
///
/// Nearest-neighbour queries are exact: they return the same point as an
/// exhaustive scan, with ties resolved toward the lowest point index.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    points: Vec<Vec3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("spatial index point set"));
        }
        if let Some(i) = points.iter().position(|p| !super::is_finite(p)) {
            return Err(Error::invalid(format!("spatial index point {i} is not finite")));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build(&points, &mut order, 0, points.len(), &mut nodes);
        Ok(SpatialIndex { points, order, nodes })
    }

    pub fn from_cloud(cloud: &PointCloud) -> Result<Self> {
        Self::new(cloud.points.clone())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Index and squared distance of the point nearest to `q`.
    pub fn nearest_sq(&self, q: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        best
    }

    /// Index and Euclidean distance of the point nearest to `q`.
    pub fn nearest(&self, q: &Vec3) -> (usize, f64) {
        let (i, d2) = self.nearest_sq(q);
        (i, d2.sqrt())
    }

    fn search(&self, node: usize, q: &Vec3, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equal distances must still be visited for the index tie-break.
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build(points: &[Vec3], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let slice = &mut order[start..end];
    let mut lo = points[slice[0]];
    let mut hi = lo;
    for &i in slice.iter() {
        let p = points[i];
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = hi - lo;
    let axis = extent.imax();
    if extent[axis] == 0.0 {
        // All points coincide.
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let value = points[slice[mid]][axis];
    // Points left of `mid` are <= value and right of it >= value.
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build(points, order, start, start + mid, nodes);
    let right = build(points, order, start + mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

/// Radius of the inscribed sphere at each centerline point: the distance to
/// the nearest surface sample.
pub fn compute_radii(points: &[Vec3], surface: &SpatialIndex) -> Result<Vec<f64>> {
    if surface.is_empty() {
        return Err(Error::EmptyInput("surface index"));
    }
    Ok(points.iter().map(|p| surface.nearest(p).1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Vec3], q: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p - q).norm_squared();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vec3> {
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                )
            })
            .collect()
    }

    #[test]
    fn single_point() {
        let idx = SpatialIndex::new(vec![Vec3::new(1., 2., 3.)]).unwrap();
        let (i, d) = idx.nearest(&Vec3::new(4., 6., 3.));
        assert_eq!((i, d), (0, 5.0));
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(SpatialIndex::new(vec![]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn self_match_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 500, 10.0);
        let idx = SpatialIndex::new(pts.clone()).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(idx.nearest(p), (i, 0.0));
        }
    }

    #[test]
    fn matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let n = if trial % 100 == 0 { 1000 } else { rng.gen_range(1..200) };
            let pts = random_points(&mut rng, n, 50.0);
            let idx = SpatialIndex::new(pts.clone()).unwrap();
            let queries = if trial % 100 == 0 { 100 } else { 3 };
            for _ in 0..queries {
                let q = random_points(&mut rng, 1, 70.0)[0];
                assert_eq!(idx.nearest_sq(&q), brute(&pts, &q));
            }
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        // Integer lattice with duplicates: many equidistant candidates.
        let mut pts = Vec::new();
        for x in 0..6 {
            for y in 0..6 {
                for z in 0..6 {
                    pts.push(Vec3::new(x as f64, y as f64, z as f64));
                }
            }
        }
        let dup = pts.clone();
        pts.extend(dup);
        let idx = SpatialIndex::new(pts.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let q = Vec3::new(
                rng.gen_range(0..12) as f64 * 0.5,
                rng.gen_range(0..12) as f64 * 0.5,
                rng.gen_range(0..12) as f64 * 0.5,
            );
            assert_eq!(idx.nearest_sq(&q), brute(&pts, &q));
        }
    }

    #[test]
    fn radii_of_cylinder_axis() {
        // 100k samples of a radius-12 cylinder wall, length 100.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3> = (0..100_000)
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let z: f64 = rng.gen_range(0.0..100.0);
                Vec3::new(12.0 * a.cos(), 12.0 * a.sin(), z)
            })
            .collect();
        let idx = SpatialIndex::new(pts).unwrap();
        let axis: Vec<Vec3> = (0..50).map(|k| Vec3::new(0., 0., 10.0 + k as f64 * 1.6)).collect();
        for r in compute_radii(&axis, &idx).unwrap() {
            assert!((r - 12.0).abs() < 0.2, "radius {r}");
            assert!(r >= 12.0 - 1e-9);
        }
    }

    #[test]
    fn radii_match_exhaustive_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts = random_points(&mut rng, 5000, 30.0);
        let idx = SpatialIndex::new(pts.clone()).unwrap();
        let qs = random_points(&mut rng, 200, 35.0);
        let radii = compute_radii(&qs, &idx).unwrap();
        for (q, r) in qs.iter().zip(radii) {
            let exact = pts.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
            assert_eq!(r, exact);
        }
        assert_eq!(compute_radii(&pts[..1], &idx).unwrap()[0], 0.0);
    }
}
