//! Exact nearest-neighbor queries over a static 3D point set.

use nalgebra::Vector3;

const LEAF_SIZE: usize = 12;

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

/// Median-split kd-tree. Queries prune on the splitting plane distance, so
/// results match brute force exactly; ties resolve to the lowest index.
pub struct KdTree {
    points: Vec<Vector3<f64>>,
    /// Permutation of input indices; leaves reference contiguous runs.
    order: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

impl KdTree {
    pub fn build(points: &[Vector3<f64>]) -> Self {
        assert!(!points.is_empty(), "kd-tree needs at least one point");
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            root: 0,
        };
        tree.root = tree.split(0, points.len());
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return self.nodes.len() - 1;
        }
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let extent = hi - lo;
        let axis = extent.imax();
        let mid = (start + end) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][axis];
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes.push(Node::Split { axis, value, left, right });
        self.nodes.len() - 1
    }

    /// Returns the index of the closest point and the Euclidean distance.
    pub fn nearest(&self, query: &Vector3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(self.root, query, &mut best);
        (best.0, best.1.sqrt())
    }

    fn search(&self, node: usize, query: &Vector3<f64>, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - query).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, best);
                if delta * delta <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_cloud(n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn brute(points: &[Vector3<f64>], q: &Vector3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d2 = (p - q).norm_squared();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }

    #[test]
    fn matches_brute_force_on_random_queries() {
        let pts = random_cloud(500, 7);
        let tree = KdTree::build(&pts);
        for q in random_cloud(200, 8) {
            let (bi, bd) = brute(&pts, &q);
            let (ti, td) = tree.nearest(&q);
            assert_eq!(ti, bi);
            assert_eq!(td, bd);
        }
    }

    #[test]
    fn member_points_are_their_own_neighbors() {
        let pts = random_cloud(64, 3);
        let tree = KdTree::build(&pts);
        for (i, p) in pts.iter().enumerate() {
            let (idx, dist) = tree.nearest(p);
            assert_eq!(idx, i);
            assert_eq!(dist, 0.0);
        }
    }

    #[test]
    fn duplicate_points_resolve_to_the_lowest_index() {
        let p = Vector3::new(0.5, -0.25, 2.0);
        let pts = vec![Vector3::zeros(), p, p, p];
        let tree = KdTree::build(&pts);
        let (idx, dist) = tree.nearest(&p);
        assert_eq!(idx, 1);
        assert_eq!(dist, 0.0);
    }

    #[test]
    fn single_point_tree_answers_everything() {
        let pts = vec![Vector3::new(1.0, 2.0, 3.0)];
        let tree = KdTree::build(&pts);
        let (idx, dist) = tree.nearest(&Vector3::zeros());
        assert_eq!(idx, 0);
        assert!((dist - 14.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_axis_aligned_cloud_still_works() {
        // All points on a line exercise zero-extent split axes.
        let pts: Vec<_> = (0..100).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        let tree = KdTree::build(&pts);
        let (idx, dist) = tree.nearest(&Vector3::new(41.4, 5.0, 0.0));
        assert_eq!(idx, 41);
        assert!((dist - (0.4f64 * 0.4 + 25.0).sqrt()).abs() < 1e-12);
    }
}
