use super::{GeometryError, Point3};

pub const DEFAULT_LEAF_SIZE: usize = 16;
/// Inputs smaller than this are searched linearly.
pub const BRUTE_FORCE_BELOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Balanced kd-tree over a fixed point set answering exact nearest-neighbour
/// queries. Equidistant candidates resolve to the lowest original index.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<KdNode>,
}

#[inline]
pub(crate) fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(points: &[Point3]) -> Result<Self, GeometryError> {
        Self::with_leaf_size(points, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &[Point3], leaf_size: usize) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyPointSet);
        }
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if points.len() < BRUTE_FORCE_BELOW {
            tree.nodes.push(KdNode::Leaf {
                start: 0,
                end: points.len(),
            });
        } else {
            tree.build_node(0, points.len(), leaf_size.max(1));
        }
        Ok(tree)
    }

    fn build_node(&mut self, start: usize, end: usize, leaf_size: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= leaf_size {
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        let slice = &self.order[start..end];
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in slice {
            for d in 0..3 {
                lo[d] = lo[d].min(self.points[i][d]);
                hi[d] = hi[d].max(self.points[i][d]);
            }
        }
        let dim = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        if hi[dim] - lo[dim] == 0.0 {
            // all coincident
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        let mid = (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a][dim].total_cmp(&points[b][dim]).then(a.cmp(&b))
        });
        let value = self.points[self.order[start + mid]][dim];
        self.nodes.push(KdNode::Leaf { start, end });
        let left = self.build_node(start, start + mid, leaf_size);
        let right = self.build_node(start + mid, end, leaf_size);
        self.nodes[id] = KdNode::Split {
            dim,
            value,
            left,
            right,
        };
        id
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

    pub fn nearest(&self, query: &Point3) -> Nearest {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, query, &mut best);
        Nearest {
            index: best.1,
            distance: best.0.sqrt(),
        }
    }

    fn search(&self, node: usize, q: &Point3, best: &mut (f64, usize)) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = squared_distance(q, &self.points[i]);
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            KdNode::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Point3], q: &Point3) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in points.iter().enumerate() {
            let d2 = squared_distance(p, q);
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        best
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(KdTree::build(&[]), Err(GeometryError::EmptyPointSet)));
    }

    #[test]
    fn single_point_distance() {
        let t = KdTree::build(&[[0.0, 0.0, 0.0]]).unwrap();
        let n = t.nearest(&[3.0, 4.0, 0.0]);
        assert_eq!(n.index, 0);
        assert_eq!(n.distance, 5.0);
    }

    #[test]
    fn duplicate_points_give_zero_and_lowest_index() {
        let mut pts: Vec<Point3> = (0..100).map(|i| [i as f64, 0.0, 0.0]).collect();
        pts.push([42.0, 0.0, 0.0]);
        let t = KdTree::build(&pts).unwrap();
        let n = t.nearest(&[42.0, 0.0, 0.0]);
        assert_eq!(n.distance, 0.0);
        assert_eq!(n.index, 42);
    }

    #[test]
    fn matches_brute_force_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point3> = (0..200)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let t = KdTree::build(&pts).unwrap();
        for _ in 0..500 {
            let q: Point3 = [rng.random(), rng.random(), rng.random()];
            let (d2, i) = brute(&pts, &q);
            let n = t.nearest(&q);
            assert_eq!(n.distance, d2.sqrt());
            assert_eq!(n.index, i);
        }
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(t.nearest(p).index, i);
        }
    }

    #[test]
    fn degenerate_coplanar_input() {
        let pts: Vec<Point3> = (0..300)
            .map(|i| [(i % 17) as f64, (i / 17) as f64, 1.0])
            .collect();
        let t = KdTree::with_leaf_size(&pts, 4).unwrap();
        let q = [3.2, 5.9, 2.0];
        let (d2, i) = brute(&pts, &q);
        assert_eq!(t.nearest(&q).index, i);
        assert_eq!(t.nearest(&q).distance, d2.sqrt());
    }
}
