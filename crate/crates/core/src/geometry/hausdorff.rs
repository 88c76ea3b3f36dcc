//! Sampled two-sided Hausdorff distance between shapes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{KdTree, TriangleMesh};
use crate::{Error, Result, Vec3};

/// Closest point to `p` on triangle `(a, b, c)` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[derive(Clone, Debug)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: `[start, start + count)` into `order`; inner: children at `start`, `start + 1`.
    start: usize,
    count: usize,
}

/// Bounding-volume hierarchy over triangles for exact point-to-mesh distance.
#[derive(Clone, Debug)]
pub struct TriangleBvh<'a> {
    mesh: &'a TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

const BVH_LEAF: usize = 4;

impl<'a> TriangleBvh<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::Contract("cannot index an empty mesh".into()));
        }
        let mut bvh = TriangleBvh {
            mesh,
            nodes: Vec::new(),
            order: (0..mesh.triangles.len()).collect(),
        };
        let centroids: Vec<Vec3> = (0..mesh.triangles.len()).map(|t| mesh.centroid(t)).collect();
        bvh.nodes.push(Node {
            lo: Vec3::zeros(),
            hi: Vec3::zeros(),
            start: 0,
            count: 0,
        });
        bvh.build(0, 0, mesh.triangles.len(), &centroids);
        Ok(bvh)
    }

    fn build(&mut self, node: usize, start: usize, end: usize, centroids: &[Vec3]) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &t in &self.order[start..end] {
            for v in self.mesh.corners(t) {
                lo = lo.inf(&v);
                hi = hi.sup(&v);
            }
        }
        self.nodes[node].lo = lo;
        self.nodes[node].hi = hi;
        if end - start <= BVH_LEAF {
            self.nodes[node].start = start;
            self.nodes[node].count = end - start;
            return;
        }
        let axis = (hi - lo).imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        let left = self.nodes.len();
        let blank = Node {
            lo,
            hi,
            start: 0,
            count: 0,
        };
        self.nodes.push(blank.clone());
        self.nodes.push(blank);
        self.nodes[node].start = left;
        self.nodes[node].count = 0;
        self.build(left, start, mid, centroids);
        self.build(left + 1, mid, end, centroids);
    }

    fn box_sq_distance(node: &Node, p: &Vec3) -> f64 {
        let d = (node.lo - p).sup(&Vec3::zeros()).sup(&(p - node.hi));
        d.norm_squared()
    }

    /// Squared distance from `p` to the mesh and the closest triangle index.
    pub fn nearest(&self, p: &Vec3) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if Self::box_sq_distance(node, p) > best.0 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start..node.start + node.count] {
                    let [a, b, c] = self.mesh.corners(t);
                    let d = (closest_point_on_triangle(p, &a, &b, &c) - p).norm_squared();
                    if d < best.0 {
                        best = (d, t);
                    }
                }
            } else {
                let (l, r) = (node.start, node.start + 1);
                let (dl, dr) = (
                    Self::box_sq_distance(&self.nodes[l], p),
                    Self::box_sq_distance(&self.nodes[r], p),
                );
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.nearest(p).0.sqrt()
    }
}

/// Either operand of a Hausdorff comparison.
#[derive(Clone, Copy, Debug)]
pub enum Shape<'a> {
    Mesh(&'a TriangleMesh),
    Points(&'a [Vec3]),
}

/// Distances normalized by the bounding-box diagonal of the reference mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HausdorffReport {
    /// Max over samples of `a` of the distance to `b`.
    pub forward: f64,
    /// Max over samples of `b` of the distance to `a`.
    pub backward: f64,
    pub symmetric: f64,
    /// Median of the forward distances.
    pub forward_median: f64,
    pub diagonal: f64,
}

fn surface_samples(mesh: &TriangleMesh, n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec3> = mesh.vertices.clone();
    pts.extend(mesh.sample_surface(n, &mut rng).into_iter().map(|(p, _)| p));
    pts
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Point-sampled Hausdorff distance from `a` to the reference mesh `b`.
///
/// Meshes contribute their vertices plus `samples` area-weighted points
/// (seeded by `seed`). Distances are reported divided by the diagonal of `b`'s
/// bounding box.
pub fn hausdorff_distance(a: Shape<'_>, b: &TriangleMesh, samples: usize, seed: u64) -> Result<HausdorffReport> {
    if b.is_empty() {
        return Err(Error::Contract("reference mesh is empty".into()));
    }
    let diagonal = b.diagonal();
    if !(diagonal > 0.0) {
        return Err(Error::Contract("reference mesh has zero extent".into()));
    }
    let bvh_b = TriangleBvh::new(b)?;
    let b_samples = surface_samples(b, samples, seed ^ 0x9e37_79b9);
    let (forward_d, backward): (Vec<f64>, f64) = match a {
        Shape::Mesh(mesh) => {
            if mesh.is_empty() {
                return Err(Error::Contract("mesh operand is empty".into()));
            }
            let bvh_a = TriangleBvh::new(mesh)?;
            let fwd = surface_samples(mesh, samples, seed).iter().map(|p| bvh_b.distance(p)).collect();
            let bwd = b_samples.iter().map(|p| bvh_a.distance(p)).fold(0.0, f64::max);
            (fwd, bwd)
        }
        Shape::Points(points) => {
            if points.is_empty() {
                return Err(Error::Contract("point operand is empty".into()));
            }
            let tree = KdTree::new(points)?;
            let fwd = points.iter().map(|p| bvh_b.distance(p)).collect();
            let bwd = b_samples.iter().map(|p| tree.nearest_sq_distance(p).sqrt()).fold(0.0, f64::max);
            (fwd, bwd)
        }
    };
    let forward = forward_d.iter().copied().fold(0.0, f64::max) / diagonal;
    let backward = backward / diagonal;
    Ok(HausdorffReport {
        forward,
        backward,
        symmetric: forward.max(backward),
        forward_median: median(forward_d) / diagonal,
        diagonal,
    })
}
