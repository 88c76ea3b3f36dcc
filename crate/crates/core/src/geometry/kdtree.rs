//! Exact nearest-neighbour and fixed-radius queries over a static point set.

use crate::{Error, Result, Vec3};

const LEAF_SIZE: usize = 8;

/// Balanced k-d tree stored implicitly: every subrange `[lo, hi)` larger than a
/// leaf splits at its midpoint along `axes[mid]`.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Vec3>,
    /// Original index of each stored point.
    ids: Vec<usize>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Contract("k-d tree needs at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Contract(format!("k-d tree point {i} is not finite")));
        }
        let mut ids: Vec<usize> = (0..points.len()).collect();
        let mut axes = vec![0u8; points.len()];
        build(points, &mut ids, &mut axes, 0);
        Ok(KdTree {
            points: ids.iter().map(|&i| points[i]).collect(),
            ids,
            axes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index (into the construction slice) and squared distance of the nearest point.
    pub fn nearest(&self, q: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_in(0, self.points.len(), q, &mut best);
        (self.ids[best.0], best.1)
    }

    /// Exact squared distance from `q` to the nearest indexed point.
    pub fn nearest_sq_distance(&self, q: &Vec3) -> f64 {
        self.nearest(q).1
    }

    /// Indices of all points with `|p - q| <= radius`, in ascending index order.
    pub fn within(&self, q: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.within_in(0, self.points.len(), q, radius * radius, &mut out);
        out.sort_unstable();
        out
    }

    fn nearest_in(&self, lo: usize, hi: usize, q: &Vec3, best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for i in lo..hi {
                let d = (self.points[i] - q).norm_squared();
                if d < best.1 {
                    *best = (i, d);
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = self.axes[mid] as usize;
        let delta = q[axis] - self.points[mid][axis];
        let (near, far) = if delta <= 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.nearest_in(near.0, near.1, q, best);
        let d = (self.points[mid] - q).norm_squared();
        if d < best.1 {
            *best = (mid, d);
        }
        if delta * delta <= best.1 {
            self.nearest_in(far.0, far.1, q, best);
        }
    }

    fn within_in(&self, lo: usize, hi: usize, q: &Vec3, r2: f64, out: &mut Vec<usize>) {
        if hi - lo <= LEAF_SIZE {
            out.extend((lo..hi).filter(|&i| (self.points[i] - q).norm_squared() <= r2).map(|i| self.ids[i]));
            return;
        }
        let mid = (lo + hi) / 2;
        let axis = self.axes[mid] as usize;
        let delta = q[axis] - self.points[mid][axis];
        if (self.points[mid] - q).norm_squared() <= r2 {
            out.push(self.ids[mid]);
        }
        if delta <= 0.0 || delta * delta <= r2 {
            self.within_in(lo, mid, q, r2, out);
        }
        if delta >= 0.0 || delta * delta <= r2 {
            self.within_in(mid + 1, hi, q, r2, out);
        }
    }
}

fn build(points: &[Vec3], ids: &mut [usize], axes: &mut [u8], offset: usize) {
    let n = ids.len();
    if n <= LEAF_SIZE {
        return;
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &i in ids.iter() {
        lo = lo.inf(&points[i]);
        hi = hi.sup(&points[i]);
    }
    let axis = (hi - lo).imax();
    let mid = n / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b)));
    axes[offset + mid] = axis as u8;
    let (left, rest) = ids.split_at_mut(mid);
    build(points, left, axes, offset);
    build(points, &mut rest[1..], axes, offset + mid + 1);
}
