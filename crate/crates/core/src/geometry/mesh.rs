use rand::Rng;

use crate::{Error, Result, Vec3};

/// Indexed triangle mesh.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some((t, tri)) = self.triangles.iter().enumerate().find(|(_, t)| t.iter().any(|&i| i >= n)) {
            return Err(Error::Contract(format!("triangle {t} references vertex out of range: {tri:?}")));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Unnormalized normal; its length is twice the area.
    pub fn cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, t: usize) -> f64 {
        0.5 * self.cross(t).norm()
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        self.cross(t).normalize()
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.face_area(t)).sum()
    }

    /// Signed enclosed volume; positive when faces are wound outward.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn bounding_box(&self) -> Option<(Vec3, Vec3)> {
        bounding_box(&self.vertices)
    }

    pub fn diagonal(&self) -> f64 {
        self.bounding_box().map_or(0.0, |(lo, hi)| (hi - lo).norm())
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&mut self, f: impl Fn(&Vec3) -> Vec3) {
        self.vertices.iter_mut().for_each(|v| *v = f(v));
    }

    /// `n` area-weighted uniform samples, each with its triangle index.
    pub fn sample_surface<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<(Vec3, usize)> {
        if self.triangles.is_empty() || n == 0 {
            return Vec::new();
        }
        let mut cdf = Vec::with_capacity(self.triangles.len());
        let mut acc = 0.0;
        for t in 0..self.triangles.len() {
            acc += self.face_area(t);
            cdf.push(acc);
        }
        let total = acc;
        (0..n)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let t = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let [a, b, c] = self.corners(t);
                let (mut r1, mut r2) = (rng.random::<f64>(), rng.random::<f64>());
                if r1 + r2 > 1.0 {
                    r1 = 1.0 - r1;
                    r2 = 1.0 - r2;
                }
                (a + (b - a) * r1 + (c - a) * r2, t)
            })
            .collect()
    }
}

pub(crate) fn bounding_box(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
}
