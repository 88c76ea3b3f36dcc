//! Reference meshes used by tests, metrics, and the demo.

use std::collections::HashMap;

use super::TriangleMesh;
use crate::Vec3;

/// Regular tetrahedron with outward winding.
pub fn tetrahedron() -> TriangleMesh {
    TriangleMesh {
        vertices: vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ],
        triangles: vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
    }
}

/// Subdivided icosahedron projected onto a sphere of `radius` at the origin.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    vertices.iter_mut().for_each(|v| *v *= radius);
    TriangleMesh { vertices, triangles }
}

/// Torus around the z axis with `nu` x `nv` quads split into triangles.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> TriangleMesh {
    let tau = std::f64::consts::TAU;
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = tau * i as f64 / nu as f64;
        for j in 0..nv {
            let v = tau * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh { vertices, triangles }
}

/// Open `n x n` grid of the square `[0, size]^2` in the plane `z = height`.
pub fn square_patch(n: usize, size: f64, height: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec3::new(size * i as f64 / n as f64, size * j as f64 / n as f64, height));
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriangleMesh { vertices, triangles }
}

/// Two half-planes meeting along the x axis: one in `z = 0, y >= 0`, the other
/// rotated about the x axis by `angle` radians. Each is an `n x n` grid of extent `size`.
pub fn wedge(angle: f64, n: usize, size: f64) -> TriangleMesh {
    let mut mesh = TriangleMesh::default();
    for side in 0..2 {
        let dir = if side == 0 { Vec3::new(0.0, 1.0, 0.0) } else { Vec3::new(0.0, angle.cos(), angle.sin()) };
        let base = mesh.vertices.len();
        for j in 0..=n {
            for i in 0..=n {
                let x = size * (i as f64 / n as f64 - 0.5);
                let s = size * j as f64 / n as f64;
                mesh.vertices.push(Vec3::new(x, 0.0, 0.0) + dir * s);
            }
        }
        let idx = |i: usize, j: usize| base + j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                if side == 0 {
                    mesh.triangles.extend([[a, b, c], [a, c, d]]);
                } else {
                    mesh.triangles.extend([[a, c, b], [a, d, c]]);
                }
            }
        }
    }
    mesh
}
