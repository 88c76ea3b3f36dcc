use std::collections::HashMap;

use super::mc_tables::{CORNER_OFFSETS, EDGE_CORNERS, EDGE_TABLE, TRI_TABLE};
use super::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Offset added to samples that exactly equal the iso value.
const TIE_BREAK: f64 = 1e-12;

/// Samples of a scalar field on a cubic lattice, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    pub resolution: usize,
    pub origin: Vec3,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    /// Lattice positions of a `resolution^3` grid spanning `[lo, hi]^3`, x-fastest.
    pub fn lattice(resolution: usize, lo: f64, hi: f64) -> Vec<Vec3> {
        let spacing = (hi - lo) / (resolution - 1) as f64;
        let mut pts = Vec::with_capacity(resolution.pow(3));
        for k in 0..resolution {
            for j in 0..resolution {
                for i in 0..resolution {
                    pts.push(Vec3::new(
                        lo + i as f64 * spacing,
                        lo + j as f64 * spacing,
                        lo + k as f64 * spacing,
                    ));
                }
            }
        }
        pts
    }

    /// Evaluates `field` over a `resolution^3` lattice spanning `[lo, hi]^3`.
    ///
    /// `field` receives the points in slices of one z-layer at a time.
    pub fn sample(resolution: usize, lo: f64, hi: f64, mut field: impl FnMut(&[Vec3]) -> Vec<f64>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Contract(format!("grid resolution must be >= 2, got {resolution}")));
        }
        if !(hi > lo) {
            return Err(Error::Contract("grid extent must be positive".into()));
        }
        let spacing = (hi - lo) / (resolution - 1) as f64;
        let mut values = Vec::with_capacity(resolution.pow(3));
        let mut layer = Vec::with_capacity(resolution * resolution);
        for k in 0..resolution {
            layer.clear();
            for j in 0..resolution {
                for i in 0..resolution {
                    layer.push(Vec3::new(
                        lo + i as f64 * spacing,
                        lo + j as f64 * spacing,
                        lo + k as f64 * spacing,
                    ));
                }
            }
            let v = field(&layer);
            if v.len() != layer.len() {
                return Err(Error::Contract("field returned the wrong number of samples".into()));
            }
            values.extend(v);
        }
        Ok(ScalarGrid {
            resolution,
            origin: Vec3::repeat(lo),
            spacing,
            values,
        })
    }

    /// Evaluates a pointwise closure on the lattice.
    pub fn from_fn(resolution: usize, lo: f64, hi: f64, f: impl Fn(&Vec3) -> f64) -> Result<Self> {
        Self::sample(resolution, lo, hi, |pts| pts.iter().map(&f).collect())
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.resolution + j) * self.resolution + i
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::Contract(format!("grid resolution must be >= 2, got {}", self.resolution)));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Contract("grid spacing must be positive".into()));
        }
        if self.values.len() != self.resolution.pow(3) {
            return Err(Error::Contract("grid value count must equal resolution^3".into()));
        }
        Ok(())
    }
}

/// Extracts the `iso` level set with the classic 256-case table.
///
/// Samples below `iso` are inside; triangles are wound so their normals point
/// towards increasing field values. Vertices on shared lattice edges are
/// merged, coincident vertices are welded, and zero-area triangles are dropped.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> Result<TriangleMesh> {
    grid.validate()?;
    let r = grid.resolution;
    let value = |i: usize, j: usize, k: usize| {
        let v = grid.values[grid.index(i, j, k)];
        if v == iso {
            v + TIE_BREAK
        } else {
            v
        }
    };

    let mut edge_vertex: HashMap<(usize, u8), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    for k in 0..r - 1 {
        for j in 0..r - 1 {
            for i in 0..r - 1 {
                let corner_values: [f64; 8] = std::array::from_fn(|c| {
                    let o = CORNER_OFFSETS[c];
                    value(i + o[0], j + o[1], k + o[2])
                });
                let case = corner_values
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (c, &v)| if v < iso { acc | (1 << c) } else { acc });
                let edges = EDGE_TABLE[case];
                if edges == 0 {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                for (e, slot) in local.iter_mut().enumerate() {
                    if edges & (1 << e) == 0 {
                        continue;
                    }
                    let (ca, cb) = EDGE_CORNERS[e];
                    // Orient each lattice edge from its lower endpoint so that
                    // neighbouring cells produce bit-identical vertices.
                    let (ca, cb) = if CORNER_OFFSETS[ca] <= CORNER_OFFSETS[cb] { (ca, cb) } else { (cb, ca) };
                    let oa = CORNER_OFFSETS[ca];
                    let ob = CORNER_OFFSETS[cb];
                    let axis = (0..3).find(|&d| oa[d] != ob[d]).expect("edge spans one axis") as u8;
                    let key = (grid.index(i + oa[0], j + oa[1], k + oa[2]), axis);
                    *slot = *edge_vertex.entry(key).or_insert_with(|| {
                        let (va, vb) = (corner_values[ca], corner_values[cb]);
                        let t = (iso - va) / (vb - va);
                        let pa = grid.point(i + oa[0], j + oa[1], k + oa[2]);
                        let pb = grid.point(i + ob[0], j + ob[1], k + ob[2]);
                        vertices.push(pa + (pb - pa) * t);
                        vertices.len() - 1
                    });
                }
                for tri in TRI_TABLE[case].chunks(3) {
                    if tri[0] < 0 {
                        break;
                    }
                    // The table winds faces towards the inside; flip to face outward.
                    triangles.push([local[tri[0] as usize], local[tri[2] as usize], local[tri[1] as usize]]);
                }
            }
        }
    }

    if triangles.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    Ok(cleanup(vertices, triangles))
}

/// Welds bit-identical vertices and drops triangles that become degenerate.
fn cleanup(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> TriangleMesh {
    let mut by_position: HashMap<[u64; 3], usize> = HashMap::new();
    let mut remap = Vec::with_capacity(vertices.len());
    let mut welded = Vec::with_capacity(vertices.len());
    for v in &vertices {
        let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
        let id = *by_position.entry(key).or_insert_with(|| {
            welded.push(*v);
            welded.len() - 1
        });
        remap.push(id);
    }
    let mut mesh = TriangleMesh {
        vertices: welded,
        triangles: triangles
            .into_iter()
            .map(|t| t.map(|i| remap[i]))
            .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
            .collect(),
    };
    mesh.triangles.retain(|t| {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        (b - a).cross(&(c - a)) != Vec3::zeros()
    });
    compact(&mut mesh);
    mesh
}

fn compact(mesh: &mut TriangleMesh) {
    let mut used = vec![usize::MAX; mesh.vertices.len()];
    let mut vertices = Vec::with_capacity(mesh.vertices.len());
    for t in mesh.triangles.iter_mut() {
        for i in t.iter_mut() {
            if used[*i] == usize::MAX {
                used[*i] = vertices.len();
                vertices.push(mesh.vertices[*i]);
            }
            *i = used[*i];
        }
    }
    mesh.vertices = vertices;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_edges, mesh_genus};
    use rand::{Rng, SeedableRng};

    #[test]
    fn plane_vertices_are_exact() {
        let grid = ScalarGrid::from_fn(17, -0.55, 0.55, |p| p.z).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert!(!mesh.is_empty());
        for v in &mesh.vertices {
            assert!(v.z.abs() < grid.spacing * 1e-9, "z = {}", v.z);
        }
    }

    #[test]
    fn sphere_is_closed_genus_zero_and_accurate() {
        let grid = ScalarGrid::from_fn(64, -0.55, 0.55, |p| p.norm() - 0.4).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert!(boundary_edges(&mesh).is_empty());
        assert_eq!(mesh_genus(&mesh).unwrap(), 0);
        let max_err = mesh.vertices.iter().map(|v| (v.norm() - 0.4).abs()).fold(0.0, f64::max);
        assert!(max_err < grid.spacing, "max radial error {max_err}");
        assert!(mesh.signed_volume() > 0.0, "faces must point outward");
        let expected = 4.0 / 3.0 * std::f64::consts::PI * 0.4f64.powi(3);
        assert!((mesh.signed_volume() - expected).abs() / expected < 0.01);
    }

    #[test]
    fn constant_field_has_no_surface() {
        let grid = ScalarGrid::from_fn(8, -0.5, 0.5, |_| 1.0).unwrap();
        assert!(matches!(marching_cubes(&grid, 0.0), Err(Error::EmptyLevelSet)));
    }

    #[test]
    fn exact_iso_samples_are_tie_broken() {
        // Integer-valued field hits the iso value exactly on many lattice points.
        let grid = ScalarGrid::from_fn(9, -4.0, 4.0, |p| p.x.round().abs() + p.y.round().abs() - 2.0).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        mesh.validate().unwrap();
        for t in 0..mesh.triangles.len() {
            assert!(mesh.face_area(t) > 0.0);
        }
    }

    #[test]
    fn random_fields_are_watertight() {
        // Boundary shell has uniform positive sign, interior values are random.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let r = 10;
            let mut values = vec![1.0; r * r * r];
            for k in 1..r - 1 {
                for j in 1..r - 1 {
                    for i in 1..r - 1 {
                        values[(k * r + j) * r + i] = rng.random::<f64>() - 0.5;
                    }
                }
            }
            let grid = ScalarGrid {
                resolution: r,
                origin: Vec3::zeros(),
                spacing: 0.1,
                values,
            };
            let mesh = marching_cubes(&grid, 0.0).unwrap();
            assert!(boundary_edges(&mesh).is_empty());
        }
    }

    #[test]
    fn grid_shape_is_validated() {
        let grid = ScalarGrid {
            resolution: 3,
            origin: Vec3::zeros(),
            spacing: 0.1,
            values: vec![0.0; 5],
        };
        assert!(matches!(marching_cubes(&grid, 0.0), Err(Error::Contract(_))));
    }
}
