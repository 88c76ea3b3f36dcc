use std::collections::BTreeMap;

use super::TriangleMesh;
use crate::{Error, Result};

fn edge_counts(mesh: &TriangleMesh) -> BTreeMap<(usize, usize), usize> {
    let mut counts = BTreeMap::new();
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    counts
}

/// Edges used by exactly one triangle.
pub fn boundary_edges(mesh: &TriangleMesh) -> Vec<(usize, usize)> {
    edge_counts(mesh).into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect()
}

/// `V - E + F` over the vertices referenced by triangles.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut used = vec![false; mesh.vertices.len()];
    mesh.triangles.iter().flatten().for_each(|&i| used[i] = true);
    let v = used.iter().filter(|&&u| u).count() as i64;
    v - edge_counts(mesh).len() as i64 + mesh.triangles.len() as i64
}

/// Component label of every triangle (edge-or-vertex connectivity) and the component count.
pub fn connected_components(mesh: &TriangleMesh) -> (Vec<usize>, usize) {
    let mut parent: Vec<usize> = (0..mesh.vertices.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in &mesh.triangles {
        for e in 1..3 {
            let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[e]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = BTreeMap::new();
    let labels = mesh
        .triangles
        .iter()
        .map(|t| {
            let root = find(&mut parent, t[0]);
            let next = label.len();
            *label.entry(root).or_insert(next)
        })
        .collect();
    (labels, label.len())
}

/// Total genus of a closed, edge-manifold mesh, summed over connected components.
pub fn mesh_genus(mesh: &TriangleMesh) -> Result<i64> {
    let counts = edge_counts(mesh);
    let boundary: Vec<_> = counts.iter().filter(|&(_, &c)| c == 1).map(|(&e, _)| e).collect();
    if !boundary.is_empty() {
        return Err(Error::Topology {
            reason: "mesh has boundary edges",
            edges: boundary,
        });
    }
    let non_manifold: Vec<_> = counts.iter().filter(|&(_, &c)| c > 2).map(|(&e, _)| e).collect();
    if !non_manifold.is_empty() {
        return Err(Error::Topology {
            reason: "mesh has non-manifold edges",
            edges: non_manifold,
        });
    }
    let (labels, n) = connected_components(mesh);
    let mut chi = vec![0i64; n];
    let mut seen_vertex = vec![false; mesh.vertices.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let c = labels[t];
        chi[c] += 1;
        for &v in tri {
            if !seen_vertex[v] {
                seen_vertex[v] = true;
                chi[c] += 1;
            }
        }
    }
    // Each component's edges: 3F/2 on a closed manifold.
    let mut faces = vec![0i64; n];
    labels.iter().for_each(|&c| faces[c] += 1);
    let mut genus = 0;
    for c in 0..n {
        let chi_c = chi[c] - 3 * faces[c] / 2;
        if (2 - chi_c) % 2 != 0 {
            return Err(Error::Topology {
                reason: "odd Euler characteristic (non-orientable component)",
                edges: Vec::new(),
            });
        }
        genus += (2 - chi_c) / 2;
    }
    Ok(genus)
}
