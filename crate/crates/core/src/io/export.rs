use std::path::Path;

use super::NormalizationTransform;
use crate::field::ScalarField;
use crate::geometry::{marching_cubes, mesh_genus, write_obj, ScalarGrid, TriangleMesh};
use crate::{Error, Result};

/// Half-width of the extraction grid, slightly larger than the data box so
/// surfaces touching the box still close.
pub const EXTRACTION_BOUND: f64 = 0.55;

/// Zero-level mesh of `field` on a `resolution^3` grid over the extraction box.
pub fn extract_surface(field: &impl ScalarField, resolution: usize) -> Result<TriangleMesh> {
    if resolution < 8 {
        return Err(Error::Contract(format!("resolution must be >= 8, got {resolution}")));
    }
    let grid = ScalarGrid::sample(resolution, -EXTRACTION_BOUND, EXTRACTION_BOUND, |pts| field.values(pts))?;
    marching_cubes(&grid, 0.0)
}

/// Size and topology of an exported mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshStats {
    pub vertices: usize,
    pub faces: usize,
    /// `None` when the mesh is open or non-manifold.
    pub genus: Option<i64>,
}

/// Extracts the surface, maps it back to input coordinates, and writes an OBJ file.
pub fn export_mesh(
    field: &impl ScalarField,
    resolution: usize,
    transform: Option<&NormalizationTransform>,
    path: impl AsRef<Path>,
) -> Result<(TriangleMesh, MeshStats)> {
    let mut mesh = extract_surface(field, resolution)?;
    let stats = MeshStats {
        vertices: mesh.vertices.len(),
        faces: mesh.triangles.len(),
        genus: mesh_genus(&mesh).ok(),
    };
    if let Some(t) = transform {
        mesh.map_vertices(|v| t.invert(v));
    }
    let file = std::fs::File::create(path)?;
    write_obj(&mesh, std::io::BufWriter::new(file))?;
    Ok((mesh, stats))
}
