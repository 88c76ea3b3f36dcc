//! Browser bindings for the interactive demo page in `www/`.
//!
//! Three operations are exposed: surface extraction with a genus readout,
//! a curvature probe, and the smoothness schedule.

use tpsurf::energy::{cosine_factor, curvatures};
use tpsurf::field::{forward_jet, init_geometric, Jet3, JetOrder, MlpParams, ScalarField};
use tpsurf::fixtures::{sphere_field, torus_field};
use tpsurf::geometry::mesh_genus;
use tpsurf::io::extract_surface;
use tpsurf::Vec3;
use wasm_bindgen::prelude::*;

const TORUS_MAJOR: f64 = 0.3;

/// Fields the page can pick from; `param` is the sphere radius, the torus tube
/// radius, or the network seed.
enum Shape {
    Sphere(f64),
    Torus(f64),
    Network(Box<MlpParams>),
}

impl Shape {
    fn parse(kind: &str, param: f64) -> Result<Self, JsError> {
        match kind {
            "sphere" if param > 0.0 && param < 0.5 => Ok(Shape::Sphere(param)),
            "torus" if param > 0.0 && param < TORUS_MAJOR => Ok(Shape::Torus(param)),
            "network" if param >= 0.0 => init_geometric(64, 4, 0.3, param as u64)
                .map(|p| Shape::Network(Box::new(p)))
                .map_err(|e| JsError::new(&e.to_string())),
            "sphere" | "torus" | "network" => Err(JsError::new(&format!("parameter {param} is out of range for {kind}"))),
            other => Err(JsError::new(&format!("unknown shape {other:?}"))),
        }
    }

    fn jet(&self, x: Vec3) -> Jet3 {
        match self {
            Shape::Sphere(r) => sphere_field(*r).jets(&[x], JetOrder::Hessian)[0],
            Shape::Torus(r) => torus_field(TORUS_MAJOR, *r).jets(&[x], JetOrder::Hessian)[0],
            Shape::Network(p) => forward_jet(p, x),
        }
    }
}

/// Triangle mesh handed to JavaScript as flat typed arrays.
#[wasm_bindgen]
pub struct Surface {
    positions: Vec<f32>,
    indices: Vec<u32>,
    genus: Option<i32>,
}

#[wasm_bindgen]
impl Surface {
    /// `x, y, z` per vertex.
    pub fn positions(&self) -> Vec<f32> {
        self.positions.clone()
    }

    /// Three vertex indices per triangle.
    pub fn indices(&self) -> Vec<u32> {
        self.indices.clone()
    }

    /// `undefined` when the mesh is open or non-manifold.
    pub fn genus(&self) -> Option<i32> {
        self.genus
    }
}

/// Runs marching cubes over `[-0.55, 0.55]^3` at `resolution` samples per axis.
#[wasm_bindgen]
pub fn extract(kind: &str, param: f64, resolution: usize) -> Result<Surface, JsError> {
    let shape = Shape::parse(kind, param)?;
    let mesh = match &shape {
        Shape::Sphere(r) => extract_surface(&sphere_field(*r), resolution),
        Shape::Torus(r) => extract_surface(&torus_field(TORUS_MAJOR, *r), resolution),
        Shape::Network(p) => extract_surface(p.as_ref(), resolution),
    }
    .map_err(|e| JsError::new(&e.to_string()))?;
    Ok(Surface {
        positions: mesh.vertices.iter().flat_map(|v| [v.x as f32, v.y as f32, v.z as f32]).collect(),
        indices: mesh.triangles.iter().flatten().map(|&i| i as u32).collect(),
        genus: mesh_genus(&mesh).ok().map(|g| g as i32),
    })
}

/// `[f, H, K, 4H^2 - 2K]` of the chosen field at `(x, y, z)`.
#[wasm_bindgen]
pub fn curvature(kind: &str, param: f64, x: f64, y: f64, z: f64) -> Result<Vec<f64>, JsError> {
    let jet = Shape::parse(kind, param)?.jet(Vec3::new(x, y, z));
    let c = curvatures(&jet).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(vec![jet.value, c.mean, c.gaussian, c.density])
}

/// Smoothness factor for iterations `0..iterations` with restart period `cycle`.
#[wasm_bindgen]
pub fn schedule(cycle: usize, iterations: usize) -> Vec<f64> {
    (0..iterations).map(|it| cosine_factor(it, cycle)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_surface_has_genus_one() {
        let s = extract("torus", 0.1, 48).ok().unwrap();
        assert_eq!(s.genus(), Some(1));
        assert_eq!(s.positions().len() % 3, 0);
        assert!(s.indices().iter().all(|&i| (i as usize) < s.positions().len() / 3));
    }

    #[test]
    fn network_init_is_a_sphere() {
        assert_eq!(extract("network", 0.0, 32).ok().unwrap().genus(), Some(0));
    }

    #[test]
    fn sphere_probe() {
        let v = curvature("sphere", 0.25, 0.25, 0.0, 0.0).ok().unwrap();
        assert!(v[0].abs() < 1e-15 && (v[2] - 16.0).abs() < 1e-9 && (v[3] - 32.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_restarts() {
        let s = schedule(10, 21);
        assert_eq!((s[0], s[5], s[10], s[20]), (1.0, 0.0, 1.0, 1.0));
    }
}
