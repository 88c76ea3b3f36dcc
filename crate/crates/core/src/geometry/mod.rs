//! Discrete geometry: isosurface extraction, spatial indexing, surface
//! sampling, and mesh metrics.

mod dihedral;
mod hausdorff;
mod kdtree;
mod marching_cubes;
mod mc_tables;
mod mesh;
mod obj;
mod poisson;
pub mod primitives;
mod topology;

pub use dihedral::{dihedral_profile, DihedralStats};
pub use hausdorff::{closest_point_on_triangle, hausdorff_distance, HausdorffReport, Shape, TriangleBvh};
pub use kdtree::KdTree;
pub use marching_cubes::{marching_cubes, ScalarGrid};
pub(crate) use mesh::bounding_box;
pub use mesh::TriangleMesh;
pub use obj::{read_obj, read_obj_str, write_obj, ObjData};
pub use poisson::{poisson_disk_sample, sample_elimination};
pub use topology::{boundary_edges, connected_components, euler_characteristic, mesh_genus};
