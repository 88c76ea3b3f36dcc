//! Curve ingestion, normalization to the unit box, noise injection, and mesh export.

mod curves;
mod export;

pub use curves::{
    load_curves, normalize_curves, parse_curves_json, perturb_curves, save_curves, Curve, CurveSet,
    NormalizationTransform,
};
pub use export::{export_mesh, extract_surface, MeshStats, EXTRACTION_BOUND};
