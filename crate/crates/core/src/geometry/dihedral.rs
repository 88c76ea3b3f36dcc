//! Crease sharpness of a mesh along a polyline.

use super::{KdTree, TriangleMesh};
use crate::{Error, Result, Vec3};

/// Angles (degrees) between the mean normals on the two sides of a polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct DihedralStats {
    pub median_deg: f64,
    pub p90_deg: f64,
    /// Per-sample angles of the covered samples, in polyline order.
    pub angles_deg: Vec<f64>,
    /// Samples with no faces within the probe radius on one side or both.
    pub uncovered: usize,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Measures the normal deviation across `polyline` on `mesh`.
///
/// At every polyline vertex the faces whose centroids lie within
/// `probe_radius` are split by the plane spanned by the local tangent and the
/// mean face normal; the reported angle is between the area-weighted mean
/// normals of the two halves (0 on flat regions, 90 on a cube edge).
pub fn dihedral_profile(mesh: &TriangleMesh, polyline: &[Vec3], probe_radius: f64) -> Result<DihedralStats> {
    if !(probe_radius > 0.0) {
        return Err(Error::Contract(format!("probe radius must be positive, got {probe_radius}")));
    }
    if polyline.len() < 2 {
        return Err(Error::Contract("polyline needs at least two points".into()));
    }
    if mesh.is_empty() {
        return Err(Error::Contract("mesh is empty".into()));
    }
    let centroids: Vec<Vec3> = (0..mesh.triangles.len()).map(|t| mesh.centroid(t)).collect();
    let tree = KdTree::new(&centroids)?;
    let last = polyline.len() - 1;

    let mut angles = Vec::new();
    let mut uncovered = 0;
    for (i, s) in polyline.iter().enumerate() {
        let tangent = polyline[(i + 1).min(last)] - polyline[i.saturating_sub(1)];
        let faces = tree.within(s, probe_radius);
        let mean_normal: Vec3 = faces.iter().map(|&t| mesh.cross(t)).sum();
        let split = tangent.cross(&mean_normal);
        if faces.is_empty() || split.norm() == 0.0 {
            uncovered += 1;
            continue;
        }
        let (mut left, mut right) = (Vec3::zeros(), Vec3::zeros());
        for &t in &faces {
            if (centroids[t] - s).dot(&split) >= 0.0 {
                left += mesh.cross(t);
            } else {
                right += mesh.cross(t);
            }
        }
        if left.norm() == 0.0 || right.norm() == 0.0 {
            uncovered += 1;
            continue;
        }
        let cos = (left.dot(&right) / (left.norm() * right.norm())).clamp(-1.0, 1.0);
        angles.push(cos.acos().to_degrees());
    }
    if angles.is_empty() {
        return Err(Error::Contract("no polyline sample has faces on both sides".into()));
    }
    let mut sorted = angles.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(DihedralStats {
        median_deg: percentile(&sorted, 0.5),
        p90_deg: percentile(&sorted, 0.9),
        angles_deg: angles,
        uncovered,
    })
}
