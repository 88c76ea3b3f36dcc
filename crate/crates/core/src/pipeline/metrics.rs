use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::curvatures;
use crate::field::{JetOrder, ScalarField};
use crate::geometry::{hausdorff_distance, mesh_genus, Shape, TriangleMesh};
use crate::io::{extract_surface, CurveSet};
use crate::sampling::{project_to_zero_set, sample_box_uniform};
use crate::{Result, Vec3};

const BOX_SAMPLES: usize = 10_000;
const SURFACE_SAMPLES: usize = 5_000;
const HAUSDORFF_SAMPLES: usize = 100_000;
const METRIC_SEED: u64 = 0x5eed;

/// Quality measurements of a field and its extracted surface.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub resolution: usize,
    pub vertices: usize,
    pub faces: usize,
    /// `None` when the extracted mesh is open or non-manifold.
    pub genus: Option<i64>,
    pub mean_abs_f: f64,
    pub max_abs_f: f64,
    /// `|1 - |grad f||` over uniform box samples.
    pub eikonal_mean: f64,
    pub eikonal_max: f64,
    /// Thin-plate density `4H^2 - 2K` over surface samples.
    pub density_mean: f64,
    pub density_median: f64,
    pub density_p90: f64,
    /// Normalized deviation from the reference mesh, when one is given.
    pub deviation_median: Option<f64>,
    pub deviation_max: Option<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Extracts the surface at `resolution` and measures interpolation, Eikonal,
/// smoothness, topology, and (optionally) deviation from `gt`.
pub fn evaluate_metrics(
    field: &impl ScalarField,
    curves: &CurveSet,
    gt: Option<&TriangleMesh>,
    resolution: usize,
) -> Result<MetricsReport> {
    curves.validate()?;
    let mesh = extract_surface(field, resolution)?;

    let on_curve: Vec<f64> = field.values(&curves.points()).iter().map(|v| v.abs()).collect();
    let mean_abs_f = on_curve.iter().sum::<f64>() / on_curve.len() as f64;
    let max_abs_f = on_curve.iter().copied().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(METRIC_SEED);
    let box_pts = sample_box_uniform(BOX_SAMPLES, &mut rng)?;
    let residuals: Vec<f64> = field
        .jets(&box_pts, JetOrder::Gradient)
        .iter()
        .map(|j| (1.0 - j.grad.norm()).abs())
        .collect();
    let eikonal_mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let eikonal_max = residuals.iter().copied().fold(0.0, f64::max);

    let surface: Vec<Vec3> = mesh.sample_surface(SURFACE_SAMPLES, &mut rng).into_iter().map(|(p, _)| p).collect();
    let surface = project_to_zero_set(field, &surface, 1)?;
    let mut densities: Vec<f64> = field
        .jets(&surface, JetOrder::Hessian)
        .iter()
        .filter_map(|j| curvatures(j).ok().map(|c| c.density))
        .collect();
    densities.sort_by(f64::total_cmp);
    let density_mean = densities.iter().sum::<f64>() / densities.len().max(1) as f64;

    let deviation = match gt {
        Some(gt) => Some(hausdorff_distance(Shape::Mesh(&mesh), gt, HAUSDORFF_SAMPLES, METRIC_SEED)?),
        None => None,
    };
    Ok(MetricsReport {
        resolution,
        vertices: mesh.vertices.len(),
        faces: mesh.triangles.len(),
        genus: mesh_genus(&mesh).ok(),
        mean_abs_f,
        max_abs_f,
        eikonal_mean,
        eikonal_max,
        density_mean,
        density_median: quantile(&densities, 0.5),
        density_p90: quantile(&densities, 0.9),
        deviation_median: deviation.map(|d| d.forward_median),
        deviation_max: deviation.map(|d| d.symmetric),
    })
}

/// Writes the report as `metric,value` rows; absent values are left empty.
pub fn write_report_csv<W: Write>(report: &MetricsReport, out: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "value"])?;
    let rows = [
        ("resolution", report.resolution.to_string()),
        ("vertices", report.vertices.to_string()),
        ("faces", report.faces.to_string()),
        ("genus", report.genus.map(|g| g.to_string()).unwrap_or_default()),
        ("mean_abs_f", report.mean_abs_f.to_string()),
        ("max_abs_f", report.max_abs_f.to_string()),
        ("eikonal_mean", report.eikonal_mean.to_string()),
        ("eikonal_max", report.eikonal_max.to_string()),
        ("density_mean", report.density_mean.to_string()),
        ("density_median", report.density_median.to_string()),
        ("density_p90", report.density_p90.to_string()),
        ("deviation_median", opt(report.deviation_median)),
        ("deviation_max", opt(report.deviation_max)),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::init_geometric;
    use crate::fixtures::{sphere_field, three_great_circles};
    use crate::geometry::primitives::icosphere;

    #[test]
    fn analytic_sphere_against_reference() {
        let gt = icosphere(0.35, 4);
        let report = evaluate_metrics(&sphere_field(0.35), &three_great_circles(0.35, 32), Some(&gt), 48).unwrap();
        let cell = 1.1 / 47.0;
        assert!(report.deviation_median.unwrap() * gt.diagonal() < cell);
        assert_eq!(report.genus, Some(0));
        assert!(report.mean_abs_f < 1e-12);
        assert!(report.eikonal_max < 1e-12);
        assert!((report.density_median - 2.0 / (0.35 * 0.35)).abs() < 1e-6);
    }

    #[test]
    fn untrained_init_is_a_sphere() {
        let params = init_geometric(32, 3, 0.3, 1).unwrap();
        let report = evaluate_metrics(&params, &three_great_circles(0.3, 16), None, 32).unwrap();
        assert_eq!(report.genus, Some(0));
        assert!(report.deviation_median.is_none() && report.deviation_max.is_none());
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("deviation_max,\n"));
    }
}
