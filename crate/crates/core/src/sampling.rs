//! Per-iteration point populations: box samples, curve batches, and samples
//! on the current zero-level set.

use rand::Rng;

use crate::field::{JetOrder, ScalarField};
use crate::geometry::{poisson_disk_sample, TriangleMesh};
use crate::io::{extract_surface, CurveSet};
use crate::{Error, Result, Vec3, GRADIENT_FLOOR};

/// Half-width of the box outside which projected points are discarded.
pub const PROJECTION_BOUND: f64 = 0.6;

/// The three point sets used by one training iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleBuffers {
    pub p_batch: Vec<(Vec3, bool)>,
    pub q_box: Vec<Vec3>,
    pub q_zero: Vec<Vec3>,
    pub iteration_of_last_extraction: Option<usize>,
}

/// `n` uniform samples of `[-0.5, 0.5]^3`.
pub fn sample_box_uniform<R: Rng>(n: usize, rng: &mut R) -> Result<Vec<Vec3>> {
    if n == 0 {
        return Err(Error::Contract("box sample count must be positive".into()));
    }
    Ok((0..n)
        .map(|_| Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect())
}

/// All curve points when there are at most `n`, else a uniform subset of
/// size `n` in ascending input order.
pub fn sample_curve_batch<R: Rng>(points: &[(Vec3, bool)], n: usize, rng: &mut R) -> Result<Vec<(Vec3, bool)>> {
    if points.is_empty() {
        return Err(Error::Input("curve set is empty".into()));
    }
    if points.len() <= n {
        return Ok(points.to_vec());
    }
    let mut idx = rand::seq::index::sample(rng, points.len(), n).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| points[i]).collect())
}

/// [`sample_curve_batch`] over a curve set.
pub fn sample_curves<R: Rng>(curves: &CurveSet, n: usize, rng: &mut R) -> Result<Vec<(Vec3, bool)>> {
    sample_curve_batch(&curves.flat_points(), n, rng)
}

/// Extracts the zero-level set at `resolution` and draws `n` Poisson-disk samples on it.
pub fn refresh_zero_samples<R: Rng>(
    field: &impl ScalarField,
    resolution: usize,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<Vec3>, TriangleMesh)> {
    if n == 0 {
        return Err(Error::Contract("zero-set sample count must be positive".into()));
    }
    let mesh = extract_surface(field, resolution)?;
    let points = poisson_disk_sample(&mesh, n, rng)?;
    Ok((points, mesh))
}

/// One projection step and the `|f|` seen at each surviving point before moving.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Projection {
    pub points: Vec<Vec3>,
    pub abs_before: Vec<f64>,
    pub discarded: usize,
}

/// Moves every point by `-f grad / |grad|`; degenerate points stay put and,
/// when `bound` is given, points that leave `[-bound, bound]^3` are dropped.
pub fn project_once(field: &impl ScalarField, points: &[Vec3], bound: Option<f64>) -> Projection {
    let jets = field.jets(points, JetOrder::Gradient);
    let mut out = Projection::default();
    for (x, jet) in points.iter().zip(&jets) {
        let norm = jet.grad.norm();
        let moved = if norm < GRADIENT_FLOOR || !norm.is_finite() {
            *x
        } else {
            x - jet.grad * (jet.value / norm)
        };
        if bound.is_none_or(|b| moved.iter().all(|c| c.abs() <= b)) {
            out.points.push(moved);
            out.abs_before.push(jet.value.abs());
        } else {
            out.discarded += 1;
        }
    }
    out
}

/// Applies the projection step `steps` times without discarding any point.
pub fn project_to_zero_set(field: &impl ScalarField, points: &[Vec3], steps: usize) -> Result<Vec<Vec3>> {
    if steps == 0 {
        return Err(Error::Contract("projection needs at least one step".into()));
    }
    let mut pts = points.to_vec();
    for _ in 0..steps {
        pts = project_once(field, &pts, None).points;
    }
    Ok(pts)
}
