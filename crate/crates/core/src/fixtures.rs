//! Analytic fields and synthetic curve sets used by tests, the experiment
//! suites, and the demo.
//!
//! Curves are sampled uniformly by arc length; the counts below are the
//! densities the fixtures are defined with.

use std::f64::consts::TAU;

use crate::field::{AnalyticField, Jet3};
use crate::io::{Curve, CurveSet};
use crate::Vec3;
use nalgebra::Matrix3;

/// Exact signed distance to a sphere of `radius` about the origin, with exact jets.
pub fn sphere_field(radius: f64) -> AnalyticField<impl Fn(&Vec3) -> Jet3 + Copy> {
    AnalyticField(move |x: &Vec3| {
        let r = x.norm();
        if r == 0.0 {
            return Jet3::new(-radius, Vec3::zeros(), [0.0; 6]);
        }
        let n = x / r;
        let hess = crate::field::HESS_PAIRS.map(|(i, j)| ((i == j) as u8 as f64 - n[i] * n[j]) / r);
        Jet3::new(r - radius, n, hess)
    })
}

/// Exact signed distance to a torus around the z axis, with exact jets away
/// from the axis and the core circle (where both are left zero).
pub fn torus_field(major: f64, minor: f64) -> AnalyticField<impl Fn(&Vec3) -> Jet3 + Copy> {
    AnalyticField(move |x: &Vec3| {
        let q = (x.x * x.x + x.y * x.y).sqrt();
        let w = q - major;
        let d = (w * w + x.z * x.z).sqrt();
        if q == 0.0 || d == 0.0 {
            return Jet3::new(d - minor, Vec3::zeros(), [0.0; 6]);
        }
        // Axisymmetric f(q, z): Hessian in the (e_q, e_phi, e_z) frame, then rotated.
        let (er, ephi, ez) = (Vec3::new(x.x / q, x.y / q, 0.0), Vec3::new(-x.y / q, x.x / q, 0.0), Vec3::z());
        let d3 = d * d * d;
        let local = Matrix3::new(
            x.z * x.z / d3,
            0.0,
            -w * x.z / d3,
            0.0,
            w / (d * q),
            0.0,
            -w * x.z / d3,
            0.0,
            w * w / d3,
        );
        let frame = Matrix3::from_columns(&[er, ephi, ez]);
        let grad = er * (w / d) + ez * (x.z / d);
        Jet3::from_matrix(d - minor, grad, &(frame * local * frame.transpose()))
    })
}

fn circle_points(center: Vec3, u: Vec3, v: Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            center + (u * t.cos() + v * t.sin()) * radius
        })
        .collect()
}

fn closed_curve(points: Vec<Vec3>, feature: bool) -> Curve {
    Curve::new(points, feature, true)
}

/// Circle of radius 0.5 in the `z = 0` plane, `n` samples, smooth.
pub fn circle(n: usize) -> CurveSet {
    CurveSet {
        curves: vec![closed_curve(circle_points(Vec3::zeros(), Vec3::x(), Vec3::y(), 0.5, n), false)],
    }
}

/// Three mutually orthogonal great circles of a sphere of `radius`, smooth.
pub fn three_great_circles(radius: f64, n_per_circle: usize) -> CurveSet {
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    CurveSet {
        curves: [(x, y), (y, z), (z, x)]
            .into_iter()
            .map(|(u, v)| closed_curve(circle_points(Vec3::zeros(), u, v, radius, n_per_circle), false))
            .collect(),
    }
}

/// The 12 edges of the cube `[-half, half]^3`, each with `n_per_edge` samples
/// including both corners.
pub fn cube_wireframe(half: f64, n_per_edge: usize, feature: bool) -> CurveSet {
    let mut curves = Vec::with_capacity(12);
    for axis in 0..3 {
        let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
        for (sa, sb) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            let points = (0..n_per_edge)
                .map(|i| {
                    let mut p = Vec3::zeros();
                    p[axis] = -half + 2.0 * half * i as f64 / (n_per_edge - 1) as f64;
                    p[a] = sa * half;
                    p[b] = sb * half;
                    p
                })
                .collect();
            curves.push(Curve::new(points, feature, false));
        }
    }
    CurveSet { curves }
}

/// Polylines of the 12 cube edges, for sharpness measurements.
pub fn cube_edges(half: f64, n_per_edge: usize) -> Vec<Vec<Vec3>> {
    cube_wireframe(half, n_per_edge, false).curves.iter().map(|c| c.vertices()).collect()
}

/// Curve network on a torus around the z axis: `meridians` tube cross-sections
/// plus the outer, inner, top, and bottom parallels, smooth.
pub fn torus_curves(major: f64, minor: f64, meridians: usize, samples: usize) -> CurveSet {
    let mut curves = Vec::new();
    for k in 0..meridians {
        let phi = TAU * k as f64 / meridians as f64;
        let radial = Vec3::new(phi.cos(), phi.sin(), 0.0);
        curves.push(closed_curve(circle_points(radial * major, radial, Vec3::z(), minor, samples), false));
    }
    let parallels = [(major + minor, 0.0), (major - minor, 0.0), (major, minor), (major, -minor)];
    for (r, z) in parallels {
        let n = ((samples as f64) * r / minor).round().max(8.0) as usize;
        curves.push(closed_curve(circle_points(Vec3::new(0.0, 0.0, z), Vec3::x(), Vec3::y(), r, n), false));
    }
    CurveSet { curves }
}
