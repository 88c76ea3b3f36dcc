//! Loss terms on the field jets and their adjoints.
//!
//! Every `*_with_adjoint` function returns the loss together with its derivative
//! with respect to the jet components of each sample. These derivatives feed
//! straight into [`MlpParams::backward`](crate::field::MlpParams::backward).

use serde::{Deserialize, Serialize};

use crate::field::{Jet3, JetAdjoint};
use crate::geometry::KdTree;
use crate::{Error, Result, Vec3, GRADIENT_FLOOR};

/// Upper bound on the feature-distance weight: the squared diagonal of the unit box.
pub const FEATURE_WEIGHT_CAP: f64 = 3.0;

/// Coefficients of the combined objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub eikonal: f64,
    pub dirichlet_on: f64,
    pub dirichlet_off: f64,
    pub smooth: f64,
    /// Decay rate of the off-surface penalty. The default of 400 keeps
    /// `|grad f|` below 2 on the zero set of desk-scale runs, which the one-step
    /// projection needs; at 100 the median there is near 3.
    pub alpha: f64,
    /// Iterations per cosine cycle of the smoothness factor.
    pub cycle_length: usize,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            eikonal: 0.1,
            dirichlet_on: 100.0,
            dirichlet_off: 10.0,
            smooth: 5e-4,
            alpha: 400.0,
            cycle_length: 1000,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [self.eikonal, self.dirichlet_on, self.dirichlet_off, self.smooth];
        if lambdas.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and non-negative: {lambdas:?}")));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.cycle_length == 0 {
            return Err(Error::Config("cycle_length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Unweighted loss terms of one iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossComponents {
    pub eikonal: f64,
    pub dirichlet_on: f64,
    pub dirichlet_off: f64,
    pub smooth: f64,
}

/// Loss terms together with the smoothness factor and the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub eikonal: f64,
    pub dirichlet_on: f64,
    pub dirichlet_off: f64,
    pub smooth: f64,
    pub tau: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// Recombines the stored components with `weights`.
    pub fn recombine(&self, weights: &LossWeights) -> f64 {
        weights.eikonal * self.eikonal
            + weights.dirichlet_on * self.dirichlet_on
            + weights.dirichlet_off * self.dirichlet_off
            + self.tau * weights.smooth * self.smooth
    }
}

fn require_nonempty(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::Contract(format!("{what} needs at least one sample")))
    } else {
        Ok(())
    }
}

/// Sign with `sign(0) = 0`; `f64::signum` maps zero to one.
#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean of `|1 - |grad||`.
pub fn eikonal_loss(jets: &[Jet3]) -> Result<f64> {
    require_nonempty(jets.len(), "eikonal loss")?;
    Ok(jets.iter().map(|j| (1.0 - j.grad.norm()).abs()).sum::<f64>() / jets.len() as f64)
}

/// Eikonal loss over gradients and its derivative with respect to each gradient.
pub fn eikonal_with_adjoint(grads: &[Vec3]) -> Result<(f64, Vec<[f64; 3]>)> {
    require_nonempty(grads.len(), "eikonal loss")?;
    let inv_n = 1.0 / grads.len() as f64;
    let mut loss = 0.0;
    let adjoints = grads
        .iter()
        .map(|g| {
            let norm = g.norm();
            loss += (1.0 - norm).abs();
            if norm == 0.0 {
                return [0.0; 3];
            }
            let s = -sign(1.0 - norm) * inv_n / norm;
            [s * g.x, s * g.y, s * g.z]
        })
        .collect();
    Ok((loss * inv_n, adjoints))
}

/// Mean of `|f|` over the constraint points.
pub fn dirichlet_on_loss(values: &[f64]) -> Result<f64> {
    Ok(dirichlet_on_with_adjoint(values)?.0)
}

pub fn dirichlet_on_with_adjoint(values: &[f64]) -> Result<(f64, Vec<f64>)> {
    require_nonempty(values.len(), "on-curve loss")?;
    let inv_n = 1.0 / values.len() as f64;
    let loss = values.iter().map(|v| v.abs()).sum::<f64>() * inv_n;
    Ok((loss, values.iter().map(|&v| sign(v) * inv_n).collect()))
}

/// Mean of `exp(-alpha |f|)`, which pushes the field away from zero off the surface.
pub fn dirichlet_off_loss(values: &[f64], alpha: f64) -> Result<f64> {
    Ok(dirichlet_off_with_adjoint(values, alpha)?.0)
}

pub fn dirichlet_off_with_adjoint(values: &[f64], alpha: f64) -> Result<(f64, Vec<f64>)> {
    if !(alpha > 0.0) {
        return Err(Error::Contract(format!("alpha must be positive, got {alpha}")));
    }
    require_nonempty(values.len(), "off-surface loss")?;
    let inv_n = 1.0 / values.len() as f64;
    let mut loss = 0.0;
    let adjoints = values
        .iter()
        .map(|&v| {
            let e = (-alpha * v.abs()).exp();
            loss += e;
            -alpha * sign(v) * e * inv_n
        })
        .collect();
    Ok((loss * inv_n, adjoints))
}

/// Mean curvature, Gaussian curvature, and thin-plate density `4H^2 - 2K` of a level set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curvature {
    pub mean: f64,
    pub gaussian: f64,
    pub density: f64,
}

/// Adjugate of a symmetric 3x3 matrix in packed `[m00, m01, m02, m11, m12, m22]` form.
///
/// `g^T adj(M) g` equals minus the determinant of the bordered matrix
/// `[[M, g], [g^T, 0]]`, expanded here cofactor by cofactor.
fn adjugate(m: &[f64; 6]) -> [f64; 6] {
    let [a, b, c, d, e, f] = *m;
    [d * f - e * e, c * e - b * f, b * e - c * d, a * f - c * c, b * c - a * e, a * d - b * b]
}

#[inline]
fn sym_mul(m: &[f64; 6], g: &Vec3) -> Vec3 {
    Vec3::new(
        m[0] * g.x + m[1] * g.y + m[2] * g.z,
        m[1] * g.x + m[3] * g.y + m[4] * g.z,
        m[2] * g.x + m[4] * g.y + m[5] * g.z,
    )
}

#[inline]
fn quad(m: &[f64; 6], g: &Vec3) -> f64 {
    g.dot(&sym_mul(m, g))
}

fn check_gradient(grad: &Vec3) -> Result<f64> {
    let n = grad.norm();
    if n < GRADIENT_FLOOR || !n.is_finite() {
        return Err(Error::DegenerateGradient { norm: n });
    }
    Ok(n)
}

/// Curvatures of the level set through the jet's point.
pub fn curvatures(jet: &Jet3) -> Result<Curvature> {
    let g = jet.grad;
    let n = check_gradient(&g)?;
    let m = &jet.hess;
    let n2 = n * n;
    let trace = m[0] + m[3] + m[5];
    let mean = (quad(m, &g) - n2 * trace) / (2.0 * n2 * n);
    let gaussian = quad(&adjugate(m), &g) / (n2 * n2);
    Ok(Curvature {
        mean,
        gaussian,
        density: 4.0 * mean * mean - 2.0 * gaussian,
    })
}

/// Density and its derivative with respect to the gradient and the packed Hessian.
pub fn density_with_adjoint(jet: &Jet3) -> Result<(Curvature, [f64; 3], [f64; 6])> {
    let curv = curvatures(jet)?;
    let g = jet.grad;
    let m = &jet.hess;
    let n = g.norm();
    let n2 = n * n;
    let n3 = n2 * n;
    let n4 = n2 * n2;
    let (h, k) = (curv.mean, curv.gaussian);
    let trace = m[0] + m[3] + m[5];

    let dh_dg = (sym_mul(m, &g) - g * trace) / n3 - g * (3.0 * h / n2);
    let adj = adjugate(m);
    let dk_dg = sym_mul(&adj, &g) * (2.0 / n4) - g * (4.0 * k / n2);
    let d_dg = dh_dg * (8.0 * h) - dk_dg * 2.0;

    // d det(X)/dX = cof(X); with g^T adj(M) g = det(M + g g^T) - det(M) the
    // Gaussian term differentiates through two cofactor matrices.
    let shifted = [
        m[0] + g.x * g.x,
        m[1] + g.x * g.y,
        m[2] + g.x * g.z,
        m[3] + g.y * g.y,
        m[4] + g.y * g.z,
        m[5] + g.z * g.z,
    ];
    let cof_shifted = adjugate(&shifted);
    let gi = [g.x, g.y, g.z];
    let mut d_dm = [0.0; 6];
    for (s, &(i, j)) in crate::field::HESS_PAIRS.iter().enumerate() {
        let delta = if i == j { 1.0 } else { 0.0 };
        let dh = (gi[i] * gi[j] - n2 * delta) / (2.0 * n3);
        let dk = (cof_shifted[s] - adj[s]) / n4;
        let full = 8.0 * h * dh - 2.0 * dk;
        d_dm[s] = if i == j { full } else { 2.0 * full };
    }
    Ok((curv, [d_dg.x, d_dg.y, d_dg.z], d_dm))
}

/// Exact nearest-feature lookup; an empty feature set gives weight one everywhere.
#[derive(Clone, Debug)]
pub struct FeatureIndex {
    tree: Option<KdTree>,
}

impl FeatureIndex {
    pub fn new(features: &[Vec3]) -> Self {
        FeatureIndex {
            tree: KdTree::new(features).ok(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_none()
    }
}

/// Squared distance to the nearest feature point, capped at [`FEATURE_WEIGHT_CAP`].
pub fn feature_weight(s: &Vec3, index: &FeatureIndex) -> f64 {
    match &index.tree {
        None => 1.0,
        Some(tree) => tree.nearest_sq_distance(s).min(FEATURE_WEIGHT_CAP),
    }
}

/// Feature-weighted mean thin-plate density over the non-degenerate samples.
pub fn smooth_loss(jets: &[Jet3], points: &[Vec3], index: &FeatureIndex) -> Result<f64> {
    Ok(smooth_with_adjoint(jets, points, index)?.0)
}

/// Smoothness loss and per-sample adjoints (zero for samples below the gradient floor).
pub fn smooth_with_adjoint(jets: &[Jet3], points: &[Vec3], index: &FeatureIndex) -> Result<(f64, Vec<JetAdjoint>)> {
    if jets.len() != points.len() {
        return Err(Error::Contract(format!("{} jets for {} points", jets.len(), points.len())));
    }
    require_nonempty(jets.len(), "smoothness loss")?;
    let mut terms = Vec::with_capacity(jets.len());
    for (jet, p) in jets.iter().zip(points) {
        match density_with_adjoint(jet) {
            Ok((curv, dg, dm)) => {
                debug_assert!(
                    curv.density >= -1e-9 * (1.0 + curv.mean * curv.mean),
                    "negative thin-plate density {}",
                    curv.density
                );
                terms.push(Some((curv.density, feature_weight(p, index), dg, dm)));
            }
            Err(Error::DegenerateGradient { .. }) => terms.push(None),
            Err(e) => return Err(e),
        }
    }
    let kept = terms.iter().flatten().count();
    if kept == 0 {
        return Err(Error::DegenerateBatch);
    }
    let inv = 1.0 / kept as f64;
    let mut loss = 0.0;
    let adjoints = terms
        .iter()
        .map(|t| match t {
            None => JetAdjoint::default(),
            Some((density, w, dg, dm)) => {
                loss += density * w;
                let s = w * inv;
                JetAdjoint {
                    value: 0.0,
                    grad: dg.map(|x| x * s),
                    hess: dm.map(|x| x * s),
                }
            }
        })
        .collect();
    Ok((loss * inv, adjoints))
}

/// Smoothness factor: `0.5 (1 + cos(2 pi phase))` with the phase restarting every cycle.
pub fn cosine_factor(iteration: usize, cycle_length: usize) -> f64 {
    let c = cycle_length.max(1);
    let phase = (iteration % c) as f64 / c as f64;
    0.5 * (1.0 + (2.0 * std::f64::consts::PI * phase).cos())
}

/// Combines the components into the weighted objective at `iteration`.
pub fn total_loss(components: &LossComponents, weights: &LossWeights, iteration: usize) -> Result<LossBreakdown> {
    weights.validate()?;
    let c = components;
    for (name, v) in [
        ("eikonal", c.eikonal),
        ("dirichlet_on", c.dirichlet_on),
        ("dirichlet_off", c.dirichlet_off),
        ("smooth", c.smooth),
    ] {
        if !v.is_finite() {
            return Err(Error::Contract(format!("{name} loss is not finite")));
        }
    }
    let mut out = LossBreakdown {
        eikonal: c.eikonal,
        dirichlet_on: c.dirichlet_on,
        dirichlet_off: c.dirichlet_off,
        smooth: c.smooth,
        tau: cosine_factor(iteration, weights.cycle_length),
        total: 0.0,
    };
    out.total = out.recombine(weights);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn jet_with_grad(g: Vec3) -> Jet3 {
        Jet3::new(0.0, g, [0.0; 6])
    }

    fn sphere_jet() -> Jet3 {
        Jet3::new(0.0, Vec3::new(1.0, 0.0, 0.0), [0.0, 0.0, 0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn eikonal_examples() {
        let unit = [jet_with_grad(Vec3::x()), jet_with_grad(Vec3::y())];
        assert_eq!(eikonal_loss(&unit).unwrap(), 0.0);
        let mixed = [jet_with_grad(Vec3::x()), jet_with_grad(Vec3::new(0.0, 2.0, 0.0))];
        assert_eq!(eikonal_loss(&mixed).unwrap(), 0.5);
        assert_eq!(eikonal_loss(&[jet_with_grad(Vec3::zeros())]).unwrap(), 1.0);
        assert!(eikonal_loss(&[]).is_err());
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_on_loss(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(dirichlet_on_loss(&[0.1, -0.3]).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(dirichlet_on_loss(&[-0.5]).unwrap(), 0.5);
        assert_eq!(dirichlet_off_loss(&[0.0], 100.0).unwrap(), 1.0);
        assert_abs_diff_eq!(dirichlet_off_loss(&[0.1], 100.0).unwrap(), (-10f64).exp(), epsilon = 1e-18);
        assert_abs_diff_eq!(dirichlet_off_loss(&[0.0, 0.1], 100.0).unwrap(), 0.5000227, epsilon = 1e-7);
        assert!(dirichlet_off_loss(&[0.0], 0.0).is_err());
    }

    #[test]
    fn sphere_and_plane_curvatures() {
        let c = curvatures(&sphere_jet()).unwrap();
        assert_eq!((c.mean, c.gaussian, c.density), (-1.0, 1.0, 2.0));
        let plane = curvatures(&jet_with_grad(Vec3::z())).unwrap();
        assert_eq!(plane.density, 0.0);
        let scaled = curvatures(&jet_with_grad(Vec3::new(0.0, 0.0, 2.0))).unwrap();
        assert_eq!((scaled.mean, scaled.gaussian, scaled.density), (0.0, 0.0, 0.0));
        assert!(matches!(curvatures(&jet_with_grad(Vec3::zeros())), Err(Error::DegenerateGradient { .. })));
    }

    #[test]
    fn feature_weights() {
        let idx = FeatureIndex::new(&[Vec3::zeros()]);
        assert_eq!(feature_weight(&Vec3::zeros(), &idx), 0.0);
        assert_abs_diff_eq!(feature_weight(&Vec3::new(0.2, 0.0, 0.0), &idx), 0.04, epsilon = 1e-15);
        assert_eq!(feature_weight(&Vec3::new(5.0, 0.0, 0.0), &idx), FEATURE_WEIGHT_CAP);
        assert_eq!(feature_weight(&Vec3::zeros(), &FeatureIndex::new(&[])), 1.0);
    }

    #[test]
    fn smooth_examples() {
        let none = FeatureIndex::new(&[]);
        let p = [Vec3::new(1.0, 0.0, 0.0)];
        assert_eq!(smooth_loss(&[jet_with_grad(Vec3::z())], &p, &none).unwrap(), 0.0);
        assert_eq!(smooth_loss(&[sphere_jet()], &p, &none).unwrap(), 2.0);
        let on_feature = FeatureIndex::new(&p);
        assert_eq!(smooth_loss(&[sphere_jet()], &p, &on_feature).unwrap(), 0.0);
        let degenerate = [jet_with_grad(Vec3::zeros())];
        assert!(matches!(smooth_loss(&degenerate, &p, &none), Err(Error::DegenerateBatch)));
    }

    #[test]
    fn degenerate_samples_are_excluded_from_the_mean() {
        let none = FeatureIndex::new(&[]);
        let jets = [sphere_jet(), jet_with_grad(Vec3::new(1e-9, 0.0, 0.0))];
        let pts = [Vec3::zeros(), Vec3::zeros()];
        let (loss, adj) = smooth_with_adjoint(&jets, &pts, &none).unwrap();
        assert_eq!(loss, 2.0);
        assert!(adj[1].is_zero());
    }

    #[test]
    fn cosine_schedule() {
        assert_eq!(cosine_factor(0, 1000), 1.0);
        assert_eq!(cosine_factor(500, 1000), 0.0);
        assert_eq!(cosine_factor(1000, 1000), 1.0);
        assert_eq!(cosine_factor(1250, 1000), cosine_factor(250, 1000));
    }

    #[test]
    fn total_examples() {
        let w = LossWeights::default();
        assert_eq!(total_loss(&LossComponents::default(), &w, 0).unwrap().total, 0.0);
        let e = LossComponents {
            eikonal: 1.0,
            ..Default::default()
        };
        assert_abs_diff_eq!(total_loss(&e, &w, 0).unwrap().total, 0.1, epsilon = 1e-15);
        let s = LossComponents {
            smooth: 2.0,
            ..Default::default()
        };
        assert_abs_diff_eq!(total_loss(&s, &w, 0).unwrap().total, 1e-3, epsilon = 1e-15);
        assert_eq!(total_loss(&s, &w, 500).unwrap().total, 0.0);
    }

    #[test]
    fn density_adjoint_matches_finite_differences() {
        let jet = Jet3::new(0.0, Vec3::new(0.3, -0.8, 0.5), [0.7, -0.2, 0.4, 1.1, 0.3, -0.6]);
        let (_, dg, dm) = density_with_adjoint(&jet).unwrap();
        let f = |j: &Jet3| curvatures(j).unwrap().density;
        let h = 1e-6;
        for a in 0..3 {
            let (mut p, mut m) = (jet, jet);
            p.grad[a] += h;
            m.grad[a] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - dg[a]).abs() < 1e-6 * (1.0 + fd.abs()), "grad {a}: {fd} vs {}", dg[a]);
        }
        for s in 0..6 {
            let (mut p, mut m) = (jet, jet);
            p.hess[s] += h;
            m.hess[s] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - dm[s]).abs() < 1e-6 * (1.0 + fd.abs()), "hess {s}: {fd} vs {}", dm[s]);
        }
    }

    #[test]
    fn eikonal_adjoint_matches_finite_differences() {
        let g = [Vec3::new(0.3, 0.2, -0.1), Vec3::new(1.2, 0.4, 0.3)];
        let (_, adj) = eikonal_with_adjoint(&g).unwrap();
        let h = 1e-7;
        for i in 0..2 {
            for a in 0..3 {
                let (mut p, mut m) = (g, g);
                p[i][a] += h;
                m[i][a] -= h;
                let fd = (eikonal_with_adjoint(&p).unwrap().0 - eikonal_with_adjoint(&m).unwrap().0) / (2.0 * h);
                assert!((fd - adj[i][a]).abs() < 1e-7);
            }
        }
    }
}
