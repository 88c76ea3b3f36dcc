use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::read_obj_str;
use crate::{Error, Result, Vec3};

/// One input polyline. A single-point "curve" stands for a sparse sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub feature: bool,
    #[serde(default)]
    pub closed: bool,
}

impl Curve {
    pub fn new(points: Vec<Vec3>, feature: bool, closed: bool) -> Self {
        Curve {
            points: points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            feature,
            closed,
        }
    }

    pub fn vertices(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect()
    }
}

/// Constraint curves with feature flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub curves: Vec<Curve>,
}

impl CurveSet {
    pub fn new(curves: Vec<Curve>) -> Result<Self> {
        let set = CurveSet { curves };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points() == 0 {
            return Err(Error::Input("curve set contains no points".into()));
        }
        for (i, c) in self.curves.iter().enumerate() {
            if c.points.is_empty() {
                return Err(Error::Input(format!("curve {i} has no points")));
            }
            if c.points.len() == 1 && c.feature {
                return Err(Error::Input(format!("curve {i} is a single point and cannot be a feature")));
            }
            if c.points.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!("curve {i} has a non-finite coordinate")));
            }
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        self.curves.iter().map(|c| c.points.len()).sum()
    }

    /// The flat constraint set with per-point feature flags, in curve order.
    pub fn flat_points(&self) -> Vec<(Vec3, bool)> {
        self.curves
            .iter()
            .flat_map(|c| c.vertices().into_iter().map(move |p| (p, c.feature)))
            .collect()
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.curves.iter().flat_map(|c| c.vertices()).collect()
    }

    /// Points of the flagged curves.
    pub fn feature_points(&self) -> Vec<Vec3> {
        self.curves.iter().filter(|c| c.feature).flat_map(|c| c.vertices()).collect()
    }

    pub fn with_features(mut self, feature: bool) -> Self {
        for c in &mut self.curves {
            c.feature = feature && c.points.len() > 1;
        }
        self
    }

    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> CurveSet {
        CurveSet {
            curves: self
                .curves
                .iter()
                .map(|c| Curve::new(c.vertices().iter().map(&f).collect(), c.feature, c.closed))
                .collect(),
        }
    }

    /// Whether every point lies in `[-bound, bound]^3`.
    pub fn within_box(&self, bound: f64) -> bool {
        self.curves.iter().flat_map(|c| c.points.iter().flatten()).all(|x| x.abs() <= bound)
    }
}

/// Uniform scale and translation into the canonical box: `p' = scale * (p + translation)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub translation: Vec3,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        NormalizationTransform {
            scale: 1.0,
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p + self.translation) * self.scale
    }

    pub fn invert(&self, q: &Vec3) -> Vec3 {
        q / self.scale - self.translation
    }
}

fn location_of(e: &serde_json::Error) -> String {
    format!("line {} column {}", e.line(), e.column())
}

/// Parses the JSON curve schema.
pub fn parse_curves_json(text: &str, path: &Path) -> Result<CurveSet> {
    let set: CurveSet = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        location: location_of(&e),
        message: e.to_string(),
    })?;
    set.validate()?;
    Ok(set)
}

/// Reads curves from a `.json` file or from OBJ polylines.
///
/// In OBJ input every `l` record is a polyline (closed when its last index
/// repeats the first) whose flag is `default_feature`, or `true` when unset;
/// vertices not referenced by any `l` record become non-feature point samples.
/// The override is ignored for JSON, which carries explicit flags.
pub fn load_curves(path: impl AsRef<Path>, default_feature: Option<bool>) -> Result<CurveSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    if !is_obj {
        return parse_curves_json(&text, path);
    }
    let obj = read_obj_str(&text, path)?;
    let feature = default_feature.unwrap_or(true);
    let mut used = vec![false; obj.vertices.len()];
    let mut curves = Vec::new();
    for line in &obj.lines {
        let mut idx = line.clone();
        idx.iter().for_each(|&i| used[i] = true);
        let closed = idx.len() > 2 && idx.first() == idx.last();
        if closed {
            idx.pop();
        }
        let pts: Vec<Vec3> = idx.iter().map(|&i| obj.vertices[i]).collect();
        curves.push(Curve::new(pts.clone(), feature && pts.len() > 1, closed));
    }
    for (i, v) in obj.vertices.iter().enumerate() {
        if !used[i] {
            curves.push(Curve::new(vec![*v], false, false));
        }
    }
    CurveSet::new(curves)
}

pub fn save_curves(curves: &CurveSet, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), curves)?;
    Ok(())
}

/// Centers the bounding box at the origin and scales its longest side to 1.
pub fn normalize_curves(curves: &CurveSet) -> Result<(CurveSet, NormalizationTransform)> {
    curves.validate()?;
    let pts = curves.points();
    let (lo, hi) = crate::geometry::bounding_box(&pts).ok_or(Error::DegenerateExtent)?;
    let extent = (hi - lo).max();
    if !(extent > 0.0) {
        return Err(Error::DegenerateExtent);
    }
    let transform = NormalizationTransform {
        scale: 1.0 / extent,
        translation: -(lo + hi) * 0.5,
    };
    Ok((curves.map_points(|p| transform.apply(p)), transform))
}

/// Adds independent `N(0, sigma^2)` noise to every coordinate.
pub fn perturb_curves(curves: &CurveSet, sigma: f64, seed: u64) -> Result<CurveSet> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Contract(format!("sigma must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(curves.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Contract(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = CurveSet {
        curves: curves
            .curves
            .iter()
            .map(|c| Curve {
                points: c.points.iter().map(|p| p.map(|x| x + normal.sample(&mut rng))).collect(),
                ..c.clone()
            })
            .collect(),
    };
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_flags() {
        let text = r#"{"curves": [
            {"points": [[0,0,0],[1,0,0]], "feature": true},
            {"points": [[0,1,0],[1,1,0],[1,2,0]], "closed": true}
        ]}"#;
        let set = parse_curves_json(text, Path::new("x.json")).unwrap();
        assert_eq!(set.curves.len(), 2);
        assert_eq!(set.feature_points(), vec![Vec3::zeros(), Vec3::x()]);
        assert!(set.curves[1].closed && !set.curves[1].feature);
    }

    #[test]
    fn truncated_json_reports_location() {
        let err = parse_curves_json(r#"{"curves": [{"points": [[0,0"#, Path::new("t.json")).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location.starts_with("line 1")));
    }

    #[test]
    fn normalization_example() {
        let set = CurveSet::new(vec![Curve::new(vec![Vec3::zeros(), Vec3::repeat(2.0)], false, false)]).unwrap();
        let (norm, t) = normalize_curves(&set).unwrap();
        assert_eq!(t.scale, 0.5);
        assert_eq!(t.translation, Vec3::repeat(-1.0));
        assert_eq!(norm.points()[1], Vec3::repeat(0.5));
        assert_eq!(t.invert(&norm.points()[1]), Vec3::repeat(2.0));
    }

    #[test]
    fn normalized_input_is_a_fixed_point() {
        let pts = vec![Vec3::new(-0.5, -0.2, 0.1), Vec3::new(0.5, 0.2, -0.1), Vec3::new(0.1, 0.0, 0.0)];
        let set = CurveSet::new(vec![Curve::new(pts.clone(), true, false)]).unwrap();
        let (norm, _) = normalize_curves(&set).unwrap();
        for (a, b) in norm.points().iter().zip(&pts) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let set = CurveSet::new(vec![Curve::new(vec![Vec3::repeat(0.3); 4], false, false)]).unwrap();
        assert!(matches!(normalize_curves(&set), Err(Error::DegenerateExtent)));
    }

    #[test]
    fn perturbation_is_seeded() {
        let set = CurveSet::new(vec![Curve::new(vec![Vec3::zeros(); 50], true, false)]).unwrap();
        assert_eq!(perturb_curves(&set, 0.0, 1).unwrap(), set);
        let a = perturb_curves(&set, 0.05, 9).unwrap();
        assert_eq!(a, perturb_curves(&set, 0.05, 9).unwrap());
        assert_ne!(a, perturb_curves(&set, 0.05, 10).unwrap());
        assert!(a.curves[0].feature);
        assert!(perturb_curves(&set, -1.0, 0).is_err());
    }
}
