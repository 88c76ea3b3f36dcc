//! Poisson-disk surface sampling by weighted sample elimination.
//!
//! Candidates are drawn area-uniformly, then the point with the largest
//! accumulated neighbour weight is removed repeatedly until the requested
//! count remains.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{KdTree, TriangleMesh};
use crate::{Error, Result, Vec3};

const ALPHA: f64 = 8.0;
const BETA: f64 = 0.65;
const GAMMA: f64 = 1.5;
/// Candidates drawn per requested sample.
const OVERSAMPLING: usize = 4;

#[derive(PartialEq)]
struct Entry {
    weight: f64,
    index: usize,
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then_with(|| other.index.cmp(&self.index))
    }
}

/// Selects `n` of `candidates` with a blue-noise distribution over a surface of
/// total `area`. Returns the kept indices in ascending order.
pub fn sample_elimination(candidates: &[Vec3], n: usize, area: f64) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Contract("sample count must be positive".into()));
    }
    if candidates.len() <= n {
        return Ok((0..candidates.len()).collect());
    }
    let m = candidates.len();
    let r_max = (area / (2.0 * 3f64.sqrt() * n as f64)).sqrt();
    let r_min = r_max * (1.0 - (n as f64 / m as f64).powf(GAMMA)) * BETA;
    let radius = 2.0 * r_max;
    let tree = KdTree::new(candidates)?;

    let pair_weight = |a: usize, b: usize| {
        let d = (candidates[a] - candidates[b]).norm().max(r_min);
        (1.0 - d / radius).powf(ALPHA)
    };
    let neighbours: Vec<Vec<usize>> = (0..m)
        .map(|i| tree.within(&candidates[i], radius).into_iter().filter(|&j| j != i).collect())
        .collect();
    let mut weight: Vec<f64> = (0..m)
        .map(|i| neighbours[i].iter().map(|&j| pair_weight(i, j)).sum())
        .collect();

    let mut alive = vec![true; m];
    let mut heap: BinaryHeap<Entry> = (0..m).map(|i| Entry { weight: weight[i], index: i }).collect();
    let mut remaining = m;
    while remaining > n {
        let Some(Entry { weight: w, index }) = heap.pop() else { break };
        if !alive[index] || w != weight[index] {
            continue;
        }
        alive[index] = false;
        remaining -= 1;
        for &j in &neighbours[index] {
            if alive[j] {
                weight[j] -= pair_weight(index, j);
                heap.push(Entry { weight: weight[j], index: j });
            }
        }
    }
    Ok((0..m).filter(|&i| alive[i]).collect())
}

/// `n` blue-noise samples on `mesh`, drawn from `4n` area-uniform candidates.
pub fn poisson_disk_sample<R: Rng>(mesh: &TriangleMesh, n: usize, rng: &mut R) -> Result<Vec<Vec3>> {
    if mesh.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    let candidates: Vec<Vec3> = mesh
        .sample_surface(OVERSAMPLING * n, rng)
        .into_iter()
        .map(|(p, _)| p)
        .collect();
    let keep = sample_elimination(&candidates, n, mesh.area())?;
    Ok(keep.into_iter().map(|i| candidates[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use rand::SeedableRng;

    fn min_pairwise(points: &[Vec3]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                best = best.min((points[i] - points[j]).norm());
            }
        }
        best
    }

    #[test]
    fn exact_count_and_spacing_on_sphere() {
        let mesh = primitives::icosphere(0.4, 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts = poisson_disk_sample(&mesh, 2000, &mut rng).unwrap();
        assert_eq!(pts.len(), 2000);
        let bound = 0.4 * (4.0 * std::f64::consts::PI * 0.16 / (2000.0 * 4.0)).sqrt();
        let got = min_pairwise(&pts);
        assert!(got >= bound, "min spacing {got} < {bound}");
    }

    #[test]
    fn elimination_beats_random_subset() {
        let mesh = primitives::square_patch(4, 1.0, 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let cand: Vec<Vec3> = mesh.sample_surface(2000, &mut rng).into_iter().map(|(p, _)| p).collect();
        let keep = sample_elimination(&cand, 500, 1.0).unwrap();
        assert_eq!(keep.len(), 500);
        let kept: Vec<Vec3> = keep.iter().map(|&i| cand[i]).collect();
        let random: Vec<Vec3> = cand[..500].to_vec();
        assert!(min_pairwise(&kept) > 3.0 * min_pairwise(&random));
    }

    #[test]
    fn deterministic_given_seed() {
        let mesh = primitives::icosphere(0.3, 2);
        let a = poisson_disk_sample(&mesh, 300, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = poisson_disk_sample(&mesh, 300, &mut rand_chacha::ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
