//! Average hyperbolicity, worst-case defect and the bad-set profile.

mod exceptional;
mod ladder;

pub use exceptional::{exceptional_sets, ExceptionalSets};
pub use ladder::{threshold_ladder, ThresholdLadder, DELTA0_FLOOR};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::space::SimilaritySpace;

/// `(min{s(x,z), s(y,z)} - s(x,y))_+`
#[inline]
pub fn defect(space: &SimilaritySpace, x: usize, y: usize, z: usize) -> f64 {
    let d = space.sim[x][z].min(space.sim[y][z]) - space.sim[x][y];
    if d > 0.0 {
        d
    } else {
        0.0
    }
}

/// Expected defect over i.i.d. triples, summed exactly over all `n^3` ordered
/// triples (collisions included). The result is the correctly rounded value
/// of the exact sum of the rounded per-triple products.
pub fn hyp_exact(space: &SimilaritySpace) -> f64 {
    let n = space.len();
    let w = &space.weights;
    let mut acc = ExactSum::new();
    for z in 0..n {
        if w[z] == 0.0 {
            continue;
        }
        let col = &space.sim[z];
        for x in 0..n {
            if w[x] == 0.0 {
                continue;
            }
            let sx = col[x];
            let row = &space.sim[x];
            for y in 0..n {
                let d = sx.min(col[y]) - row[y];
                if d > 0.0 && w[y] != 0.0 {
                    acc.add_product(&[d, w[x], w[y], w[z]]);
                }
            }
        }
    }
    acc.value()
}

/// Largest triple defect.
pub fn gromov_delta_worst_case(space: &SimilaritySpace) -> f64 {
    let n = space.len();
    let mut worst = 0.0f64;
    for z in 0..n {
        for x in 0..n {
            for y in 0..n {
                worst = worst.max(defect(space, x, y, z));
            }
        }
    }
    worst
}

/// Worst defect over four points with every point in turn as the base: the
/// classical four-point δ of a metric, `O(n^4)`.
pub fn four_point_delta(dist: &[Vec<f64>]) -> f64 {
    let n = dist.len();
    let mut worst = 0.0f64;
    for w in 0..n {
        for x in 0..n {
            for y in 0..n {
                let xy = crate::space::gromov_product(dist, x, y, w);
                for z in 0..n {
                    let xz = crate::space::gromov_product(dist, x, z, w);
                    let yz = crate::space::gromov_product(dist, y, z, w);
                    worst = worst.max(xz.min(yz) - xy);
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Sample mean of the defect over `samples` i.i.d. weighted triples.
pub fn hyp_monte_carlo(space: &SimilaritySpace, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let dist = WeightedIndex::new(&space.weights).map_err(|e| Error::InvalidParameter(format!("weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=samples {
        let x = dist.sample(&mut rng);
        let y = dist.sample(&mut rng);
        let z = dist.sample(&mut rng);
        let d = defect(space, x, y, z);
        let delta = d - mean;
        mean += delta / k as f64;
        m2 += delta * (d - mean);
    }
    let std_error = if samples > 1 {
        (m2 / (samples - 1) as f64 / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        estimate: mean,
        std_error,
        samples,
        seed,
    })
}

/// `P⊗3(R_t)` with `R_t = {(x,y,z) : s(x,y) < t <= min{s(x,z), s(y,z)}}`.
pub fn bad_set_measure(space: &SimilaritySpace, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= space.bound) {
        return Err(Error::ThresholdOutOfRange { t, bound: space.bound });
    }
    let n = space.len();
    let w = &space.weights;
    let mut acc = ExactSum::new();
    for z in 0..n {
        let close: Vec<usize> = (0..n).filter(|&x| space.sim[x][z] >= t).collect();
        for &x in &close {
            for &y in &close {
                if space.sim[x][y] < t {
                    acc.add_product(&[w[x], w[y], w[z]]);
                }
            }
        }
    }
    Ok(acc.value())
}

/// The piecewise-constant map `t -> P⊗3(R_t)`.
///
/// With `v_0 < ... < v_{K-1}` the distinct similarity values, the map is
/// constant on each `(v_{k-1}, v_k]` with value `values[k]`, and zero for
/// `t <= v_0` and `t > v_{K-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadSetProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl BadSetProfile {
    pub fn compute(space: &SimilaritySpace) -> Self {
        let n = space.len();
        let mut breakpoints: Vec<f64> = space.sim.iter().flatten().copied().collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let k = breakpoints.len();
        let index: Vec<Vec<usize>> = space
            .sim
            .iter()
            .map(|row| row.iter().map(|v| breakpoints.partition_point(|b| b < v)).collect())
            .collect();
        // triple (x,y,z) lies in R_t exactly for pieces a+1..=c where
        // a = idx(s(x,y)), c = idx(min{s(x,z), s(y,z)})
        let mut diff: Vec<ExactSum> = (0..=k).map(|_| ExactSum::new()).collect();
        let w = &space.weights;
        for z in 0..n {
            if w[z] == 0.0 {
                continue;
            }
            for x in 0..n {
                if w[x] == 0.0 {
                    continue;
                }
                let cx = index[x][z];
                for y in 0..n {
                    let a = index[x][y];
                    let c = cx.min(index[y][z]);
                    if c > a && w[y] != 0.0 {
                        diff[a + 1].add_product(&[w[x], w[y], w[z]]);
                        diff[c + 1].add_product(&[-w[x], w[y], w[z]]);
                    }
                }
            }
        }
        let mut running = ExactSum::new();
        let mut values = Vec::with_capacity(k);
        for d in diff.iter().take(k) {
            running.merge(d);
            values.push(running.value());
        }
        Self { breakpoints, values }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b < t);
        if k == 0 || k == self.breakpoints.len() {
            0.0
        } else {
            self.values[k]
        }
    }

    /// `∫_0^b P⊗3(R_t) dt`, exact up to the rounding of piece lengths.
    pub fn integral(&self) -> f64 {
        let mut acc = ExactSum::new();
        for k in 1..self.breakpoints.len() {
            if self.values[k] != 0.0 {
                let len = self.breakpoints[k] - self.breakpoints[k - 1];
                acc.add_product(&[self.values[k], len]);
            }
        }
        acc.value()
    }

    /// `(t, mass)` rows: one per piece, keyed by its right endpoint.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.breakpoints
            .iter()
            .copied()
            .zip(self.values.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point() -> SimilaritySpace {
        let sim = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]];
        SimilaritySpace::uniform(sim, 1.0).unwrap()
    }

    #[test]
    fn three_point_example() {
        let s = three_point();
        assert!((hyp_exact(&s) - 2.0 / 27.0).abs() < 1e-16);
        assert_eq!(gromov_delta_worst_case(&s), 1.0);
        assert!((bad_set_measure(&s, 0.5).unwrap() - 2.0 / 27.0).abs() < 1e-16);
        assert!((BadSetProfile::compute(&s).eval(0.5) - 2.0 / 27.0).abs() < 1e-16);
    }

    #[test]
    fn constant_similarity_has_no_defect() {
        let s = SimilaritySpace::uniform(vec![vec![0.4; 5]; 5], 1.0).unwrap();
        assert_eq!(hyp_exact(&s), 0.0);
        assert_eq!(gromov_delta_worst_case(&s), 0.0);
        let mc = hyp_monte_carlo(&s, 1000, 3).unwrap();
        assert_eq!((mc.estimate, mc.std_error), (0.0, 0.0));
    }

    #[test]
    fn zero_similarity_bad_set_empty() {
        let s = SimilaritySpace::uniform(vec![vec![0.0; 4]; 4], 1.0).unwrap();
        for t in [0.1, 0.5, 1.0] {
            assert_eq!(bad_set_measure(&s, t).unwrap(), 0.0);
        }
        assert!(matches!(
            bad_set_measure(&s, 0.0),
            Err(Error::ThresholdOutOfRange { .. })
        ));
    }

    #[test]
    fn above_max_entry_is_empty() {
        let s = three_point();
        assert!((bad_set_measure(&s, 1.0).unwrap() - 2.0 / 27.0).abs() < 1e-16);
        let s2 =
            SimilaritySpace::uniform(vec![vec![0.5, 0.0, 0.5], vec![0.0, 0.5, 0.5], vec![0.5, 0.5, 0.5]], 1.0).unwrap();
        assert_eq!(bad_set_measure(&s2, 0.6).unwrap(), 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(matches!(hyp_monte_carlo(&three_point(), 0, 1), Err(Error::ZeroSamples)));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = hyp_monte_carlo(&three_point(), 5000, 11).unwrap();
        let b = hyp_monte_carlo(&three_point(), 5000, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profile_integrates_to_hyp() {
        let s = three_point();
        let p = BadSetProfile::compute(&s);
        assert!((p.integral() - hyp_exact(&s)).abs() < 1e-16);
    }
}
