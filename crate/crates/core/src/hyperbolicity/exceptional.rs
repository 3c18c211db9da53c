use serde::{Deserialize, Serialize};

use super::ThresholdLadder;
use crate::exact::ExactSum;
use crate::space::SimilaritySpace;

/// Points whose neighborhoods carry too much triple-defect mass across the
/// ladder thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalSets {
    /// `n1[y][z]`: mass of `{x : s(x,y) < t_i <= min{s(x,z), s(y,z)} for some i}`.
    pub n1: Vec<Vec<f64>>,
    /// `P(B(z))` where `B(z) = {y : n1[y][z] > δ₀}`.
    pub b_measure: Vec<f64>,
    /// `A = {z : P(B(z)) > δ₀}`, ascending indices.
    pub a_set: Vec<usize>,
    pub a_mass: f64,
    /// `P⊗2` mass of the pairs `(x, y)` that are bad relative to `z`.
    pub r2_measure: Vec<f64>,
}

impl ExceptionalSets {
    pub fn in_a(&self, z: usize) -> bool {
        self.a_set.binary_search(&z).is_ok()
    }
}

pub fn exceptional_sets(space: &SimilaritySpace, ladder: &ThresholdLadder) -> ExceptionalSets {
    let n = space.len();
    let w = &space.weights;
    let ts = &ladder.thresholds;
    let delta0 = ladder.delta0;
    let mut n1 = vec![vec![0.0; n]; n];
    for y in 0..n {
        for z in 0..n {
            let syz = space.sim[y][z];
            let mut acc = ExactSum::new();
            for x in 0..n {
                let sxy = space.sim[x][y];
                // the first threshold above s(x,y) is the only candidate
                let i = ts.partition_point(|&t| t <= sxy);
                if i < ts.len() && ts[i] <= space.sim[x][z].min(syz) {
                    acc.add(w[x]);
                }
            }
            n1[y][z] = acc.value();
        }
    }
    let mut b_measure = vec![0.0; n];
    let mut r2_measure = vec![0.0; n];
    for z in 0..n {
        let mut b = ExactSum::new();
        let mut r2 = ExactSum::new();
        for y in 0..n {
            if n1[y][z] > delta0 {
                b.add(w[y]);
            }
            r2.add_product(&[w[y], n1[y][z]]);
        }
        b_measure[z] = b.value();
        r2_measure[z] = r2.value();
    }
    let a_set: Vec<usize> = (0..n).filter(|&z| b_measure[z] > delta0).collect();
    let a_mass = crate::exact::exact_sum(a_set.iter().map(|&z| w[z]));
    ExceptionalSets {
        n1,
        b_measure,
        a_set,
        a_mass,
        r2_measure,
    }
}
