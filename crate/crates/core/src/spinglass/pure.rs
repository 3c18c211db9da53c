use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Config, Rho};
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::space::SimilaritySpace;
use crate::treebuild::{build_tree, TreeBuildReport, TreeParams};

/// Hierarchy of pure states read off a tree built on an overlap space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureStateReport {
    pub build: TreeBuildReport,
    /// Scale `a_n`: the cost-minimizing `α` of the built tree.
    pub a_n: f64,
    /// `q(d) = ρ^{-1}(a_n d)` for each depth `d` of the tree.
    pub q: Vec<f64>,
    /// Depths where `a_n d` left the range of `ρ` and was clamped to 1.
    pub clamped: Vec<bool>,
    /// `E|f(R_{1,2}) - q((σ¹, σ²)_r)|` under two independent draws.
    pub mean_abs_deviation: f64,
}

/// Builds a tree on an overlap space `s = ρ(f(R))` and assigns the overlap
/// value `q(d)` to the clusters at depth `d`. With `clamp` off a value
/// `a_n d > 1` is an error instead of being clamped.
pub fn pure_state_tree(space: &SimilaritySpace, params: &TreeParams, rho: Rho, clamp: bool) -> Result<PureStateReport> {
    if space.bound != 1.0 {
        return Err(Error::NotUnitBound(space.bound));
    }
    let build = build_tree(space, params)?;
    let a_n = build.best_alpha;
    let depth = build.tree.depth();
    let mut q = Vec::with_capacity(depth as usize + 1);
    let mut clamped = Vec::with_capacity(depth as usize + 1);
    for d in 0..=depth {
        let v = a_n * d as f64;
        if v > 1.0 && !clamp {
            return Err(Error::RhoNotInvertibleAtValue(v));
        }
        clamped.push(v > 1.0);
        q.push(rho.inverse(v.min(1.0))?);
    }
    let products = build.tree.product_matrix(space)?;
    let w = &space.weights;
    let mut acc = ExactSum::new();
    for x in 0..space.len() {
        for y in 0..space.len() {
            let dev = (rho.inverse(space.sim[x][y])? - q[products[x][y] as usize]).abs();
            acc.add_product(&[w[x], w[y], dev]);
        }
    }
    Ok(PureStateReport {
        build,
        a_n,
        q,
        clamped,
        mean_abs_deviation: acc.value(),
    })
}

/// Two independent uniform patterns in `{-1, 1}^n` and `per_cluster` noisy
/// copies of each, every spin flipped with probability `flip`. The first
/// `per_cluster` configurations belong to the first pattern.
pub fn planted_clusters(n: usize, per_cluster: usize, flip: f64, seed: u64) -> Result<Vec<Config>> {
    if n == 0 {
        return Err(Error::SizeTooSmall(n));
    }
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::InvalidParameter(format!(
            "flip probability must lie in [0, 1], got {flip}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns: Vec<Config> = (0..2)
        .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
        .collect();
    let mut out = Vec::with_capacity(2 * per_cluster);
    for p in &patterns {
        for _ in 0..per_cluster {
            out.push(p.iter().map(|&s| if rng.random_bool(flip) { -s } else { s }).collect());
        }
    }
    Ok(out)
}
