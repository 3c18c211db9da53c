use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::hyperbolicity::hyp_exact;
use crate::space::SimilaritySpace;
use crate::tree::CompatibleTree;

/// Sign of `s - alpha * g`, computed exactly.
fn residual_sign(s: f64, alpha: f64, g: f64) -> f64 {
    let mut r = ExactSum::new();
    r.add(s);
    r.add_product(&[-alpha, g]);
    if r.value() < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn cost_with_products(space: &SimilaritySpace, products: &[Vec<u32>], alpha: f64) -> f64 {
    let n = space.len();
    let w = &space.weights;
    let mut acc = ExactSum::new();
    for x in 0..n {
        for y in 0..n {
            let s = space.sim[x][y];
            let g = products[x][y] as f64;
            let sign = residual_sign(s, alpha, g);
            acc.add_product(&[sign, w[x], w[y], s]);
            acc.add_product(&[-sign, w[x], w[y], alpha, g]);
        }
    }
    acc.value()
}

/// `E|s(X, Y) - α (X, Y)_r|` for independent `X, Y` drawn from the weights,
/// diagonal included, accumulated exactly and rounded once.
pub fn tree_cost(space: &SimilaritySpace, tree: &CompatibleTree, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be a nonnegative number, got {alpha}"
        )));
    }
    let products = tree.product_matrix(space)?;
    Ok(cost_with_products(space, &products, alpha))
}

/// The smallest `α >= 0` minimizing [`tree_cost`], with its cost.
///
/// The cost is convex and piecewise linear in `α` with kinks at the ratios
/// `s(x, y) / (x, y)_r`; its smallest minimizer is the lower weighted median
/// of those ratios under the weights `P(x) P(y) (x, y)_r`.
pub fn best_alpha(space: &SimilaritySpace, tree: &CompatibleTree) -> Result<(f64, f64)> {
    let products = tree.product_matrix(space)?;
    let n = space.len();
    let w = &space.weights;
    let mut candidates: Vec<(f64, f64, f64, f64)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let g = products[x][y];
            if g > 0 && w[x] > 0.0 && w[y] > 0.0 {
                candidates.push((space.sim[x][y] / g as f64, w[x], w[y], g as f64));
            }
        }
    }
    if candidates.is_empty() {
        return Ok((0.0, cost_with_products(space, &products, 0.0)));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    // running (weight so far - half the total weight)
    let mut acc = ExactSum::new();
    for &(_, wx, wy, g) in &candidates {
        acc.add_product(&[-0.5, wx, wy, g]);
    }
    let mut median = 0;
    for (k, &(_, wx, wy, g)) in candidates.iter().enumerate() {
        acc.add_product(&[wx, wy, g]);
        if acc.value() >= 0.0 {
            median = k;
            break;
        }
    }
    // the ratios are rounded, so settle ties between neighbouring kinks on
    // the exact cost
    let lo = median.saturating_sub(1);
    let hi = (median + 1).min(candidates.len() - 1);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for &(alpha, ..) in &candidates[lo..=hi] {
        let c = cost_with_products(space, &products, alpha);
        if c < best.1 || (c == best.1 && alpha < best.0) {
            best = (alpha, c);
        }
    }
    Ok(best)
}

/// Outcome of checking `Hyp <= 5 sqrt(cost)` for one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub alpha: f64,
    pub hyp: f64,
    pub cost: f64,
    /// `5 sqrt(cost)`.
    pub bound: f64,
    /// `bound - hyp`.
    pub margin: f64,
    pub passed: bool,
}

/// Tolerance on the comparison `Hyp <= 5 sqrt(cost)`.
pub const CONVERSE_TOLERANCE: f64 = 1e-12;

pub fn converse_check(space: &SimilaritySpace, tree: &CompatibleTree, alpha: f64) -> Result<ConverseReport> {
    if space.bound != 1.0 {
        return Err(Error::NotUnitBound(space.bound));
    }
    let cost = tree_cost(space, tree, alpha)?;
    let hyp = hyp_exact(space);
    let bound = 5.0 * cost.sqrt();
    Ok(ConverseReport {
        alpha,
        hyp,
        cost,
        bound,
        margin: bound - hyp,
        passed: hyp <= bound + CONVERSE_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeBuilder;

    // ((a, b), c) with leaves at depth 2, 2, 1
    fn tree() -> CompatibleTree {
        let mut b = TreeBuilder::new("r");
        let u = b.add_child(0, "u");
        b.add_leaf(u, "la", "a");
        b.add_leaf(u, "lb", "b");
        b.add_leaf(0, "lc", "c");
        b.finish().unwrap()
    }

    fn tree_space(alpha0: f64) -> SimilaritySpace {
        let g = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        let sim = g.iter().map(|r| r.iter().map(|v| v * alpha0).collect()).collect();
        SimilaritySpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.5, 0.25, 0.25],
            sim,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn exact_tree_space_has_zero_cost() {
        let sp = tree_space(0.5);
        let t = tree();
        assert_eq!(tree_cost(&sp, &t, 0.5).unwrap(), 0.0);
        assert_eq!(best_alpha(&sp, &t).unwrap(), (0.5, 0.0));
        let rep = converse_check(&sp, &t, 0.5).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.hyp, 0.0);
    }

    #[test]
    fn zero_alpha_gives_mean_similarity() {
        let sp = tree_space(0.5);
        // E s = 0.25*1 + 0.0625*1 + 2*0.125*0.5 + 0.0625*0.5
        let expect = 0.25 + 0.0625 + 0.125 + 0.03125;
        assert_eq!(tree_cost(&sp, &tree(), 0.0).unwrap(), expect);
    }

    #[test]
    fn flat_tree_prefers_zero() {
        let mut b = TreeBuilder::new("r");
        for p in ["a", "b", "c"] {
            b.add_leaf(0, format!("l{p}"), p);
        }
        let t = b.finish().unwrap();
        let sp = tree_space(0.5);
        // diagonal products are 1, so only off-diagonal pairs are flat
        let (alpha, cost) = best_alpha(&sp, &t).unwrap();
        assert_eq!(cost, tree_cost(&sp, &t, alpha).unwrap());
        let grid_min = (0..=1000)
            .map(|k| tree_cost(&sp, &t, k as f64 / 1000.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(cost <= grid_min);
    }

    #[test]
    fn mismatched_leaves_rejected() {
        let sp = SimilaritySpace::uniform(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0).unwrap();
        assert!(matches!(tree_cost(&sp, &tree(), 1.0), Err(Error::LeafMismatch(_))));
    }
}
