use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::two_prod;
use crate::space::SimilaritySpace;
use crate::tree::CompatibleTree;

/// A space whose atoms were divided into lighter copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpace {
    pub space: SimilaritySpace,
    /// Original point index of each copy.
    pub origin: Vec<usize>,
    /// Number of copies per original point.
    pub copies: Vec<usize>,
    pub original_points: Vec<String>,
}

/// Divides `p` into `k` nonnegative pieces whose exact real sum is `p`.
/// Every piece but the last is a multiple of the unit in the last place of
/// the running remainder, so each subtraction is exact.
fn exact_pieces(p: f64, k: usize) -> Vec<f64> {
    let equal = p / k as f64;
    let (hi, lo) = two_prod(equal, k as f64);
    if hi == p && lo == 0.0 {
        return vec![equal; k];
    }
    let mut out = Vec::with_capacity(k);
    let mut rem = p;
    for j in 0..k - 1 {
        let ulp = rem.next_up() - rem;
        let piece = ((rem / (k - j) as f64) / ulp).floor() * ulp;
        out.push(piece);
        rem -= piece;
    }
    out.push(rem);
    out
}

/// Replaces each point `x` by `k(x) = floor(P(x)/δ) + 1` copies of total
/// weight `P(x)` and individual weight below `δ` (more copies are used in the
/// rare case where rounding pushes a piece to `δ`). Copies of `x` and `y`
/// have similarity `s(x, y)`, including `x = y`. Points that need no split
/// keep their identifier; copies are named `x#j`.
pub fn split_atoms(space: &SimilaritySpace, delta: f64) -> Result<SplitSpace> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "atom cap must be positive, got {delta}"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut origin = Vec::new();
    let mut copies = Vec::with_capacity(space.len());
    for (x, &p) in space.weights.iter().enumerate() {
        let mut k = (p / delta).floor() as usize + 1;
        let pieces = loop {
            let pieces = exact_pieces(p, k);
            if pieces.iter().all(|&w| w < delta) {
                break pieces;
            }
            k += 1;
        };
        copies.push(k);
        for (j, w) in pieces.into_iter().enumerate() {
            points.push(if k == 1 {
                space.points[x].clone()
            } else {
                format!("{}#{}", space.points[x], j)
            });
            weights.push(w);
            origin.push(x);
        }
    }
    let sim = origin
        .iter()
        .map(|&a| origin.iter().map(|&b| space.sim[a][b]).collect())
        .collect();
    let split = SimilaritySpace {
        points,
        weights,
        bound: space.bound,
        sim,
    };
    split.validate()?;
    Ok(SplitSpace {
        space: split,
        origin,
        copies,
        original_points: space.points.clone(),
    })
}

/// Keeps one uniformly chosen copy per original point, prunes the other
/// leaves and renames the kept ones after their originals.
pub fn merge_tree_leaves(tree: &CompatibleTree, split: &SplitSpace, seed: u64) -> Result<CompatibleTree> {
    if tree.num_leaves() != split.space.len() {
        return Err(Error::MapMismatch(format!(
            "tree has {} leaves but the split space has {} points",
            tree.num_leaves(),
            split.space.len()
        )));
    }
    let mut by_origin: Vec<Vec<usize>> = vec![Vec::new(); split.original_points.len()];
    for (c, &x) in split.origin.iter().enumerate() {
        by_origin[x].push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drop = Vec::new();
    let mut rename = HashMap::new();
    for (x, group) in by_origin.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::MapMismatch(format!("no copies of {}", split.original_points[x])));
        }
        let keep = group[rng.random_range(0..group.len())];
        for &c in group {
            let id = &split.space.points[c];
            let leaf = tree
                .leaf_of(id)
                .ok_or_else(|| Error::MapMismatch(format!("tree has no leaf for copy {id:?}")))?;
            if c == keep {
                rename.insert(id.clone(), split.original_points[x].clone());
            } else {
                drop.push(leaf);
            }
        }
    }
    tree.without_leaves(&drop)?.relabel(&rename)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_sum;

    #[test]
    fn example_split() {
        let sp = SimilaritySpace::new(
            vec!["a".into(), "b".into()],
            vec![0.9, 0.1],
            vec![vec![1.0, 0.2], vec![0.2, 0.7]],
            1.0,
        )
        .unwrap();
        let out = split_atoms(&sp, 0.25).unwrap();
        assert_eq!(out.copies, vec![4, 1]);
        assert_eq!(out.space.weights, vec![0.225, 0.225, 0.225, 0.225, 0.1]);
        assert_eq!(out.space.points[0], "a#0");
        assert_eq!(out.space.points[4], "b");
        assert_eq!(out.space.sim[0][1], 1.0);
        assert_eq!(out.space.sim[3][4], 0.2);
    }

    #[test]
    fn pieces_sum_exactly() {
        for &(p, k) in &[(0.1, 3), (0.7, 7), (1.0 / 3.0, 5), (0.123456789, 11)] {
            let pieces = exact_pieces(p, k);
            assert_eq!(pieces.len(), k);
            assert_eq!(exact_sum(pieces.iter().copied()), p);
            let mut acc = crate::exact::ExactSum::new();
            acc.add(-p);
            acc.extend(pieces.iter().copied());
            assert_eq!(acc.value(), 0.0);
            assert!(pieces.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn light_atoms_are_untouched() {
        let sp = SimilaritySpace::uniform(vec![vec![1.0; 3]; 3], 1.0).unwrap();
        let out = split_atoms(&sp, 0.5).unwrap();
        assert_eq!(out.space, sp);
        assert_eq!(out.copies, vec![1, 1, 1]);
    }
}
