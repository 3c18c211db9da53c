//! Recursive construction of a compatible tree from the threshold ladder,
//! tree costs, atom splitting and the converse bound.

mod cost;
mod split;

pub use cost::{best_alpha, converse_check, tree_cost, ConverseReport, CONVERSE_TOLERANCE};
pub use split::{merge_tree_leaves, split_atoms, SplitSpace};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cliques::{repair_threshold_graph, StructureChecks};
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::hyperbolicity::{exceptional_sets, threshold_ladder};
use crate::regularity::{Mode, RegularityParams};
use crate::space::SimilaritySpace;
use crate::tree::{CompatibleTree, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub epsilon: f64,
    pub m: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Replaces `Hyp^{1/8}` as `δ₀` when set.
    pub delta0: Option<f64>,
    /// Random subset pairs per regularity test on large parts.
    pub trials: u64,
}

impl TreeParams {
    pub fn new(epsilon: f64, m: usize, mode: Mode) -> Self {
        Self {
            epsilon,
            m,
            mode,
            seed: 0,
            delta0: None,
            trials: RegularityParams::default().trials,
        }
    }

    fn regularity(&self, seed: u64) -> RegularityParams {
        let base = match self.mode {
            Mode::Theory => RegularityParams::theory(self.epsilon, self.m),
            Mode::Practical => RegularityParams::practical(self.epsilon, self.m),
        };
        RegularityParams {
            seed,
            trials: self.trials,
            ..base
        }
    }
}

/// Seed for the repair of part `index` at `level`.
fn repair_seed(seed: u64, level: usize, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | index as u64);
    rng.next_u64()
}

/// One set of a level together with its parent in the previous level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    /// Space indices, ascending.
    pub points: Vec<usize>,
    /// Index into the previous level (`None` at level 0).
    pub parent: Option<usize>,
}

/// Summary of one clique repair inside the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSummary {
    /// Level whose set was repaired (0 for the repair of `S'`).
    pub level: usize,
    pub set: usize,
    pub threshold: f64,
    pub vertices: usize,
    pub parts: usize,
    pub cliques: usize,
    pub delta_e_measure: f64,
    pub checks: StructureChecks,
}

/// A pair outside `ΔE` violating `κ (x,y)_r - δ₀ <= s(x,y) <= κ((x,y)_r + 1) + δ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub x: String,
    pub y: String,
    pub product: u32,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeBuildReport {
    pub tree: CompatibleTree,
    pub params: TreeParams,
    pub kappa: f64,
    pub hyp: f64,
    pub delta0: f64,
    pub delta0_source: String,
    /// Ladder length `N`.
    pub n: usize,
    pub thresholds: Vec<f64>,
    /// Exceptional points, as identifiers.
    pub a_set: Vec<String>,
    pub a_mass: f64,
    /// `levels[i]` is `𝒱_i`.
    pub levels: Vec<Vec<LevelSet>>,
    pub repairs: Vec<RepairSummary>,
    /// Unordered pairs `(x, y)`, `x <= y`, in `ΔE`.
    pub delta_e_pairs: Vec<(usize, usize)>,
    /// `P⊗²(ΔE)` over ordered pairs.
    pub delta_e_total: f64,
    pub alpha_used: f64,
    pub cost: f64,
    pub best_alpha: f64,
    pub best_cost: f64,
    pub sandwich_checked: usize,
    pub sandwich_violations: Vec<SandwichViolation>,
    /// `κ + δ₀ + (1 + κ)(P⊗²(ΔE) + P(X = Y))`.
    pub cost_bound: f64,
    pub cost_bound_ok: bool,
}

impl TreeBuildReport {
    pub fn sandwich_ok(&self) -> bool {
        self.sandwich_violations.is_empty()
    }
}

/// Relative slack on the numerically evaluated cost bound.
const COST_BOUND_SLACK: f64 = 1e-12;

/// Builds the threshold hierarchy: `S' = S \ A` is repaired into cliques at
/// `t_1`, every non-singleton set of level `i` is repaired at `t_{i+1}`, and
/// the non-singleton sets of level `N` are split into singletons. Points of
/// `A` are singletons at level 1. Each set of each level becomes a tree node.
pub fn build_tree(space: &SimilaritySpace, params: &TreeParams) -> Result<TreeBuildReport> {
    if space.bound != 1.0 {
        return Err(Error::NotUnitBound(space.bound));
    }
    let n_pts = space.len();
    if n_pts == 0 {
        return Err(Error::InvalidParameter("space has no points".into()));
    }
    if params.mode == Mode::Theory {
        let limit = 1.0 / (2.0 * params.m as f64);
        let p_star = space.max_atom();
        if p_star > limit {
            return Err(Error::SplitRequired { p_star, limit });
        }
    }
    let ladder = threshold_ladder(space, params.epsilon, params.m, params.delta0)?;
    let exc = exceptional_sets(space, &ladder);
    let big_n = ladder.n;

    let mut delta = vec![vec![false; n_pts]; n_pts];
    for &a in &exc.a_set {
        for y in 0..n_pts {
            delta[a][y] = true;
            delta[y][a] = true;
        }
    }

    let mut levels: Vec<Vec<LevelSet>> = vec![vec![LevelSet {
        points: (0..n_pts).collect(),
        parent: None,
    }]];
    let mut repairs = Vec::new();

    // splits `set` (level `level`, position `index`) at threshold `t`
    let mut split = |set: &[usize], level: usize, index: usize, t: f64| -> Result<Vec<Vec<usize>>> {
        if set.len() <= 1 {
            return Ok(vec![set.to_vec()]);
        }
        if set.iter().all(|&x| space.weights[x] == 0.0) {
            for &x in set {
                for &y in set {
                    delta[x][y] |= x != y;
                }
            }
            return Ok(set.iter().map(|&x| vec![x]).collect());
        }
        let reg = params.regularity(repair_seed(params.seed, level, index));
        let run = repair_threshold_graph(space, set, t, &reg).map_err(|e| match e {
            Error::HeavyAtom { p_star, limit } => Error::SplitRequired { p_star, limit },
            other => other,
        })?;
        for (a, b) in run.log.union_pairs() {
            let (x, y) = (set[a], set[b]);
            delta[x][y] = true;
            delta[y][x] = true;
        }
        repairs.push(RepairSummary {
            level,
            set: index,
            threshold: t,
            vertices: set.len(),
            parts: run.partition.q(),
            cliques: run.cliques.len(),
            delta_e_measure: run.log.total_measure,
            checks: run.structure.checks.clone(),
        });
        Ok(run
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| set[v]).collect())
            .collect())
    };

    if big_n >= 1 {
        let s_prime: Vec<usize> = (0..n_pts).filter(|&x| !exc.in_a(x)).collect();
        let mut level1: Vec<LevelSet> = Vec::new();
        if !s_prime.is_empty() {
            for c in split(&s_prime, 0, 0, ladder.thresholds[0])? {
                level1.push(LevelSet {
                    points: c,
                    parent: Some(0),
                });
            }
        }
        for &a in &exc.a_set {
            level1.push(LevelSet {
                points: vec![a],
                parent: Some(0),
            });
        }
        levels.push(level1);
        for i in 1..big_n {
            let mut next = Vec::new();
            for (k, set) in levels[i].iter().enumerate() {
                if set.points.len() > 1 {
                    for c in split(&set.points, i, k, ladder.thresholds[i])? {
                        next.push(LevelSet {
                            points: c,
                            parent: Some(k),
                        });
                    }
                }
            }
            levels.push(next);
        }
    }
    let last = levels.len() - 1;
    let singles: Vec<LevelSet> = levels[last]
        .iter()
        .enumerate()
        .filter(|(_, s)| s.points.len() > 1 || last == 0)
        .flat_map(|(k, s)| {
            s.points.iter().map(move |&x| LevelSet {
                points: vec![x],
                parent: Some(k),
            })
        })
        .collect();
    levels.push(singles);

    let tree = assemble(space, &levels)?;

    let w = &space.weights;
    let mut delta_e_pairs = Vec::new();
    let mut acc = ExactSum::new();
    for x in 0..n_pts {
        for y in 0..n_pts {
            if delta[x][y] || (x == y && exc.in_a(x)) {
                acc.add_product(&[w[x], w[y]]);
                if x <= y {
                    delta_e_pairs.push((x, y));
                }
            }
        }
    }
    let delta_e_total = acc.value();

    let kappa = ladder.kappa;
    let delta0 = ladder.delta0;
    let products = tree.product_matrix(space)?;
    let mut sandwich_checked = 0;
    let mut sandwich_violations = Vec::new();
    for x in 0..n_pts {
        for y in 0..n_pts {
            if x == y || delta[x][y] {
                continue;
            }
            sandwich_checked += 1;
            let g = products[x][y] as f64;
            let s = space.sim[x][y];
            let mut lower = ExactSum::new();
            lower.add(s);
            lower.add_product(&[-kappa, g]);
            lower.add(delta0);
            let mut upper = ExactSum::new();
            upper.add_product(&[kappa, g + 1.0]);
            upper.add(delta0);
            upper.add(-s);
            if lower.value() < 0.0 || upper.value() < 0.0 {
                sandwich_violations.push(SandwichViolation {
                    x: space.points[x].clone(),
                    y: space.points[y].clone(),
                    product: products[x][y],
                    s,
                });
            }
        }
    }

    let cost = tree_cost(space, &tree, kappa)?;
    let (best_a, best_cost) = best_alpha(space, &tree)?;
    let collision: f64 = w.iter().map(|p| p * p).collect::<ExactSum>().value();
    let cost_bound = kappa + delta0 + (1.0 + kappa) * (delta_e_total + collision);
    let cost_bound_ok = cost <= cost_bound * (1.0 + COST_BOUND_SLACK);

    Ok(TreeBuildReport {
        tree,
        params: params.clone(),
        kappa,
        hyp: ladder.hyp,
        delta0,
        delta0_source: ladder.delta0_source.clone(),
        n: big_n,
        thresholds: ladder.thresholds.clone(),
        a_set: exc.a_set.iter().map(|&a| space.points[a].clone()).collect(),
        a_mass: exc.a_mass,
        levels,
        repairs,
        delta_e_pairs,
        delta_e_total,
        alpha_used: kappa,
        cost,
        best_alpha: best_a,
        best_cost,
        sandwich_checked,
        sandwich_violations,
        cost_bound,
        cost_bound_ok,
    })
}

/// One node per set per level; singleton sets without children are leaves.
fn assemble(space: &SimilaritySpace, levels: &[Vec<LevelSet>]) -> Result<CompatibleTree> {
    let mut b = TreeBuilder::new("r");
    let mut nodes_prev = vec![b.root()];
    for (i, level) in levels.iter().enumerate().skip(1) {
        let has_children: Vec<bool> = match levels.get(i + 1) {
            Some(next) => {
                let mut v = vec![false; level.len()];
                for s in next {
                    v[s.parent.expect("non-root level")] = true;
                }
                v
            }
            None => vec![false; level.len()],
        };
        let mut nodes = Vec::with_capacity(level.len());
        for (k, set) in level.iter().enumerate() {
            let parent = nodes_prev[set.parent.expect("non-root level")];
            let id = format!("n{i}.{k}");
            let node = if has_children[k] {
                b.add_child(parent, id)
            } else {
                debug_assert_eq!(set.points.len(), 1);
                b.add_leaf(parent, id, space.points[set.points[0]].clone())
            };
            nodes.push(node);
        }
        nodes_prev = nodes;
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(levels: &[usize], sims: &[f64]) -> SimilaritySpace {
        // points labelled by mixed-radix digits; similarity by common prefix
        // length off the diagonal
        let n: usize = levels.iter().product();
        let digits = |mut x: usize| {
            let mut d = vec![0; levels.len()];
            for (k, &b) in levels.iter().enumerate().rev() {
                d[k] = x % b;
                x /= b;
            }
            d
        };
        let sim = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| {
                        if x == y {
                            return 1.0;
                        }
                        let (dx, dy) = (digits(x), digits(y));
                        let common = dx.iter().zip(&dy).take_while(|(a, b)| a == b).count();
                        sims[common]
                    })
                    .collect()
            })
            .collect();
        SimilaritySpace::uniform(sim, 1.0).unwrap()
    }

    fn params() -> TreeParams {
        TreeParams::new(1e-16, 16, Mode::Practical)
    }

    #[test]
    fn three_level_hierarchy_is_recovered() {
        // similarity κ (common prefix + 1) off the diagonal, 1 on it
        let sp = planted(&[3, 3, 3], &[0.25, 0.5, 0.75]);
        let rep = build_tree(&sp, &params()).unwrap();
        assert_eq!(rep.kappa, 0.25);
        assert_eq!(rep.n, 3);
        assert!(rep.a_set.is_empty());
        let sizes: Vec<Vec<usize>> = rep
            .levels
            .iter()
            .map(|l| l.iter().map(|s| s.points.len()).collect())
            .collect();
        assert_eq!(sizes, vec![vec![27], vec![27], vec![9; 3], vec![3; 9], vec![1; 27]]);
        assert!(rep.sandwich_ok());
        assert!(rep.cost_bound_ok);
        assert_eq!(rep.delta_e_total, 0.0);
        assert_eq!(rep.cost, 0.0);
        assert_eq!(rep.best_alpha, 0.25);
        let t = &rep.tree;
        assert_eq!(t.gromov_product(&sp.points[0], &sp.points[1]).unwrap(), 3);
        assert_eq!(t.gromov_product(&sp.points[0], &sp.points[4]).unwrap(), 2);
        assert_eq!(t.gromov_product(&sp.points[0], &sp.points[26]).unwrap(), 1);
    }

    #[test]
    fn zero_similarity_gives_flat_tree() {
        let mut sim = vec![vec![0.0; 5]; 5];
        for (i, row) in sim.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let sp = SimilaritySpace::uniform(sim, 1.0).unwrap();
        let rep = build_tree(&sp, &params()).unwrap();
        assert!(rep.tree.depth() <= 2);
        assert!(rep.sandwich_ok());
        // all off-diagonal products 0, diagonal products 1
        let direct: f64 = (0..5).map(|_| 0.04 * (1.0 - 0.25)).sum();
        assert!((rep.cost - direct).abs() < 1e-15);
    }

    #[test]
    fn theory_mode_asks_for_split() {
        let sp = planted(&[2, 2], &[0.0, 0.5, 1.0]);
        let p = TreeParams::new(1e-16, 16, Mode::Theory);
        assert!(matches!(build_tree(&sp, &p), Err(Error::SplitRequired { .. })));
    }

    #[test]
    fn unit_bound_required() {
        let sp = SimilaritySpace::uniform(vec![vec![2.0, 0.0], vec![0.0, 2.0]], 2.0).unwrap();
        assert!(matches!(build_tree(&sp, &params()), Err(Error::NotUnitBound(_))));
    }
}
