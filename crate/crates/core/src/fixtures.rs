//! Seeded synthetic similarity spaces.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SimilaritySpace;
use crate::tree::{CompatibleTree, TreeBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// Values increasing in the common prefix length of base-`b` addresses.
    Ultrametric,
    /// `s = α (x, y)_r` on a random compatible tree.
    TreeScaled,
    /// A tree-scaled space plus uniform noise in `[-η, η]`, clipped to `[0, 1]`.
    NoisyTree,
    /// Independent uniform entries.
    Random,
    /// High similarity inside blocks and low across, with noise.
    PlantedBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureParams {
    /// Address length for ultrametric spaces and maximal depth of random trees.
    pub levels: usize,
    /// Noise amplitude `η`.
    pub noise: f64,
    pub blocks: usize,
    /// Draw random weights instead of uniform ones.
    pub random_weights: bool,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            levels: 3,
            noise: 0.05,
            blocks: 3,
            random_weights: false,
        }
    }
}

/// A generated space, with the tree it was built from where there is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub seed: u64,
    pub space: SimilaritySpace,
    pub tree: Option<CompatibleTree>,
    /// Scale with `s = α (x, y)_r` before noise.
    pub alpha: Option<f64>,
}

pub fn generate_fixture(kind: FixtureKind, size: usize, params: &FixtureParams, seed: u64) -> Result<Fixture> {
    if size < 2 {
        return Err(Error::SizeTooSmall(size));
    }
    if params.levels == 0 {
        return Err(Error::InvalidParameter("levels must be positive".into()));
    }
    if !(0.0..=1.0).contains(&params.noise) {
        return Err(Error::InvalidParameter(format!(
            "noise must lie in [0, 1], got {}",
            params.noise
        )));
    }
    if kind == FixtureKind::PlantedBlocks && !(1..=size).contains(&params.blocks) {
        return Err(Error::InvalidParameter(format!(
            "blocks must lie in 1..={size}, got {}",
            params.blocks
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<String> = (0..size).map(|i| format!("p{i}")).collect();
    let mut tree = None;
    let mut alpha = None;
    let sim = match kind {
        FixtureKind::Ultrametric => ultrametric(size, params.levels, &mut rng),
        FixtureKind::TreeScaled | FixtureKind::NoisyTree => {
            let paths = random_paths(size, params.levels, &mut rng);
            let depth = paths.iter().map(Vec::len).max().unwrap_or(1);
            let a = 1.0 / depth as f64;
            let mut sim = vec![vec![0.0; size]; size];
            for x in 0..size {
                for y in 0..size {
                    sim[x][y] = a * common_prefix(&paths[x], &paths[y]) as f64;
                }
            }
            if kind == FixtureKind::NoisyTree {
                add_noise(&mut sim, params.noise, &mut rng);
            }
            tree = Some(tree_from_paths(&paths, &points)?);
            alpha = Some(a);
            sim
        }
        FixtureKind::Random => {
            let mut sim = vec![vec![0.0; size]; size];
            for x in 0..size {
                for y in x..size {
                    let v = rng.random::<f64>();
                    sim[x][y] = v;
                    sim[y][x] = v;
                }
            }
            sim
        }
        FixtureKind::PlantedBlocks => {
            let mut labels: Vec<usize> = (0..size).map(|i| i % params.blocks).collect();
            labels.shuffle(&mut rng);
            let mut sim = vec![vec![0.0; size]; size];
            for x in 0..size {
                for y in 0..size {
                    sim[x][y] = if x == y {
                        1.0
                    } else if labels[x] == labels[y] {
                        0.8
                    } else {
                        0.2
                    };
                }
            }
            add_noise(&mut sim, params.noise, &mut rng);
            sim
        }
    };
    let weights = if params.random_weights {
        let raw: Vec<f64> = (0..size).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / size as f64; size]
    };
    Ok(Fixture {
        kind,
        seed,
        space: SimilaritySpace::new(points, weights, sim, 1.0)?,
        tree,
        alpha,
    })
}

fn common_prefix(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Symmetric noise in `[-η, η]` off the diagonal, clipped to `[0, 1]`.
fn add_noise(sim: &mut [Vec<f64>], eta: f64, rng: &mut ChaCha8Rng) {
    let n = sim.len();
    for x in 0..n {
        for y in x + 1..n {
            let v = (sim[x][y] + rng.random_range(-1.0..=1.0) * eta).clamp(0.0, 1.0);
            sim[x][y] = v;
            sim[y][x] = v;
        }
    }
}

/// Distinct base-`b` addresses of length `levels`, with `b` the smallest
/// base giving enough of them, and random increasing values per prefix
/// length.
fn ultrametric(size: usize, levels: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut base: usize = 2;
    while base.checked_pow(levels as u32).is_some_and(|c| c < size) {
        base += 1;
    }
    let codes = rand::seq::index::sample(rng, base.pow(levels as u32), size);
    let addr: Vec<Vec<usize>> = codes
        .iter()
        .map(|c| (0..levels).rev().map(|k| c / base.pow(k as u32) % base).collect())
        .collect();
    let mut values: Vec<f64> = (0..levels).map(|_| rng.random::<f64>()).collect();
    values.sort_by(f64::total_cmp);
    let mut sim = vec![vec![1.0; size]; size];
    for x in 0..size {
        for y in 0..size {
            if x != y {
                sim[x][y] = values[common_prefix(&addr[x], &addr[y])];
            }
        }
    }
    sim
}

/// Root-to-leaf paths of a random tree: sets are split into 2 to 4 random
/// groups until they are single points or reach depth `max_depth`, where
/// the remaining points hang directly below.
fn random_paths(size: usize, max_depth: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut paths = vec![Vec::new(); size];
    let mut stack = vec![((0..size).collect::<Vec<_>>(), 0)];
    while let Some((set, depth)) = stack.pop() {
        if set.len() == 1 {
            continue;
        }
        if depth + 1 == max_depth {
            for (k, &x) in set.iter().enumerate() {
                paths[x].push(k);
            }
            continue;
        }
        let groups = rng.random_range(2..=4).min(set.len());
        let mut set = set;
        set.shuffle(rng);
        let mut split = vec![Vec::new(); groups];
        for (k, &x) in set.iter().enumerate() {
            // the first `groups` points seed distinct groups
            let g = if k < groups { k } else { rng.random_range(0..groups) };
            split[g].push(x);
            paths[x].push(g);
        }
        for g in split {
            stack.push((g, depth + 1));
        }
    }
    paths
}

fn tree_from_paths(paths: &[Vec<usize>], points: &[String]) -> Result<CompatibleTree> {
    use std::collections::HashMap;
    let mut b = TreeBuilder::new("r");
    let mut nodes: HashMap<Vec<usize>, usize> = HashMap::new();
    nodes.insert(Vec::new(), b.root());
    for (x, path) in paths.iter().enumerate() {
        for d in 1..path.len() {
            let prefix = path[..d].to_vec();
            if !nodes.contains_key(&prefix) {
                let parent = nodes[&path[..d - 1]];
                let name = prefix.iter().map(usize::to_string).collect::<Vec<_>>().join(".");
                let id = b.add_child(parent, format!("n{name}"));
                nodes.insert(prefix, id);
            }
        }
        let parent = nodes[&path[..path.len() - 1]];
        b.add_leaf(parent, format!("l{}", points[x]), points[x].clone());
    }
    b.finish()
}
