use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Parts with at most this many points are tested exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Regular {
        exhaustive: bool,
        /// Subset pairs examined that met the mass thresholds.
        checked: u64,
        max_deviation: f64,
    },
    Irregular {
        a: Vec<usize>,
        b: Vec<usize>,
        deviation: f64,
    },
    /// No admissible subset pair was examined.
    Inconclusive,
}

impl Verdict {
    pub fn is_regular(&self) -> bool {
        matches!(self, Verdict::Regular { .. })
    }
}

/// Mass-weighted ε-regularity test of the pair `(u, v)`.
///
/// With both sides of at most [`EXHAUSTIVE_LIMIT`] points every admissible
/// subset pair is enumerated and the witness of largest deviation is
/// returned. Otherwise `trials` random subset pairs are drawn from a stream
/// derived from `(seed, stream)`.
pub fn regularity_test(
    graph: &WeightedGraph,
    u: &[usize],
    v: &[usize],
    epsilon: f64,
    trials: u64,
    seed: u64,
    stream: u64,
) -> Result<Verdict> {
    let mu = graph.mass(u.iter().copied());
    let mv = graph.mass(v.iter().copied());
    if u.is_empty() || v.is_empty() || mu <= 0.0 || mv <= 0.0 {
        return Err(Error::EmptyPart);
    }
    if u.iter().any(|x| v.contains(x)) {
        return Err(Error::InvalidParameter("regularity test parts overlap".into()));
    }
    let d_uv = graph.edge_mass(u, v) / (mu * mv);
    if u.len() <= EXHAUSTIVE_LIMIT && v.len() <= EXHAUSTIVE_LIMIT {
        Ok(exhaustive(graph, u, v, epsilon, mu, mv, d_uv))
    } else {
        Ok(sampled(graph, u, v, epsilon, trials, seed, stream, mu, mv, d_uv))
    }
}

fn subset_masses(graph: &WeightedGraph, set: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << set.len()];
    for mask in 1..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] + graph.measure()[set[low]];
    }
    out
}

fn members(set: &[usize], mask: usize) -> Vec<usize> {
    (0..set.len()).filter(|i| mask >> i & 1 == 1).map(|i| set[i]).collect()
}

fn exhaustive(graph: &WeightedGraph, u: &[usize], v: &[usize], epsilon: f64, mu: f64, mv: f64, d_uv: f64) -> Verdict {
    let mass_u = subset_masses(graph, u);
    let mass_v = subset_masses(graph, v);
    let meas = graph.measure();
    let mut best: Option<(usize, usize, f64)> = None;
    let mut worst = 0.0f64;
    let mut checked = 0u64;
    let mut e = vec![0.0; 1 << v.len()];
    for a in 1..mass_u.len() {
        if mass_u[a] < epsilon * mu || mass_u[a] <= 0.0 {
            continue;
        }
        // w[b]: mass of A adjacent to b
        let w: Vec<f64> = v
            .iter()
            .map(|&b| {
                (0..u.len())
                    .filter(|i| a >> i & 1 == 1 && graph.has_edge(u[*i], b))
                    .map(|i| meas[u[i]])
                    .sum()
            })
            .collect();
        for b in 1..e.len() {
            let low = b.trailing_zeros() as usize;
            e[b] = e[b & (b - 1)] + meas[v[low]] * w[low];
            if mass_v[b] < epsilon * mv || mass_v[b] <= 0.0 {
                continue;
            }
            checked += 1;
            let dev = (e[b] / (mass_u[a] * mass_v[b]) - d_uv).abs();
            if dev > worst {
                worst = dev;
                best = Some((a, b, dev));
            }
        }
    }
    match best {
        Some((a, b, dev)) if dev > epsilon => Verdict::Irregular {
            a: members(u, a),
            b: members(v, b),
            deviation: dev,
        },
        _ if checked == 0 => Verdict::Inconclusive,
        _ => Verdict::Regular {
            exhaustive: true,
            checked,
            max_deviation: worst,
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn sampled(
    graph: &WeightedGraph,
    u: &[usize],
    v: &[usize],
    epsilon: f64,
    trials: u64,
    seed: u64,
    stream: u64,
    mu: f64,
    mv: f64,
    d_uv: f64,
) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut worst = 0.0f64;
    let mut checked = 0u64;
    let draw = |rng: &mut ChaCha8Rng, set: &[usize]| -> Vec<usize> {
        let keep: f64 = rng.random_range(epsilon.max(0.05)..=1.0);
        set.iter().copied().filter(|_| rng.random::<f64>() < keep).collect()
    };
    for _ in 0..trials {
        let a = draw(&mut rng, u);
        let b = draw(&mut rng, v);
        let ma = graph.mass(a.iter().copied());
        let mb = graph.mass(b.iter().copied());
        if ma < epsilon * mu || mb < epsilon * mv || ma <= 0.0 || mb <= 0.0 {
            continue;
        }
        checked += 1;
        let dev = (graph.edge_mass(&a, &b) / (ma * mb) - d_uv).abs();
        if dev > epsilon {
            return Verdict::Irregular { a, b, deviation: dev };
        }
        worst = worst.max(dev);
    }
    if checked == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::Regular {
            exhaustive: false,
            checked,
            max_deviation: worst,
        }
    }
}
