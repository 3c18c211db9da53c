use serde::{Deserialize, Serialize};

use super::Buckets;
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    /// `V_0, V_1, ..., V_q`; each part lists vertex indices in ascending order.
    pub parts: Vec<Vec<usize>>,
    /// Chunk mass target `ε μ(S) / (2 (r + m*))`.
    pub target: f64,
}

fn signed_mass(graph: &WeightedGraph, plus: &[usize], minus: &[usize]) -> ExactSum {
    let mut acc = ExactSum::new();
    for &x in plus {
        acc.add(graph.measure()[x]);
    }
    for &x in minus {
        acc.add(-graph.measure()[x]);
    }
    acc
}

/// Cuts every bucket greedily, in vertex order, into chunks whose mass first
/// reaches the target; the short tail of each bucket joins `V_0` together
/// with the spectral exceptional set and every vertex without copies.
///
/// Chunk masses lie in `[T, T + μ*)`, so all parts have positive mass and
/// differ by less than `μ*`. Both properties and `μ(V_0) <= ε μ(S)` are then
/// verified with exact arithmetic.
pub fn equitable_refine(
    graph: &WeightedGraph,
    buckets: &Buckets,
    k: &[u64],
    epsilon: f64,
    m_star: f64,
) -> Result<RefineOutcome> {
    let total = graph.total_mass();
    let r = buckets.groups.len();
    let target = epsilon * total / (2.0 * (r as f64 + m_star));
    let meas = graph.measure();

    let mut v0: Vec<usize> = buckets.w0.clone();
    v0.extend((0..graph.len()).filter(|&x| k[x] == 0));
    let mut parts: Vec<Vec<usize>> = Vec::new();
    for group in &buckets.groups {
        let mut chunk = Vec::new();
        let mut acc = ExactSum::new();
        acc.add(-target);
        for &x in group {
            chunk.push(x);
            acc.add(meas[x]);
            if acc.value() >= 0.0 {
                parts.push(std::mem::take(&mut chunk));
                acc = ExactSum::new();
                acc.add(-target);
            }
        }
        v0.extend(chunk);
    }
    v0.sort_unstable();
    for p in parts.iter_mut() {
        p.sort_unstable();
    }

    // μ(V_0) <= ε μ(S)
    let mut check = signed_mass(graph, &v0, &[]);
    for &w in meas {
        check.add_product(&[-epsilon, w]);
    }
    if check.value() > 0.0 {
        return Err(Error::PostconditionViolated(format!(
            "exceptional part mass {} exceeds epsilon times the total",
            graph.mass(v0.iter().copied())
        )));
    }

    let masses: Vec<f64> = parts.iter().map(|p| graph.mass(p.iter().copied())).collect();
    if let Some(i) = masses.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::PostconditionViolated(format!("part {} has zero mass", i + 1)));
    }
    if !parts.is_empty() {
        let hi = (0..parts.len())
            .max_by(|&a, &b| masses[a].total_cmp(&masses[b]))
            .unwrap();
        let lo = (0..parts.len())
            .min_by(|&a, &b| masses[a].total_cmp(&masses[b]))
            .unwrap();
        let mut spread = signed_mass(graph, &parts[hi], &parts[lo]);
        spread.add(-graph.max_mass());
        if spread.value() > 0.0 {
            return Err(Error::PostconditionViolated(format!(
                "part masses {} and {} differ by more than the largest atom",
                masses[hi], masses[lo]
            )));
        }
    }

    let mut all = vec![v0];
    all.extend(parts);
    Ok(RefineOutcome { parts: all, target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_division_of_one_bucket() {
        let n = 12;
        let g = WeightedGraph::new((0..n).map(|i| i.to_string()).collect(), vec![1.0; n]).unwrap();
        let buckets = Buckets {
            w0: vec![],
            groups: vec![(0..n).collect()],
            j: 1,
            cutoff: 1.0,
            width: 1.0,
            r_bound: 4.0,
        };
        // target ε μ(S) / (2 (r + m*)) = 12 / 4 = 3 unit masses
        let out = equitable_refine(&g, &buckets, &[1; 12], 1.0, 1.0).unwrap();
        assert_eq!(out.parts[0], Vec::<usize>::new());
        assert_eq!(out.parts.len(), 5);
        for (i, p) in out.parts[1..].iter().enumerate() {
            assert_eq!(p, &vec![3 * i, 3 * i + 1, 3 * i + 2]);
        }
    }
}
