//! Vertex-weighted regularity partitions through the spectrum of the
//! blow-up graph.

mod rational;
mod refine;
mod spectral;
mod tester;

pub use rational::{rationalize_weights, Rationalized};
pub use refine::{equitable_refine, RefineOutcome};
pub use spectral::{
    choose_spectral_cut, spectral_bucket_partition, weighted_adjacency_spectrum, Buckets, SpectralCut, SpectralData,
};
pub use tester::{regularity_test, Verdict, EXHAUSTIVE_LIMIT};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Enforces the atom bound needed by the regularity guarantee and uses
    /// the closed-form growth function.
    Theory,
    /// Keeps the construction but relaxes the part-count requirement to
    /// what the largest atom allows.
    Practical,
}

/// The growth function `F` of the spectral ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// `F(j) = factor · j`, `factor > 1`.
    Linear { factor: f64 },
    /// `F(J) = (8 (64 J²/ε² + 3)^J + 8 m*)² / ε⁶`.
    Theory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub epsilon: f64,
    pub m: usize,
    pub mode: Mode,
    pub growth: Growth,
    /// Cap on the common denominator `N` of the rationalized weights.
    pub max_blowup: u64,
    /// Rationalization tolerance `ν`.
    pub nu: f64,
    /// Random subset pairs per part pair when a part is too large for
    /// exhaustive testing.
    pub trials: u64,
    pub seed: u64,
}

impl Default for RegularityParams {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            m: 2,
            mode: Mode::Practical,
            growth: Growth::Linear { factor: 4.0 },
            max_blowup: 1 << 40,
            nu: 1e-9,
            trials: 200,
            seed: 0,
        }
    }
}

impl RegularityParams {
    pub fn theory(epsilon: f64, m: usize) -> Self {
        Self {
            epsilon,
            m,
            mode: Mode::Theory,
            growth: Growth::Theory,
            ..Self::default()
        }
    }

    pub fn practical(epsilon: f64, m: usize) -> Self {
        Self {
            epsilon,
            m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.25) {
            return Err(Error::InvalidParameter(format!(
                "regularity epsilon must lie in (0, 1/4), got {}",
                self.epsilon
            )));
        }
        if self.m < 2 {
            return Err(Error::InvalidParameter(format!("m must be at least 2, got {}", self.m)));
        }
        if let Growth::Linear { factor } = self.growth {
            if !(factor > 1.0 && factor.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "growth factor must exceed 1, got {factor}"
                )));
            }
        }
        Ok(())
    }
}

/// Largest `q` with `p_star · q < 1`.
pub fn atom_part_cap(p_star: f64) -> usize {
    if p_star <= 0.0 {
        return usize::MAX;
    }
    let mut q = (1.0 / p_star).ceil() as usize;
    while q > 0 && p_star * q as f64 >= 1.0 {
        q -= 1;
    }
    q
}

/// `m* = m / (1 - P* m)`.
pub fn m_star(m: usize, p_star: f64) -> f64 {
    m as f64 / (1.0 - p_star * m as f64)
}

/// `M(ε, m) = ceil(2 (r + m*) / ε)`.
pub fn part_count_bound(epsilon: f64, r: usize, m_star: f64) -> usize {
    (2.0 * (r as f64 + m_star) / epsilon).ceil() as usize
}

/// Largest atom admitted in theory mode: the conjunction of `P* <= 1/(2m)`,
/// the requirement that forces `q >= m`, and the one that bounds the number
/// of irregular pairs by `ε q²`.
pub fn atom_limit(epsilon: f64, m: usize, r: usize, m_star: f64) -> f64 {
    let mf = m as f64;
    let a = 1.0 / (2.0 * mf);
    let b = (2.0 - 3.0 * epsilon) / ((2.0 - epsilon) * mf);
    let c = (std::f64::consts::SQRT_2 * epsilon * (1.0 - epsilon) - epsilon) / (2.0 * (r as f64 + m_star));
    a.min(b).min(c)
}

/// Partition `V_0, V_1, ..., V_q` of the vertices of a weighted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub vertices: Vec<String>,
    /// `parts[0]` is the exceptional part `V_0`.
    pub parts: Vec<Vec<usize>>,
    pub masses: Vec<f64>,
    /// `densities[i][j] = d(V_{i+1}, V_{j+1})`; `None` on the diagonal.
    pub densities: Vec<Vec<Option<f64>>>,
    /// Regularity verdict per pair `i < j` of non-exceptional parts, in
    /// row-major order.
    pub verdicts: Vec<PairVerdict>,
    pub params: RegularityParams,
    pub diagnostics: PartitionDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDiagnostics {
    pub blowup_size: u64,
    pub rational_exact: bool,
    pub j: usize,
    pub cut: Option<SpectralCut>,
    pub r: usize,
    pub r_bound: f64,
    pub p_star: f64,
    /// Part-count requirement in force (`m` in theory mode).
    pub m_effective: usize,
    pub m_star: f64,
    pub part_bound: usize,
    pub chunk_target: f64,
    pub atom_limit: Option<f64>,
    pub w0_size: usize,
}

impl PartitionResult {
    /// Number of non-exceptional parts.
    pub fn q(&self) -> usize {
        self.parts.len() - 1
    }

    /// Whether the pair of non-exceptional parts `(i, j)` (1-based) passed.
    pub fn is_regular(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.verdicts
            .iter()
            .find(|v| v.i == a && v.j == b)
            .is_some_and(|v| v.verdict.is_regular())
    }

    pub fn density(&self, i: usize, j: usize) -> Option<f64> {
        self.densities[i - 1][j - 1]
    }

    /// Part label per vertex (0 for `V_0`).
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.vertices.len()];
        for (k, part) in self.parts.iter().enumerate() {
            for &x in part {
                out[x] = k;
            }
        }
        out
    }

    pub fn to_file(&self) -> PartitionFile {
        let q = self.q();
        PartitionFile {
            parts: self
                .parts
                .iter()
                .map(|p| p.iter().map(|&x| self.vertices[x].clone()).collect())
                .collect(),
            densities: self.densities.clone(),
            flags: (1..=q)
                .map(|i| {
                    (1..=q)
                        .map(|j| if i == j { None } else { Some(self.is_regular(i, j)) })
                        .collect()
                })
                .collect(),
        }
    }
}

/// On-disk partition: parts by identifier (`V_0` first), densities and
/// regularity flags between non-exceptional parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub parts: Vec<Vec<String>>,
    pub densities: Vec<Vec<Option<f64>>>,
    pub flags: Vec<Vec<Option<bool>>>,
}

/// Full construction: rationalize, eigensolve the reduced blow-up, cut,
/// bucket, refine, then measure densities and test every pair.
pub fn regularity_pipeline(graph: &WeightedGraph, params: &RegularityParams) -> Result<PartitionResult> {
    params.validate()?;
    let total = graph.total_mass();
    if !(total > 0.0) {
        return Err(Error::ZeroMassGraph);
    }
    let weights: Vec<f64> = graph.measure().iter().map(|w| w / total).collect();
    let p_star = weights.iter().copied().fold(0.0, f64::max);
    let m_effective = match params.mode {
        Mode::Theory => {
            let limit = 1.0 / (2.0 * params.m as f64);
            if p_star > limit {
                return Err(Error::HeavyAtom { p_star, limit });
            }
            params.m
        }
        Mode::Practical => params.m.min(atom_part_cap(p_star)),
    };
    let ms = m_star(m_effective, p_star);

    let rational = rationalize_weights(&weights, params.nu, params.max_blowup)?;
    let spectrum = weighted_adjacency_spectrum(graph, &rational.k)?;
    let cut = choose_spectral_cut(&spectrum, params, ms)?;
    let buckets = spectral_bucket_partition(&spectrum, cut.j, params.epsilon)?;
    let r = buckets.groups.len();
    let limit = atom_limit(params.epsilon, params.m, r, ms);
    if params.mode == Mode::Theory && p_star > limit {
        return Err(Error::HeavyAtom { p_star, limit });
    }
    let refined = equitable_refine(graph, &buckets, &rational.k, params.epsilon, ms)?;
    let q = refined.parts.len() - 1;
    let part_bound = part_count_bound(params.epsilon, r, ms);
    if q < m_effective {
        return Err(Error::InsufficientParts { q, m: m_effective });
    }
    if q > part_bound {
        return Err(Error::PostconditionViolated(format!(
            "{q} parts exceed the bound {part_bound}"
        )));
    }

    let parts = refined.parts;
    let masses: Vec<f64> = parts.iter().map(|p| graph.mass(p.iter().copied())).collect();
    let mut densities = vec![vec![None; q]; q];
    let mut verdicts = Vec::new();
    let mut stream = 0u64;
    for i in 1..=q {
        for j in i + 1..=q {
            let d = graph.density(&parts[i], &parts[j]);
            densities[i - 1][j - 1] = d;
            densities[j - 1][i - 1] = d;
            let verdict = regularity_test(
                graph,
                &parts[i],
                &parts[j],
                params.epsilon,
                params.trials,
                params.seed,
                stream,
            )?;
            stream += 1;
            verdicts.push(PairVerdict { i, j, verdict });
        }
    }

    Ok(PartitionResult {
        vertices: graph.vertices().to_vec(),
        parts,
        masses,
        densities,
        verdicts,
        params: params.clone(),
        diagnostics: PartitionDiagnostics {
            blowup_size: rational.n,
            rational_exact: rational.exact,
            j: cut.j,
            cut: Some(cut),
            r,
            r_bound: buckets.r_bound,
            p_star,
            m_effective,
            m_star: ms,
            part_bound,
            chunk_target: refined.target,
            atom_limit: Some(limit),
            w0_size: buckets.w0.len(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> WeightedGraph {
        WeightedGraph::new((0..n).map(|i| i.to_string()).collect(), vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn complete_graph_has_unit_densities() {
        let mut g = uniform(10);
        for a in 0..10 {
            for b in a + 1..10 {
                g.add_edge(a, b);
            }
        }
        let p = regularity_pipeline(&g, &RegularityParams::practical(0.1, 2)).unwrap();
        assert!(p.q() >= 2);
        for row in &p.densities {
            for d in row.iter().flatten() {
                assert_eq!(*d, 1.0);
            }
        }
    }

    #[test]
    fn empty_graph_all_regular_zero() {
        let g = uniform(12);
        let p = regularity_pipeline(&g, &RegularityParams::practical(0.1, 2)).unwrap();
        assert!(p.verdicts.iter().all(|v| v.verdict.is_regular()));
        assert!(p.densities.iter().flatten().flatten().all(|&d| d == 0.0));
    }

    #[test]
    fn zero_mass_rejected() {
        let g = WeightedGraph::new(vec!["a".into()], vec![0.0]).unwrap();
        assert!(matches!(
            regularity_pipeline(&g, &RegularityParams::default()),
            Err(Error::ZeroMassGraph)
        ));
    }

    #[test]
    fn theory_mode_rejects_heavy_atom() {
        let g = uniform(4);
        assert!(matches!(
            regularity_pipeline(&g, &RegularityParams::theory(0.1, 4)),
            Err(Error::HeavyAtom { .. })
        ));
    }

    #[test]
    fn atom_cap_examples() {
        assert_eq!(atom_part_cap(0.25), 3);
        assert_eq!(atom_part_cap(0.3), 3);
        assert_eq!(atom_part_cap(1.0), 0);
    }
}
