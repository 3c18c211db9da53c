//! Sherrington–Kirkpatrick type models on the hypercube, their Gibbs
//! measures, overlap similarity spaces and hierarchical pure states.

mod pure;

pub use pure::{planted_clusters, pure_state_tree, PureStateReport};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SimilaritySpace;

/// Largest system size for exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 20;

/// A spin configuration in `{-1, 1}^n`.
pub type Config = Vec<i8>;

/// `n(n-1)/2` i.i.d. standard normal couplings `g_ij`, `i < j`, in row-major
/// order.
pub fn sk_couplings(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::SizeTooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n * (n - 1) / 2).map(|_| rng.sample(StandardNormal)).collect())
}

/// `H(σ) = n^{-1/2} Σ_{i<j} g_ij σ_i σ_j` with Gibbs weight `exp(β H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinGlassModel {
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub couplings: Vec<f64>,
}

impl SpinGlassModel {
    pub fn sk(n: usize, beta: f64, seed: u64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        Ok(Self {
            n,
            beta,
            seed,
            couplings: sk_couplings(n, seed)?,
        })
    }

    /// Symmetric coupling matrix with zero diagonal.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut g = vec![vec![0.0; n]; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                g[i][j] = self.couplings[k];
                g[j][i] = self.couplings[k];
                k += 1;
            }
        }
        g
    }

    pub fn hamiltonian(&self, sigma: &[i8]) -> f64 {
        let mut k = 0;
        let mut h = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                h += self.couplings[k] * (sigma[i] * sigma[j]) as f64;
                k += 1;
            }
        }
        h / (self.n as f64).sqrt()
    }
}

/// Configuration encoded by the bits of `index`: bit `i` set means `σ_i = 1`.
pub fn config_of(index: usize, n: usize) -> Config {
    (0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect()
}

pub fn index_of(sigma: &[i8]) -> usize {
    sigma
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// Gibbs probabilities of all `2^n` configurations, indexed as in
/// [`config_of`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsExact {
    pub n: usize,
    pub probs: Vec<f64>,
    pub log_partition: f64,
}

pub fn gibbs_exact(model: &SpinGlassModel) -> Result<GibbsExact> {
    let n = model.n;
    if n > ENUMERATION_CAP {
        return Err(Error::TooLargeForEnumeration {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let logw: Vec<f64> = (0..1usize << n)
        .map(|idx| model.beta * model.hamiltonian(&config_of(idx, n)))
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    Ok(GibbsExact {
        n,
        probs: unnorm.iter().map(|u| u / z).collect(),
        log_partition: max + z.ln(),
    })
}

/// Single-site Metropolis chain from a uniform random start. After
/// `burn_in` steps every `thin`-th state is kept.
pub fn gibbs_mcmc(model: &SpinGlassModel, steps: u64, burn_in: u64, thin: u64, seed: u64) -> Result<Vec<Config>> {
    if steps <= burn_in {
        return Err(Error::BadSchedule(format!(
            "steps {steps} must exceed burn-in {burn_in}"
        )));
    }
    if thin == 0 {
        return Err(Error::BadSchedule("thinning interval must be positive".into()));
    }
    let n = model.n;
    let g = model.matrix();
    let scale = model.beta / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma: Config = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    // local fields h_i = Σ_j g_ij σ_j
    let mut field: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| g[i][j] * sigma[j] as f64).sum())
        .collect();
    let mut out = Vec::with_capacity(((steps - burn_in) / thin) as usize);
    for step in 1..=steps {
        let i = rng.random_range(0..n);
        // change of β H when σ_i flips
        let delta = -2.0 * scale * sigma[i] as f64 * field[i];
        if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
            let old = sigma[i] as f64;
            sigma[i] = -sigma[i];
            for (j, f) in field.iter_mut().enumerate() {
                *f -= 2.0 * g[j][i] * old;
            }
        }
        if step > burn_in && (step - burn_in).is_multiple_of(thin) {
            out.push(sigma.clone());
        }
    }
    Ok(out)
}

/// Empirical distribution of samples over the `2^n` configurations.
pub fn sample_distribution(samples: &[Config], n: usize) -> Result<Vec<f64>> {
    if n > ENUMERATION_CAP {
        return Err(Error::TooLargeForEnumeration {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let mut counts = vec![0u64; 1 << n];
    for s in samples {
        if s.len() != n {
            return Err(Error::LengthMismatch(s.len(), n));
        }
        counts[index_of(s)] += 1;
    }
    let total = samples.len() as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `R_{1,2} = n^{-1} Σ σ¹_i σ²_i`.
pub fn overlap(a: &[i8], b: &[i8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::SizeTooSmall(0));
    }
    let dot: i64 = a.iter().zip(b).map(|(&x, &y)| (x * y) as i64).sum();
    Ok(dot as f64 / a.len() as f64)
}

/// Bounded map applied to the overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMap {
    Identity,
    Abs,
}

impl OverlapMap {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            OverlapMap::Identity => r,
            OverlapMap::Abs => r.abs(),
        }
    }

    /// The map into `[0, 1]` paired with this one by default.
    pub fn default_rho(self) -> Rho {
        match self {
            OverlapMap::Identity => Rho::Shifted,
            OverlapMap::Abs => Rho::Identity,
        }
    }
}

/// Strictly increasing map onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rho {
    /// `u ↦ (u + 1) / 2` on `[-1, 1]`.
    Shifted,
    /// `u ↦ u` on `[0, 1]`.
    Identity,
}

impl Rho {
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Rho::Shifted => (u + 1.0) / 2.0,
            Rho::Identity => u,
        }
    }

    pub fn inverse(self, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::RhoNotInvertibleAtValue(v));
        }
        Ok(match self {
            Rho::Shifted => 2.0 * v - 1.0,
            Rho::Identity => v,
        })
    }

    fn domain_contains(self, u: f64) -> bool {
        match self {
            Rho::Shifted => (-1.0..=1.0).contains(&u),
            Rho::Identity => (0.0..=1.0).contains(&u),
        }
    }
}

/// Identifier of a configuration: one `+` or `-` per spin.
pub fn config_id(sigma: &[i8]) -> String {
    sigma.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

/// Similarity space on the distinct configurations with
/// `s(σ¹, σ²) = ρ(f(R_{1,2}))` and bound 1. Repeated configurations are
/// merged and their weights summed.
pub fn overlap_space(configs: &[Config], weights: &[f64], f: OverlapMap, rho: Rho) -> Result<SimilaritySpace> {
    if configs.len() != weights.len() {
        return Err(Error::LengthMismatch(configs.len(), weights.len()));
    }
    if !rho.domain_contains(f.apply(-1.0)) {
        return Err(Error::InvalidParameter(format!(
            "{rho:?} is not defined on the range of {f:?}"
        )));
    }
    let mut merged: BTreeMap<&[i8], f64> = BTreeMap::new();
    let mut order: Vec<&[i8]> = Vec::new();
    for (c, &w) in configs.iter().zip(weights) {
        if let Some(n) = configs.first().map(Vec::len) {
            if c.len() != n {
                return Err(Error::LengthMismatch(c.len(), n));
            }
        }
        match merged.get_mut(c.as_slice()) {
            Some(acc) => *acc += w,
            None => {
                merged.insert(c, w);
                order.push(c);
            }
        }
    }
    let order: Vec<&[i8]> = order.into_iter().filter(|c| merged[c] > 0.0).collect();
    if order.len() < 2 {
        return Err(Error::DegenerateSample(order.len()));
    }
    let total: f64 = order.iter().map(|c| merged[c]).sum();
    let weights: Vec<f64> = order.iter().map(|c| merged[c] / total).collect();
    let mut sim = vec![vec![0.0; order.len()]; order.len()];
    for i in 0..order.len() {
        for j in i..order.len() {
            let s = rho.apply(f.apply(overlap(order[i], order[j])?));
            sim[i][j] = s;
            sim[j][i] = s;
        }
    }
    SimilaritySpace::new(order.iter().map(|c| config_id(c)).collect(), weights, sim, 1.0)
}

/// Overlap space of an exactly enumerated Gibbs measure; configurations of
/// zero probability are dropped.
pub fn exact_overlap_space(gibbs: &GibbsExact, f: OverlapMap, rho: Rho) -> Result<SimilaritySpace> {
    let configs: Vec<Config> = (0..gibbs.probs.len()).map(|i| config_of(i, gibbs.n)).collect();
    overlap_space(&configs, &gibbs.probs, f, rho)
}

/// Overlap space of a sample list with empirical weights.
pub fn sample_overlap_space(samples: &[Config], f: OverlapMap, rho: Rho) -> Result<SimilaritySpace> {
    overlap_space(samples, &vec![1.0; samples.len()], f, rho)
}
