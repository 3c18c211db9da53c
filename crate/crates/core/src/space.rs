//! Finite weighted similarity spaces and metric conversions.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total weight of a probability vector.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A finite point set with probability weights and a bounded symmetric
/// similarity matrix, diagonal included.
///
/// Matrices are indexed by position; `points` carries the opaque identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySpace {
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(rename = "b")]
    pub bound: f64,
    pub sim: Vec<Vec<f64>>,
}

impl SimilaritySpace {
    /// Builds and validates a space.
    pub fn new(points: Vec<String>, weights: Vec<f64>, sim: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let space = Self {
            points,
            weights,
            bound,
            sim,
        };
        space.validate()?;
        Ok(space)
    }

    /// Space with points named `"0"`, `"1"`, ...
    pub fn from_matrix(weights: Vec<f64>, sim: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let points = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::new(points, weights, sim, bound)
    }

    /// Uniform weights over `sim.len()` anonymous points.
    pub fn uniform(sim: Vec<Vec<f64>>, bound: f64) -> Result<Self> {
        let n = sim.len();
        Self::from_matrix(vec![1.0 / n as f64; n], sim, bound)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn s(&self, i: usize, j: usize) -> f64 {
        self.sim[i][j]
    }

    /// Largest single-point weight.
    pub fn max_atom(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p == id)
    }

    /// Checks every structural invariant; the error names the first offender.
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.weights.len() != n || self.sim.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} points, {} weights, {} sim rows",
                n,
                self.weights.len(),
                self.sim.len()
            )));
        }
        if let Some(i) = self.sim.iter().position(|row| row.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "sim row {i} has {} entries",
                self.sim[i].len()
            )));
        }
        if !(self.bound > 0.0 && self.bound.is_finite()) {
            return Err(Error::InvalidBound(self.bound));
        }
        let mut seen = HashSet::with_capacity(n);
        for (index, id) in self.points.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicatePoint { index, id: id.clone() });
            }
        }
        if let Some(index) = self.weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NegativeWeight { index });
        }
        let sum = crate::exact::exact_sum(self.weights.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSumMismatch { sum });
        }
        for i in 0..n {
            for j in 0..n {
                let v = self.sim[i][j];
                if !(v.is_finite() && (0.0..=self.bound).contains(&v)) {
                    return Err(Error::OutOfRangeEntry {
                        i,
                        j,
                        value: v,
                        bound: self.bound,
                    });
                }
                if j > i && self.sim[j][i] != v {
                    return Err(Error::AsymmetricSimilarity { i, j });
                }
            }
        }
        Ok(())
    }

    /// Divides the similarity by its bound, giving a space with `b = 1`.
    pub fn rescale_to_unit(&self) -> SimilaritySpace {
        if self.bound == 1.0 {
            return self.clone();
        }
        let b = self.bound;
        SimilaritySpace {
            points: self.points.clone(),
            weights: self.weights.clone(),
            bound: 1.0,
            sim: self
                .sim
                .iter()
                .map(|row| row.iter().map(|v| (v / b).min(1.0)).collect())
                .collect(),
        }
    }

    /// Restriction to the given indices with renormalized weights. Returns
    /// `None` when the selection has zero mass.
    pub fn subspace(&self, indices: &[usize]) -> Option<SimilaritySpace> {
        let mass = crate::exact::exact_sum(indices.iter().map(|&i| self.weights[i]));
        if mass <= 0.0 {
            return None;
        }
        Some(SimilaritySpace {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            weights: indices.iter().map(|&i| self.weights[i] / mass).collect(),
            bound: self.bound,
            sim: indices
                .iter()
                .map(|&i| indices.iter().map(|&j| self.sim[i][j]).collect())
                .collect(),
        })
    }
}

/// A finite metric space with probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    pub dist: Vec<Vec<f64>>,
}

impl MetricSpace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks shape, nonnegativity, symmetry, zero diagonal and the triangle
    /// inequality (with a relative slack of `1e-12` for rounding).
    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.weights.len() != n || self.dist.len() != n || self.dist.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("metric shape".into()));
        }
        let diameter = self.diameter();
        let slack = 1e-12 * diameter.max(1.0);
        for i in 0..n {
            for j in 0..n {
                let d = self.dist[i][j];
                if !(d.is_finite() && d >= 0.0) || (i == j && d != 0.0) {
                    return Err(Error::NegativeDistance { i, j });
                }
                if self.dist[j][i] != d {
                    return Err(Error::DimensionMismatch(format!(
                        "distance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if self.dist[x][y] > self.dist[x][z] + self.dist[z][y] + slack {
                        return Err(Error::TriangleViolation { x, y, z });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn diameter(&self) -> f64 {
        self.dist
            .iter()
            .flat_map(|r| r.iter().copied())
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }
}

/// Gromov product `(x, y)_w = (d(x,w) + d(y,w) - d(x,y)) / 2`.
#[inline]
pub fn gromov_product(dist: &[Vec<f64>], x: usize, y: usize, w: usize) -> f64 {
    0.5 * (dist[x][w] + dist[y][w] - dist[x][y])
}

/// Turns a metric into the similarity space of Gromov products based at
/// `base`. The bound is the diameter of the metric.
pub fn gromov_product_similarity(metric: &MetricSpace, base: usize) -> Result<SimilaritySpace> {
    metric.validate()?;
    let n = metric.len();
    if base >= n {
        return Err(Error::InvalidParameter(format!("base point {base} out of range")));
    }
    let diameter = metric.diameter();
    let bound = if diameter > 0.0 { diameter } else { 1.0 };
    let sim = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        metric.dist[x][base]
                    } else {
                        gromov_product(&metric.dist, x, y, base).clamp(0.0, bound)
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    // symmetrize bit-exactly: the formula is symmetric up to addition order
    let sim = (0..n)
        .map(|x| (0..n).map(|y| if x <= y { sim[x][y] } else { sim[y][x] }).collect())
        .collect();
    SimilaritySpace::new(metric.points.clone(), metric.weights.clone(), sim, bound)
}
