//! Vertex-weighted simple graphs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::space::SimilaritySpace;

/// A simple undirected graph with a nonnegative mass on each vertex.
///
/// Adjacency is stored densely; the graphs handled here have at most a few
/// thousand vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertices: Vec<String>,
    measure: Vec<f64>,
    adj: Vec<Vec<bool>>,
}

impl WeightedGraph {
    /// Edgeless graph.
    pub fn new(vertices: Vec<String>, measure: Vec<f64>) -> Result<Self> {
        if vertices.len() != measure.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vertices but {} masses",
                vertices.len(),
                measure.len()
            )));
        }
        if let Some(index) = measure.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::NegativeWeight { index });
        }
        let n = vertices.len();
        Ok(Self {
            vertices,
            measure,
            adj: vec![vec![false; n]; n],
        })
    }

    /// Graph on `indices` of `space` with an edge between distinct `x`, `y`
    /// iff `s(x, y) >= t`. Masses are the (unnormalized) point weights.
    pub fn threshold(space: &SimilaritySpace, indices: &[usize], t: f64) -> Self {
        let n = indices.len();
        let mut adj = vec![vec![false; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                if space.sim[indices[a]][indices[b]] >= t {
                    adj[a][b] = true;
                    adj[b][a] = true;
                }
            }
        }
        Self {
            vertices: indices.iter().map(|&i| space.points[i].clone()).collect(),
            measure: indices.iter().map(|&i| space.weights[i]).collect(),
            adj,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    /// Inserts the edge `{a, b}`. Self-loops are ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a][b] = true;
            self.adj[b][a] = true;
        }
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.adj[a][b] = false;
        self.adj[b][a] = false;
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[a].iter().enumerate().filter_map(|(b, &e)| e.then_some(b))
    }

    /// Unordered edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.adj[a][b] {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(0..self.len())
    }

    pub fn mass<I: IntoIterator<Item = usize>>(&self, set: I) -> f64 {
        set.into_iter().map(|v| self.measure[v]).collect::<ExactSum>().value()
    }

    pub fn max_mass(&self) -> f64 {
        self.measure.iter().copied().fold(0.0, f64::max)
    }

    /// `mu x mu` mass of ordered edges from `u` into `v`.
    pub fn edge_mass(&self, u: &[usize], v: &[usize]) -> f64 {
        let mut acc = ExactSum::new();
        for &a in u {
            for &b in v {
                if self.adj[a][b] {
                    acc.add_product(&[self.measure[a], self.measure[b]]);
                }
            }
        }
        acc.value()
    }

    /// Weighted edge density between disjoint sets; `None` when either side
    /// has zero mass.
    pub fn density(&self, u: &[usize], v: &[usize]) -> Option<f64> {
        let mu = self.mass(u.iter().copied());
        let mv = self.mass(v.iter().copied());
        if mu <= 0.0 || mv <= 0.0 {
            return None;
        }
        Some((self.edge_mass(u, v) / (mu * mv)).clamp(0.0, 1.0))
    }

    /// Graphviz rendering; `groups` (one label per vertex) colors vertices.
    pub fn to_dot(&self, name: &str, groups: Option<&[usize]>) -> String {
        const PALETTE: [&str; 10] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
            "#17becf",
        ];
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", name.replace('"', "'"));
        for (i, v) in self.vertices.iter().enumerate() {
            let label = v.replace('"', "'");
            match groups {
                Some(g) => {
                    let _ = writeln!(
                        out,
                        "  v{i} [label=\"{label}\", style=filled, fillcolor=\"{}\", group={}];",
                        PALETTE[g[i] % PALETTE.len()],
                        g[i]
                    );
                }
                None => {
                    let _ = writeln!(out, "  v{i} [label=\"{label}\"];");
                }
            }
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "  v{a} -- v{b};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self.vertices.clone(),
            measure: self.measure.clone(),
            edges: self
                .edges()
                .into_iter()
                .map(|(a, b)| [self.vertices[a].clone(), self.vertices[b].clone()])
                .collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        let mut g = Self::new(file.vertices.clone(), file.measure.clone())?;
        let index = |id: &str| {
            g.vertices
                .iter()
                .position(|v| v == id)
                .ok_or_else(|| Error::InvalidParameter(format!("edge references unknown vertex {id:?}")))
        };
        let mut pairs = Vec::with_capacity(file.edges.len());
        for [a, b] in &file.edges {
            let (a, b) = (index(a)?, index(b)?);
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on {:?}", file.vertices[a])));
            }
            pairs.push((a, b));
        }
        for (a, b) in pairs {
            g.add_edge(a, b);
        }
        Ok(g)
    }
}

/// On-disk graph: `{"vertices": [...], "measure": [...], "edges": [[a, b], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub measure: Vec<f64>,
    pub edges: Vec<[String; 2]>,
}
