use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{clique_closure, components_of, first_non_adjacent, neighborhood_family, part_neighbor_graph};
use super::{CliqueStructure, PartNeighborGraph};
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::graph::WeightedGraph;
use crate::regularity::{regularity_pipeline, PartitionResult, RegularityParams};
use crate::space::SimilaritySpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Add,
    Delete,
}

/// Pairs toggled by one stage, as ordered vertex pairs (both orientations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: u8,
    pub action: Action,
    pub pairs: Vec<[usize; 2]>,
    /// `P⊗²` mass of `pairs`.
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationLog {
    pub stages: Vec<StageLog>,
    /// `P⊗²` mass of the union of all toggled pairs.
    pub total_measure: f64,
    /// `P⊗²` mass of the symmetric difference between input and output.
    pub net_measure: f64,
    /// Mass of the vertex set.
    pub vertex_mass: f64,
}

impl ModificationLog {
    /// Every pair touched by some stage, as `(a, b)` with `a < b`.
    pub fn union_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.stages
            .iter()
            .flat_map(|s| s.pairs.iter())
            .filter(|p| p[0] < p[1])
            .map(|p| (p[0], p[1]))
            .collect()
    }
}

fn pair_measure<'a>(graph: &WeightedGraph, pairs: impl IntoIterator<Item = &'a (usize, usize)>) -> f64 {
    let m = graph.measure();
    let mut acc = ExactSum::new();
    for &(a, b) in pairs {
        acc.add_product(&[2.0, m[a], m[b]]);
    }
    acc.value()
}

struct Stager<'g> {
    graph: &'g mut WeightedGraph,
    stages: Vec<StageLog>,
}

impl Stager<'_> {
    fn apply(&mut self, stage: u8, action: Action, wanted: impl Fn(usize, usize) -> bool) {
        let n = self.graph.len();
        let mut toggled = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if wanted(a, b) && self.graph.has_edge(a, b) == (action == Action::Delete) {
                    toggled.push((a, b));
                }
            }
        }
        for &(a, b) in &toggled {
            match action {
                Action::Add => self.graph.add_edge(a, b),
                Action::Delete => self.graph.remove_edge(a, b),
            }
        }
        let measure = pair_measure(self.graph, &toggled);
        let pairs = toggled.iter().flat_map(|&(a, b)| [[a, b], [b, a]]).collect();
        self.stages.push(StageLog {
            stage,
            action,
            pairs,
            measure,
        });
    }
}

/// Applies the five modification stages to `graph` given its partition
/// (`parts[0]` exceptional) and clique structure:
///
/// 1. delete edges touching `V_0`;
/// 2. complete every part internally;
/// 3. complete across parts of the same extended clique;
/// 4. delete edges between distinct extended cliques;
/// 5. delete edges touching leftover parts.
///
/// The result is checked to be a disjoint union of cliques whose
/// non-singleton members weigh at least `½ ε^{1/4}` of the vertex mass.
pub fn clique_repair(
    graph: &WeightedGraph,
    parts: &[Vec<usize>],
    structure: &CliqueStructure,
    epsilon: f64,
) -> Result<(WeightedGraph, ModificationLog)> {
    let n = graph.len();
    let q = parts.len() - 1;
    let mut part_of = vec![0usize; n];
    for (k, p) in parts.iter().enumerate() {
        for &x in p {
            part_of[x] = k;
        }
    }
    let member = structure.membership(q);
    let clique_of = |x: usize| {
        if part_of[x] == 0 {
            None
        } else {
            member[part_of[x]]
        }
    };
    let leftover: Vec<bool> = {
        let mut v = vec![false; q + 1];
        for &p in &structure.leftover_parts {
            v[p] = true;
        }
        v
    };

    let mut repaired = graph.clone();
    let mut st = Stager {
        graph: &mut repaired,
        stages: Vec::new(),
    };
    st.apply(1, Action::Delete, |a, b| part_of[a] == 0 || part_of[b] == 0);
    st.apply(2, Action::Add, |a, b| part_of[a] != 0 && part_of[a] == part_of[b]);
    st.apply(3, Action::Add, |a, b| {
        part_of[a] != part_of[b] && clique_of(a).is_some() && clique_of(a) == clique_of(b)
    });
    st.apply(
        4,
        Action::Delete,
        |a, b| matches!((clique_of(a), clique_of(b)), (Some(c), Some(d)) if c != d),
    );
    st.apply(5, Action::Delete, |a, b| leftover[part_of[a]] || leftover[part_of[b]]);
    let stages = st.stages;

    let mut union = BTreeSet::new();
    for s in &stages {
        union.extend(s.pairs.iter().filter(|p| p[0] < p[1]).map(|p| (p[0], p[1])));
    }
    let net: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| graph.has_edge(a, b) != repaired.has_edge(a, b))
        .collect();
    let vertex_mass = graph.total_mass();
    let log = ModificationLog {
        total_measure: pair_measure(graph, &union),
        net_measure: pair_measure(graph, &net),
        stages,
        vertex_mass,
    };

    let check = verify_cliques(&repaired);
    if let Some((a, b)) = check.witness {
        return Err(Error::PostconditionViolated(format!(
            "repaired graph is not a union of cliques: {} and {} share a component but are not adjacent",
            repaired.vertices()[a],
            repaired.vertices()[b]
        )));
    }
    let scale = epsilon.powf(0.25);
    for comp in check.cliques.iter().filter(|c| c.len() > 1) {
        let mut acc = ExactSum::new();
        for &x in comp {
            acc.add(graph.measure()[x]);
        }
        for &w in graph.measure() {
            acc.add_product(&[-0.5, scale, w]);
        }
        if acc.value() < 0.0 {
            return Err(Error::PostconditionViolated(format!(
                "clique of {} vertices has mass {} below half of eps^(1/4) times {}",
                comp.len(),
                graph.mass(comp.iter().copied()),
                vertex_mass
            )));
        }
    }
    Ok((repaired, log))
}

/// Components of a graph and, if one of them is not complete, a
/// non-adjacent pair inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueCheck {
    pub cliques: Vec<Vec<usize>>,
    pub witness: Option<(usize, usize)>,
}

impl CliqueCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

pub fn verify_cliques(graph: &WeightedGraph) -> CliqueCheck {
    let cliques = components_of(graph.len(), |a, b| graph.has_edge(a, b));
    let witness = cliques
        .iter()
        .find_map(|c| first_non_adjacent(c, |a, b| graph.has_edge(a, b)));
    CliqueCheck { cliques, witness }
}

/// Everything produced while repairing one thresholded graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueRun {
    /// Indices into the similarity space, one per graph vertex.
    pub indices: Vec<usize>,
    pub threshold: f64,
    pub partition: PartitionResult,
    pub neighbor_graph: PartNeighborGraph,
    pub structure: CliqueStructure,
    pub log: ModificationLog,
    /// Vertex sets (graph positions) of the repaired cliques, singletons
    /// included.
    pub cliques: Vec<Vec<usize>>,
    #[serde(skip)]
    pub before: Option<WeightedGraph>,
    #[serde(skip)]
    pub after: Option<WeightedGraph>,
}

/// Thresholds `space` on `indices` at `t`, partitions the graph and repairs
/// it into cliques.
pub fn repair_threshold_graph(
    space: &SimilaritySpace,
    indices: &[usize],
    t: f64,
    params: &RegularityParams,
) -> Result<CliqueRun> {
    let graph = WeightedGraph::threshold(space, indices, t);
    let partition = regularity_pipeline(&graph, params)?;
    let pg = part_neighbor_graph(&partition, params.epsilon);
    let family = neighborhood_family(&pg, params.epsilon);
    let structure = clique_closure(&family, &pg, params.epsilon)?;
    let (repaired, log) = clique_repair(&graph, &partition.parts, &structure, params.epsilon)?;
    let cliques = verify_cliques(&repaired).cliques;
    Ok(CliqueRun {
        indices: indices.to_vec(),
        threshold: t,
        partition,
        neighbor_graph: pg,
        structure,
        log,
        cliques,
        before: Some(graph),
        after: Some(repaired),
    })
}
