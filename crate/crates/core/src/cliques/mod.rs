//! Turning a thresholded similarity graph into a disjoint union of cliques
//! by a logged sequence of edge additions and deletions, driven by a
//! regularity partition of its vertices.

mod repair;

pub use repair::{
    clique_repair, repair_threshold_graph, verify_cliques, Action, CliqueCheck, CliqueRun, ModificationLog, StageLog,
};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularity::PartitionResult;

/// Relations between the non-exceptional parts of a partition. Matrices are
/// indexed by part number, so row and column 0 (the exceptional part) stay
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartNeighborGraph {
    pub q: usize,
    pub neighbors: Vec<Vec<bool>>,
    pub irregular: Vec<Vec<bool>>,
    pub densities: Vec<Vec<Option<f64>>>,
}

impl PartNeighborGraph {
    /// `densities[i][j]` and `regular[i][j]` refer to parts `i + 1`, `j + 1`.
    pub fn from_relations(densities: &[Vec<Option<f64>>], regular: &[Vec<bool>], epsilon: f64) -> Self {
        let q = densities.len();
        let mut neighbors = vec![vec![false; q + 1]; q + 1];
        let mut irregular = vec![vec![false; q + 1]; q + 1];
        let mut dens = vec![vec![None; q + 1]; q + 1];
        for i in 0..q {
            for j in 0..q {
                if i == j {
                    continue;
                }
                let reg = regular[i][j] && regular[j][i];
                dens[i + 1][j + 1] = densities[i][j];
                irregular[i + 1][j + 1] = !reg;
                neighbors[i + 1][j + 1] = reg && densities[i][j].is_some_and(|d| d >= 1.0 - 2.0 * epsilon);
            }
        }
        Self {
            q,
            neighbors,
            irregular,
            densities: dens,
        }
    }

    pub fn is_neighbor(&self, i: usize, j: usize) -> bool {
        self.neighbors[i][j]
    }

    pub fn neighbor_count<'a>(&self, i: usize, among: impl IntoIterator<Item = &'a usize>) -> usize {
        among.into_iter().filter(|&&j| self.neighbors[i][j]).count()
    }
}

/// Classifies each pair of non-exceptional parts as neighbors (regular with
/// density at least `1 - 2ε`), regular non-neighbors or irregular. Pairs
/// whose test was inconclusive count as irregular.
pub fn part_neighbor_graph(partition: &PartitionResult, epsilon: f64) -> PartNeighborGraph {
    let q = partition.q();
    let regular: Vec<Vec<bool>> = (1..=q)
        .map(|i| (1..=q).map(|j| i != j && partition.is_regular(i, j)).collect())
        .collect();
    PartNeighborGraph::from_relations(&partition.densities, &regular, epsilon)
}

/// A part together with some of its neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: usize,
    /// Sorted part numbers, center included.
    pub members: Vec<usize>,
}

fn min_family_size(epsilon: f64, q: usize) -> f64 {
    epsilon.powf(0.25) * q as f64
}

fn closed_neighborhood(pg: &PartNeighborGraph, center: usize, used: &[bool]) -> Vec<usize> {
    (1..=pg.q)
        .filter(|&j| !used[j] && (j == center || pg.neighbors[center][j]))
        .collect()
}

/// Greedy maximal family of disjoint neighborhoods of size at least
/// `ε^{1/4} q`: repeatedly takes the unused part with the largest closed
/// neighborhood among unused parts (lowest number on ties).
pub fn neighborhood_family(pg: &PartNeighborGraph, epsilon: f64) -> Vec<Neighborhood> {
    let need = min_family_size(epsilon, pg.q);
    let mut used = vec![false; pg.q + 1];
    let mut family = Vec::new();
    loop {
        let best = (1..=pg.q)
            .filter(|&i| !used[i])
            .map(|i| (i, closed_neighborhood(pg, i, &used)))
            .fold(None::<(usize, Vec<usize>)>, |acc, (i, nb)| match acc {
                Some((_, ref b)) if b.len() >= nb.len() => acc,
                _ => Some((i, nb)),
            });
        match best {
            Some((center, members)) if members.len() as f64 >= need => {
                for &j in &members {
                    used[j] = true;
                }
                family.push(Neighborhood { center, members });
            }
            _ => return family,
        }
    }
}

/// Whether no further disjoint neighborhood of the required size fits among
/// the parts not covered by `family`.
pub fn is_maximal_family(pg: &PartNeighborGraph, family: &[Neighborhood], epsilon: f64) -> bool {
    let need = min_family_size(epsilon, pg.q);
    let mut used = vec![false; pg.q + 1];
    for nb in family {
        for &j in &nb.members {
            used[j] = true;
        }
    }
    (1..=pg.q)
        .filter(|&i| !used[i])
        .all(|i| (closed_neighborhood(pg, i, &used).len() as f64) < need)
}

/// Sanity checks of the structure against the counting bounds that hold
/// when the hyperbolicity is small enough; reported, not enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureChecks {
    /// `|𝔠| <= ε^{-1/4}`.
    pub clique_count_ok: bool,
    /// Bad pairs at most `3 ε^{1/12} q²`.
    pub bad_pairs_ok: bool,
    /// Every leftover part has at most `2 ε^{1/12} q` neighbors.
    pub leftover_degree_ok: bool,
    /// The family is maximal.
    pub family_maximal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueStructure {
    pub families: Vec<Neighborhood>,
    /// Unions of the connected groups of neighborhoods, as sorted part lists.
    pub cliques_of_parts: Vec<Vec<usize>>,
    /// `cliques_of_parts[k]` plus the outside parts attached to it.
    pub extended: Vec<Vec<usize>>,
    /// Parts in no extended clique.
    pub leftover_parts: Vec<usize>,
    /// Neighbor pairs `(i, j)`, `i < j`, lying in distinct extended cliques.
    pub bad_pairs: Vec<(usize, usize)>,
    pub checks: StructureChecks,
}

impl CliqueStructure {
    /// Extended clique index per part number (`None` for `V_0` and leftovers).
    pub fn membership(&self, q: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; q + 1];
        for (c, parts) in self.extended.iter().enumerate() {
            for &p in parts {
                out[p] = Some(c);
            }
        }
        out
    }
}

/// Groups the neighborhoods by adjacency (some cross pair of parts are
/// neighbors), requires every group to be complete, and attaches each
/// remaining part to the unique group in which it has at least `ε^{1/3} q`
/// neighbors.
pub fn clique_closure(family: &[Neighborhood], pg: &PartNeighborGraph, epsilon: f64) -> Result<CliqueStructure> {
    let k = family.len();
    let adjacent = |a: usize, b: usize| {
        family[a]
            .members
            .iter()
            .any(|&i| family[b].members.iter().any(|&j| pg.neighbors[i][j]))
    };
    let mut fam_adj = vec![vec![false; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let e = adjacent(a, b);
            fam_adj[a][b] = e;
            fam_adj[b][a] = e;
        }
    }
    let components = components_of(k, |a, b| fam_adj[a][b]);
    for comp in &components {
        if first_non_adjacent(comp, |a, b| fam_adj[a][b]).is_some() {
            // a connected non-complete group always contains an induced path
            // on three vertices
            let (a, b, c) = comp
                .iter()
                .flat_map(|&b| comp.iter().flat_map(move |&a| comp.iter().map(move |&c| (a, b, c))))
                .find(|&(a, b, c)| a < c && fam_adj[a][b] && fam_adj[b][c] && !fam_adj[a][c])
                .expect("induced path exists");
            return Err(Error::NotAClique(format!(
                "neighborhoods centered at parts {}, {} and {} form a path whose ends are not adjacent",
                family[a].center, family[b].center, family[c].center
            )));
        }
    }

    let cliques_of_parts: Vec<Vec<usize>> = components
        .iter()
        .map(|comp| {
            let mut parts: Vec<usize> = comp.iter().flat_map(|&f| family[f].members.iter().copied()).collect();
            parts.sort_unstable();
            parts
        })
        .collect();

    let q = pg.q;
    let mut in_clique = vec![false; q + 1];
    for c in &cliques_of_parts {
        for &p in c {
            in_clique[p] = true;
        }
    }
    let attach = epsilon.powf(1.0 / 3.0) * q as f64;
    let mut extended = cliques_of_parts.clone();
    let mut leftover_parts = Vec::new();
    for p in (1..=q).filter(|&p| !in_clique[p]) {
        let hits: Vec<usize> = cliques_of_parts
            .iter()
            .enumerate()
            .filter(|(_, c)| pg.neighbor_count(p, c.iter()) as f64 >= attach)
            .map(|(c, _)| c)
            .collect();
        match hits.as_slice() {
            [] => leftover_parts.push(p),
            [c] => extended[*c].push(p),
            [c1, c2, ..] => {
                return Err(Error::NotAClique(format!(
                    "part {p} has at least {attach} neighbors in two clique groups ({c1} and {c2})"
                )))
            }
        }
    }
    for c in extended.iter_mut() {
        c.sort_unstable();
    }

    let mut member = vec![None; q + 1];
    for (c, parts) in extended.iter().enumerate() {
        for &p in parts {
            member[p] = Some(c);
        }
    }
    let mut bad_pairs = Vec::new();
    for i in 1..=q {
        for j in i + 1..=q {
            if pg.neighbors[i][j] {
                if let (Some(a), Some(b)) = (member[i], member[j]) {
                    if a != b {
                        bad_pairs.push((i, j));
                    }
                }
            }
        }
    }

    let qf = q as f64;
    let checks = StructureChecks {
        clique_count_ok: cliques_of_parts.len() as f64 <= epsilon.powf(-0.25),
        bad_pairs_ok: bad_pairs.len() as f64 <= 3.0 * epsilon.powf(1.0 / 12.0) * qf * qf,
        leftover_degree_ok: leftover_parts.iter().all(|&p| {
            pg.neighbor_count(p, (1..=q).collect::<Vec<_>>().iter()) as f64 <= 2.0 * epsilon.powf(1.0 / 12.0) * qf
        }),
        family_maximal: is_maximal_family(pg, family, epsilon),
    };

    Ok(CliqueStructure {
        families: family.to_vec(),
        cliques_of_parts,
        extended,
        leftover_parts,
        bad_pairs,
        checks,
    })
}

/// Connected components (vertices in ascending order, components ordered by
/// their smallest vertex).
pub(crate) fn components_of(n: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && adjacent(u, v) {
                    seen[v] = true;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub(crate) fn first_non_adjacent(comp: &[usize], adjacent: impl Fn(usize, usize) -> bool) -> Option<(usize, usize)> {
    for (i, &a) in comp.iter().enumerate() {
        for &b in &comp[i + 1..] {
            if !adjacent(a, b) {
                return Some((a, b));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relations(q: usize, edge: impl Fn(usize, usize) -> bool) -> PartNeighborGraph {
        let dens: Vec<Vec<Option<f64>>> = (0..q)
            .map(|i| {
                (0..q)
                    .map(|j| (i != j).then(|| if edge(i, j) { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        let reg = vec![vec![true; q]; q];
        PartNeighborGraph::from_relations(&dens, &reg, 0.1)
    }

    #[test]
    fn density_extremes() {
        let full = relations(4, |_, _| true);
        assert!((1..=4).all(|i| (1..=4).all(|j| full.is_neighbor(i, j) == (i != j))));
        let none = relations(4, |_, _| false);
        assert!(none.neighbors.iter().flatten().all(|&e| !e));
    }

    #[test]
    fn boundary_density_is_a_neighbor() {
        let eps = 0.125;
        let dens = vec![vec![None, Some(0.75)], vec![Some(0.75), None]];
        let pg = PartNeighborGraph::from_relations(&dens, &[vec![false, true], vec![true, false]], eps);
        assert!(pg.is_neighbor(1, 2));
        let pg = PartNeighborGraph::from_relations(&dens, &[vec![false, false], vec![false, false]], eps);
        assert!(!pg.is_neighbor(1, 2));
        assert!(pg.irregular[1][2]);
    }

    #[test]
    fn complete_relation_gives_one_neighborhood() {
        let pg = relations(6, |_, _| true);
        let fam = neighborhood_family(&pg, 0.1);
        assert_eq!(
            fam,
            vec![Neighborhood {
                center: 1,
                members: (1..=6).collect()
            }]
        );
    }

    #[test]
    fn empty_relation_gives_empty_family() {
        // ε^{1/4} q = 0.56 * 8 > 1
        let pg = relations(8, |_, _| false);
        assert!(neighborhood_family(&pg, 0.1).is_empty());
        assert!(is_maximal_family(&pg, &[], 0.1));
    }

    #[test]
    fn two_blocks_give_two_neighborhoods() {
        // blocks {1..4} and {5..8}; threshold 0.1^{1/4} * 8 ≈ 4.5 is too big,
        // so use a smaller epsilon
        let pg = relations(8, |i, j| (i < 4) == (j < 4));
        let eps = 0.01; // 0.316 * 8 ≈ 2.5
        let fam = neighborhood_family(&pg, eps);
        assert_eq!(
            fam,
            vec![
                Neighborhood {
                    center: 1,
                    members: vec![1, 2, 3, 4]
                },
                Neighborhood {
                    center: 5,
                    members: vec![5, 6, 7, 8]
                },
            ]
        );
        let st = clique_closure(&fam, &pg, eps).unwrap();
        assert_eq!(st.cliques_of_parts, vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]]);
        assert!(st.leftover_parts.is_empty() && st.bad_pairs.is_empty());
    }

    #[test]
    fn single_neighborhood_leaves_weak_parts_out() {
        // parts 1..5 complete, 6 adjacent to 1 only, 7 isolated
        let pg = relations(7, |i, j| (i < 5 && j < 5) || (i.min(j) == 0 && i.max(j) == 5));
        let eps = 0.01;
        let fam = neighborhood_family(&pg, eps);
        assert_eq!(fam.len(), 1);
        assert_eq!(fam[0].members, vec![1, 2, 3, 4, 5, 6]);
        let st = clique_closure(&fam, &pg, eps).unwrap();
        assert_eq!(st.cliques_of_parts, vec![vec![1, 2, 3, 4, 5, 6]]);
        assert_eq!(st.leftover_parts, vec![7]);
        assert!(st.checks.family_maximal);
    }

    #[test]
    fn attachment_needs_enough_neighbors() {
        // parts 1..6 complete; 7 sees 1 and 2; 8 sees 1 only
        let pg = relations(8, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            b < 6 || (b == 6 && a < 2) || (b == 7 && a == 0)
        });
        let eps = 0.5f64.powi(12);
        let fam = vec![Neighborhood {
            center: 3,
            members: (1..=6).collect(),
        }];
        let st = clique_closure(&fam, &pg, eps).unwrap();
        // attach threshold 2^{-4} * 8 = 0.5: both outside parts attach
        assert_eq!(st.extended, vec![(1..=8).collect::<Vec<_>>()]);
        let st = clique_closure(&fam, &pg, 0.3).unwrap();
        // 0.3^{1/3} * 8 ≈ 5.4: neither attaches
        assert_eq!(st.leftover_parts, vec![7, 8]);
    }

    #[test]
    fn path_of_neighborhoods_is_not_a_clique() {
        // neighborhoods {1,2}, {3,4}, {5,6}; 2~3 and 4~5 only
        let pg = relations(6, |i, j| {
            let (a, b) = (i.min(j), i.max(j));
            (a, b) == (0, 1) || (a, b) == (2, 3) || (a, b) == (4, 5) || (a, b) == (1, 2) || (a, b) == (3, 4)
        });
        let fam = vec![
            Neighborhood {
                center: 1,
                members: vec![1, 2],
            },
            Neighborhood {
                center: 3,
                members: vec![3, 4],
            },
            Neighborhood {
                center: 5,
                members: vec![5, 6],
            },
        ];
        match clique_closure(&fam, &pg, 0.01) {
            Err(Error::NotAClique(msg)) => assert!(msg.contains("1, 3 and 5"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_unattached_groups() {
        let pg = relations(4, |i, j| (i < 2) == (j < 2));
        let fam = vec![
            Neighborhood {
                center: 1,
                members: vec![1, 2],
            },
            Neighborhood {
                center: 3,
                members: vec![3, 4],
            },
        ];
        let st = clique_closure(&fam, &pg, 0.01).unwrap();
        assert_eq!(st.cliques_of_parts.len(), 2);
        assert_eq!(st.membership(4), vec![None, Some(0), Some(0), Some(1), Some(1)]);
    }
}
