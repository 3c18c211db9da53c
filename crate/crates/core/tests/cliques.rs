use std::collections::BTreeSet;

use hyptree::cliques::{repair_threshold_graph, verify_cliques};
use hyptree::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use hyptree::regularity::RegularityParams;
use hyptree::{Error, SimilaritySpace};
use proptest::prelude::*;

/// Three blocks of eight points, within 0.8 and across 0.2.
fn blocks(noise_pairs: &[(usize, usize)]) -> SimilaritySpace {
    let n = 24;
    let mut sim: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else if i / 8 == j / 8 {
                        0.8
                    } else {
                        0.2
                    }
                })
                .collect()
        })
        .collect();
    for &(a, b) in noise_pairs {
        sim[a][b] = 0.9;
        sim[b][a] = 0.9;
    }
    SimilaritySpace::uniform(sim, 1.0).unwrap()
}

fn as_sets(cliques: &[Vec<usize>]) -> BTreeSet<BTreeSet<usize>> {
    cliques.iter().map(|c| c.iter().copied().collect()).collect()
}

fn planted() -> BTreeSet<BTreeSet<usize>> {
    (0..3).map(|b| (8 * b..8 * b + 8).collect()).collect()
}

#[test]
fn planted_blocks_recovered_without_changes() {
    let sp = blocks(&[]);
    let all: Vec<usize> = (0..24).collect();
    let run = repair_threshold_graph(&sp, &all, 0.5, &RegularityParams::practical(1e-16, 16)).unwrap();
    assert_eq!(as_sets(&run.cliques), planted());
    assert_eq!(run.log.total_measure, 0.0);
    assert_eq!(run.structure.cliques_of_parts.len(), 3);
}

#[test]
fn planted_blocks_with_value_noise() {
    // perturb every off-diagonal value by up to 0.04 without crossing 0.5
    let mut sp = blocks(&[]);
    for i in 0..24 {
        for j in i + 1..24 {
            let v = sp.sim[i][j] + ((i * 7 + j * 3) % 5) as f64 * 0.02 - 0.04;
            sp.sim[i][j] = v;
            sp.sim[j][i] = v;
        }
    }
    sp.validate().unwrap();
    let all: Vec<usize> = (0..24).collect();
    for (eps, m) in [(1e-16, 16), (0.01, 4)] {
        let run = repair_threshold_graph(&sp, &all, 0.5, &RegularityParams::practical(eps, m)).unwrap();
        assert_eq!(as_sets(&run.cliques), planted());
        assert_eq!(run.log.total_measure, 0.0);
    }
}

#[test]
fn flipped_cross_edges_still_give_cliques() {
    let sp = blocks(&[(0, 8), (9, 17)]);
    let all: Vec<usize> = (0..24).collect();
    for (eps, m) in [(1e-16, 16), (0.01, 4), (0.1, 2)] {
        let run = repair_threshold_graph(&sp, &all, 0.5, &RegularityParams::practical(eps, m)).unwrap();
        assert!(verify_cliques(run.after.as_ref().unwrap()).passed());
        assert!(run.log.total_measure > 0.0);
    }
}

#[test]
fn complete_graph_is_one_clique() {
    let sp = SimilaritySpace::uniform(vec![vec![1.0; 10]; 10], 1.0).unwrap();
    let all: Vec<usize> = (0..10).collect();
    let run = repair_threshold_graph(&sp, &all, 0.5, &RegularityParams::practical(1e-16, 4)).unwrap();
    assert_eq!(run.cliques.len(), 1);
    assert_eq!(run.log.total_measure, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn repair_output_is_clique_union(seed in 0u64..5_000, size in 4usize..24, t in 0.1f64..0.9, kind in 0usize..3, eps_ix in 0usize..3) {
        let kind = [FixtureKind::Random, FixtureKind::NoisyTree, FixtureKind::PlantedBlocks][kind];
        let (eps, m) = [(1e-16, 16), (0.01, 4), (0.1, 2)][eps_ix];
        let sp = generate_fixture(kind, size, &FixtureParams::default(), seed).unwrap().space;
        let all: Vec<usize> = (0..size).collect();
        match repair_threshold_graph(&sp, &all, t, &RegularityParams { seed, ..RegularityParams::practical(eps, m) }) {
            Ok(run) => {
                let after = run.after.as_ref().unwrap();
                prop_assert!(verify_cliques(after).passed());
                // every edge that changed appears in the log
                let before = run.before.as_ref().unwrap();
                let changed: BTreeSet<(usize, usize)> = (0..size)
                    .flat_map(|a| (0..size).map(move |b| (a, b)))
                    .filter(|&(a, b)| a < b && before.has_edge(a, b) != after.has_edge(a, b))
                    .collect();
                let logged = run.log.union_pairs();
                prop_assert!(changed.is_subset(&logged));
                let cover: usize = run.cliques.iter().map(Vec::len).sum();
                prop_assert_eq!(cover, size);
            }
            Err(e) => prop_assert!(!matches!(e, Error::PostconditionViolated(_)), "{}", e),
        }
    }
}
