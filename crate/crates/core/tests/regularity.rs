use hyptree::exact::ExactSum;
use hyptree::regularity::{regularity_pipeline, regularity_test, weighted_adjacency_spectrum, Mode, RegularityParams};
use hyptree::{Error, WeightedGraph};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, p: f64, seed: u64, random_weights: bool) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n)
        .map(|_| {
            if random_weights {
                rng.random_range(0.5..1.5)
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let mut g = WeightedGraph::new(
        (0..n).map(|i| format!("v{i}")).collect(),
        raw.iter().map(|w| w / total).collect(),
    )
    .unwrap();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                g.add_edge(a, b);
            }
        }
    }
    g
}

fn explicit_nonzero_spectrum(g: &WeightedGraph, k: &[u64]) -> Vec<f64> {
    let owner: Vec<usize> = (0..k.len())
        .flat_map(|x| std::iter::repeat_n(x, k[x] as usize))
        .collect();
    let n = owner.len();
    let a = DMatrix::from_fn(n, n, |i, j| if g.has_edge(owner[i], owner[j]) { 1.0 } else { 0.0 });
    let mut v: Vec<f64> = a
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .filter(|l: &f64| l.abs() > 1e-9)
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

fn reduced_nonzero_spectrum(g: &WeightedGraph, k: &[u64]) -> Vec<f64> {
    let mut v: Vec<f64> = weighted_adjacency_spectrum(g, k)
        .unwrap()
        .eigenvalues
        .into_iter()
        .filter(|l| l.abs() > 1e-9)
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact checks of the partition guarantees; returns a description of the
/// first failure.
fn check_postconditions(g: &WeightedGraph, params: &RegularityParams) -> Result<(), String> {
    let p = match regularity_pipeline(g, params) {
        Ok(p) => p,
        Err(e @ Error::PostconditionViolated(_)) => return Err(e.to_string()),
        Err(_) => return Ok(()),
    };
    let mu = g.measure();
    let mu_star = mu.iter().copied().fold(0.0, f64::max);
    let mut v0 = ExactSum::new();
    mu.iter().for_each(|&w| v0.add_product(&[params.epsilon, w]));
    p.parts[0].iter().for_each(|&v| v0.add(-mu[v]));
    if v0.value() < 0.0 {
        return Err("exceptional part too heavy".into());
    }
    for a in &p.parts[1..] {
        if a.iter().all(|&v| mu[v] == 0.0) {
            return Err("massless part".into());
        }
        for b in &p.parts[1..] {
            let mut d = ExactSum::new();
            d.add(mu_star);
            b.iter().for_each(|&v| d.add(mu[v]));
            a.iter().for_each(|&v| d.add(-mu[v]));
            if d.value() < 0.0 {
                return Err("unbalanced parts".into());
            }
        }
    }
    let mut seen = vec![false; g.len()];
    for &v in p.parts.iter().flatten() {
        if std::mem::replace(&mut seen[v], true) {
            return Err(format!("vertex {v} in two parts"));
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err("parts do not cover the vertices".into());
    }
    let q = p.q();
    if q < p.diagnostics.m_effective || q > p.diagnostics.part_bound {
        return Err(format!("q = {q} out of bounds"));
    }
    Ok(())
}

#[test]
fn single_edge_blowup_spectrum() {
    let mut g = WeightedGraph::new(vec!["a".into(), "b".into()], vec![0.5, 0.5]).unwrap();
    g.add_edge(0, 1);
    let k = [2, 1];
    let r2 = 2f64.sqrt();
    let reduced = reduced_nonzero_spectrum(&g, &k);
    assert_eq!(reduced.len(), 2);
    assert!((reduced[0] + r2).abs() < 1e-12 && (reduced[1] - r2).abs() < 1e-12);
    assert_eq!(explicit_nonzero_spectrum(&g, &k).len(), 2);
}

#[test]
fn forty_point_uniform_part_count() {
    let g = random_graph(40, 0.3, 1, false);
    let params = RegularityParams::practical(0.1, 2);
    let p = regularity_pipeline(&g, &params).unwrap();
    assert!(p.q() >= 2);
    assert!(p.q() <= p.diagnostics.part_bound);
    check_postconditions(&g, &params).unwrap();
}

#[test]
fn random_graph_mostly_regular() {
    let g = random_graph(60, 0.5, 7, false);
    let p = regularity_pipeline(&g, &RegularityParams::practical(0.2, 2)).unwrap();
    let eps = 0.25;
    let q = p.q();
    let mut failing = 0;
    for i in 1..=q {
        for j in i + 1..=q {
            let v = regularity_test(&g, &p.parts[i], &p.parts[j], eps, 200, 7, (i * q + j) as u64).unwrap();
            if !v.is_regular() {
                failing += 1;
            }
        }
    }
    assert!(
        failing as f64 <= eps * (q * q) as f64,
        "{failing} failing pairs with q = {q}"
    );
}

#[test]
fn theory_mode_rejects_heavy_atoms() {
    let g = random_graph(24, 0.4, 3, true);
    let params = RegularityParams::theory(0.2, 2);
    assert_eq!(params.mode, Mode::Theory);
    assert!(matches!(regularity_pipeline(&g, &params), Err(Error::HeavyAtom { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reduced_matches_explicit_blowup(seed in 0u64..10_000, n in 2usize..6, extra in prop::collection::vec(0u64..3, 6)) {
        let g = random_graph(n, 0.5, seed, false);
        let k: Vec<u64> = (0..n).map(|i| 1 + extra[i]).collect();
        let a = explicit_nonzero_spectrum(&g, &k);
        let b = reduced_nonzero_spectrum(&g, &k);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn partition_postconditions(seed in 0u64..10_000, n in 4usize..30, p in 0.0f64..1.0, eps in 0.05f64..0.249, weighted in any::<bool>()) {
        let g = random_graph(n, p, seed, weighted);
        let params = RegularityParams { seed, ..RegularityParams::practical(eps, 2) };
        prop_assert_eq!(check_postconditions(&g, &params), Ok(()));
    }
}
