mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use topocf::characteristics::{compute_vector, gini, node_clustering, CharacteristicsConfig};
use topocf::explain::{fit_ols, DesignMatrix};
use topocf::graph::{ingest, project, BipartiteGraph, Partition};
use topocf::recommenders::split_dataset;
use topocf::sampling::{edge_dropout, edge_dropout_count, node_dropout, node_dropout_count, SamplingPlan};
use topocf::seed::rng_from_seed;
use topocf::Error;

fn graph(seed: u64, max_nodes: usize) -> BipartiteGraph {
    common::random_graph(&mut rng_from_seed(seed), max_nodes)
}

fn edge_ids(g: &BipartiteGraph) -> BTreeSet<(String, String)> {
    g.edges()
        .map(|(u, i)| (g.user_id(u as usize).to_string(), g.item_id(i as usize).to_string()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_matches_pairwise_intersections(seed in any::<u64>()) {
        let g = graph(seed, 60);
        for part in [Partition::User, Partition::Item] {
            let p = project(&g, part, usize::MAX).unwrap();
            let got: Vec<_> = p.edges.iter().map(|&(v, w, c)| ((v, w), c)).collect();
            let want: Vec<_> = common::projection_pairs(&g, part).into_iter().collect();
            prop_assert_eq!(&got, &want);
            let mut deg = vec![0u32; g.count(part)];
            for &((v, w), _) in &want {
                deg[v as usize] += 1;
                deg[w as usize] += 1;
            }
            prop_assert_eq!(&p.degrees, &deg);
        }
    }

    #[test]
    fn gini_is_bounded_and_order_free(mut x in prop::collection::vec(0usize..50, 1..40), seed in any::<u64>()) {
        let g0 = gini(&x);
        prop_assert!((0.0..1.0).contains(&g0) || x.iter().all(|&v| v == 0));
        prop_assert!((g0 - common::gini_pairs(&x)).abs() < 1e-12);
        use rand::seq::SliceRandom;
        x.shuffle(&mut rng_from_seed(seed));
        prop_assert_eq!(gini(&x).to_bits(), g0.to_bits());
    }

    #[test]
    fn clustering_values_are_fractions(seed in any::<u64>()) {
        let g = graph(seed, 50);
        for part in [Partition::User, Partition::Item] {
            for c in node_clustering(&g, part).into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn tsv_round_trip_preserves_characteristics(seed in any::<u64>()) {
        // isolated nodes do not survive a log, so start from a logged graph
        let g = ingest(&graph(seed, 40).to_tsv()).unwrap();
        let back = ingest(&g.to_tsv()).unwrap();
        prop_assert_eq!(back.to_tsv(), g.to_tsv());
        let cfg = CharacteristicsConfig::default();
        let (a, b) = (compute_vector(&g, &cfg).unwrap(), compute_vector(&back, &cfg).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
    }

    #[test]
    fn edge_dropout_keeps_the_exact_count(seed in any::<u64>(), mu in 0.0f64..0.95) {
        let g = graph(seed, 60);
        let want = edge_dropout_count(&g, mu);
        match edge_dropout(&g, mu, &mut rng_from_seed(seed ^ 1)) {
            Ok(s) => {
                prop_assert_eq!(s.num_edges(), want);
                prop_assert!(edge_ids(&s).is_subset(&edge_ids(&g)));
            }
            Err(_) => prop_assert_eq!(want, 0),
        }
    }

    #[test]
    fn node_dropout_is_an_induced_subgraph(seed in any::<u64>(), mu in 0.0f64..0.95) {
        let g = graph(seed, 60);
        if let Ok(s) = node_dropout(&g, mu, &mut rng_from_seed(seed ^ 2)) {
            prop_assert!(s.num_users() + s.num_items() <= node_dropout_count(&g, mu));
            let users: BTreeSet<&str> = (0..s.num_users()).map(|u| s.user_id(u)).collect();
            let items: BTreeSet<&str> = (0..s.num_items()).map(|i| s.item_id(i)).collect();
            // every original edge between kept nodes survives
            let induced = edge_ids(&g)
                .into_iter()
                .filter(|(u, i)| users.contains(u.as_str()) && items.contains(i.as_str()))
                .collect::<BTreeSet<_>>();
            prop_assert_eq!(edge_ids(&s), induced);
            prop_assert!((0..s.num_users()).all(|u| s.user_degree(u) > 0));
            prop_assert!((0..s.num_items()).all(|i| s.item_degree(i) > 0));
        }
    }

    #[test]
    fn a_sample_does_not_depend_on_its_pool(seed in any::<u64>(), id in 0u64..50) {
        let g = graph(seed, 80);
        let large = SamplingPlan::new(60, seed);
        let mut alone = SamplingPlan::new(1, seed);
        alone.first_id = id;
        let a = alone.sample_one(&g, id);
        let b = large.sample_one(&g, id);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.spec.seed, b.spec.seed);
                prop_assert_eq!(a.graph.to_tsv(), b.graph.to_tsv());
                prop_assert_eq!(a.spec.mu.to_bits(), b.spec.mu.to_bits());
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "outcome differs between pools"),
        }
    }

    #[test]
    fn split_partitions_the_edges(seed in any::<u64>()) {
        let g = graph(seed, 80);
        prop_assume!(g.num_edges() >= 10);
        let s = match split_dataset(&g, &mut rng_from_seed(seed)) {
            Ok(s) => s,
            // every held-out edge was cold-start
            Err(Error::EmptyTestSet) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let all: BTreeSet<(u32, u32)> = g.edges().collect();
        let train: BTreeSet<(u32, u32)> = s.train.edges().collect();
        let valid: BTreeSet<(u32, u32)> = s.valid_edges.iter().copied().collect();
        let test: BTreeSet<(u32, u32)> = s.test_edges.iter().copied().collect();
        prop_assert_eq!(train.len() + valid.len() + test.len(), all.len());
        let union: BTreeSet<_> = train.iter().chain(&valid).chain(&test).copied().collect();
        prop_assert_eq!(union, all);
        let e = g.num_edges() as f64;
        prop_assert_eq!(test.len(), (e * 0.2 + 0.5).floor() as usize);
        prop_assert_eq!(s.train.num_users(), g.num_users());
        prop_assert_eq!(s.train.num_items(), g.num_items());
        for u in s.evaluated_users() {
            prop_assert!(s.train.user_degree(u) > 0);
            for &i in &s.test_by_user[u] {
                prop_assert!(s.train.item_degree(i as usize) > 0);
            }
        }
    }

    #[test]
    fn ols_solves_the_normal_equations(seed in any::<u64>(), m in 15usize..60, c in 1usize..6) {
        let mut rng = rng_from_seed(seed);
        let x: Vec<Vec<f64>> = (0..m).map(|_| (0..c).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let y: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let names = (0..c).map(|j| format!("x{j}")).collect();
        let d = DesignMatrix::from_rows(names, x.clone(), (0..m as u64).collect(), false).unwrap();
        let fit = fit_ols(&d, &y).unwrap();
        let want = common::normal_equations(&x, &y);
        prop_assert!((fit.intercept.estimate - want[0]).abs() < 1e-8);
        for (row, w) in fit.coefficients.iter().zip(&want[1..]) {
            prop_assert!((row.estimate - w).abs() < 1e-8);
        }
        // residuals are orthogonal to the intercept and every column
        let scale: f64 = y.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        prop_assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-9 * scale);
        for j in 0..c {
            let dot: f64 = fit.residuals.iter().zip(&x).map(|(e, r)| e * r[j]).sum();
            prop_assert!(dot.abs() < 1e-9 * scale);
        }
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fit.r2));
    }
}
