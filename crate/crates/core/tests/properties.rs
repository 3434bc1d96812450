use std::collections::BTreeMap;

use etngen::bucket::{Bucketing, Periodicity};
use etngen::dynamics::{coverage_distribution, DynConfig, StartPolicy};
use etngen::etn::{extract_etn, mine_counts, prefix_of};
use etngen::metrics::distance::{emd, js_divergence, kl_divergence, ks_distance};
use etngen::metrics::louvain::{louvain, modularity};
use etngen::metrics::snapshot_metrics;
use etngen::metrics::static_graph::StaticGraph;
use etngen::model::LocalModel;
use etngen::tempgraph::{aggregate, hour_slices, normalize, parse_edge_list, write_edge_list, Edge, TemporalGraph};
use proptest::prelude::*;

fn layers(max_n: usize, max_m: usize) -> impl Strategy<Value = (usize, Vec<Vec<Edge>>)> {
    (2..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        let edge = (0..n as u32, 0..n as u32).prop_filter_map("self-loop", |(a, b)| (a != b).then(|| normalize(a, b)));
        (Just(n), prop::collection::vec(prop::collection::vec(edge, 0..=2 * n), m))
    })
}

fn graph(max_n: usize, max_m: usize, gap: u64) -> impl Strategy<Value = TemporalGraph> {
    layers(max_n, max_m).prop_map(move |(n, l)| TemporalGraph::from_layers(n, &l, gap, 0).unwrap())
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn write_then_parse_is_identity(g in graph(12, 10, 300)) {
        prop_assume!(g.total_edges() > 0);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let (back, _) = parse_edge_list(buf.as_slice(), g.gap()).unwrap();
        prop_assert_eq!(back.node_count(), g.node_count());
        prop_assert_eq!(back.gap(), g.gap());
        prop_assert_eq!(back.len(), g.len());
        for t in 0..g.len() {
            prop_assert_eq!(back.snapshot(t).edges(), g.snapshot(t).edges());
        }
    }

    #[test]
    fn aggregation_conserves_weight(g in graph(12, 10, 300)) {
        let agg = aggregate(&g);
        prop_assert_eq!(agg.total_weight(), g.total_edges() as u64);
        prop_assert!(agg.edge_count() <= g.total_edges());
    }

    #[test]
    fn hour_slices_partition_the_events(g in graph(10, 40, 600)) {
        let slices = hour_slices(&g).unwrap();
        prop_assert_eq!(slices.len(), g.len().div_ceil(6));
        prop_assert_eq!(slices.iter().map(|s| s.total_weight()).sum::<u64>(), g.total_edges() as u64);
    }

    #[test]
    fn neighborhoods_ignore_labels(g in graph(9, 5, 300), shift in 1u32..8) {
        let n = g.node_count() as u32;
        let relabel = |v: u32| (v + shift) % n;
        let permuted: Vec<Vec<Edge>> = g
            .snapshots()
            .iter()
            .map(|s| s.edges().iter().map(|&(a, b)| normalize(relabel(a), relabel(b))).collect())
            .collect();
        let h = TemporalGraph::from_layers(g.node_count(), &permuted, 300, 0).unwrap();
        let width = g.len().min(3);
        for ego in 0..n {
            let t = g.len() - 1;
            prop_assert_eq!(extract_etn(&g, ego, t, width).unwrap(), extract_etn(&h, relabel(ego), t, width).unwrap());
        }
    }

    #[test]
    fn prefix_is_the_shorter_window(g in graph(9, 6, 300)) {
        prop_assume!(g.len() >= 2);
        for ego in 0..g.node_count() as u32 {
            for t in 1..g.len() {
                for width in 2..=(t + 1).min(3) {
                    let full = extract_etn(&g, ego, t, width).unwrap();
                    prop_assert_eq!(prefix_of(&full), extract_etn(&g, ego, t - 1, width - 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn every_ego_window_is_counted(g in graph(10, 8, 300), k in 1usize..=3) {
        let counts = mine_counts(&g, k, &Bucketing::for_graph(&g, Periodicity::Daily)).unwrap();
        for depth in 1..=k {
            let windows = g.len().saturating_sub(depth);
            prop_assert_eq!(counts.depth_total(depth), (g.node_count() * windows) as u64);
        }
    }

    #[test]
    fn extension_distributions_are_normalised(g in graph(10, 8, 300)) {
        prop_assume!(g.total_edges() > 0 && g.len() >= 3);
        let model = LocalModel::train(&g, 2, Periodicity::Daily).unwrap();
        for dist in model.tables().values().chain(model.global_tables().values()) {
            let total: f64 = dist.probabilities().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ks_and_js_are_symmetric(a in sample(), b in sample()) {
        prop_assert_eq!(ks_distance(&a, &b).unwrap(), ks_distance(&b, &a).unwrap());
        let (ab, ba) = (js_divergence(&a, &b).unwrap(), js_divergence(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=std::f64::consts::LN_2).contains(&ab));
        let ks = ks_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ks));
    }

    #[test]
    fn self_divergence_vanishes(a in sample()) {
        prop_assert!(kl_divergence(&a, &a).unwrap().abs() < 1e-12);
        prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(emd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn emd_is_a_metric(a in sample(), b in sample(), c in sample()) {
        let (ab, bc, ac) = (emd(&a, &b).unwrap(), emd(&b, &c).unwrap(), emd(&a, &c).unwrap());
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!((ab - emd(&b, &a).unwrap()).abs() < 1e-9);
        let shifted: Vec<f64> = a.iter().map(|x| x + 3.0).collect();
        prop_assert!((emd(&a, &shifted).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn snapshot_metric_identities(g in graph(12, 10, 300)) {
        let m = snapshot_metrics(&g);
        let n = g.node_count() as f64;
        for (t, s) in g.snapshots().iter().enumerate() {
            prop_assert!((m.density[t] - s.edge_count() as f64 / (n * (n - 1.0) / 2.0)).abs() < 1e-12);
            prop_assert!(m.interacting_individuals[t] <= n);
        }
        for t in 1..g.len() {
            prop_assert!(m.new_conversations[t - 1] <= g.snapshot(t).edge_count() as f64);
        }
    }

    #[test]
    fn louvain_beats_singletons(g in graph(14, 4, 300)) {
        let sg = StaticGraph::from_aggregate(&aggregate(&g));
        let singletons: Vec<usize> = (0..sg.len()).collect();
        prop_assert!(modularity(&sg, &louvain(&sg)) >= modularity(&sg, &singletons) - 1e-12);
    }

    #[test]
    fn walk_coverage_is_bounded(g in graph(10, 12, 300), seed in 0u64..1000) {
        let cfg = DynConfig { start: StartPolicy::Half, rw_runs: 20, seed, ..DynConfig::default() };
        let steps = g.len() - g.len() / 2;
        let bound = g.node_count().min(steps + 1) as f64;
        for c in coverage_distribution(&g, &cfg).unwrap() {
            prop_assert!((1.0..=bound).contains(&c));
        }
    }
}

#[test]
fn counts_agree_with_direct_extraction() {
    let g = TemporalGraph::from_layers(4, &[vec![(0, 1)], vec![(0, 1), (1, 2)], vec![(2, 3)], vec![]], 300, 0).unwrap();
    let counts = mine_counts(&g, 2, &Bucketing::for_graph(&g, Periodicity::Daily)).unwrap();
    let mut direct: BTreeMap<_, u64> = BTreeMap::new();
    for t in 2..g.len() {
        for ego in 0..4 {
            *direct.entry(extract_etn(&g, ego, t, 3).unwrap()).or_default() += 1;
        }
    }
    assert_eq!(counts.at_depth(2), direct);
}
