use std::collections::BTreeSet;

use num_traits::One;
use proptest::prelude::*;

use peoplefinder_core::eval::{
    compare_runs, macro_average, per_topic_precision, precision_at_k, Grade, MacroTable, Qrels,
    RunEntry, RunFile, Topic, Topics,
};
use peoplefinder_core::evidence::{propagate_from_seeds, PropagationConfig};
use peoplefinder_core::graph::{GraphBuilder, WebGraph};
use peoplefinder_core::urls::DirectionClass;
use peoplefinder_core::Exact;

fn graph_strategy() -> impl Strategy<Value = (WebGraph, Vec<String>)> {
    (2usize..=10)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec((0..n, 0..n, any::<bool>()), 0..25),
                prop::collection::btree_set(0..n, 1..=2),
            )
        })
        .prop_map(|(n, edges, seeds)| {
            let url = |i: usize| format!("http://h.example/{i}");
            let mut b = GraphBuilder::new();
            for i in 0..n {
                b.add_node(url(i));
            }
            for (s, d, down) in edges {
                let class = if down { DirectionClass::DownOrSame } else { DirectionClass::UpOrAway };
                b.add_classified_edge(url(s), url(d), class);
            }
            (b.build(), seeds.into_iter().map(url).collect())
        })
}

fn exact_cfg(down: (i64, i64), up: (i64, i64), floor: (i64, i64)) -> PropagationConfig<Exact> {
    PropagationConfig {
        down_same_factor: Exact::new(down.0, down.1),
        up_away_factor: Exact::new(up.0, up.1),
        weight_floor: Exact::new(floor.0, floor.1),
    }
}

proptest! {
    #[test]
    fn weights_lie_in_floor_to_one((g, seeds) in graph_strategy()) {
        let cfg = PropagationConfig::<Exact>::default();
        let p = propagate_from_seeds(&g, &seeds, &cfg);
        for s in &seeds {
            prop_assert_eq!(p.reached[s].weight, Exact::one());
        }
        for r in p.reached.values() {
            prop_assert!(r.weight >= cfg.weight_floor && r.weight <= Exact::one());
            prop_assert!(seeds.contains(&r.origin));
        }
    }

    #[test]
    fn larger_factors_never_lower_weights((g, seeds) in graph_strategy()) {
        let low = propagate_from_seeds(&g, &seeds, &exact_cfg((1, 2), (1, 10), (1, 1000)));
        let high = propagate_from_seeds(&g, &seeds, &exact_cfg((3, 4), (1, 5), (1, 1000)));
        for (url, r) in &low.reached {
            prop_assert!(high.reached[url].weight >= r.weight);
        }
    }

    #[test]
    fn raising_the_floor_only_drops_pages((g, seeds) in graph_strategy()) {
        let loose = propagate_from_seeds(&g, &seeds, &exact_cfg((1, 2), (1, 10), (1, 1000)));
        let tight = propagate_from_seeds(&g, &seeds, &exact_cfg((1, 2), (1, 10), (1, 20)));
        for (url, r) in &tight.reached {
            prop_assert_eq!(&loose.reached[url].weight, &r.weight);
        }
        for (url, r) in &loose.reached {
            prop_assert_eq!(tight.reached.contains_key(url), r.weight >= Exact::new(1, 20));
        }
    }

    #[test]
    fn adding_an_edge_never_lowers_weights((g, seeds) in graph_strategy(), s in 0usize..10, d in 0usize..10) {
        let cfg = PropagationConfig::<Exact>::default();
        let before = propagate_from_seeds(&g, &seeds, &cfg);
        let mut b = GraphBuilder::new();
        for n in g.nodes() {
            b.add_node(n.to_string());
        }
        for (x, y, c) in g.edges() {
            b.add_classified_edge(x, y, c);
        }
        let n = g.node_count();
        prop_assume!(g.edge_class(g.url(s % n), g.url(d % n)).is_none());
        b.add_classified_edge(g.url(s % n), g.url(d % n), DirectionClass::UpOrAway);
        let after = propagate_from_seeds(&b.build(), &seeds, &cfg);
        for (url, r) in &before.reached {
            prop_assert!(after.reached[url].weight >= r.weight);
        }
    }
}

fn topics(n: usize) -> Topics {
    Topics(
        (0..n)
            .map(|i| Topic {
                topic_id: format!("t{i}"),
                query_text: format!("q{i}"),
            })
            .collect(),
    )
}

fn grade(i: u8) -> Grade {
    Grade::ALL[i as usize % 4]
}

fn fixture() -> impl Strategy<Value = (Qrels, RunFile, Topics)> {
    (1usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(any::<u8>(), 0..6), n),
            prop::collection::vec(prop::collection::vec(0u8..8, 0..12), n),
        )
            .prop_map(move |(judged, ranked)| {
                let mut q = Qrels::default();
                let mut run = RunFile::new("r");
                for (t, grades) in judged.iter().enumerate() {
                    for (p, g) in grades.iter().enumerate() {
                        q.insert(&format!("t{t}"), &format!("p{p}"), grade(*g)).unwrap();
                    }
                }
                for (t, people) in ranked.iter().enumerate() {
                    let mut seen = BTreeSet::new();
                    let entries: Vec<RunEntry> = people
                        .iter()
                        .filter(|p| seen.insert(**p))
                        .enumerate()
                        .map(|(i, p)| RunEntry {
                            person_id: format!("p{p}"),
                            score: 100.0 - i as f64,
                        })
                        .collect();
                    run.topics.insert(format!("t{t}"), entries);
                }
                (q, run, topics(n))
            })
    })
}

proptest! {
    #[test]
    fn precision_times_k_is_a_count((q, run, ts) in fixture(), k in 1usize..12) {
        for t in ts.iter() {
            let p: Exact = precision_at_k(&run.ranked(&t.topic_id), q.pool(&t.topic_id), k);
            let count = p * Exact::from_integer(k as i64);
            prop_assert!(count.is_integer());
            prop_assert!(*count.numer() >= 0 && *count.numer() <= k as i64);
        }
    }

    #[test]
    fn macro_average_ignores_topic_order((q, run, ts) in fixture(), rot in 0usize..8) {
        let mut rotated = ts.0.clone();
        let len = rotated.len();
        rotated.rotate_left(rot % len);
        rotated.reverse();
        let a: MacroTable<Exact> = macro_average(&run, &q, &ts, &[1, 3, 5, 10]);
        let b: MacroTable<Exact> = macro_average(&run, &q, &Topics(rotated), &[1, 3, 5, 10]);
        prop_assert_eq!(a.means, b.means);
    }

    #[test]
    fn comparing_a_run_with_itself((q, run, ts) in fixture(), k in 1usize..11) {
        prop_assume!(ts.len() >= 2);
        let cell = compare_runs(&run, &run, &q, &ts, k).unwrap();
        prop_assert_eq!(cell.ttest.p_value, 1.0);
        let text = cell.to_string();
        prop_assert!(text == "0/0 0%" || text == "0/0 n/a", "{}", text);
        let values: Vec<f64> = per_topic_precision(&run, &q, &ts, k);
        prop_assert_eq!(text == "0/0 n/a", values.iter().all(|v| *v == 0.0));
    }
}
