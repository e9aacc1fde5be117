use std::collections::BTreeMap;

use approx::assert_relative_eq;
use logmesh_core::digcn::{ModelConfig, PropagationOperators, Readout};
use logmesh_core::drain::{DrainConfig, DrainTree, TemplateCatalog, WILDCARD};
use logmesh_core::eval::metrics::{average_precision, roc_auc};
use logmesh_core::explain::importance_from_nodes;
use logmesh_core::graph::{build_graph, LogGraph};
use logmesh_core::grouping::{group_by_identifier, Label, LogGroup, LogRecord};
use logmesh_core::semantics::{embed_template, onehot_table, tfidf, WordVectorTable};
use logmesh_core::svdd::OneClassModel;
use logmesh_core::Matrix;
use proptest::prelude::*;

fn digraph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
    (1usize..=7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n, 1u64..5), 0..=2 * n * n).prop_map(|mut e| {
                e.sort_unstable_by_key(|&(i, j, _)| (i, j));
                e.dedup_by_key(|&mut (i, j, _)| (i, j));
                e
            }),
        )
    })
}

fn graph_from(n: usize, edges: &[(usize, usize, u64)], d: usize, salt: u64) -> LogGraph {
    let x = Matrix::from_fn(n, d, |i, c| ((i * 7 + c * 3) as u64 ^ salt) as f64 % 5.0 / 5.0 - 0.3);
    LogGraph::from_parts("g".into(), Label::Normal, (0..n).collect(), edges, x).unwrap()
}

fn group(seq: &[usize]) -> LogGroup {
    LogGroup {
        group_key: "g".into(),
        label: Label::Unknown,
        records: seq
            .iter()
            .enumerate()
            .map(|(i, &t)| LogRecord {
                line_no: i as u64,
                timestamp: String::new(),
                identifier: "g".into(),
                template_id: t,
                content: Vec::new(),
            })
            .collect(),
    }
}

fn pairs_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                total += 1.0;
                wins += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / total
}

fn scored_set() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..6, any::<bool>()), 2..14)
        .prop_map(|v| v.into_iter().map(|(s, l)| (s as f64 / 2.0, l)).unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn operators_are_well_formed((n, edges) in digraph(), alpha in 0.05f64..0.5) {
        let g = graph_from(n, &edges, 1, 0);
        let ops = PropagationOperators::new(&g.adjacency(), &g.weights, alpha, 2).unwrap();
        for s in ops.p1.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        prop_assert!(ops.ppr_residual < 1e-10);
        prop_assert!((ops.pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(ops.pi.iter().all(|&p| p >= alpha / n as f64 - 1e-12));
        prop_assert!(ops.psi.max_abs_diff(&ops.psi.transpose()) < 1e-9);
        let phi = ops.phi.unwrap();
        prop_assert!(phi.max_abs_diff(&phi.transpose()) < 1e-12);
    }

    #[test]
    fn score_is_permutation_invariant(
        (n, edges) in digraph(),
        order in 1usize..=2,
        perm_seed in any::<u64>(),
        readout in prop_oneof![Just(Readout::Mean), Just(Readout::Sum), Just(Readout::Max)],
    ) {
        let g = graph_from(n, &edges, 3, perm_seed & 7);
        let config = ModelConfig { hidden: 5, order, readout, ..ModelConfig::default() };
        let mut model = OneClassModel::new(config, 3, 4).unwrap();
        model.center = vec![0.1; 5];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = model.score(&g).unwrap();
        let b = model.score(&g.permuted(&perm)).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn graph_edges_are_bigram_counts(seq in prop::collection::vec(0usize..6, 1..40)) {
        let g = build_graph(&group(&seq), &onehot_table(6)).unwrap();
        let mut bigrams: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for w in seq.windows(2) {
            *bigrams.entry((w[0], w[1])).or_default() += 1;
        }
        let edges: BTreeMap<(usize, usize), u64> = g
            .edges()
            .into_iter()
            .map(|(i, j, w)| ((g.node_templates[i], g.node_templates[j]), w))
            .collect();
        prop_assert_eq!(edges, bigrams);
        prop_assert_eq!(g.total_weight(), (seq.len() - 1) as f64);
        let mut distinct = seq.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert_eq!(g.n_nodes(), distinct.len());
    }

    #[test]
    fn drain_templates_cover_their_lines(
        lines in prop::collection::vec(prop::collection::vec(prop_oneof!["[a-d]", "[0-9]{1,2}"], 1..6), 1..30)
    ) {
        let run = || {
            let mut tree = DrainTree::new(DrainConfig::default());
            let mut catalog = TemplateCatalog::new();
            let ids: Vec<usize> = lines
                .iter()
                .map(|l| {
                    let tokens: Vec<String> = l.iter().map(|s| s.to_string()).collect();
                    tree.insert(&tokens, &mut catalog)
                })
                .collect();
            (ids, catalog)
        };
        let (ids, catalog) = run();
        let (ids2, catalog2) = run();
        prop_assert_eq!(&ids, &ids2);
        prop_assert_eq!(catalog.token_lists(), catalog2.token_lists());
        // each line's final template still matches it position by position
        for (line, &id) in lines.iter().zip(&ids) {
            let t = &catalog.get(id).unwrap().tokens;
            prop_assert_eq!(t.len(), line.len());
            prop_assert!(t.iter().zip(line).all(|(a, b)| a == WILDCARD || a == b));
        }
        let total: u64 = catalog.templates().iter().map(|t| t.count).sum();
        prop_assert_eq!(total, lines.len() as u64);
    }

    #[test]
    fn grouping_partitions_records(ids in prop::collection::vec(0u8..5, 1..60)) {
        let records: Vec<LogRecord> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| LogRecord {
                line_no: i as u64,
                timestamp: String::new(),
                identifier: format!("blk_{id}"),
                template_id: i % 3,
                content: Vec::new(),
            })
            .collect();
        let groups = group_by_identifier(&records).unwrap();
        let mut lines: Vec<u64> = groups.iter().flat_map(|g| g.records.iter().map(|r| r.line_no)).collect();
        lines.sort_unstable();
        prop_assert_eq!(lines, (0..ids.len() as u64).collect::<Vec<_>>());
        for g in &groups {
            prop_assert!(g.records.windows(2).all(|w| w[0].line_no < w[1].line_no));
            prop_assert!(g.records.iter().all(|r| r.identifier == g.group_key));
        }
        let firsts: Vec<u64> = groups.iter().map(|g| g.records[0].line_no).collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn template_embedding_is_linear_in_weights(
        docs in prop::collection::vec(prop::collection::vec("[a-e]", 1..6), 2..6),
        c in 0.1f64..10.0,
    ) {
        let mut table = WordVectorTable::new(3);
        for (k, w) in ["a", "b", "c", "d"].iter().enumerate() {
            table.insert(w.to_string(), vec![k as f64, 1.0, -(k as f64) / 2.0]).unwrap();
        }
        for weights in tfidf(&docs).unwrap() {
            let scaled: BTreeMap<String, f64> = weights.iter().map(|(w, v)| (w.clone(), c * v)).collect();
            let a = embed_template(&weights, &table);
            let b = embed_template(&scaled, &table);
            for (x, y) in a.iter().zip(&b) {
                assert_relative_eq!(c * x, *y, epsilon = 1e-12, max_relative = 1e-12);
            }
            for (w, v) in &weights {
                prop_assert!(*v >= 0.0 && v.is_finite(), "{w}");
            }
        }
    }

    #[test]
    fn auc_matches_pair_counting((scores, labels) in scored_set()) {
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let auc = roc_auc(&scores, &labels).unwrap();
        prop_assert!((auc - pairs_auc(&scores, &labels)).abs() < 1e-12);
        let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert!((roc_auc(&squashed, &labels).unwrap() - auc).abs() < 1e-12);
    }

    #[test]
    fn ap_is_at_least_the_worst_ranking((scores, labels) in scored_set()) {
        let p = labels.iter().filter(|&&l| l).count();
        prop_assume!(p > 0);
        let n = labels.len();
        let ap = average_precision(&scores, &labels).unwrap();
        // every positive ranked behind every negative
        let worst: f64 = (1..=p).map(|i| i as f64 / (n - p + i) as f64).sum::<f64>() / p as f64;
        prop_assert!(ap >= worst - 1e-12 && ap <= 1.0 + 1e-12);
    }

    #[test]
    fn importance_follows_permutation_and_scaling(
        rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 2..6),
        c in 0.2f64..5.0,
    ) {
        let n = rows.len();
        let nodes = Matrix::from_rows(&rows).unwrap();
        let center = [0.3, -0.1, 0.2];
        let Ok(base) = importance_from_nodes(&nodes, &center, Readout::Mean) else {
            return Ok(());
        };
        let rev: Vec<usize> = (0..n).rev().collect();
        let permuted = Matrix::from_fn(n, 3, |i, k| nodes[(rev[i], k)]);
        let p = importance_from_nodes(&permuted, &center, Readout::Mean).unwrap();
        for i in 0..n {
            prop_assert!((p[i] - base[rev[i]]).abs() < 1e-9);
        }
        let scaled = Matrix::from_fn(n, 3, |i, k| center[k] + c * (nodes[(i, k)] - center[k]));
        let s = importance_from_nodes(&scaled, &center, Readout::Mean).unwrap();
        for i in 0..n {
            prop_assert!((s[i] - base[i]).abs() < 1e-9);
        }
    }
}
