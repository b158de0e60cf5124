//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ndarray::{array, Array1, Array2};
use nifflow_core::{
    apply_prune_mask, attribution_matrix, betweenness, build_nif_graph, detect_communities,
    forward, ks_two_sample, ksg_mi, pmi_per_sample, predict_accuracy, prune_sweep, Activation,
    EdgeLengthMode, EstimatorConfig, FlowMode, Layer, ModelGraph, NifGraph, PruneSchedule, Shape,
    UnitRef, WeightedGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn estimator_accuracy() -> Check {
    let start = Instant::now();
    let cfg = EstimatorConfig::default();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for rho in [0.0f64, 0.3, 0.6, 0.9] {
        let mut total = 0.0;
        for seed in 0..10 {
            let (x, y) = common::gaussian_pair(rho, 2000, seed);
            total += ksg_mi(x.view(), y.view(), &cfg)
                .map_err(|e| e.to_string())?
                .value;
        }
        let err = total / 10.0 + 0.5 * (1.0 - rho * rho).ln();
        worst = worst.max(err.abs());
        parts.push(format!("rho={rho}: {err:+.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst <= 0.1 && secs < 10.0,
        format!(
            "errors [{}] (max {worst:.4} <= 0.1), {secs:.2}s < 10s",
            parts.join(", ")
        ),
    )
}

fn random_mi_dataset(seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(20..250);
    let dims = rng.random_range(1..=3);
    let style = seed % 4;
    let x = Array2::from_shape_fn((n, dims), |_| match style {
        0 => rng.random_range(-1.0..1.0),
        1 => rng.random_range(0..3) as f64,
        2 => rng.random_range(-1.0..1.0f64).max(0.0),
        _ => (rng.random_range(-2.0..2.0f64) * 4.0).round() / 4.0,
    });
    let y: Array1<f64> = x
        .rows()
        .into_iter()
        .map(|r| match style {
            1 => (r.sum() as i64 % 2) as f64,
            _ => r.sum() + rng.random_range(-0.5..0.5),
        })
        .collect();
    (x, y)
}

fn pmi_identity() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (x, y) = random_mi_dataset(seed);
        let cfg = EstimatorConfig {
            k: 1 + (seed as usize % 7),
            ..EstimatorConfig::default()
        };
        let est = ksg_mi(x.view(), y.view(), &cfg).map_err(|e| e.to_string())?;
        let n = y.len();
        let mut sum = 0.0;
        for i in 0..n {
            sum += pmi_per_sample(x.view(), y.view(), i, &cfg).map_err(|e| e.to_string())?;
        }
        worst = worst.max((sum / n as f64 - est.value).abs());
    }
    ensure(
        worst <= 1e-9,
        format!("100 datasets, max |mean PMI - MI| = {worst:.2e} <= 1e-9"),
    )
}

fn attribution_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.random_range(2..=4);
        let sizes: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=5)).collect();
        let weights = common::random_layer_weights(&mut rng, &sizes);
        let graph = NifGraph::from_layer_weights(
            &weights,
            FlowMode::MeanMi,
            EstimatorConfig::default(),
            "t",
        )
        .map_err(|e| e.to_string())?;
        let got = attribution_matrix(&graph)
            .map_err(|e| e.to_string())?
            .values;
        let want = common::path_enumeration(&weights, false);
        for (a, b) in got.iter().zip(want.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(
        worst <= 1e-12,
        format!("200 graphs up to 4 layers x 5 units, max diff {worst:.2e} <= 1e-12"),
    )
}

fn betweenness_oracle() -> Check {
    let (mut unit_worst, mut weighted_worst): (f64, f64) = (0.0, 0.0);
    let mut graphs = 0;
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=8);
        let directed = seed % 2 == 0;
        let tied = seed % 3 == 0;
        let p = rng.random_range(0.2..0.7);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && (directed || u < v) && rng.random_bool(p) {
                    let w = if tied {
                        [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)]
                    } else {
                        rng.random_range(0.05..3.0)
                    };
                    edges.push((u, v, w));
                }
            }
        }
        let mut g = if directed {
            WeightedGraph::directed(n)
        } else {
            WeightedGraph::undirected(n)
        };
        for &(u, v, w) in &edges {
            g.add_edge(u, v, w);
        }
        let live: Vec<_> = edges.iter().filter(|e| e.2 > 0.0).collect();
        let unit_edges: Vec<_> = live.iter().map(|&&(u, v, _)| (u, v, 1.0)).collect();
        let len_edges: Vec<_> = live.iter().map(|&&(u, v, w)| (u, v, 1.0 / w)).collect();
        let unit = betweenness(&g, EdgeLengthMode::Unit).scores;
        let weighted = betweenness(&g, EdgeLengthMode::InverseWeight).scores;
        let unit_want = common::brute_betweenness(n, &unit_edges, directed, 0.0);
        let weighted_want = common::brute_betweenness(n, &len_edges, directed, 1e-12);
        for v in 0..n {
            unit_worst = unit_worst.max((unit[v] - unit_want[v]).abs());
            weighted_worst = weighted_worst.max((weighted[v] - weighted_want[v]).abs());
        }
        graphs += 1;
    }
    ensure(
        unit_worst <= 1e-12 && weighted_worst <= 1e-9,
        format!(
            "{graphs} graphs <= 8 nodes, unit-length max diff {unit_worst:.2e} (<= 1e-12, float summation), weighted {weighted_worst:.2e} <= 1e-9"
        ),
    )
}

fn communities() -> Check {
    let edges = common::two_triangles();
    let mut g = WeightedGraph::undirected(6);
    for &(u, v, w) in &edges {
        g.add_edge(u, v, w);
    }
    let best = common::all_partitions(6)
        .iter()
        .map(|p| common::dense_modularity(6, &edges, p, 1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut worst_gap: f64 = 0.0;
    for seed in 0..10 {
        let found = detect_communities(&g, 1.0, seed).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(best - found.modularity);
    }
    let coarse = detect_communities(&g, 1.0, 0)
        .map_err(|e| e.to_string())?
        .community_count();
    let fine = detect_communities(&g, 0.2, 0)
        .map_err(|e| e.to_string())?
        .community_count();
    ensure(
        worst_gap <= 1e-12 && fine >= coarse,
        format!(
            "exhaustive max Q = {best:.6} over 203 partitions, largest shortfall {worst_gap:.2e}; communities at gamma=0.2: {fine} >= gamma=1: {coarse}"
        ),
    )
}

fn dead_relu() -> Check {
    let model = ModelGraph::new(
        Shape::Vector(4),
        3,
        vec![
            Layer::Dense {
                weights: array![
                    [0.5, -0.2, 0.8, 0.1],
                    [0.0, 0.0, 0.0, 0.0],
                    [-0.3, 0.6, 0.2, 0.9]
                ],
                bias: array![0.1, -1.0, 0.0],
                activation: Activation::Relu,
            },
            Layer::Dense {
                weights: array![[1.0, 2.0, -1.0], [0.5, -3.0, 1.0], [-0.7, 0.4, 0.3]],
                bias: Array1::zeros(3),
                activation: Activation::Softmax,
            },
        ],
    )
    .map_err(|e| e.to_string())?;
    let data = common::iris();
    let acts = forward(&model, &data).map_err(|e| e.to_string())?;
    let graph = build_nif_graph(&model, &acts, &EstimatorConfig::default(), FlowMode::MeanMi)
        .map_err(|e| e.to_string())?;
    let dead = graph.node_id(UnitRef::new(1, 1)).ok_or("no dead node")?;
    let incident: Vec<usize> = (0..graph.edges.len())
        .filter(|&e| graph.edges[e].src == dead || graph.edges[e].dst == dead)
        .collect();
    let all_zero = incident.iter().all(|&e| {
        let x = &graph.edges[e];
        x.weight_raw == 0.0 && x.weight_clamped == 0.0 && x.weight_norm == 0.0
    });
    let pruned = apply_prune_mask(&model, &graph, &incident).map_err(|e| e.to_string())?;
    let before = acts.logits;
    let after = forward(&pruned, &data).map_err(|e| e.to_string())?.logits;
    let worst = (&before - &after)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    ensure(
        all_zero && worst <= 1e-9,
        format!("{} incident edges all zero: {all_zero}; max logit change after pruning {worst:.2e} <= 1e-9", incident.len()),
    )
}

fn pruning_curve() -> Check {
    let (model, train, eval) = common::iris_mlp();
    let acts = forward(&model, &train).map_err(|e| e.to_string())?;
    let graph = build_nif_graph(&model, &acts, &EstimatorConfig::default(), FlowMode::MeanMi)
        .map_err(|e| e.to_string())?;
    let report = prune_sweep(
        &model,
        &eval,
        &graph,
        &PruneSchedule::Fractions(vec![0.2, 1.0]),
    )
    .map_err(|e| e.to_string())?;
    let [base, fifth, all] = [0, 1, 2].map(|i| report.steps[i].accuracy);
    let baseline_exact = base == predict_accuracy(&model, &eval).map_err(|e| e.to_string())?;
    ensure(
        base >= 0.90 && base - fifth <= 0.05 && (all - 1.0 / 3.0).abs() <= 0.02 && baseline_exact,
        format!(
            "Iris 4-8-5-3 on 30 held-out rows: baseline {base:.4} >= 0.90; after {} of {} edges {fifth:.4} (drop {:.4} <= 0.05); all {} zeroed {all:.4} (chance 0.3333 +/- 0.02)",
            report.steps[1].zeroed_weights,
            graph.edges.len(),
            base - fifth,
            report.steps[2].zeroed_weights
        ),
    )
}

fn ks_utility() -> Check {
    let run = |a: &[f64], b: &[f64]| {
        ks_two_sample(a, b)
            .map(|r| r.statistic)
            .map_err(|e| e.to_string())
    };
    let same = run(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0])?;
    let disjoint = run(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0])?;
    let third = run(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0])?;
    ensure(
        same == 0.0 && disjoint == 1.0 && (third - 1.0 / 3.0).abs() < 1e-15,
        format!("identical D={same}, disjoint D={disjoint}, {{1,2,3}} vs {{2,3,4}} D={third:.6}"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cwd = dir.path();
    support::stage_iris(cwd);
    support::stage_cnn(cwd);
    let iris = [
        "--model",
        "iris_mlp.json",
        "--data",
        "iris_train.csv",
        "--seed",
        "3",
    ];
    let runs: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (
            [&["build", "--format", "json", "--out", "a.json"][..], &iris].concat(),
            vec!["a.json"],
        ),
        (
            [&["build", "--format", "dot", "--out", "a.dot"][..], &iris].concat(),
            vec!["a.dot"],
        ),
        (
            [
                &[
                    "build",
                    "--format",
                    "graphml",
                    "--mode",
                    "pmi",
                    "--sample",
                    "4",
                    "--out",
                    "a.graphml",
                ][..],
                &iris,
            ]
            .concat(),
            vec!["a.graphml"],
        ),
        (
            [&["analyze", "--gamma", "1.0", "--out", "b.json"][..], &iris].concat(),
            vec!["b.json"],
        ),
        (
            [
                &["attribute", "--out", "c.csv", "--report", "c.json"][..],
                &iris,
            ]
            .concat(),
            vec!["c.csv", "c.json"],
        ),
        (
            [
                &["prune", "--eval", "iris_eval.csv", "--out", "d.csv"][..],
                &iris,
            ]
            .concat(),
            vec!["d.csv"],
        ),
        (
            vec![
                "saliency",
                "--model",
                "cnn.json",
                "--data",
                "digits.csv",
                "--sample",
                "5",
                "--class",
                "1",
                "--seed",
                "3",
                "--out",
                "e.csv",
            ],
            vec!["e.csv"],
        ),
        (
            vec!["validate", "--seed", "3", "--out", "f.txt"],
            vec!["f.txt"],
        ),
    ];
    let mut compared = 0;
    for (args, outputs) in &runs {
        let mut snapshots = Vec::new();
        for threads in ["1", "4"] {
            let mut full = vec!["--threads", threads];
            full.extend(args.iter().copied());
            let out = support::nifflow(&full, cwd);
            if !out.status.success() {
                return Err(format!(
                    "{args:?}: {}",
                    String::from_utf8_lossy(&out.stderr)
                ));
            }
            let bytes: Vec<Vec<u8>> = outputs
                .iter()
                .map(|o| std::fs::read(cwd.join(o)).unwrap())
                .collect();
            snapshots.push(bytes);
        }
        if snapshots[0] != snapshots[1] {
            return Err(format!("{} differs between repeated runs", args[0]));
        }
        compared += outputs.len();
    }
    Ok(format!(
        "{} invocations, {compared} artifacts byte-identical across repeats (1 and 4 threads)",
        runs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("estimator accuracy", estimator_accuracy),
        ("PMI identity", pmi_identity),
        ("attribution equivalence", attribution_equivalence),
        ("betweenness", betweenness_oracle),
        ("communities", communities),
        ("dead-ReLU property", dead_relu),
        ("pruning curve shape", pruning_curve),
        ("K-S utility", ks_utility),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
