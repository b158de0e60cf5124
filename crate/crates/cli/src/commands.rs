use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use nifflow_core::{
    attribution_matrix, build_nif_graph, export_graph, forward, ks_two_sample, load_dataset,
    load_model, predict_accuracy, prune_sweep, raw_mi_attribution, saliency_map, self_checks,
    Dataset, FlowMode, ModelGraph, NifGraph, PruneSchedule,
};
use serde_json::json;

use crate::config::{FileConfig, Resolver, RunConfig};
use crate::{
    AnalyzeArgs, AttributeArgs, BuildArgs, Command, PruneArgs, SaliencyArgs, ValidateArgs,
};

/// Writes `text` to `out`, or to standard output for `-`.
fn write_artifact(out: &str, text: &str) -> Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
    } else {
        std::fs::write(out, text).with_context(|| format!("writing {out}"))?;
        info!("wrote {out}");
    }
    Ok(())
}

/// CSV artifacts start with one comment line holding the run config.
fn csv_with_header(run: &RunConfig, body: &str) -> String {
    format!("# run_config: {}\n{body}", run.to_line())
}

fn load_inputs(run: &RunConfig) -> Result<(ModelGraph, Dataset)> {
    let model_path = run.model()?;
    let data_path = run.data()?;
    let model = load_model(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let data = load_dataset(data_path)
        .with_context(|| format!("loading dataset {}", data_path.display()))?;
    data.check_labels(model.class_count())
        .with_context(|| format!("dataset {}", data_path.display()))?;
    info!(
        "model {} ({} layers), {} samples",
        model_path.display(),
        model.layers().len(),
        data.len()
    );
    Ok((model, data))
}

fn build_graph(run: &RunConfig) -> Result<NifGraph> {
    let (model, data) = load_inputs(run)?;
    let acts = forward(&model, &data)?;
    let mut graph = build_nif_graph(&model, &acts, &run.estimator, run.mode)?;
    graph.run_config = Some(run.to_value());
    info!(
        "graph: {} nodes, {} edges",
        graph.nodes.len(),
        graph.edges.len()
    );
    Ok(graph)
}

fn base(
    command: &str,
    r: &Resolver<'_>,
    model: &Option<PathBuf>,
    data: &Option<PathBuf>,
    out: &str,
) -> Result<RunConfig> {
    Ok(RunConfig {
        command: command.into(),
        model: r.path(model, &r.file.model)?,
        data: r.path(data, &r.file.data)?,
        eval: None,
        estimator: nifflow_core::EstimatorConfig::default(),
        mode: FlowMode::MeanMi,
        gamma: 1.0,
        edge_length: nifflow_core::EdgeLengthMode::InverseWeight,
        format: None,
        out: out.into(),
        extra: serde_json::Map::new(),
    })
}

pub fn run(command: Command, file: &FileConfig) -> Result<()> {
    let r = Resolver { file };
    match command {
        Command::Build(a) => build(&r, a),
        Command::Analyze(a) => analyze(&r, a),
        Command::Attribute(a) => attribute(&r, a),
        Command::Saliency(a) => saliency(&r, a),
        Command::Prune(a) => prune(&r, a),
        Command::Validate(a) => validate(&r, a),
    }
}

fn build(r: &Resolver<'_>, a: BuildArgs) -> Result<()> {
    let mut run = base("build", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    run.mode = r.mode(&a.mode)?;
    let format = r.format(a.format);
    run.format = Some(format);
    let graph = build_graph(&run)?;
    write_artifact(&a.out, &export_graph(&graph, format)?)
}

fn analyze(r: &Resolver<'_>, a: AnalyzeArgs) -> Result<()> {
    let mut run = base("analyze", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    run.mode = r.mode(&a.mode)?;
    (run.gamma, run.edge_length) = r.analysis(&a.analysis)?;
    let format = r.format(a.format);
    run.format = Some(format);
    let mut graph = match &a.graph {
        Some(path) => {
            if run.model.is_some() || run.data.is_some() {
                warn!("--graph given; ignoring model and dataset inputs");
            }
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading graph {}", path.display()))?;
            let mut graph =
                NifGraph::from_json(&text).with_context(|| format!("graph {}", path.display()))?;
            run.model = None;
            run.data = None;
            run.estimator = graph.config.clone();
            run.mode = graph.mode;
            run.extra.insert("graph".into(), json!(path));
            if let Some(source) = graph.run_config.take() {
                run.extra.insert("source_run_config".into(), source);
            }
            graph.run_config = Some(run.to_value());
            graph
        }
        None => build_graph(&run)?,
    };
    graph.analyze(run.gamma, run.edge_length, run.estimator.rng_seed)?;
    if let Some(analysis) = &graph.analysis {
        let count = analysis.communities.iter().max().map_or(0, |c| c + 1);
        info!("{count} communities, modularity {:.4}", analysis.modularity);
    }
    write_artifact(&a.out, &export_graph(&graph, format)?)
}

fn attribute(r: &Resolver<'_>, a: AttributeArgs) -> Result<()> {
    let mut run = base("attribute", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    if let Some(report) = &a.report {
        run.extra.insert("report".into(), json!(report));
    }
    let (model, data) = load_inputs(&run)?;
    let acts = forward(&model, &data)?;
    let graph = build_nif_graph(&model, &acts, &run.estimator, FlowMode::MeanMi)?;
    let matrix = attribution_matrix(&graph)?;
    write_artifact(&a.out, &csv_with_header(&run, &matrix.to_csv()))?;

    if let Some(report) = &a.report {
        let raw = raw_mi_attribution(&acts, &data.labels, &run.estimator)?;
        let nif_values: Vec<f64> = matrix.values.iter().copied().collect();
        let raw_values: Vec<f64> = raw.values.iter().copied().collect();
        let ks = ks_two_sample(&nif_values, &raw_values)?;
        info!(
            "K-S vs raw MI: D = {:.4}, p = {:.4}",
            ks.statistic, ks.p_value
        );
        let body = json!({
            "run_config": run.to_value(),
            "model_fingerprint": model.fingerprint(),
            "ks_vs_raw_mi": ks,
            "attribution": matrix_json(&matrix),
            "raw_mi": matrix_json(&raw),
        });
        let text = serde_json::to_string_pretty(&body)? + "\n";
        write_artifact(&report.to_string_lossy(), &text)?;
    }
    Ok(())
}

fn matrix_json(m: &nifflow_core::AttributionMatrix) -> serde_json::Value {
    json!({
        "features": m.feature_names,
        "classes": m.class_labels,
        "values": m.values.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
    })
}

fn saliency(r: &Resolver<'_>, a: SaliencyArgs) -> Result<()> {
    let mut run = base("saliency", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    let sample = match a.sample.or(r.file.sample) {
        Some(s) => s,
        None => bail!("saliency needs --sample"),
    };
    run.mode = FlowMode::Pmi { sample };
    run.extra.insert("class".into(), json!(a.class));
    let (model, data) = load_inputs(&run)?;
    let map = saliency_map(&model, &data, sample, a.class, &run.estimator)?;
    write_artifact(&a.out, &csv_with_header(&run, &map.to_csv()))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} `{s}`: {e}"))
        })
        .collect()
}

fn prune(r: &Resolver<'_>, a: PruneArgs) -> Result<()> {
    let mut run = base("prune", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    run.eval = r.path(&a.eval, &r.file.eval)?;
    let schedule = match (&a.counts, &a.fractions) {
        (Some(_), Some(_)) => bail!("give --counts or --fractions, not both"),
        (Some(c), None) => PruneSchedule::Counts(parse_list(c, "count")?),
        (None, Some(f)) => PruneSchedule::Fractions(parse_list(f, "fraction")?),
        (None, None) => PruneSchedule::Full,
    };
    run.extra.insert(
        "schedule".into(),
        match &schedule {
            PruneSchedule::Counts(c) => json!({ "counts": c }),
            PruneSchedule::Fractions(f) => json!({ "fractions": f }),
            PruneSchedule::Full => json!("full"),
        },
    );
    let (model, data) = load_inputs(&run)?;
    let eval = match &run.eval {
        Some(path) => {
            let eval = load_dataset(path)
                .with_context(|| format!("loading eval set {}", path.display()))?;
            eval.check_labels(model.class_count())?;
            eval
        }
        None => {
            warn!("no --eval set; accuracy is measured on the estimation data");
            data.clone()
        }
    };
    let acts = forward(&model, &data)?;
    let graph = build_nif_graph(&model, &acts, &run.estimator, FlowMode::MeanMi)?;
    let report = prune_sweep(&model, &eval, &graph, &schedule)?;
    let header = format!(
        "# model_fingerprint: {}\n# mode: {}\n",
        report.model_fingerprint,
        serde_json::to_string(&report.mode)?
    );
    write_artifact(&a.out, &csv_with_header(&run, &(header + &report.to_csv())))
}

fn validate(r: &Resolver<'_>, a: ValidateArgs) -> Result<()> {
    let mut run = base("validate", r, &a.inputs.model, &a.inputs.data, &a.out)?;
    run.estimator = r.estimator(&a.estimator)?;
    let mut lines = vec![format!("# run_config: {}", run.to_line())];
    let mut failed = 0;
    for c in self_checks(&run.estimator)? {
        if !c.passed {
            failed += 1;
        }
        lines.push(format!(
            "{} {}: estimate {:.4}, expected {:.4} +/- {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.estimate,
            c.expected,
            c.tolerance
        ));
    }
    if run.model.is_some() || run.data.is_some() {
        let (model, data) = load_inputs(&run)?;
        let accuracy = predict_accuracy(&model, &data)?;
        lines.push(format!(
            "PASS inputs: {} samples load against a {}-class model, accuracy {accuracy:.4}",
            data.len(),
            model.class_count()
        ));
    }
    write_artifact(&a.out, &(lines.join("\n") + "\n"))?;
    if failed > 0 {
        bail!("{failed} estimator self-check(s) failed");
    }
    Ok(())
}
