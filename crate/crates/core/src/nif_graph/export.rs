use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{FlowMode, NifGraph};
use crate::error::{NifError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Dot,
    Graphml,
    Json,
}

impl FromStr for ExportFormat {
    type Err = NifError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "graphml" => Ok(ExportFormat::Graphml),
            "json" => Ok(ExportFormat::Json),
            other => Err(NifError::Unsupported(format!("export format `{other}`"))),
        }
    }
}

/// Qualitative palette for community fill colors.
const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

pub fn export_graph(graph: &NifGraph, format: ExportFormat) -> Result<String> {
    graph.validate()?;
    if let Some(a) = &graph.analysis {
        if a.centrality.len() != graph.nodes.len() || a.communities.len() != graph.nodes.len() {
            return Err(NifError::InvalidConfig(
                "analysis attributes do not cover every node".into(),
            ));
        }
    }
    Ok(match format {
        ExportFormat::Json => to_json(graph),
        ExportFormat::Dot => to_dot(graph),
        ExportFormat::Graphml => to_graphml(graph),
    })
}

fn to_json(graph: &NifGraph) -> String {
    let mut s = serde_json::to_string_pretty(graph).expect("graph serializes");
    s.push('\n');
    s
}

impl NifGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        let graph: NifGraph =
            serde_json::from_str(text).map_err(|e| NifError::Parse(format!("graph: {e}")))?;
        graph.validate()?;
        Ok(graph)
    }
}

fn mode_string(mode: FlowMode) -> String {
    match mode {
        FlowMode::MeanMi => "mean_mi".into(),
        FlowMode::Pmi { sample } => format!("pmi:{sample}"),
    }
}

/// Graph-level provenance attributes, in a fixed order.
fn graph_attributes(graph: &NifGraph) -> Vec<(&'static str, String)> {
    let c = &graph.config;
    let mut attrs = vec![
        ("mode", mode_string(graph.mode)),
        ("estimator", format!("{:?}", c.kind).to_lowercase()),
        ("k", c.k.to_string()),
        ("bins", c.bins.to_string()),
        ("beta", c.beta.to_string()),
        (
            "relevance_mode",
            serde_json::to_value(c.relevance_mode)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        ),
        ("rng_seed", c.rng_seed.to_string()),
        ("model_fingerprint", graph.model_fingerprint.clone()),
    ];
    if let Some(a) = &graph.analysis {
        attrs.push(("gamma", a.gamma.to_string()));
        attrs.push(("modularity", a.modularity.to_string()));
        attrs.push((
            "edge_length",
            serde_json::to_value(a.edge_length)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
        ));
    }
    if let Some(run) = &graph.run_config {
        attrs.push(("run_config", run.to_string()));
    }
    attrs
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn to_dot(graph: &NifGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph nif {\n");
    let attrs: Vec<String> = graph_attributes(graph)
        .into_iter()
        .map(|(k, v)| format!("{k}=\"{}\"", dot_escape(&v)))
        .collect();
    let _ = writeln!(out, "  graph [rankdir=LR, {}];", attrs.join(", "));
    out.push_str("  node [shape=circle, style=filled, fillcolor=\"#ffffff\"];\n");

    let max_centrality = graph
        .analysis
        .as_ref()
        .map(|a| a.centrality.iter().copied().fold(0.0, f64::max))
        .unwrap_or(0.0);
    for layer in 0..graph.layer_count() {
        let _ = writeln!(out, "  subgraph layer{layer} {{\n    rank=same;");
        for node in graph.nodes.iter().filter(|n| n.layer == layer) {
            let mut line = format!(
                "    n{} [label=\"{}\", layer={}, unit={}",
                node.id,
                dot_escape(&node.label),
                node.layer,
                node.unit
            );
            if let Some(a) = &graph.analysis {
                let c = a.centrality[node.id];
                let width = if max_centrality > 0.0 {
                    0.3 + 1.2 * c / max_centrality
                } else {
                    0.3
                };
                let community = a.communities[node.id];
                let _ = write!(
                    line,
                    ", width={width:.4}, fixedsize=true, centrality={c}, community={community}, fillcolor=\"{}\"",
                    PALETTE[community % PALETTE.len()]
                );
            }
            line.push_str("];\n");
            out.push_str(&line);
        }
        out.push_str("  }\n");
    }
    for e in &graph.edges {
        let _ = writeln!(
            out,
            "  n{} -> n{} [penwidth={:.4}, weight_raw={}, weight_clamped={}, weight_norm={}];",
            e.src,
            e.dst,
            0.25 + 4.75 * e.weight_norm,
            e.weight_raw,
            e.weight_clamped,
            e.weight_norm
        );
    }
    out.push_str("}\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn to_graphml(graph: &NifGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    let graph_attrs = graph_attributes(graph);
    for (k, _) in &graph_attrs {
        let _ = writeln!(
            out,
            "  <key id=\"g_{k}\" for=\"graph\" attr.name=\"{k}\" attr.type=\"string\"/>"
        );
    }
    let node_keys: &[(&str, &str)] = &[
        ("label", "string"),
        ("layer", "int"),
        ("unit", "int"),
        ("kind", "string"),
        ("centrality", "double"),
        ("community", "int"),
    ];
    for (k, ty) in node_keys {
        let _ = writeln!(
            out,
            "  <key id=\"n_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"{ty}\"/>"
        );
    }
    for k in ["weight_raw", "weight_clamped", "weight_norm"] {
        let _ = writeln!(
            out,
            "  <key id=\"e_{k}\" for=\"edge\" attr.name=\"{k}\" attr.type=\"double\"/>"
        );
    }
    out.push_str("  <graph id=\"nif\" edgedefault=\"directed\">\n");
    for (k, v) in &graph_attrs {
        let _ = writeln!(out, "    <data key=\"g_{k}\">{}</data>", xml_escape(v));
    }
    for node in &graph.nodes {
        let _ = writeln!(out, "    <node id=\"n{}\">", node.id);
        let kind = serde_json::to_value(node.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "      <data key=\"n_label\">{}</data>",
            xml_escape(&node.label)
        );
        let _ = writeln!(out, "      <data key=\"n_layer\">{}</data>", node.layer);
        let _ = writeln!(out, "      <data key=\"n_unit\">{}</data>", node.unit);
        let _ = writeln!(out, "      <data key=\"n_kind\">{kind}</data>");
        if let Some(a) = &graph.analysis {
            let _ = writeln!(
                out,
                "      <data key=\"n_centrality\">{}</data>",
                a.centrality[node.id]
            );
            let _ = writeln!(
                out,
                "      <data key=\"n_community\">{}</data>",
                a.communities[node.id]
            );
        }
        out.push_str("    </node>\n");
    }
    for (i, e) in graph.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\">",
            e.src, e.dst
        );
        let _ = writeln!(
            out,
            "      <data key=\"e_weight_raw\">{}</data>",
            e.weight_raw
        );
        let _ = writeln!(
            out,
            "      <data key=\"e_weight_clamped\">{}</data>",
            e.weight_clamped
        );
        let _ = writeln!(
            out,
            "      <data key=\"e_weight_norm\">{}</data>",
            e.weight_norm
        );
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorConfig;
    use crate::network_science::EdgeLengthMode;
    use ndarray::array;

    fn sample() -> NifGraph {
        NifGraph::from_layer_weights(
            &[
                array![[0.4, 0.1], [-0.05, 0.3]],
                array![[0.2, 0.9], [0.6, 0.0]],
            ],
            FlowMode::MeanMi,
            EstimatorConfig::default(),
            "abc",
        )
        .unwrap()
    }

    #[test]
    fn plain_dot_has_no_analysis_attributes() {
        let dot = export_graph(&sample(), ExportFormat::Dot).unwrap();
        assert!(dot.starts_with("digraph nif {"));
        assert!(dot.contains("n0 -> n2 [penwidth=5.0000"));
        assert!(!dot.contains("community="));
        assert!(dot.contains("beta=\"0.0005\""));
        assert_eq!(dot.matches(" -> ").count(), 8);
    }

    #[test]
    fn analyzed_exports_carry_node_attributes() {
        let mut g = sample();
        g.analyze(1.0, EdgeLengthMode::InverseWeight, 0).unwrap();
        let dot = export_graph(&g, ExportFormat::Dot).unwrap();
        assert_eq!(dot.matches("community=").count(), 6);
        assert_eq!(dot.matches("centrality=").count(), 6);
        let xml = export_graph(&g, ExportFormat::Graphml).unwrap();
        assert_eq!(xml.matches("<data key=\"n_community\">").count(), 6);
        assert!(xml.contains("<data key=\"g_gamma\">1</data>"));
    }

    #[test]
    fn exports_are_byte_stable_and_json_round_trips() {
        let mut g = sample();
        g.analyze(1.0, EdgeLengthMode::Unit, 3).unwrap();
        for format in [ExportFormat::Dot, ExportFormat::Graphml, ExportFormat::Json] {
            assert_eq!(
                export_graph(&g, format).unwrap(),
                export_graph(&g, format).unwrap()
            );
        }
        let json = export_graph(&g, ExportFormat::Json).unwrap();
        assert_eq!(NifGraph::from_json(&json).unwrap(), g);
    }

    #[test]
    fn run_config_is_embedded_everywhere() {
        let mut g = sample();
        g.run_config = Some(serde_json::json!({"command": "build", "seed": 4}));
        let json = export_graph(&g, ExportFormat::Json).unwrap();
        assert_eq!(NifGraph::from_json(&json).unwrap().run_config, g.run_config);
        let dot = export_graph(&g, ExportFormat::Dot).unwrap();
        assert!(dot.contains(r#"run_config="{\"command\":\"build\",\"seed\":4}""#));
        let graphml = export_graph(&g, ExportFormat::Graphml).unwrap();
        assert!(graphml.contains("attr.name=\"run_config\""));
    }

    #[test]
    fn unknown_format_is_rejected() {
        assert!("svg".parse::<ExportFormat>().is_err());
        assert_eq!(
            "GraphML".parse::<ExportFormat>().unwrap(),
            ExportFormat::Graphml
        );
    }
}
