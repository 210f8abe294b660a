//! File formats: noise specifications, CSV tables and the run manifest.
//!
//! Vectors and matrices indexed by vertex always follow the declaration
//! order of the graph file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::control::ControlReport;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::noise::NoiseModel;
use crate::spectral::{EigenSystem, ModeShape};
use crate::stochastic::{RegularityProfile, TrajectoryEnsemble};
use crate::tolerances::Tolerances;

pub const MODULES: [&str; 6] = ["graph-core", "tree-decomposition", "spectral-engine", "feller-control", "stochastic-sim", "cli-io"];

pub fn read_graph(path: &Path) -> Result<MetricGraph> {
    let text = std::fs::read_to_string(path)?;
    let g = MetricGraph::from_json_str(&text)?;
    g.ensure_valid()?;
    Ok(g)
}

/// Accepts `diag:v1=1,v2=0.5`, an inline JSON object, or a path to a JSON
/// file holding `{"type":"diagonal","q":{...}}` or
/// `{"type":"full","matrix":[[...]]}`. Vertices missing from a diagonal
/// spec get zero noise.
pub fn parse_noise(spec: &str, graph: &MetricGraph) -> Result<NoiseModel> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("diag:") {
        let mut q = vec![0.0; graph.vertex_count()];
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (v, x) = item
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("expected vertex=value, got {item:?}")))?;
            let x: f64 = x.trim().parse().map_err(|_| Error::Invalid(format!("bad intensity {x:?}")))?;
            q[graph.vertex_index(v.trim())?] = x;
        }
        return NoiseModel::diagonal(&q);
    }
    let value: Value = if spec.starts_with('{') {
        serde_json::from_str(spec)?
    } else {
        serde_json::from_str(&std::fs::read_to_string(spec)?)?
    };
    parse_noise_value(&value, graph)
}

pub fn parse_noise_value(value: &Value, graph: &MetricGraph) -> Result<NoiseModel> {
    let n = graph.vertex_count();
    match value["type"].as_str() {
        Some("diagonal") => {
            let map = value["q"].as_object().ok_or_else(|| Error::Invalid("diagonal noise needs a q object".into()))?;
            let mut q = vec![0.0; n];
            for (v, x) in map {
                let x = x.as_f64().ok_or_else(|| Error::Invalid(format!("intensity of {v} is not a number")))?;
                q[graph.vertex_index(v)?] = x;
            }
            NoiseModel::diagonal(&q)
        }
        Some("full") => {
            let rows = value["matrix"].as_array().ok_or_else(|| Error::Invalid("full noise needs a matrix".into()))?;
            if rows.len() != n {
                return Err(Error::Invalid(format!("matrix has {} rows, graph has {n} vertices", rows.len())));
            }
            let mut q = DMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let row = row.as_array().filter(|r| r.len() == n).ok_or_else(|| {
                    Error::Invalid(format!("matrix row {i} must have {n} entries"))
                })?;
                for (j, x) in row.iter().enumerate() {
                    q[(i, j)] = x.as_f64().ok_or_else(|| Error::Invalid("matrix entries must be numbers".into()))?;
                }
            }
            NoiseModel::new(q)
        }
        other => Err(Error::Invalid(format!("unknown noise type {other:?}"))),
    }
}

pub fn noise_to_json(noise: &NoiseModel, graph: &MetricGraph) -> Value {
    match &noise.diagonal {
        Some(d) => {
            let q: BTreeMap<&str, f64> = d.iter().enumerate().map(|(v, &x)| (graph.vertex_id(v), x)).collect();
            json!({ "type": "diagonal", "q": q })
        }
        None => {
            let rows: Vec<Vec<f64>> = noise.q.row_iter().map(|r| r.iter().copied().collect()).collect();
            json!({ "type": "full", "matrix": rows })
        }
    }
}

/// Comma-separated floats; an empty string gives an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Invalid(format!("not a number: {t:?}"))))
        .collect()
}

/// `k, lambda, cluster_id, trusted, trace_<vertex>...`
pub fn write_spectrum_csv<W: Write>(out: W, eig: &EigenSystem, graph: &MetricGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "lambda".into(), "cluster_id".into(), "trusted".into()];
    header.extend(graph.vertices().iter().map(|v| format!("trace_{v}")));
    w.write_record(&header)?;
    for (ci, c) in eig.clusters.iter().enumerate() {
        for &k in &c.members {
            let m = &eig.modes[k];
            let mut rec = vec![k.to_string(), format!("{:.15e}", m.lambda), ci.to_string(), m.trusted.to_string()];
            rec.extend(m.traces.iter().map(|x| format!("{x:.15e}")));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `mode, edge, node, x, value`: nodal values for finite-element modes, and
/// `points` evenly spaced samples per edge for closed-form ones.
pub fn write_eigenfunctions_csv<W: Write>(out: W, eig: &EigenSystem, graph: &MetricGraph, points: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mode", "edge", "node", "x", "value"])?;
    for k in 0..eig.len() {
        for (e, edge) in graph.edges().iter().enumerate() {
            let nodes = match (&eig.modes[k].shape, &eig.dofs) {
                (ModeShape::Nodal(_), Some(map)) => map.elements[e],
                _ => points.max(1),
            };
            let h = edge.length / nodes as f64;
            for j in 0..=nodes {
                let x = j as f64 * h;
                w.write_record([
                    k.to_string(),
                    edge.id.clone(),
                    j.to_string(),
                    format!("{x:.15e}"),
                    format!("{:.15e}", eig.value_at(k, e, x)),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `t_start, t_end, u_<vertex>...`
pub fn write_control_csv<W: Write>(out: W, report: &ControlReport, graph: &MetricGraph) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_start".to_string(), "t_end".into()];
    header.extend(graph.vertices().iter().map(|v| format!("u_{v}")));
    w.write_record(&header)?;
    for i in 0..report.times.len() - 1 {
        let mut rec = vec![format!("{:.15e}", report.times[i]), format!("{:.15e}", report.times[i + 1])];
        rec.extend(report.controls.iter().map(|u| format!("{:.15e}", u[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `time, mode, mean, variance` over the samples.
pub fn write_ensemble_summary_csv<W: Write>(out: W, ens: &TrajectoryEnsemble) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "mode", "mean", "variance"])?;
    let s = ens.samples as f64;
    for (ti, t) in ens.times.iter().enumerate() {
        for k in 0..ens.modes {
            let mean = (0..ens.samples).map(|i| ens.get(i, ti, k)).sum::<f64>() / s;
            let var = (0..ens.samples).map(|i| (ens.get(i, ti, k) - mean).powi(2)).sum::<f64>() / s;
            w.write_record([format!("{t:.15e}"), k.to_string(), format!("{mean:.15e}"), format!("{var:.15e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `sample, time, mode, value`.
pub fn write_ensemble_csv<W: Write>(out: W, ens: &TrajectoryEnsemble) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "time", "mode", "value"])?;
    for s in 0..ens.samples {
        for (ti, t) in ens.times.iter().enumerate() {
            for k in 0..ens.modes {
                w.write_record([s.to_string(), format!("{t:.15e}"), k.to_string(), format!("{:.15e}", ens.get(s, ti, k))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `alpha, K, partial_sum, slope`.
pub fn write_regularity_csv<W: Write>(out: W, profile: &RegularityProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "K", "partial_sum", "slope"])?;
    for p in &profile.profiles {
        for (i, s) in p.partial_sums.iter().enumerate() {
            w.write_record([p.alpha.to_string(), (i + 1).to_string(), format!("{s:.15e}"), format!("{:.6}", p.slope)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: Value,
    pub tolerances: Tolerances,
    pub modules: BTreeMap<&'static str, &'static str>,
    pub outputs: Vec<String>,
    pub status: String,
    pub exit_code: i32,
}

impl Manifest {
    pub fn new(subcommand: &str, config: Value) -> Self {
        Self {
            tool: "qgraph",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config,
            tolerances: Tolerances::default(),
            modules: MODULES.iter().map(|&m| (m, env!("CARGO_PKG_VERSION"))).collect(),
            outputs: Vec::new(),
            status: "ok".to_string(),
            exit_code: 0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_defaults_to_zero() {
        let g = MetricGraph::star(3, 1.0);
        let q = parse_noise(r#"{"type":"diagonal","q":{"v1":1.0,"v2":1.0}}"#, &g).unwrap();
        assert_eq!(q.diagonal, Some(vec![0.0, 1.0, 1.0, 0.0]));
        let short = parse_noise("diag:v1=1,v2=1", &g).unwrap();
        assert_eq!(short, q);
    }

    #[test]
    fn noise_errors() {
        let g = MetricGraph::interval(1.0);
        let bad = parse_noise(r#"{"type":"full","matrix":[[1,-2],[-2,1]]}"#, &g);
        assert!(matches!(bad, Err(Error::NotPsd(_))));
        let unknown = parse_noise("diag:v9=1", &g);
        assert!(matches!(unknown, Err(Error::UnknownVertex(_))));
        let asym = parse_noise(r#"{"type":"full","matrix":[[1,0.5],[0.1,1]]}"#, &g);
        assert!(matches!(asym, Err(Error::AsymmetricMatrix)));
    }
}
