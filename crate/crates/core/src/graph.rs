//! Metric graphs: vertices, edges carrying a length and coefficient
//! profiles, validation, classification and tree paths.
//!
//! Edges are undirected; the stored tail/head only fixes the coordinate
//! chart (x = 0 at the tail, x = length at the head).

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grid {
    Uniform,
}

/// A coefficient on one edge: a constant, or uniform samples over
/// `[0, length]`.
///
/// Diffusion samples are read as nodal values of a piecewise-linear
/// function (at least two samples, endpoints included). Potential samples
/// are read as cell values of a piecewise-constant function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Sampled { samples: Vec<f64>, grid: Grid },
}

impl Coefficient {
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            Coefficient::Sampled { .. } => None,
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Sampled { samples, .. } => {
                samples.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn max_abs(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => v.abs(),
            Coefficient::Sampled { samples, .. } => {
                samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Coefficient::Constant(v) => v.is_finite(),
            Coefficient::Sampled { samples, .. } => samples.iter().all(|v| v.is_finite()),
        }
    }

    /// Piecewise-linear interpolation at `x` in `[0, length]`.
    pub fn linear_at(&self, x: f64, length: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Sampled { samples, .. } => {
                if samples.len() == 1 {
                    return samples[0];
                }
                let cells = (samples.len() - 1) as f64;
                let s = (x / length).clamp(0.0, 1.0) * cells;
                let i = (s.floor() as usize).min(samples.len() - 2);
                let t = s - i as f64;
                samples[i] * (1.0 - t) + samples[i + 1] * t
            }
        }
    }

    /// Piecewise-constant lookup at `x` in `[0, length]`.
    pub fn cell_at(&self, x: f64, length: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Sampled { samples, .. } => {
                let cells = samples.len() as f64;
                let i = ((x / length).clamp(0.0, 1.0) * cells).floor() as usize;
                samples[i.min(samples.len() - 1)]
            }
        }
    }
}

fn default_diffusion() -> Coefficient {
    Coefficient::Constant(1.0)
}

fn default_potential() -> Coefficient {
    Coefficient::Constant(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
    #[serde(rename = "c", default = "default_diffusion")]
    pub diffusion: Coefficient,
    #[serde(rename = "p", default = "default_potential")]
    pub potential: Coefficient,
}

impl Edge {
    pub fn new(id: impl Into<String>, tail: impl Into<String>, head: impl Into<String>, length: f64) -> Self {
        Self {
            id: id.into(),
            tail: tail.into(),
            head: head.into(),
            length,
            diffusion: default_diffusion(),
            potential: default_potential(),
        }
    }

    pub fn with_diffusion(mut self, c: Coefficient) -> Self {
        self.diffusion = c;
        self
    }

    pub fn with_potential(mut self, p: Coefficient) -> Self {
        self.potential = p;
        self
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Tail,
    Head,
}

/// Report-style validation result; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            write!(f, "{}", self.violations.join("; "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GraphClass {
    Tree,
    HasLoop,
    GeneralWithCycle,
}

/// Serialized form of the graph description file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
    /// Resolved (tail, head) vertex indices; `None` for dangling endpoints.
    ends: Vec<(Option<usize>, Option<usize>)>,
    incidence: Vec<Vec<(usize, Endpoint)>>,
}

/// A simple path as an alternating vertex/edge sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPath {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl GraphPath {
    pub fn to_ids(&self, graph: &MetricGraph) -> Vec<String> {
        let mut out = Vec::with_capacity(self.vertices.len() + self.edges.len());
        for (i, &v) in self.vertices.iter().enumerate() {
            out.push(graph.vertex_id(v).to_string());
            if let Some(&e) = self.edges.get(i) {
                out.push(graph.edge(e).id.clone());
            }
        }
        out
    }
}

impl MetricGraph {
    /// Builds the graph without validating it; see [`MetricGraph::validate`].
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Self {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, v) in vertices.iter().enumerate() {
            index.entry(v.clone()).or_insert(i);
        }
        let mut incidence = vec![Vec::new(); vertices.len()];
        let ends = edges
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let t = index.get(&edge.tail).copied();
                let h = index.get(&edge.head).copied();
                if let Some(t) = t {
                    incidence[t].push((e, Endpoint::Tail));
                }
                if let Some(h) = h {
                    incidence[h].push((e, Endpoint::Head));
                }
                (t, h)
            })
            .collect();
        Self { vertices, edges, index, ends, incidence }
    }

    /// Builds and validates.
    pub fn try_new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let g = Self::new(vertices, edges);
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(s)?;
        Ok(Self::new(file.vertices, file.edges))
    }

    pub fn from_json_value(v: serde_json::Value) -> Result<Self> {
        let file: GraphFile = serde_json::from_value(v)?;
        Ok(Self::new(file.vertices, file.edges))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(GraphFile { vertices: self.vertices.clone(), edges: self.edges.clone() })
            .expect("graph serialization is infallible")
    }

    /// Star with `arms` edges of equal length, `c = 1`, `p = 0`. Vertex order
    /// is `vc, v1, ..., vN`; edge `ei` runs from `vi` (x = 0) to `vc`.
    pub fn star(arms: usize, length: f64) -> Self {
        Self::star_with_lengths(&vec![length; arms])
    }

    pub fn star_with_lengths(lengths: &[f64]) -> Self {
        let mut vertices = vec!["vc".to_string()];
        let mut edges = Vec::with_capacity(lengths.len());
        for (i, &l) in lengths.iter().enumerate() {
            let v = format!("v{}", i + 1);
            edges.push(Edge::new(format!("e{}", i + 1), v.clone(), "vc", l));
            vertices.push(v);
        }
        Self::new(vertices, edges)
    }

    /// `v0 - v1 - ... - vk` with unit coefficients.
    pub fn path(lengths: &[f64]) -> Self {
        let vertices = (0..=lengths.len()).map(|i| format!("v{i}")).collect();
        let edges = lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Edge::new(format!("e{}", i + 1), format!("v{i}"), format!("v{}", i + 1), l))
            .collect();
        Self::new(vertices, edges)
    }

    pub fn interval(length: f64) -> Self {
        Self::path(&[length])
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// Resolved endpoints. Panics on a dangling endpoint, so only call this
    /// on validated graphs.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let (t, h) = self.ends[e];
        (t.expect("dangling tail"), h.expect("dangling head"))
    }

    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let (t, h) = self.endpoints(e);
        if t == v {
            h
        } else {
            t
        }
    }

    pub fn incidence(&self, v: usize) -> &[(usize, Endpoint)] {
        &self.incidence[v]
    }

    /// Degree with a looping edge counted twice.
    pub fn degree(&self, v: usize) -> usize {
        self.incidence[v].len()
    }

    /// Boundary vertices (degree 1), in declaration order.
    pub fn boundary(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.degree(v) == 1).collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(e, _) in &self.incidence[v] {
                if let (Some(t), Some(h)) = self.ends[e] {
                    for w in [t, h] {
                        if !seen[w] {
                            seen[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.vertices.is_empty() {
            report.push("graph has no vertices");
        }
        if self.edges.is_empty() {
            report.push("graph has no edges");
        }
        let mut seen = HashSet::new();
        for v in &self.vertices {
            if !seen.insert(v.as_str()) {
                report.push(format!("duplicate vertex id {v}"));
            }
        }
        let mut seen = HashSet::new();
        for e in &self.edges {
            if !seen.insert(e.id.as_str()) {
                report.push(format!("duplicate edge id {}", e.id));
            }
        }
        for (edge, &(t, h)) in self.edges.iter().zip(&self.ends) {
            if t.is_none() {
                report.push(format!("edge {} has dangling endpoint {}", edge.id, edge.tail));
            }
            if h.is_none() {
                report.push(format!("edge {} has dangling endpoint {}", edge.id, edge.head));
            }
            if !(edge.length > 0.0) || !edge.length.is_finite() {
                report.push(format!("edge {} has nonpositive length {}", edge.id, edge.length));
            }
            check_coefficient(&mut report, &edge.id, "diffusion", &edge.diffusion, 2);
            check_coefficient(&mut report, &edge.id, "potential", &edge.potential, 1);
            if edge.diffusion.is_finite() && !(edge.diffusion.min() > 0.0) {
                report.push(format!("edge {} has diffusion coefficient below a positive bound", edge.id));
            }
            if edge.potential.is_finite() && edge.potential.min() < 0.0 {
                report.push(format!("edge {} has negative potential", edge.id));
            }
        }
        for (v, inc) in self.incidence.iter().enumerate() {
            if inc.is_empty() && !self.edges.is_empty() {
                report.push(format!("vertex {} is isolated", self.vertices[v]));
            }
        }
        if !self.vertices.is_empty() && !self.is_connected() {
            report.push("graph is disconnected");
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report.violations))
        }
    }

    pub fn classify(&self) -> Result<GraphClass> {
        self.ensure_valid()?;
        if self.edges.len() + 1 == self.vertices.len() {
            return Ok(GraphClass::Tree);
        }
        if self.has_degree_two_loop() {
            Ok(GraphClass::HasLoop)
        } else {
            Ok(GraphClass::GeneralWithCycle)
        }
    }

    pub fn is_tree(&self) -> bool {
        matches!(self.classify(), Ok(GraphClass::Tree))
    }

    /// A looping edge, or a cycle whose intermediate vertices all have
    /// degree 2.
    fn has_degree_two_loop(&self) -> bool {
        if self.edges.iter().any(Edge::is_loop) {
            return true;
        }
        let n = self.vertices.len();
        let mut visited = vec![false; n];
        for start in 0..n {
            if self.degree(start) != 2 || visited[start] {
                continue;
            }
            visited[start] = true;
            let (e0, _) = self.incidence[start][0];
            let (e1, _) = self.incidence[start][1];
            let a = self.walk_chain(start, e0, &mut visited);
            if a == Some(start) {
                // pure cycle of degree-2 vertices
                return true;
            }
            let b = self.walk_chain(start, e1, &mut visited);
            if let (Some(a), Some(b)) = (a, b) {
                if a == b {
                    return true;
                }
            }
        }
        false
    }

    /// Follows degree-2 vertices from `from` along `edge` until a vertex of
    /// another degree (returned) or a return to `from`.
    fn walk_chain(&self, from: usize, mut edge: usize, visited: &mut [bool]) -> Option<usize> {
        let mut v = from;
        loop {
            let w = self.other_end(edge, v);
            if w == from {
                return Some(from);
            }
            if self.degree(w) != 2 {
                return Some(w);
            }
            visited[w] = true;
            let next = self.incidence[w].iter().map(|&(e, _)| e).find(|&e| e != edge)?;
            edge = next;
            v = w;
        }
    }

    /// The unique simple path between two vertices of a tree.
    pub fn unique_path(&self, from: usize, to: usize) -> Result<GraphPath> {
        if self.classify()? != GraphClass::Tree {
            return Err(Error::NotATree);
        }
        if from == to {
            return Err(Error::SameVertex(self.vertices[from].clone()));
        }
        let n = self.vertices.len();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &(e, _) in &self.incidence[v] {
                let w = self.other_end(e, v);
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((v, e));
                    queue.push_back(w);
                }
            }
        }
        let mut vertices = vec![to];
        let mut edges = Vec::new();
        let mut cur = to;
        while let Some((p, e)) = parent[cur] {
            edges.push(e);
            vertices.push(p);
            cur = p;
        }
        vertices.reverse();
        edges.reverse();
        Ok(GraphPath { vertices, edges })
    }

    pub fn unique_path_by_id(&self, from: &str, to: &str) -> Result<GraphPath> {
        let a = self.vertex_index(from)?;
        let b = self.vertex_index(to)?;
        self.unique_path(a, b)
    }

    pub fn all_unit_diffusion(&self) -> bool {
        self.edges.iter().all(|e| e.diffusion.constant_value() == Some(1.0))
    }

    pub fn zero_potential(&self) -> bool {
        self.edges.iter().all(|e| e.potential.max_abs() == 0.0)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }
}

fn check_coefficient(report: &mut ValidationReport, id: &str, what: &str, c: &Coefficient, min_samples: usize) {
    if !c.is_finite() {
        report.push(format!("edge {id} has a non-finite {what} coefficient"));
    }
    if let Coefficient::Sampled { samples, .. } = c {
        if samples.len() < min_samples {
            report.push(format!("edge {id} {what} needs at least {min_samples} samples"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(path: &GraphPath, g: &MetricGraph) -> Vec<String> {
        path.to_ids(g)
    }

    #[test]
    fn single_edge_is_valid() {
        let g = MetricGraph::interval(1.0);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn disjoint_edges_are_disconnected() {
        let g = MetricGraph::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![Edge::new("e1", "a", "b", 1.0), Edge::new("e2", "c", "d", 1.0)],
        );
        assert!(g.validate().contains("disconnected"));
    }

    #[test]
    fn zero_length_is_reported() {
        let g = MetricGraph::new(vec!["a".into(), "b".into()], vec![Edge::new("e", "a", "b", 0.0)]);
        assert!(g.validate().contains("nonpositive length"));
    }

    #[test]
    fn dangling_and_coefficient_violations() {
        let g = MetricGraph::new(
            vec!["a".into(), "b".into()],
            vec![
                Edge::new("e1", "a", "b", 1.0).with_diffusion(Coefficient::Constant(0.0)),
                Edge::new("e2", "a", "zz", 1.0).with_potential(Coefficient::Constant(-1.0)),
            ],
        );
        let r = g.validate();
        assert!(r.contains("dangling"));
        assert!(r.contains("diffusion"));
        assert!(r.contains("negative potential"));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(MetricGraph::star(3, 1.0).classify().unwrap(), GraphClass::Tree);
        let lp = MetricGraph::new(vec!["v".into()], vec![Edge::new("loop", "v", "v", 1.0)]);
        assert_eq!(lp.classify().unwrap(), GraphClass::HasLoop);
        // triangle with a pendant at each corner: corners have degree 3
        let mut vs: Vec<String> = ["a", "b", "c", "pa", "pb", "pc"].iter().map(|s| s.to_string()).collect();
        vs.sort();
        let g = MetricGraph::new(
            vs,
            vec![
                Edge::new("ab", "a", "b", 1.0),
                Edge::new("bc", "b", "c", 1.0),
                Edge::new("ca", "c", "a", 1.0),
                Edge::new("apa", "a", "pa", 1.0),
                Edge::new("bpb", "b", "pb", 1.0),
                Edge::new("cpc", "c", "pc", 1.0),
            ],
        );
        assert_eq!(g.classify().unwrap(), GraphClass::GeneralWithCycle);
    }

    #[test]
    fn chain_loop_through_degree_two_vertices() {
        // hub - x - y - hub with a pendant on hub
        let g = MetricGraph::new(
            vec!["hub".into(), "x".into(), "y".into(), "leaf".into()],
            vec![
                Edge::new("e1", "hub", "x", 1.0),
                Edge::new("e2", "x", "y", 1.0),
                Edge::new("e3", "y", "hub", 1.0),
                Edge::new("e4", "hub", "leaf", 1.0),
            ],
        );
        assert_eq!(g.classify().unwrap(), GraphClass::HasLoop);
        // plain cycle
        let c = MetricGraph::new(
            vec!["a".into(), "b".into()],
            vec![Edge::new("e1", "a", "b", 1.0), Edge::new("e2", "b", "a", 2.0)],
        );
        assert_eq!(c.classify().unwrap(), GraphClass::HasLoop);
    }

    #[test]
    fn classify_rejects_invalid() {
        let g = MetricGraph::new(vec!["a".into(), "b".into()], vec![Edge::new("e", "a", "b", -1.0)]);
        assert!(matches!(g.classify(), Err(Error::InvalidGraph(_))));
    }

    #[test]
    fn unique_paths() {
        let g = MetricGraph::star(3, 1.0);
        let p = g.unique_path_by_id("v1", "v2").unwrap();
        assert_eq!(ids(&p, &g), ["v1", "e1", "vc", "e2", "v2"]);
        let g = MetricGraph::path(&[1.0, 1.0]);
        let p = g.unique_path_by_id("v0", "v2").unwrap();
        assert_eq!(ids(&p, &g), ["v0", "e1", "v1", "e2", "v2"]);
        let g = MetricGraph::star(7, 1.0);
        let p = g.unique_path_by_id("v3", "v5").unwrap();
        assert_eq!(ids(&p, &g), ["v3", "e3", "vc", "e5", "v5"]);
        assert!(matches!(g.unique_path_by_id("v3", "v3"), Err(Error::SameVertex(_))));
        let lp = MetricGraph::new(vec!["v".into(), "w".into()], vec![
            Edge::new("l", "v", "v", 1.0),
            Edge::new("e", "v", "w", 1.0),
        ]);
        assert!(matches!(lp.unique_path_by_id("v", "w"), Err(Error::NotATree)));
    }

    #[test]
    fn vertex_condition_count() {
        for g in [MetricGraph::star(5, 1.0), MetricGraph::path(&[1.0, 2.0, 3.0])] {
            let lhs: usize = (0..g.vertex_count()).map(|v| g.degree(v) - 1).sum();
            assert_eq!(lhs as i64, 2 * g.edge_count() as i64 - g.vertex_count() as i64);
        }
    }

    #[test]
    fn json_coefficients() {
        let s = r#"{"vertices":["vc","v1"],"edges":[{"id":"e1","tail":"v1","head":"vc","length":1.0,
            "c":{"samples":[1.0,2.0],"grid":"uniform"},"p":0.5}]}"#;
        let g = MetricGraph::from_json_str(s).unwrap();
        assert!(g.validate().is_empty());
        let e = g.edge(0);
        assert!((e.diffusion.linear_at(0.5, 1.0) - 1.5).abs() < 1e-15);
        assert_eq!(e.potential.cell_at(0.3, 1.0), 0.5);
        let back = MetricGraph::from_json_value(g.to_json_value()).unwrap();
        assert_eq!(back.edges(), g.edges());
    }
}
