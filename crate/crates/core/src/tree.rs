//! Edge-disjoint directed path unions of trees, their tangle-free check and
//! the induced single-track active sets.

use std::collections::{BTreeSet, HashMap};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphClass, MetricGraph, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedPath {
    /// `vertices[i] -e[i]-> vertices[i + 1]`.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl DirectedPath {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn finish(&self) -> usize {
        *self.vertices.last().expect("non-empty path")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathUnion {
    pub paths: Vec<DirectedPath>,
    pub sources: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StActiveSet {
    pub i_star: BTreeSet<usize>,
    pub j_star: BTreeSet<usize>,
}

impl PathUnion {
    /// `{"sources": [...], "paths": [[v, e, v, ...], ...]}`
    pub fn to_json(&self, graph: &MetricGraph) -> Value {
        let paths: Vec<Vec<String>> = self
            .paths
            .iter()
            .map(|p| {
                let mut seq = Vec::with_capacity(2 * p.edges.len() + 1);
                for (i, &v) in p.vertices.iter().enumerate() {
                    seq.push(graph.vertex_id(v).to_string());
                    if let Some(&e) = p.edges.get(i) {
                        seq.push(graph.edge(e).id.clone());
                    }
                }
                seq
            })
            .collect();
        let sources: Vec<&str> = self.sources.iter().map(|&v| graph.vertex_id(v)).collect();
        json!({ "sources": sources, "paths": paths })
    }

    pub fn from_json(graph: &MetricGraph, value: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Invalid(format!("path union json: {m}"));
        let sources = value["sources"]
            .as_array()
            .ok_or_else(|| bad("missing sources"))?
            .iter()
            .map(|s| graph.vertex_index(s.as_str().unwrap_or_default()))
            .collect::<Result<BTreeSet<_>>>()?;
        let mut paths = Vec::new();
        for p in value["paths"].as_array().ok_or_else(|| bad("missing paths"))? {
            let seq = p.as_array().ok_or_else(|| bad("path is not an array"))?;
            if seq.len() % 2 == 0 {
                return Err(bad("path must alternate vertex/edge and end at a vertex"));
            }
            let mut vertices = Vec::new();
            let mut edges = Vec::new();
            for (i, item) in seq.iter().enumerate() {
                let id = item.as_str().ok_or_else(|| bad("ids must be strings"))?;
                if i % 2 == 0 {
                    vertices.push(graph.vertex_index(id)?);
                } else {
                    edges.push(graph.edge_index(id).ok_or_else(|| bad(&format!("unknown edge {id}")))?);
                }
            }
            paths.push(DirectedPath { vertices, edges });
        }
        Ok(Self { paths, sources })
    }

    /// Edge orientation induced by the paths: `(from, to)` per edge, `None`
    /// for uncovered edges. Only meaningful when edges are used once.
    pub fn orientation(&self, edge_count: usize) -> Vec<Option<(usize, usize)>> {
        let mut dir = vec![None; edge_count];
        for p in &self.paths {
            for (i, &e) in p.edges.iter().enumerate() {
                if e < edge_count && dir[e].is_none() {
                    dir[e] = Some((p.vertices[i], p.vertices[i + 1]));
                }
            }
        }
        dir
    }
}

/// Decomposes a tree into edge-disjoint paths starting at the boundary
/// vertices, or at all of them except `omit`.
///
/// The tree is rooted at `omit` (or at the smallest-id boundary vertex,
/// which then starts its own one-edge path). Sources are processed in
/// lexicographic id order; each walks toward the root and stops at the
/// first vertex already reached, so earlier sources win contested edges.
pub fn path_union(tree: &MetricGraph, omit: Option<usize>) -> Result<PathUnion> {
    if tree.classify()? != GraphClass::Tree {
        return Err(Error::NotATree);
    }
    let boundary = tree.boundary();
    if let Some(g) = omit {
        if g >= tree.vertex_count() || !boundary.contains(&g) {
            let id = tree.vertices().get(g).cloned().unwrap_or_else(|| g.to_string());
            return Err(Error::OmitNotBoundary(id));
        }
    }
    let mut by_id = boundary.clone();
    by_id.sort_by(|&a, &b| tree.vertex_id(a).cmp(tree.vertex_id(b)));
    let root = omit.unwrap_or(by_id[0]);

    let n = tree.vertex_count();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut stack = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &(e, _) in tree.incidence(v) {
            let w = tree.other_end(e, v);
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((v, e));
                stack.push(w);
            }
        }
    }

    let mut reached = vec![false; n];
    reached[root] = true;
    let mut paths = Vec::new();
    if omit.is_none() {
        let (&(e, _), _) = tree.incidence(root).split_first().expect("boundary vertex has an edge");
        let u = tree.other_end(e, root);
        if tree.degree(u) == 1 {
            return Err(Error::Infeasible(
                "a single-edge tree cannot start paths at both of its ends".into(),
            ));
        }
        reached[u] = true;
        paths.push(DirectedPath { vertices: vec![root, u], edges: vec![e] });
    }
    for &s in by_id.iter().filter(|&&s| s != root) {
        let mut vertices = vec![s];
        let mut edges = Vec::new();
        let mut cur = s;
        reached[s] = true;
        while let Some((p, e)) = parent[cur] {
            edges.push(e);
            vertices.push(p);
            if reached[p] {
                break;
            }
            reached[p] = true;
            cur = p;
        }
        paths.push(DirectedPath { vertices, edges });
    }
    let sources = paths.iter().map(DirectedPath::start).collect();
    Ok(PathUnion { paths, sources })
}

pub fn path_union_by_id(tree: &MetricGraph, omit: Option<&str>) -> Result<PathUnion> {
    let omit = omit.map(|id| tree.vertex_index(id)).transpose()?;
    path_union(tree, omit)
}

/// Checks the four tangle-free conditions and acyclicity, independently of
/// how the union was produced.
pub fn verify_tf(pu: &PathUnion, graph: &MetricGraph) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = graph.edge_count();
    let n = graph.vertex_count();
    if !graph.validate().is_empty() {
        report.push("graph is invalid");
        return report;
    }

    // each path must be a simple walk in the graph
    let mut well_formed = true;
    for (pi, p) in pu.paths.iter().enumerate() {
        if p.edges.is_empty() || p.vertices.len() != p.edges.len() + 1 {
            report.push(format!("path {pi} is malformed"));
            well_formed = false;
            continue;
        }
        for (i, &e) in p.edges.iter().enumerate() {
            let (a, b) = (p.vertices[i], p.vertices[i + 1]);
            if e >= m || a >= n || b >= n {
                report.push(format!("path {pi} references an unknown id"));
                well_formed = false;
                break;
            }
            let (t, h) = graph.endpoints(e);
            if !((t == a && h == b) || (t == b && h == a)) {
                report.push(format!("path {pi} edge {} does not join its neighbours", graph.edge(e).id));
                well_formed = false;
            }
        }
        let distinct: BTreeSet<_> = p.vertices.iter().collect();
        if distinct.len() != p.vertices.len() {
            report.push(format!("path {pi} repeats a vertex"));
        }
    }
    if !well_formed {
        return report;
    }

    // (1) one orientation per edge
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for (pi, p) in pu.paths.iter().enumerate() {
        for &e in &p.edges {
            if let Some(prev) = owner.insert(e, pi) {
                report.push(format!(
                    "edge reuse: {} lies on paths {prev} and {pi}",
                    graph.edge(e).id
                ));
            }
        }
    }

    // (2) paths meet only at start/finish vertices
    for (a, pa) in pu.paths.iter().enumerate() {
        for (b, pb) in pu.paths.iter().enumerate().skip(a + 1) {
            for &v in &pa.vertices {
                if !pb.vertices.contains(&v) {
                    continue;
                }
                let endpoint_a = v == pa.start() || v == pa.finish();
                let endpoint_b = v == pb.start() || v == pb.finish();
                if !endpoint_a && !endpoint_b {
                    report.push(format!(
                        "condition (2): paths {a} and {b} share interior vertex {}",
                        graph.vertex_id(v)
                    ));
                }
            }
        }
    }

    // (3) an interior starting vertex needs a non-finishing incoming edge and
    // a non-starting outgoing edge
    let starting_edges: BTreeSet<usize> = pu.paths.iter().map(|p| p.edges[0]).collect();
    let finishing_edges: BTreeSet<usize> = pu.paths.iter().map(|p| *p.edges.last().unwrap()).collect();
    let dir = pu.orientation(m);
    let starts: BTreeSet<usize> = pu.paths.iter().map(DirectedPath::start).collect();
    for &v in &starts {
        if graph.degree(v) < 2 {
            continue;
        }
        let incoming_ok = (0..m).any(|e| matches!(dir[e], Some((_, to)) if to == v) && !finishing_edges.contains(&e));
        let outgoing_ok = (0..m).any(|e| matches!(dir[e], Some((from, _)) if from == v) && !starting_edges.contains(&e));
        if !(incoming_ok && outgoing_ok) {
            report.push(format!(
                "condition (3): interior vertex {} starts a path without a non-finishing incoming and non-starting outgoing edge",
                graph.vertex_id(v)
            ));
        }
    }

    // (4) union covers the graph
    for e in 0..m {
        if !owner.contains_key(&e) {
            report.push(format!("condition (4): edge {} is not covered", graph.edge(e).id));
        }
    }

    // induced orientation must be a DAG
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(from, to) in dir.iter().flatten() {
        indeg[to] += 1;
        out[from].push(to);
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = queue.pop() {
        visited += 1;
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    if visited != n {
        report.push("induced orientation has a directed cycle");
    }

    let starts_match: BTreeSet<usize> = pu.paths.iter().map(DirectedPath::start).collect();
    if starts_match != pu.sources {
        report.push("source set differs from the path starting vertices");
    }
    report
}

/// Sources of the induced orientation and the surplus outgoing edges.
pub fn st_active_set(pu: &PathUnion, graph: &MetricGraph) -> Result<StActiveSet> {
    let report = verify_tf(pu, graph);
    if !report.is_empty() {
        return Err(Error::InvalidPathUnion(report.violations));
    }
    let n = graph.vertex_count();
    let dir = pu.orientation(graph.edge_count());
    let mut incoming = vec![0usize; n];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, d) in dir.iter().enumerate() {
        let (from, to) = d.expect("verified union covers every edge");
        incoming[to] += 1;
        outgoing[from].push(e);
    }
    let i_star: BTreeSet<usize> = (0..n).filter(|&v| incoming[v] == 0).collect();
    let j_star: BTreeSet<usize> = outgoing.iter().flat_map(|out| out.iter().skip(1).copied()).collect();

    let mut problems = Vec::new();
    if i_star != pu.sources {
        problems.push("sources of the orientation differ from the path sources".to_string());
    }
    for v in 0..n {
        if outgoing[v].len() > 1 {
            problems.push(format!("vertex {} has {} outgoing edges", graph.vertex_id(v), outgoing[v].len()));
        }
    }
    if !problems.is_empty() {
        return Err(Error::InvalidPathUnion(problems));
    }
    Ok(StActiveSet { i_star, j_star })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(g: &MetricGraph, set: &BTreeSet<usize>) -> Vec<String> {
        let mut v: Vec<String> = set.iter().map(|&i| g.vertex_id(i).to_string()).collect();
        v.sort();
        v
    }

    fn seqs(g: &MetricGraph, pu: &PathUnion) -> Vec<Vec<String>> {
        pu.to_json(g)["paths"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect())
            .collect()
    }

    #[test]
    fn single_edge_omit_head() {
        let g = MetricGraph::interval(1.0);
        let pu = path_union_by_id(&g, Some("v1")).unwrap();
        assert_eq!(seqs(&g, &pu), vec![vec!["v0", "e1", "v1"]]);
        let st = st_active_set(&pu, &g).unwrap();
        assert_eq!(named(&g, &st.i_star), ["v0"]);
        assert!(st.j_star.is_empty());
        assert!(matches!(path_union(&g, None), Err(Error::Infeasible(_))));
    }

    #[test]
    fn three_star() {
        let g = MetricGraph::star(3, 1.0);
        let pu = path_union_by_id(&g, Some("v3")).unwrap();
        assert_eq!(
            seqs(&g, &pu),
            vec![vec!["v1", "e1", "vc", "e3", "v3"], vec!["v2", "e2", "vc"]]
        );
        assert!(verify_tf(&pu, &g).is_empty());
        let st = st_active_set(&pu, &g).unwrap();
        assert_eq!(named(&g, &st.i_star), ["v1", "v2"]);
        assert!(st.j_star.is_empty());

        let all = path_union(&g, None).unwrap();
        assert_eq!(all.paths.len(), 3);
        assert!(all.paths.iter().all(|p| g.vertex_id(p.finish()) == "vc"));
        assert!(verify_tf(&all, &g).is_empty());
    }

    #[test]
    fn seven_star_interior_has_one_outgoing_edge() {
        let g = MetricGraph::star(7, 1.0);
        let pu = path_union_by_id(&g, Some("v7")).unwrap();
        let st = st_active_set(&pu, &g).unwrap();
        assert_eq!(named(&g, &st.i_star), ["v1", "v2", "v3", "v4", "v5", "v6"]);
        assert!(st.j_star.is_empty());
        let dir = pu.orientation(g.edge_count());
        let vc = g.vertex_index("vc").unwrap();
        let out = dir.iter().flatten().filter(|&&(from, _)| from == vc).count();
        assert_eq!(out, 1);
    }

    #[test]
    fn rejects_non_tree_and_bad_omit() {
        let lp = MetricGraph::new(
            vec!["a".into(), "b".into()],
            vec![crate::graph::Edge::new("e1", "a", "b", 1.0), crate::graph::Edge::new("e2", "a", "b", 1.0)],
        );
        assert!(matches!(path_union(&lp, None), Err(Error::NotATree)));
        let g = MetricGraph::star(3, 1.0);
        assert!(matches!(path_union_by_id(&g, Some("vc")), Err(Error::OmitNotBoundary(_))));
    }

    #[test]
    fn detects_edge_reuse() {
        let g = MetricGraph::path(&[1.0, 1.0]);
        let pu = PathUnion {
            paths: vec![
                DirectedPath { vertices: vec![0, 1, 2], edges: vec![0, 1] },
                DirectedPath { vertices: vec![0, 1], edges: vec![0] },
            ],
            sources: BTreeSet::from([0]),
        };
        assert!(verify_tf(&pu, &g).contains("edge reuse"));
    }

    #[test]
    fn middle_start_violates_condition_three() {
        let g = MetricGraph::path(&[1.0, 1.0]);
        let pu = PathUnion {
            paths: vec![
                DirectedPath { vertices: vec![1, 0], edges: vec![0] },
                DirectedPath { vertices: vec![1, 2], edges: vec![1] },
            ],
            sources: BTreeSet::from([1]),
        };
        let r = verify_tf(&pu, &g);
        assert!(r.contains("condition (3)"), "{r}");
        assert!(matches!(st_active_set(&pu, &g), Err(Error::InvalidPathUnion(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = MetricGraph::star(4, 1.0);
        let pu = path_union_by_id(&g, Some("v2")).unwrap();
        let back = PathUnion::from_json(&g, &pu.to_json(&g)).unwrap();
        assert_eq!(back, pu);
    }
}
