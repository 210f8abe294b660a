//! P1 finite elements on a metric graph.
//!
//! Global numbering puts the `n` vertex dofs first, then the interior nodes
//! of each edge in edge order. Continuity is exact because every edge end
//! shares its vertex dof; the Kirchhoff condition is natural.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub vertex_count: usize,
    pub elements: Vec<usize>,
    pub ends: Vec<(usize, usize)>,
    pub lengths: Vec<f64>,
    offsets: Vec<usize>,
    total: usize,
}

impl DofMap {
    pub fn new(graph: &MetricGraph, elements_per_edge: usize) -> Self {
        let n = graph.vertex_count();
        let m = graph.edge_count();
        let elements = vec![elements_per_edge; m];
        let mut offsets = Vec::with_capacity(m);
        let mut next = n;
        for &k in &elements {
            offsets.push(next);
            next += k - 1;
        }
        Self {
            vertex_count: n,
            elements,
            ends: (0..m).map(|e| graph.endpoints(e)).collect(),
            lengths: graph.edges().iter().map(|e| e.length).collect(),
            offsets,
            total: next,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn edge_count(&self) -> usize {
        self.elements.len()
    }

    /// Dof of node `j` (0 = tail, `elements[e]` = head) on edge `e`.
    pub fn node(&self, e: usize, j: usize) -> usize {
        let k = self.elements[e];
        if j == 0 {
            self.ends[e].0
        } else if j == k {
            self.ends[e].1
        } else {
            self.offsets[e] + j - 1
        }
    }

    pub fn spacing(&self, e: usize) -> f64 {
        self.lengths[e] / self.elements[e] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.edge_count()).map(|e| self.spacing(e)).fold(0.0, f64::max)
    }

    /// Nodal values along edge `e`, tail to head.
    pub fn edge_values(&self, dofs: &[f64], e: usize) -> Vec<f64> {
        (0..=self.elements[e]).map(|j| dofs[self.node(e, j)]).collect()
    }
}

/// Interior block of one edge: a tridiagonal matrix plus the two entries
/// coupling its first and last interior node to the end vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBlock {
    pub tail: usize,
    pub head: usize,
    pub offset: usize,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub tail_link: f64,
    pub head_link: f64,
}

/// Symmetric matrix with the sparsity of P1 elements on a graph. There is no
/// direct vertex-vertex coupling once every edge has an interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    pub vertex_diag: Vec<f64>,
    pub blocks: Vec<EdgeBlock>,
    dim: usize,
}

impl GraphMatrix {
    fn zeros(map: &DofMap) -> Self {
        let blocks = (0..map.edge_count())
            .map(|e| {
                let interior = map.elements[e] - 1;
                EdgeBlock {
                    tail: map.ends[e].0,
                    head: map.ends[e].1,
                    offset: map.node(e, 1),
                    diag: vec![0.0; interior],
                    off: vec![0.0; interior.saturating_sub(1)],
                    tail_link: 0.0,
                    head_link: 0.0,
                }
            })
            .collect();
        Self { vertex_diag: vec![0.0; map.vertex_count], blocks, dim: map.len() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds the 2x2 element matrix `[[a, b], [b, d]]` for element `i` of edge `e`.
    fn add_element(&mut self, e: usize, i: usize, k: usize, a: f64, b: f64, d: f64) {
        let block = &mut self.blocks[e];
        if i == 0 {
            self.vertex_diag[block.tail] += a;
            block.tail_link += b;
        } else {
            block.diag[i - 1] += a;
        }
        if i + 1 == k {
            self.vertex_diag[block.head] += d;
            block.head_link += b;
        } else {
            block.diag[i] += d;
            if i > 0 {
                block.off[i - 1] += b;
            }
        }
    }

    /// `self + s * other`; both must share the dof map.
    pub fn add_scaled(&self, other: &GraphMatrix, s: f64) -> GraphMatrix {
        let mut out = self.clone();
        for (a, b) in out.vertex_diag.iter_mut().zip(&other.vertex_diag) {
            *a += s * b;
        }
        for (ba, bb) in out.blocks.iter_mut().zip(&other.blocks) {
            for (a, b) in ba.diag.iter_mut().zip(&bb.diag) {
                *a += s * b;
            }
            for (a, b) in ba.off.iter_mut().zip(&bb.off) {
                *a += s * b;
            }
            ba.tail_link += s * bb.tail_link;
            ba.head_link += s * bb.head_link;
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (v, &d) in self.vertex_diag.iter().enumerate() {
            y[v] = d * x[v];
        }
        for b in &self.blocks {
            let k = b.diag.len();
            let o = b.offset;
            for i in 0..k {
                let mut s = b.diag[i] * x[o + i];
                if i > 0 {
                    s += b.off[i - 1] * x[o + i - 1];
                }
                if i + 1 < k {
                    s += b.off[i] * x[o + i + 1];
                }
                y[o + i] = s;
            }
            y[o] += b.tail_link * x[b.tail];
            y[o + k - 1] += b.head_link * x[b.head];
            y[b.tail] += b.tail_link * x[o];
            y[b.head] += b.head_link * x[o + k - 1];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    pub fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.apply(x), y)
    }

    /// Nonzero entries `(row, col, value)` of the upper triangle.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<(usize, usize, f64)> =
            self.vertex_diag.iter().enumerate().map(|(v, &d)| (v, v, d)).collect();
        for b in &self.blocks {
            let o = b.offset;
            for (i, &d) in b.diag.iter().enumerate() {
                out.push((o + i, o + i, d));
            }
            for (i, &d) in b.off.iter().enumerate() {
                out.push((o + i, o + i + 1, d));
            }
            out.push((b.tail.min(o), b.tail.max(o), b.tail_link));
            let last = o + b.diag.len() - 1;
            out.push((b.head.min(last), b.head.max(last), b.head_link));
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.upper_entries() {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stiffness and mass of the P1 discretisation of `z -> -(c z')' + p z`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub dofs: DofMap,
    pub stiffness: GraphMatrix,
    pub mass: GraphMatrix,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    /// `<a, b>` in L2 of the graph.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.quad(a, b)
    }

    /// Interpolates a function given per edge in local coordinates. Vertex
    /// values are taken from the first incident edge end.
    pub fn interpolate(&self, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
        let map = &self.dofs;
        let mut out = vec![0.0; map.len()];
        for e in (0..map.edge_count()).rev() {
            let h = map.spacing(e);
            for j in 0..=map.elements[e] {
                out[map.node(e, j)] = f(e, j as f64 * h);
            }
        }
        out
    }
}

/// Midpoint quadrature per element for `c` and `p`.
pub fn assemble(graph: &MetricGraph, elements_per_edge: usize) -> Result<DiscreteOperator> {
    graph.ensure_valid()?;
    if elements_per_edge < 2 {
        return Err(Error::Invalid("need at least 2 elements per edge".into()));
    }
    let dofs = DofMap::new(graph, elements_per_edge);
    let mut stiffness = GraphMatrix::zeros(&dofs);
    let mut mass = GraphMatrix::zeros(&dofs);
    for (e, edge) in graph.edges().iter().enumerate() {
        let k = dofs.elements[e];
        let h = dofs.spacing(e);
        for i in 0..k {
            let mid = (i as f64 + 0.5) * h;
            let c = edge.diffusion.linear_at(mid, edge.length);
            let p = edge.potential.cell_at(mid, edge.length);
            let (md, mo) = (h / 3.0, h / 6.0);
            stiffness.add_element(e, i, k, c / h + p * md, -c / h + p * mo, c / h + p * md);
            mass.add_element(e, i, k, md, mo, md);
        }
    }
    Ok(DiscreteOperator { dofs, stiffness, mass })
}
