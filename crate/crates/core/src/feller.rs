//! Strong Feller verdicts. A tree with unit diffusion and diagonal noise
//! reaching all but at most one boundary vertex is strong Feller; an
//! eigenfunction whose noisy vertex traces all vanish is a proof of the
//! opposite. Anything else is reported as unknown.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{GraphClass, MetricGraph};
use crate::noise::NoiseModel;
use crate::spectral::analytic::{find_odd_ratio, rational_star_mode};
use crate::spectral::{EigenSystem, ModeShape};
use crate::tolerances::{EPS_CLUSTER, EPS_TRACE};

/// Largest `n_i` tried when looking for an odd/odd length ratio.
pub const RATIO_SEARCH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    StrongFeller,
    NotStrongFeller,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    #[serde(rename = "thm-main")]
    TreeRule,
    #[serde(rename = "hautus")]
    Hautus,
    #[serde(rename = "unknown")]
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessSource {
    /// Kernel vector of `Q^{1/2} M` for a computed cluster.
    Cluster,
    /// Closed-form mode on two arms of a star.
    RationalStar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Cluster of the eigen-system the witness lives in, when it was found
    /// there (or matched there).
    pub cluster: Option<usize>,
    pub eigenvalue: f64,
    /// Unit combination of the cluster basis. For a rational-star witness,
    /// the per-edge amplitudes of `cos(sqrt(mu) x)` with `x` measured from
    /// the leaf.
    pub coeffs: Vec<f64>,
    /// Vertex traces of the witness eigenfunction.
    pub traces: Vec<f64>,
    /// `|Q^{1/2} L f|`.
    pub trace_norm: f64,
    pub source: WitnessSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FellerVerdict {
    pub verdict: Verdict,
    pub rule: Rule,
    pub reason: String,
    pub witness: Option<Witness>,
}

impl FellerVerdict {
    /// `{"verdict", "rule", "reason", "witness": {"cluster", "coeffs", ...}}`.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("verdict serializes")
    }
}

fn check_dims(graph: &MetricGraph, noise: &NoiseModel) -> Result<()> {
    if noise.dim() != graph.vertex_count() {
        return Err(Error::Invalid(format!(
            "noise is {0}x{0} but the graph has {1} vertices",
            noise.dim(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

/// Fires only in the positive direction; `None` means the rule does not apply.
pub fn sufficient_tree_rule(graph: &MetricGraph, noise: &NoiseModel) -> Option<FellerVerdict> {
    if noise.dim() != graph.vertex_count() || graph.classify().ok()? != GraphClass::Tree {
        return None;
    }
    if !graph.all_unit_diffusion() {
        return None;
    }
    let q = noise.diagonal.as_ref()?;
    let quiet: Vec<usize> = graph.boundary().into_iter().filter(|&v| q[v] == 0.0).collect();
    if quiet.len() > 1 {
        return None;
    }
    let reason = match quiet.first() {
        Some(&v) => format!(
            "tree with unit diffusion and diagonal noise at every boundary vertex except {}",
            graph.vertex_id(v)
        ),
        None => "tree with unit diffusion and diagonal noise at every boundary vertex".to_string(),
    };
    Some(FellerVerdict { verdict: Verdict::StrongFeller, rule: Rule::TreeRule, reason, witness: None })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value of `Q^{1/2} M` and its right singular vector,
/// padding with zero rows when the cluster is wider than the vertex set.
pub(crate) fn smallest_singular(a: &DMatrix<f64>) -> (f64, Vec<f64>, DMatrix<f64>) {
    let (n, d) = a.shape();
    let padded = if d > n { a.clone().resize_vertically(d, 0.0) } else { a.clone() };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (i, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty cluster");
    let w = v_t.row(i).iter().copied().collect();
    (s, w, v_t)
}

/// Threshold below which a singular value of `Q^{1/2} M` counts as zero.
pub(crate) fn trace_threshold(m: &DMatrix<f64>) -> f64 {
    EPS_TRACE * spectral_norm(m).max(1.0)
}

/// First trusted cluster whose eigenspace contains a function invisible to
/// the noise, with a verified unit kernel vector.
pub fn hautus_obstruction(eig: &EigenSystem, noise: &NoiseModel) -> Result<Option<Witness>> {
    if noise.dim() != eig.vertex_count {
        return Err(Error::Invalid("noise dimension differs from the vertex count".into()));
    }
    if !eig.clusters.iter().any(|c| c.trusted) {
        return Err(Error::SpectrumTooCoarse);
    }
    for (ci, c) in eig.clusters.iter().enumerate() {
        if !c.trusted {
            continue;
        }
        let m = eig.trace_matrix(ci);
        let a = &noise.q_sqrt * &m;
        let (s, w, _) = smallest_singular(&a);
        if s > trace_threshold(&m) {
            continue;
        }
        let traces = &m * nalgebra::DVector::from_column_slice(&w);
        let trace_norm = (&noise.q_sqrt * &traces).norm();
        if trace_norm > EPS_TRACE {
            continue;
        }
        return Ok(Some(Witness {
            cluster: Some(ci),
            eigenvalue: c.value,
            coeffs: w,
            traces: traces.as_slice().to_vec(),
            trace_norm,
            source: WitnessSource::Cluster,
        }));
    }
    Ok(None)
}

/// Center and leaves of a star (a tree with exactly one vertex of degree
/// above one), with the leaf edges.
fn star_shape(graph: &MetricGraph) -> Option<(usize, Vec<(usize, usize)>)> {
    if !graph.is_tree() || graph.edge_count() < 2 {
        return None;
    }
    let inner: Vec<usize> = (0..graph.vertex_count()).filter(|&v| graph.degree(v) > 1).collect();
    let [center] = inner[..] else { return None };
    let leaves = graph.incidence(center).iter().map(|&(e, _)| (graph.other_end(e, center), e)).collect();
    Some((center, leaves))
}

/// A closed-form two-arm eigenfunction of a star with unit diffusion and no
/// potential, supported on two quiet leaves whose lengths are in an odd/odd
/// ratio.
pub fn rational_star_witness(graph: &MetricGraph, noise: &NoiseModel) -> Option<Witness> {
    let q = noise.diagonal.as_ref()?;
    if noise.dim() != graph.vertex_count() || !graph.all_unit_diffusion() || !graph.zero_potential() {
        return None;
    }
    let (center, leaves) = star_shape(graph)?;
    let quiet: Vec<(usize, usize)> = leaves.into_iter().filter(|&(v, _)| q[v] == 0.0).collect();
    for (a, &(va, ea)) in quiet.iter().enumerate() {
        for &(vb, eb) in &quiet[a + 1..] {
            let lengths = [graph.edge(ea).length, graph.edge(eb).length];
            let Some((n1, n2)) = find_odd_ratio(lengths[0], lengths[1], RATIO_SEARCH) else { continue };
            let mode = rational_star_mode(&lengths, 1, n1, n2).ok()?;
            let ModeShape::Cosine { amps, .. } = &mode.shape else { unreachable!() };
            let mut traces = vec![0.0; graph.vertex_count()];
            traces[va] = amps[0];
            traces[vb] = amps[1];
            traces[center] = mode.traces[0];
            let mut coeffs = vec![0.0; graph.edge_count()];
            coeffs[ea] = amps[0];
            coeffs[eb] = amps[1];
            let trace_norm = noise.apply_sqrt(&traces).iter().map(|x| x * x).sum::<f64>().sqrt();
            if trace_norm > EPS_TRACE {
                continue;
            }
            return Some(Witness {
                cluster: None,
                eigenvalue: mode.lambda,
                coeffs,
                traces,
                trace_norm,
                source: WitnessSource::RationalStar,
            });
        }
    }
    None
}

/// Tree rule, then closed-form star witnesses, then the numerical
/// eigenspace test; never guesses.
pub fn decide_feller(graph: &MetricGraph, eig: &EigenSystem, noise: &NoiseModel) -> Result<FellerVerdict> {
    graph.ensure_valid()?;
    check_dims(graph, noise)?;
    if let Some(v) = sufficient_tree_rule(graph, noise) {
        return Ok(v);
    }
    if let Some(mut w) = rational_star_witness(graph, noise) {
        w.cluster = eig
            .clusters
            .iter()
            .position(|c| (c.value - w.eigenvalue).abs() <= 1e3 * EPS_CLUSTER * w.eigenvalue.max(1.0));
        return Ok(FellerVerdict {
            verdict: Verdict::NotStrongFeller,
            rule: Rule::Hautus,
            reason: format!(
                "star arms in an odd/odd length ratio carry an eigenfunction at {:.6} vanishing at every noisy vertex",
                w.eigenvalue
            ),
            witness: Some(w),
        });
    }
    if let Some(w) = hautus_obstruction(eig, noise)? {
        return Ok(FellerVerdict {
            verdict: Verdict::NotStrongFeller,
            rule: Rule::Hautus,
            reason: format!(
                "eigenvalue {:.6} has an eigenfunction with noisy vertex traces below {:e}",
                w.eigenvalue, EPS_TRACE
            ),
            witness: Some(w),
        });
    }
    let trusted = eig.clusters.iter().filter(|c| c.trusted).count();
    Ok(FellerVerdict {
        verdict: Verdict::Unknown,
        rule: Rule::Unknown,
        reason: format!("no sufficient rule applies and none of the {trusted} trusted clusters is obstructed"),
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::star_analytic;

    #[test]
    fn tree_rule_examples() {
        let g = MetricGraph::star(3, 1.0);
        let q = NoiseModel::diagonal(&[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(sufficient_tree_rule(&g, &q).unwrap().verdict, Verdict::StrongFeller);
        let q = NoiseModel::diagonal(&[5.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(sufficient_tree_rule(&g, &q).is_some());
        let q = NoiseModel::diagonal(&[5.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(sufficient_tree_rule(&g, &q).is_none());
    }

    #[test]
    fn analytic_star_obstruction() {
        let eig = star_analytic(3, 1.0, 6);
        let q = NoiseModel::diagonal(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let w = hautus_obstruction(&eig, &q).unwrap().unwrap();
        assert_eq!(w.cluster, Some(1));
        assert!(w.trace_norm <= 1e-12);
        // the witness lives on edges 2 and 3 only
        assert!(w.traces[1].abs() < 1e-12 && w.traces[0] == 0.0);
        assert!(w.traces[2].abs() > 0.1);
    }

    #[test]
    fn interval_has_no_obstruction() {
        let eig = crate::spectral::interval_analytic(1.0, 20);
        let q = NoiseModel::diagonal(&[0.0, 1.0]).unwrap();
        assert!(hautus_obstruction(&eig, &q).unwrap().is_none());
    }

    #[test]
    fn json_shape() {
        let g = MetricGraph::star_with_lengths(&[1.0, 3.0, 1.7]);
        let q = NoiseModel::diagonal(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let eig = star_analytic(3, 1.0, 3);
        let v = decide_feller(&g, &eig, &q).unwrap();
        let j = v.to_json();
        assert_eq!(j["verdict"], "NotStrongFeller");
        assert_eq!(j["rule"], "hautus");
        assert_eq!(j["witness"]["source"], "rational-star");
        assert!(j["witness"]["coeffs"].is_array());
    }
}
