//! Closed-form spectra: the interval and the equilateral Neumann star, and
//! the two-edge modes of stars whose arm lengths are in an odd/odd ratio.

use std::f64::consts::PI;

use super::{EigenSystem, Mode, ModeShape};
use crate::error::{Error, Result};
use crate::tolerances::EPS_RAT;

fn cosine_mode(lambda: f64, freq: f64, amps: Vec<f64>, traces: Vec<f64>) -> Mode {
    Mode { lambda, traces, shape: ModeShape::Cosine { freq, amps }, trusted: true }
}

/// `lambda_k = (k pi / l)^2` on `[0, l]`, `f_0 = 1/sqrt(l)`,
/// `f_k = sqrt(2/l) cos(k pi x / l)`.
pub fn interval_analytic(length: f64, num_modes: usize) -> EigenSystem {
    let modes = (0..num_modes)
        .map(|k| {
            let freq = k as f64 * PI / length;
            let amp = if k == 0 { (1.0 / length).sqrt() } else { (2.0 / length).sqrt() };
            let far = if k % 2 == 0 { amp } else { -amp };
            cosine_mode(freq * freq, freq, vec![amp], vec![amp, far])
        })
        .collect();
    EigenSystem::from_modes(modes, 2, None)
}

/// The antisymmetric eigenfunctions `g_{k,j}`, `j = 1..N-1`, of the
/// equilateral star before orthonormalization: `1/sqrt(l)` times cosine on
/// edge 1 and minus cosine on edge `j + 1`. They vanish at the center.
pub fn antisymmetric_family(arms: usize, length: f64, k: usize) -> Vec<Mode> {
    let freq = (k as f64 + 0.5) * PI / length;
    let a = (1.0 / length).sqrt();
    (1..arms)
        .map(|j| {
            let mut amps = vec![0.0; arms];
            amps[0] = a;
            amps[j] = -a;
            let mut traces = vec![0.0];
            traces.extend(&amps);
            cosine_mode(freq * freq, freq, amps, traces)
        })
        .collect()
}

/// Spectrum of the equilateral star `MetricGraph::star(arms, length)` with
/// `c = 1`, `p = 0`: the constant mode, the antisymmetric clusters at
/// `(k + 1/2)^2 pi^2 / l^2` of multiplicity `N - 1` and the simple symmetric
/// modes at `k^2 pi^2 / l^2`. Returns the first `num_clusters` clusters.
pub fn star_analytic(arms: usize, length: f64, num_clusters: usize) -> EigenSystem {
    assert!(arms >= 2, "a star needs at least two arms");
    let n = arms as f64;
    let mut modes = Vec::new();
    let mut emitted = 0;
    let mut k = 0;
    while emitted < num_clusters {
        if emitted == 0 {
            let amp = (1.0 / (n * length)).sqrt();
            modes.push(cosine_mode(0.0, 0.0, vec![amp; arms], vec![amp; arms + 1]));
            emitted += 1;
            continue;
        }
        // antisymmetric family k, orthonormalized by Gram-Schmidt in the
        // amplitude space where <a, b> = (l / 2) a.b
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for g in antisymmetric_family(arms, length, k) {
            let ModeShape::Cosine { amps: mut v, .. } = g.shape else { unreachable!() };
            for b in &basis {
                let c = 0.5 * length * dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let norm = (0.5 * length * dot(&v, &v)).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        let freq = (k as f64 + 0.5) * PI / length;
        for amps in basis {
            let mut traces = vec![0.0];
            traces.extend(&amps);
            modes.push(cosine_mode(freq * freq, freq, amps, traces));
        }
        emitted += 1;
        if emitted == num_clusters {
            break;
        }
        let freq = (k + 1) as f64 * PI / length;
        let amp = (2.0 / (n * length)).sqrt();
        let center = if (k + 1) % 2 == 0 { amp } else { -amp };
        let mut traces = vec![center];
        traces.extend(vec![amp; arms]);
        modes.push(cosine_mode(freq * freq, freq, vec![amp; arms], traces));
        emitted += 1;
        k += 1;
    }
    EigenSystem::from_modes(modes, arms + 1, None)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Whether `l1 / li = (2 n1 + 1) / (2 ni + 1)` to relative accuracy `EPS_RAT`.
pub fn odd_ratio_holds(l1: f64, li: f64, n1: usize, ni: usize) -> bool {
    let want = (2 * n1 + 1) as f64 / (2 * ni + 1) as f64;
    ((l1 / li) - want).abs() <= EPS_RAT * want
}

/// Smallest `(n1, ni)` with `ni < max_n` making the ratio odd/odd.
pub fn find_odd_ratio(l1: f64, li: f64, max_n: usize) -> Option<(usize, usize)> {
    let r = l1 / li;
    (0..max_n).find_map(|ni| {
        let q = r * (2 * ni + 1) as f64;
        let odd = q.round();
        if odd < 1.0 || odd % 2.0 != 1.0 {
            return None;
        }
        let n1 = ((odd - 1.0) / 2.0) as usize;
        odd_ratio_holds(l1, li, n1, ni).then_some((n1, ni))
    })
}

/// Eigenpair of the star `MetricGraph::star_with_lengths(lengths)` supported
/// on edges `0` and `i`, at `mu = (ni + 1/2)^2 pi^2 / l_i^2`. The sign on
/// edge `i` is `-1` when `n1` and `ni` have the same parity.
pub fn rational_star_mode(lengths: &[f64], i: usize, n1: usize, ni: usize) -> Result<Mode> {
    if i == 0 || i >= lengths.len() {
        return Err(Error::Invalid(format!("edge index {i} must name a second arm")));
    }
    let (l1, li) = (lengths[0], lengths[i]);
    if !odd_ratio_holds(l1, li, n1, ni) {
        return Err(Error::RationalConditionFailed(l1, li));
    }
    let freq = (ni as f64 + 0.5) * PI / li;
    let s = if n1 % 2 == ni % 2 { -1.0 } else { 1.0 };
    let r = (2.0 / (l1 + li)).sqrt();
    let mut amps = vec![0.0; lengths.len()];
    amps[0] = r;
    amps[i] = s * r;
    let mut traces = vec![0.0];
    traces.extend(&amps);
    Ok(cosine_mode(freq * freq, freq, amps, traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_cluster_layout() {
        let eig = star_analytic(3, 1.0, 5);
        let sizes: Vec<usize> = eig.clusters.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, [1, 2, 1, 2, 1]);
        let pi2 = PI * PI;
        let want = [0.0, 0.25 * pi2, pi2, 2.25 * pi2, 4.0 * pi2];
        for (c, w) in eig.clusters.iter().zip(want) {
            assert!((c.value - w).abs() < 1e-12 * w.max(1.0));
        }
    }

    #[test]
    fn first_antisymmetric_traces() {
        let g = antisymmetric_family(3, 1.0, 0);
        assert_eq!(g[0].traces, vec![0.0, 1.0, -1.0, 0.0]);
        assert!((g[0].lambda - PI * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn rational_mode_examples() {
        let m = rational_star_mode(&[1.0, 3.0], 1, 0, 1).unwrap();
        assert!((m.lambda - PI * PI / 4.0).abs() < 1e-12);
        assert_eq!(m.traces[0], 0.0);
        let eq = rational_star_mode(&[1.0, 1.0, 1.0], 1, 0, 0).unwrap();
        assert_eq!(eq.traces, antisymmetric_family(3, 1.0, 0)[0].traces);
        assert!(matches!(rational_star_mode(&[1.0, 2.0], 1, 0, 0), Err(Error::RationalConditionFailed(..))));
        assert_eq!(find_odd_ratio(1.0, 3.0, 100), Some((0, 1)));
        assert_eq!(find_odd_ratio(1.0, 2.0, 1000), None);
        assert_eq!(find_odd_ratio(5.0, 7.0, 100), Some((2, 3)));
    }
}
