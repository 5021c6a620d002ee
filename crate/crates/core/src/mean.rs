//! Mean distance `ρ(Γ) = L⁻² ∫∫ dist` and the mean distance function
//! `ρ_Γ(x) = L⁻¹ ∫ dist(x, ·)`, computed exactly from tent strips.
//!
//! For an edge pair the inner integral over the target edge is piecewise
//! quadratic in the source offset, so two-point Gauss–Legendre on every piece
//! integrates it without discretisation error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundCheck;
use crate::distance::GraphMetric;
use crate::graph::{MetricGraph, PointOnEdge};
use crate::strip::{sort_and_merge, GAUSS_NODE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// `∫_e ∫_f dist` for every ordered edge pair, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgePairIntegrals {
    edges: usize,
    data: Vec<f64>,
}

impl EdgePairIntegrals {
    pub fn get(&self, e: usize, f: usize) -> f64 {
        self.data[e * self.edges + f]
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanDistanceReport {
    pub rho: f64,
    pub method: Method,
    /// Zero for the exact integrator; four standard errors for Monte Carlo.
    pub error_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<u64>,
    pub bounds: Vec<BoundCheck>,
    #[serde(skip)]
    pub per_edge_pair: Option<EdgePairIntegrals>,
}

/// Pairwise summation; the result depends only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Exact `ρ(Γ)` with per-edge-pair contributions.
pub fn rho_graph(g: &MetricGraph) -> MeanDistanceReport {
    rho_exact(&GraphMetric::new(g), true)
}

pub fn rho_exact(metric: &GraphMetric<'_>, keep_pairs: bool) -> MeanDistanceReport {
    let g = metric.graph();
    let m = g.edge_count();
    let rows: Vec<(f64, Option<Vec<f64>>)> = (0..m)
        .into_par_iter()
        .map(|e| {
            let len = g.edge(e).length;
            let mut scratch = Vec::with_capacity(16);
            let row: Vec<f64> = (0..m)
                .map(|f| {
                    metric
                        .strips(e, f)
                        .into_iter()
                        .map(|st| st.double_integral(len, &mut scratch))
                        .sum()
                })
                .collect();
            let sum = pairwise_sum(&row);
            (sum, keep_pairs.then_some(row))
        })
        .collect();
    let row_sums: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let total_length = g.total_length();
    let rho = pairwise_sum(&row_sums) / (total_length * total_length);
    let per_edge_pair = keep_pairs.then(|| EdgePairIntegrals {
        edges: m,
        data: rows.into_iter().flat_map(|r| r.1.unwrap_or_default()).collect(),
    });
    MeanDistanceReport {
        rho,
        method: Method::Exact,
        error_bound: 0.0,
        standard_error: None,
        samples: None,
        bounds: rho_bounds(g, rho, 0.0),
        per_edge_pair,
    }
}

/// Length-only bounds on `ρ`: `(2E−1)L/(4E²) ≤ ρ ≤ L/3`, and `ρ ≤ L/4` when
/// the graph has no bridges. Tolerance is `1e−9·L` plus `slack_allowance`.
pub fn rho_bounds(g: &MetricGraph, rho: f64, slack_allowance: f64) -> Vec<BoundCheck> {
    let l = g.total_length();
    let e = g.edge_count() as f64;
    let tol = 1e-9 * l + slack_allowance;
    let mut checks = vec![
        BoundCheck::le("rho_lower_edges", (2.0 * e - 1.0) / (4.0 * e * e) * l, rho, tol),
        BoundCheck::le("rho_upper_third", rho, l / 3.0, tol),
    ];
    if g.is_doubly_connected() {
        checks.push(BoundCheck::le("rho_upper_doubly_connected", rho, l / 4.0, tol));
    }
    checks
}

/// `L·ρ_Γ(x) = ∫_Γ dist(x, y) dy`.
fn distance_integral(metric: &GraphMetric<'_>, x: PointOnEdge) -> f64 {
    let terms: Vec<f64> = (0..metric.graph().edge_count())
        .map(|f| {
            metric
                .strips(x.edge, f)
                .into_iter()
                .map(|st| st.tent(x.offset).integral())
                .sum()
        })
        .collect();
    pairwise_sum(&terms)
}

/// `ρ_Γ(x)`.
pub fn rho_at_point(metric: &GraphMetric<'_>, x: PointOnEdge) -> f64 {
    distance_integral(metric, x) / metric.graph().total_length()
}

/// `ρ_Γ(v)` at a vertex.
pub fn rho_at_vertex(metric: &GraphMetric<'_>, v: usize) -> f64 {
    rho_at_point(metric, metric.graph().vertex_point(v))
}

/// One quadratic piece of `ρ_Γ` along an edge:
/// `ρ_Γ(s) = c0 + c1·(s − start) + c2·(s − start)²` on `[start, end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticPiece {
    pub start: f64,
    pub end: f64,
    pub coeffs: [f64; 3],
}

impl QuadraticPiece {
    pub fn at(&self, s: f64) -> f64 {
        let u = s - self.start;
        self.coeffs[0] + u * (self.coeffs[1] + u * self.coeffs[2])
    }
}

/// Breakpoints of `ρ_Γ` along edge `e` (union over all target strips).
fn rho_function_breakpoints(metric: &GraphMetric<'_>, e: usize) -> Vec<f64> {
    let len = metric.graph().edge(e).length;
    let mut all = vec![0.0, len];
    let mut scratch = Vec::new();
    for f in 0..metric.graph().edge_count() {
        for st in metric.strips(e, f) {
            scratch.clear();
            st.breakpoint_candidates(&mut scratch);
            all.extend_from_slice(&scratch);
        }
    }
    sort_and_merge(&mut all, len);
    all
}

/// `ρ_Γ` restricted to edge `e` as exact quadratic pieces.
pub fn rho_function_on_edge(metric: &GraphMetric<'_>, e: usize) -> Vec<QuadraticPiece> {
    let bps = rho_function_breakpoints(metric, e);
    let at = |s: f64| rho_at_point(metric, PointOnEdge { edge: e, offset: s });
    bps.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let h = b - a;
            let (y0, y1, y2) = (at(a), at(0.5 * (a + b)), at(b));
            QuadraticPiece {
                start: a,
                end: b,
                coeffs: [
                    y0,
                    (4.0 * y1 - 3.0 * y0 - y2) / h,
                    2.0 * (y0 - 2.0 * y1 + y2) / (h * h),
                ],
            }
        })
        .collect()
}

/// `L⁻¹ ∫_Γ ρ_Γ(x) dx`, integrating the pointwise function piece by piece.
/// Agrees with [`rho_exact`] up to rounding; the summation order differs.
pub fn rho_from_point_function(metric: &GraphMetric<'_>) -> f64 {
    let g = metric.graph();
    let per_edge: Vec<f64> = (0..g.edge_count())
        .map(|e| {
            let bps = rho_function_breakpoints(metric, e);
            let pieces: Vec<f64> = bps
                .windows(2)
                .map(|w| {
                    let half = 0.5 * (w[1] - w[0]);
                    let mid = 0.5 * (w[0] + w[1]);
                    let f = |s| rho_at_point(metric, PointOnEdge { edge: e, offset: s });
                    half * (f(mid - half * GAUSS_NODE) + f(mid + half * GAUSS_NODE))
                })
                .collect();
            pairwise_sum(&pieces)
        })
        .collect();
    pairwise_sum(&per_edge) / g.total_length()
}

/// Whether `ρ_Γ` is constant up to `rel_tol·L`. Loops pass; nothing else is
/// known to.
pub fn rho_function_is_constant(metric: &GraphMetric<'_>, rel_tol: f64) -> bool {
    let g = metric.graph();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in 0..g.edge_count() {
        for piece in rho_function_on_edge(metric, e) {
            let mut probe = vec![piece.start, piece.end];
            if piece.coeffs[2] != 0.0 {
                let vertex = piece.start - piece.coeffs[1] / (2.0 * piece.coeffs[2]);
                if (piece.start..=piece.end).contains(&vertex) {
                    probe.push(vertex);
                }
            }
            for s in probe {
                let v = piece.at(s);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    hi - lo <= rel_tol * g.total_length()
}

/// A point with `ρ_Γ(x) = ρ(Γ)`, found as the first root of `ρ_Γ − ρ` over
/// the exact quadratic pieces, scanning edges in order. Such a point exists
/// because `ρ` is the mean of the continuous function `ρ_Γ`.
pub fn mean_point(metric: &GraphMetric<'_>, rho: f64) -> PointOnEdge {
    let g = metric.graph();
    let tol = 1e-12 * g.total_length();
    let mut best = (f64::INFINITY, metric.graph().vertex_point(0));
    for e in 0..g.edge_count() {
        for piece in rho_function_on_edge(metric, e) {
            let [c0, c1, c2] = piece.coeffs;
            let c0 = c0 - rho;
            let h = piece.end - piece.start;
            for u in [0.0, h] {
                let r = (c0 + u * (c1 + u * c2)).abs();
                if r < best.0 {
                    best = (r, PointOnEdge { edge: e, offset: piece.start + u });
                }
            }
            if best.0 <= tol {
                return best.1;
            }
            if let Some(u) = quadratic_root_in(c2, c1, c0, h) {
                return PointOnEdge { edge: e, offset: piece.start + u };
            }
        }
    }
    best.1
}

/// Smallest root of `a u² + b u + c` in `[0, h]`.
fn quadratic_root_in(a: f64, b: f64, c: f64, h: f64) -> Option<f64> {
    let inside = |u: f64| (u >= 0.0 && u <= h).then_some(u);
    let scale = a.abs() * h * h + b.abs() * h;
    if a.abs() * h * h <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        if b == 0.0 {
            return None;
        }
        return inside(-c / b);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = [q / a, if q != 0.0 { c / q } else { f64::NAN }];
    roots.sort_by(f64::total_cmp);
    roots.into_iter().filter(|r| r.is_finite()).find_map(inside)
}

/// Unbiased Monte Carlo estimate: point pairs drawn uniformly by length.
pub fn rho_monte_carlo(metric: &GraphMetric<'_>, samples: u64, seed: u64) -> MeanDistanceReport {
    let g = metric.graph();
    let samples = samples.max(1);
    let cumulative: Vec<f64> = g
        .edges()
        .iter()
        .scan(0.0, |acc, e| {
            *acc += e.length;
            Some(*acc)
        })
        .collect();
    let total = g.total_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let r = rng.random::<f64>() * total;
        let edge = cumulative.partition_point(|&c| c <= r).min(g.edge_count() - 1);
        let len = g.edge(edge).length;
        PointOnEdge { edge, offset: rng.random::<f64>() * len }
    };
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 1..=samples {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let d = metric.point_distance(x, y);
        let delta = d - mean;
        mean += delta / k as f64;
        m2 += delta * (d - mean);
    }
    let variance = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    let se = (variance / samples as f64).sqrt();
    MeanDistanceReport {
        rho: mean,
        method: Method::MonteCarlo,
        error_bound: 4.0 * se,
        standard_error: Some(se),
        samples: Some(samples),
        bounds: rho_bounds(g, mean, 4.0 * se),
        per_edge_pair: None,
    }
}

/// Level-set counting function `ξ_x(t) = #{y : dist(x, y) = t}`, constant on
/// each open interval between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetProfile {
    pub base: PointOnEdge,
    pub breakpoints: Vec<f64>,
    /// `counts[i]` is `ξ_x` on `(breakpoints[i], breakpoints[i + 1])`.
    pub counts: Vec<usize>,
}

impl LevelSetProfile {
    /// Right-limit at breakpoints; zero outside `[0, M(x))`.
    pub fn count_at(&self, t: f64) -> usize {
        match self.breakpoints.partition_point(|&b| b <= t) {
            0 => 0,
            i if i >= self.breakpoints.len() => 0,
            i => self.counts[i - 1],
        }
    }

    /// `∫ ξ_x dt`, which equals the total length.
    pub fn measure(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| c as f64 * (w[1] - w[0]))
            .sum()
    }

    pub fn max_distance(&self) -> f64 {
        *self.breakpoints.last().expect("profile has breakpoints")
    }
}

/// Collects the monotone pieces of `dist(x, ·)` along every edge.
pub fn level_set_profile(metric: &GraphMetric<'_>, x: PointOnEdge) -> LevelSetProfile {
    let g = metric.graph();
    let mut pieces = Vec::with_capacity(2 * g.edge_count() + 2);
    for f in 0..g.edge_count() {
        for st in metric.strips(x.edge, f) {
            for (a, b) in st.tent(x.offset).monotone_pieces() {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                if hi > lo {
                    pieces.push((lo.max(0.0), hi));
                }
            }
        }
    }
    let top = pieces.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut breakpoints: Vec<f64> = pieces.iter().flat_map(|&(a, b)| [a, b]).collect();
    breakpoints.push(0.0);
    sort_and_merge(&mut breakpoints, top);
    breakpoints[0] = 0.0;

    let nearest = |v: f64| {
        let i = breakpoints.partition_point(|&b| b < v);
        if i == 0 {
            0
        } else if i == breakpoints.len() || v - breakpoints[i - 1] < breakpoints[i] - v {
            i - 1
        } else {
            i
        }
    };
    let mut diff = vec![0isize; breakpoints.len()];
    for &(a, b) in &pieces {
        let (i, j) = (nearest(a), nearest(b));
        if j > i {
            diff[i] += 1;
            diff[j] -= 1;
        }
    }
    let mut merged = vec![breakpoints[0]];
    let mut counts: Vec<usize> = Vec::with_capacity(breakpoints.len() - 1);
    let mut running = 0isize;
    for (i, d) in diff[..breakpoints.len() - 1].iter().enumerate() {
        running += d;
        let c = running as usize;
        if counts.last() == Some(&c) {
            *merged.last_mut().expect("nonempty") = breakpoints[i + 1];
        } else {
            counts.push(c);
            merged.push(breakpoints[i + 1]);
        }
    }
    LevelSetProfile { base: x, breakpoints: merged, counts }
}

/// `ρ_Γ(x) = L⁻¹ ∫_0^{M(x)} t·ξ_x(t) dt`.
pub fn rho_via_coarea(profile: &LevelSetProfile, total_length: f64) -> f64 {
    let terms: Vec<f64> = profile
        .breakpoints
        .windows(2)
        .zip(&profile.counts)
        .map(|(w, &c)| c as f64 * 0.5 * (w[1] - w[0]) * (w[1] + w[0]))
        .collect();
    pairwise_sum(&terms) / total_length
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, Family, FamilySpec, Lengths};

    fn eq(family: Family) -> MetricGraph {
        generate(&FamilySpec::equilateral(family, 1.0)).unwrap()
    }

    fn pt(e: usize, s: f64) -> PointOnEdge {
        PointOnEdge { edge: e, offset: s }
    }

    #[test]
    fn rho_at_point_examples() {
        let i = eq(Family::Path { m: 1 });
        let m = GraphMetric::new(&i);
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let expect = s * s - s + 0.5;
            assert!((rho_at_point(&m, pt(0, s)) - expect).abs() < 1e-15, "s={s}");
        }
        let lp = eq(Family::Cycle { m: 1 });
        let m = GraphMetric::new(&lp);
        for s in [0.0, 0.3, 1.0] {
            assert!((rho_at_point(&m, pt(0, s)) - 0.25).abs() < 1e-15);
        }
        let star = eq(Family::Star { m: 3 });
        let m = GraphMetric::new(&star);
        assert!((rho_at_point(&m, pt(0, 0.0)) - 1.0 / 6.0).abs() < 1e-15);
        // general star function x²/L + (m−2)x/m + L/(2m)
        let x: f64 = 0.2;
        let expect = x * x + x / 3.0 + 1.0 / 6.0;
        assert!((rho_at_point(&m, pt(1, x)) - expect).abs() < 1e-15);
    }

    #[test]
    fn rho_graph_examples() {
        let cases: [(Family, f64); 3] = [
            (Family::Path { m: 1 }, 1.0 / 3.0),
            (Family::Star { m: 3 }, 7.0 / 27.0),
            (Family::Flower { m: 2 }, 3.0 / 16.0),
        ];
        for (family, expect) in cases {
            let r = rho_graph(&eq(family.clone()));
            assert!((r.rho - expect).abs() < 1e-14, "{family:?}: {}", r.rho);
            assert_eq!(r.error_bound, 0.0);
        }
        let flower = generate(&FamilySpec::new(
            Family::Flower { m: 2 },
            Lengths::Explicit { lengths: vec![0.3, 0.7] },
            0,
        ))
        .unwrap();
        assert!((rho_graph(&flower).rho - 0.1975).abs() < 1e-14);
    }

    #[test]
    fn pair_contributions_are_symmetric() {
        let g = generate(&FamilySpec::new(
            Family::RandomGraph { edges: 6, betti: 2 },
            Lengths::Random { total: 1.0 },
            3,
        ))
        .unwrap();
        let r = rho_graph(&g);
        let pairs = r.per_edge_pair.as_ref().unwrap();
        let mut sum = 0.0;
        for e in 0..6 {
            for f in 0..6 {
                assert!((pairs.get(e, f) - pairs.get(f, e)).abs() < 1e-14);
                sum += pairs.get(e, f);
            }
        }
        assert!((sum - r.rho).abs() < 1e-14);
    }

    #[test]
    fn level_sets_examples() {
        let lp = eq(Family::Cycle { m: 1 });
        let m = GraphMetric::new(&lp);
        let p = level_set_profile(&m, pt(0, 0.37));
        assert_eq!(p.breakpoints.len(), 2);
        assert!((p.breakpoints[1] - 0.5).abs() < 1e-15);
        assert_eq!(p.counts, vec![2]);
        assert!((rho_via_coarea(&p, 1.0) - 0.25).abs() < 1e-15);

        let i = eq(Family::Path { m: 1 });
        let m = GraphMetric::new(&i);
        let p = level_set_profile(&m, pt(0, 0.0));
        assert_eq!((p.breakpoints.clone(), p.counts.clone()), (vec![0.0, 1.0], vec![1]));
        assert_eq!(rho_via_coarea(&p, 1.0), 0.5);

        let star = eq(Family::Star { m: 3 });
        let m = GraphMetric::new(&star);
        let p = level_set_profile(&m, pt(0, 0.0));
        assert_eq!(p.counts, vec![3]);
        assert!((p.max_distance() - 1.0 / 3.0).abs() < 1e-15);
        assert!((rho_via_coarea(&p, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(p.count_at(0.1), 3);
        assert_eq!(p.count_at(0.5), 0);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let i = eq(Family::Path { m: 1 });
        let m = GraphMetric::new(&i);
        let a = rho_monte_carlo(&m, 200_000, 9);
        let b = rho_monte_carlo(&m, 200_000, 9);
        assert_eq!(a.rho.to_bits(), b.rho.to_bits());
        let se = a.standard_error.unwrap();
        assert!((a.rho - 1.0 / 3.0).abs() <= 4.0 * se, "{} ± {se}", a.rho);
    }

    #[test]
    fn mean_point_solves_rho_equation() {
        for family in [Family::Path { m: 1 }, Family::Star { m: 4 }, Family::Cycle { m: 1 }] {
            let g = eq(family);
            let m = GraphMetric::new(&g);
            let rho = rho_exact(&m, false).rho;
            let x = mean_point(&m, rho);
            assert!((rho_at_point(&m, x) - rho).abs() < 1e-12);
        }
    }

    #[test]
    fn constancy_tester() {
        let lp = eq(Family::Cycle { m: 3 });
        assert!(rho_function_is_constant(&GraphMetric::new(&lp), 1e-12));
        let f2 = eq(Family::Flower { m: 2 });
        assert!(!rho_function_is_constant(&GraphMetric::new(&f2), 1e-12));
    }

    #[test]
    fn quadratic_roots() {
        assert_eq!(quadratic_root_in(1.0, 0.0, -0.25, 1.0), Some(0.5));
        assert_eq!(quadratic_root_in(0.0, 2.0, -1.0, 1.0), Some(0.5));
        assert_eq!(quadratic_root_in(1.0, 0.0, 1.0, 1.0), None);
        assert_eq!(quadratic_root_in(1.0, -3.0, 2.0, 1.5), Some(1.0));
    }
}
