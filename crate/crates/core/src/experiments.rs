//! Batch verification of the mean-distance and spectral inequalities, the
//! `μ₂ρ²` sweep over ensembles, and the randomized surgery suite.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundCheck, Verdict};
use crate::distance::GraphMetric;
use crate::error::Result;
use crate::generators::{generate, Family, FamilySpec, Lengths};
use crate::graph::{MetricGraph, PointOnEdge};
use crate::io::fmt_g17;
use crate::mean::{mean_point, rho_bounds, rho_exact};
use crate::spectral::{dirichlet_eigenvalue, spectral_gap, SpectralOptions, SpectralResult};
use crate::surgery::{cut_vertex, random_cut, unfold_arms, pendant_arms};

/// Relative slack allowed on checks that do not involve an eigenvalue.
pub const EXACT_REL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanVertex {
    pub edge: String,
    pub offset: f64,
    /// Vertex used for the Dirichlet condition (existing, or created by
    /// subdivision).
    pub vertex: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub descriptor: String,
    pub total_length: f64,
    pub edges: usize,
    pub vertices: usize,
    pub betti: usize,
    pub doubly_connected: bool,
    pub rho: f64,
    pub diameter: f64,
    pub mu2: Option<f64>,
    pub mu2_error_estimate: Option<f64>,
    pub mean_vertex: MeanVertex,
    pub lambda1: Option<f64>,
    pub lambda1_error_estimate: Option<f64>,
    pub mu2_rho: Option<f64>,
    pub mu2_rho_sq: Option<f64>,
    pub checks: Vec<BoundCheck>,
    pub failed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
}

impl VerificationRecord {
    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Relative uncertainty of a spectral value: the requested tolerance plus the
/// extrapolation error estimate.
pub fn spectral_rel_tol(r: &SpectralResult, tol: f64) -> f64 {
    tol + r.error_estimate / r.value.abs()
}

/// Splits the graph at `x` unless it already sits (up to `1e-9·ℓ`) on a
/// vertex; returns the graph and the vertex id.
pub fn vertex_at(g: &MetricGraph, x: PointOnEdge) -> Result<(MetricGraph, String)> {
    let e = g.edge(x.edge);
    let snap = 1e-9 * e.length;
    if x.offset <= snap {
        Ok((g.clone(), g.vertex_id(e.u).to_string()))
    } else if x.offset >= e.length - snap {
        Ok((g.clone(), g.vertex_id(e.v).to_string()))
    } else {
        g.subdivide_at(x.edge, x.offset)
    }
}

/// Products `μ₂ρ`, `μ₂ρ²` with their bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProducts {
    pub mu2: f64,
    pub rho: f64,
    pub mu2_rho: f64,
    pub mu2_rho_sq: f64,
    pub checks: Vec<BoundCheck>,
}

/// Spectral checks for given `μ₂` (with relative uncertainty) and exact `ρ`.
///
/// The edge-count upper bound `μ₂ ≤ π²E²/L²` does not hold for the single
/// loop (`μ₂ = 4π²/L²`, `E = 1`); there it is replaced by the loop value, and
/// the `π²E²/9` term is dropped from the `μ₂ρ²` upper bound.
pub fn spectral_checks(g: &MetricGraph, mu2: f64, mu2_rel: f64, rho: f64) -> Vec<BoundCheck> {
    let l = g.total_length();
    let e = g.edge_count() as f64;
    let beta = g.betti_number() as f64;
    let pi2 = PI * PI;
    let single_loop = g.edge_count() == 1 && g.betti_number() == 1;
    let (edge_factor, prod_edges) = if single_loop {
        (4.0, f64::INFINITY)
    } else {
        (e * e, pi2 * e * e / 9.0)
    };
    let prod = mu2 * rho;
    let prod2 = mu2 * rho * rho;
    let tol = |x: f64| x.abs() * (mu2_rel + EXACT_REL_TOL);
    vec![
        BoundCheck::le("mu2_lower_nicaise", pi2 / (l * l), mu2, tol(mu2)),
        BoundCheck::le("mu2_upper_edges", mu2, pi2 * edge_factor / (l * l), tol(mu2)),
        BoundCheck::le(
            "mu2_rho_sq_lower_pi",
            pi2 * (2.0 * e - 1.0).powi(2) / (16.0 * e.powi(4)),
            prod2,
            tol(prod2),
        ),
        BoundCheck::le(
            "mu2_rho_sq_upper",
            prod2,
            prod_edges.min(pi2 * (1.0 + beta).powi(2)),
            tol(prod2),
        ),
        BoundCheck::le("mu2_rho_lower", 1.0 / l, prod, tol(prod)),
        BoundCheck::le(
            "mu2_rho_sq_lower_edges",
            (2.0 * e - 1.0) / (4.0 * e * e),
            prod2,
            tol(prod2),
        ),
    ]
}

const SPECTRAL_CHECKS: [&str; 6] = [
    "mu2_lower_nicaise",
    "mu2_upper_edges",
    "mu2_rho_sq_lower_pi",
    "mu2_rho_sq_upper",
    "mu2_rho_lower",
    "mu2_rho_sq_lower_edges",
];

pub fn comparison_products(g: &MetricGraph, tol: f64) -> Result<ComparisonProducts> {
    let mu = spectral_gap(g, &SpectralOptions::with_tol(tol))?;
    let rho = rho_exact(&GraphMetric::new(g), false).rho;
    Ok(ComparisonProducts {
        mu2: mu.value,
        rho,
        mu2_rho: mu.value * rho,
        mu2_rho_sq: mu.value * rho * rho,
        checks: spectral_checks(g, mu.value, spectral_rel_tol(&mu, tol), rho),
    })
}

/// Computes `ρ`, diameter, `μ₂`, and `λ₁` at a point with `ρ_Γ(v) = ρ(Γ)`,
/// and checks every inequality. Spectral failures are recorded and make the
/// dependent checks indeterminate.
pub fn verify_graph(g: &MetricGraph, descriptor: &str, tol: f64) -> Result<VerificationRecord> {
    let metric = GraphMetric::new(g);
    let rho = rho_exact(&metric, false).rho;
    let diameter = metric.diameter();
    let l = g.total_length();
    let mut checks = rho_bounds(g, rho, 0.0);
    checks.push(BoundCheck::lt("rho_below_diameter", rho, diameter, EXACT_REL_TOL * l));

    let x = mean_point(&metric, rho);
    let (split, vid) = vertex_at(g, x)?;
    let mean_vertex = MeanVertex {
        edge: g.edge(x.edge).id.clone(),
        offset: x.offset,
        vertex: vid.clone(),
    };

    let opts = SpectralOptions::with_tol(tol);
    let mut errors = Vec::new();
    let mu = spectral_gap(g, &opts).map_err(|e| errors.push(format!("spectral gap: {e}"))).ok();
    let lam = dirichlet_eigenvalue(&split, &vid, &opts)
        .map_err(|e| errors.push(format!("dirichlet eigenvalue: {e}")))
        .ok();

    match &mu {
        Some(mu) => checks.extend(spectral_checks(g, mu.value, spectral_rel_tol(mu, tol), rho)),
        None => checks.extend(SPECTRAL_CHECKS.iter().map(|n| BoundCheck::indeterminate(*n))),
    }
    match (&mu, &lam) {
        (Some(mu), Some(lam)) => {
            let rel = spectral_rel_tol(mu, tol) + spectral_rel_tol(lam, tol);
            checks.push(BoundCheck::le("lambda1_le_mu2", lam.value, mu.value, rel * mu.value));
        }
        _ => checks.push(BoundCheck::indeterminate("lambda1_le_mu2")),
    }
    match &lam {
        Some(lam) => {
            let p = lam.value * rho * l;
            let rel = spectral_rel_tol(lam, tol) + EXACT_REL_TOL;
            checks.push(BoundCheck::le("lambda1_rho_length", 1.0, p, rel * p));
        }
        None => checks.push(BoundCheck::indeterminate("lambda1_rho_length")),
    }

    let failed = checks.iter().any(|c| c.verdict == Verdict::Fail);
    let mu2 = mu.as_ref().map(|m| m.value);
    Ok(VerificationRecord {
        descriptor: descriptor.to_string(),
        total_length: l,
        edges: g.edge_count(),
        vertices: g.vertex_count(),
        betti: g.betti_number(),
        doubly_connected: g.is_doubly_connected(),
        rho,
        diameter,
        mu2,
        mu2_error_estimate: mu.as_ref().map(|m| m.error_estimate),
        mean_vertex,
        lambda1: lam.as_ref().map(|m| m.value),
        lambda1_error_estimate: lam.as_ref().map(|m| m.error_estimate),
        mu2_rho: mu2.map(|m| m * rho),
        mu2_rho_sq: mu2.map(|m| m * rho * rho),
        checks,
        failed,
        errors,
    })
}

/// A family entry of a sweep; random families are instantiated `count` times
/// with seeds `seed, seed + 1, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEntry {
    #[serde(flatten)]
    pub spec: FamilySpec,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub entries: Vec<EnsembleEntry>,
}

impl Ensemble {
    pub fn specs(&self) -> Vec<FamilySpec> {
        self.entries
            .iter()
            .flat_map(|entry| {
                (0..entry.count as u64).map(move |k| FamilySpec {
                    seed: entry.spec.seed + k,
                    ..entry.spec.clone()
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub descriptor: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub records: usize,
    pub failed_records: usize,
    pub errors: Vec<String>,
    pub min_mu2_rho_sq: Option<Extremum>,
    pub max_mu2_rho_sq: Option<Extremum>,
    /// `[π²/9, π²/4]`.
    pub conjectured_range: [f64; 2],
    pub all_in_conjectured_range: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub summary: SweepSummary,
    pub records: Vec<VerificationRecord>,
}

/// Verifies every graph of the ensemble. Records are ordered by descriptor;
/// generation or verification errors are collected and the sweep goes on.
pub fn sweep(ensemble: &Ensemble, tol: f64) -> SweepResult {
    let specs = ensemble.specs();
    let outcomes: Vec<std::result::Result<VerificationRecord, String>> = specs
        .par_iter()
        .map(|spec| {
            let d = spec.descriptor();
            generate(spec)
                .and_then(|g| verify_graph(&g, &d, tol))
                .map_err(|e| format!("{d}: {e}"))
        })
        .collect();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(e) => errors.push(e),
        }
    }
    records.sort_by(|a, b| a.descriptor.cmp(&b.descriptor));
    errors.sort();
    let summary = summarize(&records, errors, tol);
    SweepResult { summary, records }
}

pub fn summarize(records: &[VerificationRecord], errors: Vec<String>, tol: f64) -> SweepSummary {
    let range = [PI * PI / 9.0, PI * PI / 4.0];
    let mut min: Option<Extremum> = None;
    let mut max: Option<Extremum> = None;
    let mut inside = true;
    for r in records {
        let Some(v) = r.mu2_rho_sq else { continue };
        if min.as_ref().is_none_or(|m| v < m.value) {
            min = Some(Extremum { value: v, descriptor: r.descriptor.clone() });
        }
        if max.as_ref().is_none_or(|m| v > m.value) {
            max = Some(Extremum { value: v, descriptor: r.descriptor.clone() });
        }
        let slack = 10.0 * tol * v;
        inside &= v >= range[0] - slack && v <= range[1] + slack;
    }
    SweepSummary {
        records: records.len(),
        failed_records: records.iter().filter(|r| r.failed).count(),
        errors,
        min_mu2_rho_sq: min,
        max_mu2_rho_sq: max,
        conjectured_range: range,
        all_in_conjectured_range: inside,
    }
}

pub const CSV_COLUMNS: [&str; 16] = [
    "descriptor",
    "total_length",
    "edges",
    "vertices",
    "betti",
    "doubly_connected",
    "rho",
    "diameter",
    "mu2",
    "lambda1",
    "mu2_rho",
    "mu2_rho_sq",
    "mean_vertex_edge",
    "mean_vertex_offset",
    "failed_checks",
    "failed",
];

/// One row per record, columns [`CSV_COLUMNS`]; absent values are empty.
pub fn records_to_csv(records: &[VerificationRecord]) -> Result<String> {
    let opt = |x: Option<f64>| x.map(fmt_g17).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        let failed: Vec<&str> = r
            .checks
            .iter()
            .filter(|c| c.verdict == Verdict::Fail)
            .map(|c| c.name.as_str())
            .collect();
        w.write_record([
            r.descriptor.clone(),
            fmt_g17(r.total_length),
            r.edges.to_string(),
            r.vertices.to_string(),
            r.betti.to_string(),
            r.doubly_connected.to_string(),
            fmt_g17(r.rho),
            fmt_g17(r.diameter),
            opt(r.mu2),
            opt(r.lambda1),
            opt(r.mu2_rho),
            opt(r.mu2_rho_sq),
            r.mean_vertex.edge.clone(),
            fmt_g17(r.mean_vertex.offset),
            failed.join(";"),
            r.failed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| crate::error::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryViolation {
    pub seed: u64,
    pub descriptor: String,
    pub operation: String,
    pub rho_before: f64,
    pub rho_after: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub cuts: usize,
    /// Random draws that found no valid nontrivial cut (not counted).
    pub cuts_skipped: usize,
    pub unfoldings: usize,
    pub min_cut_slack: Option<f64>,
    pub min_unfold_slack: Option<f64>,
    /// `max |ρ(path) − L/3|` over fully unfolded trees.
    pub max_path_error: f64,
    pub violations: Vec<SurgeryViolation>,
}

impl SurgeryReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn min_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.min(b)))
}

/// `count` random nontrivial cuts on `random_graph(6, 2)` and `count`
/// randomly unfolded random trees, seeds `seed, seed + 1, …`. Every cut and
/// unfolding must strictly increase `ρ`.
pub fn surgery_monotonicity_suite(seed: u64, count: usize) -> Result<SurgeryReport> {
    let rho = |g: &MetricGraph| rho_exact(&GraphMetric::new(g), false).rho;
    let mut report = SurgeryReport::default();
    for k in 0..count as u64 {
        let s = seed + k;
        let spec = FamilySpec::new(
            Family::RandomGraph { edges: 6, betti: 2 },
            Lengths::Random { total: 1.0 },
            s,
        );
        let g = generate(&spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        rng.set_stream(7);
        let Some(cut) = random_cut(&g, &mut rng, 64) else {
            report.cuts_skipped += 1;
            continue;
        };
        let h = cut_vertex(&g, &cut)?;
        let (before, after) = (rho(&g), rho(&h));
        report.cuts += 1;
        report.min_cut_slack = min_opt(report.min_cut_slack, after - before);
        if after <= before {
            report.violations.push(SurgeryViolation {
                seed: s,
                descriptor: spec.descriptor(),
                operation: format!("cut {cut:?}"),
                rho_before: before,
                rho_after: after,
            });
        }
    }

    for k in 0..count as u64 {
        let s = seed + k;
        let spec = FamilySpec::new(
            Family::RandomTree { edges: 2 + (s % 7) as usize },
            Lengths::Random { total: 1.0 },
            s,
        );
        let mut g = generate(&spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        rng.set_stream(9);
        let mut current = rho(&g);
        while !g.is_path() {
            let branch: Vec<usize> = (0..g.vertex_count())
                .filter(|&v| g.degree(v) >= 3 && pendant_arms(&g, v).len() >= 2)
                .collect();
            let v = branch[rand::Rng::random_range(&mut rng, 0..branch.len())];
            let arms = pendant_arms(&g, v);
            let i = rand::Rng::random_range(&mut rng, 0..arms.len());
            let j = (i + rand::Rng::random_range(&mut rng, 1..arms.len())) % arms.len();
            let next = unfold_arms(&g, &arms[i], &arms[j])?;
            let after = rho(&next);
            report.unfoldings += 1;
            report.min_unfold_slack = min_opt(report.min_unfold_slack, after - current);
            if after <= current {
                report.violations.push(SurgeryViolation {
                    seed: s,
                    descriptor: spec.descriptor(),
                    operation: format!("unfold at {}", g.vertex_id(v)),
                    rho_before: current,
                    rho_after: after,
                });
            }
            g = next;
            current = after;
        }
        let err = (current - g.total_length() / 3.0).abs();
        report.max_path_error = report.max_path_error.max(err);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(family: Family) -> MetricGraph {
        generate(&FamilySpec::equilateral(family, 1.0)).unwrap()
    }

    #[test]
    fn equality_cases() {
        let f = verify_graph(&eq(Family::Flower { m: 3 }), "flower", 1e-6).unwrap();
        assert!(!f.failed, "{f:?}");
        assert!(f.check("rho_lower_edges").unwrap().slack.abs() < 1e-12);

        let i = verify_graph(&eq(Family::Path { m: 1 }), "interval", 1e-6).unwrap();
        assert!(!i.failed, "{i:?}");
        assert!(i.check("rho_upper_third").unwrap().slack.abs() < 1e-12);
        assert!((i.mu2_rho_sq.unwrap() - PI * PI / 9.0).abs() < 1e-5 * PI * PI / 9.0);
        assert_eq!(i.mean_vertex.vertex, "e0.m");

        let lp = verify_graph(&eq(Family::Cycle { m: 1 }), "loop", 1e-6).unwrap();
        assert!(!lp.failed, "{lp:?}");
        assert!(lp.check("rho_upper_doubly_connected").unwrap().slack.abs() < 1e-12);
        assert_eq!(lp.mean_vertex.vertex, "v0");
    }

    #[test]
    fn sweep_orders_and_summarizes() {
        let ensemble = Ensemble {
            entries: vec![
                EnsembleEntry { spec: FamilySpec::equilateral(Family::Path { m: 1 }, 1.0), count: 1 },
                EnsembleEntry {
                    spec: FamilySpec::new(Family::RandomTree { edges: 4 }, Lengths::Random { total: 1.0 }, 5),
                    count: 3,
                },
                EnsembleEntry {
                    spec: FamilySpec::equilateral(Family::Firework { m: 0, n: 1, spoke: 1.0, leaf: 1.0 }, 1.0),
                    count: 1,
                },
            ],
        };
        let out = sweep(&ensemble, 1e-6);
        assert_eq!(out.records.len(), 4);
        assert_eq!(out.summary.errors.len(), 1);
        assert!(out.records.windows(2).all(|w| w[0].descriptor <= w[1].descriptor));
        let min = out.summary.min_mu2_rho_sq.as_ref().unwrap();
        let lowest = out.records.iter().filter_map(|r| r.mu2_rho_sq).fold(f64::INFINITY, f64::min);
        assert_eq!(min.value, lowest);
        assert!(out.records.iter().all(|r| !r.failed));
        let csv = records_to_csv(&out.records).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("descriptor,total_length"));
    }

    #[test]
    fn small_surgery_suite() {
        let r = surgery_monotonicity_suite(100, 10).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.cuts > 0 && r.unfoldings > 0);
        assert!(r.max_path_error < 1e-10);
    }
}
