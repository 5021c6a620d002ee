//! The `analyze` report: every quantity of a graph in one record.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundCheck;
use crate::distance::GraphMetric;
use crate::experiments::{spectral_checks, spectral_rel_tol, EXACT_REL_TOL};
use crate::graph::MetricGraph;
use crate::mean::{rho_bounds, rho_exact, rho_monte_carlo};
use crate::spectral::{spectral_gap, SpectralOptions, SpectralResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub rho: f64,
    pub standard_error: f64,
    pub samples: u64,
    pub seed: u64,
    /// `|ρ_exact − ρ_MC| ≤ 4·SE`.
    pub agrees: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub distances_ms: f64,
    pub rho_ms: f64,
    pub diameter_ms: f64,
    pub monte_carlo_ms: f64,
    pub spectral_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub total_length: f64,
    pub edges: usize,
    pub vertices: usize,
    pub betti: usize,
    pub doubly_connected: bool,
    pub diameter: f64,
    pub rho: f64,
    pub rho_monte_carlo: Option<MonteCarloCheck>,
    pub mu2: Option<SpectralResult>,
    pub mu2_rho: Option<f64>,
    pub mu2_rho_sq: Option<f64>,
    pub checks: Vec<BoundCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectral_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeOptions {
    pub tol: f64,
    /// Zero skips the Monte Carlo cross-check.
    pub mc_samples: u64,
    pub seed: u64,
    pub timings: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { tol: 1e-6, mc_samples: 100_000, seed: 0, timings: false }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Spectral non-convergence is reported in `spectral_error`, not returned.
pub fn analyze(g: &MetricGraph, opts: &AnalyzeOptions) -> AnalyzeReport {
    let mut timings = Timings::default();
    let t = Instant::now();
    let metric = GraphMetric::new(g);
    timings.distances_ms = ms(t);

    let t = Instant::now();
    let rho = rho_exact(&metric, false).rho;
    timings.rho_ms = ms(t);

    let t = Instant::now();
    let diameter = metric.diameter();
    timings.diameter_ms = ms(t);

    let t = Instant::now();
    let rho_monte_carlo = (opts.mc_samples > 0).then(|| {
        let mc = rho_monte_carlo(&metric, opts.mc_samples, opts.seed);
        let se = mc.standard_error.unwrap_or(0.0);
        MonteCarloCheck {
            rho: mc.rho,
            standard_error: se,
            samples: opts.mc_samples,
            seed: opts.seed,
            agrees: (mc.rho - rho).abs() <= 4.0 * se,
        }
    });
    timings.monte_carlo_ms = ms(t);

    let l = g.total_length();
    let mut checks = rho_bounds(g, rho, 0.0);
    checks.push(BoundCheck::lt("rho_below_diameter", rho, diameter, EXACT_REL_TOL * l));

    let t = Instant::now();
    let (mu2, spectral_error) = match spectral_gap(g, &SpectralOptions::with_tol(opts.tol)) {
        Ok(mu) => {
            checks.extend(spectral_checks(g, mu.value, spectral_rel_tol(&mu, opts.tol), rho));
            (Some(mu), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    timings.spectral_ms = ms(t);

    let value = mu2.as_ref().map(|m| m.value);
    AnalyzeReport {
        total_length: l,
        edges: g.edge_count(),
        vertices: g.vertex_count(),
        betti: g.betti_number(),
        doubly_connected: g.is_doubly_connected(),
        diameter,
        rho,
        rho_monte_carlo,
        mu2,
        mu2_rho: value.map(|m| m * rho),
        mu2_rho_sq: value.map(|m| m * rho * rho),
        checks,
        spectral_error,
        timings: opts.timings.then_some(timings),
    }
}
