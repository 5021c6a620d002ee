//! Spectral gap `μ₂` (standard vertex conditions) and the one-point Dirichlet
//! eigenvalue `λ₁(Γ, v)` by conforming P1 finite elements on the metric graph,
//! with Richardson extrapolation across nested meshes.
//!
//! Vertex DOFs are shared by every incident element, so continuity is built
//! into the space and the Kirchhoff conditions come out as natural conditions.
//! DOFs are numbered vertices first, then the interior nodes of each edge in
//! edge order; the interior of an edge is a tridiagonal chain coupled only to
//! its two end vertices, which the shifted solver exploits.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;

/// Compressed sparse rows, square.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { n, row_ptr, cols, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .position(|&c| c == j)
            .map_or(0.0, |p| self.values[range.start + p])
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let row = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = row.map(|p| self.values[p] * x[self.cols[p]]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.cols[p])] += self.values[p];
            }
        }
        d
    }

    fn quad(&self, x: &[f64], y: &[f64], tmp: &mut [f64]) -> f64 {
        self.mul_vec(y, tmp);
        dot(x, tmp)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform subdivision of every edge into `segments[e]` elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub segments: Vec<usize>,
    lengths: Vec<f64>,
    ends: Vec<(usize, usize)>,
    edge_base: Vec<usize>,
    vertex_count: usize,
    dof_count: usize,
}

impl Mesh {
    pub fn new(g: &MetricGraph, segments: Vec<usize>) -> Self {
        assert_eq!(segments.len(), g.edge_count());
        assert!(segments.iter().all(|&n| n >= 2), "need an interior node on every edge");
        let mut edge_base = Vec::with_capacity(segments.len());
        let mut next = g.vertex_count();
        for &n in &segments {
            edge_base.push(next);
            next += n - 1;
        }
        Mesh {
            lengths: g.edges().iter().map(|e| e.length).collect(),
            ends: g.edges().iter().map(|e| (e.u, e.v)).collect(),
            segments,
            edge_base,
            vertex_count: g.vertex_count(),
            dof_count: next,
        }
    }

    /// `n_e = max(4, ⌈ℓ_e / h⌉)`.
    pub fn with_target(g: &MetricGraph, h_target: f64) -> Self {
        let segments = g
            .edges()
            .iter()
            .map(|e| ((e.length / h_target).ceil() as usize).max(4))
            .collect();
        Mesh::new(g, segments)
    }

    /// Every element split in half.
    pub fn refined(&self) -> Mesh {
        let mut fine = self.clone();
        let mut next = self.vertex_count;
        for (e, n) in fine.segments.iter_mut().enumerate() {
            *n *= 2;
            fine.edge_base[e] = next;
            next += *n - 1;
        }
        fine.dof_count = next;
        fine
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// DOF of node `k ∈ [0, n_e]` on edge `e`.
    pub fn node_dof(&self, e: usize, k: usize) -> usize {
        let n = self.segments[e];
        match k {
            0 => self.ends[e].0,
            k if k == n => self.ends[e].1,
            k => self.edge_base[e] + k - 1,
        }
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.lengths[e] / self.segments[e] as f64
    }

    pub fn max_element_length(&self) -> f64 {
        (0..self.segments.len())
            .map(|e| self.element_length(e))
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of a nodal vector onto [`Mesh::refined`].
    pub fn prolong(&self, fine: &Mesh, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; fine.dof_count];
        out[..self.vertex_count].copy_from_slice(&x[..self.vertex_count]);
        for e in 0..self.segments.len() {
            for k in 0..self.segments[e] {
                let (a, b) = (x[self.node_dof(e, k)], x[self.node_dof(e, k + 1)]);
                if k > 0 {
                    out[fine.node_dof(e, 2 * k)] = a;
                }
                out[fine.node_dof(e, 2 * k + 1)] = 0.5 * (a + b);
            }
        }
        out
    }
}

/// Stiffness and mass matrices of the P1 discretisation of the `H¹(Γ)` form.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: Mesh,
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
}

pub fn assemble(g: &MetricGraph, h_target: f64) -> Discretization {
    assemble_mesh(Mesh::with_target(g, h_target))
}

pub fn assemble_mesh(mesh: Mesh) -> Discretization {
    let n = mesh.dof_count;
    let mut k = Vec::with_capacity(4 * n);
    let mut m = Vec::with_capacity(4 * n);
    for e in 0..mesh.segments.len() {
        let h = mesh.element_length(e);
        for j in 0..mesh.segments[e] {
            let (a, b) = (mesh.node_dof(e, j), mesh.node_dof(e, j + 1));
            for (p, q, ks, ms) in [
                (a, a, 1.0, 2.0),
                (b, b, 1.0, 2.0),
                (a, b, -1.0, 1.0),
                (b, a, -1.0, 1.0),
            ] {
                k.push((p, q, ks / h));
                m.push((p, q, ms * h / 6.0));
            }
        }
    }
    Discretization {
        stiffness: SparseMatrix::from_triplets(n, k),
        mass: SparseMatrix::from_triplets(n, m),
        mesh,
    }
}

/// LDLᵀ of one edge's interior tridiagonal block of `K + σM`.
struct Chain {
    base: usize,
    d: Vec<f64>,
    l: Vec<f64>,
    /// Off-diagonal entry coupling consecutive nodes (and the end nodes to
    /// their vertices).
    off: f64,
    u: usize,
    v: usize,
}

impl Chain {
    fn solve_in_place(&self, b: &mut [f64]) {
        let m = self.d.len();
        for i in 1..m {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        b[m - 1] /= self.d[m - 1];
        for i in (0..m - 1).rev() {
            b[i] = b[i] / self.d[i] - self.l[i] * b[i + 1];
        }
    }
}

/// Direct solver for `(K + σM) x = b` with an optional Dirichlet vertex:
/// chains are eliminated onto the vertex DOFs, whose dense Schur complement is
/// Cholesky-factored.
struct ShiftedSolver {
    chains: Vec<Chain>,
    /// vertex index → row of the Schur complement (None for the fixed vertex)
    vertex_row: Vec<Option<usize>>,
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    chain_buf: Vec<f64>,
}

impl ShiftedSolver {
    fn new(mesh: &Mesh, sigma: f64, fixed: Option<usize>) -> Result<Self> {
        let mut vertex_row = vec![None; mesh.vertex_count];
        let mut rows = 0;
        for (v, slot) in vertex_row.iter_mut().enumerate() {
            if Some(v) != fixed {
                *slot = Some(rows);
                rows += 1;
            }
        }
        let mut schur = DMatrix::zeros(rows, rows);
        let mut chains = Vec::with_capacity(mesh.segments.len());
        for e in 0..mesh.segments.len() {
            let h = mesh.element_length(e);
            let diag = 2.0 / h + sigma * 2.0 * h / 3.0;
            let off = -1.0 / h + sigma * h / 6.0;
            let end_diag = 1.0 / h + sigma * h / 3.0;
            let m = mesh.segments[e] - 1;
            let mut d = Vec::with_capacity(m);
            let mut l = Vec::with_capacity(m.saturating_sub(1));
            d.push(diag);
            for i in 0..m - 1 {
                let li = off / d[i];
                l.push(li);
                d.push(diag - li * off);
            }
            let (u, v) = mesh.ends[e];
            let chain = Chain { base: mesh.edge_base[e], d, l, off, u, v };

            let mut first = vec![0.0; m];
            first[0] = 1.0;
            chain.solve_in_place(&mut first);
            let mut last = vec![0.0; m];
            last[m - 1] = 1.0;
            chain.solve_in_place(&mut last);
            let (t11, t1m, tmm) = (first[0], first[m - 1], last[m - 1]);

            let o2 = off * off;
            for (p, q, val) in [
                (u, u, end_diag - o2 * t11),
                (v, v, end_diag - o2 * tmm),
                (u, v, -o2 * t1m),
                (v, u, -o2 * t1m),
            ] {
                if let (Some(i), Some(j)) = (vertex_row[p], vertex_row[q]) {
                    schur[(i, j)] += val;
                }
            }
            chains.push(chain);
        }
        let schur = schur.cholesky().ok_or_else(|| {
            Error::InvalidArgument("shifted operator is not positive definite".into())
        })?;
        let longest = mesh.segments.iter().max().copied().unwrap_or(2);
        Ok(ShiftedSolver {
            chains,
            vertex_row,
            schur,
            chain_buf: vec![0.0; longest],
        })
    }

    fn solve(&mut self, b: &[f64], x: &mut [f64]) {
        let mut r = DVector::zeros(self.schur.l_dirty().nrows());
        for (v, row) in self.vertex_row.iter().enumerate() {
            if let Some(i) = row {
                r[*i] = b[v];
            }
        }
        for c in &self.chains {
            let m = c.d.len();
            let buf = &mut self.chain_buf[..m];
            buf.copy_from_slice(&b[c.base..c.base + m]);
            c.solve_in_place(buf);
            if let Some(i) = self.vertex_row[c.u] {
                r[i] -= c.off * buf[0];
            }
            if let Some(i) = self.vertex_row[c.v] {
                r[i] -= c.off * buf[m - 1];
            }
        }
        self.schur.solve_mut(&mut r);
        for (v, row) in self.vertex_row.iter().enumerate() {
            x[v] = row.map_or(0.0, |i| r[i]);
        }
        for c in &self.chains {
            let m = c.d.len();
            let buf = &mut self.chain_buf[..m];
            buf.copy_from_slice(&b[c.base..c.base + m]);
            buf[0] -= c.off * x[c.u];
            buf[m - 1] -= c.off * x[c.v];
            c.solve_in_place(buf);
            x[c.base..c.base + m].copy_from_slice(buf);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum SpectralKind {
    SpectralGap,
    DirichletAtVertex { vertex: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub kind: SpectralKind,
    /// Richardson-extrapolated eigenvalue (units 1/length²).
    pub value: f64,
    /// Raw eigenvalue on the finest mesh.
    pub finest: f64,
    pub mesh_h: f64,
    pub extrapolated: bool,
    /// `|μ_{h/2} − μ_h| / 3` at the last refinement.
    pub error_estimate: f64,
    pub dof_count: usize,
    pub refinements: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralOptions {
    /// Relative tolerance on the extrapolation error estimate.
    pub tol: f64,
    pub max_refinements: usize,
    /// Initial target element length; `L / (8E)` when absent.
    pub initial_h: Option<f64>,
    /// Meshes with at most this many free DOFs use the dense solver.
    pub dense_threshold: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tol: 1e-6,
            max_refinements: 8,
            initial_h: None,
            dense_threshold: 200,
        }
    }
}

impl SpectralOptions {
    pub fn with_tol(tol: f64) -> Self {
        SpectralOptions { tol, ..Self::default() }
    }
}

/// Which eigenproblem to solve on a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Mean-zero functions (deflate constants).
    MeanZero,
    /// Vanishing at one vertex DOF.
    Dirichlet(usize),
}

/// Smallest eigenvalue of `(K, M)` on the constrained space, by the dense
/// symmetric-definite route: `C = L⁻¹KL⁻ᵀ` with `M = LLᵀ`; for mean-zero the
/// constant mode is pushed to the top of the spectrum.
pub fn smallest_eigenvalue_dense(disc: &Discretization, constraint: Constraint) -> Result<f64> {
    let mut k = disc.stiffness.to_dense();
    let mut m = disc.mass.to_dense();
    if let Constraint::Dirichlet(v) = constraint {
        k = k.remove_row(v).remove_column(v);
        m = m.remove_row(v).remove_column(v);
    }
    let n = k.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular mass factor".into()))?;
    let mut c = &linv * &k * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    if constraint == Constraint::MeanZero {
        let q = l.transpose() * DVector::from_element(n, 1.0);
        let q = &q / q.norm();
        let tau = 2.0 * c.abs().row_sum().max() + 1.0;
        c += &q * q.transpose() * tau;
    }
    let eig = c.symmetric_eigen();
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Block inverse iteration with Rayleigh–Ritz on `(K + σM)⁻¹M`, constant mode
/// projected out for the mean-zero problem. Returns the smallest Ritz value and
/// the Ritz block (for warm starts on the next mesh).
pub fn smallest_eigenvalue_iterative(
    disc: &Discretization,
    constraint: Constraint,
    sigma: f64,
    start: Option<Vec<Vec<f64>>>,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = disc.mesh.dof_count();
    let fixed = match constraint {
        Constraint::Dirichlet(v) => Some(v),
        Constraint::MeanZero => None,
    };
    let free = n - usize::from(fixed.is_some()) - usize::from(fixed.is_none());
    let block = free.min(8);
    let mut solver = ShiftedSolver::new(&disc.mesh, sigma, fixed)?;
    let (kk, mm) = (&disc.stiffness, &disc.mass);

    let ones_m = {
        let mut y = vec![0.0; n];
        mm.mul_vec(&vec![1.0; n], &mut y);
        y
    };
    let ones_mass: f64 = ones_m.iter().sum();
    let constrain = |x: &mut [f64]| match constraint {
        Constraint::MeanZero => {
            let c = dot(&ones_m, x) / ones_mass;
            x.iter_mut().for_each(|xi| *xi -= c);
        }
        Constraint::Dirichlet(v) => x[v] = 0.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<Vec<f64>> = start.unwrap_or_default();
    x.truncate(block);
    while x.len() < block {
        x.push((0..n).map(|_| rng.random::<f64>() - 0.5).collect());
    }

    let mut tmp = vec![0.0; n];
    let mut last = f64::INFINITY;
    for iter in 0..MAX_ITERATIONS {
        // y = A⁻¹ M x
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(block);
        for xi in &x {
            mm.mul_vec(xi, &mut tmp);
            if let Some(v) = fixed {
                tmp[v] = 0.0;
            }
            let mut yi = vec![0.0; n];
            solver.solve(&tmp, &mut yi);
            constrain(&mut yi);
            y.push(yi);
        }
        m_orthonormalize(&mut y, mm, &mut tmp);
        let p = y.len();

        // Rayleigh–Ritz with M-orthonormal basis
        let mut kr = DMatrix::zeros(p, p);
        for i in 0..p {
            kk.mul_vec(&y[i], &mut tmp);
            for j in 0..p {
                kr[(i, j)] = dot(&y[j], &tmp);
            }
        }
        let kr = (&kr + kr.transpose()) * 0.5;
        let eig = kr.symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (i, yi) in y.iter().enumerate() {
                    let w = eig.eigenvectors[(i, c)];
                    v.iter_mut().zip(yi).for_each(|(vi, yv)| *vi += w * yv);
                }
                v
            })
            .collect();
        let theta = eig.eigenvalues[order[0]];

        // residual of the lowest Ritz pair, relative
        kk.mul_vec(&x[0], &mut tmp);
        let mut mx = vec![0.0; n];
        mm.mul_vec(&x[0], &mut mx);
        if let Some(v) = fixed {
            tmp[v] = 0.0;
            mx[v] = 0.0;
        }
        let res: f64 = tmp
            .iter()
            .zip(&mx)
            .map(|(k, m)| (k - theta * m).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = theta.abs() * dot(&mx, &mx).sqrt();
        let stalled = iter > 2 && (last - theta).abs() <= 1e-14 * theta.abs();
        if res <= 1e-10 * scale || stalled {
            return Ok((theta, x));
        }
        last = theta;
    }
    Err(Error::InvalidArgument(format!(
        "block inverse iteration did not converge in {MAX_ITERATIONS} steps"
    )))
}

const MAX_ITERATIONS: usize = 5000;

fn m_orthonormalize(y: &mut Vec<Vec<f64>>, mm: &SparseMatrix, tmp: &mut [f64]) {
    // two passes of modified Gram–Schmidt in the M inner product
    for _ in 0..2 {
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(y.len());
        for mut v in y.drain(..) {
            for q in &kept {
                let c = mm.quad(q, &v, tmp);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
            let norm = mm.quad(&v, &v, tmp).sqrt();
            if norm > 1e-300 {
                v.iter_mut().for_each(|vi| *vi /= norm);
                kept.push(v);
            }
        }
        *y = kept;
    }
}

fn solve_on_mesh(
    disc: &Discretization,
    constraint: Constraint,
    sigma: f64,
    options: &SpectralOptions,
    start: Option<Vec<Vec<f64>>>,
) -> Result<(f64, Option<Vec<Vec<f64>>>)> {
    let free = disc.mesh.dof_count() - usize::from(matches!(constraint, Constraint::Dirichlet(_)));
    if free <= options.dense_threshold {
        Ok((smallest_eigenvalue_dense(disc, constraint)?, None))
    } else {
        let (value, block) = smallest_eigenvalue_iterative(disc, constraint, sigma, start)?;
        Ok((value, Some(block)))
    }
}

fn refine_until_converged(
    g: &MetricGraph,
    constraint: Constraint,
    kind: SpectralKind,
    options: &SpectralOptions,
) -> Result<SpectralResult> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", options.tol)));
    }
    let total = g.total_length();
    let h0 = options
        .initial_h
        .unwrap_or(total / (8.0 * g.edge_count() as f64));
    let sigma = 0.25 * std::f64::consts::PI.powi(2) / (total * total);

    let mut mesh = Mesh::with_target(g, h0);
    let mut disc = assemble_mesh(mesh.clone());
    let (mut prev, mut block) = solve_on_mesh(&disc, constraint, sigma, options, None)?;
    let mut last_estimate = f64::INFINITY;
    for round in 1..=options.max_refinements {
        let fine = mesh.refined();
        let start = block.map(|b| b.iter().map(|x| mesh.prolong(&fine, x)).collect());
        mesh = fine;
        disc = assemble_mesh(mesh.clone());
        let (value, next_block) = solve_on_mesh(&disc, constraint, sigma, options, start)?;
        block = next_block;
        let extrapolated = (4.0 * value - prev) / 3.0;
        let estimate = (value - prev).abs() / 3.0;
        last_estimate = estimate;
        if estimate <= options.tol * extrapolated.abs() {
            return Ok(SpectralResult {
                kind,
                value: extrapolated,
                finest: value,
                mesh_h: mesh.max_element_length(),
                extrapolated: true,
                error_estimate: estimate,
                dof_count: mesh.dof_count(),
                refinements: round,
            });
        }
        prev = value;
    }
    Err(Error::NoConvergence {
        rounds: options.max_refinements,
        estimate: prev,
        error_estimate: last_estimate,
    })
}

/// `μ₂(Γ)`: first nonzero eigenvalue with standard vertex conditions.
pub fn spectral_gap(g: &MetricGraph, options: &SpectralOptions) -> Result<SpectralResult> {
    refine_until_converged(g, Constraint::MeanZero, SpectralKind::SpectralGap, options)
}

/// `λ₁(Γ, v)`: first eigenvalue with a Dirichlet condition at `v` and
/// standard conditions elsewhere.
pub fn dirichlet_eigenvalue(
    g: &MetricGraph,
    vertex: &str,
    options: &SpectralOptions,
) -> Result<SpectralResult> {
    let v = g.vertex_index(vertex)?;
    refine_until_converged(
        g,
        Constraint::Dirichlet(v),
        SpectralKind::DirichletAtVertex { vertex: vertex.to_string() },
        options,
    )
}

/// Eigenvalue on one fixed mesh without extrapolation.
pub fn eigenvalue_on_mesh(
    g: &MetricGraph,
    segments: Vec<usize>,
    constraint: Constraint,
    dense: bool,
) -> Result<f64> {
    let disc = assemble_mesh(Mesh::new(g, segments));
    if dense {
        smallest_eigenvalue_dense(&disc, constraint)
    } else {
        let total = g.total_length();
        let sigma = 0.25 * std::f64::consts::PI.powi(2) / (total * total);
        Ok(smallest_eigenvalue_iterative(&disc, constraint, sigma, None)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, Family, FamilySpec};
    use std::f64::consts::PI;

    fn eq(family: Family) -> MetricGraph {
        generate(&FamilySpec::equilateral(family, 1.0)).unwrap()
    }

    #[test]
    fn dof_counts_and_kernel() {
        let i = eq(Family::Path { m: 1 });
        let d = assemble_mesh(Mesh::new(&i, vec![4]));
        assert_eq!(d.mesh.dof_count(), 5);
        let lp = eq(Family::Cycle { m: 1 });
        let d = assemble_mesh(Mesh::new(&lp, vec![8]));
        assert_eq!(d.mesh.dof_count(), 8);

        let g = eq(Family::RandomGraph { edges: 5, betti: 2 });
        let d = assemble(&g, 0.05);
        let n = d.mesh.dof_count();
        let mut y = vec![0.0; n];
        d.stiffness.mul_vec(&vec![1.0; n], &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-10));
        let (k, m) = (d.stiffness.to_dense(), d.mass.to_dense());
        assert_eq!(k, k.transpose());
        assert_eq!(m, m.transpose());
        assert!(m.clone().cholesky().is_some());
        // total mass is the total length
        let mut mm = vec![0.0; n];
        d.mass.mul_vec(&vec![1.0; n], &mut mm);
        assert!((mm.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn dense_and_iterative_agree() {
        for family in [
            Family::Path { m: 1 },
            Family::Star { m: 3 },
            Family::Flower { m: 2 },
            Family::RandomGraph { edges: 6, betti: 2 },
        ] {
            let g = eq(family.clone());
            let segs = vec![12; g.edge_count()];
            for c in [Constraint::MeanZero, Constraint::Dirichlet(0)] {
                let a = eigenvalue_on_mesh(&g, segs.clone(), c, true).unwrap();
                let b = eigenvalue_on_mesh(&g, segs.clone(), c, false).unwrap();
                assert!((a - b).abs() < 1e-9 * a, "{family:?} {c:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn prolongation_reproduces_linear_functions() {
        let g = eq(Family::Path { m: 2 });
        let coarse = Mesh::new(&g, vec![4, 4]);
        let fine = coarse.refined();
        // f(x) = x along the path: vertices 0, 1, 2 sit at 0, 0.5, 1
        let mut x = vec![0.0; coarse.dof_count()];
        for e in 0..2 {
            for k in 0..=4 {
                x[coarse.node_dof(e, k)] = 0.5 * e as f64 + 0.125 * k as f64;
            }
        }
        let y = coarse.prolong(&fine, &x);
        for e in 0..2 {
            for k in 0..=8 {
                let expect = 0.5 * e as f64 + 0.0625 * k as f64;
                assert!((y[fine.node_dof(e, k)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_eigenvalues() {
        let opts = SpectralOptions::default();
        let i = eq(Family::Path { m: 1 });
        let mu = spectral_gap(&i, &opts).unwrap();
        assert!((mu.value - PI * PI).abs() < 1e-5 * PI * PI, "{mu:?}");
        let lp = eq(Family::Cycle { m: 1 });
        let mu = spectral_gap(&lp, &opts).unwrap();
        assert!((mu.value - 4.0 * PI * PI).abs() < 1e-5 * 4.0 * PI * PI, "{mu:?}");
        let lam = dirichlet_eigenvalue(&i, "v0", &opts).unwrap();
        assert!((lam.value - PI * PI / 4.0).abs() < 1e-5 * PI * PI / 4.0, "{lam:?}");
        let lam = dirichlet_eigenvalue(&lp, "v0", &opts).unwrap();
        assert!((lam.value - PI * PI).abs() < 1e-5 * PI * PI, "{lam:?}");
    }

    #[test]
    fn reports_non_convergence() {
        let i = eq(Family::Path { m: 1 });
        let opts = SpectralOptions { tol: 1e-14, max_refinements: 2, ..Default::default() };
        match spectral_gap(&i, &opts) {
            Err(Error::NoConvergence { rounds, estimate, .. }) => {
                assert_eq!(rounds, 2);
                assert!((estimate - PI * PI).abs() < 0.1);
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(dirichlet_eigenvalue(&i, "zz", &opts).is_err());
        assert!(spectral_gap(&i, &SpectralOptions::with_tol(0.0)).is_err());
    }
}
