//! Shortest-path distances on a metric graph: vertex-to-vertex by Dijkstra,
//! and point-to-point through the affine sheet decomposition of each edge pair.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::graph::{MetricGraph, PointOnEdge};
use crate::strip::{Affine, Envelope, Strip};

/// Dense all-pairs vertex distances `D(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexDistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl VertexDistanceMatrix {
    /// Multi-source Dijkstra over the multigraph. Parallel edges are relaxed
    /// individually; self-loops are skipped.
    pub fn compute(g: &MetricGraph) -> Self {
        let n = g.vertex_count();
        let adj = g.adjacency();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|src| dijkstra(g, &adj, src))
            .collect();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend(row);
        }
        // the two directions of a pair may differ in the last ulp
        for u in 0..n {
            for v in (u + 1)..n {
                let m = data[u * n + v].min(data[v * n + u]);
                data[u * n + v] = m;
                data[v * n + u] = m;
            }
        }
        VertexDistanceMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (distance, vertex)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &MetricGraph, adj: &[Vec<(usize, usize)>], src: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut done = vec![false; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry { dist: 0.0, vertex: src });
    while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(edge, w) in &adj[v] {
            if w == v {
                continue;
            }
            let nd = d + g.edge(edge).length;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry { dist: nd, vertex: w });
            }
        }
    }
    dist
}

/// Which part of the `(s, t)` rectangle a sheet is valid on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SheetRegion {
    Full,
    /// `t ≥ s` (same edge only).
    Above,
    /// `t ≤ s` (same edge only).
    Below,
}

/// `g(s, t) = c + slope_s·s + slope_t·t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sheet {
    pub c: f64,
    pub slope_s: f64,
    pub slope_t: f64,
    pub region: SheetRegion,
}

impl Sheet {
    fn new(c: f64, slope_s: f64, slope_t: f64) -> Self {
        Sheet { c, slope_s, slope_t, region: SheetRegion::Full }
    }

    pub fn at(&self, s: f64, t: f64) -> f64 {
        self.c + self.slope_s * s + self.slope_t * t
    }

    pub fn applies(&self, s: f64, t: f64) -> bool {
        match self.region {
            SheetRegion::Full => true,
            SheetRegion::Above => t >= s,
            SheetRegion::Below => t <= s,
        }
    }
}

/// Affine sheets whose pointwise minimum (over those valid at `(s, t)`) is
/// the distance between `x_s ∈ e` and `y_t ∈ f`.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetSet {
    pub e: usize,
    pub f: usize,
    pub sheets: Vec<Sheet>,
}

impl SheetSet {
    pub fn min_at(&self, s: f64, t: f64) -> f64 {
        self.sheets
            .iter()
            .filter(|sh| sh.applies(s, t))
            .map(|sh| sh.at(s, t))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A graph together with its vertex distance matrix.
#[derive(Clone, Debug)]
pub struct GraphMetric<'g> {
    g: &'g MetricGraph,
    d: VertexDistanceMatrix,
}

impl<'g> GraphMetric<'g> {
    pub fn new(g: &'g MetricGraph) -> Self {
        GraphMetric {
            g,
            d: VertexDistanceMatrix::compute(g),
        }
    }

    pub fn with_distances(g: &'g MetricGraph, d: VertexDistanceMatrix) -> Self {
        GraphMetric { g, d }
    }

    pub fn graph(&self) -> &'g MetricGraph {
        self.g
    }

    pub fn vertex_distances(&self) -> &VertexDistanceMatrix {
        &self.d
    }

    /// Sheets for the ordered pair `(e, f)`.
    ///
    /// With `e = (a, b)` and `f = (c, d)`, the four through-vertex sheets are
    /// `s + D(a,c) + t`, `s + D(a,d) + ℓ_f − t`, `ℓ_e − s + D(b,c) + t` and
    /// `ℓ_e − s + D(b,d) + ℓ_f − t`. On a single edge the direct distance
    /// `|t − s|` adds `t − s` above the diagonal and `s − t` below it.
    pub fn sheet_set(&self, e: usize, f: usize) -> SheetSet {
        let (ee, ff) = (self.g.edge(e), self.g.edge(f));
        let (a, b, le) = (ee.u, ee.v, ee.length);
        let (c, d, lf) = (ff.u, ff.v, ff.length);
        let dd = &self.d;
        let mut sheets = vec![
            Sheet::new(dd.get(a, c), 1.0, 1.0),
            Sheet::new(dd.get(a, d) + lf, 1.0, -1.0),
            Sheet::new(le + dd.get(b, c), -1.0, 1.0),
            Sheet::new(le + dd.get(b, d) + lf, -1.0, -1.0),
        ];
        if e == f {
            sheets.push(Sheet { c: 0.0, slope_s: -1.0, slope_t: 1.0, region: SheetRegion::Above });
            sheets.push(Sheet { c: 0.0, slope_s: 1.0, slope_t: -1.0, region: SheetRegion::Below });
        }
        SheetSet { e, f, sheets }
    }

    /// Tent strips for the ordered pair `(e, f)`: one for `e ≠ f`, two for `e = f`.
    ///
    /// On a single edge the through-vertex sheets `s + t` and `2ℓ − s − t` never
    /// beat the direct distance and are dropped.
    pub fn strips(&self, e: usize, f: usize) -> StripPair {
        let (ee, ff) = (self.g.edge(e), self.g.edge(f));
        let (a, b, le) = (ee.u, ee.v, ee.length);
        let dd = &self.d;
        if e != f {
            let (c, d, lf) = (ff.u, ff.v, ff.length);
            let strip = Strip {
                lo: Affine::constant(0.0),
                hi: Affine::constant(lf),
                rising: Envelope::two(
                    Affine::new(dd.get(a, c), 1.0),
                    Affine::new(le + dd.get(b, c), -1.0),
                ),
                falling: Envelope::two(
                    Affine::new(dd.get(a, d) + lf, 1.0),
                    Affine::new(le + dd.get(b, d) + lf, -1.0),
                ),
            };
            StripPair { strips: [strip, strip], len: 1 }
        } else {
            let around = dd.get(a, b);
            let above = Strip {
                lo: Affine::new(0.0, 1.0),
                hi: Affine::constant(le),
                rising: Envelope::one(Affine::new(0.0, -1.0)),
                falling: Envelope::one(Affine::new(around + le, 1.0)),
            };
            let below = Strip {
                lo: Affine::constant(0.0),
                hi: Affine::new(0.0, 1.0),
                rising: Envelope::one(Affine::new(le + around, -1.0)),
                falling: Envelope::one(Affine::new(0.0, 1.0)),
            };
            StripPair { strips: [above, below], len: 2 }
        }
    }

    /// Exact distance between two points of the graph.
    pub fn point_distance(&self, x: PointOnEdge, y: PointOnEdge) -> f64 {
        let (s, t) = (x.offset, y.offset);
        let pair = self.strips(x.edge, y.edge);
        let below = usize::from(x.edge == y.edge && t < s);
        pair.strips()[below].tent(s).value(t)
    }

    /// Distance from a point to a vertex.
    pub fn point_vertex_distance(&self, x: PointOnEdge, v: usize) -> f64 {
        let e = self.g.edge(x.edge);
        (x.offset + self.d.get(e.u, v)).min(e.length - x.offset + self.d.get(e.v, v))
    }

    /// `M(x) = max_y dist(x, y)`.
    pub fn eccentricity(&self, x: PointOnEdge) -> f64 {
        (0..self.g.edge_count())
            .flat_map(|f| {
                let pair = self.strips(x.edge, f);
                pair.into_iter().map(move |st| st.tent(x.offset).max())
            })
            .fold(0.0, f64::max)
    }

    /// Exact diameter: the inner maximum of each strip is piecewise affine in
    /// `s`, so it suffices to evaluate it at the strip breakpoints.
    pub fn diameter(&self) -> f64 {
        let m = self.g.edge_count();
        (0..m)
            .into_par_iter()
            .map(|e| {
                let len = self.g.edge(e).length;
                let mut scratch = Vec::with_capacity(16);
                (0..m)
                    .flat_map(|f| self.strips(e, f).into_iter())
                    .map(|st| st.max_over(len, &mut scratch))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// One or two strips covering the target edge.
#[derive(Clone, Copy, Debug)]
pub struct StripPair {
    strips: [Strip; 2],
    len: usize,
}

impl StripPair {
    pub fn strips(&self) -> &[Strip] {
        &self.strips[..self.len]
    }
}

impl IntoIterator for StripPair {
    type Item = Strip;
    type IntoIter = std::iter::Take<std::array::IntoIter<Strip, 2>>;

    fn into_iter(self) -> Self::IntoIter {
        self.strips.into_iter().take(self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, Family, FamilySpec, Lengths};
    use crate::graph::GraphBuilder;

    fn interval(l: f64) -> MetricGraph {
        let mut b = GraphBuilder::new();
        let (u, v) = (b.add_vertex(), b.add_vertex());
        b.add_edge(u, v, l);
        b.build().unwrap()
    }

    fn lp(l: f64) -> MetricGraph {
        let mut b = GraphBuilder::new();
        let u = b.add_vertex();
        b.add_edge(u, u, l);
        b.build().unwrap()
    }

    fn flower(petals: &[f64]) -> MetricGraph {
        let mut b = GraphBuilder::new();
        let c = b.add_vertex();
        for &p in petals {
            b.add_edge(c, c, p);
        }
        b.build().unwrap()
    }

    fn pt(e: usize, s: f64) -> PointOnEdge {
        PointOnEdge { edge: e, offset: s }
    }

    #[test]
    fn vertex_distance_examples() {
        let f3 = flower(&[1.0, 1.0, 1.0]);
        assert_eq!(VertexDistanceMatrix::compute(&f3).get(0, 0), 0.0);

        let mut b = GraphBuilder::new();
        let (x, y, z) = (b.add_vertex(), b.add_vertex(), b.add_vertex());
        b.add_edge(x, y, 0.3);
        b.add_edge(y, z, 0.7);
        let p = b.build().unwrap();
        assert_eq!(VertexDistanceMatrix::compute(&p).get(0, 2), 1.0);

        let mut b = GraphBuilder::new();
        let (u, v) = (b.add_vertex(), b.add_vertex());
        b.add_edge(u, v, 1.0);
        b.add_edge(u, v, 0.4);
        b.add_edge(u, u, 0.01);
        let par = b.build().unwrap();
        assert_eq!(VertexDistanceMatrix::compute(&par).get(0, 1), 0.4);
    }

    #[test]
    fn sheet_examples() {
        let i = interval(1.0);
        let m = GraphMetric::new(&i);
        let sheets = m.sheet_set(0, 0);
        assert!((sheets.min_at(0.2, 0.9) - 0.7).abs() < 1e-15);

        let l = lp(1.0);
        let m = GraphMetric::new(&l);
        assert!((m.sheet_set(0, 0).min_at(0.1, 0.9) - 0.2).abs() < 1e-15);
        assert!((m.point_distance(pt(0, 0.1), pt(0, 0.9)) - 0.2).abs() < 1e-15);

        let f = flower(&[0.5, 0.5]);
        let m = GraphMetric::new(&f);
        assert!((m.sheet_set(0, 1).min_at(0.2, 0.1) - 0.3).abs() < 1e-15);
        assert!((m.point_distance(pt(0, 0.2), pt(1, 0.1)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn point_distance_examples() {
        let star = generate(&FamilySpec {
            family: Family::Star { m: 3 },
            lengths: Lengths::Equilateral { total: 1.0 },
            seed: 0,
        })
        .unwrap();
        let m = GraphMetric::new(&star);
        let tip = |e: usize| pt(e, 1.0 / 3.0);
        assert!((m.point_distance(tip(0), tip(1)) - 2.0 / 3.0).abs() < 1e-15);

        let l = lp(1.0);
        let m = GraphMetric::new(&l);
        assert_eq!(m.point_distance(pt(0, 0.25), pt(0, 0.75)), 0.5);
        assert_eq!(m.point_distance(pt(0, 0.3), pt(0, 0.3)), 0.0);
        // offset 0 and offset ℓ are the same point of the loop
        assert_eq!(m.point_distance(pt(0, 0.0), pt(0, 1.0)), 0.0);
    }

    #[test]
    fn eccentricity_examples() {
        let l = lp(1.0);
        let m = GraphMetric::new(&l);
        for s in [0.0, 0.1, 0.5, 0.77] {
            assert!((m.eccentricity(pt(0, s)) - 0.5).abs() < 1e-15);
        }
        let i = interval(1.0);
        assert!((GraphMetric::new(&i).eccentricity(pt(0, 0.3)) - 0.7).abs() < 1e-15);
        let f = flower(&[0.5, 0.5]);
        assert_eq!(GraphMetric::new(&f).eccentricity(pt(0, 0.0)), 0.25);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(GraphMetric::new(&interval(1.0)).diameter(), 1.0);
        assert_eq!(GraphMetric::new(&lp(1.0)).diameter(), 0.5);
        let fw = generate(&FamilySpec {
            family: Family::Firework { m: 4, n: 7, spoke: 0.5, leaf: 0.1 },
            lengths: Lengths::default(),
            seed: 0,
        })
        .unwrap();
        assert!((GraphMetric::new(&fw).diameter() - 1.2).abs() < 1e-14);
    }
}
