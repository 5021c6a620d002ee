//! Metric multigraph data model.
//!
//! A [`MetricGraph`] is a finite, connected multigraph whose edges are
//! intervals of positive length. Self-loops and parallel edges are first-class:
//! adjacency is always addressed by edge index, never by vertex pair.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unvalidated edge as it appears in the JSON graph format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: String,
    pub u: String,
    pub v: String,
    pub length: f64,
}

/// Unvalidated graph as it appears in the JSON graph format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateVertex(String),
    DuplicateEdge(String),
    UnknownEndpoint { edge: String, vertex: String },
    NonpositiveLength { edge: String, length: f64 },
    NonfiniteLength { edge: String },
    NoEdges,
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex(v) => write!(f, "duplicate vertex id `{v}`"),
            Violation::DuplicateEdge(e) => write!(f, "duplicate edge id `{e}`"),
            Violation::UnknownEndpoint { edge, vertex } => {
                write!(f, "edge `{edge}` names unknown vertex `{vertex}`")
            }
            Violation::NonpositiveLength { edge, length } => {
                write!(f, "nonpositive length {length} on edge `{edge}`")
            }
            Violation::NonfiniteLength { edge } => write!(f, "nonfinite length on edge `{edge}`"),
            Violation::NoEdges => write!(f, "graph has no edges"),
            Violation::Disconnected { components } => {
                write!(f, "disconnected ({components} components)")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks every standing invariant of a metric graph and reports all breaches.
pub fn validate(record: &GraphRecord) -> ValidationReport {
    let mut violations = Vec::new();

    let mut vertex_index = HashMap::with_capacity(record.vertices.len());
    for v in &record.vertices {
        let next = vertex_index.len();
        if vertex_index.contains_key(v.as_str()) {
            violations.push(Violation::DuplicateVertex(v.clone()));
        } else {
            vertex_index.insert(v.as_str(), next);
        }
    }

    let mut seen_edges = HashSet::with_capacity(record.edges.len());
    let mut endpoints = Vec::with_capacity(record.edges.len());
    for e in &record.edges {
        if !seen_edges.insert(e.id.as_str()) {
            violations.push(Violation::DuplicateEdge(e.id.clone()));
        }
        if !e.length.is_finite() {
            violations.push(Violation::NonfiniteLength { edge: e.id.clone() });
        } else if e.length <= 0.0 {
            violations.push(Violation::NonpositiveLength {
                edge: e.id.clone(),
                length: e.length,
            });
        }
        let mut ends = [None, None];
        for (slot, name) in ends.iter_mut().zip([&e.u, &e.v]) {
            match vertex_index.get(name.as_str()) {
                Some(&i) => *slot = Some(i),
                None => violations.push(Violation::UnknownEndpoint {
                    edge: e.id.clone(),
                    vertex: name.clone(),
                }),
            }
        }
        if let [Some(a), Some(b)] = ends {
            endpoints.push((a, b));
        }
    }

    if record.edges.is_empty() {
        violations.push(Violation::NoEdges);
    }
    if !record.vertices.is_empty() {
        let components = count_components(vertex_index.len(), &endpoints);
        if components > 1 {
            violations.push(Violation::Disconnected { components });
        }
    }

    ValidationReport { violations }
}

fn count_components(n: usize, endpoints: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in endpoints {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components
}

/// Which end of an edge an incidence refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    U,
    V,
}

/// One edge-end slot at a vertex. A self-loop contributes two incidences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Incidence {
    pub edge: usize,
    pub end: End,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn endpoint(&self, end: End) -> usize {
        match end {
            End::U => self.u,
            End::V => self.v,
        }
    }
}

/// A point `x` of the graph: an edge index and an offset measured from the
/// edge's `u` endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOnEdge {
    pub edge: usize,
    pub offset: f64,
}

/// A validated, immutable, connected metric multigraph.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
}

impl PartialEq for MetricGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl TryFrom<GraphRecord> for MetricGraph {
    type Error = Error;

    fn try_from(record: GraphRecord) -> Result<Self> {
        MetricGraph::from_record(record)
    }
}

impl MetricGraph {
    pub fn from_record(record: GraphRecord) -> Result<Self> {
        let report = validate(&record);
        if !report.is_ok() {
            return Err(Error::InvalidGraph(report.to_string()));
        }
        let vertex_index: HashMap<String, usize> = record
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let edges: Vec<Edge> = record
            .edges
            .into_iter()
            .map(|e| Edge {
                u: vertex_index[&e.u],
                v: vertex_index[&e.v],
                id: e.id,
                length: e.length,
            })
            .collect();
        let edge_index = edges
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        Ok(MetricGraph {
            vertices: record.vertices,
            edges,
            vertex_index,
            edge_index,
        })
    }

    /// Builds a graph from vertex ids and `(id, u, v, length)` tuples.
    pub fn new<V, E>(vertices: V, edges: E) -> Result<Self>
    where
        V: IntoIterator,
        V::Item: Into<String>,
        E: IntoIterator<Item = (String, String, String, f64)>,
    {
        MetricGraph::from_record(GraphRecord {
            vertices: vertices.into_iter().map(Into::into).collect(),
            edges: edges
                .into_iter()
                .map(|(id, u, v, length)| EdgeRecord { id, u, v, length })
                .collect(),
        })
    }

    pub fn to_record(&self) -> GraphRecord {
        GraphRecord {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    id: e.id.clone(),
                    u: self.vertices[e.u].clone(),
                    v: self.vertices[e.v].clone(),
                    length: e.length,
                })
                .collect(),
        }
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

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn vertex_id(&self, i: usize) -> &str {
        &self.vertices[i]
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize> {
        self.vertex_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn edge_index(&self, id: &str) -> Result<usize> {
        self.edge_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(id.to_string()))
    }

    pub fn has_vertex(&self, id: &str) -> bool {
        self.vertex_index.contains_key(id)
    }

    pub fn has_edge(&self, id: &str) -> bool {
        self.edge_index.contains_key(id)
    }

    /// `|Γ| = Σ ℓ_e`.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// First Betti number `E − V + 1` (the graph is connected by construction).
    pub fn betti_number(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    /// Degree of a vertex; a self-loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| usize::from(e.u == v) + usize::from(e.v == v))
            .sum()
    }

    /// Edge-end slots at `v`, ordered by edge index then end.
    pub fn incidences(&self, v: usize) -> Vec<Incidence> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.u == v {
                out.push(Incidence { edge: i, end: End::U });
            }
            if e.v == v {
                out.push(Incidence { edge: i, end: End::V });
            }
        }
        out
    }

    /// Per-vertex list of `(edge, neighbour)` pairs; a self-loop appears twice.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.u].push((i, e.v));
            adj[e.v].push((i, e.u));
        }
        adj
    }

    /// Edges whose removal disconnects the graph. Parallel edges and self-loops
    /// are never bridges.
    pub fn bridges(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let adj = self.adjacency();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.edges.len()];
        let mut timer = 0;

        // (vertex, edge used to enter, next adjacency slot)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(frame) = stack.last_mut() {
                let (v, via, slot) = *frame;
                if slot < adj[v].len() {
                    frame.2 += 1;
                    let (edge, w) = adj[v][slot];
                    if edge == via || self.edges[edge].is_loop() {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, edge, 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            is_bridge[via] = true;
                        }
                    }
                }
            }
        }
        (0..self.edges.len()).filter(|&i| is_bridge[i]).collect()
    }

    /// True iff no edge is a bridge.
    pub fn is_doubly_connected(&self) -> bool {
        self.bridges().is_empty()
    }

    /// A tree has Betti number zero.
    pub fn is_tree(&self) -> bool {
        self.betti_number() == 0
    }

    /// A single self-loop, possibly subdivided into a cycle of dummy vertices.
    pub fn is_loop(&self) -> bool {
        self.edges.len() == self.vertices.len()
            && (0..self.vertices.len()).all(|v| self.degree(v) == 2)
    }

    /// A path graph, possibly with degree-2 dummy vertices.
    pub fn is_path(&self) -> bool {
        self.is_tree() && (0..self.vertices.len()).all(|v| self.degree(v) <= 2)
    }

    /// Validates `offset ∈ [0, ℓ_e]` and returns the point.
    pub fn point(&self, edge: &str, offset: f64) -> Result<PointOnEdge> {
        let i = self.edge_index(edge)?;
        self.point_at(i, offset)
    }

    pub fn point_at(&self, edge: usize, offset: f64) -> Result<PointOnEdge> {
        let e = &self.edges[edge];
        if !(offset.is_finite() && (0.0..=e.length).contains(&offset)) {
            return Err(Error::OffsetOutOfRange {
                edge: e.id.clone(),
                offset,
                length: e.length,
                range: "[0, length]",
            });
        }
        Ok(PointOnEdge { edge, offset })
    }

    /// Parses `edgeId:offset`.
    pub fn parse_point(&self, text: &str) -> Result<PointOnEdge> {
        let (edge, offset) = text
            .rsplit_once(':')
            .ok_or_else(|| Error::InvalidPoint(text.to_string()))?;
        let offset: f64 = offset
            .trim()
            .parse()
            .map_err(|_| Error::InvalidPoint(text.to_string()))?;
        self.point(edge.trim(), offset)
    }

    /// The point sitting at vertex `v`, expressed on its first incident edge.
    pub fn vertex_point(&self, v: usize) -> PointOnEdge {
        let inc = self.incidences(v)[0];
        let offset = match inc.end {
            End::U => 0.0,
            End::V => self.edges[inc.edge].length,
        };
        PointOnEdge {
            edge: inc.edge,
            offset,
        }
    }

    /// Splits edge `e` at `offset` with a fresh degree-2 vertex. The two halves
    /// replace `e` in the edge list and get ids `<e>.0` (from `u`) and `<e>.1`.
    pub fn subdivide(&self, edge: &str, offset: f64) -> Result<(MetricGraph, String)> {
        let i = self.edge_index(edge)?;
        self.subdivide_at(i, offset)
    }

    pub fn subdivide_at(&self, edge: usize, offset: f64) -> Result<(MetricGraph, String)> {
        let e = &self.edges[edge];
        if !(offset > 0.0 && offset < e.length) {
            return Err(Error::OffsetOutOfRange {
                edge: e.id.clone(),
                offset,
                length: e.length,
                range: "(0, length)",
            });
        }
        let mut record = self.to_record();
        let vid = self.fresh_vertex_id(&format!("{}.m", e.id));
        let first = self.fresh_edge_id(&format!("{}.0", e.id));
        let second = self.fresh_edge_id(&format!("{}.1", e.id));
        record.vertices.push(vid.clone());
        let old = record.edges.remove(edge);
        record.edges.insert(
            edge,
            EdgeRecord {
                id: second,
                u: vid.clone(),
                v: old.v,
                length: e.length - offset,
            },
        );
        record.edges.insert(
            edge,
            EdgeRecord {
                id: first,
                u: old.u,
                v: vid.clone(),
                length: offset,
            },
        );
        Ok((MetricGraph::from_record(record)?, vid))
    }

    /// Same graph with edge `e` reparametrised from the other end.
    pub fn flipped(&self, edge: usize) -> MetricGraph {
        let mut g = self.clone();
        let e = &mut g.edges[edge];
        std::mem::swap(&mut e.u, &mut e.v);
        g
    }

    /// All lengths multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<MetricGraph> {
        let mut record = self.to_record();
        for e in &mut record.edges {
            e.length *= factor;
        }
        MetricGraph::from_record(record)
    }

    pub fn fresh_vertex_id(&self, base: &str) -> String {
        fresh_id(base, |id| self.vertex_index.contains_key(id))
    }

    pub fn fresh_edge_id(&self, base: &str) -> String {
        fresh_id(base, |id| self.edge_index.contains_key(id))
    }
}

pub(crate) fn fresh_id(base: &str, taken: impl Fn(&str) -> bool) -> String {
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}~{k}"))
        .find(|id| !taken(id))
        .expect("unbounded id search")
}

/// Incremental construction with canonical `v0, v1, …` / `e0, e1, …` ids.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    record: GraphRecord,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self) -> usize {
        let i = self.record.vertices.len();
        self.record.vertices.push(format!("v{i}"));
        i
    }

    pub fn add_edge(&mut self, u: usize, v: usize, length: f64) -> usize {
        let i = self.record.edges.len();
        self.record.edges.push(EdgeRecord {
            id: format!("e{i}"),
            u: self.record.vertices[u].clone(),
            v: self.record.vertices[v].clone(),
            length,
        });
        i
    }

    pub fn build(self) -> Result<MetricGraph> {
        MetricGraph::from_record(self.record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(vertices: &[&str], edges: &[(&str, &str, &str, f64)]) -> GraphRecord {
        GraphRecord {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|&(id, u, v, length)| EdgeRecord {
                    id: id.into(),
                    u: u.into(),
                    v: v.into(),
                    length,
                })
                .collect(),
        }
    }

    fn graph(vertices: &[&str], edges: &[(&str, &str, &str, f64)]) -> MetricGraph {
        MetricGraph::from_record(rec(vertices, edges)).unwrap()
    }

    #[test]
    fn validate_reports_each_breach() {
        assert!(validate(&rec(&["a", "b"], &[("e", "a", "b", 1.0)])).is_ok());

        let zero = validate(&rec(&["a", "b"], &[("e", "a", "b", 0.0)]));
        assert!(zero.to_string().contains("nonpositive length"));

        let split = validate(&rec(&["a", "b"], &[("e", "a", "a", 1.0), ("f", "b", "b", 1.0)]));
        assert!(split.to_string().contains("disconnected"));

        let bad = validate(&rec(
            &["a", "a"],
            &[("e", "a", "z", f64::NAN), ("e", "a", "a", -1.0)],
        ));
        assert_eq!(bad.violations.len(), 5, "{bad}");
    }

    #[test]
    fn totals_and_betti() {
        let flower = graph(&["c"], &[("p0", "c", "c", 0.25), ("p1", "c", "c", 0.75)]);
        assert_eq!(flower.total_length(), 1.0);
        assert_eq!(flower.betti_number(), 2);

        let path = graph(
            &["a", "b", "c", "d"],
            &[("e0", "a", "b", 1.0), ("e1", "b", "c", 1.0), ("e2", "c", "d", 1.0)],
        );
        assert_eq!(path.betti_number(), 0);
        assert!(path.is_path());

        let four = graph(
            &["c"],
            &[
                ("p0", "c", "c", 1.0),
                ("p1", "c", "c", 1.0),
                ("p2", "c", "c", 1.0),
                ("p3", "c", "c", 1.0),
            ],
        );
        assert_eq!(four.betti_number(), 4);
    }

    #[test]
    fn bridges_in_multigraphs() {
        let lp = graph(&["a"], &[("e", "a", "a", 1.0)]);
        assert!(lp.is_doubly_connected());
        assert!(lp.is_loop());

        let path = graph(&["a", "b", "c"], &[("e0", "a", "b", 1.0), ("e1", "b", "c", 1.0)]);
        assert_eq!(path.bridges(), vec![0, 1]);

        let flower = graph(&["c"], &[("p0", "c", "c", 0.5), ("p1", "c", "c", 0.5)]);
        assert!(flower.is_doubly_connected());

        let parallel = graph(&["a", "b"], &[("e0", "a", "b", 1.0), ("e1", "a", "b", 0.4)]);
        assert!(parallel.is_doubly_connected());

        // lasso: loop plus a pendant edge
        let lasso = graph(&["a", "b"], &[("l", "a", "a", 1.0), ("p", "a", "b", 0.3)]);
        assert_eq!(lasso.bridges(), vec![1]);

        // two triangles joined by a bridge
        let dumbbell = graph(
            &["a", "b", "c", "d", "e", "f"],
            &[
                ("t0", "a", "b", 1.0),
                ("t1", "b", "c", 1.0),
                ("t2", "c", "a", 1.0),
                ("br", "c", "d", 1.0),
                ("s0", "d", "e", 1.0),
                ("s1", "e", "f", 1.0),
                ("s2", "f", "d", 1.0),
            ],
        );
        assert_eq!(dumbbell.bridges(), vec![3]);
    }

    #[test]
    fn subdivide_loop_and_interval() {
        let lp = graph(&["a"], &[("e", "a", "a", 1.0)]);
        let (split, mid) = lp.subdivide("e", 0.5).unwrap();
        assert_eq!(split.vertex_count(), 2);
        assert_eq!(split.edge_count(), 2);
        let m = split.vertex_index(&mid).unwrap();
        for e in split.edges() {
            assert_eq!(e.length, 0.5);
            assert!(e.u != e.v && (e.u == m || e.v == m));
        }
        assert_eq!(split.betti_number(), lp.betti_number());

        let interval = graph(&["a", "b"], &[("e", "a", "b", 1.0)]);
        let (p, _) = interval.subdivide("e", 0.3).unwrap();
        let lengths: Vec<f64> = p.edges().iter().map(|e| e.length).collect();
        assert_eq!(lengths, vec![0.3, 0.7]);
        assert_eq!(p.total_length(), 1.0);

        assert!(interval.subdivide("e", 0.0).is_err());
        assert!(interval.subdivide("e", 1.0).is_err());
        assert!(interval.subdivide("nope", 0.5).is_err());
    }

    #[test]
    fn fresh_ids_avoid_collisions() {
        let g = graph(&["e.m", "b"], &[("e", "e.m", "b", 1.0), ("e.0", "b", "b", 1.0)]);
        let (s, mid) = g.subdivide("e", 0.5).unwrap();
        assert_eq!(mid, "e.m~1");
        assert!(s.has_edge("e.0~1"));
        assert!(s.has_edge("e.1"));
    }

    #[test]
    fn point_parsing() {
        let g = graph(&["a", "b"], &[("e0", "a", "b", 0.5)]);
        assert_eq!(g.parse_point("e0:0.25").unwrap().offset, 0.25);
        assert!(g.parse_point("e0:0.75").is_err());
        assert!(g.parse_point("e0").is_err());
        assert!(g.parse_point("e9:0.1").is_err());
        assert!(g.parse_point("e0:abc").is_err());
    }
}
