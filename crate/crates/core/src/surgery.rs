//! Graph surgery: cutting and gluing vertices, unfolding pendant edges,
//! attaching and lengthening pendant edges, and replacing pendant subgraphs.
//!
//! Every transform returns a new validated graph. Ids of untouched vertices
//! and edges are preserved; new objects get ids derived from the ones they
//! replace.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distance::GraphMetric;
use crate::error::{Error, Result};
use crate::graph::{validate, EdgeRecord, End, GraphRecord, Incidence, MetricGraph, Violation};
use crate::mean::{rho_at_vertex, rho_exact};

/// An edge-end slot named by ids, as used in cut specifications.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IncidenceRef {
    pub edge: String,
    pub end: End,
}

/// Partition of the incidences at `vertex` into two nonempty groups. The
/// first group stays on `vertex`; the second moves to a new vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutSpec {
    pub vertex: String,
    pub keep: Vec<IncidenceRef>,
    pub split: Vec<IncidenceRef>,
}

impl CutSpec {
    /// Builds a spec from the incidences that should move to the new vertex;
    /// everything else at `v` stays.
    pub fn moving(g: &MetricGraph, v: usize, split: &[Incidence]) -> CutSpec {
        let name = |i: &Incidence| IncidenceRef {
            edge: g.edge(i.edge).id.clone(),
            end: i.end,
        };
        CutSpec {
            vertex: g.vertex_id(v).to_string(),
            keep: g
                .incidences(v)
                .iter()
                .filter(|i| !split.contains(i))
                .map(name)
                .collect(),
            split: split.iter().map(name).collect(),
        }
    }
}

/// Name of the vertex created by a cut at `v`.
fn cut_vertex_id(g: &MetricGraph, v: &str) -> String {
    g.fresh_vertex_id(&format!("{v}.cut"))
}

/// Replaces `v` by two vertices carrying the two incidence groups.
pub fn cut_vertex(g: &MetricGraph, spec: &CutSpec) -> Result<MetricGraph> {
    let v = g.vertex_index(&spec.vertex)?;
    let at_v: BTreeSet<Incidence> = g.incidences(v).into_iter().collect();
    let resolve = |r: &IncidenceRef| -> Result<Incidence> {
        let inc = Incidence { edge: g.edge_index(&r.edge)?, end: r.end };
        if !at_v.contains(&inc) {
            return Err(Error::InvalidCut(format!(
                "end {:?} of edge `{}` is not at vertex `{}`",
                r.end, r.edge, spec.vertex
            )));
        }
        Ok(inc)
    };
    let keep = spec.keep.iter().map(resolve).collect::<Result<BTreeSet<_>>>()?;
    let split = spec.split.iter().map(resolve).collect::<Result<BTreeSet<_>>>()?;
    if keep.is_empty() || split.is_empty() {
        return Err(Error::InvalidCut("trivial cut: one group is empty".into()));
    }
    if keep.len() + split.len() != spec.keep.len() + spec.split.len()
        || !keep.is_disjoint(&split)
    {
        return Err(Error::InvalidCut("groups repeat an incidence".into()));
    }
    if keep.len() + split.len() != at_v.len() {
        return Err(Error::InvalidCut(format!(
            "groups cover {} of the {} incidences at `{}`",
            keep.len() + split.len(),
            at_v.len(),
            spec.vertex
        )));
    }

    let new_id = cut_vertex_id(g, &spec.vertex);
    let mut record = g.to_record();
    record.vertices.push(new_id.clone());
    for inc in &split {
        let e = &mut record.edges[inc.edge];
        match inc.end {
            End::U => e.u = new_id.clone(),
            End::V => e.v = new_id.clone(),
        }
    }
    let report = validate(&record);
    if report.violations.iter().any(|x| matches!(x, Violation::Disconnected { .. })) {
        return Err(Error::InvalidCut(format!(
            "cutting `{}` disconnects the graph",
            spec.vertex
        )));
    }
    MetricGraph::from_record(record)
}

/// Identifies `v2` with `v1`; the merged vertex keeps the id of `v1`.
pub fn glue_vertices(g: &MetricGraph, v1: &str, v2: &str) -> Result<MetricGraph> {
    g.vertex_index(v1)?;
    g.vertex_index(v2)?;
    if v1 == v2 {
        return Err(Error::InvalidSurgery(format!("cannot glue `{v1}` to itself")));
    }
    let mut record = g.to_record();
    record.vertices.retain(|v| v != v2);
    for e in &mut record.edges {
        for end in [&mut e.u, &mut e.v] {
            if end == v2 {
                *end = v1.to_string();
            }
        }
    }
    MetricGraph::from_record(record)
}

/// Glues all vertices into one: the flower with the same edge lengths.
pub fn glue_all(g: &MetricGraph) -> Result<MetricGraph> {
    let mut out = g.clone();
    let first = g.vertex_id(0).to_string();
    for v in &g.vertices()[1..] {
        out = glue_vertices(&out, &first, v)?;
    }
    Ok(out)
}

/// A maximal path from `root` to a leaf through degree-2 vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arm {
    pub root: usize,
    /// Edges in order from the root.
    pub edges: Vec<usize>,
    pub leaf: usize,
}

/// Pendant arms hanging at `v`, ordered by first edge.
pub fn pendant_arms(g: &MetricGraph, v: usize) -> Vec<Arm> {
    let adj = g.adjacency();
    let mut arms = Vec::new();
    for &(first, next) in &adj[v] {
        if next == v {
            continue;
        }
        let mut edges = vec![first];
        let (mut prev_edge, mut cur) = (first, next);
        let leaf = loop {
            match adj[cur].len() {
                1 => break Some(cur),
                2 if cur != v => {
                    let &(e, w) = adj[cur]
                        .iter()
                        .find(|(e, _)| *e != prev_edge)
                        .expect("degree two");
                    if g.edge(e).is_loop() || w == v {
                        break None;
                    }
                    edges.push(e);
                    prev_edge = e;
                    cur = w;
                }
                _ => break None,
            }
        };
        if let Some(leaf) = leaf {
            arms.push(Arm { root: v, edges, leaf });
        }
    }
    arms
}

fn relink(record: &mut GraphRecord, edge: usize, from: &str, to: &str) {
    let e = &mut record.edges[edge];
    if e.u == from {
        e.u = to.to_string();
    } else {
        e.v = to.to_string();
    }
}

/// Unfolds two pendant edges `e1 = (v, w1)`, `e2 = (v, w2)` into the pendant
/// path `v – w1 – w2`: `e2` is detached from `v` and reattached at `w1`.
pub fn unfold_pendant_pair(g: &MetricGraph, e1: &str, e2: &str, v: &str) -> Result<MetricGraph> {
    let vi = g.vertex_index(v)?;
    let (i1, i2) = (g.edge_index(e1)?, g.edge_index(e2)?);
    if i1 == i2 {
        return Err(Error::InvalidSurgery("pendant pair needs two distinct edges".into()));
    }
    let mut leaves = [0; 2];
    for (slot, (i, id)) in leaves.iter_mut().zip([(i1, e1), (i2, e2)]) {
        let e = g.edge(i);
        let far = match (e.u == vi, e.v == vi) {
            (true, false) => e.v,
            (false, true) => e.u,
            _ => {
                return Err(Error::InvalidSurgery(format!(
                    "edge `{id}` is not a pendant edge at `{v}`"
                )))
            }
        };
        if g.degree(far) != 1 {
            return Err(Error::InvalidSurgery(format!(
                "edge `{id}` is not a pendant edge at `{v}`"
            )));
        }
        *slot = far;
    }
    let mut record = g.to_record();
    relink(&mut record, i2, v, g.vertex_id(leaves[0]));
    MetricGraph::from_record(record)
}

/// Arm version of [`unfold_pendant_pair`]: `b` is reattached at the leaf of `a`.
pub fn unfold_arms(g: &MetricGraph, a: &Arm, b: &Arm) -> Result<MetricGraph> {
    if a.root != b.root || a.edges[0] == b.edges[0] {
        return Err(Error::InvalidSurgery("arms must be distinct and share a root".into()));
    }
    let mut record = g.to_record();
    relink(&mut record, b.edges[0], g.vertex_id(a.root), g.vertex_id(a.leaf));
    MetricGraph::from_record(record)
}

/// Repeatedly unfolds pairs of pendant arms until the tree is a path.
/// Returns the path and the number of unfoldings.
pub fn unfold_to_path(g: &MetricGraph) -> Result<(MetricGraph, usize)> {
    if !g.is_tree() {
        return Err(Error::InvalidSurgery("unfolding to a path needs a tree".into()));
    }
    let mut cur = g.clone();
    let mut steps = 0;
    while !cur.is_path() {
        let pair = (0..cur.vertex_count())
            .filter(|&v| cur.degree(v) >= 3)
            .find_map(|v| {
                let arms = pendant_arms(&cur, v);
                (arms.len() >= 2).then(|| (arms[0].clone(), arms[1].clone()))
            })
            .expect("a tree that is not a path has a branch vertex with two arms");
        cur = unfold_arms(&cur, &pair.0, &pair.1)?;
        steps += 1;
    }
    Ok((cur, steps))
}

/// Attaches a new leaf to `v` by an edge of length `ell`. Returns the graph
/// and the id of the leaf.
pub fn attach_pendant_edge(g: &MetricGraph, v: &str, ell: f64) -> Result<(MetricGraph, String)> {
    g.vertex_index(v)?;
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::InvalidSurgery(format!("pendant length must be positive, got {ell}")));
    }
    let leaf = g.fresh_vertex_id(&format!("{v}.leaf"));
    let mut record = g.to_record();
    record.vertices.push(leaf.clone());
    record.edges.push(EdgeRecord {
        id: g.fresh_edge_id(&format!("{v}.pendant")),
        u: v.to_string(),
        v: leaf.clone(),
        length: ell,
    });
    Ok((MetricGraph::from_record(record)?, leaf))
}

/// Adds `delta` (possibly negative) to the length of edge `e`.
pub fn lengthen_edge(g: &MetricGraph, e: &str, delta: f64) -> Result<MetricGraph> {
    let i = g.edge_index(e)?;
    let mut record = g.to_record();
    record.edges[i].length += delta;
    MetricGraph::from_record(record)
}

/// `(2/L)(ρ_Γ(v) − ρ(Γ))`: the derivative of `ρ` when a pendant edge of
/// length `ℓ → 0⁺` is attached at `v`, and also when a pendant edge with leaf
/// `v` is lengthened.
pub fn pendant_derivative(g: &MetricGraph, v: &str) -> Result<f64> {
    let vi = g.vertex_index(v)?;
    let metric = GraphMetric::new(g);
    let rho = rho_exact(&metric, false).rho;
    Ok(2.0 / g.total_length() * (rho_at_vertex(&metric, vi) - rho))
}

/// Edge sets of the pieces of `Γ` that meet the rest only at `v`: the
/// closures of the components of `Γ ∖ {v}`, in order of their first edge. A
/// self-loop at `v` is a piece of its own. Fewer than two pieces means `v` is
/// not a cut vertex.
pub fn pendant_pieces(g: &MetricGraph, v: usize) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let mut piece_of = vec![usize::MAX; g.edge_count()];
    let mut pieces: Vec<Vec<usize>> = Vec::new();
    for inc in g.incidences(v) {
        if piece_of[inc.edge] != usize::MAX {
            continue;
        }
        let id = pieces.len();
        let mut edges = Vec::new();
        let mut stack = vec![inc.edge];
        piece_of[inc.edge] = id;
        while let Some(e) = stack.pop() {
            edges.push(e);
            let edge = g.edge(e);
            for w in [edge.u, edge.v] {
                if w == v {
                    continue;
                }
                for &(f, _) in &adj[w] {
                    if piece_of[f] == usize::MAX {
                        piece_of[f] = id;
                        stack.push(f);
                    }
                }
            }
        }
        edges.sort_unstable();
        pieces.push(edges);
    }
    pieces
}

/// The subgraph spanned by `edges`, keeping ids.
pub fn edge_subgraph(g: &MetricGraph, edges: &[usize]) -> Result<MetricGraph> {
    let mut used = BTreeSet::new();
    for &e in edges {
        used.insert(g.edge(e).u);
        used.insert(g.edge(e).v);
    }
    let full = g.to_record();
    MetricGraph::from_record(GraphRecord {
        vertices: used.iter().map(|&v| full.vertices[v].clone()).collect(),
        edges: edges.iter().map(|&e| full.edges[e].clone()).collect(),
    })
}

/// Replaces the pendant subgraph `H` (a union of pieces at `vertex`) by
/// `replacement`, whose vertex `boundary` is glued onto `vertex`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendantSpec {
    pub vertex: String,
    pub remove: Vec<String>,
    pub replacement: GraphRecord,
    pub boundary: String,
}

pub fn replace_pendant(g: &MetricGraph, spec: &PendantSpec) -> Result<MetricGraph> {
    let v = g.vertex_index(&spec.vertex)?;
    let replacement = MetricGraph::from_record(spec.replacement.clone())?;
    replacement.vertex_index(&spec.boundary)?;
    let remove = spec
        .remove
        .iter()
        .map(|e| g.edge_index(e))
        .collect::<Result<BTreeSet<_>>>()?;
    let pieces = pendant_pieces(g, v);
    let mut covered = BTreeSet::new();
    for p in &pieces {
        let inside = p.iter().filter(|e| remove.contains(e)).count();
        if inside == p.len() {
            covered.extend(p.iter().copied());
        } else if inside > 0 {
            return Err(Error::InvalidSurgery(format!(
                "removed edges split a piece hanging at `{}`",
                spec.vertex
            )));
        }
    }
    if covered.len() != remove.len() {
        return Err(Error::InvalidSurgery(format!(
            "removed edges do not all hang at `{}`",
            spec.vertex
        )));
    }
    if covered.len() == g.edge_count() {
        return Err(Error::InvalidSurgery("cannot replace the whole graph".into()));
    }

    let full = g.to_record();
    let mut keep_v = BTreeSet::new();
    let mut record = GraphRecord::default();
    for (i, e) in full.edges.iter().enumerate() {
        if !remove.contains(&i) {
            keep_v.insert(e.u.clone());
            keep_v.insert(e.v.clone());
            record.edges.push(e.clone());
        }
    }
    record.vertices = full.vertices.iter().filter(|v| keep_v.contains(*v)).cloned().collect();

    let taken_v: BTreeSet<String> = record.vertices.iter().cloned().collect();
    let taken_e: BTreeSet<String> = record.edges.iter().map(|e| e.id.clone()).collect();
    let rename = |id: &str, taken: &BTreeSet<String>| {
        crate::graph::fresh_id(id, |c| taken.contains(c))
    };
    let vmap: std::collections::HashMap<&str, String> = replacement
        .vertices()
        .iter()
        .map(|w| {
            let name = if *w == spec.boundary {
                spec.vertex.clone()
            } else {
                rename(w, &taken_v)
            };
            (w.as_str(), name)
        })
        .collect();
    for w in replacement.vertices() {
        if *w != spec.boundary {
            record.vertices.push(vmap[w.as_str()].clone());
        }
    }
    for e in replacement.to_record().edges {
        record.edges.push(EdgeRecord {
            id: rename(&e.id, &taken_e),
            u: vmap[e.u.as_str()].clone(),
            v: vmap[e.v.as_str()].clone(),
            length: e.length,
        });
    }
    MetricGraph::from_record(record)
}

/// A uniformly chosen nontrivial cut that keeps the graph connected, or
/// `None` after `attempts` rejected draws.
pub fn random_cut<R: Rng>(g: &MetricGraph, rng: &mut R, attempts: usize) -> Option<CutSpec> {
    let candidates: Vec<usize> = (0..g.vertex_count()).filter(|&v| g.degree(v) >= 2).collect();
    for _ in 0..attempts {
        let &v = candidates.choose(rng)?;
        let mut incs = g.incidences(v);
        incs.shuffle(rng);
        let k = rng.random_range(1..incs.len());
        let spec = CutSpec::moving(g, v, &incs[..k]);
        if cut_vertex(g, &spec).is_ok() {
            return Some(spec);
        }
    }
    None
}

/// One step of a surgery program as read by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    Cut(CutSpec),
    Glue { v1: String, v2: String },
    Unfold { e1: String, e2: String, vertex: String },
    UnfoldToPath,
    Attach { vertex: String, length: f64 },
    Lengthen { edge: String, delta: f64 },
    Subdivide { edge: String, offset: f64 },
    ReplacePendant(PendantSpec),
}

pub fn apply(g: &MetricGraph, op: &Operation) -> Result<MetricGraph> {
    match op {
        Operation::Cut(spec) => cut_vertex(g, spec),
        Operation::Glue { v1, v2 } => glue_vertices(g, v1, v2),
        Operation::Unfold { e1, e2, vertex } => unfold_pendant_pair(g, e1, e2, vertex),
        Operation::UnfoldToPath => unfold_to_path(g).map(|r| r.0),
        Operation::Attach { vertex, length } => attach_pendant_edge(g, vertex, *length).map(|r| r.0),
        Operation::Lengthen { edge, delta } => lengthen_edge(g, edge, *delta),
        Operation::Subdivide { edge, offset } => g.subdivide(edge, *offset).map(|r| r.0),
        Operation::ReplacePendant(spec) => replace_pendant(g, spec),
    }
}
