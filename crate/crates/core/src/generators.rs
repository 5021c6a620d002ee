//! Named graph families and seeded random ensembles.
//!
//! Vertex and edge ids are `v0, v1, …` / `e0, e1, …` in construction order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, MetricGraph};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `m` edges in a row.
    Path { m: usize },
    /// `m` edges sharing one central vertex.
    Star { m: usize },
    /// `m` self-loops at a single vertex.
    Flower { m: usize },
    /// `m` edges closing a cycle; `m = 1` is a single self-loop.
    Cycle { m: usize },
    /// An `m`-star with spokes of length `spoke`, and an `n`-star with edges of
    /// length `leaf` glued at each of its leaves. Ignores [`Lengths`].
    Firework {
        m: usize,
        n: usize,
        spoke: f64,
        leaf: f64,
    },
    /// Uniform random recursive tree on `edges` edges.
    RandomTree { edges: usize },
    /// Random recursive tree on `edges − betti` edges plus `betti` extra edges
    /// between uniformly drawn vertex pairs (self-loops and parallels kept).
    RandomGraph { edges: usize, betti: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lengths {
    Equilateral { total: f64 },
    Explicit { lengths: Vec<f64> },
    /// Uniform on the simplex `{ℓ > 0, Σℓ = total}`.
    Random { total: f64 },
}

impl Default for Lengths {
    fn default() -> Self {
        Lengths::Equilateral { total: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub lengths: Lengths,
    #[serde(default)]
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(family: Family, lengths: Lengths, seed: u64) -> Self {
        FamilySpec { family, lengths, seed }
    }

    pub fn equilateral(family: Family, total: f64) -> Self {
        FamilySpec::new(family, Lengths::Equilateral { total }, 0)
    }

    pub fn edge_count(&self) -> usize {
        match self.family {
            Family::Path { m } | Family::Star { m } | Family::Flower { m } | Family::Cycle { m } => m,
            Family::Firework { m, n, .. } => m * (n + 1),
            Family::RandomTree { edges } | Family::RandomGraph { edges, .. } => edges,
        }
    }

    /// Short human-readable descriptor, stable across runs.
    pub fn descriptor(&self) -> String {
        let fam = match &self.family {
            Family::Path { m } => format!("path(m={m})"),
            Family::Star { m } => format!("star(m={m})"),
            Family::Flower { m } => format!("flower(m={m})"),
            Family::Cycle { m } => format!("cycle(m={m})"),
            Family::Firework { m, n, spoke, leaf } => {
                return format!("firework(m={m},n={n},J={spoke},j={leaf})");
            }
            Family::RandomTree { edges } => format!("random_tree(E={edges})"),
            Family::RandomGraph { edges, betti } => format!("random_graph(E={edges},b={betti})"),
        };
        let len = match &self.lengths {
            Lengths::Equilateral { total } => format!("equilateral L={total}"),
            Lengths::Explicit { lengths } => format!("lengths={lengths:?}"),
            Lengths::Random { total } => format!("random L={total}"),
        };
        format!("{fam} {len} seed={}", self.seed)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFamily(msg));
        match self.family {
            Family::Path { m } | Family::Star { m } | Family::Flower { m } | Family::Cycle { m }
                if m == 0 =>
            {
                return bad("m must be at least 1".into());
            }
            Family::Firework { m, n, spoke, leaf } => {
                if m == 0 || n == 0 {
                    return bad("firework needs m ≥ 1 and n ≥ 1".into());
                }
                if !(spoke > 0.0 && leaf > 0.0 && spoke.is_finite() && leaf.is_finite()) {
                    return bad("firework edge lengths must be positive and finite".into());
                }
                return Ok(());
            }
            Family::RandomTree { edges: 0 } => {
                return bad("random tree needs at least one edge".into());
            }
            Family::RandomGraph { edges, betti } if edges == 0 || betti > edges => {
                return bad(format!("random graph needs 1 ≤ E and β ≤ E (E={edges}, β={betti})"));
            }
            _ => {}
        }
        match &self.lengths {
            Lengths::Equilateral { total } | Lengths::Random { total } => {
                if !(*total > 0.0 && total.is_finite()) {
                    return bad(format!("total length must be positive, got {total}"));
                }
            }
            Lengths::Explicit { lengths } => {
                if lengths.len() != self.edge_count() {
                    return bad(format!(
                        "{} lengths given for {} edges",
                        lengths.len(),
                        self.edge_count()
                    ));
                }
                if let Some(l) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                    return bad(format!("edge lengths must be positive, got {l}"));
                }
            }
        }
        Ok(())
    }

    /// Edge lengths in construction order (not meaningful for fireworks).
    pub fn resolve_lengths(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let count = self.edge_count();
        Ok(match &self.lengths {
            Lengths::Equilateral { total } => vec![total / count as f64; count],
            Lengths::Explicit { lengths } => lengths.clone(),
            Lengths::Random { total } => {
                // separate stream from the topology draws
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(1);
                dirichlet_lengths(&mut rng, count, *total)
            }
        })
    }
}

/// Uniform on the simplex via normalised exponentials.
pub fn dirichlet_lengths<R: Rng>(rng: &mut R, count: usize, total: f64) -> Vec<f64> {
    let draws: Vec<f64> = (0..count)
        .map(|_| {
            let x: f64 = rng.sample(Exp1);
            x.max(f64::MIN_POSITIVE)
        })
        .collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / sum * total).collect()
}

pub fn generate(spec: &FamilySpec) -> Result<MetricGraph> {
    spec.validate()?;
    if let Family::Firework { m, n, spoke, leaf } = spec.family {
        return firework(m, n, spoke, leaf);
    }
    let lengths = spec.resolve_lengths()?;
    let mut b = GraphBuilder::new();
    match spec.family {
        Family::Path { m } => {
            let mut prev = b.add_vertex();
            for &l in &lengths[..m] {
                let next = b.add_vertex();
                b.add_edge(prev, next, l);
                prev = next;
            }
        }
        Family::Star { m } => {
            let c = b.add_vertex();
            for &l in &lengths[..m] {
                let leaf = b.add_vertex();
                b.add_edge(c, leaf, l);
            }
        }
        Family::Flower { m } => {
            let c = b.add_vertex();
            for &l in &lengths[..m] {
                b.add_edge(c, c, l);
            }
        }
        Family::Cycle { m } => {
            let vs: Vec<usize> = (0..m).map(|_| b.add_vertex()).collect();
            for (i, &l) in lengths.iter().enumerate() {
                b.add_edge(vs[i], vs[(i + 1) % m], l);
            }
        }
        Family::RandomTree { edges } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            random_tree(&mut b, &mut rng, &lengths[..edges]);
        }
        Family::RandomGraph { edges, betti } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let tree_edges = edges - betti;
            random_tree(&mut b, &mut rng, &lengths[..tree_edges]);
            let n = tree_edges + 1;
            for &l in &lengths[tree_edges..] {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                b.add_edge(u, v, l);
            }
        }
        Family::Firework { .. } => unreachable!("handled above"),
    }
    b.build()
}

fn random_tree<R: Rng>(b: &mut GraphBuilder, rng: &mut R, lengths: &[f64]) {
    let root = b.add_vertex();
    debug_assert_eq!(root, 0);
    for (count, &l) in (1..).zip(lengths) {
        let parent = rng.random_range(0..count);
        let child = b.add_vertex();
        b.add_edge(parent, child, l);
    }
}

fn firework(m: usize, n: usize, spoke: f64, leaf: f64) -> Result<MetricGraph> {
    let mut b = GraphBuilder::new();
    let center = b.add_vertex();
    for _ in 0..m {
        let hub = b.add_vertex();
        b.add_edge(center, hub, spoke);
        for _ in 0..n {
            let tip = b.add_vertex();
            b.add_edge(hub, tip, leaf);
        }
    }
    b.build()
}

/// `ρ ≥ 2J·(m−1)/m·(nj)²/(J + nj)²` for the firework family.
pub fn firework_rho_lower_bound(m: usize, n: usize, spoke: f64, leaf: f64) -> Result<f64> {
    if m < 2 || n == 0 || !(spoke > 0.0) || !(leaf > 0.0) {
        return Err(Error::InvalidFamily(format!(
            "firework bound needs m ≥ 2, n ≥ 1, J, j > 0 (m={m}, n={n}, J={spoke}, j={leaf})"
        )));
    }
    let (m, nj) = (m as f64, n as f64 * leaf);
    let ratio = nj / (spoke + nj);
    Ok(2.0 * spoke * (m - 1.0) / m * ratio * ratio)
}

/// Closed-form mean distance for paths, stars, flowers and cycles.
pub fn closed_form_rho(spec: &FamilySpec) -> Result<Option<f64>> {
    let (lengths, equilateral) = match spec.family {
        Family::Path { .. } | Family::Star { .. } | Family::Flower { .. } | Family::Cycle { .. } => (
            spec.resolve_lengths()?,
            matches!(spec.lengths, Lengths::Equilateral { .. }),
        ),
        _ => return Ok(None),
    };
    let total: f64 = lengths.iter().sum();
    let m = lengths.len() as f64;
    let rho = match spec.family {
        Family::Path { .. } => total / 3.0,
        Family::Cycle { .. } => total / 4.0,
        Family::Star { .. } if equilateral => total / (m * m) * (m - 2.0 / 3.0),
        Family::Star { .. } => {
            // same edge: ∫∫|s−t| = ℓ³/3; different edges: ∫∫(s+t) = ℓᵢℓⱼ(ℓᵢ+ℓⱼ)/2
            let mut acc = 0.0;
            for (i, &a) in lengths.iter().enumerate() {
                acc += a * a * a / 3.0;
                for (j, &b) in lengths.iter().enumerate() {
                    if i != j {
                        acc += 0.5 * a * b * (a + b);
                    }
                }
            }
            acc / (total * total)
        }
        Family::Flower { .. } if equilateral => total / (4.0 * m) * ((2.0 * m - 1.0) / m),
        Family::Flower { .. } => {
            let mut acc = 0.0;
            for (i, &a) in lengths.iter().enumerate() {
                acc += a * a * a;
                for (j, &b) in lengths.iter().enumerate() {
                    if i != j {
                        acc += a * b * (a + b);
                    }
                }
            }
            acc / (4.0 * total * total)
        }
        _ => unreachable!(),
    };
    Ok(Some(rho))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(family: Family) -> FamilySpec {
        FamilySpec::equilateral(family, 1.0)
    }

    #[test]
    fn shapes() {
        let s = generate(&eq(Family::Star { m: 3 })).unwrap();
        assert_eq!((s.vertex_count(), s.edge_count()), (4, 3));
        let f = generate(&eq(Family::Flower { m: 4 })).unwrap();
        assert_eq!((f.vertex_count(), f.betti_number()), (1, 4));
        let c = generate(&eq(Family::Cycle { m: 1 })).unwrap();
        assert!(c.is_loop());
        let fw = generate(&eq(Family::Firework { m: 4, n: 7, spoke: 0.5, leaf: 0.1 })).unwrap();
        assert_eq!((fw.vertex_count(), fw.edge_count()), (33, 32));
        assert!((fw.total_length() - (4.0 * 0.5 + 28.0 * 0.1)).abs() < 1e-12);
        assert_eq!(fw.vertex_id(0), "v0");
        assert_eq!(fw.edges()[31].id, "e31");
    }

    #[test]
    fn random_families_are_reproducible() {
        let spec = FamilySpec::new(
            Family::RandomGraph { edges: 8, betti: 3 },
            Lengths::Random { total: 2.0 },
            42,
        );
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.betti_number(), 3);
        assert!((a.total_length() - 2.0).abs() < 1e-12);
        let other = generate(&FamilySpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, other);

        let tree = generate(&FamilySpec::new(
            Family::RandomTree { edges: 6 },
            Lengths::Random { total: 1.0 },
            5,
        ))
        .unwrap();
        assert!(tree.is_tree());
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate(&eq(Family::Star { m: 0 })).is_err());
        assert!(generate(&eq(Family::RandomGraph { edges: 2, betti: 3 })).is_err());
        assert!(generate(&eq(Family::Firework { m: 2, n: 2, spoke: 0.0, leaf: 1.0 })).is_err());
        assert!(generate(&FamilySpec::new(
            Family::Path { m: 2 },
            Lengths::Explicit { lengths: vec![1.0] },
            0
        ))
        .is_err());
        assert!(firework_rho_lower_bound(1, 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn firework_bound_values() {
        let b = firework_rho_lower_bound(4, 7, 0.5, 0.1).unwrap();
        assert!((b - 0.75 * 0.49 / 1.44).abs() < 1e-15);
        // nj → ∞ with m = 2, J = 1
        let far = firework_rho_lower_bound(2, 1_000_000, 1.0, 1.0).unwrap();
        assert!((far - 1.0).abs() < 1e-5);
        // j → 0 with n fixed
        assert!(firework_rho_lower_bound(3, 5, 1.0, 1e-9).unwrap() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        let star5 = closed_form_rho(&eq(Family::Star { m: 5 })).unwrap().unwrap();
        assert!((star5 - 13.0 / 75.0).abs() < 1e-15);
        let flower = FamilySpec::new(
            Family::Flower { m: 2 },
            Lengths::Explicit { lengths: vec![0.3, 0.7] },
            0,
        );
        assert!((closed_form_rho(&flower).unwrap().unwrap() - 0.1975).abs() < 1e-15);
        let cycle = FamilySpec::equilateral(Family::Cycle { m: 1 }, 2.0);
        assert_eq!(closed_form_rho(&cycle).unwrap(), Some(0.5));
        // the general star formula reduces to the equilateral one
        let star3 = FamilySpec::new(
            Family::Star { m: 3 },
            Lengths::Explicit { lengths: vec![1.0 / 3.0; 3] },
            0,
        );
        assert!((closed_form_rho(&star3).unwrap().unwrap() - 7.0 / 27.0).abs() < 1e-15);
        assert_eq!(
            closed_form_rho(&eq(Family::RandomTree { edges: 3 })).unwrap(),
            None
        );
    }

    #[test]
    fn spec_json_shape() {
        let spec: FamilySpec = serde_json::from_str(
            r#"{"family": "flower", "m": 4, "lengths": {"equilateral": {"total": 1.0}}, "seed": 7}"#,
        )
        .unwrap();
        assert_eq!(spec.family, Family::Flower { m: 4 });
        let back: FamilySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
