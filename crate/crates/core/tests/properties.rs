use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use meandist::distance::GraphMetric;
use meandist::generators::{generate, Family, FamilySpec, Lengths};
use meandist::io::{graph_from_json, graph_to_json};
use meandist::mean::{rho_at_point, rho_bounds, rho_exact, rho_from_point_function};
use meandist::surgery::{cut_vertex, random_cut};
use meandist::{MetricGraph, PointOnEdge};

fn graph_strategy() -> impl Strategy<Value = MetricGraph> {
    (1usize..=8, 0usize..=3, any::<u64>(), 0.2f64..5.0).prop_map(|(edges, betti, seed, total)| {
        let betti = betti.min(edges);
        let family = if betti == 0 {
            Family::RandomTree { edges }
        } else {
            Family::RandomGraph { edges, betti }
        };
        generate(&FamilySpec::new(family, Lengths::Random { total }, seed)).unwrap()
    })
}

/// Graph together with `k` points given as (edge, fraction of its length).
fn with_points(k: usize) -> impl Strategy<Value = (MetricGraph, Vec<PointOnEdge>)> {
    graph_strategy().prop_flat_map(move |g| {
        let m = g.edge_count();
        let pts = prop::collection::vec((0..m, 0.0f64..=1.0), k);
        (Just(g), pts).prop_map(|(g, pts)| {
            let pts = pts
                .into_iter()
                .map(|(e, frac)| g.point_at(e, frac * g.edge(e).length).unwrap())
                .collect();
            (g, pts)
        })
    })
}

/// Floyd–Warshall over the edge list, then the four endpoint routes.
fn brute_force_distance(g: &MetricGraph, x: PointOnEdge, y: PointOnEdge) -> f64 {
    let n = g.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        d[e.u][e.v] = d[e.u][e.v].min(e.length);
        d[e.v][e.u] = d[e.v][e.u].min(e.length);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let (ex, ey) = (g.edge(x.edge), g.edge(y.edge));
    let from_x = [(ex.u, x.offset), (ex.v, ex.length - x.offset)];
    let from_y = [(ey.u, y.offset), (ey.v, ey.length - y.offset)];
    let mut best = f64::INFINITY;
    for &(a, da) in &from_x {
        for &(b, db) in &from_y {
            best = best.min(da + d[a][b] + db);
        }
    }
    if x.edge == y.edge {
        best = best.min((x.offset - y.offset).abs());
    }
    best
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn distance_matches_brute_force((g, pts) in with_points(2)) {
        let metric = GraphMetric::new(&g);
        let (x, y) = (pts[0], pts[1]);
        let l = g.total_length();
        prop_assert!(close(metric.point_distance(x, y), brute_force_distance(&g, x, y), l));
    }

    #[test]
    fn metric_axioms((g, pts) in with_points(3)) {
        let metric = GraphMetric::new(&g);
        let d = |a, b| metric.point_distance(a, b);
        let (x, y, z) = (pts[0], pts[1], pts[2]);
        let l = g.total_length();
        prop_assert_eq!(d(x, x), 0.0);
        prop_assert!(d(x, y) >= 0.0);
        prop_assert!(close(d(x, y), d(y, x), l));
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12 * l);
        prop_assert!(d(x, y) <= metric.diameter() + 1e-12 * l);
    }

    #[test]
    fn rho_within_length_bounds(g in graph_strategy()) {
        let metric = GraphMetric::new(&g);
        let rho = rho_exact(&metric, false).rho;
        prop_assert!(rho_bounds(&g, rho, 0.0).iter().all(|c| c.passed()));
        prop_assert!(rho < metric.diameter());
    }

    #[test]
    fn rho_is_mean_of_point_function(g in graph_strategy()) {
        let metric = GraphMetric::new(&g);
        let rho = rho_exact(&metric, false).rho;
        prop_assert!(close(rho_from_point_function(&metric), rho, g.total_length()));
    }

    #[test]
    fn subdivision_is_invisible((g, pts) in with_points(2)) {
        let x = pts[0];
        prop_assume!(x.offset > 0.0 && x.offset < g.edge(x.edge).length);
        let (h, _) = g.subdivide_at(x.edge, x.offset).unwrap();
        let (mg, mh) = (GraphMetric::new(&g), GraphMetric::new(&h));
        let l = g.total_length();
        prop_assert!(close(rho_exact(&mg, false).rho, rho_exact(&mh, false).rho, l));
        prop_assert!(close(mg.diameter(), mh.diameter(), l));
    }

    #[test]
    fn orientation_is_invisible((g, pts) in with_points(2)) {
        let (x, y) = (pts[0], pts[1]);
        let h = g.flipped(x.edge);
        let (mg, mh) = (GraphMetric::new(&g), GraphMetric::new(&h));
        let flip = |p: PointOnEdge| {
            if p.edge == x.edge {
                PointOnEdge { edge: p.edge, offset: g.edge(p.edge).length - p.offset }
            } else {
                p
            }
        };
        let l = g.total_length();
        prop_assert!(close(mg.point_distance(x, y), mh.point_distance(flip(x), flip(y)), l));
        prop_assert!(close(rho_at_point(&mg, y), rho_at_point(&mh, flip(y)), l));
        prop_assert!(close(rho_exact(&mg, false).rho, rho_exact(&mh, false).rho, l));
    }

    #[test]
    fn rho_scales_linearly(g in graph_strategy(), c in 0.1f64..10.0) {
        let h = g.scaled(c).unwrap();
        let (a, b) = (rho_exact(&GraphMetric::new(&g), false).rho, rho_exact(&GraphMetric::new(&h), false).rho);
        prop_assert!((b - c * a).abs() <= 1e-12 * (c * a).max(1.0));
    }

    #[test]
    fn cutting_increases_rho(g in graph_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(cut) = random_cut(&g, &mut rng, 32) else {
            return Ok(());
        };
        let h = cut_vertex(&g, &cut).unwrap();
        prop_assert!(h.total_length() == g.total_length());
        let before = rho_exact(&GraphMetric::new(&g), false).rho;
        let after = rho_exact(&GraphMetric::new(&h), false).rho;
        prop_assert!(after > before, "{} -> {}", before, after);
    }

    #[test]
    fn json_round_trip(g in graph_strategy()) {
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        prop_assert_eq!(graph_to_json(&back), text);
        prop_assert_eq!(back.total_length(), g.total_length());
    }
}
