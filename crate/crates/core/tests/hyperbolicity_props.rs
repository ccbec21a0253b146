use std::collections::VecDeque;

use foldpath_core::hyperbolicity::{
    apsp, check_thin_triangles, cone_off, delta_four_point, delta_slim, geodesic_family,
    is_quasiconvex, median_centers, quasiconvexity_constant, FiniteGraph, ThinConfig, VertexId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain BFS distance table on a dense adjacency list.
fn distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in &adj[v] {
                    if d[w] == u32::MAX {
                        d[w] = d[v] + 1;
                        q.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// Twice the four-point δ by direct enumeration.
fn four_point_oracle(d: &[Vec<u32>]) -> i64 {
    let n = d.len();
    let mut best = 0i64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let mut s = [
                        (d[x][y] + d[z][w]) as i64,
                        (d[x][z] + d[y][w]) as i64,
                        (d[x][w] + d[y][z]) as i64,
                    ];
                    s.sort();
                    best = best.max(s[2] - s[1]);
                }
            }
        }
    }
    best
}

/// Every geodesic from `x` to `y`, listed explicitly.
fn all_geodesics(adj: &[Vec<usize>], d: &[Vec<u32>], x: usize, y: usize) -> Vec<Vec<usize>> {
    if x == y {
        return vec![vec![x]];
    }
    let mut out = Vec::new();
    for &w in &adj[x] {
        if d[w][y] + 1 == d[x][y] {
            for mut rest in all_geodesics(adj, d, w, y) {
                rest.insert(0, x);
                out.push(rest);
            }
        }
    }
    out
}

/// Slim-triangle δ over every choice of geodesic sides.
fn slim_oracle(n: usize, edges: &[(usize, usize)]) -> u32 {
    let d = distances(n, edges);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let geo: Vec<Vec<Vec<Vec<usize>>>> = (0..n)
        .map(|x| (0..n).map(|y| all_geodesics(&adj, &d, x, y)).collect())
        .collect();
    let to = |p: usize, side: &[usize]| side.iter().map(|&q| d[p][q]).min().unwrap();
    let mut best = 0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for s1 in &geo[x][y] {
                    for s2 in &geo[y][z] {
                        for s3 in &geo[z][x] {
                            for &p in s1 {
                                best = best.max(to(p, s2).min(to(p, s3)));
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

fn random_connected(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a, b));
        }
    }
    edges
}

fn build(n: usize, edges: &[(usize, usize)]) -> FiniteGraph {
    let ids: Vec<VertexId> = (0..n as VertexId).collect();
    let es: Vec<(VertexId, VertexId)> = edges
        .iter()
        .map(|&(a, b)| (a as VertexId, b as VertexId))
        .collect();
    FiniteGraph::new(&ids, &es).unwrap()
}

#[test]
fn cycle_four_point_matches_closed_form() {
    for n in 3..=12 {
        let d: Vec<Vec<u32>> = (0..n)
            .map(|i: usize| {
                (0..n)
                    .map(|j: usize| i.abs_diff(j).min(n - i.abs_diff(j)) as u32)
                    .collect()
            })
            .collect();
        let got = delta_four_point(&FiniteGraph::cycle(n)).unwrap();
        assert_eq!(got.twice(), four_point_oracle(&d), "C{n}");
    }
    let c4 = delta_four_point(&FiniteGraph::cycle(4)).unwrap();
    let c12 = delta_four_point(&FiniteGraph::cycle(12)).unwrap();
    assert!(c12 > c4);
}

#[test]
fn cycle_slim_matches_oracle() {
    for n in 3..=10 {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        assert_eq!(
            delta_slim(&FiniteGraph::cycle(n)).unwrap(),
            slim_oracle(n, &edges),
            "C{n}"
        );
    }
}

#[test]
fn coning_grid_rows_and_columns_lowers_delta() {
    let g = FiniteGraph::grid(10, 10);
    let mut lines: Vec<Vec<VertexId>> = Vec::new();
    let ids = g.vertices().to_vec();
    for r in 0..10 {
        lines.push(ids[r * 10..(r + 1) * 10].to_vec());
        lines.push((0..10).map(|c| ids[c * 10 + r]).collect());
    }
    let coned = cone_off(&g, &lines).unwrap();
    assert!(delta_slim(&coned).unwrap() < delta_slim(&g).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trees_are_zero_hyperbolic(seed in 0u64..1_000_000, n in 1usize..=40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = FiniteGraph::random_tree(&mut rng, n);
        prop_assert_eq!(t.edge_count(), n - 1);
        prop_assert_eq!(delta_four_point(&t).unwrap().twice(), 0);
        prop_assert_eq!(delta_slim(&t).unwrap(), 0);
    }

    #[test]
    fn deltas_match_oracles(seed in 0u64..1_000_000, n in 2usize..=8, extra in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_connected(&mut rng, n, extra);
        let g = build(n, &edges);
        let d = distances(n, &edges);
        prop_assert_eq!(delta_four_point(&g).unwrap().twice(), four_point_oracle(&d));
        prop_assert_eq!(delta_slim(&g).unwrap(), slim_oracle(n, &edges));
    }

    #[test]
    fn cone_off_never_stretches(seed in 0u64..1_000_000, n in 2usize..=20, extra in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = build(n, &random_connected(&mut rng, n, extra));
        let ids = g.vertices().to_vec();
        let subset: Vec<VertexId> = ids.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        prop_assume!(!subset.is_empty());
        let coned = cone_off(&g, &[subset]).unwrap();
        let (d0, d1) = (apsp(&g).unwrap(), apsp(&coned).unwrap());
        for &a in &ids {
            for &b in &ids {
                prop_assert!(d1.get(&coned, a, b).unwrap() <= d0.get(&g, a, b).unwrap());
            }
        }
        let all = cone_off(&g, std::slice::from_ref(&ids)).unwrap();
        prop_assert_eq!(apsp(&all).unwrap().diameter(), 1);
    }

    #[test]
    fn quasiconvexity_is_monotone(seed in 0u64..1_000_000, n in 2usize..=16, extra in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = random_connected(&mut rng, n, extra);
        let g = build(n, &edges);
        let subset: Vec<VertexId> = (0..n as VertexId).filter(|_| rng.gen_bool(0.5)).collect();
        prop_assume!(!subset.is_empty());
        let c = quasiconvexity_constant(&g, &subset).unwrap();
        for k in 0..=c + 2 {
            prop_assert_eq!(is_quasiconvex(&g, &subset, k).unwrap(), k >= c);
        }
        // Independent check of the constant.
        let d = distances(n, &edges);
        let s: Vec<usize> = subset.iter().map(|&v| v as usize).collect();
        let mut worst = 0;
        for &a in &s {
            for &b in &s {
                for v in 0..n {
                    if d[a][v] + d[v][b] == d[a][b] {
                        worst = worst.max(s.iter().map(|&q| d[v][q]).min().unwrap());
                    }
                }
            }
        }
        prop_assert_eq!(c, worst);
    }

    #[test]
    fn trees_have_thin_triangles(seed in 0u64..1_000_000, n in 2usize..=20, b1 in 1u32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = FiniteGraph::random_tree(&mut rng, n);
        let paths = geodesic_family(&t).unwrap();
        let phi = median_centers(&t).unwrap();
        let report = check_thin_triangles(&t, &paths, &phi, &ThinConfig::new(b1)).unwrap();
        prop_assert_eq!(report.symmetry.b2, 0);
        prop_assert_eq!(report.center.b2, 0);
        prop_assert!(report.subsegment.b2 <= b1);
        prop_assert!(report.verify(&t, &paths, &phi).unwrap());
    }
}
