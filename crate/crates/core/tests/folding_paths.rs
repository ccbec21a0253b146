use foldpath_core::agraph::AGraph;
use foldpath_core::complexes::{fb_equivalent, folding_path_bases, FBVertex};
use foldpath_core::folding::{
    ensure_foldable, fold_graph, has_base_loop, is_basis, make_foldable, random_basis,
    random_basis_with_letter, wedge_graph, FoldKind,
};
use foldpath_core::labeled_isomorphic;
use foldpath_core::words::{FreeWord, Letter, Rank};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stallings folding by union-find on a bare edge list, folding a random
/// violating pair each round.
fn oracle_fold(basis: &[FreeWord], seed: u64) -> AGraph {
    let mut edges: Vec<(usize, usize, Letter)> = Vec::new();
    let mut fresh = 1;
    for w in basis {
        let mut cur = 0;
        for (k, &l) in w.letters().iter().enumerate() {
            let next = if k + 1 == w.len() {
                0
            } else {
                fresh += 1;
                fresh - 1
            };
            edges.push((cur, next, l));
            cur = next;
        }
    }
    let mut parent: Vec<usize> = (0..fresh).collect();
    fn find(p: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while p[r] != r {
            r = p[r];
        }
        p[v] = r;
        r
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        // Normalize endpoints and drop duplicate edges.
        let mut norm: Vec<(usize, usize, Letter)> = edges
            .iter()
            .map(|&(a, b, l)| {
                let (a, b) = (find(&mut parent, a), find(&mut parent, b));
                if l.is_positive() {
                    (a, b, l)
                } else {
                    (b, a, l.inv())
                }
            })
            .collect();
        norm.sort();
        norm.dedup();
        edges = norm;
        let mut germs: Vec<(usize, Letter, usize)> = Vec::new();
        for &(a, b, l) in &edges {
            germs.push((a, l, b));
            germs.push((b, l.inv(), a));
        }
        let mut clashes = Vec::new();
        for (i, x) in germs.iter().enumerate() {
            for y in &germs[i + 1..] {
                if x.0 == y.0 && x.1 == y.1 && x.2 != y.2 {
                    clashes.push((x.2, y.2));
                }
            }
        }
        let Some(&(u, v)) = clashes.choose(&mut rng) else {
            break;
        };
        let (u, v) = (find(&mut parent, u), find(&mut parent, v));
        parent[u.max(v)] = u.min(v);
    }
    let mut b = AGraph::builder();
    let root = find(&mut parent, 0);
    b.vertex(root);
    for &(a, c, l) in &edges {
        b.edge(a, c, l);
    }
    b.base(root);
    b.build()
}

fn rank3() -> Rank {
    Rank::default()
}

#[test]
fn oracle_agrees_on_known_examples() {
    let w = |s: &str| foldpath_core::words::parse_word_list(s, rank3()).unwrap();
    assert!(labeled_isomorphic(
        &oracle_fold(&w("ab,b,c"), 0),
        &AGraph::rose(rank3())
    ));
    assert!(!labeled_isomorphic(
        &oracle_fold(&w("aa,b,c"), 0),
        &AGraph::rose(rank3())
    ));
}

#[test]
fn random_bases_fold_to_rose_and_agree_with_oracle() {
    for seed in 0..120u64 {
        let b = random_basis(seed, 12, rank3());
        let start = make_foldable(&b).unwrap();
        let path = fold_graph(start.graph.clone()).unwrap();
        assert!(path.ends_at_rose(rank3()), "seed {seed}");
        assert_eq!(path.type_ii_count(), 0, "seed {seed}");
        let total: usize = start.basis.iter().map(FreeWord::len).sum();
        assert!(path.single_fold_count() <= total - 3, "seed {seed}");
        assert!(path.graphs.iter().all(AGraph::is_foldable), "seed {seed}");
        for order in 0..2 {
            let folded = oracle_fold(&start.basis, seed * 7 + order);
            assert!(labeled_isomorphic(path.terminal(), &folded), "seed {seed}");
        }
    }
}

#[test]
fn non_bases_are_rejected() {
    let w = |s: &str| foldpath_core::words::parse_word_list(s, rank3()).unwrap();
    for s in ["aa,b,c", "ab,ba,c", "abAB,b,c"] {
        assert!(!is_basis(&w(s), rank3()).unwrap(), "{s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_bases_are_bases(seed in 0u64..1_000_000, moves in 0usize..12) {
        let b = FBVertex { basis: random_basis(seed, moves, rank3()) };
        let chain = folding_path_bases(&b).unwrap();
        prop_assert!(fb_equivalent(chain.last().unwrap(), &FBVertex::reference(rank3())));
        for v in &chain {
            prop_assert!(is_basis(&v.basis, rank3()).unwrap());
        }
    }

    #[test]
    fn shared_letter_loop_persists(seed in 0u64..1_000_000, moves in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_basis_with_letter(&mut rng, moves, rank3());
        let x = Letter::generator(1);
        prop_assert_eq!(b[0].as_letter(), Some(x));
        let start = ensure_foldable(&b).unwrap();
        prop_assert_eq!(start.basis[0].as_letter(), Some(x));
        let path = fold_graph(start.graph).unwrap();
        for g in &path.graphs {
            prop_assert!(has_base_loop(g, x));
        }
        for steps in &path.steps {
            prop_assert!(steps.iter().all(|s| s.kind == FoldKind::TypeI));
        }
        let chain = folding_path_bases(&FBVertex { basis: b }).unwrap();
        let gen = FreeWord::generator(1);
        for v in &chain {
            prop_assert!(v.basis.contains(&gen));
        }
    }

    #[test]
    fn wedge_foldability_is_decided_at_base(seed in 0u64..1_000_000, moves in 0usize..10, conj in "[a-cA-C]{0,4}") {
        let g = FreeWord::parse(&conj, rank3()).unwrap();
        let b: Vec<FreeWord> = random_basis(seed, moves, rank3())
            .iter()
            .map(|w| w.conjugate_by(&g))
            .collect();
        let mut labels: Vec<Letter> = b
            .iter()
            .flat_map(|w| [w.first().unwrap(), w.last().unwrap().inv()])
            .collect();
        labels.sort();
        labels.dedup();
        prop_assert_eq!(wedge_graph(&b).unwrap().is_foldable(), labels.len() >= 3);
    }

    #[test]
    fn fold_is_order_independent(seed in 0u64..1_000_000, moves in 0usize..10, order in 0u64..100) {
        let b = random_basis(seed, moves, rank3());
        let start = make_foldable(&b).unwrap();
        let path = fold_graph(start.graph).unwrap();
        prop_assert!(labeled_isomorphic(path.terminal(), &oracle_fold(&start.basis, order)));
    }

    #[test]
    fn tree_bases_of_intermediates(seed in 0u64..1_000_000, moves in 1usize..12) {
        let b = random_basis(seed, moves, rank3());
        let path = fold_graph(make_foldable(&b).unwrap().graph).unwrap();
        for g in &path.graphs {
            let v = g.base().unwrap();
            for root in g.vertices().take(3) {
                let t = g.spanning_tree(root).unwrap();
                let basis = g.basis_from_tree(&t, v, rank3()).unwrap();
                prop_assert!(is_basis(&basis, rank3()).unwrap());
            }
        }
    }
}
