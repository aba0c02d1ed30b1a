//! Property tests for the structural invariants: every public mutation
//! leaves a valid annotated BST behind, traversal order is preserved by
//! rotations and splays, routing matches the BFS oracle, and overlays keep
//! all trees over the identical peer set.

use proptest::prelude::*;

use obst_core::bst::{Bst, PeerId, RotationLedger};
use obst_core::graph::Graph;
use obst_core::overlay::{Overlay, RunOptions};
use obst_core::workload::RequestSequence;

fn p(v: u32) -> PeerId {
    PeerId(v)
}

fn tree_graph(t: &Bst, n: usize) -> Graph {
    Graph::from_edges(n, t.edges().into_iter().map(|(a, b)| (a.0, b.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn double_splay_postcondition(
        n in 2usize..48,
        seed in any::<u64>(),
        picks in proptest::collection::vec((any::<u32>(), any::<u32>()), 1..20),
    ) {
        let mut t = Bst::random(n, seed).unwrap();
        let before = t.in_order();
        let mut ledger = RotationLedger::new();
        for (a, b) in picks {
            let u = p(a % n as u32 + 1);
            let v = p(b % n as u32 + 1);
            t.double_splay(u, v, &mut ledger).unwrap();
            if u != v {
                prop_assert_eq!(t.distance(u, v).unwrap(), 1);
            }
            prop_assert!(t.check().is_ok());
            prop_assert_eq!(&t.in_order(), &before);
        }
    }

    #[test]
    fn routing_equals_bfs(n in 1usize..64, seed in any::<u64>(), pair_seed in any::<u64>()) {
        let t = Bst::random(n, seed).unwrap();
        let g = tree_graph(&t, n);
        let mut rng = obst_core::seeding::rng(pair_seed);
        use rand::Rng;
        for _ in 0..16 {
            let u = rng.gen_range(1..=n as u32);
            let v = rng.gen_range(1..=n as u32);
            let path = t.route(p(u), p(v)).unwrap();
            prop_assert_eq!(path.len() as u32 - 1, g.distance(u, v).unwrap());
        }
    }

    #[test]
    fn mixed_mutations_keep_bst_valid(
        n in 1usize..32,
        seed in any::<u64>(),
        ops in proptest::collection::vec((0u8..4, any::<u32>(), any::<u32>()), 1..40),
    ) {
        let mut t = Bst::random(n, seed).unwrap();
        let mut next_id = n as u32;
        let mut ledger = RotationLedger::new();
        for (op, a, b) in ops {
            let present = t.in_order();
            match op {
                0 => {
                    // rotate a random non-root node up
                    let x = present[a as usize % present.len()];
                    if t.parent(x).is_some() {
                        t.rotate_up(x, &mut ledger).unwrap();
                    }
                }
                1 => {
                    let u = present[a as usize % present.len()];
                    let v = present[b as usize % present.len()];
                    t.double_splay(u, v, &mut ledger).unwrap();
                }
                2 => {
                    next_id += 1;
                    t.insert_leaf(p(next_id)).unwrap();
                }
                _ => {
                    if present.len() > 1 {
                        let x = present[a as usize % present.len()];
                        t.remove(x).unwrap();
                    }
                }
            }
            prop_assert!(t.check().is_ok());
        }
    }

    #[test]
    fn overlay_lifecycle_keeps_all_trees_consistent(
        n in 2usize..24,
        k in 1usize..5,
        seed in any::<u64>(),
        ops in proptest::collection::vec((0u8..4, any::<u32>(), any::<u32>()), 1..25),
    ) {
        let mut o = Overlay::new_random(n, k, seed).unwrap();
        let mut next_id = n as u32;
        for (op, a, b) in ops {
            let peers = o.peers();
            match op {
                0 => {
                    let u = peers[a as usize % peers.len()];
                    let v = peers[b as usize % peers.len()];
                    o.serve_request(u, v, true).unwrap();
                }
                1 => {
                    next_id += 1;
                    o.join(p(next_id)).unwrap();
                }
                2 => {
                    if peers.len() > 1 {
                        o.leave(peers[a as usize % peers.len()]).unwrap();
                    }
                }
                _ => {
                    o.churn_step((a as usize) % (o.n() + 1)).unwrap();
                }
            }
            prop_assert!(o.validate().is_ok());
        }
        // peer degree in the union graph is at most 3k
        let g = o.union_graph();
        for v in o.peers() {
            prop_assert!(g.degree(v.0) <= 3 * k);
        }
    }

    #[test]
    fn static_runs_are_pure(n in 2usize..32, k in 1usize..4, seed in any::<u64>()) {
        let mut o1 = Overlay::new_random(n, k, seed).unwrap();
        let mut o2 = o1.clone();
        let mut requests = Vec::new();
        for i in 0..40u32 {
            let u = i % n as u32 + 1;
            let v = (i * 7 + 1) % n as u32 + 1;
            if u != v {
                requests.push((p(u), p(v)));
            }
        }
        let sigma = RequestSequence { requests };
        let opts = RunOptions { adjust: false, adjust_every: 1 };
        let l1 = o1.run_sequence(&sigma, opts).unwrap();
        let l2 = o2.run_sequence(&sigma, opts).unwrap();
        prop_assert_eq!(l1.records, l2.records);
        prop_assert_eq!(o1.snapshot(), o2.snapshot());
    }
}
