//! Topology and cost metrics: average request cost, diameter, global
//! minimum edge cut, failure robustness, and union-graph distances.
//!
//! The failure model here is distinct from churn: removed peers simply
//! vanish together with their incident edges, without the leave-repair of
//! the overlay. Pair-connectivity fractions are normalized by the original
//! pair count, counting failed peers as disconnected, so a sweep's series
//! is monotone by construction.

use rand::seq::SliceRandom;
use serde::Serialize;
use thiserror::Error;

use crate::bst::PeerId;
use crate::graph::Graph;
use crate::overlay::{CostLedger, Overlay};
use crate::seeding;

#[derive(Error, Debug)]
pub enum MetricsError {
    #[error("ledger is empty")]
    EmptyLedger,
    #[error("graph is empty")]
    EmptyGraph,
    #[error("peer {0} is not in the overlay")]
    NotFound(PeerId),
    #[error("peers {0} and {1} are not connected")]
    Unreachable(PeerId, PeerId),
    #[error("removal fraction {0} outside [0, 1)")]
    BadFraction(f64),
}

/// Average request cost `(distance + 1 + rotations)` of a non-empty ledger.
pub fn avg_cost(ledger: &CostLedger) -> Result<f64, MetricsError> {
    if ledger.is_empty() {
        return Err(MetricsError::EmptyLedger);
    }
    Ok(ledger.average_cost())
}

/// Average hop distance of a non-empty ledger.
pub fn avg_distance(ledger: &CostLedger) -> Result<f64, MetricsError> {
    if ledger.is_empty() {
        return Err(MetricsError::EmptyLedger);
    }
    Ok(ledger.average_distance())
}

/// Exact diameter: maximum BFS eccentricity, taken per component and
/// maximized over components when the graph is disconnected.
pub fn diameter(g: &Graph) -> Result<usize, MetricsError> {
    if g.n() == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let mut best = 0usize;
    for v in 1..=g.n() as u32 {
        let ecc = g
            .bfs_distances(v, None)
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0);
        best = best.max(ecc as usize);
    }
    Ok(best)
}

/// Double-sweep lower bound on the diameter: BFS to the farthest node, then
/// BFS again from there. Cheap, and exact surprisingly often.
pub fn double_sweep_lower_bound(g: &Graph) -> Result<usize, MetricsError> {
    if g.n() == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let far = |src: u32| {
        let dist = g.bfs_distances(src, None);
        (1..=g.n() as u32)
            .filter_map(|v| dist[v as usize].map(|d| (d, v)))
            .max()
            .unwrap_or((0, src))
    };
    let (_, u) = far(1);
    let (d, _) = far(u);
    Ok(d as usize)
}

/// Global minimum edge cut on unit weights via the Stoer-Wagner contraction
/// procedure. Returns 0 for disconnected or single-vertex graphs.
pub fn min_edge_cut(g: &Graph) -> usize {
    let comps = g.components(None);
    if comps.len() != 1 || g.n() < 2 {
        return 0;
    }
    let n = g.n();
    // weight matrix over contracted super-vertices
    let mut w = vec![vec![0u64; n]; n];
    for (a, b) in g.edges() {
        w[a as usize - 1][b as usize - 1] = 1;
        w[b as usize - 1][a as usize - 1] = 1;
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    while active.len() > 1 {
        // maximum-adjacency search
        let mut added = vec![active[0]];
        let mut weight_to_set: Vec<u64> = active.iter().map(|&v| w[active[0]][v]).collect();
        let mut in_set = vec![false; active.len()];
        in_set[0] = true;
        let mut prev = active[0];
        let mut last = active[0];
        let mut cut_of_phase = 0;
        for _ in 1..active.len() {
            let mut best_i = None;
            for (i, &v) in active.iter().enumerate() {
                let _ = v;
                if !in_set[i]
                    && best_i.is_none_or(|b: usize| weight_to_set[i] > weight_to_set[b])
                {
                    best_i = Some(i);
                }
            }
            let bi = best_i.unwrap();
            in_set[bi] = true;
            prev = last;
            last = active[bi];
            cut_of_phase = weight_to_set[bi];
            added.push(last);
            for (i, &v) in active.iter().enumerate() {
                if !in_set[i] {
                    weight_to_set[i] += w[last][v];
                }
            }
        }
        best = best.min(cut_of_phase);
        // contract `last` into `prev`
        for &v in &active {
            if v != last && v != prev {
                w[prev][v] += w[last][v];
                w[v][prev] = w[prev][v];
            }
        }
        active.retain(|&v| v != last);
    }
    best as usize
}

/// One measurement point: topology metrics plus (when produced from a run)
/// the ledger's cost summary. Failure sweeps leave the cost fields at zero.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub removed: usize,
    pub n_alive: usize,
    pub avg_cost: f64,
    pub avg_distance: f64,
    pub diameter: usize,
    pub min_cut: usize,
    /// Largest connected component of the surviving union graph, as a
    /// fraction of the surviving peers.
    pub largest_cc_fraction: f64,
    /// Fraction of original peer pairs connected within at least one single
    /// surviving tree.
    pub pair_connectivity_tree: f64,
    /// Fraction of original peer pairs connected in the surviving union graph.
    pub pair_connectivity_graph: f64,
}

/// Full metrics bundle of an intact overlay, with the cost summary of the
/// run that produced it.
pub fn measure(o: &Overlay, ledger: Option<&CostLedger>) -> MetricsReport {
    let g = o.union_graph();
    MetricsReport {
        removed: 0,
        n_alive: o.n(),
        avg_cost: ledger.map_or(0.0, |l| l.average_cost()),
        avg_distance: ledger.map_or(0.0, |l| l.average_distance()),
        diameter: diameter(&g).unwrap_or(0),
        min_cut: min_edge_cut(&g),
        largest_cc_fraction: 1.0,
        pair_connectivity_tree: 1.0,
        pair_connectivity_graph: 1.0,
    }
}

/// Removes random peers cumulatively (crash failures, no repair) and
/// measures connectivity at each requested fraction. A pair counts as
/// tree-connected when some single tree still connects it, and
/// graph-connected when the union of all surviving edges does.
pub fn robustness_sweep(
    o: &Overlay,
    removal_fractions: &[f64],
    seed: u64,
) -> Result<Vec<MetricsReport>, MetricsError> {
    for &f in removal_fractions {
        if !(0.0..1.0).contains(&f) {
            return Err(MetricsError::BadFraction(f));
        }
    }
    let peers = o.peers();
    let n = peers.len();
    if n < 2 {
        return Err(MetricsError::EmptyGraph);
    }
    let total_pairs = (n * (n - 1) / 2) as f64;
    let mut order = peers.clone();
    order.shuffle(&mut seeding::rng(seed));
    let union = o.union_graph();
    let max_id = peers.last().map(|p| p.0 as usize).unwrap_or(0);

    let mut out = Vec::with_capacity(removal_fractions.len());
    for &f in removal_fractions {
        let removed = (f * n as f64).floor() as usize;
        let mut alive = vec![false; max_id + 1];
        for p in &peers {
            alive[p.0 as usize] = true;
        }
        for p in &order[..removed] {
            alive[p.0 as usize] = false;
        }
        let n_alive = n - removed;

        // per-tree component labels for surviving vertices
        let mut tree_comp: Vec<Vec<usize>> = Vec::with_capacity(o.k());
        for t in o.trees() {
            let tg = Graph::from_edges(
                max_id,
                t.edges().into_iter().map(|(a, b)| (a.0, b.0)),
            );
            let mut labels = vec![usize::MAX; max_id + 1];
            for (ci, comp) in tg.components(Some(&alive)).into_iter().enumerate() {
                for v in comp {
                    labels[v as usize] = ci;
                }
            }
            tree_comp.push(labels);
        }
        let union_comps = union.components(Some(&alive));
        let mut union_label = vec![usize::MAX; max_id + 1];
        let mut largest = 0usize;
        for (ci, comp) in union_comps.iter().enumerate() {
            largest = largest.max(comp.len());
            for &v in comp {
                union_label[v as usize] = ci;
            }
        }

        let alive_ids: Vec<u32> = peers
            .iter()
            .map(|p| p.0)
            .filter(|&v| alive[v as usize])
            .collect();
        let mut tree_pairs = 0u64;
        let mut graph_pairs = 0u64;
        for (i, &a) in alive_ids.iter().enumerate() {
            for &b in &alive_ids[i + 1..] {
                if union_label[a as usize] == union_label[b as usize] {
                    graph_pairs += 1;
                    // a pair in different union components is in different
                    // tree components too, so only check here
                    if tree_comp
                        .iter()
                        .any(|labels| labels[a as usize] == labels[b as usize])
                    {
                        tree_pairs += 1;
                    }
                }
            }
        }

        // surviving union graph metrics
        let survivor_graph = {
            let mut g = Graph::new(max_id);
            for (a, b) in union.edges() {
                if alive[a as usize] && alive[b as usize] {
                    g.add_edge(a, b);
                }
            }
            g
        };
        let diam = union_comps
            .iter()
            .flat_map(|comp| comp.first())
            .map(|&v| {
                survivor_graph
                    .bfs_distances(v, Some(&alive))
                    .iter()
                    .flatten()
                    .copied()
                    .max()
                    .unwrap_or(0) as usize
            })
            .max()
            .unwrap_or(0);

        out.push(MetricsReport {
            removed,
            n_alive,
            avg_cost: 0.0,
            avg_distance: 0.0,
            diameter: diam,
            min_cut: if union_comps.len() == 1 {
                min_edge_cut(&survivor_graph)
            } else {
                0
            },
            largest_cc_fraction: if n_alive == 0 {
                1.0
            } else {
                largest as f64 / n_alive as f64
            },
            pair_connectivity_tree: tree_pairs as f64 / total_pairs,
            pair_connectivity_graph: graph_pairs as f64 / total_pairs,
        });
    }
    Ok(out)
}

/// Shortest-path distance when routes may cross different trees: BFS on the
/// union graph.
pub fn union_distance(o: &Overlay, u: PeerId, v: PeerId) -> Result<u32, MetricsError> {
    if !o.contains(u) {
        return Err(MetricsError::NotFound(u));
    }
    if !o.contains(v) {
        return Err(MetricsError::NotFound(v));
    }
    o.union_graph()
        .distance(u.0, v.0)
        .ok_or(MetricsError::Unreachable(u, v))
}
