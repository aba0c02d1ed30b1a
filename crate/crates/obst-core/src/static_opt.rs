//! Static optimization: empirical measures and entropies of a request
//! sequence, near-optimal and exactly optimal tree constructions, request
//! partitioning across trees, entropy-based cost bounds, and the desk-scale
//! brute-force oracles that cross-check all of them.
//!
//! Conventions: all logarithms are base 2 (entropies in bits); weight vectors
//! are slices of length `n` where index `i` belongs to peer id `i + 1`; cost
//! bound checks follow the ledger convention of one hop plus the route
//! distance per request.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::bst::{Bst, BstError, PeerId};
use crate::overlay::{Overlay, OverlayError};
use crate::seeding;
use crate::workload::RequestSequence;
use rand::prelude::*;

/// `1 / (1 - log2(sqrt(5) - 1))`: the constant of the weight-balanced tree
/// cost bound (~1.4404).
pub fn mehlhorn_constant() -> f64 {
    1.0 / (1.0 - (5f64.sqrt() - 1.0).log2())
}

/// `log2(3)`: the denominator of the lookup lower bounds.
pub fn log2_3() -> f64 {
    3f64.log2()
}

#[derive(Error, Debug)]
pub enum StaticOptError {
    #[error("request sequence is empty")]
    EmptySequence,
    #[error("peer id {id} outside 1..={n}")]
    IdOutOfRange { id: PeerId, n: usize },
    #[error("distribution has negative mass")]
    NegativeMass,
    #[error("n = {n} exceeds the limit {limit} for this operation")]
    TooLarge { n: usize, limit: usize },
    #[error("input pairs are not a matching (shared or equal endpoints)")]
    NotAMatching,
    #[error("matching contains intersecting pairs")]
    IntersectingInput,
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Bst(#[from] BstError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
}

/// Exact frequency measures extracted from a request sequence: sources `x`,
/// destinations `y`, their average `z`, and ordered pair frequencies `f`.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasures {
    pub n: usize,
    pub m: usize,
    /// `x[i]` is the source frequency of peer `i + 1`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub f: BTreeMap<(u32, u32), f64>,
}

pub fn empirical_measures(
    sigma: &RequestSequence,
    n: usize,
) -> Result<EmpiricalMeasures, StaticOptError> {
    if sigma.is_empty() {
        return Err(StaticOptError::EmptySequence);
    }
    let m = sigma.len();
    let mut xc = vec![0u64; n];
    let mut yc = vec![0u64; n];
    let mut fc: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for &(u, v) in &sigma.requests {
        for id in [u, v] {
            if id.0 == 0 || id.0 as usize > n {
                return Err(StaticOptError::IdOutOfRange { id, n });
            }
        }
        xc[u.0 as usize - 1] += 1;
        yc[v.0 as usize - 1] += 1;
        *fc.entry((u.0, v.0)).or_insert(0) += 1;
    }
    let mf = m as f64;
    let x: Vec<f64> = xc.iter().map(|&c| c as f64 / mf).collect();
    let y: Vec<f64> = yc.iter().map(|&c| c as f64 / mf).collect();
    let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a + b) / 2.0).collect();
    let f = fc.into_iter().map(|(k, c)| (k, c as f64 / mf)).collect();
    Ok(EmpiricalMeasures { n, m, x, y, z, f })
}

/// Shannon entropy in bits, with `0 log 0 = 0`. Rejects negative mass.
pub fn entropy<I>(p: I) -> Result<f64, StaticOptError>
where
    I: IntoIterator<Item = f64>,
{
    let mut h = 0.0;
    for v in p {
        if v < 0.0 {
            return Err(StaticOptError::NegativeMass);
        }
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    Ok(h)
}

/// Total weighted depth `sum w_i * depth(i+1)` with depth in edges.
pub fn weighted_depth(t: &Bst, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if w == 0.0 {
                0.0
            } else {
                w * t.depth(PeerId(i as u32 + 1)).expect("key present") as f64
            }
        })
        .sum()
}

/// Weight-balanced tree over keys `1..=weights.len()`: each subtree root is
/// the key minimizing the absolute difference between the weight to its left
/// and to its right within the current interval (ties to the smallest id).
/// Its weighted depth is within `2 + H(weights) * mehlhorn_constant()`.
pub fn mehlhorn_tree(weights: &[f64]) -> Result<Bst, StaticOptError> {
    let n = weights.len();
    if n == 0 {
        return Err(StaticOptError::EmptySequence);
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(StaticOptError::NegativeMass);
    }
    // prefix[i] = total weight of keys 1..=i
    let mut prefix = vec![0.0; n + 1];
    for i in 1..=n {
        prefix[i] = prefix[i - 1] + weights[i - 1];
    }
    let mut t = Bst::new();
    // (lo, hi, parent) over key intervals, both inclusive, 1-based
    let mut stack: Vec<(usize, usize, Option<PeerId>)> = vec![(1, n, None)];
    let mut order: Vec<(PeerId, Option<PeerId>)> = Vec::with_capacity(n);
    while let Some((lo, hi, parent)) = stack.pop() {
        if lo > hi {
            continue;
        }
        let mut best = lo;
        let mut best_diff = f64::INFINITY;
        for r in lo..=hi {
            let left = prefix[r - 1] - prefix[lo - 1];
            let right = prefix[hi] - prefix[r];
            let diff = (left - right).abs();
            if diff < best_diff {
                best_diff = diff;
                best = r;
            }
        }
        let root = PeerId(best as u32);
        order.push((root, parent));
        stack.push((lo, best - 1, Some(root)));
        stack.push((best + 1, hi, Some(root)));
    }
    // Parents are emitted before children, so plain leaf insertion would be
    // quadratic on chains; wire the structure directly instead.
    let mut shape_left = vec![0u32; n + 1];
    let mut shape_right = vec![0u32; n + 1];
    let mut root_id = 0u32;
    for &(id, parent) in &order {
        match parent {
            None => root_id = id.0,
            Some(p) => {
                if id < p {
                    shape_left[p.0 as usize] = id.0;
                } else {
                    shape_right[p.0 as usize] = id.0;
                }
            }
        }
    }
    build_from_shape(&mut t, n, root_id, &shape_left, &shape_right);
    Ok(t)
}

/// Fills `t` from child arrays over the full contiguous key range `1..=n`.
fn build_from_shape(t: &mut Bst, n: usize, root: u32, left: &[u32], right: &[u32]) {
    *t = Bst::new();
    // Insert in BFS order: every insertion lands exactly at its intended
    // parent because all ancestors are already present.
    let mut queue = std::collections::VecDeque::new();
    if root != 0 {
        queue.push_back(root);
    }
    let mut bfs = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        bfs.push(v);
        if left[v as usize] != 0 {
            queue.push_back(left[v as usize]);
        }
        if right[v as usize] != 0 {
            queue.push_back(right[v as usize]);
        }
    }
    for v in bfs {
        t.insert_leaf(PeerId(v)).expect("distinct keys");
    }
}

/// Exact optimal lookup tree for `weights` by interval dynamic programming.
/// Returns the tree and its weighted depth (in edges). Limited to `n <= 512`.
pub fn optimal_lookup_bst(weights: &[f64]) -> Result<(Bst, f64), StaticOptError> {
    const LIMIT: usize = 512;
    let n = weights.len();
    if n == 0 {
        return Err(StaticOptError::EmptySequence);
    }
    if n > LIMIT {
        return Err(StaticOptError::TooLarge { n, limit: LIMIT });
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(StaticOptError::NegativeMass);
    }
    let mut prefix = vec![0.0; n + 1];
    for i in 1..=n {
        prefix[i] = prefix[i - 1] + weights[i - 1];
    }
    let w = |i: usize, j: usize| prefix[j] - prefix[i - 1];
    // cost[i][j]: minimal sum of w * depth within the subtree on keys i..=j,
    // depth counted from that subtree's root. Entry [i][i-1] = 0.
    let idx = |i: usize, j: usize| i * (n + 1) + j; // j in 0..=n, i in 1..=n+1
    let mut cost = vec![0.0f64; (n + 2) * (n + 1)];
    let mut root = vec![0usize; (n + 2) * (n + 1)];
    for len in 1..=n {
        for i in 1..=(n - len + 1) {
            let j = i + len - 1;
            let mut best = f64::INFINITY;
            let mut best_r = i;
            for r in i..=j {
                let left = if r > i { cost[idx(i, r - 1)] } else { 0.0 };
                let right = if r < j { cost[idx(r + 1, j)] } else { 0.0 };
                // all keys except the root gain one edge of depth
                let c = left + right + (w(i, j) - weights[r - 1]);
                if c < best {
                    best = c;
                    best_r = r;
                }
            }
            cost[idx(i, j)] = best;
            root[idx(i, j)] = best_r;
        }
    }
    let mut shape_left = vec![0u32; n + 1];
    let mut shape_right = vec![0u32; n + 1];
    let mut stack = vec![(1usize, n, 0u32, false)];
    let mut root_id = 0u32;
    while let Some((i, j, parent, is_left)) = stack.pop() {
        if i > j {
            continue;
        }
        let r = root[idx(i, j)] as u32;
        if parent == 0 {
            root_id = r;
        } else if is_left {
            shape_left[parent as usize] = r;
        } else {
            shape_right[parent as usize] = r;
        }
        if i < r as usize {
            stack.push((i, r as usize - 1, r, true));
        }
        if (r as usize) < j {
            stack.push((r as usize + 1, j, r, false));
        }
    }
    let mut t = Bst::new();
    build_from_shape(&mut t, n, root_id, &shape_left, &shape_right);
    Ok((t, cost[idx(1, n)]))
}

/// Child-array view of one enumerated tree over `1..=n` (0 = absent).
#[derive(Clone, Debug)]
pub struct TreeShape {
    pub root: usize,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl TreeShape {
    /// Depth (in edges) of every key; index 0 unused.
    pub fn depths(&self, n: usize) -> Vec<u32> {
        let mut d = vec![0u32; n + 1];
        let mut stack = vec![(self.root, 0u32)];
        while let Some((v, depth)) = stack.pop() {
            if v == 0 {
                continue;
            }
            d[v] = depth;
            stack.push((self.left[v], depth + 1));
            stack.push((self.right[v], depth + 1));
        }
        d
    }

    /// Hop distance between `u` and `v` via the search-path ancestor.
    pub fn distance(&self, depths: &[u32], u: usize, v: usize) -> u32 {
        let (lo, hi) = (u.min(v), u.max(v));
        let mut cur = self.root;
        loop {
            if hi < cur {
                cur = self.left[cur];
            } else if cur < lo {
                cur = self.right[cur];
            } else {
                return depths[u] + depths[v] - 2 * depths[cur];
            }
        }
    }

    pub fn to_bst(&self, n: usize) -> Bst {
        let mut t = Bst::new();
        let left: Vec<u32> = self.left.iter().map(|&v| v as u32).collect();
        let right: Vec<u32> = self.right.iter().map(|&v| v as u32).collect();
        build_from_shape(&mut t, n, self.root as u32, &left, &right);
        t
    }
}

/// Visits every BST over keys `1..=n` exactly once (Catalan(n) shapes).
/// Desk-scale oracle; intended for n <= 12.
pub fn for_each_bst<F: FnMut(&TreeShape)>(n: usize, mut f: F) {
    if n == 0 {
        return;
    }
    let mut shape = TreeShape {
        root: 0,
        left: vec![0; n + 1],
        right: vec![0; n + 1],
    };
    fn rec(lo: usize, hi: usize, shape: &mut TreeShape, cont: &mut dyn FnMut(&mut TreeShape, usize)) {
        if lo > hi {
            cont(shape, 0);
            return;
        }
        for r in lo..=hi {
            rec(lo, r - 1, shape, &mut |shape, lroot| {
                shape.left[r] = lroot;
                rec(r + 1, hi, shape, &mut |shape, rroot| {
                    shape.right[r] = rroot;
                    cont(shape, r);
                });
            });
        }
    }
    rec(1, n, &mut shape, &mut |shape, root| {
        shape.root = root;
        f(shape);
    });
}

/// A partition of the distinct request classes into `k` sets, with the
/// request mass `alpha[i]` of each set. Set indices are 0-based.
#[derive(Clone, Debug)]
pub struct Partition {
    pub k: usize,
    pub assignment: BTreeMap<(u32, u32), usize>,
    pub alphas: Vec<f64>,
}

impl Partition {
    pub fn h_alpha(&self) -> f64 {
        entropy(self.alphas.iter().copied()).expect("alphas are non-negative")
    }
}

/// Partitions the request classes of `sigma` into `k` sets so that the
/// entropy of the set masses is (approximately) maximal: exhaustive search
/// when the instance is small enough, otherwise greedy largest-first
/// assignment to the lightest set. Classes are distinct ordered pairs.
pub fn partition_requests(sigma: &RequestSequence, k: usize) -> Result<Partition, StaticOptError> {
    if k == 0 {
        return Err(StaticOptError::Infeasible("k must be at least 1".into()));
    }
    if sigma.is_empty() {
        return Err(StaticOptError::EmptySequence);
    }
    let mut counts: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for &(u, v) in &sigma.requests {
        *counts.entry((u.0, v.0)).or_insert(0) += 1;
    }
    let m = sigma.len() as f64;
    let mut classes: Vec<((u32, u32), f64)> = counts
        .into_iter()
        .map(|(c, n)| (c, n as f64 / m))
        .collect();
    // heaviest first; ties by class for determinism
    classes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let c = classes.len();
    let exhaustive_budget = (k as u128).checked_pow(c as u32).is_some_and(|v| v <= 2_000_000);
    let assign: Vec<usize> = if k == 1 {
        vec![0; c]
    } else if c <= 20 && exhaustive_budget {
        let mut best_h = -1.0;
        let mut best: Vec<usize> = vec![0; c];
        let mut cur = vec![0usize; c];
        loop {
            let mut alphas = vec![0.0; k];
            for (i, &(_, f)) in classes.iter().enumerate() {
                alphas[cur[i]] += f;
            }
            let h = entropy(alphas.iter().copied()).unwrap();
            if h > best_h {
                best_h = h;
                best = cur.clone();
            }
            // next assignment in base k
            let mut pos = 0;
            loop {
                if pos == c {
                    return Ok(finish_partition(k, &classes, &best));
                }
                cur[pos] += 1;
                if cur[pos] < k {
                    break;
                }
                cur[pos] = 0;
                pos += 1;
            }
        }
    } else {
        greedy_assign(&classes, k)
    };
    Ok(finish_partition(k, &classes, &assign))
}

/// Largest-first assignment to the currently lightest set.
fn greedy_assign(classes: &[((u32, u32), f64)], k: usize) -> Vec<usize> {
    let mut loads = vec![0.0f64; k];
    let mut out = Vec::with_capacity(classes.len());
    for &(_, f) in classes {
        let lightest = loads
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        loads[lightest] += f;
        out.push(lightest);
    }
    out
}

fn finish_partition(k: usize, classes: &[((u32, u32), f64)], assign: &[usize]) -> Partition {
    let mut alphas = vec![0.0; k];
    let mut assignment = BTreeMap::new();
    for (i, &(class, f)) in classes.iter().enumerate() {
        alphas[assign[i]] += f;
        assignment.insert(class, assign[i]);
    }
    Partition {
        k,
        assignment,
        alphas,
    }
}

/// The per-set node measure: like `z`, but restricted to the requests of one
/// partition set and renormalized. Empty sets fall back to uniform weights.
pub fn per_set_z(
    sigma: &RequestSequence,
    n: usize,
    partition: &Partition,
) -> Vec<Vec<f64>> {
    let k = partition.k;
    let mut counts = vec![vec![0u64; n]; k];
    let mut sizes = vec![0u64; k];
    for &(u, v) in &sigma.requests {
        let set = partition.assignment[&(u.0, v.0)];
        counts[set][u.0 as usize - 1] += 1;
        counts[set][v.0 as usize - 1] += 1;
        sizes[set] += 1;
    }
    (0..k)
        .map(|i| {
            if sizes[i] == 0 {
                vec![1.0 / n as f64; n]
            } else {
                let denom = 2.0 * sizes[i] as f64;
                counts[i].iter().map(|&c| c as f64 / denom).collect()
            }
        })
        .collect()
}

/// Builds a static overlay for `sigma`: partition the requests into `k`
/// sets, then give each set the weight-balanced tree of its node measure.
pub fn build_static_obst(
    sigma: &RequestSequence,
    n: usize,
    k: usize,
) -> Result<Overlay, StaticOptError> {
    let partition = partition_requests(sigma, k)?;
    build_static_obst_with(sigma, n, &partition)
}

/// Same, with a caller-supplied partition.
pub fn build_static_obst_with(
    sigma: &RequestSequence,
    n: usize,
    partition: &Partition,
) -> Result<Overlay, StaticOptError> {
    empirical_measures(sigma, n)?; // validates ids against n
    let trees = per_set_z(sigma, n, partition)
        .iter()
        .map(|z| mehlhorn_tree(z))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Overlay::from_trees(trees)?)
}

/// All entropy bounds for one instance, in hops (log base 2 throughout).
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// Lookup cost lower bound for one tree: `H(y) / log2 3`.
    pub lookup_lower_single: f64,
    /// Lookup cost upper bound of the balanced tree: `2 + H(y) * C`.
    pub lookup_upper_balanced: f64,
    /// Routing cost upper bound for one tree: `4 + 2 H(z) * C`.
    pub routing_upper_single: f64,
    /// Routing cost upper bound for k trees: `4 + (2 H(z) - 2 H(alpha)) * C`.
    pub routing_upper_multi: f64,
    /// Lookup cost lower bound for k trees: `(H(y) - log2 k) / log2 3`,
    /// clamped at zero.
    pub lookup_lower_multi: f64,
    /// True when the k-tree lookup bound was negative and clamped.
    pub lookup_lower_clamped: bool,
    pub h_x: f64,
    pub h_y: f64,
    pub h_z: f64,
    pub h_alpha: f64,
    pub mehlhorn_constant: f64,
}

pub fn bound_report(
    sigma: &RequestSequence,
    n: usize,
    k: usize,
    partition: Option<&Partition>,
) -> Result<BoundReport, StaticOptError> {
    let measures = empirical_measures(sigma, n)?;
    let owned;
    let part = match partition {
        Some(p) => p,
        None => {
            owned = partition_requests(sigma, k)?;
            &owned
        }
    };
    let c = mehlhorn_constant();
    let h_x = entropy(measures.x.iter().copied())?;
    let h_y = entropy(measures.y.iter().copied())?;
    let h_z = entropy(measures.z.iter().copied())?;
    let h_alpha = part.h_alpha();
    let raw_lower_multi = (h_y - (k as f64).log2()) / log2_3();
    Ok(BoundReport {
        lookup_lower_single: h_y / log2_3(),
        lookup_upper_balanced: 2.0 + h_y * c,
        routing_upper_single: 4.0 + 2.0 * h_z * c,
        routing_upper_multi: 4.0 + (2.0 * h_z - 2.0 * h_alpha) * c,
        lookup_lower_multi: raw_lower_multi.max(0.0),
        lookup_lower_clamped: raw_lower_multi < 0.0,
        h_x,
        h_y,
        h_z,
        h_alpha,
        mehlhorn_constant: c,
    })
}

/// Average lookup depth (in edges) of a lookup sequence served from the
/// root, taking the best tree per request when several are given.
pub fn lookup_cost(trees: &[Bst], lookups: &[PeerId]) -> Result<f64, StaticOptError> {
    if lookups.is_empty() {
        return Err(StaticOptError::EmptySequence);
    }
    if trees.is_empty() {
        return Err(StaticOptError::Infeasible("need at least one tree".into()));
    }
    let mut total = 0.0;
    for &id in lookups {
        let mut best = u32::MAX;
        for t in trees {
            best = best.min(t.depth(id)?);
        }
        total += best as f64;
    }
    Ok(total / lookups.len() as f64)
}

/// Exhaustive optimal single-tree routing: enumerates every BST over
/// `1..=n` and returns one minimizing the average request cost
/// (distance + 1). Limited to `n <= 12`.
pub fn brute_force_optimal_obst1(
    sigma: &RequestSequence,
    n: usize,
) -> Result<(Bst, f64), StaticOptError> {
    const LIMIT: usize = 12;
    if n > LIMIT {
        return Err(StaticOptError::TooLarge { n, limit: LIMIT });
    }
    let measures = empirical_measures(sigma, n)?;
    let classes: Vec<((usize, usize), f64)> = measures
        .f
        .iter()
        .map(|(&(u, v), &freq)| ((u as usize, v as usize), freq))
        .collect();
    let mut best_cost = f64::INFINITY;
    let mut best: Option<Bst> = None;
    for_each_bst(n, |shape| {
        let depths = shape.depths(n);
        let mut cost = 1.0;
        for &((u, v), freq) in &classes {
            cost += freq * shape.distance(&depths, u, v) as f64;
            if cost >= best_cost {
                break;
            }
        }
        if cost < best_cost {
            best_cost = cost;
            best = Some(shape.to_bst(n));
        }
    });
    Ok((best.expect("n >= 1"), best_cost))
}

/// Whether requests `(i, j)` and `(k, l)` interleave on the identifier line:
/// exactly one of `k`, `l` lies strictly between `i` and `j`.
pub fn intersects(a: (PeerId, PeerId), b: (PeerId, PeerId)) -> bool {
    let (lo, hi) = (a.0.min(a.1), a.0.max(a.1));
    let inside = |v: PeerId| lo < v && v < hi;
    inside(b.0) != inside(b.1)
}

fn check_matching(matching: &[(PeerId, PeerId)]) -> Result<(), StaticOptError> {
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in matching {
        if a == b || !seen.insert(a) || !seen.insert(b) {
            return Err(StaticOptError::NotAMatching);
        }
    }
    Ok(())
}

/// Size of the largest set of pairwise-intersecting requests in a matching.
/// Exact (branch and bound over the intersection graph) for up to 24 pairs,
/// greedy lower bound beyond.
pub fn max_mutually_intersecting(matching: &[(PeerId, PeerId)]) -> Result<usize, StaticOptError> {
    check_matching(matching)?;
    mutually_intersecting_bound(matching, None)
}

/// As above, but may stop early once `stop_at` is reached (the greedy path
/// only); used by the Monte Carlo driver.
fn mutually_intersecting_bound(
    matching: &[(PeerId, PeerId)],
    stop_at: Option<usize>,
) -> Result<usize, StaticOptError> {
    if matching.is_empty() {
        return Ok(0);
    }
    if matching.len() <= 24 {
        Ok(exact_max_intersecting(matching))
    } else {
        Ok(greedy_max_intersecting(matching, stop_at))
    }
}

/// Exact max clique over the intersection graph, vertices as bits.
fn exact_max_intersecting(matching: &[(PeerId, PeerId)]) -> usize {
    let n = matching.len();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in i + 1..n {
            if intersects(matching[i], matching[j]) {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    fn grow(adj: &[u32], cand: u32, size: usize, best: &mut usize) {
        if cand == 0 {
            *best = (*best).max(size);
            return;
        }
        if size + cand.count_ones() as usize <= *best {
            return;
        }
        let mut cand = cand;
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= !(1u32 << v);
            if size + 1 + cand.count_ones() as usize <= *best {
                break;
            }
            grow(adj, cand & adj[v], size + 1, best);
        }
    }
    let mut best = 1;
    grow(&adj, (1u32 << n).wrapping_sub(1), 0, &mut best);
    best
}

/// Greedy clique lower bound, grown from every start vertex; stops early
/// once `stop_at` is reached.
fn greedy_max_intersecting(matching: &[(PeerId, PeerId)], stop_at: Option<usize>) -> usize {
    let n = matching.len();
    let words = n.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; n];
    for i in 0..n {
        for j in i + 1..n {
            if intersects(matching[i], matching[j]) {
                rows[i][j / 64] |= 1 << (j % 64);
                rows[j][i / 64] |= 1 << (i % 64);
            }
        }
    }
    let mut best = 1;
    for start in 0..n {
        let mut cand = rows[start].clone();
        let mut size = 1;
        for j in 0..n {
            if cand[j / 64] >> (j % 64) & 1 == 1 {
                size += 1;
                for w in 0..words {
                    cand[w] &= rows[j][w];
                }
            }
        }
        best = best.max(size);
        if stop_at.is_some_and(|s| best >= s) {
            return best;
        }
    }
    best
}

/// Samples random perfect matchings on `1..=n` and reports the fraction
/// containing a mutually-intersecting set of at least `n / r` requests
/// (which rules out a perfect overlay of fewer trees). Requires
/// `r >= sqrt(n ln n)` and `r | n`.
pub fn matching_montecarlo(
    n: usize,
    r: usize,
    trials: usize,
    seed: u64,
) -> Result<f64, StaticOptError> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(StaticOptError::Infeasible(format!("n = {n} must be even")));
    }
    if r == 0 || !n.is_multiple_of(r) {
        return Err(StaticOptError::Infeasible(format!("r = {r} must divide n = {n}")));
    }
    if (r as f64) < (n as f64 * (n as f64).ln()).sqrt() {
        return Err(StaticOptError::Infeasible(format!(
            "r = {r} below sqrt(n ln n) = {:.1}",
            (n as f64 * (n as f64).ln()).sqrt()
        )));
    }
    if trials == 0 {
        return Err(StaticOptError::Infeasible("trials must be positive".into()));
    }
    let threshold = n / r;
    let mut hits = 0usize;
    for trial in 0..trials {
        let mut ids: Vec<u32> = (1..=n as u32).collect();
        ids.shuffle(&mut seeding::rng(seeding::derive_seed(seed, trial as u64)));
        let matching: Vec<(PeerId, PeerId)> = ids
            .chunks(2)
            .map(|c| (PeerId(c[0]), PeerId(c[1])))
            .collect();
        if mutually_intersecting_bound(&matching, Some(threshold))? >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}

/// Builds a single BST in which every pair of a non-intersecting matching is
/// adjacent, by inserting the pairs outermost-first and attaching each
/// partner directly below the other. Rejects intersecting input.
pub fn embed_nonintersecting_matching(
    matching: &[(PeerId, PeerId)],
) -> Result<Bst, StaticOptError> {
    check_matching(matching)?;
    for i in 0..matching.len() {
        for j in i + 1..matching.len() {
            if intersects(matching[i], matching[j]) {
                return Err(StaticOptError::IntersectingInput);
            }
        }
    }
    let mut pairs: Vec<(PeerId, PeerId)> = matching
        .iter()
        .map(|&(a, b)| (a.min(b), a.max(b)))
        .collect();
    pairs.sort_unstable();
    let mut t = Bst::new();
    for (a, b) in pairs {
        t.insert_leaf(a)?;
        t.insert_leaf(b)?;
        debug_assert_eq!(t.parent(b), Some(a), "partner must land below {a}");
    }
    for &(a, b) in matching {
        if t.distance(a, b)? != 1 {
            return Err(StaticOptError::Infeasible(format!(
                "construction failed to make ({a}, {b}) adjacent"
            )));
        }
    }
    Ok(t)
}
