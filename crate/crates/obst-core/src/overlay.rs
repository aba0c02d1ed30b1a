//! The k-tree overlay: request serving, adjustment, membership changes, and
//! the per-request cost ledger.
//!
//! An overlay holds `k` binary search trees over one and the same peer set;
//! its edge set is the union of the trees' edges. A request `(u, v)` is
//! served on the tree where the two peers are currently closest. In
//! adjusting mode the pair is then splayed together on that tree; the hop
//! distance is charged before the adjustment, and the rotations of the
//! adjustment are charged to the same request.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bst::{Bst, BstError, PeerId, RotationLedger};
use crate::graph::Graph;
use crate::seeding;
use crate::workload::RequestSequence;

#[derive(Error, Debug)]
pub enum OverlayError {
    #[error("overlay needs n >= 1 peers and k >= 1 trees")]
    EmptyOverlay,
    #[error("trees span different id sets")]
    MismatchedIdSets,
    #[error("request {index} failed: {source}")]
    RequestFailed { index: usize, source: BstError },
    #[error("churn rate {lambda} exceeds peer count {n}")]
    LambdaTooLarge { lambda: usize, n: usize },
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Bst(#[from] BstError),
}

/// Whether a run leaves the topology untouched or splays after each request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServeMode {
    Static,
    Adjusting,
}

/// Cost of one served request: hop distance (charged before any adjustment),
/// rotations performed for this request, and the serving tree (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostRecord {
    pub t: usize,
    pub distance: u32,
    pub rotations: u64,
    pub tree_used: usize,
}

/// Sequential record of one run; the average cost per request is
/// `(distance + 1 + rotations)` averaged over all records.
#[derive(Clone, Debug)]
pub struct CostLedger {
    pub mode: ServeMode,
    pub records: Vec<CostRecord>,
}

impl CostLedger {
    pub fn new(mode: ServeMode) -> Self {
        CostLedger {
            mode,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Average of `distance + 1 + rotations`; 0 for an empty ledger by convention.
    pub fn average_cost(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .records
            .iter()
            .map(|r| r.distance as f64 + 1.0 + r.rotations as f64)
            .sum();
        total / self.records.len() as f64
    }

    /// Average hop distance; 0 for an empty ledger.
    pub fn average_distance(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let total: f64 = self.records.iter().map(|r| r.distance as f64).sum();
        total / self.records.len() as f64
    }

    pub fn total_rotations(&self) -> u64 {
        self.records.iter().map(|r| r.rotations).sum()
    }

    /// Average distance over the last `fraction` of the run, for convergence
    /// measurements. Falls back to the whole run for tiny ledgers.
    pub fn tail_average_distance(&self, fraction: f64) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let keep = ((self.records.len() as f64 * fraction).ceil() as usize).max(1);
        let tail = &self.records[self.records.len() - keep..];
        tail.iter().map(|r| r.distance as f64).sum::<f64>() / tail.len() as f64
    }
}

/// Options for a request run.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub adjust: bool,
    /// Splay only on every j-th request (1 = every request).
    pub adjust_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            adjust: true,
            adjust_every: 1,
        }
    }
}

/// An overlay of `k` BSTs over the same peer set.
#[derive(Clone, Debug)]
pub struct Overlay {
    trees: Vec<Bst>,
    rng: ChaCha8Rng,
    clock: usize,
}

impl Overlay {
    /// `k` independently seeded random BSTs over ids `1..=n`. Tree `i` uses
    /// the seed substream `i`; churn sampling uses substream `k`.
    pub fn new_random(n: usize, k: usize, seed: u64) -> Result<Overlay, OverlayError> {
        if n == 0 || k == 0 {
            return Err(OverlayError::EmptyOverlay);
        }
        let trees = (0..k)
            .map(|i| Bst::random(n, seeding::derive_seed(seed, i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Overlay {
            trees,
            rng: seeding::rng(seeding::derive_seed(seed, k as u64)),
            clock: 0,
        })
    }

    /// Wraps existing trees (e.g. a statically optimized set). All trees
    /// must span the same id set; an overlay over zero peers is allowed and
    /// can be populated through [`join`](Overlay::join). Churn sampling is
    /// seeded with 0; use [`with_churn_seed`](Overlay::with_churn_seed) to
    /// override.
    pub fn from_trees(trees: Vec<Bst>) -> Result<Overlay, OverlayError> {
        if trees.is_empty() {
            return Err(OverlayError::EmptyOverlay);
        }
        let ids = trees[0].in_order();
        for t in &trees[1..] {
            if t.in_order() != ids {
                return Err(OverlayError::MismatchedIdSets);
            }
        }
        Ok(Overlay {
            trees,
            rng: seeding::rng(0),
            clock: 0,
        })
    }

    pub fn with_churn_seed(mut self, seed: u64) -> Overlay {
        self.rng = seeding::rng(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.trees[0].len()
    }

    pub fn k(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[Bst] {
        &self.trees
    }

    pub fn tree(&self, i: usize) -> &Bst {
        &self.trees[i]
    }

    pub fn peers(&self) -> Vec<PeerId> {
        self.trees[0].in_order()
    }

    pub fn contains(&self, id: PeerId) -> bool {
        self.trees[0].contains(id)
    }

    /// The tree where `u` and `v` are closest, with the distance there.
    /// Equal distances are broken towards the lowest tree index. The index
    /// is 0-based.
    pub fn closest_tree(&self, u: PeerId, v: PeerId) -> Result<(usize, u32), OverlayError> {
        let mut best: Option<(usize, u32)> = None;
        for (i, t) in self.trees.iter().enumerate() {
            let d = t.distance(u, v)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        Ok(best.expect("k >= 1"))
    }

    /// Serves one request: the distance is measured on the closest tree
    /// before any adjustment; with `adjust` the pair is then splayed
    /// together on that tree and the rotations are charged to this request.
    /// A self-request is served at distance 0 without adjustment.
    pub fn serve_request(
        &mut self,
        u: PeerId,
        v: PeerId,
        adjust: bool,
    ) -> Result<CostRecord, OverlayError> {
        let t = self.clock;
        self.clock += 1;
        if u == v {
            if !self.contains(u) {
                return Err(BstError::NotFound(u).into());
            }
            return Ok(CostRecord {
                t,
                distance: 0,
                rotations: 0,
                tree_used: 1,
            });
        }
        let (idx, distance) = self.closest_tree(u, v)?;
        let mut rotations = 0;
        if adjust {
            let mut ledger = RotationLedger::new();
            self.trees[idx].double_splay(u, v, &mut ledger)?;
            rotations = ledger.count;
        }
        Ok(CostRecord {
            t,
            distance,
            rotations,
            tree_used: idx + 1,
        })
    }

    /// Runs a whole request sequence, recording one cost record per request.
    /// The first failing request aborts with its index.
    pub fn run_sequence(
        &mut self,
        sigma: &RequestSequence,
        opts: RunOptions,
    ) -> Result<CostLedger, OverlayError> {
        let mode = if opts.adjust {
            ServeMode::Adjusting
        } else {
            ServeMode::Static
        };
        let every = opts.adjust_every.max(1);
        let mut ledger = CostLedger::new(mode);
        ledger.records.reserve(sigma.len());
        for (i, &(u, v)) in sigma.requests.iter().enumerate() {
            let adjust_now = opts.adjust && (i + 1) % every == 0;
            let rec = self
                .serve_request(u, v, adjust_now)
                .map_err(|e| match e {
                    OverlayError::Bst(source) => OverlayError::RequestFailed { index: i, source },
                    other => other,
                })?;
            ledger.records.push(rec);
        }
        Ok(ledger)
    }

    /// Adds a peer as a leaf to every tree.
    pub fn join(&mut self, id: PeerId) -> Result<(), OverlayError> {
        if self.contains(id) {
            return Err(BstError::Duplicate(id).into());
        }
        for t in &mut self.trees {
            t.insert_leaf(id)?;
        }
        Ok(())
    }

    /// Removes a peer from every tree.
    pub fn leave(&mut self, id: PeerId) -> Result<(), OverlayError> {
        if !self.contains(id) {
            return Err(BstError::NotFound(id).into());
        }
        for t in &mut self.trees {
            t.remove(id)?;
        }
        Ok(())
    }

    /// Churn: `lambda` uniformly random peers leave all trees and
    /// immediately rejoin as leaves, keeping the peer set (and hence the
    /// traffic-matrix dimension) fixed.
    pub fn churn_step(&mut self, lambda: usize) -> Result<(), OverlayError> {
        let n = self.n();
        if lambda > n {
            return Err(OverlayError::LambdaTooLarge { lambda, n });
        }
        if lambda == 0 {
            return Ok(());
        }
        let mut ids = self.peers();
        let (chosen, _) = ids.partial_shuffle(&mut self.rng, lambda);
        let chosen: Vec<PeerId> = chosen.to_vec();
        for id in chosen {
            self.leave(id)?;
            self.join(id)?;
        }
        Ok(())
    }

    /// The overlay graph: union of all tree edge sets, duplicates merged.
    pub fn union_graph(&self) -> Graph {
        let max_id = self
            .peers()
            .last()
            .map(|p| p.0 as usize)
            .unwrap_or(0);
        let mut g = Graph::new(max_id);
        for t in &self.trees {
            for (a, b) in t.edges() {
                g.add_edge(a.0, b.0);
            }
        }
        g
    }

    /// Runs every structural invariant: each tree is a valid annotated BST
    /// and all trees span the identical id set.
    pub fn validate(&self) -> Result<(), String> {
        let ids = self.trees[0].in_order();
        for (i, t) in self.trees.iter().enumerate() {
            t.check().map_err(|e| format!("tree {}: {e}", i + 1))?;
            if t.in_order() != ids {
                return Err(format!("tree {} spans a different id set than tree 1", i + 1));
            }
        }
        Ok(())
    }

    /// Snapshot format: header `n k`, then the `k` tree serializations in
    /// order (each `n` lines of `id left|- right|-`, pre-order).
    pub fn snapshot(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.k());
        for t in &self.trees {
            out.push_str(&t.serialize());
        }
        out
    }

    /// Parses and validates a snapshot produced by [`snapshot`](Overlay::snapshot).
    pub fn parse_snapshot(text: &str) -> Result<Overlay, OverlayError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| OverlayError::Snapshot("empty snapshot".into()))?;
        let mut toks = header.split_whitespace();
        let parse =
            |tok: Option<&str>| -> Result<usize, OverlayError> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    OverlayError::Snapshot(format!("bad header {header:?}, expected `n k`"))
                })
            };
        let n = parse(toks.next())?;
        let k = parse(toks.next())?;
        if n == 0 || k == 0 {
            return Err(OverlayError::EmptyOverlay);
        }
        let rest: Vec<&str> = lines.collect();
        if rest.len() != n * k {
            return Err(OverlayError::Snapshot(format!(
                "expected {} node lines, found {}",
                n * k,
                rest.len()
            )));
        }
        let mut trees = Vec::with_capacity(k);
        for i in 0..k {
            let block = rest[i * n..(i + 1) * n].join("\n");
            let t = Bst::parse(&block)
                .map_err(|e| OverlayError::Snapshot(format!("tree {}: {e}", i + 1)))?;
            if t.len() != n {
                return Err(OverlayError::Snapshot(format!(
                    "tree {} has {} nodes, expected {n}",
                    i + 1,
                    t.len()
                )));
            }
            trees.push(t);
        }
        Overlay::from_trees(trees)
    }
}
