//! Self-adjusting peer-to-peer overlays built from multiple binary search trees.
//!
//! An `Overlay` connects a totally ordered peer set through `k` binary search
//! trees over the peer identifiers. BSTs give the overlay local greedy routing
//! (each node only needs its own id, its children's subtree id ranges, and its
//! parent), cheap joins and leaves, and a natural self-adjustment primitive:
//! when two peers communicate, they are splayed together in the tree where
//! they are currently closest, so that frequently communicating partners end
//! up topologically adjacent.
//!
//! The crate is organized as follows:
//!
//! * [`bst`] — a single binary search tree with subtree-range annotations,
//!   greedy routing, rotations, splays, leaf insertion and removal.
//! * [`overlay`] — the k-tree overlay, request serving (static or
//!   self-adjusting), joins/leaves/churn, and the per-request cost ledger.
//! * [`workload`] — guest-graph generators (swarm cliques, edge lists, random
//!   tree unions, the adversarial two-tree instance) and request-sequence
//!   generators (matchings and random walks).
//! * [`static_opt`] — empirical frequency measures and entropies, the
//!   weight-balanced near-optimal tree construction, exact optimal lookup
//!   trees, request partitioning across trees, entropy cost bounds, and
//!   brute-force oracles.
//! * [`metrics`] — routing-cost summaries and topology metrics (diameter,
//!   global min cut, failure robustness, union-graph distances).
//! * [`graph`] — the undirected simple graph shared by workloads and metrics.
//! * [`seeding`] — the deterministic seed fan-out scheme used everywhere.

pub mod bst;
pub mod graph;
pub mod metrics;
pub mod overlay;
pub mod seeding;
pub mod static_opt;
pub mod workload;

pub use bst::{Bst, BstError, PeerId, RotationLedger};
pub use graph::Graph;
pub use overlay::{CostLedger, CostRecord, Overlay, OverlayError, ServeMode};
pub use workload::{GuestGraph, RequestSequence};
