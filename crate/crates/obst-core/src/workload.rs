//! Guest graphs (communication demand) and request-sequence generators.
//!
//! Guest graphs: swarm-clique connectivity with preferential attachment,
//! edge-list files (for real social graphs), unions of random BSTs, and the
//! adversarial two-tree instance whose demand forces logarithmic cost on any
//! single tree but constant cost on two.
//!
//! Sequences: repeated random maximal matchings and random walks with an
//! optional repeat probability for temporal locality. Every generated
//! request is an edge of the guest graph, and every generator is a pure
//! function of its inputs and seed.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use thiserror::Error;

use crate::bst::{Bst, BstError, PeerId};
use crate::graph::Graph;
use crate::seeding;

/// The communication pattern: who talks to whom.
pub type GuestGraph = Graph;

#[derive(Error, Debug)]
pub enum WorkloadError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph has no edges")]
    Edgeless,
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Bst(#[from] BstError),
}

/// An ordered stream of communication requests (source, destination).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RequestSequence {
    pub requests: Vec<(PeerId, PeerId)>,
}

impl RequestSequence {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// CSV with a `t,src,dst` header, one row per request.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,src,dst\n");
        for (t, (u, v)) in self.requests.iter().enumerate() {
            out.push_str(&format!("{t},{u},{v}\n"));
        }
        out
    }

    /// Parses the [`to_csv`](RequestSequence::to_csv) format; commas or
    /// whitespace both separate fields, a header row is skipped.
    pub fn parse_csv(text: &str) -> Result<RequestSequence, WorkloadError> {
        let mut requests = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            if i == 0 && toks.iter().any(|t| t.parse::<u64>().is_err()) {
                continue; // header
            }
            if toks.len() != 3 {
                return Err(WorkloadError::Parse {
                    line: i + 1,
                    msg: format!("expected `t src dst`, got {raw:?}"),
                });
            }
            let num = |tok: &str| -> Result<u32, WorkloadError> {
                tok.parse().map_err(|_| WorkloadError::Parse {
                    line: i + 1,
                    msg: format!("bad integer {tok:?}"),
                })
            };
            let (src, dst) = (num(toks[1])?, num(toks[2])?);
            if src == 0 || dst == 0 {
                return Err(WorkloadError::Parse {
                    line: i + 1,
                    msg: "peer ids are positive".into(),
                });
            }
            if src == dst {
                return Err(WorkloadError::Parse {
                    line: i + 1,
                    msg: format!("self-request ({src}, {dst})"),
                });
            }
            requests.push((PeerId(src), PeerId(dst)));
        }
        Ok(RequestSequence { requests })
    }
}

/// Swarm-based connectivity: `n` peers arrive in random order and each joins
/// `swarms_per_peer` swarms (capacity `swarm_size`), the first uniformly at
/// random and later ones with probability proportional to
/// `1 + (neighbors already in that swarm)`. Each swarm is a clique; the
/// guest graph is the union of the cliques.
pub fn gen_bt(
    n: usize,
    swarm_size: usize,
    swarms_per_peer: usize,
    seed: u64,
) -> Result<GuestGraph, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::Infeasible("n must be positive".into()));
    }
    if swarm_size < 2 {
        return Err(WorkloadError::Infeasible("swarm_size must be at least 2".into()));
    }
    if swarms_per_peer == 0 {
        return Err(WorkloadError::Infeasible("swarms_per_peer must be at least 1".into()));
    }
    let num_swarms = (n * swarms_per_peer).div_ceil(swarm_size).max(1);
    if swarms_per_peer > num_swarms {
        return Err(WorkloadError::Infeasible(format!(
            "cannot join {swarms_per_peer} distinct swarms, only {num_swarms} exist"
        )));
    }
    let mut rng = seeding::rng(seed);
    let mut order: Vec<u32> = (1..=n as u32).collect();
    order.shuffle(&mut rng);

    let mut members: Vec<Vec<u32>> = vec![Vec::new(); num_swarms];
    let mut joined: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut neighbor = vec![vec![false; n + 1]; n + 1];

    for &peer in &order {
        for round in 0..swarms_per_peer {
            let open: Vec<usize> = (0..num_swarms)
                .filter(|&s| !joined[peer as usize].contains(&s) && members[s].len() < swarm_size)
                .collect();
            // Soft capacity: if everything eligible is full, overflow the
            // least-loaded swarm instead of deadlocking near the end.
            let candidates = if open.is_empty() {
                let mut rest: Vec<usize> = (0..num_swarms)
                    .filter(|&s| !joined[peer as usize].contains(&s))
                    .collect();
                rest.sort_by_key(|&s| members[s].len());
                rest.truncate(1);
                rest
            } else {
                open
            };
            if candidates.is_empty() {
                break; // member of every swarm already
            }
            let chosen = if round == 0 {
                *candidates.choose(&mut rng).unwrap()
            } else {
                let weights: Vec<f64> = candidates
                    .iter()
                    .map(|&s| {
                        let friends = members[s]
                            .iter()
                            .filter(|&&m| neighbor[peer as usize][m as usize])
                            .count();
                        1.0 + friends as f64
                    })
                    .collect();
                let dist = WeightedIndex::new(&weights).expect("positive weights");
                candidates[dist.sample(&mut rng)]
            };
            for &m in &members[chosen] {
                neighbor[peer as usize][m as usize] = true;
                neighbor[m as usize][peer as usize] = true;
            }
            members[chosen].push(peer);
            joined[peer as usize].push(chosen);
        }
    }

    let mut g = Graph::new(n);
    for swarm in &members {
        for (i, &a) in swarm.iter().enumerate() {
            for &b in &swarm[i + 1..] {
                g.add_edge(a, b);
            }
        }
    }
    Ok(g)
}

/// Parses a whitespace-separated edge list (`a b` per line, `#` comments).
/// 0-indexed inputs are shifted to 1-indexed with a warning. Returns the
/// graph and any warnings.
pub fn load_edge_list(text: &str) -> Result<(GuestGraph, Vec<String>), WorkloadError> {
    let mut raw: Vec<(u32, u32)> = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(WorkloadError::Parse {
                line: i + 1,
                msg: format!("expected two ids, got {line:?}"),
            });
        }
        let num = |tok: &str| -> Result<u32, WorkloadError> {
            tok.parse().map_err(|_| WorkloadError::Parse {
                line: i + 1,
                msg: format!("bad integer {tok:?}"),
            })
        };
        raw.push((num(toks[0])?, num(toks[1])?));
    }
    if raw.iter().any(|&(a, b)| a == 0 || b == 0) {
        warnings.push("0-indexed input detected; all ids shifted by +1".into());
        for e in &mut raw {
            e.0 += 1;
            e.1 += 1;
        }
    }
    let n = raw.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) as usize;
    let mut g = Graph::new(n);
    let mut loops = 0;
    for (a, b) in raw {
        if a == b {
            loops += 1;
        } else {
            g.add_edge(a, b);
        }
    }
    if loops > 0 {
        warnings.push(format!("dropped {loops} self-loops"));
    }
    Ok((g, warnings))
}

/// Renumbers ids `1..` by breadth-first search from the peer with the highest
/// degree (ties and neighbor exploration order randomized under `seed`).
/// A disconnected input is reduced to its largest component with a warning.
pub fn relabel_bfs(g: &GuestGraph, seed: u64) -> (GuestGraph, Vec<String>) {
    let mut warnings = Vec::new();
    if g.n() == 0 {
        return (g.clone(), warnings);
    }
    let mut comps = g.components(None);
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let comp = &comps[0];
    if comps.len() > 1 {
        warnings.push(format!(
            "input is disconnected ({} components); relabeling the largest ({} nodes)",
            comps.len(),
            comp.len()
        ));
    }
    let mut rng = seeding::rng(seed);
    let max_deg = comp.iter().map(|&v| g.degree(v)).max().unwrap();
    let starts: Vec<u32> = comp
        .iter()
        .copied()
        .filter(|&v| g.degree(v) == max_deg)
        .collect();
    let start = *starts.choose(&mut rng).unwrap();

    let mut new_id = vec![0u32; g.n() + 1];
    let mut order = Vec::with_capacity(comp.len());
    let mut queue = std::collections::VecDeque::new();
    new_id[start as usize] = 1;
    order.push(start);
    queue.push_back(start);
    let mut next = 2u32;
    while let Some(v) = queue.pop_front() {
        let mut ns: Vec<u32> = g.neighbors(v).to_vec();
        ns.shuffle(&mut rng);
        for w in ns {
            if new_id[w as usize] == 0 {
                new_id[w as usize] = next;
                next += 1;
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    let mut out = Graph::new(comp.len());
    for &v in &order {
        for &w in g.neighbors(v) {
            if new_id[w as usize] != 0 {
                out.add_edge(new_id[v as usize], new_id[w as usize]);
            }
        }
    }
    (out, warnings)
}

/// The subgraph induced by the `n` smallest identifiers.
pub fn induced_prefix(g: &GuestGraph, n: usize) -> Result<GuestGraph, WorkloadError> {
    if n == 0 || n > g.n() {
        return Err(WorkloadError::Infeasible(format!(
            "prefix size {n} outside 1..={}",
            g.n()
        )));
    }
    let mut out = Graph::new(n);
    for (a, b) in g.edges() {
        if a as usize <= n && b as usize <= n {
            out.add_edge(a, b);
        }
    }
    Ok(out)
}

/// Union of the edge sets of `k` independent random BSTs over `1..=n`. Tree
/// `i` uses seed substream `i`, matching
/// [`Overlay::new_random`](crate::overlay::Overlay::new_random), so an
/// overlay initialized with the same seed embeds this guest graph perfectly.
pub fn gen_rnd_obst(n: usize, k: usize, seed: u64) -> Result<GuestGraph, WorkloadError> {
    if n == 0 || k == 0 {
        return Err(WorkloadError::Infeasible("n and k must be positive".into()));
    }
    let mut g = Graph::new(n);
    for i in 0..k {
        let t = Bst::random(n, seeding::derive_seed(seed, i as u64))?;
        for (a, b) in t.edges() {
            g.add_edge(a.0, b.0);
        }
    }
    Ok(g)
}

/// The explicit two-tree instance whose requests any single BST must serve at
/// logarithmic cost: tree 2 is laminated over the whole identifier space and
/// tree 1 consists of two laminated halves.
#[derive(Clone, Debug)]
pub struct Bad2 {
    pub guest: GuestGraph,
    pub trees: [Bst; 2],
    pub e1: Vec<(u32, u32)>,
    pub e2: Vec<(u32, u32)>,
}

/// Builds the [`Bad2`] instance for `n` divisible by 4.
pub fn gen_bad2(n: usize) -> Result<Bad2, WorkloadError> {
    if n < 4 || !n.is_multiple_of(4) {
        return Err(WorkloadError::Infeasible(format!(
            "n must be a positive multiple of 4, got {n}"
        )));
    }
    let n_i = n as i64;
    let h = n_i / 2;
    let q = n_i / 4;
    let mut e1: Vec<(u32, u32)> = Vec::with_capacity(n - 1);
    for i in 1..=q {
        e1.push((i as u32, (h - i + 1) as u32));
    }
    for i in 0..=(q - 2) {
        e1.push(((h - i) as u32, (i + 2) as u32));
    }
    for i in 0..=(q - 1) {
        e1.push(((h + i) as u32, (n_i - i) as u32));
    }
    for i in 0..=(q - 1) {
        e1.push(((n_i - i) as u32, (h + 1 + i) as u32));
    }
    let mut e2: Vec<(u32, u32)> = Vec::with_capacity(n - 1);
    for i in 1..=h {
        e2.push((i as u32, (n_i - i + 1) as u32));
    }
    for i in 0..=(h - 2) {
        e2.push(((n_i - i) as u32, (i + 2) as u32));
    }
    let t1 = Bst::from_edges(n, &e1)
        .map_err(|e| WorkloadError::Infeasible(format!("tree 1: {e}")))?;
    let t2 = Bst::from_edges(n, &e2)
        .map_err(|e| WorkloadError::Infeasible(format!("tree 2: {e}")))?;
    let mut guest = Graph::new(n);
    for &(a, b) in e1.iter().chain(e2.iter()) {
        guest.add_edge(a, b);
    }
    Ok(Bad2 {
        guest,
        trees: [t1, t2],
        e1,
        e2,
    })
}

/// Requests from repeated random maximal matchings: edges are shuffled and
/// greedily matched; each matched edge is emitted once (random orientation);
/// when a matching is exhausted the next one is generated.
pub fn seq_match(g: &GuestGraph, m: usize, seed: u64) -> Result<RequestSequence, WorkloadError> {
    let edges = g.edges();
    if edges.is_empty() {
        return Err(WorkloadError::Edgeless);
    }
    let mut rng = seeding::rng(seed);
    let mut requests = Vec::with_capacity(m);
    let mut pool = edges;
    while requests.len() < m {
        pool.shuffle(&mut rng);
        let mut used = vec![false; g.n() + 1];
        for &(a, b) in &pool {
            if requests.len() >= m {
                break;
            }
            if used[a as usize] || used[b as usize] {
                continue;
            }
            used[a as usize] = true;
            used[b as usize] = true;
            let (src, dst) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            requests.push((PeerId(src), PeerId(dst)));
        }
    }
    Ok(RequestSequence { requests })
}

/// Requests from a random walk. Each emitted request is repeated with
/// probability `p_repeat`; otherwise the walk advances to a uniform random
/// neighbor `w` of the current node `v` and emits `(v, w)`. `p_repeat = 0`
/// is the memoryless walk, `p_repeat = 0.5` adds temporal locality.
pub fn seq_rw(
    g: &GuestGraph,
    m: usize,
    p_repeat: f64,
    seed: u64,
) -> Result<RequestSequence, WorkloadError> {
    if !(0.0..=1.0).contains(&p_repeat) {
        return Err(WorkloadError::Infeasible(format!(
            "p_repeat {p_repeat} outside [0, 1]"
        )));
    }
    let starts: Vec<u32> = (1..=g.n() as u32).filter(|&v| g.degree(v) > 0).collect();
    if starts.is_empty() {
        return Err(WorkloadError::Edgeless);
    }
    let mut rng = seeding::rng(seed);
    let mut current = *starts.choose(&mut rng).unwrap();
    let mut prev: Option<(u32, u32)> = None;
    let mut requests = Vec::with_capacity(m);
    while requests.len() < m {
        if let Some(pair) = prev {
            if rng.gen_bool(p_repeat) {
                requests.push((PeerId(pair.0), PeerId(pair.1)));
                continue;
            }
        }
        let w = *g.neighbors(current).choose(&mut rng).expect("walk stays on edges");
        requests.push((PeerId(current), PeerId(w)));
        prev = Some((current, w));
        current = w;
    }
    Ok(RequestSequence { requests })
}

/// Requests drawn uniformly from an explicit edge multiset, with random
/// orientation. This realizes a demand that is uniform over all
/// source-destination pairs of a generating structure (used for the
/// [`Bad2`] scenario, whose two edge sets are sampled as one multiset).
pub fn seq_uniform_edges(
    edge_multiset: &[(u32, u32)],
    m: usize,
    seed: u64,
) -> Result<RequestSequence, WorkloadError> {
    if edge_multiset.is_empty() {
        return Err(WorkloadError::Edgeless);
    }
    let mut rng = seeding::rng(seed);
    let mut requests = Vec::with_capacity(m);
    for _ in 0..m {
        let &(a, b) = edge_multiset.choose(&mut rng).unwrap();
        let (src, dst) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        requests.push((PeerId(src), PeerId(dst)));
    }
    Ok(RequestSequence { requests })
}
