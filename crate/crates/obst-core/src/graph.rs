//! Undirected simple graphs over peer identifiers `1..=n`.
//!
//! This is the shared substrate for guest graphs (communication demand) and
//! for the union graph of an overlay. It also provides the breadth-first
//! search used as the independent distance oracle throughout the test suites.

use std::collections::VecDeque;

use crate::bst::PeerId;

/// Undirected simple graph on the vertex set `{1, ..., n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<u32>>, // indexed by id; neighbor lists kept sorted
    m: usize,
}

impl Graph {
    /// Empty graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            adj: vec![Vec::new(); n + 1],
            m: 0,
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut g = Graph::new(n);
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Inserts the undirected edge `{a, b}`. Self-loops and duplicates are
    /// ignored, keeping the graph simple.
    pub fn add_edge(&mut self, a: u32, b: u32) {
        assert!(
            a >= 1 && b >= 1 && a as usize <= self.n && b as usize <= self.n,
            "edge ({a}, {b}) outside vertex range 1..={}",
            self.n
        );
        if a == b || self.has_edge(a, b) {
            return;
        }
        let (ai, bi) = (a as usize, b as usize);
        let pos = self.adj[ai].binary_search(&b).unwrap_err();
        self.adj[ai].insert(pos, b);
        let pos = self.adj[bi].binary_search(&a).unwrap_err();
        self.adj[bi].insert(pos, a);
        self.m += 1;
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adj
            .get(a as usize)
            .map(|ns| ns.binary_search(&b).is_ok())
            .unwrap_or(false)
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    /// All edges as `(min, max)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.m);
        for a in 1..=self.n as u32 {
            for &b in self.neighbors(a) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// BFS distances from `src` over the vertices in `alive` (all vertices
    /// when `alive` is `None`). Unreachable vertices get `None`.
    pub fn bfs_distances(&self, src: u32, alive: Option<&[bool]>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.n + 1];
        let is_alive = |v: u32| alive.is_none_or(|a| a[v as usize]);
        if src as usize > self.n || !is_alive(src) {
            return dist;
        }
        dist[src as usize] = Some(0);
        let mut queue = VecDeque::new();
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize].unwrap();
            for &w in self.neighbors(v) {
                if is_alive(w) && dist[w as usize].is_none() {
                    dist[w as usize] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: u32, v: u32) -> Option<u32> {
        self.bfs_distances(u, None)[v as usize]
    }

    /// Connected components (vertex ids, ascending) among `alive` vertices.
    pub fn components(&self, alive: Option<&[bool]>) -> Vec<Vec<u32>> {
        let is_alive = |v: u32| alive.is_none_or(|a| a[v as usize]);
        let mut seen = vec![false; self.n + 1];
        let mut comps = Vec::new();
        for s in 1..=self.n as u32 {
            if seen[s as usize] || !is_alive(s) {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::new();
            seen[s as usize] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in self.neighbors(v) {
                    if is_alive(w) && !seen[w as usize] {
                        seen[w as usize] = true;
                        queue.push_back(w);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components(None).len() == 1
    }

    /// Vertices of the graph as peer ids.
    pub fn vertices(&self) -> impl Iterator<Item = PeerId> + '_ {
        (1..=self.n as u32).map(PeerId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_and_self_loops() {
        let mut g = Graph::new(3);
        g.add_edge(1, 2);
        g.add_edge(2, 1);
        g.add_edge(2, 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges(), vec![(1, 2)]);
    }

    #[test]
    fn bfs_on_path() {
        let g = Graph::from_edges(4, [(1, 2), (2, 3), (3, 4)]);
        assert_eq!(g.distance(1, 4), Some(3));
        assert_eq!(g.distance(2, 2), Some(0));
        assert!(g.is_connected());
    }

    #[test]
    fn components_respect_alive_mask() {
        let g = Graph::from_edges(4, [(1, 2), (2, 3), (3, 4)]);
        let mut alive = vec![true; 5];
        alive[2] = false;
        let comps = g.components(Some(&alive));
        assert_eq!(comps, vec![vec![1], vec![3, 4]]);
    }
}
