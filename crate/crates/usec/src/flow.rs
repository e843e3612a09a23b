//! Exact max-flow (Dinic) over arbitrary-precision integer capacities.
//!
//! Capacities arrive pre-scaled to integers by the caller, so feasibility
//! decisions are exact. Augmentation visits edges in insertion order, which
//! keeps extracted flows deterministic.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::Zero;

pub(crate) struct FlowNetwork {
    // edges[i] and edges[i ^ 1] are a forward/reverse pair; `capacity` holds
    // the residual.
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

struct Edge {
    to: usize,
    capacity: BigInt,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Adds a directed edge and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, capacity: BigInt) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, capacity });
        self.edges.push(Edge {
            to: from,
            capacity: BigInt::zero(),
        });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    /// Flow pushed through a forward edge (the reverse edge's residual).
    pub fn flow_on(&self, edge: usize) -> &BigInt {
        &self.edges[edge ^ 1].capacity
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> BigInt {
        let mut total = BigInt::zero();
        let mut level = vec![-1i32; self.nodes()];
        loop {
            if !self.bfs(source, sink, &mut level) {
                return total;
            }
            let mut next_edge = vec![0usize; self.nodes()];
            loop {
                let pushed = self.dfs(source, sink, None, &level, &mut next_edge);
                if pushed.is_zero() {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// Nodes reachable from `source` in the residual graph; run after
    /// `max_flow` to read off a minimum cut.
    pub fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        let mut queue = VecDeque::from([source]);
        seen[source] = true;
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let edge = &self.edges[e];
                if !edge.capacity.is_zero() && !seen[edge.to] {
                    seen[edge.to] = true;
                    queue.push_back(edge.to);
                }
            }
        }
        seen
    }

    fn bfs(&self, source: usize, sink: usize, level: &mut [i32]) -> bool {
        level.fill(-1);
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let edge = &self.edges[e];
                if !edge.capacity.is_zero() && level[edge.to] < 0 {
                    level[edge.to] = level[u] + 1;
                    queue.push_back(edge.to);
                }
            }
        }
        level[sink] >= 0
    }

    fn dfs(
        &mut self,
        u: usize,
        sink: usize,
        limit: Option<&BigInt>,
        level: &[i32],
        next_edge: &mut [usize],
    ) -> BigInt {
        if u == sink {
            // The path bottleneck; `None` only occurs at the source.
            return limit.cloned().unwrap_or_else(BigInt::zero);
        }
        while next_edge[u] < self.adjacency[u].len() {
            let e = self.adjacency[u][next_edge[u]];
            let (to, residual) = {
                let edge = &self.edges[e];
                (edge.to, edge.capacity.clone())
            };
            if !residual.is_zero() && level[to] == level[u] + 1 {
                let bottleneck = match limit {
                    Some(l) if *l < residual => l.clone(),
                    _ => residual,
                };
                let pushed = self.dfs(to, sink, Some(&bottleneck), level, next_edge);
                if !pushed.is_zero() {
                    self.edges[e].capacity -= &pushed;
                    self.edges[e ^ 1].capacity += &pushed;
                    return pushed;
                }
            }
            next_edge[u] += 1;
        }
        BigInt::zero()
    }
}
