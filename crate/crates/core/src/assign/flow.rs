//! Integral maximum flow (Dinic) and the configuration/resource networks built
//! on top of it.

use std::collections::VecDeque;

use serde::Serialize;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
}

/// Residual graph with integral capacities.
#[derive(Debug, Clone)]
pub struct Dinic {
    graph: Vec<Vec<Arc>>,
    /// (tail, position in graph[tail], original capacity) per added arc.
    arcs: Vec<(usize, usize, i64)>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    pub fn new(nodes: usize) -> Self {
        Dinic {
            graph: vec![Vec::new(); nodes],
            arcs: Vec::new(),
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    /// Adds a directed arc and returns its id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) -> usize {
        assert!(cap >= 0, "negative capacity");
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Arc { to, cap, rev: bwd });
        self.graph[to].push(Arc { to: from, cap: 0, rev: fwd });
        self.arcs.push((from, fwd, cap));
        self.arcs.len() - 1
    }

    /// Flow currently routed through arc `id`.
    pub fn flow_on(&self, id: usize) -> i64 {
        let (from, pos, cap) = self.arcs[id];
        cap - self.graph[from][pos].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = VecDeque::new();
        self.level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for a in &self.graph[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: i64) -> i64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap, rev) = {
                let a = &self.graph[v][i];
                (a.to, a.cap, a.rev)
            };
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0 {
                    self.graph[v][i].cap -= d;
                    self.graph[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    /// Pushes a maximum flow from `s` to `t` and returns its value.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Source side of a minimum cut: nodes reachable from `s` in the residual
    /// graph. Valid after `max_flow`.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for a in &self.graph[v] {
                if a.cap > 0 && !seen[a.to] {
                    seen[a.to] = true;
                    stack.push(a.to);
                }
            }
        }
        seen
    }
}

/// Network `N(F, R', alpha, gamma)`: source -> configuration (capacity
/// `alpha(C)`), configuration -> resource (capacity 1, for resources of `C`
/// inside `R'`), resource -> sink (capacity `gamma`).
#[derive(Debug, Clone, Serialize)]
pub struct FlowNetwork {
    /// Configuration indices of `F`.
    pub family: Vec<usize>,
    /// Per member of `family`, the resources of `C ∩ R'`.
    pub adjacency: Vec<Vec<usize>>,
    /// Per member of `family`, the source-arc capacity.
    pub alpha: Vec<u64>,
    pub gamma: u64,
}

/// Outcome of a max-flow computation on a [`FlowNetwork`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlowResult {
    pub value: u64,
    /// Per family member, the resources receiving one unit of its flow.
    pub routed: Vec<Vec<usize>>,
    /// Family positions on the source side of the minimum cut.
    pub cut_configs: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(family: Vec<usize>, adjacency: Vec<Vec<usize>>, alpha: Vec<u64>, gamma: u64) -> Self {
        assert_eq!(family.len(), adjacency.len());
        assert_eq!(family.len(), alpha.len());
        FlowNetwork { family, adjacency, alpha, gamma }
    }

    /// Restricts the network to the given family positions.
    pub fn restrict(&self, positions: &[usize]) -> FlowNetwork {
        FlowNetwork {
            family: positions.iter().map(|&p| self.family[p]).collect(),
            adjacency: positions.iter().map(|&p| self.adjacency[p].clone()).collect(),
            alpha: positions.iter().map(|&p| self.alpha[p]).collect(),
            gamma: self.gamma,
        }
    }

    pub fn demand(&self) -> u64 {
        self.alpha.iter().sum()
    }

    pub fn max_flow(&self) -> FlowResult {
        let mut resources: Vec<usize> = self.adjacency.iter().flatten().copied().collect();
        resources.sort_unstable();
        resources.dedup();
        let k = self.family.len();
        let source = 0;
        let sink = 1;
        let cfg_node = |i: usize| 2 + i;
        let res_node = |r: usize| 2 + k + resources.binary_search(&r).expect("known resource");
        let mut g = Dinic::new(2 + k + resources.len());
        for (i, &a) in self.alpha.iter().enumerate() {
            g.add_arc(source, cfg_node(i), a as i64);
        }
        let mut unit_arcs = Vec::with_capacity(k);
        for (i, adj) in self.adjacency.iter().enumerate() {
            unit_arcs.push(
                adj.iter()
                    .map(|&r| (r, g.add_arc(cfg_node(i), res_node(r), 1)))
                    .collect::<Vec<_>>(),
            );
        }
        for &r in &resources {
            g.add_arc(res_node(r), sink, self.gamma as i64);
        }
        let value = g.max_flow(source, sink) as u64;
        let routed = unit_arcs
            .iter()
            .map(|arcs| arcs.iter().filter(|(_, id)| g.flow_on(*id) > 0).map(|(r, _)| *r).collect())
            .collect();
        let side = g.source_side(source);
        let cut_configs = (0..k).filter(|&i| side[cfg_node(i)]).collect();
        FlowResult { value, routed, cut_configs }
    }
}
