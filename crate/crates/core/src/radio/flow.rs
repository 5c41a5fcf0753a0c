//! Dinic's algorithm for integer max-flow.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: u32,
}

/// Residual network with paired forward/backward arcs (arc `e ^ 1` is the reverse of `e`).
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(vertices: usize) -> Self {
        FlowNetwork {
            arcs: Vec::new(),
            adj: vec![Vec::new(); vertices],
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: u32) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0 });
    }

    fn levels(&self, source: usize, sink: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let arc = &self.arcs[e];
                if arc.cap > 0 && level[arc.to] == u32::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[sink] != u32::MAX).then_some(level)
    }

    // Iterative blocking-flow search; recursion depth would equal path length.
    fn augment(&mut self, source: usize, sink: usize, level: &[u32], next: &mut [usize]) -> u32 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = source;
        loop {
            if u == sink {
                let push = path.iter().map(|&e| self.arcs[e].cap).min().unwrap_or(0);
                for &e in &path {
                    self.arcs[e].cap -= push;
                    self.arcs[e ^ 1].cap += push;
                }
                return push;
            }
            let mut advanced = false;
            while next[u] < self.adj[u].len() {
                let e = self.adj[u][next[u]];
                let arc = &self.arcs[e];
                if arc.cap > 0 && level[arc.to] == level[u] + 1 {
                    path.push(e);
                    u = arc.to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                // Dead end: retreat and skip the arc that led here.
                let Some(e) = path.pop() else {
                    return 0;
                };
                u = self.arcs[e ^ 1].to;
                next[u] += 1;
            }
        }
    }

    /// Maximum flow value from `source` to `sink`. Consumes residual capacity.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> u64 {
        if source == sink {
            return 0;
        }
        let mut total = 0u64;
        while let Some(level) = self.levels(source, sink) {
            let mut next = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.augment(source, sink, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed as u64;
            }
        }
        total
    }
}
