//! Dense max-flow with per-source priority, used to split tied supply.

use std::collections::VecDeque;

pub(crate) struct FlowNet {
    cap: Vec<Vec<f64>>,
    flow: Vec<Vec<f64>>,
    eps: f64,
}

impl FlowNet {
    pub fn new(nodes: usize, eps: f64) -> Self {
        Self { cap: vec![vec![0.0; nodes]; nodes], flow: vec![vec![0.0; nodes]; nodes], eps }
    }

    pub fn set_cap(&mut self, u: usize, v: usize, c: f64) {
        self.cap[u][v] = c;
    }

    pub fn flow(&self, u: usize, v: usize) -> f64 {
        self.flow[u][v]
    }

    fn residual(&self, u: usize, v: usize) -> f64 {
        self.cap[u][v] - self.flow[u][v] + self.flow[v][u]
    }

    fn push(&mut self, u: usize, v: usize, amount: f64) {
        // Cancel reverse flow first so that flows stay non-negative.
        let back = self.flow[v][u].min(amount);
        self.flow[v][u] -= back;
        self.flow[u][v] += amount - back;
    }

    /// Augment along shortest paths that leave `source` through `first`
    /// until none remain. Returns the amount pushed.
    pub fn augment_via(&mut self, source: usize, first: usize, sink: usize) -> f64 {
        let n = self.cap.len();
        let mut total = 0.0;
        loop {
            if self.residual(source, first) <= self.eps {
                return total;
            }
            let mut parent = vec![usize::MAX; n];
            parent[first] = source;
            parent[source] = source;
            let mut queue = VecDeque::from([first]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for v in 0..n {
                    if parent[v] == usize::MAX && self.residual(u, v) > self.eps {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[sink] == usize::MAX {
                return total;
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = sink;
            while v != source {
                let u = parent[v];
                bottleneck = bottleneck.min(self.residual(u, v));
                v = u;
            }
            let mut v = sink;
            while v != source {
                let u = parent[v];
                self.push(u, v, bottleneck);
                v = u;
            }
            total += bottleneck;
        }
    }

    /// Repeatedly augment through each of `firsts` in order until no
    /// augmenting path through any of them remains.
    pub fn augment_in_order(&mut self, source: usize, firsts: &[usize], sink: usize) {
        loop {
            let mut pushed = 0.0;
            for &f in firsts {
                pushed += self.augment_via(source, f, sink);
            }
            if pushed <= self.eps {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priority_source_is_served_first() {
        // s=0, agents 1,2, item 3, t=4. Item capacity 1, both agents want 1.
        let mut net = FlowNet::new(5, 1e-15);
        net.set_cap(0, 1, 1.0);
        net.set_cap(0, 2, 1.0);
        net.set_cap(1, 3, 10.0);
        net.set_cap(2, 3, 10.0);
        net.set_cap(3, 4, 1.0);
        net.augment_in_order(0, &[2, 1], 4);
        assert_eq!(net.flow(0, 2), 1.0);
        assert_eq!(net.flow(0, 1), 0.0);
    }

    #[test]
    fn rerouting_keeps_earlier_sources_saturated() {
        // Agent 1 can use items 3 or 4; agent 2 only item 3.
        let mut net = FlowNet::new(6, 1e-15);
        net.set_cap(0, 1, 1.0);
        net.set_cap(0, 2, 1.0);
        net.set_cap(1, 3, 10.0);
        net.set_cap(1, 4, 10.0);
        net.set_cap(2, 3, 10.0);
        net.set_cap(3, 5, 1.0);
        net.set_cap(4, 5, 1.0);
        net.augment_in_order(0, &[1, 2], 5);
        assert_eq!(net.flow(0, 1), 1.0);
        assert_eq!(net.flow(0, 2), 1.0);
        assert_eq!(net.flow(1, 4), 1.0);
    }
}
