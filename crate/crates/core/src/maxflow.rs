//! Maximum flow on undirected capacitated networks.
//!
//! Highest-label push-relabel with the gap heuristic, run to a maximum
//! preflow. The sink side of a minimum cut is read off the residual graph;
//! the smallest source side comes from the same run with roles swapped,
//! which is valid because every edge has equal capacity both ways.

/// Undirected network; capacities are nonnegative reals.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    n: usize,
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
    max_cap: f64,
}

/// Value and source side of a minimum cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub value: f64,
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
            max_cap: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        if u == v || c <= 0.0 {
            return;
        }
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.adj[u].push(e);
        self.to.push(u);
        self.cap.push(c);
        self.adj[v].push(e + 1);
        self.max_cap = self.max_cap.max(c);
    }

    /// Total capacity crossing a cut, recomputed from the original edges.
    pub fn cut_value(&self, source_side: &[bool]) -> f64 {
        let mut total = 0.0;
        for e in (0..self.to.len()).step_by(2) {
            let (u, v) = (self.to[e + 1], self.to[e]);
            if source_side[u] != source_side[v] {
                total += self.cap[e];
            }
        }
        total
    }

    /// Minimum cut with the smallest source side.
    pub fn minimal_cut(&self, s: usize, t: usize) -> MinCut {
        let swapped = self.maximal_cut(t, s);
        MinCut {
            value: swapped.value,
            source_side: swapped.source_side.iter().map(|&b| !b).collect(),
        }
    }

    /// Minimum cut with the largest source side.
    pub fn maximal_cut(&self, s: usize, t: usize) -> MinCut {
        assert!(s != t && s < self.n && t < self.n, "bad terminals");
        let mut residual = self.cap.clone();
        let value = self.preflow(s, t, &mut residual);
        let eps = self.eps();
        // states that can still push to t stay on the sink side
        let mut sink_side = vec![false; self.n];
        sink_side[t] = true;
        let mut stack = vec![t];
        while let Some(v) = stack.pop() {
            for &e in &self.adj[v] {
                let u = self.to[e];
                // residual u -> v lives on the reverse edge e ^ 1
                if !sink_side[u] && residual[e ^ 1] > eps {
                    sink_side[u] = true;
                    stack.push(u);
                }
            }
        }
        MinCut {
            value,
            source_side: sink_side.iter().map(|&b| !b).collect(),
        }
    }

    fn eps(&self) -> f64 {
        1e-12 * self.max_cap
    }

    fn preflow(&self, s: usize, t: usize, res: &mut [f64]) -> f64 {
        let n = self.n;
        let eps = self.eps();
        let mut height = vec![n; n];
        let mut excess = vec![0.0; n];
        let mut current = vec![0usize; n];
        let mut count = vec![0usize; 2 * n + 1];

        // exact distance labels by reverse BFS from t
        height[t] = 0;
        let mut queue = std::collections::VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let u = self.to[e];
                if height[u] == n && u != s && res[e ^ 1] > eps {
                    height[u] = height[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        height[s] = n;
        for h in &height {
            count[*h] += 1;
        }

        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 2 * n + 1];
        let mut top = 0usize;
        for &e in &self.adj[s] {
            let c = res[e];
            if c > 0.0 {
                let v = self.to[e];
                res[e] -= c;
                res[e ^ 1] += c;
                excess[v] += c;
                excess[s] -= c;
                if v != t && height[v] < n && excess[v] - c <= eps && excess[v] > eps {
                    buckets[height[v]].push(v);
                    top = top.max(height[v]);
                }
            }
        }

        loop {
            while top > 0 && buckets[top].is_empty() {
                top -= 1;
            }
            let Some(v) = buckets[top].pop() else {
                break;
            };
            if height[v] >= n || excess[v] <= eps {
                continue;
            }
            // discharge v
            while excess[v] > eps && height[v] < n {
                if current[v] == self.adj[v].len() {
                    let old = height[v];
                    let mut h = 2 * n;
                    for &e in &self.adj[v] {
                        if res[e] > eps {
                            h = h.min(height[self.to[e]] + 1);
                        }
                    }
                    count[old] -= 1;
                    height[v] = h.min(2 * n);
                    count[height[v]] += 1;
                    current[v] = 0;
                    if count[old] == 0 && old < n {
                        // gap: nothing between old and n can reach t any more
                        for u in 0..n {
                            if height[u] > old && height[u] < n && u != s {
                                count[height[u]] -= 1;
                                height[u] = n + 1;
                                count[n + 1] += 1;
                            }
                        }
                        if height[v] < n {
                            count[height[v]] -= 1;
                            height[v] = n + 1;
                            count[n + 1] += 1;
                        }
                    }
                    continue;
                }
                let e = self.adj[v][current[v]];
                let w = self.to[e];
                if res[e] > eps && height[v] == height[w] + 1 {
                    let d = excess[v].min(res[e]);
                    res[e] -= d;
                    res[e ^ 1] += d;
                    excess[v] -= d;
                    let was_idle = excess[w] <= eps;
                    excess[w] += d;
                    if w != t && w != s && was_idle && excess[w] > eps && height[w] < n {
                        buckets[height[w]].push(w);
                        top = top.max(height[w]);
                    }
                } else {
                    current[v] += 1;
                }
            }
            if excess[v] > eps && height[v] < n {
                buckets[height[v]].push(v);
                top = top.max(height[v]);
            }
        }
        excess[t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(net: &FlowNetwork, s: usize, t: usize) -> (f64, Vec<Vec<bool>>) {
        let n = net.len();
        let mut best = f64::INFINITY;
        let mut sides = Vec::new();
        for mask in 0..(1usize << n) {
            if mask >> s & 1 == 0 || mask >> t & 1 == 1 {
                continue;
            }
            let side: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let v = net.cut_value(&side);
            if v < best - 1e-12 {
                best = v;
                sides = vec![side];
            } else if (v - best).abs() <= 1e-12 {
                sides.push(side);
            }
        }
        (best, sides)
    }

    #[test]
    fn path_with_tied_cuts() {
        // s - a - t with equal capacities: {s} and {s, a} both cost 1
        let mut net = FlowNetwork::new(3);
        net.add_edge(0, 1, 1.0);
        net.add_edge(1, 2, 1.0);
        let lo = net.minimal_cut(0, 2);
        let hi = net.maximal_cut(0, 2);
        assert_eq!(lo.value, 1.0);
        assert_eq!(lo.source_side, vec![true, false, false]);
        assert_eq!(hi.source_side, vec![true, true, false]);
    }

    #[test]
    fn matches_enumeration_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(2..9);
            let mut net = FlowNetwork::new(n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(0.5) {
                        // small integers make ties common
                        net.add_edge(u, v, rng.random_range(1..4) as f64);
                    }
                }
            }
            let (best, sides) = brute(&net, 0, n - 1);
            let lo = net.minimal_cut(0, n - 1);
            let hi = net.maximal_cut(0, n - 1);
            assert!((lo.value - best).abs() < 1e-9 && (hi.value - best).abs() < 1e-9, "{} {} {} {:?}", lo.value, hi.value, best, net);
            assert!((net.cut_value(&lo.source_side) - best).abs() < 1e-9);
            assert!((net.cut_value(&hi.source_side) - best).abs() < 1e-9);
            for side in &sides {
                for i in 0..n {
                    assert!(!lo.source_side[i] || side[i], "minimal cut not contained");
                    assert!(!side[i] || hi.source_side[i], "maximal cut not containing");
                }
            }
        }
    }
}
