//! Measures on a single weighted static graph (hour slices and the full
//! projection). Only nodes with at least one edge take part.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::tempgraph::AggregatedGraph;

/// Compact weighted graph over the active nodes of an aggregate.
#[derive(Debug, Clone)]
pub struct StaticGraph {
    /// Original node id of each compact index.
    pub nodes: Vec<u32>,
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl StaticGraph {
    pub fn from_aggregate(agg: &AggregatedGraph) -> Self {
        let mut index = vec![usize::MAX; agg.node_count];
        let mut nodes = Vec::new();
        for &(a, b) in agg.weights.keys() {
            for v in [a, b] {
                if index[v as usize] == usize::MAX {
                    index[v as usize] = 0;
                }
            }
        }
        for (v, slot) in index.iter_mut().enumerate() {
            if *slot != usize::MAX {
                *slot = nodes.len();
                nodes.push(v as u32);
            }
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (&(a, b), &w) in &agg.weights {
            let (ia, ib) = (index[a as usize], index[b as usize]);
            adj[ia].push((ib, w as f64));
            adj[ib].push((ia, w as f64));
        }
        StaticGraph { nodes, adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }
}

/// Σ over edges of the product of endpoint degrees.
pub fn s_metric(g: &StaticGraph) -> f64 {
    let mut total = 0.0;
    for (u, nbrs) in g.adj.iter().enumerate() {
        for &(v, _) in nbrs {
            if u < v {
                total += (g.degree(u) * g.degree(v)) as f64;
            }
        }
    }
    total
}

/// Transitivity: 3 × triangles / connected triples; 0 without triples.
pub fn global_clustering(g: &StaticGraph) -> f64 {
    let n = g.len();
    let mut mark = vec![false; n];
    let mut closed = 0u64;
    let mut triples = 0u64;
    for u in 0..n {
        let d = g.degree(u) as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &(v, _) in &g.adj[u] {
            mark[v] = true;
        }
        for &(v, _) in &g.adj[u] {
            if v > u {
                closed += g.adj[v].iter().filter(|&&(w, _)| w > v && mark[w]).count() as u64;
            }
        }
        for &(v, _) in &g.adj[u] {
            mark[v] = false;
        }
    }
    if triples == 0 {
        0.0
    } else {
        3.0 * closed as f64 / triples as f64
    }
}

/// Degree assortativity (Pearson correlation over both edge orientations).
/// `None` when the degree variance over edge ends vanishes.
pub fn assortativity(g: &StaticGraph) -> Option<f64> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut cross = 0.0;
    let mut ends = 0.0;
    for (u, nbrs) in g.adj.iter().enumerate() {
        let du = g.degree(u) as f64;
        for &(v, _) in nbrs {
            let dv = g.degree(v) as f64;
            sum += du;
            sum_sq += du * du;
            cross += du * dv;
            ends += 1.0;
        }
    }
    if ends == 0.0 {
        return None;
    }
    let mean = sum / ends;
    let var = sum_sq / ends - mean * mean;
    if var.abs() < 1e-12 {
        return None;
    }
    Some((cross / ends - mean * mean) / var)
}

fn bfs_distances(g: &StaticGraph, source: usize, dist: &mut [i64], queue: &mut VecDeque<usize>) {
    dist.fill(-1);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in &g.adj[v] {
            if dist[w] < 0 {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
}

/// Connected components as lists of compact indices.
pub fn components(g: &StaticGraph) -> Vec<Vec<usize>> {
    let n = g.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            for &(w, _) in &g.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            i += 1;
        }
        out.push(comp);
    }
    out
}

/// Mean hop distance over ordered pairs of the largest component (first one
/// found on ties); 0 when that component has a single node or none.
pub fn avg_shortest_path(g: &StaticGraph) -> f64 {
    let comps = components(g);
    let Some(largest) = comps.iter().fold(None::<&Vec<usize>>, |best, c| match best {
        Some(b) if b.len() >= c.len() => Some(b),
        _ => Some(c),
    }) else {
        return 0.0;
    };
    let k = largest.len();
    if k < 2 {
        return 0.0;
    }
    let mut dist = vec![-1i64; g.len()];
    let mut queue = VecDeque::new();
    let mut total = 0i64;
    for &s in largest {
        bfs_distances(g, s, &mut dist, &mut queue);
        total += largest.iter().map(|&v| dist[v]).sum::<i64>();
    }
    total as f64 / (k * (k - 1)) as f64
}

/// Closeness of every node, scaled by the reachable fraction so that nodes in
/// small components are not over-rated: `(r-1)/Σd · (r-1)/(n-1)`.
pub fn closeness(g: &StaticGraph) -> Vec<f64> {
    let n = g.len();
    let mut dist = vec![-1i64; n];
    let mut queue = VecDeque::new();
    (0..n)
        .map(|s| {
            bfs_distances(g, s, &mut dist, &mut queue);
            let (reach, total) = dist.iter().filter(|&&d| d > 0).fold((0usize, 0i64), |(r, t), &d| (r + 1, t + d));
            if total == 0 || n < 2 {
                0.0
            } else {
                (reach as f64 / total as f64) * (reach as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const TIE_EPS: f64 = 1e-9;

/// Brandes betweenness, normalized for undirected graphs by
/// `2 / ((n-1)(n-2))`. With `weighted`, an edge of weight `w` has length
/// `1/w`; otherwise every edge has length 1.
pub fn betweenness(g: &StaticGraph, weighted: bool) -> Vec<f64> {
    let n = g.len();
    let mut bc = vec![0.0; n];
    if n <= 2 {
        return bc;
    }
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut delta = vec![0.0f64; n];
    let mut done = vec![false; n];
    for s in 0..n {
        stack.clear();
        for p in &mut preds {
            p.clear();
        }
        sigma.fill(0.0);
        dist.fill(f64::INFINITY);
        done.fill(false);
        sigma[s] = 1.0;
        dist[s] = 0.0;
        if weighted {
            let mut heap = BinaryHeap::new();
            heap.push(HeapItem { dist: 0.0, node: s });
            while let Some(HeapItem { dist: d, node: v }) = heap.pop() {
                if done[v] || d > dist[v] {
                    continue;
                }
                done[v] = true;
                stack.push(v);
                for &(w, weight) in &g.adj[v] {
                    let alt = d + 1.0 / weight;
                    let tol = TIE_EPS * alt.max(1.0);
                    if alt < dist[w] - tol {
                        dist[w] = alt;
                        sigma[w] = sigma[v];
                        preds[w].clear();
                        preds[w].push(v);
                        heap.push(HeapItem { dist: alt, node: w });
                    } else if (alt - dist[w]).abs() <= tol && !done[w] {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
        } else {
            let mut queue = VecDeque::new();
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                stack.push(v);
                for &(w, _) in &g.adj[v] {
                    if dist[w].is_infinite() {
                        dist[w] = dist[v] + 1.0;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1.0 {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
        }
        delta.fill(0.0);
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // every pair was counted from both ends
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    bc.iter_mut().for_each(|b| *b *= scale);
    bc
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn graph(n: usize, edges: &[(u32, u32, u32)]) -> StaticGraph {
        let weights: BTreeMap<(u32, u32), u32> = edges.iter().map(|&(a, b, w)| ((a.min(b), a.max(b)), w)).collect();
        StaticGraph::from_aggregate(&AggregatedGraph { node_count: n, weights })
    }

    fn star() -> StaticGraph {
        graph(4, &[(0, 1, 1), (0, 2, 1), (0, 3, 1)])
    }

    fn triangle() -> StaticGraph {
        graph(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    }

    #[test]
    fn star_measures() {
        let g = star();
        assert_eq!(s_metric(&g), 9.0);
        assert_eq!(global_clustering(&g), 0.0);
        assert!((assortativity(&g).unwrap() + 1.0).abs() < 1e-12);
        assert!((avg_shortest_path(&g) - 1.5).abs() < 1e-12);
        let bc = betweenness(&g, false);
        assert!((bc[0] - 1.0).abs() < 1e-12);
        assert_eq!(bc[1], 0.0);
    }

    #[test]
    fn triangle_measures() {
        let g = triangle();
        assert_eq!(global_clustering(&g), 1.0);
        assert_eq!(assortativity(&g), None);
        assert_eq!(avg_shortest_path(&g), 1.0);
        assert!(closeness(&g).iter().all(|&c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_edge_closeness() {
        let g = graph(5, &[(2, 4, 3)]);
        assert_eq!(g.len(), 2);
        assert_eq!(closeness(&g), vec![1.0, 1.0]);
        assert_eq!(avg_shortest_path(&g), 1.0);
    }

    #[test]
    fn path_betweenness() {
        let g = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        assert_eq!(betweenness(&g, false), vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness(&g, true), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn weights_shorten_paths() {
        // 0-1-2 strong path vs direct weak 0-2 edge: length 1/4 + 1/4 < 1
        let g = graph(3, &[(0, 1, 4), (1, 2, 4), (0, 2, 1)]);
        let w = betweenness(&g, true);
        assert!((w[1] - 1.0).abs() < 1e-12);
        assert_eq!(betweenness(&g, false), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let edges: Vec<(u32, u32, u32)> = vec![(0, 1, 3), (1, 2, 3), (2, 3, 3), (3, 0, 3), (0, 2, 3), (3, 4, 3), (4, 5, 3)];
        let g = graph(6, &edges);
        let a = betweenness(&g, false);
        let b = betweenness(&g, true);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_closeness_is_scaled() {
        let g = graph(4, &[(0, 1, 1), (2, 3, 1)]);
        // one reachable node out of three
        assert!(closeness(&g).iter().all(|&c| (c - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(avg_shortest_path(&g), 1.0);
    }
}
