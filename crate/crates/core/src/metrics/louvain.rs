//! Louvain community detection and weighted Newman modularity.

use super::static_graph::StaticGraph;

/// Weighted graph where each node may carry an internal (self-loop) weight.
struct Level {
    self_weight: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl Level {
    fn strength(&self, v: usize) -> f64 {
        2.0 * self.self_weight[v] + self.adj[v].iter().map(|&(_, w)| w).sum::<f64>()
    }
}

/// Greedy local moving in index order until no node improves.
/// Returns the community of each node, relabelled densely.
fn local_moves(level: &Level, total: f64) -> (Vec<usize>, bool) {
    let n = level.adj.len();
    let strength: Vec<f64> = (0..n).map(|v| level.strength(v)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot = strength.clone();
    let mut link_to = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut moved_any = false;
    let two_m = 2.0 * total;

    loop {
        let mut moved = false;
        for v in 0..n {
            let home = community[v];
            let kv = strength[v];
            for &(u, w) in &level.adj[v] {
                let c = community[u];
                if link_to[c] == 0.0 {
                    touched.push(c);
                }
                link_to[c] += w;
            }
            tot[home] -= kv;
            let gain = |c: usize, links: f64| links - tot[c] * kv / two_m;
            let mut best = home;
            let mut best_gain = gain(home, link_to[home]);
            for &c in &touched {
                let g = gain(c, link_to[c]);
                if g > best_gain + 1e-12 {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += kv;
            if best != home {
                community[v] = best;
                moved = true;
                moved_any = true;
            }
            for &c in &touched {
                link_to[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    let mut relabel = vec![usize::MAX; n];
    let mut next = 0;
    for c in &mut community {
        if relabel[*c] == usize::MAX {
            relabel[*c] = next;
            next += 1;
        }
        *c = relabel[*c];
    }
    (community, moved_any)
}

fn condense(level: &Level, community: &[usize]) -> Level {
    let k = community.iter().max().map_or(0, |&c| c + 1);
    let mut self_weight = vec![0.0; k];
    let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); k];
    for (v, nbrs) in level.adj.iter().enumerate() {
        let cv = community[v];
        self_weight[cv] += level.self_weight[v];
        for &(u, w) in nbrs {
            let cu = community[u];
            if cu == cv {
                if u > v {
                    self_weight[cv] += w;
                }
            } else {
                *maps[cv].entry(cu).or_insert(0.0) += w;
            }
        }
    }
    let adj = maps.into_iter().map(|m| m.into_iter().collect()).collect();
    Level { self_weight, adj }
}

/// Community of each node of `g` (compact indices).
pub fn louvain(g: &StaticGraph) -> Vec<usize> {
    let n = g.len();
    let mut partition: Vec<usize> = (0..n).collect();
    let total: f64 = g.adj.iter().flat_map(|a| a.iter().map(|&(_, w)| w)).sum::<f64>() / 2.0;
    if total == 0.0 {
        return partition;
    }
    let mut level = Level { self_weight: vec![0.0; n], adj: g.adj.clone() };
    loop {
        let (community, moved) = local_moves(&level, total);
        if !moved {
            break;
        }
        for c in &mut partition {
            *c = community[*c];
        }
        level = condense(&level, &community);
    }
    partition
}

/// `Σ_c [ W_c / m − (S_c / 2m)² ]` with `W_c` the weight inside community `c`
/// and `S_c` its total strength. 0 for an edgeless graph.
pub fn modularity(g: &StaticGraph, partition: &[usize]) -> f64 {
    let k = partition.iter().max().map_or(0, |&c| c + 1);
    let mut inside = vec![0.0; k];
    let mut strength = vec![0.0; k];
    let mut total = 0.0;
    for (v, nbrs) in g.adj.iter().enumerate() {
        for &(u, w) in nbrs {
            strength[partition[v]] += w;
            total += w;
            if partition[u] == partition[v] {
                inside[partition[v]] += w;
            }
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    // `total` and `inside` count each edge from both ends
    (0..k).map(|c| inside[c] / total - (strength[c] / total).powi(2)).sum()
}
