//! Short-cycle clusters: edges related by lying on a common cycle of length
//! at most r.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::cayley::{enumerate_short_cycles, CayleyBall};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices into `CayleyBall::edges()`.
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
    /// Edge on no short cycle.
    pub bridge: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub r: usize,
    pub clusters: Vec<Cluster>,
    /// `(cluster, cluster, shared vertices)` for clusters that meet.
    pub separators: Vec<(usize, usize, Vec<usize>)>,
    pub warnings: Vec<String>,
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

/// Key of the undirected edge traversed from `a` to `b` along `l`.
pub(crate) fn edge_key(ball: &CayleyBall, a: usize, b: usize, l: usize) -> (usize, usize, usize) {
    if a < b {
        (a, b, l)
    } else {
        (b, a, ball.inverse_label(l))
    }
}

pub fn compute_clusters(ball: &CayleyBall, r: usize) -> ClusterPartition {
    let edges = ball.edges();
    let index: HashMap<(usize, usize, usize), usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut parent: Vec<usize> = (0..edges.len()).collect();
    let mut on_cycle = vec![false; edges.len()];
    let cycles = enumerate_short_cycles(ball, r);
    for c in &cycles.cycles {
        let ids: Vec<usize> = (0..c.len())
            .map(|i| index[&edge_key(ball, c.vertices[i], c.vertices[i + 1], c.labels[i])])
            .collect();
        for &e in &ids {
            on_cycle[e] = true;
        }
        for w in ids.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in 0..edges.len() {
        let root = find(&mut parent, e);
        groups.entry(root).or_default().push(e);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .map(|es| {
            let mut vs: Vec<usize> = es.iter().flat_map(|&e| [edges[e].0, edges[e].1]).collect();
            vs.sort_unstable();
            vs.dedup();
            Cluster { bridge: !on_cycle[es[0]], edges: es, vertices: vs }
        })
        .collect();
    clusters.sort_by(|a, b| (&a.vertices, &a.edges).cmp(&(&b.vertices, &b.edges)));

    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); ball.len()];
    for (i, c) in clusters.iter().enumerate() {
        for &v in &c.vertices {
            by_vertex[v].push(i);
        }
    }
    let mut shared: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (v, cs) in by_vertex.iter().enumerate() {
        for i in 0..cs.len() {
            for j in i + 1..cs.len() {
                shared.entry((cs[i], cs[j])).or_default().push(v);
            }
        }
    }
    ClusterPartition {
        r,
        clusters,
        separators: shared.into_iter().map(|((a, b), vs)| (a, b, vs)).collect(),
        warnings: cycles.warnings,
    }
}
