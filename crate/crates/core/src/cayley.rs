//! Cayley-graph balls, short simple cycles and coset subgraphs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Element, Group, Letter};

pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

/// The closed ball of radius `R` around the identity in the Cayley graph
/// with respect to the symmetric closure of the named generators.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    group: Arc<Group>,
    radius: usize,
    letters: Vec<Letter>,
    label_names: Vec<String>,
    inverse_label: Vec<usize>,
    added_inverses: Vec<String>,
    vertices: Vec<Element>,
    index: HashMap<Element, usize>,
    dist: Vec<usize>,
    parent: Vec<Option<(usize, usize)>>,
    adj: Vec<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cycle {
    /// Closed vertex sequence, first = last.
    pub vertices: Vec<usize>,
    /// Edge labels along the sequence.
    pub labels: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Least rotation of the smaller of the label word and its reversed
    /// inverse. Independent of where the cycle sits.
    pub fn canonical_labels(&self, inverse_label: &[usize]) -> Vec<usize> {
        let rev: Vec<usize> = self.labels.iter().rev().map(|&l| inverse_label[l]).collect();
        let a = least_rotation(&self.labels);
        let b = least_rotation(&rev);
        a.min(b)
    }
}

fn least_rotation(w: &[usize]) -> Vec<usize> {
    (0..w.len())
        .map(|i| w[i..].iter().chain(w[..i].iter()).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

#[derive(Clone, Debug)]
pub struct ShortCycles {
    pub r: usize,
    pub cycles: Vec<Cycle>,
    pub warnings: Vec<String>,
}

impl CayleyBall {
    pub fn build(group: Arc<Group>, radius: usize, cap: usize) -> Result<Self> {
        let mut letters: Vec<Letter> = Vec::new();
        let mut elems: Vec<Element> = Vec::new();
        let mut label_names = Vec::new();
        let mut added_inverses = Vec::new();
        for gen in 0..group.generator_names().len() {
            for inv in [false, true] {
                let l = Letter { gen, inv };
                let e = group.letter_element(l).clone();
                if group.is_identity(&e) || elems.contains(&e) {
                    continue;
                }
                let name = if inv {
                    let n = format!("{}^-1", group.generator_names()[gen]);
                    added_inverses.push(n.clone());
                    n
                } else {
                    group.generator_names()[gen].clone()
                };
                letters.push(l);
                elems.push(e);
                label_names.push(name);
            }
        }
        let inverse_label: Vec<usize> = elems
            .iter()
            .map(|e| {
                let inv = group.inverse(e);
                elems.iter().position(|x| *x == inv).expect("generating set is symmetric")
            })
            .collect();

        let id = group.identity();
        let mut vertices = vec![id.clone()];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut dist = vec![0usize];
        let mut parent = vec![None];
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            if dist[v] == radius {
                continue;
            }
            for (l, g) in elems.iter().enumerate() {
                let w = group.mul(&vertices[v], g);
                if !index.contains_key(&w) {
                    if vertices.len() >= cap {
                        return Err(Error::CapExceeded {
                            what: format!("ball vertices (reached {} at distance {})", vertices.len(), dist[v] + 1),
                            cap,
                        });
                    }
                    index.insert(w.clone(), vertices.len());
                    dist.push(dist[v] + 1);
                    parent.push(Some((v, l)));
                    queue.push_back(vertices.len());
                    vertices.push(w);
                }
            }
        }
        let adj = vertices
            .iter()
            .map(|v| {
                elems
                    .iter()
                    .enumerate()
                    .filter_map(|(l, g)| index.get(&group.mul(v, g)).map(|&w| (l, w)))
                    .collect()
            })
            .collect();
        Ok(CayleyBall {
            group,
            radius,
            letters,
            label_names,
            inverse_label,
            added_inverses,
            vertices,
            index,
            dist,
            parent,
            adj,
        })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, v: usize) -> &Element {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Element] {
        &self.vertices
    }

    pub fn index_of(&self, e: &Element) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn distance(&self, v: usize) -> usize {
        self.dist[v]
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn label_count(&self) -> usize {
        self.letters.len()
    }

    pub fn label_name(&self, l: usize) -> &str {
        &self.label_names[l]
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_letter(&self, l: usize) -> Letter {
        self.letters[l]
    }

    pub fn inverse_label(&self, l: usize) -> usize {
        self.inverse_label[l]
    }

    pub fn inverse_labels(&self) -> &[usize] {
        &self.inverse_label
    }

    pub fn added_inverses(&self) -> &[String] {
        &self.added_inverses
    }

    /// Neighbor of `v` along label `l`, if it lies in the ball.
    pub fn step(&self, v: usize, l: usize) -> Option<usize> {
        self.adj[v].iter().find(|&&(m, _)| m == l).map(|&(_, w)| w)
    }

    /// Undirected edges `(u, w, label)` with `u < w`, label read from `u`.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &(l, w) in nb {
                if u < w {
                    out.push((u, w, l));
                }
            }
        }
        out
    }

    /// Geodesic word (BFS tree) for a vertex, as labels.
    pub fn word_labels(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = v;
        while let Some((p, l)) = self.parent[x] {
            out.push(l);
            x = p;
        }
        out.reverse();
        out
    }

    pub fn word(&self, v: usize) -> Vec<Letter> {
        self.word_labels(v).into_iter().map(|l| self.letters[l]).collect()
    }

    pub fn render(&self, v: usize) -> String {
        self.group.render(&self.vertices[v])
    }

    /// Vertex `g * v` if it lies in the ball.
    pub fn translate(&self, g: &Element, v: usize) -> Option<usize> {
        self.index_of(&self.group.mul(g, &self.vertices[v]))
    }

    /// Vertices at distance at most `d`.
    pub fn within(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.dist[v] <= d)
    }

    /// Vertex counts per BFS layer.
    pub fn layer_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.radius + 1];
        for &d in &self.dist {
            out[d] += 1;
        }
        out
    }

    /// Ball-graph distances from `src`, within the ball.
    pub fn bfs_from(&self, src: usize) -> Vec<Option<usize>> {
        let mut d = vec![None; self.len()];
        d[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &(_, w) in &self.adj[v] {
                if d[w].is_none() {
                    d[w] = Some(d[v].unwrap() + 1);
                    queue.push_back(w);
                }
            }
        }
        d
    }
}

/// Every simple cycle of length `3..=r` inside the ball, each once (up to
/// rotation and reversal), sorted by length, canonical label word, then
/// vertex sequence.
pub fn enumerate_short_cycles(ball: &CayleyBall, r: usize) -> ShortCycles {
    let mut warnings = Vec::new();
    if r < 3 {
        warnings.push(format!("r = {r} < 3: graph cycles have length at least 3"));
    }
    if ball.radius() < r {
        warnings.push(format!(
            "ball radius {} < r = {r}: cycles near the boundary may be clipped",
            ball.radius()
        ));
    }
    let mut cycles: Vec<Cycle> = (0..ball.len())
        .into_par_iter()
        .flat_map_iter(|s| cycles_from(ball, s, r))
        .collect();
    let inv = ball.inverse_labels();
    let mut keyed: Vec<(usize, Vec<usize>, Cycle)> =
        cycles.drain(..).map(|c| (c.len(), c.canonical_labels(inv), c)).collect();
    keyed.sort_by(|a, b| (a.0, &a.1, &a.2.vertices, &a.2.labels).cmp(&(b.0, &b.1, &b.2.vertices, &b.2.labels)));
    ShortCycles { r, cycles: keyed.into_iter().map(|(_, _, c)| c).collect(), warnings }
}

fn cycles_from(ball: &CayleyBall, s: usize, r: usize) -> Vec<Cycle> {
    let mut out = Vec::new();
    let mut path = vec![s];
    let mut labels = Vec::new();
    let mut on_path = HashSet::from([s]);
    dfs(ball, s, r, &mut path, &mut labels, &mut on_path, &mut out);
    out
}

fn dfs(
    ball: &CayleyBall,
    s: usize,
    r: usize,
    path: &mut Vec<usize>,
    labels: &mut Vec<usize>,
    on_path: &mut HashSet<usize>,
    out: &mut Vec<Cycle>,
) {
    let v = *path.last().unwrap();
    for &(l, w) in ball.neighbors(v) {
        if w == s {
            // close; keep one of the two directions
            if path.len() >= 3 && path[1] < path[path.len() - 1] {
                let mut vs = path.clone();
                vs.push(s);
                let mut ls = labels.clone();
                ls.push(l);
                out.push(Cycle { vertices: vs, labels: ls });
            }
            continue;
        }
        if w < s || on_path.contains(&w) || path.len() >= r {
            continue;
        }
        path.push(w);
        labels.push(l);
        on_path.insert(w);
        dfs(ball, s, r, path, labels, on_path, out);
        on_path.remove(&w);
        labels.pop();
        path.pop();
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CosetSubgraph {
    pub vertices: Vec<usize>,
    /// Coset elements that fall outside the ball.
    pub missing: usize,
}

impl CosetSubgraph {
    pub fn complete(&self) -> bool {
        self.missing == 0
    }
}

/// Ball vertices of the left coset `rep * H`.
pub fn coset_subgraph(ball: &CayleyBall, subgroup: &[Element], rep: &Element) -> CosetSubgraph {
    let g = ball.group();
    let mut vertices = Vec::new();
    let mut missing = 0;
    for h in subgroup {
        match ball.index_of(&g.mul(rep, h)) {
            Some(v) => vertices.push(v),
            None => missing += 1,
        }
    }
    vertices.sort_unstable();
    vertices.dedup();
    CosetSubgraph { vertices, missing }
}

/// Closure of a set of elements under multiplication, if it stays within
/// `cap` elements. Sorted.
pub fn finite_closure(group: &Group, gens: &[Element], cap: usize) -> Option<Vec<Element>> {
    let id = group.identity();
    let mut seen: HashSet<Element> = HashSet::from([id.clone()]);
    let mut out = vec![id];
    let mut i = 0;
    while i < out.len() {
        for g in gens {
            let y = group.mul(&out[i], g);
            if seen.insert(y.clone()) {
                if out.len() >= cap {
                    return None;
                }
                out.push(y);
            }
        }
        i += 1;
    }
    out.sort();
    Some(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CosetCheckReport {
    pub r: usize,
    pub pass: bool,
    pub cycles_checked: usize,
    pub violation_count: usize,
    /// Violating cycles as label words, first few.
    pub witnesses: Vec<String>,
    pub warnings: Vec<String>,
}

/// Checks that every cycle of length at most `r` lies in a single left coset
/// of one of the candidate subgroups.
pub fn verify_short_cycle_cosets(ball: &CayleyBall, r: usize, candidates: &[Vec<Element>]) -> CosetCheckReport {
    let g = ball.group();
    let sets: Vec<HashSet<&Element>> = candidates.iter().map(|c| c.iter().collect()).collect();
    let cycles = enumerate_short_cycles(ball, r);
    let mut warnings = cycles.warnings.clone();
    let max_diam = candidates
        .iter()
        .map(|c| c.iter().filter_map(|e| ball.index_of(e)).map(|v| ball.distance(v)).max().unwrap_or(0))
        .max()
        .unwrap_or(0);
    if ball.radius() < r + max_diam {
        warnings.push(format!("ball radius {} < r + max coset diameter {}", ball.radius(), r + max_diam));
    }
    let violating: Vec<&Cycle> = cycles
        .cycles
        .par_iter()
        .filter(|c| {
            let v0 = g.inverse(ball.vertex(c.vertices[0]));
            let rel: Vec<Element> = c.vertices.iter().map(|&v| g.mul(&v0, ball.vertex(v))).collect();
            !sets.iter().any(|h| rel.iter().all(|x| h.contains(x)))
        })
        .collect();
    let witnesses = violating
        .iter()
        .take(10)
        .map(|c| {
            let word: Vec<Letter> = c.labels.iter().map(|&l| ball.label_letter(l)).collect();
            format!("at {}: {}", ball.render(c.vertices[0]), g.render_word(&word))
        })
        .collect();
    CosetCheckReport {
        r,
        pass: violating.is_empty(),
        cycles_checked: cycles.cycles.len(),
        violation_count: violating.len(),
        witnesses,
        warnings,
    }
}

/// Maximum word-metric diameter over the cosets of the given finite
/// subgroups: the largest word length of any of their elements. Grows a ball
/// until every element is found.
pub fn subgroup_length_bound(group: &Arc<Group>, subgroups: &[Vec<Element>], max_radius: usize) -> Result<usize> {
    let wanted: Vec<&Element> = subgroups.iter().flatten().collect();
    let mut radius = 1;
    loop {
        let ball = CayleyBall::build(group.clone(), radius, DEFAULT_VERTEX_CAP)?;
        let found: Option<Vec<usize>> =
            wanted.iter().map(|e| ball.index_of(e).map(|v| ball.distance(v))).collect();
        if let Some(d) = found {
            return Ok(d.into_iter().max().unwrap_or(0));
        }
        if radius >= max_radius {
            return Err(Error::CapExceeded { what: "ball growth for torsion length bound".into(), cap: max_radius });
        }
        radius += 1;
    }
}

/// Torsion length constant L for a graph-of-groups group: the largest word
/// length of an element of a vertex group (conjugated into pi1 by its tree
/// path).
pub fn torsion_length_bound(group: &Arc<Group>, max_radius: usize) -> Result<usize> {
    let gog = group
        .gog()
        .ok_or_else(|| Error::Precondition("torsion_length_bound needs a graph-of-groups backend".into()))?;
    let mut subgroups = Vec::new();
    for v in 0..gog.vertex_count() {
        let elems = (0..gog.vertex_group(v).order())
            .map(|g| gog.vertex_element(v, g).map(Element::NormalForm))
            .collect::<Result<Vec<_>>>()?;
        subgroups.push(elems);
    }
    subgroup_length_bound(group, &subgroups, max_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn radius_zero_is_a_point() {
        let b = CayleyBall::build(Arc::new(fixtures::sl2z_matrix()), 0, 100).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.edges().is_empty());
    }

    #[test]
    fn cap_reports_count() {
        let r = CayleyBall::build(Arc::new(fixtures::free2()), 6, 50);
        match r {
            Err(Error::CapExceeded { what, cap }) => {
                assert_eq!(cap, 50);
                assert!(what.contains("reached 50"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn least_rotation_is_minimal() {
        assert_eq!(least_rotation(&[2, 0, 1]), vec![0, 1, 2]);
        assert_eq!(least_rotation(&[1, 1, 0]), vec![0, 1, 1]);
    }
}
