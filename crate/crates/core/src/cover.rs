//! Finite truncations of the r-local cover of a Cayley ball.
//!
//! The cover is built from the tree of non-backtracking label walks out of
//! the center. For every walk node `x` within the requested depth and every
//! short cycle through its projection, the two halves of the cycle are traced
//! from `x` and their endpoints identified; the result is then folded so that
//! each vertex has at most one outgoing edge per label. Identifications that
//! would need conjugators deeper than the tree are missed, which is what the
//! certified depth accounts for.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::cayley::{enumerate_short_cycles, CayleyBall, Cycle};
use crate::error::{Error, Result};
use crate::group::Element;

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverVertex {
    pub projection: usize,
    /// Depth of the shallowest walk in the class.
    pub depth: usize,
    /// Representative walk from the root, as labels.
    pub walk: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TruncatedCover {
    base: Arc<CayleyBall>,
    r: usize,
    requested_depth: usize,
    certified_depth: usize,
    tree_depth: usize,
    vertices: Vec<CoverVertex>,
    adj: Vec<Vec<(usize, usize)>>,
    identifications: usize,
}

struct WalkTree {
    parent: Vec<u32>,
    label_in: Vec<u32>,
    depth: Vec<u32>,
    proj: Vec<u32>,
    children: Vec<u32>,
    labels: usize,
}

impl WalkTree {
    fn build(ball: &CayleyBall, max_depth: usize, cap: usize) -> Result<Self> {
        let labels = ball.label_count();
        let mut t = WalkTree {
            parent: vec![NONE],
            label_in: vec![NONE],
            depth: vec![0],
            proj: vec![0],
            children: vec![NONE; labels],
            labels,
        };
        let mut x = 0;
        while x < t.len() {
            if (t.depth[x] as usize) < max_depth {
                let back = t.label_in[x];
                for &(l, w) in ball.neighbors(t.proj[x] as usize) {
                    if back != NONE && ball.inverse_label(back as usize) == l {
                        continue;
                    }
                    if t.len() >= cap {
                        return Err(Error::CapExceeded { what: "cover walk tree nodes".into(), cap });
                    }
                    let c = t.len() as u32;
                    t.parent.push(x as u32);
                    t.label_in.push(l as u32);
                    t.depth.push(t.depth[x] + 1);
                    t.proj.push(w as u32);
                    t.children.extend(std::iter::repeat_n(NONE, labels));
                    t.children[x * labels + l] = c;
                }
            }
            x += 1;
        }
        Ok(t)
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    /// Node reached from `x` along label `l`, if it is in the tree.
    fn step(&self, ball: &CayleyBall, x: usize, l: usize) -> Option<usize> {
        let back = self.label_in[x];
        if back != NONE && ball.inverse_label(back as usize) == l {
            return Some(self.parent[x] as usize);
        }
        match self.children[x * self.labels + l] {
            NONE => None,
            c => Some(c as usize),
        }
    }

    fn trace(&self, ball: &CayleyBall, x: usize, word: impl Iterator<Item = usize>) -> Option<usize> {
        word.into_iter().try_fold(x, |y, l| self.step(ball, y, l))
    }

    fn walk(&self, x: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut y = x;
        while self.parent[y] != NONE {
            out.push(self.label_in[y] as usize);
            y = self.parent[y] as usize;
        }
        out.reverse();
        out
    }
}

/// Union-find with per-class label maps, merging targets on label clashes.
struct Folder {
    parent: Vec<usize>,
    out: Vec<BTreeMap<usize, usize>>,
    merges: usize,
}

impl Folder {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let mut pending = vec![(a, b)];
        while let Some((a, b)) = pending.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[drop] = keep;
            self.merges += 1;
            let moved = std::mem::take(&mut self.out[drop]);
            for (l, t) in moved {
                match self.out[keep].get(&l) {
                    Some(&t0) => pending.push((t0, t)),
                    None => {
                        self.out[keep].insert(l, t);
                    }
                }
            }
        }
    }
}

/// Closed label words through each base vertex, from the short cycles.
fn cycle_words(ball: &CayleyBall, r: usize) -> HashMap<usize, Vec<Vec<usize>>> {
    let mut by_vertex: HashMap<usize, HashSet<Vec<usize>>> = HashMap::new();
    for c in enumerate_short_cycles(ball, r).cycles {
        let n = c.len();
        let rev: Vec<usize> = c.labels.iter().rev().map(|&l| ball.inverse_label(l)).collect();
        for i in 0..n {
            let fwd: Vec<usize> = (0..n).map(|k| c.labels[(i + k) % n]).collect();
            by_vertex.entry(c.vertices[i]).or_default().insert(fwd);
            // reversed traversal starting at the same vertex
            let j = (n - i) % n;
            let bwd: Vec<usize> = (0..n).map(|k| rev[(j + k) % n]).collect();
            by_vertex.entry(c.vertices[i]).or_default().insert(bwd);
        }
    }
    by_vertex
        .into_iter()
        .map(|(v, s)| {
            let mut words: Vec<_> = s.into_iter().collect();
            words.sort();
            (v, words)
        })
        .collect()
}

pub const DEFAULT_TREE_CAP: usize = 4_000_000;

impl TruncatedCover {
    pub fn build(base: Arc<CayleyBall>, r: usize, depth: usize) -> Result<Self> {
        Self::build_with_cap(base, r, depth, DEFAULT_TREE_CAP)
    }

    pub fn build_with_cap(base: Arc<CayleyBall>, r: usize, depth: usize, cap: usize) -> Result<Self> {
        if r < 3 {
            return Err(Error::Precondition(format!("r = {r} < 3")));
        }
        if depth > base.radius() {
            return Err(Error::Precondition(format!("depth {depth} exceeds ball radius {}", base.radius())));
        }
        let half = r.div_ceil(2);
        let tree_depth = depth + half;
        let tree = WalkTree::build(&base, tree_depth, cap)?;
        let words = cycle_words(&base, r);

        let mut f = Folder { parent: (0..tree.len()).collect(), out: vec![BTreeMap::new(); tree.len()], merges: 0 };
        for x in 0..tree.len() {
            for l in 0..tree.labels {
                if let Some(y) = tree.step(&base, x, l) {
                    f.out[x].insert(l, y);
                }
            }
        }
        for x in 0..tree.len() {
            if tree.depth[x] as usize > depth {
                break;
            }
            let Some(ws) = words.get(&(tree.proj[x] as usize)) else { continue };
            for w in ws {
                let k = w.len() / 2;
                let a = tree.trace(&base, x, w[..k].iter().copied());
                let b = tree.trace(&base, x, w[k..].iter().rev().map(|&l| base.inverse_label(l)));
                if let (Some(a), Some(b)) = (a, b) {
                    debug_assert_eq!(tree.proj[a], tree.proj[b]);
                    f.union(a, b);
                }
            }
        }

        // classes, numbered by their shallowest (BFS-first) node
        let mut class_of = vec![usize::MAX; tree.len()];
        let mut vertices = Vec::new();
        for x in 0..tree.len() {
            let root = f.find(x);
            if class_of[root] == usize::MAX {
                class_of[root] = vertices.len();
                vertices.push(CoverVertex {
                    projection: tree.proj[x] as usize,
                    depth: tree.depth[x] as usize,
                    walk: tree.walk(x),
                });
            }
            class_of[x] = class_of[root];
        }
        let mut adj = vec![Vec::new(); vertices.len()];
        for x in 0..tree.len() {
            let root = f.find(x);
            if root != x {
                continue;
            }
            let c = class_of[x];
            let outs: Vec<(usize, usize)> = f.out[x].iter().map(|(&l, &t)| (l, t)).collect();
            for (l, t) in outs {
                let t = f.find(t);
                adj[c].push((l, class_of[t]));
            }
        }

        // certified while every walk stays inside the part of the ball
        // where all generator steps exist
        let full = base.label_count();
        let mut certified = depth;
        for x in 0..tree.len() {
            let d = tree.depth[x] as usize;
            if d < tree_depth && base.neighbors(tree.proj[x] as usize).len() < full {
                certified = certified.min(d.saturating_sub(half));
                break;
            }
        }

        Ok(TruncatedCover {
            base,
            r,
            requested_depth: depth,
            certified_depth: certified,
            tree_depth,
            vertices,
            adj,
            identifications: f.merges,
        })
    }

    pub fn base(&self) -> &Arc<CayleyBall> {
        &self.base
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn requested_depth(&self) -> usize {
        self.requested_depth
    }

    pub fn certified_depth(&self) -> usize {
        self.certified_depth
    }

    pub fn tree_depth(&self) -> usize {
        self.tree_depth
    }

    pub fn identifications(&self) -> usize {
        self.identifications
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, c: usize) -> &CoverVertex {
        &self.vertices[c]
    }

    pub fn vertices(&self) -> &[CoverVertex] {
        &self.vertices
    }

    pub fn projection(&self, c: usize) -> usize {
        self.vertices[c].projection
    }

    pub fn neighbors(&self, c: usize) -> &[(usize, usize)] {
        &self.adj[c]
    }

    pub fn step(&self, c: usize, l: usize) -> Option<usize> {
        self.adj[c].iter().find(|&&(m, _)| m == l).map(|&(_, t)| t)
    }

    pub fn is_certified(&self, c: usize) -> bool {
        self.vertices[c].depth <= self.certified_depth
    }

    /// Cover vertices in the certified region.
    pub fn certified(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&c| self.is_certified(c))
    }

    /// Lifts of a base vertex inside the certified region, shallowest first.
    pub fn lifts(&self, v: usize) -> Vec<usize> {
        self.certified().filter(|&c| self.vertices[c].projection == v).collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adj.iter().enumerate() {
            for &(l, b) in nb {
                if a < b || (a == b && l <= self.base.inverse_label(l)) {
                    out.push((a, b, l));
                }
            }
        }
        out
    }

    fn bfs(&self, src: usize, limit: usize) -> HashMap<usize, usize> {
        let mut d = HashMap::from([(src, 0usize)]);
        let mut queue = VecDeque::from([src]);
        while let Some(c) = queue.pop_front() {
            let dc = d[&c];
            if dc == limit {
                continue;
            }
            for &(_, t) in &self.adj[c] {
                if !d.contains_key(&t) {
                    d.insert(t, dc + 1);
                    queue.push_back(t);
                }
            }
        }
        d
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallPreservationReport {
    pub radius: usize,
    pub checked: usize,
    pub skipped: usize,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Checks that the projection restricted to each radius-`radius` cover ball
/// (around certified vertices whose short cycles were all glued) is a
/// labelled-graph isomorphism onto the base ball.
///
/// Balls are metric: an edge belongs to the ball when its midpoint does,
/// i.e. when one endpoint is at distance below `radius`. An edge joining two
/// vertices on the sphere closes a cycle longer than `2 * radius` and is not
/// part of the ball.
pub fn verify_ball_preservation(cover: &TruncatedCover, radius: usize) -> BallPreservationReport {
    let base = cover.base();
    let mut checked = 0;
    let mut skipped = 0;
    let mut witness = None;
    for c in cover.certified() {
        let v = cover.projection(c);
        // every short cycle meeting the ball must have been traced from a
        // node within the requested depth
        if cover.vertex(c).depth + radius > cover.requested_depth() + 1 || base.distance(v) + radius > base.radius() {
            skipped += 1;
            continue;
        }
        checked += 1;
        let cb = cover.bfs(c, radius);
        let bd = base.bfs_from(v);
        let bb: HashSet<usize> = (0..base.len()).filter(|&w| bd[w].is_some_and(|d| d <= radius)).collect();
        let image: HashSet<usize> = cb.keys().map(|&x| cover.projection(x)).collect();
        let mut cover_edges = HashSet::new();
        let mut cover_edge_count = 0;
        for (&x, &dx) in &cb {
            for &(l, y) in cover.neighbors(x) {
                if cb.get(&y).is_some_and(|&dy| dx.min(dy) < radius) {
                    cover_edges.insert((cover.projection(x), l, cover.projection(y)));
                    cover_edge_count += 1;
                }
            }
        }
        let base_edges: HashSet<(usize, usize, usize)> = bb
            .iter()
            .flat_map(|&w| {
                let (bd, bb) = (&bd, &bb);
                base.neighbors(w)
                    .iter()
                    .filter(move |(_, u)| bb.contains(u) && bd[w].unwrap().min(bd[*u].unwrap()) < radius)
                    .map(move |&(l, u)| (w, l, u))
            })
            .collect();
        let ok = image.len() == cb.len()
            && image == bb
            && cover_edges == base_edges
            && cover_edge_count == base_edges.len();
        if !ok {
            witness = Some(format!(
                "cover vertex {c} over {}: cover ball has {} vertices and {} edges, base ball {} and {}",
                base.render(v),
                cb.len(),
                cover_edge_count / 2,
                bb.len(),
                base_edges.len() / 2
            ));
            break;
        }
    }
    BallPreservationReport { radius, checked, skipped, pass: witness.is_none() && checked > 0, witness }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleLift {
    LiftsClosed,
    LiftsOpen,
}

/// Lifts a base cycle starting at its shallowest certified lift.
pub fn classify_cycle_lift(cover: &TruncatedCover, cycle: &Cycle) -> Result<CycleLift> {
    let start = *cover
        .lifts(cycle.vertices[0])
        .first()
        .ok_or_else(|| Error::Uncertified("cycle start has no certified lift".into()))?;
    classify_cycle_lift_at(cover, cycle, start)
}

pub fn classify_cycle_lift_at(cover: &TruncatedCover, cycle: &Cycle, start: usize) -> Result<CycleLift> {
    if !cover.is_certified(start) || cover.projection(start) != cycle.vertices[0] {
        return Err(Error::Precondition("start is not a certified lift of the cycle's first vertex".into()));
    }
    let mut c = start;
    for &l in &cycle.labels {
        c = cover
            .step(c, l)
            .ok_or_else(|| Error::Uncertified("cycle exits certified region".into()))?;
    }
    Ok(if c == start { CycleLift::LiftsClosed } else { CycleLift::LiftsOpen })
}

#[derive(Clone, Debug)]
pub struct DeckLift {
    pub gamma: Element,
    /// Partial map on the certified region; `None` where the image would
    /// leave it.
    pub map: Vec<Option<usize>>,
}

impl DeckLift {
    pub fn apply(&self, c: usize) -> Option<usize> {
        self.map.get(c).copied().flatten()
    }

    pub fn defined(&self) -> usize {
        self.map.iter().filter(|m| m.is_some()).count()
    }

    /// `self ∘ other` where both are defined.
    pub fn compose(&self, other: &DeckLift, cover: &TruncatedCover) -> DeckLift {
        let g = cover.base().group();
        DeckLift {
            gamma: g.mul(&self.gamma, &other.gamma),
            map: other.map.iter().map(|m| m.and_then(|x| self.apply(x))).collect(),
        }
    }
}

/// Extends `root -> lift` edge by edge over the certified region.
pub fn lift_element_action(cover: &TruncatedCover, gamma: &Element, lift: usize) -> Result<DeckLift> {
    let base = cover.base();
    let g = base.group();
    let target = base
        .index_of(gamma)
        .ok_or_else(|| Error::Precondition("element lies outside the ball".into()))?;
    if cover.projection(lift) != target || !cover.is_certified(lift) {
        return Err(Error::Precondition("chosen vertex is not a certified lift of the element".into()));
    }
    let mut map: Vec<Option<usize>> = vec![None; cover.len()];
    map[0] = Some(lift);
    let mut queue = VecDeque::from([0usize]);
    let mut seen = vec![false; cover.len()];
    seen[0] = true;
    while let Some(c) = queue.pop_front() {
        let Some(img) = map[c] else { continue };
        for &(l, t) in cover.neighbors(c) {
            if !cover.is_certified(t) {
                continue;
            }
            let im = cover.step(img, l).filter(|&x| cover.is_certified(x));
            match (map[t], im) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::Uncertified(format!("deck lift of {} is inconsistent at cover vertex {t}", g.render(gamma))));
                }
                (None, Some(b)) if !seen[t] => map[t] = Some(b),
                _ => {}
            }
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    for (c, m) in map.iter().enumerate() {
        if let Some(x) = m {
            let want = base.translate(gamma, cover.projection(c));
            if want != Some(cover.projection(*x)) {
                return Err(Error::Uncertified(format!("deck lift does not commute with projection at {c}")));
            }
        }
    }
    Ok(DeckLift { gamma: gamma.clone(), map })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Displacement {
    /// Minimum distance found, if any pair of lifts was found.
    pub value: Option<usize>,
    pub exact: bool,
    /// When nothing was found: Δ exceeds this certified diameter.
    pub lower_bound: usize,
}

/// Minimum cover distance between distinct lifts of a common base vertex,
/// searched inside the certified region.
pub fn estimate_displacement(cover: &TruncatedCover) -> Displacement {
    let mut by_proj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in cover.certified() {
        by_proj.entry(cover.projection(c)).or_default().push(c);
    }
    let diameter = 2 * cover.certified_depth();
    let mut best: Option<usize> = None;
    for lifts in by_proj.values().filter(|l| l.len() > 1) {
        for &a in lifts {
            // distances through the certified subgraph only
            let mut d = HashMap::from([(a, 0usize)]);
            let mut queue = VecDeque::from([a]);
            while let Some(c) = queue.pop_front() {
                for &(_, t) in cover.neighbors(c) {
                    if cover.is_certified(t) && !d.contains_key(&t) {
                        d.insert(t, d[&c] + 1);
                        queue.push_back(t);
                    }
                }
            }
            for &b in lifts {
                if b != a {
                    if let Some(&x) = d.get(&b) {
                        best = Some(best.map_or(x, |y| y.min(x)));
                    }
                }
            }
        }
    }
    match best {
        Some(v) => Displacement { value: Some(v), exact: true, lower_bound: v },
        None => Displacement { value: None, exact: false, lower_bound: diameter },
    }
}

/// `K = Δ/r + 1`.
pub fn order_threshold(delta: u64, r: u64) -> Result<Rational64> {
    if r == 0 {
        return Err(Error::Precondition("r must be positive".into()));
    }
    Ok(Rational64::new(delta as i64, r as i64) + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_arithmetic() {
        assert_eq!(order_threshold(0, 3).unwrap(), Rational64::from(1));
        assert_eq!(order_threshold(12, 6).unwrap(), Rational64::from(3));
        assert!(order_threshold(1, 0).is_err());
    }
}
