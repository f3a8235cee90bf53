//! Canonical r-global decompositions of a Cayley ball: bags, adhesions and
//! the model graph obtained by quotienting by left translation.
//!
//! Two bag strategies are available. `Cosets` (default) takes the left
//! cosets of representatives of the maximal finite subgroups generated by
//! torsion of word length at most r/2. `Clusters` takes the vertex sets of
//! maximal short-cycle clusters plus singletons for vertices on no short
//! cycle.

mod clusters;
mod discover;
mod params;
pub mod torsion;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use clusters::{compute_clusters, Cluster, ClusterPartition};
pub use discover::{
    discover_graph_of_groups, graph_of_groups, same_splitting, DiscoveryConfig, DiscoveryResult, IterationSummary, SplittingSummary,
};
pub use params::{
    bag_size_bound, build_nerve_complex, check_periodicity, check_vtf_conditions, edge_incidence_bound, NerveComplex,
    PeriodicityReport, VtfReport,
};

use crate::cayley::CayleyBall;
use crate::error::{Error, Result};
use crate::finite::SUBGROUP_ORDER_CAP;
use crate::group::{Element, Group};
use torsion::{conjugacy_representatives, maximal_finite_subgroups, FiniteSubgroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BagStrategy {
    Cosets,
    Clusters,
}

impl std::str::FromStr for BagStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosets" => Ok(BagStrategy::Cosets),
            "clusters" => Ok(BagStrategy::Clusters),
            _ => Err(Error::Precondition(format!("unknown bag strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub r: usize,
    pub strategy: BagStrategy,
    /// Width of the excluded outer region; defaults per strategy.
    pub margin: Option<usize>,
    pub subgroup_cap: usize,
}

impl DecompositionConfig {
    pub fn new(r: usize) -> Self {
        DecompositionConfig { r, strategy: BagStrategy::Cosets, margin: None, subgroup_cap: SUBGROUP_ORDER_CAP }
    }

    pub fn with_strategy(mut self, s: BagStrategy) -> Self {
        self.strategy = s;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BagKind {
    Coset,
    Cluster,
    Singleton,
    /// Common intersection of three or more bags through a vertex.
    Junction,
}

#[derive(Clone, Debug)]
pub struct Bag {
    pub kind: BagKind,
    /// Index into `GlobalDecomposition::subgroups` for coset bags.
    pub subgroup: Option<usize>,
    /// Sorted group elements.
    pub elements: Vec<Element>,
    /// Ball vertices, sorted.
    pub vertices: Vec<usize>,
    /// Every element lies in the ball.
    pub complete: bool,
    /// Touches the outer annulus or is incomplete.
    pub boundary: bool,
    pub orbit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    /// Two bags sharing a vertex.
    Junction,
    /// A bag and a junction bag.
    Star,
    /// Edge of the ball between bags that do not meet.
    Bridge,
}

/// Edge of the bag-level graph.
#[derive(Clone, Debug)]
pub struct BagLink {
    pub a: usize,
    pub b: usize,
    pub kind: LinkKind,
    /// Ball vertices in both bags.
    pub adhesion: Vec<usize>,
    pub orbit: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ModelVertex {
    pub kind: BagKind,
    /// Orbit representative: a translate of a bag containing the identity.
    pub representative: Vec<Element>,
    pub bag_size: usize,
    /// Setwise stabilizer of the representative.
    pub stabilizer: Vec<Element>,
    /// Bags of this orbit found in the interior.
    pub bag_count: usize,
}

#[derive(Clone, Debug)]
pub struct ModelEdge {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
    pub adhesion_size: usize,
    /// Translated end bags; the first contains the identity.
    pub ends: [Vec<Element>; 2],
    /// Elements stabilizing both ends.
    pub edge_group: Vec<Element>,
    pub link_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionChecks {
    pub interior_vertices: usize,
    pub interior_edges: usize,
    pub h1_violations: usize,
    pub h2_violations: usize,
    /// Unflagged bags whose induced subgraph is disconnected.
    pub dishonest_bags: usize,
    pub max_adhesion: usize,
    pub flagged_bags: usize,
}

impl DecompositionChecks {
    pub fn h1(&self) -> bool {
        self.h1_violations == 0
    }

    pub fn h2(&self) -> bool {
        self.h2_violations == 0
    }
}

#[derive(Clone, Debug)]
pub struct GlobalDecomposition {
    ball: Arc<CayleyBall>,
    pub config: DecompositionConfig,
    pub margin: usize,
    pub interior_radius: usize,
    /// Representative finite subgroups (coset strategy).
    pub subgroups: Vec<FiniteSubgroup>,
    pub bags: Vec<Bag>,
    pub links: Vec<BagLink>,
    /// Bags containing each ball vertex (junction bags excluded).
    pub vertex_bags: Vec<Vec<usize>>,
    pub model_vertices: Vec<ModelVertex>,
    pub model_edges: Vec<ModelEdge>,
    pub checks: DecompositionChecks,
    pub warnings: Vec<String>,
}

/// Least sorted translate `x^-1 X` over `x` in `X`, with the minimizing `x`.
pub fn set_key(g: &Group, set: &[Element]) -> (Vec<Element>, Element) {
    let mut best: Option<(Vec<Element>, Element)> = None;
    for x in set {
        let xi = g.inverse(x);
        let mut t: Vec<Element> = set.iter().map(|y| g.mul(&xi, y)).collect();
        t.sort();
        if best.as_ref().is_none_or(|(b, _)| t < *b) {
            best = Some((t, x.clone()));
        }
    }
    best.unwrap_or_else(|| (Vec::new(), g.identity()))
}

fn translate(g: &Group, x: &Element, set: &[Element]) -> Vec<Element> {
    let mut t: Vec<Element> = set.iter().map(|y| g.mul(x, y)).collect();
    t.sort();
    t
}

/// Canonical key of the orbit of an unordered pair of sets, with the pair
/// translated so that the first set contains the identity.
/// Also reports whether the first translated set comes from `a`.
fn pair_key(g: &Group, a: &[Element], b: &[Element]) -> ([Vec<Element>; 2], bool) {
    let mut best: Option<([Vec<Element>; 2], bool)> = None;
    for (p, q, first_a) in [(a, b, true), (b, a, false)] {
        for z in p {
            let zi = g.inverse(z);
            let cand = [translate(g, &zi, p), translate(g, &zi, q)];
            if best.as_ref().is_none_or(|(b, _)| cand < *b) {
                best = Some((cand, first_a));
            }
        }
    }
    best.expect("nonempty pair")
}

/// Setwise stabilizer `{ g : g X = X }` of a finite set.
pub fn set_stabilizer(g: &Group, set: &[Element]) -> Vec<Element> {
    let Some(x0) = set.first() else { return vec![g.identity()] };
    let members: HashSet<&Element> = set.iter().collect();
    let x0i = g.inverse(x0);
    let mut out: Vec<Element> = set
        .iter()
        .map(|w| g.mul(w, &x0i))
        .filter(|h| set.iter().all(|y| members.contains(&g.mul(h, y))))
        .collect();
    out.sort();
    out.dedup();
    out
}

fn intersect_sorted(a: &[Element], b: &[Element]) -> Vec<Element> {
    a.iter().filter(|x| b.binary_search(x).is_ok()).cloned().collect()
}

fn intersect_idx(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().filter(|x| b.binary_search(x).is_ok()).copied().collect()
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

impl GlobalDecomposition {
    pub fn ball(&self) -> &Arc<CayleyBall> {
        &self.ball
    }

    pub fn group(&self) -> &Arc<Group> {
        self.ball.group()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.ball.distance(v) <= self.interior_radius
    }

    /// Sorted bag sizes over model vertices.
    pub fn bag_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.model_vertices.iter().map(|m| m.bag_size).collect();
        s.sort_unstable();
        s
    }

    pub fn adhesion_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.model_edges.iter().map(|m| m.adhesion_size).collect();
        s.sort_unstable();
        s
    }

    /// Model graph is one edge joining two distinct vertices.
    pub fn is_single_edge(&self) -> bool {
        self.model_vertices.len() == 2 && self.model_edges.len() == 1 && self.model_edges[0].from != self.model_edges[0].to
    }

    /// One vertex with `n` loops.
    pub fn is_rose(&self, n: usize) -> bool {
        self.model_vertices.len() == 1 && self.model_edges.len() == n && self.model_edges.iter().all(|e| e.from == e.to)
    }

    /// Bag whose element set is exactly `set`, if present.
    pub fn bag_of_set(&self, set: &[Element]) -> Option<usize> {
        self.bags.iter().position(|b| b.elements == set)
    }

    pub fn render_set(&self, set: &[Element]) -> Vec<String> {
        set.iter().map(|e| self.group().render(e)).collect()
    }
}

pub fn compute_global_decomposition(ball: Arc<CayleyBall>, config: DecompositionConfig) -> Result<GlobalDecomposition> {
    let r = config.r;
    if r < 1 {
        return Err(Error::Precondition("r must be positive".into()));
    }
    let g = ball.group().clone();
    let half = r.div_ceil(2);
    let mut warnings = Vec::new();
    let radius = ball.radius();

    // bags and their element sets
    let mut bag_index: HashMap<Vec<Element>, usize> = HashMap::new();
    let mut bags: Vec<Bag> = Vec::new();
    let mut vertex_bags: Vec<Vec<usize>> = vec![Vec::new(); ball.len()];
    let mut subgroups = Vec::new();
    let margin;
    match config.strategy {
        BagStrategy::Cosets => {
            let found = maximal_finite_subgroups(&ball, r / 2, config.subgroup_cap);
            subgroups = conjugacy_representatives(&ball, &found);
            if subgroups.is_empty() {
                subgroups.push(torsion::FiniteSubgroup {
                    elements: vec![g.identity()],
                    max_length: 0,
                    total_length: 0,
                });
            }
            let l = subgroups.iter().map(|h| h.max_length).max().unwrap_or(0);
            margin = config.margin.unwrap_or(half + l);
            for v in 0..ball.len() {
                for (k, h) in subgroups.iter().enumerate() {
                    let coset = translate(&g, ball.vertex(v), &h.elements);
                    let id = match bag_index.get(&coset) {
                        Some(&id) => id,
                        None => {
                            let id = bags.len();
                            bags.push(new_bag(&ball, BagKind::Coset, Some(k), coset.clone()));
                            bag_index.insert(coset, id);
                            id
                        }
                    };
                    vertex_bags[v].push(id);
                }
            }
        }
        BagStrategy::Clusters => {
            margin = config.margin.unwrap_or(r);
            let part = compute_clusters(&ball, r);
            warnings.extend(part.warnings.iter().cloned());
            let mut covered = vec![false; ball.len()];
            for c in part.clusters.iter().filter(|c| !c.bridge) {
                let mut elems: Vec<Element> = c.vertices.iter().map(|&v| ball.vertex(v).clone()).collect();
                elems.sort();
                let id = bags.len();
                bags.push(new_bag(&ball, BagKind::Cluster, None, elems));
                for &v in &c.vertices {
                    covered[v] = true;
                    vertex_bags[v].push(id);
                }
            }
            for v in 0..ball.len() {
                if !covered[v] {
                    let id = bags.len();
                    bags.push(new_bag(&ball, BagKind::Singleton, None, vec![ball.vertex(v).clone()]));
                    vertex_bags[v].push(id);
                }
            }
        }
    }
    let interior_radius = radius.saturating_sub(margin);
    if radius < margin {
        warnings.push(format!("ball radius {radius} is below the margin {margin}; no interior"));
    }
    let outer = radius.saturating_sub(half);
    for b in bags.iter_mut() {
        b.boundary = !b.complete || b.vertices.iter().any(|&v| ball.distance(v) > outer);
        if config.strategy == BagStrategy::Clusters {
            // cluster bags are not closed under anything; a cluster reaching
            // the annulus may be clipped
            b.boundary |= b.vertices.iter().any(|&v| ball.distance(v) + half > radius);
        }
    }
    let interior: Vec<bool> = (0..ball.len()).map(|v| ball.distance(v) <= interior_radius).collect();
    let clean = |bs: &[usize], bags: &[Bag]| bs.iter().all(|&b| !bags[b].boundary);

    // links
    let mut links: Vec<BagLink> = Vec::new();
    let mut junctions: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    for v in 0..ball.len() {
        let mut bs = vertex_bags[v].clone();
        bs.sort_unstable();
        if interior[v] && bs.len() >= 2 && clean(&bs, &bags) {
            junctions.insert(bs, ());
        }
    }
    for bs in junctions.keys() {
        if bs.len() == 2 {
            let adhesion = intersect_idx(&bags[bs[0]].vertices, &bags[bs[1]].vertices);
            links.push(BagLink { a: bs[0], b: bs[1], kind: LinkKind::Junction, adhesion, orbit: None });
        } else {
            let mut elems = bags[bs[0]].elements.clone();
            for &b in &bs[1..] {
                elems = intersect_sorted(&elems, &bags[b].elements);
            }
            let mut jb = new_bag(&ball, BagKind::Junction, None, elems);
            jb.boundary = false;
            let j = bags.len();
            let verts = jb.vertices.clone();
            bags.push(jb);
            for &b in bs {
                links.push(BagLink { a: j, b, kind: LinkKind::Star, adhesion: verts.clone(), orbit: None });
            }
        }
    }
    let mut bridge_pairs: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    let mut h1_violations = 0;
    let mut interior_edges = 0;
    for (u, w, _) in ball.edges() {
        if !(interior[u] && interior[w]) {
            continue;
        }
        interior_edges += 1;
        let (bu, bw) = (&vertex_bags[u], &vertex_bags[w]);
        if !clean(bu, &bags) || !clean(bw, &bags) {
            h1_violations += 1;
            continue;
        }
        if bu.iter().any(|b| bw.contains(b)) {
            continue;
        }
        let meet = bu.iter().any(|&x| {
            bw.iter().any(|&y| !intersect_idx(&bags[x].vertices, &bags[y].vertices).is_empty())
        });
        if meet {
            continue;
        }
        let (a, b) = (bu[0].min(bw[0]), bu[0].max(bw[0]));
        bridge_pairs.insert((a, b), ());
    }
    for &(a, b) in bridge_pairs.keys() {
        links.push(BagLink { a, b, kind: LinkKind::Bridge, adhesion: Vec::new(), orbit: None });
    }

    // orbits of bags
    let mut vkeys: BTreeMap<(BagKind, Vec<String>), (Vec<Element>, usize)> = BTreeMap::new();
    let mut bag_vkey: Vec<Option<(BagKind, Vec<String>)>> = vec![None; bags.len()];
    for (i, b) in bags.iter().enumerate() {
        if b.boundary || !b.vertices.iter().any(|&v| interior[v]) && b.kind != BagKind::Junction {
            continue;
        }
        let kind = if b.kind == BagKind::Junction { BagKind::Junction } else { BagKind::Coset };
        let (key, _) = set_key(&g, &b.elements);
        let rendered = (kind, key.iter().map(|e| g.render(e)).collect::<Vec<_>>());
        vkeys.entry(rendered.clone()).or_insert((key, 0)).1 += 1;
        bag_vkey[i] = Some(rendered);
    }
    let vkey_index: HashMap<(BagKind, Vec<String>), usize> =
        vkeys.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    for (i, k) in bag_vkey.iter().enumerate() {
        bags[i].orbit = k.as_ref().map(|k| vkey_index[k]);
    }
    let model_vertices: Vec<ModelVertex> = vkeys
        .into_iter()
        .map(|((kind, _), (rep, count))| {
            let actual = match kind {
                BagKind::Junction => BagKind::Junction,
                _ => match config.strategy {
                    BagStrategy::Cosets => BagKind::Coset,
                    BagStrategy::Clusters if rep.len() == 1 => BagKind::Singleton,
                    BagStrategy::Clusters => BagKind::Cluster,
                },
            };
            ModelVertex {
                kind: actual,
                bag_size: rep.len(),
                stabilizer: set_stabilizer(&g, &rep),
                representative: rep,
                bag_count: count,
            }
        })
        .collect();

    // orbits of links
    let orbit_of_set = |set: &[Element], kind: BagKind| -> Option<usize> {
        let (key, _) = set_key(&g, set);
        let kind = if kind == BagKind::Junction { BagKind::Junction } else { BagKind::Coset };
        vkey_index.get(&(kind, key.iter().map(|e| g.render(e)).collect())).copied()
    };
    type EdgeEntry = ([Vec<Element>; 2], [BagKind; 2], usize);
    let mut ekeys: BTreeMap<(LinkKind, Vec<String>), EdgeEntry> = BTreeMap::new();
    let mut link_ekey = vec![None; links.len()];
    for (i, l) in links.iter().enumerate() {
        if bags[l.a].orbit.is_none() || bags[l.b].orbit.is_none() {
            continue;
        }
        let (ends, first_a) = pair_key(&g, &bags[l.a].elements, &bags[l.b].elements);
        let kinds = if first_a { [bags[l.a].kind, bags[l.b].kind] } else { [bags[l.b].kind, bags[l.a].kind] };
        let key = (l.kind, ends.iter().map(|s| s.iter().map(|e| g.render(e)).collect::<Vec<_>>().join(" ")).collect());
        ekeys.entry(key.clone()).or_insert((ends, kinds, 0)).2 += 1;
        link_ekey[i] = Some(key);
    }
    let ekey_index: HashMap<_, usize> = ekeys.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    for (i, k) in link_ekey.iter().enumerate() {
        links[i].orbit = k.as_ref().map(|k| ekey_index[k]);
    }
    let mut model_edges = Vec::new();
    for ((kind, _), (ends, kinds, count)) in ekeys {
        let from = orbit_of_set(&ends[0], kinds[0]).ok_or_else(|| Error::Uncertified("edge end has no orbit".into()))?;
        let to = orbit_of_set(&ends[1], kinds[1]).ok_or_else(|| Error::Uncertified("edge end has no orbit".into()))?;
        let s0 = set_stabilizer(&g, &ends[0]);
        let s1 = set_stabilizer(&g, &ends[1]);
        model_edges.push(ModelEdge {
            from,
            to,
            kind,
            adhesion_size: intersect_sorted(&ends[0], &ends[1]).len(),
            edge_group: intersect_sorted(&s0, &s1),
            ends,
            link_count: count,
        });
    }

    // checks
    let mut checks = DecompositionChecks {
        interior_vertices: interior.iter().filter(|&&x| x).count(),
        interior_edges,
        h1_violations,
        ..Default::default()
    };
    let mut star_of: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, b) in bags.iter().enumerate() {
        if b.kind == BagKind::Junction {
            for &v in &b.vertices {
                star_of.entry(v).or_default().push(i);
            }
        }
    }
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for l in &links {
        adj.entry(l.a).or_default().push(l.b);
        adj.entry(l.b).or_default().push(l.a);
    }
    for v in (0..ball.len()).filter(|&v| interior[v]) {
        let mut set: Vec<usize> = vertex_bags[v].clone();
        set.extend(star_of.get(&v).into_iter().flatten());
        if set.len() < 2 || !clean(&set, &bags) {
            continue;
        }
        let mut p: Vec<usize> = (0..set.len()).collect();
        for i in 0..set.len() {
            for &n in adj.get(&set[i]).into_iter().flatten() {
                if let Some(j) = set.iter().position(|&x| x == n) {
                    let (a, b) = (find(&mut p, i), find(&mut p, j));
                    p[a] = b;
                }
            }
        }
        let root = find(&mut p, 0);
        if (1..set.len()).any(|i| find(&mut p, i) != root) {
            checks.h2_violations += 1;
        }
    }
    for b in bags.iter().filter(|b| !b.boundary && b.orbit.is_some()) {
        if !induced_connected(&ball, &b.vertices) {
            checks.dishonest_bags += 1;
        }
    }
    checks.flagged_bags = bags.iter().filter(|b| b.boundary).count();
    checks.max_adhesion = model_edges.iter().map(|e| e.adhesion_size).max().unwrap_or(0);

    if model_vertices.is_empty() {
        warnings.push("no interior bags: enlarge the ball or reduce the margin".into());
    }

    Ok(GlobalDecomposition {
        ball,
        config,
        margin,
        interior_radius,
        subgroups,
        bags,
        links,
        vertex_bags,
        model_vertices,
        model_edges,
        checks,
        warnings,
    })
}

fn new_bag(ball: &CayleyBall, kind: BagKind, subgroup: Option<usize>, elements: Vec<Element>) -> Bag {
    let mut vertices: Vec<usize> = elements.iter().filter_map(|e| ball.index_of(e)).collect();
    vertices.sort_unstable();
    Bag {
        kind,
        subgroup,
        complete: vertices.len() == elements.len(),
        elements,
        vertices,
        boundary: false,
        orbit: None,
    }
}

fn induced_connected(ball: &CayleyBall, vs: &[usize]) -> bool {
    let Some(&start) = vs.first() else { return true };
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(_, w) in ball.neighbors(v) {
            if vs.binary_search(&w).is_ok() && seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == vs.len()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizerRecord {
    pub model_vertex: usize,
    /// Bag the stabilizer was computed for.
    pub bag: usize,
    /// Ball elements `g` with `g V = V`, rendered and sorted.
    pub elements: Vec<String>,
    pub order: usize,
    /// Products of pairs stay in the set whenever they lie in the ball.
    pub closed: bool,
    /// Some stabilizer element lies outside the ball.
    pub truncated: bool,
}

/// Setwise stabilizers of one bag per model vertex, preferring the bag
/// through the identity.
pub fn compute_stabilizers(decomp: &GlobalDecomposition) -> Vec<StabilizerRecord> {
    let ball = decomp.ball();
    let g = decomp.group();
    let mut out = Vec::new();
    for (h, _) in decomp.model_vertices.iter().enumerate() {
        let candidates: Vec<usize> = (0..decomp.bags.len()).filter(|&b| decomp.bags[b].orbit == Some(h)).collect();
        let Some(&bag) = candidates
            .iter()
            .find(|&&b| decomp.bags[b].vertices.contains(&0))
            .or_else(|| candidates.iter().min_by_key(|&&b| decomp.bags[b].vertices.iter().map(|&v| ball.distance(v)).min()))
        else {
            continue;
        };
        let full = set_stabilizer(g, &decomp.bags[bag].elements);
        let inside: Vec<&Element> = full.iter().filter(|e| ball.index_of(e).is_some()).collect();
        let set: HashSet<&Element> = inside.iter().copied().collect();
        let closed = inside.iter().all(|a| {
            inside.iter().all(|b| {
                let p = g.mul(a, b);
                ball.index_of(&p).is_none() || set.contains(&p)
            })
        });
        let mut elements: Vec<String> = inside.iter().map(|e| g.render(e)).collect();
        elements.sort();
        out.push(StabilizerRecord {
            model_vertex: h,
            bag,
            order: inside.len(),
            elements,
            closed,
            truncated: inside.len() < full.len(),
        });
    }
    out
}
