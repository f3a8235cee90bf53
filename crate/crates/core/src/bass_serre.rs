//! Finite portions of Bass–Serre trees, Tits classification of elements
//! acting on them, and comparison with bag graphs of decompositions.
//!
//! A tree vertex is a canonical open path `g0 y1 g1 ... yn` from the base
//! vertex (see [`PathReducer::finish_vertex`]); it names the coset
//! `g0 y1 ... yn G_end`. Prefixes of a canonical path are canonical, so the
//! geodesic between two vertices runs through their longest common prefix.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cayley::CayleyBall;
use crate::decomposition::GlobalDecomposition;
use crate::error::{Error, Result};
use crate::gog::{GraphOfGroups, NormalForm, PathReducer};
use crate::group::{Element, Group};

pub const DEFAULT_TREE_CAP: usize = 1_000_000;

pub type TreePath = Vec<(u32, u32)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeVertex {
    pub path: TreePath,
    /// Vertex of the graph of groups this coset belongs to.
    pub kind: usize,
    pub depth: usize,
}

#[derive(Clone, Debug)]
pub struct BassSerreTreePortion {
    gog: GraphOfGroups,
    pub radius: usize,
    pub vertices: Vec<TreeVertex>,
    /// `(neighbor, oriented edge)` pairs; the oriented edge leaves this
    /// vertex.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    index: HashMap<TreePath, usize>,
}

/// Tree distance between canonical paths.
pub fn tree_distance(a: &[(u32, u32)], b: &[(u32, u32)]) -> usize {
    let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    a.len() + b.len() - 2 * common
}

fn step(gog: &GraphOfGroups, path: &[(u32, u32)], c: usize, y: usize) -> TreePath {
    let mut r = PathReducer::from_form(gog, &NormalForm { pairs: path.to_vec(), tail: 0 });
    r.push_elem(c);
    r.push_edge(y);
    r.finish_vertex()
}

/// The tree vertex `u_v` of kind `v` reached from the base along tree edges.
pub fn base_vertex_of(gog: &GraphOfGroups, v: usize) -> TreePath {
    gog.tree_path(v).iter().map(|&y| (0u32, y as u32)).collect()
}

impl BassSerreTreePortion {
    pub fn build(gog: &GraphOfGroups, radius: usize) -> Result<Self> {
        Self::build_with_cap(gog, radius, DEFAULT_TREE_CAP)
    }

    /// Breadth-first coset tree from the base vertex. Neighbors of a vertex
    /// of kind `v` are indexed by oriented edges `y` leaving `v` and coset
    /// representatives of `G_v / alpha_y(G_e)`.
    pub fn build_with_cap(gog: &GraphOfGroups, radius: usize, cap: usize) -> Result<Self> {
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); gog.vertex_count()];
        for y in 0..2 * gog.edge_count() {
            out_edges[gog.origin(y)].push(y);
        }
        let mut vertices = vec![TreeVertex { path: Vec::new(), kind: 0, depth: 0 }];
        let mut index = HashMap::from([(Vec::new(), 0usize)]);
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let (kind, depth) = (vertices[i].kind, vertices[i].depth);
            if depth == radius {
                continue;
            }
            let path = vertices[i].path.clone();
            for &y in &out_edges[kind] {
                for c in gog.transversal(y) {
                    let q = step(gog, &path, c, y);
                    let j = match index.get(&q) {
                        Some(&j) => j,
                        None => {
                            if vertices.len() >= cap {
                                return Err(Error::CapExceeded { what: format!("tree vertices at depth {}", depth + 1), cap });
                            }
                            let j = vertices.len();
                            vertices.push(TreeVertex { kind: gog.target(y), depth: q.len(), path: q.clone() });
                            adjacency.push(Vec::new());
                            index.insert(q, j);
                            queue.push_back(j);
                            j
                        }
                    };
                    if !adjacency[i].iter().any(|&(n, _)| n == j) {
                        adjacency[i].push((j, y));
                        adjacency[j].push((i, y ^ 1));
                    }
                }
            }
        }
        Ok(BassSerreTreePortion { gog: gog.clone(), radius, vertices, adjacency, index })
    }

    pub fn gog(&self) -> &GraphOfGroups {
        &self.gog
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, path: &[(u32, u32)]) -> Option<usize> {
        self.index.get(path).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// `sum_y [G_v : alpha_y(G_e)]` over oriented edges leaving `v`.
    pub fn expected_degree(&self, kind: usize) -> usize {
        (0..2 * self.gog.edge_count())
            .filter(|&y| self.gog.origin(y) == kind)
            .map(|y| self.gog.vertex_group(kind).order() / self.gog.edges()[y / 2].group.order())
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Vertex counts per depth.
    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.radius + 1];
        for v in &self.vertices {
            out[v.depth] += 1;
        }
        while out.len() > 1 && *out.last().unwrap() == 0 {
            out.pop();
        }
        out
    }

    /// Connected, and one edge fewer than vertices.
    pub fn is_tree(&self) -> bool {
        let mut seen = vec![false; self.len()];
        seen[0] = true;
        let mut stack = vec![0];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.len() && self.edge_count() + 1 == self.len()
    }

    pub fn act(&self, g: &NormalForm, path: &[(u32, u32)]) -> TreePath {
        self.gog.act_on_tree_vertex(g, path)
    }

    /// Readable name: syllables `label>e` / `label<e` followed by the kind.
    pub fn render_vertex(&self, path: &[(u32, u32)]) -> String {
        let mut s = String::new();
        let mut at = 0;
        for &(c, y) in path {
            let label = self.gog.vertex_group(at).label(c as usize);
            let dir = if y % 2 == 0 { '>' } else { '<' };
            let _ = write!(s, "{label}{dir}e{} ", y / 2);
            at = self.gog.target(y as usize);
        }
        s.push_str(self.gog.vertex_name(self.gog.end_vertex(path)));
        s
    }

    /// DOT graph with vertex-group orders as node labels.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph bass_serre {\n  node [shape=circle];\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(
                s,
                "  t{i} [label=\"{}\", tooltip=\"{}\"];",
                self.gog.vertex_group(v.kind).order(),
                self.render_vertex(&v.path)
            );
        }
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &(j, _) in nb {
                if i < j {
                    let _ = writeln!(s, "  t{i} -- t{j};");
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ElementAction {
    Elliptic { vertex: TreePath },
    Reflection { edge: [TreePath; 2] },
    Hyperbolic { translation_length: usize, axis: Vec<TreePath> },
}

impl ElementAction {
    pub fn name(&self) -> &'static str {
        match self {
            ElementAction::Elliptic { .. } => "elliptic",
            ElementAction::Reflection { .. } => "reflection",
            ElementAction::Hyperbolic { .. } => "hyperbolic",
        }
    }

    pub fn translation_length(&self) -> usize {
        match self {
            ElementAction::Hyperbolic { translation_length, .. } => *translation_length,
            _ => 0,
        }
    }
}

/// Radius a portion needs to classify `g`: the characteristic set of `g`
/// passes within `ceil(L/2)` of the base, where `L` is the displacement of
/// the base vertex, and one more step is needed to see two axis vertices.
pub fn required_radius(g: &NormalForm) -> usize {
    g.edge_length().div_ceil(2) + 1
}

/// Tits classification of `g` from displacements of the portion's vertices.
pub fn classify_tree_automorphism(tree: &BassSerreTreePortion, g: &NormalForm) -> Result<ElementAction> {
    let need = required_radius(g);
    if tree.radius < need {
        return Err(Error::Uncertified(format!(
            "tree portion of radius {} is too small for an element moving the base {} steps; need radius {need}",
            tree.radius,
            g.edge_length()
        )));
    }
    let disp: Vec<(usize, TreePath)> = tree
        .vertices
        .iter()
        .map(|v| {
            let img = tree.act(g, &v.path);
            (tree_distance(&v.path, &img), img)
        })
        .collect();
    let min = disp.iter().map(|d| d.0).min().expect("nonempty tree");
    if min == 0 {
        let i = disp.iter().position(|d| d.0 == 0).unwrap();
        return Ok(ElementAction::Elliptic { vertex: tree.vertices[i].path.clone() });
    }
    if min == 1 {
        for (i, (d, img)) in disp.iter().enumerate() {
            if *d == 1 && tree.act(g, img) == tree.vertices[i].path {
                let mut edge = [tree.vertices[i].path.clone(), img.clone()];
                edge.sort();
                return Ok(ElementAction::Reflection { edge });
            }
        }
    }
    let axis: Vec<usize> = (0..tree.len()).filter(|&i| disp[i].0 == min).collect();
    let consecutive = axis.iter().any(|&i| tree.adjacency[i].iter().any(|&(j, _)| disp[j].0 == min));
    if !consecutive {
        return Err(Error::Uncertified(format!(
            "displacement {min} is not attained on two adjacent vertices of the portion"
        )));
    }
    let mut axis: Vec<TreePath> = axis.into_iter().map(|i| tree.vertices[i].path.clone()).collect();
    axis.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    Ok(ElementAction::Hyperbolic { translation_length: min, axis })
}

fn normal_form(e: &Element) -> Result<&NormalForm> {
    match e {
        Element::NormalForm(nf) => Ok(nf),
        Element::Matrix(_) => Err(Error::Precondition("tree actions need a graph-of-groups element".into())),
    }
}

/// Classification of a group element of a graph-of-groups backend.
pub fn classify_element(tree: &BassSerreTreePortion, g: &Element) -> Result<ElementAction> {
    classify_tree_automorphism(tree, normal_form(g)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorsionLocation {
    pub element: String,
    pub order: usize,
    pub action: ElementAction,
    /// Kind of the fixed tree vertex and the order of its vertex group.
    pub fixed_kind: Option<usize>,
    pub fixed_group_order: Option<usize>,
    /// Bags mapped to themselves (or swapped, for a reflection).
    pub bags: Vec<usize>,
    /// Common vertices of the bags when there are two or more.
    pub adhesion: Option<Vec<usize>>,
    /// Every power of the element lies in each reported bag.
    pub contains_cyclic: bool,
}

fn translate_set(ball: &CayleyBall, g: &Element, vs: &[usize]) -> Option<Vec<usize>> {
    let mut out: Vec<usize> = vs.iter().map(|&v| ball.translate(g, v)).collect::<Option<_>>()?;
    out.sort_unstable();
    Some(out)
}

/// Places a torsion element in the decomposition: the complete bags it
/// maps to themselves, preferring bags that contain its cyclic group. Two or
/// more such bags report their common adhesion.
pub fn locate_torsion(
    decomp: &GlobalDecomposition,
    tree: &BassSerreTreePortion,
    g: &Element,
) -> Result<TorsionLocation> {
    let group = decomp.group();
    let dg = group
        .gog()
        .ok_or_else(|| Error::Precondition("decomposition is not over a graph-of-groups group".into()))?;
    let compatible = dg.vertex_count() == tree.gog.vertex_count()
        && dg.edge_count() == tree.gog.edge_count()
        && (0..dg.vertex_count()).all(|v| dg.vertex_group(v) == tree.gog.vertex_group(v));
    if !compatible {
        return Err(Error::Precondition("decomposition and tree come from different graphs of groups".into()));
    }
    let order = group
        .element_order(g, crate::finite::SUBGROUP_ORDER_CAP)
        .ok_or_else(|| Error::Precondition(format!("{} is not torsion", group.render(g))))?;
    let action = classify_element(tree, g)?;
    let (fixed_kind, fixed_group_order) = match &action {
        ElementAction::Elliptic { vertex } => {
            let k = tree.gog.end_vertex(vertex);
            (Some(k), Some(tree.gog.vertex_group(k).order()))
        }
        _ => (None, None),
    };
    let ball = decomp.ball();
    let cyclic: Vec<Option<usize>> = (0..order).map(|k| ball.index_of(&group.pow(g, k as i64))).collect();
    let by_set: HashMap<&[usize], usize> =
        decomp.bags.iter().enumerate().map(|(i, b)| (b.vertices.as_slice(), i)).collect();
    let mut bags: Vec<usize> = Vec::new();
    if let ElementAction::Reflection { .. } = action {
        for l in &decomp.links {
            let (a, b) = (&decomp.bags[l.a], &decomp.bags[l.b]);
            if a.complete && b.complete && translate_set(ball, g, &a.vertices).as_deref() == Some(&b.vertices[..]) {
                bags.extend([l.a, l.b]);
                break;
            }
        }
    } else {
        let fixed: Vec<usize> = (0..decomp.bags.len())
            .filter(|&i| {
                let b = &decomp.bags[i];
                b.complete && translate_set(ball, g, &b.vertices).and_then(|t| by_set.get(t.as_slice()).copied()) == Some(i)
            })
            .collect();
        let holding: Vec<usize> = fixed
            .iter()
            .copied()
            .filter(|&i| cyclic.iter().all(|c| c.is_some_and(|v| decomp.bags[i].vertices.binary_search(&v).is_ok())))
            .collect();
        bags = if holding.is_empty() {
            let near = |i: usize| decomp.bags[i].vertices.iter().map(|&v| ball.distance(v)).min().unwrap_or(usize::MAX);
            let best = fixed.iter().map(|&i| near(i)).min();
            fixed.into_iter().filter(|&i| Some(near(i)) == best).collect()
        } else {
            holding
        };
    }
    if bags.is_empty() {
        return Err(Error::NotFound(format!("no bag of the decomposition is invariant under {}", group.render(g))));
    }
    let contains_cyclic = bags
        .iter()
        .all(|&i| cyclic.iter().all(|c| c.is_some_and(|v| decomp.bags[i].vertices.binary_search(&v).is_ok())));
    let adhesion = (bags.len() >= 2).then(|| {
        let mut common = decomp.bags[bags[0]].vertices.clone();
        for &i in &bags[1..] {
            common.retain(|v| decomp.bags[i].vertices.binary_search(v).is_ok());
        }
        common
    });
    Ok(TorsionLocation {
        element: group.render(g),
        order,
        action,
        fixed_kind,
        fixed_group_order,
        bags,
        adhesion,
        contains_cyclic,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsomorphismReport {
    pub radius: usize,
    pub tree_vertices: usize,
    pub tree_edges: usize,
    pub bag_vertices: usize,
    pub bag_edges: usize,
    /// Root bags chosen for the base vertices `u_v`.
    pub roots: Vec<usize>,
    pub intertwining_checks: usize,
    pub pass: bool,
    pub witness: Option<String>,
}

fn bag_graph(d: &GlobalDecomposition) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); d.bags.len()];
    for l in &d.links {
        if !adj[l.a].contains(&l.b) {
            adj[l.a].push(l.b);
            adj[l.b].push(l.a);
        }
    }
    adj
}

fn bfs(adj: &[Vec<usize>], src: usize, limit: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::from([(src, 0usize)]);
    let mut queue = VecDeque::from([src]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[&v];
        if dv == limit {
            continue;
        }
        for &w in &adj[v] {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(dv + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Compares the tree portion with the bag graph of `decomp`, a
/// decomposition of a group with the same generator names as the tree's
/// group `tree_group`.
///
/// The map sends `w u_v` to `phi(w) B_v`, where `u_v` is the base vertex of
/// kind `v`, `phi` matches generators by name, `w` ranges over the Cayley
/// ball of `tree_group` of radius `word_radius`, and the root bags `B_v`
/// are chosen among bags near the identity whose stabilizer contains
/// `phi(G_v)`. The map must be well defined, injective, onto the bags
/// within `radius` of `B_0`, preserve adjacency in both directions and
/// commute with the generators.
pub fn verify_equivariant_isomorphism(
    decomp: &GlobalDecomposition,
    tree: &BassSerreTreePortion,
    tree_group: &Arc<Group>,
    radius: usize,
    word_radius: usize,
) -> Result<IsomorphismReport> {
    if radius > tree.radius {
        return Err(Error::Precondition(format!("tree portion has radius {} < {radius}", tree.radius)));
    }
    let gog = tree_group
        .gog()
        .ok_or_else(|| Error::Precondition("tree group must be a graph-of-groups group".into()))?;
    let target = decomp.group();
    let gen_map: Vec<usize> = tree_group
        .generator_names()
        .iter()
        .map(|n| target.generator_index(n).ok_or_else(|| Error::UnknownGenerator(n.clone())))
        .collect::<Result<_>>()?;
    let phi = |word: &[crate::group::Letter]| -> Element {
        let mapped: Vec<_> = word.iter().map(|l| crate::group::Letter { gen: gen_map[l.gen], inv: l.inv }).collect();
        target.eval_word(&mapped)
    };
    let words = CayleyBall::build(tree_group.clone(), word_radius, crate::cayley::DEFAULT_VERTEX_CAP)?;
    // phi on each vertex group, via words for its elements
    let elem_index: HashMap<&Element, usize> = words.vertices().iter().enumerate().map(|(i, e)| (e, i)).collect();
    let ball = decomp.ball();
    let by_set: HashMap<&[usize], usize> =
        decomp.bags.iter().enumerate().map(|(i, b)| (b.vertices.as_slice(), i)).collect();
    let nv = gog.vertex_count();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    for v in 0..nv {
        let mut images = Vec::new();
        for h in 0..gog.vertex_group(v).order() {
            let e = Element::NormalForm(gog.vertex_element(v, h)?);
            let i = elem_index.get(&e).ok_or_else(|| {
                Error::Precondition(format!("vertex group element {} lies outside the word ball", tree_group.render(&e)))
            })?;
            images.push(phi(&words.word(*i)));
        }
        let near = |i: usize| decomp.bags[i].vertices.iter().map(|&x| ball.distance(x)).min().unwrap_or(usize::MAX);
        let mut c: Vec<usize> = (0..decomp.bags.len())
            .filter(|&i| {
                let b = &decomp.bags[i];
                b.complete
                    && near(i) <= 2
                    && images.iter().all(|h| translate_set(ball, h, &b.vertices).as_deref() == Some(&b.vertices[..]))
            })
            .collect();
        c.sort_by_key(|&i| (near(i), i));
        c.truncate(8);
        if c.is_empty() {
            return Err(Error::NotFound(format!("no bag near the identity is stabilized by vertex group {v}")));
        }
        candidates.push(c);
    }
    let bag_adj = bag_graph(decomp);
    let mut last: Option<IsomorphismReport> = None;
    let mut choice = vec![0usize; nv];
    loop {
        let roots: Vec<usize> = (0..nv).map(|v| candidates[v][choice[v]]).collect();
        let distinct = roots.iter().collect::<HashSet<_>>().len() == nv;
        if distinct {
            let rep = try_roots(decomp, tree, &words, &phi, &by_set, &bag_adj, &roots, radius)?;
            if rep.pass {
                return Ok(rep);
            }
            if last.is_none() {
                last = Some(rep);
            }
        }
        // next combination
        let mut k = 0;
        loop {
            if k == nv {
                return last.ok_or_else(|| Error::NotFound("no distinct root bags for the base vertices".into()));
            }
            choice[k] += 1;
            if choice[k] < candidates[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn try_roots(
    decomp: &GlobalDecomposition,
    tree: &BassSerreTreePortion,
    words: &CayleyBall,
    phi: &dyn Fn(&[crate::group::Letter]) -> Element,
    by_set: &HashMap<&[usize], usize>,
    bag_adj: &[Vec<usize>],
    roots: &[usize],
    radius: usize,
) -> Result<IsomorphismReport> {
    let gog = tree.gog();
    let ball = decomp.ball();
    let bases: Vec<TreePath> = (0..gog.vertex_count()).map(|v| base_vertex_of(gog, v)).collect();
    let in_tree: Vec<usize> = (0..tree.len()).filter(|&i| tree.vertices[i].depth <= radius).collect();
    let mut report = IsomorphismReport {
        radius,
        tree_vertices: in_tree.len(),
        tree_edges: in_tree
            .iter()
            .map(|&i| tree.adjacency[i].iter().filter(|&&(j, _)| j > i && tree.vertices[j].depth <= radius).count())
            .sum(),
        bag_vertices: 0,
        bag_edges: 0,
        roots: roots.to_vec(),
        intertwining_checks: 0,
        pass: false,
        witness: None,
    };
    let fail = |mut r: IsomorphismReport, w: String| {
        r.witness = Some(w);
        Ok(r)
    };
    // f: tree vertex -> bag
    let mut f: HashMap<usize, usize> = HashMap::new();
    for w in 0..words.len() {
        let Element::NormalForm(nf) = words.vertex(w) else { unreachable!() };
        let image = phi(&words.word(w));
        for (v, base) in bases.iter().enumerate() {
            let p = tree.act(nf, base);
            if p.len() > radius {
                continue;
            }
            let Some(ti) = tree.index_of(&p) else {
                return fail(report, format!("vertex {} is missing from the tree portion", tree.render_vertex(&p)));
            };
            let Some(bag) = translate_set(ball, &image, &decomp.bags[roots[v]].vertices)
                .and_then(|t| by_set.get(t.as_slice()).copied())
            else {
                continue;
            };
            match f.get(&ti) {
                Some(&b) if b != bag => {
                    return fail(
                        report,
                        format!("tree vertex {} is sent to bags {b} and {bag}", tree.render_vertex(&p)),
                    )
                }
                _ => {
                    f.insert(ti, bag);
                }
            }
        }
    }
    if let Some(&i) = in_tree.iter().find(|i| !f.contains_key(i)) {
        return Err(Error::Precondition(format!(
            "tree vertex {} has no image; enlarge the word radius or the decomposition ball",
            tree.render_vertex(&tree.vertices[i].path)
        )));
    }
    let mut inverse: HashMap<usize, usize> = HashMap::new();
    for &i in &in_tree {
        if let Some(j) = inverse.insert(f[&i], i) {
            return fail(
                report,
                format!(
                    "tree vertices {} and {} share bag {}",
                    tree.render_vertex(&tree.vertices[j].path),
                    tree.render_vertex(&tree.vertices[i].path),
                    f[&i]
                ),
            );
        }
    }
    let near = bfs(bag_adj, roots[0], radius);
    report.bag_vertices = near.len();
    report.bag_edges = near
        .keys()
        .map(|&a| bag_adj[a].iter().filter(|&&b| b > a && near.contains_key(&b)).count())
        .sum();
    if let Some(b) = near.keys().copied().filter(|b| !inverse.contains_key(b)).min() {
        return fail(report, format!("bag {b} within bag distance {radius} is not the image of a tree vertex"));
    }
    if let Some(&i) = in_tree.iter().find(|i| !near.contains_key(&f[i])) {
        return fail(
            report,
            format!("tree vertex {} maps outside the bag ball", tree.render_vertex(&tree.vertices[i].path)),
        );
    }
    for &i in &in_tree {
        for &(j, _) in &tree.adjacency[i] {
            if tree.vertices[j].depth <= radius && !bag_adj[f[&i]].contains(&f[&j]) {
                return fail(
                    report,
                    format!(
                        "tree edge {} -- {} maps to non-adjacent bags {} and {}",
                        tree.render_vertex(&tree.vertices[i].path),
                        tree.render_vertex(&tree.vertices[j].path),
                        f[&i],
                        f[&j]
                    ),
                );
            }
        }
    }
    if report.tree_edges != report.bag_edges {
        return fail(
            report.clone(),
            format!("{} tree edges against {} bag links", report.tree_edges, report.bag_edges),
        );
    }
    // generator actions
    let group = words.group();
    for gi in 0..group.generator_names().len() {
        let Element::NormalForm(s) = group.generator(gi) else { unreachable!() };
        let word = [crate::group::Letter { gen: gi, inv: false }];
        let sm = phi(&word);
        for &i in &in_tree {
            let img = tree.act(s, &tree.vertices[i].path);
            let Some(ti) = tree.index_of(&img).filter(|t| tree.vertices[*t].depth <= radius) else { continue };
            let moved = translate_set(ball, &sm, &decomp.bags[f[&i]].vertices).and_then(|t| by_set.get(t.as_slice()).copied());
            report.intertwining_checks += 1;
            if moved != Some(f[&ti]) {
                return fail(
                    report,
                    format!(
                        "generator {} moves {} to {} but bag {} to {:?}",
                        group.generator_names()[gi],
                        tree.render_vertex(&tree.vertices[i].path),
                        tree.render_vertex(&img),
                        f[&i],
                        moved
                    ),
                );
            }
        }
    }
    report.pass = true;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementarityReport {
    pub non_elementary: bool,
    pub reason: String,
}

/// Some vertex branches (degree at least 3) and the last two spheres both
/// hold at least three vertices with growth between them.
pub fn is_non_elementary(tree: &BassSerreTreePortion) -> Result<ElementarityReport> {
    let spheres = tree.sphere_sizes();
    if tree.len() == 1 {
        return Ok(ElementarityReport { non_elementary: false, reason: "tree is a single vertex".into() });
    }
    if tree.radius < 2 {
        return Err(Error::Uncertified("portion needs radius at least 2".into()));
    }
    if spheres.len() <= tree.radius {
        return Ok(ElementarityReport {
            non_elementary: false,
            reason: format!("tree is finite: spheres {spheres:?}"),
        });
    }
    let max_deg = (0..tree.len()).filter(|&i| tree.vertices[i].depth < tree.radius).map(|i| tree.degree(i)).max().unwrap_or(0);
    let (a, b) = (spheres[tree.radius - 1], spheres[tree.radius]);
    let non_elementary = max_deg >= 3 && a >= 3 && b > a;
    let reason = if max_deg < 3 {
        format!("every interior vertex has degree at most {max_deg}")
    } else if non_elementary {
        format!("interior degree {max_deg}; spheres {a} -> {b} keep branching")
    } else {
        format!("spheres {a} -> {b} do not keep branching")
    };
    Ok(ElementarityReport { non_elementary, reason })
}

/// `min(n B, 2^A)`.
pub fn small_index_threshold(n: u64, b: u64, a: u32) -> Result<u128> {
    if n == 0 || b == 0 {
        return Err(Error::Precondition("n and B must be positive".into()));
    }
    let nb = n as u128 * b as u128;
    Ok(if a >= 127 { nb } else { nb.min(1u128 << a) })
}
