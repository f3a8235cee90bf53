//! Finite graphs of finite groups and Bass–Serre normal forms in their
//! fundamental groups.
//!
//! Elements of pi1(G, v0) are stored in path form
//! `g0 y1 g1 y2 ... yn gn`: a closed path of oriented edges from the base
//! vertex, with a vertex-group element at every stop. Oriented edge `2e` runs
//! `from -> to` of edge `e`, `2e + 1` runs back. The defining relation of an
//! oriented edge `y` is `alpha_y(h) y = y omega_y(h)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::FiniteGroupTable;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GogEdge {
    pub from: usize,
    pub to: usize,
    pub group: FiniteGroupTable,
    /// Embedding of the edge group into the `from` vertex group.
    pub into_from: Vec<usize>,
    /// Embedding of the edge group into the `to` vertex group.
    pub into_to: Vec<usize>,
    pub tree: bool,
}

#[derive(Clone, Debug)]
struct Oriented {
    origin: usize,
    target: usize,
    alpha: Vec<usize>,
    omega: Vec<usize>,
    /// For each element of G_origin: index of the edge-group element it is
    /// the alpha-image of, if any.
    alpha_pre: Vec<Option<usize>>,
    /// Lowest-index representative of the left coset `g alpha(G_e)`.
    coset_rep: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GraphOfGroups {
    vertices: Vec<FiniteGroupTable>,
    vertex_names: Vec<String>,
    edges: Vec<GogEdge>,
    oriented: Vec<Oriented>,
    /// Tree path (oriented edges) from the base vertex 0 to each vertex.
    tree_paths: Vec<Vec<usize>>,
}

/// A reduced, canonical path-form element of pi1(G, v0).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NormalForm {
    /// `(coset representative, oriented edge)` syllables.
    pub pairs: Vec<(u32, u32)>,
    /// Final element of the base vertex group.
    pub tail: u32,
}

impl NormalForm {
    pub fn identity() -> Self {
        NormalForm { pairs: Vec::new(), tail: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.is_empty() && self.tail == 0
    }

    /// Number of edge letters: the distance moved in the Bass–Serre tree
    /// from the base vertex.
    pub fn edge_length(&self) -> usize {
        self.pairs.len()
    }
}

/// A path in the graph of groups being reduced left to right.
#[derive(Clone, Debug)]
pub struct PathReducer<'a> {
    gog: &'a GraphOfGroups,
    pairs: Vec<(usize, usize)>,
    tail: usize,
    cur: usize,
}

impl<'a> PathReducer<'a> {
    pub fn new(gog: &'a GraphOfGroups) -> Self {
        PathReducer { gog, pairs: Vec::new(), tail: 0, cur: 0 }
    }

    pub fn from_form(gog: &'a GraphOfGroups, nf: &NormalForm) -> Self {
        let pairs: Vec<(usize, usize)> =
            nf.pairs.iter().map(|&(g, y)| (g as usize, y as usize)).collect();
        let cur = pairs.last().map(|&(_, y)| gog.oriented[y].target).unwrap_or(0);
        PathReducer { gog, pairs, tail: nf.tail as usize, cur }
    }

    pub fn current_vertex(&self) -> usize {
        self.cur
    }

    pub fn push_elem(&mut self, g: usize) {
        self.tail = self.gog.vertices[self.cur].mul(self.tail, g);
    }

    pub fn push_edge(&mut self, y: usize) {
        let o = &self.gog.oriented[y];
        debug_assert_eq!(o.origin, self.cur);
        if let Some(&(gp, yp)) = self.pairs.last() {
            if yp == (y ^ 1) {
                if let Some(h) = o.alpha_pre[self.tail] {
                    self.pairs.pop();
                    let w = o.omega[h];
                    self.cur = o.target;
                    self.tail = self.gog.vertices[self.cur].mul(gp, w);
                    return;
                }
            }
        }
        self.pairs.push((self.tail, y));
        self.tail = 0;
        self.cur = o.target;
    }

    /// Appends a normal form (a loop at the base vertex).
    pub fn push_form(&mut self, nf: &NormalForm) {
        debug_assert_eq!(self.cur, 0);
        for &(g, y) in &nf.pairs {
            self.push_elem(g as usize);
            self.push_edge(y as usize);
        }
        self.push_elem(nf.tail as usize);
    }

    /// Canonical form of the accumulated path. Requires the path to be
    /// closed at the base vertex.
    pub fn finish(self) -> NormalForm {
        debug_assert_eq!(self.cur, 0);
        let (pairs, tail) = self.gog.canonical_pairs(self.pairs, self.tail);
        NormalForm {
            pairs: pairs.into_iter().map(|(g, y)| (g as u32, y as u32)).collect(),
            tail: tail as u32,
        }
    }

    /// Canonical syllables of an open path, discarding the final vertex
    /// element: the Bass–Serre tree vertex `path * G_end`.
    pub fn finish_vertex(self) -> Vec<(u32, u32)> {
        let (pairs, _) = self.gog.canonical_pairs(self.pairs, self.tail);
        pairs.into_iter().map(|(g, y)| (g as u32, y as u32)).collect()
    }
}

impl GraphOfGroups {
    /// Validates and indexes a graph of groups. If no edge is marked as a
    /// tree edge a BFS spanning tree from vertex 0 is chosen.
    pub fn new(
        vertices: Vec<FiniteGroupTable>,
        vertex_names: Vec<String>,
        mut edges: Vec<GogEdge>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if nv == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        if vertex_names.len() != nv {
            return Err(Error::InvalidGraph("vertex name count mismatch".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.from >= nv || e.to >= nv {
                return Err(Error::InvalidGraph(format!("edge {i} has an endpoint out of range")));
            }
            if !e.group.is_injective_hom(&e.into_from, &vertices[e.from]) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i}: embedding into vertex {} is not an injective homomorphism",
                    e.from
                )));
            }
            if !e.group.is_injective_hom(&e.into_to, &vertices[e.to]) {
                return Err(Error::InvalidGraph(format!(
                    "edge {i}: embedding into vertex {} is not an injective homomorphism",
                    e.to
                )));
            }
        }
        if !edges.iter().any(|e| e.tree) && nv > 1 {
            let mut seen = vec![false; nv];
            seen[0] = true;
            let mut queue = VecDeque::from([0usize]);
            while let Some(v) = queue.pop_front() {
                for e in edges.iter_mut() {
                    let other = if e.from == v { e.to } else if e.to == v { e.from } else { continue };
                    if !seen[other] {
                        seen[other] = true;
                        e.tree = true;
                        queue.push_back(other);
                    }
                }
            }
        }
        // tree edges must form a spanning tree
        let tree_count = edges.iter().filter(|e| e.tree).count();
        if tree_count != nv - 1 {
            return Err(Error::InvalidGraph(format!(
                "{tree_count} tree edges cannot span {nv} vertices"
            )));
        }
        let mut tree_paths: Vec<Option<Vec<usize>>> = vec![None; nv];
        tree_paths[0] = Some(Vec::new());
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for (i, e) in edges.iter().enumerate() {
                if !e.tree {
                    continue;
                }
                let (other, y) = if e.from == v {
                    (e.to, 2 * i)
                } else if e.to == v {
                    (e.from, 2 * i + 1)
                } else {
                    continue;
                };
                if tree_paths[other].is_none() {
                    let mut p = tree_paths[v].clone().unwrap();
                    p.push(y);
                    tree_paths[other] = Some(p);
                    queue.push_back(other);
                }
            }
        }
        if tree_paths.iter().any(|p| p.is_none()) {
            return Err(Error::InvalidGraph("graph is not connected by its tree edges".into()));
        }
        let tree_paths = tree_paths.into_iter().map(|p| p.unwrap()).collect();
        let mut oriented = Vec::with_capacity(2 * edges.len());
        for e in &edges {
            oriented.push(Self::orient(&vertices, e.from, e.to, &e.into_from, &e.into_to));
            oriented.push(Self::orient(&vertices, e.to, e.from, &e.into_to, &e.into_from));
        }
        Ok(GraphOfGroups { vertices, vertex_names, edges, oriented, tree_paths })
    }

    fn orient(
        vertices: &[FiniteGroupTable],
        origin: usize,
        target: usize,
        alpha: &[usize],
        omega: &[usize],
    ) -> Oriented {
        let g = &vertices[origin];
        let mut alpha_pre = vec![None; g.order()];
        for (h, &x) in alpha.iter().enumerate() {
            alpha_pre[x] = Some(h);
        }
        let coset_rep = (0..g.order())
            .map(|x| alpha.iter().map(|&a| g.mul(x, a)).min().unwrap())
            .collect();
        Oriented { origin, target, alpha: alpha.to_vec(), omega: omega.to_vec(), alpha_pre, coset_rep }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_group(&self, v: usize) -> &FiniteGroupTable {
        &self.vertices[v]
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertex_names[v]
    }

    pub fn edges(&self) -> &[GogEdge] {
        &self.edges
    }

    pub fn vertex_groups(&self) -> &[FiniteGroupTable] {
        &self.vertices
    }

    pub fn origin(&self, y: usize) -> usize {
        self.oriented[y].origin
    }

    pub fn target(&self, y: usize) -> usize {
        self.oriented[y].target
    }

    /// Representatives of `G_origin(y) / alpha_y(G_e)`, sorted.
    pub fn transversal(&self, y: usize) -> Vec<usize> {
        let mut reps: Vec<usize> = self.oriented[y].coset_rep.clone();
        reps.sort_unstable();
        reps.dedup();
        reps
    }

    pub fn coset_rep(&self, y: usize, g: usize) -> usize {
        self.oriented[y].coset_rep[g]
    }

    pub fn alpha(&self, y: usize, h: usize) -> usize {
        self.oriented[y].alpha[h]
    }

    pub fn omega(&self, y: usize, h: usize) -> usize {
        self.oriented[y].omega[h]
    }

    pub fn tree_path(&self, v: usize) -> &[usize] {
        &self.tree_paths[v]
    }

    fn canonical_pairs(&self, mut pairs: Vec<(usize, usize)>, mut tail: usize) -> (Vec<(usize, usize)>, usize) {
        for i in 0..pairs.len() {
            let (g, y) = pairs[i];
            let o = &self.oriented[y];
            let rep = o.coset_rep[g];
            let gv = &self.vertices[o.origin];
            let a = gv.mul(gv.inv(rep), g);
            let h = o.alpha_pre[a].expect("coset representative differs by an edge-group element");
            pairs[i].0 = rep;
            let carry = o.omega[h];
            let gt = &self.vertices[o.target];
            if i + 1 < pairs.len() {
                pairs[i + 1].0 = gt.mul(carry, pairs[i + 1].0);
            } else {
                tail = gt.mul(carry, tail);
            }
        }
        (pairs, tail)
    }

    /// The element of pi1(G, v0) given by vertex-group element `g` of vertex
    /// `v`, transported along the tree path.
    pub fn vertex_element(&self, v: usize, g: usize) -> Result<NormalForm> {
        if v >= self.vertices.len() || g >= self.vertices[v].order() {
            return Err(Error::BadWord(format!("no element {g} in vertex group {v}")));
        }
        let mut r = PathReducer::new(self);
        for &y in &self.tree_paths[v] {
            r.push_edge(y);
        }
        r.push_elem(g);
        for &y in self.tree_paths[v].iter().rev() {
            r.push_edge(y ^ 1);
        }
        Ok(r.finish())
    }

    /// The stable letter of edge `e`, oriented `from -> to`, closed up by
    /// tree paths. Trivial for tree edges.
    pub fn edge_element(&self, e: usize) -> Result<NormalForm> {
        if e >= self.edges.len() {
            return Err(Error::BadWord(format!("no edge {e}")));
        }
        let y = 2 * e;
        let mut r = PathReducer::new(self);
        for &z in &self.tree_paths[self.oriented[y].origin] {
            r.push_edge(z);
        }
        r.push_edge(y);
        for &z in self.tree_paths[self.oriented[y].target].iter().rev() {
            r.push_edge(z ^ 1);
        }
        Ok(r.finish())
    }

    pub fn multiply(&self, a: &NormalForm, b: &NormalForm) -> NormalForm {
        let mut r = PathReducer::from_form(self, a);
        r.push_form(b);
        r.finish()
    }

    pub fn inverse(&self, a: &NormalForm) -> NormalForm {
        // g0 y1 g1 ... yn gn  ->  gn^-1 yn' ... y1' g0^-1
        let mut r = PathReducer::new(self);
        let mut cur_elems: Vec<usize> = a.pairs.iter().map(|&(g, _)| g as usize).collect();
        cur_elems.push(a.tail as usize);
        // vertex at which each element sits
        let mut at = Vec::with_capacity(cur_elems.len());
        at.push(0);
        for &(_, y) in &a.pairs {
            at.push(self.oriented[y as usize].target);
        }
        let n = a.pairs.len();
        for i in (0..=n).rev() {
            r.push_elem(self.vertices[at[i]].inv(cur_elems[i]));
            if i > 0 {
                r.push_edge(a.pairs[i - 1].1 as usize ^ 1);
            }
        }
        r.finish()
    }

    /// Renders a normal form as a product of atoms: `v{w}.{g}` for a vertex
    /// element conjugated by its tree path, `e{k}` / `e{k}^-1` for the stable
    /// letter of a non-tree edge. Tree-edge atoms are trivial and omitted.
    pub fn render(&self, nf: &NormalForm) -> String {
        let mut atoms: Vec<String> = Vec::new();
        let mut vertex = 0;
        for &(g, y) in &nf.pairs {
            if g != 0 {
                atoms.push(format!("v{vertex}.{g}"));
            }
            let e = (y / 2) as usize;
            if !self.edges[e].tree {
                if y % 2 == 0 {
                    atoms.push(format!("e{e}"));
                } else {
                    atoms.push(format!("e{e}^-1"));
                }
            }
            vertex = self.oriented[y as usize].target;
        }
        if nf.tail != 0 {
            atoms.push(format!("v0.{}", nf.tail));
        }
        if atoms.is_empty() {
            "1".into()
        } else {
            atoms.join(" ")
        }
    }

    /// Vertex of the Bass–Serre tree reached by `g` applied to the tree
    /// vertex with path `vertex` (syllables of a canonical open path).
    pub fn act_on_tree_vertex(&self, g: &NormalForm, vertex: &[(u32, u32)]) -> Vec<(u32, u32)> {
        let mut r = PathReducer::from_form(self, g);
        for &(c, y) in vertex {
            r.push_elem(c as usize);
            r.push_edge(y as usize);
        }
        r.finish_vertex()
    }

    /// Vertex of G at the end of a tree-vertex path.
    pub fn end_vertex(&self, vertex: &[(u32, u32)]) -> usize {
        vertex.last().map(|&(_, y)| self.oriented[y as usize].target).unwrap_or(0)
    }
}
