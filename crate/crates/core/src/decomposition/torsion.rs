//! Finite subgroups generated by short torsion elements, up to conjugacy.

use std::collections::HashSet;

use crate::cayley::{finite_closure, CayleyBall};
use crate::group::Element;

/// A finite subgroup found in the ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSubgroup {
    /// Sorted element set.
    pub elements: Vec<Element>,
    /// Largest word length of an element (ball radius + 1 if outside).
    pub max_length: usize,
    /// Sum of word lengths.
    pub total_length: usize,
}

impl FiniteSubgroup {
    fn new(ball: &CayleyBall, elements: Vec<Element>) -> Self {
        let lens: Vec<usize> = elements
            .iter()
            .map(|e| ball.index_of(e).map_or(ball.radius() + 1, |v| ball.distance(v)))
            .collect();
        FiniteSubgroup { max_length: lens.iter().copied().max().unwrap_or(0), total_length: lens.iter().sum(), elements }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.elements.binary_search(e).is_ok()
    }
}

/// Nontrivial torsion elements of word length at most `max_len`, in ball
/// order.
pub fn short_torsion(ball: &CayleyBall, max_len: usize, cap: usize) -> Vec<Element> {
    let g = ball.group();
    ball.within(max_len)
        .map(|v| ball.vertex(v))
        .filter(|e| !g.is_identity(e) && g.element_order(e, cap).is_some())
        .cloned()
        .collect()
}

/// Maximal finite subgroups generated by short torsion elements: cyclic
/// groups of the torsion elements, greedily enlarged while the closure stays
/// below `cap`. Subgroups contained in others are dropped.
pub fn maximal_finite_subgroups(ball: &CayleyBall, max_len: usize, cap: usize) -> Vec<FiniteSubgroup> {
    let g = ball.group();
    let torsion = short_torsion(ball, max_len, cap);
    let mut seen: HashSet<Vec<Element>> = HashSet::new();
    let mut found: Vec<Vec<Element>> = Vec::new();
    for t in &torsion {
        let Some(mut h) = finite_closure(g, std::slice::from_ref(t), cap) else { continue };
        if !seen.insert(h.clone()) {
            continue;
        }
        let mut gens = vec![t.clone()];
        for u in &torsion {
            if h.binary_search(u).is_ok() {
                continue;
            }
            gens.push(u.clone());
            match finite_closure(g, &gens, cap) {
                Some(bigger) => h = bigger,
                None => {
                    gens.pop();
                }
            }
        }
        found.push(h);
    }
    found.sort();
    found.dedup();
    let sets: Vec<HashSet<&Element>> = found.iter().map(|h| h.iter().collect()).collect();
    let maximal: Vec<Vec<Element>> = found
        .iter()
        .enumerate()
        .filter(|(i, h)| !sets.iter().enumerate().any(|(j, s)| j != *i && s.len() > h.len() && h.iter().all(|x| s.contains(x))))
        .map(|(_, h)| h.clone())
        .collect();
    maximal.into_iter().map(|h| FiniteSubgroup::new(ball, h)).collect()
}

/// `x H x^-1`, sorted.
pub fn conjugate(ball: &CayleyBall, x: &Element, h: &[Element]) -> Vec<Element> {
    let g = ball.group();
    let xi = g.inverse(x);
    let mut out: Vec<Element> = h.iter().map(|e| g.mul(&g.mul(x, e), &xi)).collect();
    out.sort();
    out
}

/// Some ball element `x` with `x a x^-1 = b`.
pub fn find_conjugator(ball: &CayleyBall, a: &[Element], b: &[Element]) -> Option<Element> {
    if a.len() != b.len() {
        return None;
    }
    let g = ball.group();
    let target: HashSet<&Element> = b.iter().collect();
    ball.vertices().iter().find(|x| {
        let xi = g.inverse(x);
        a.iter().all(|e| target.contains(&g.mul(&g.mul(x, e), &xi)))
    }).cloned()
}

/// One subgroup per conjugacy class: least total word length, ties broken
/// by the rendered element list. Sorted by order, then that same key.
pub fn conjugacy_representatives(ball: &CayleyBall, subgroups: &[FiniteSubgroup]) -> Vec<FiniteSubgroup> {
    // ties broken by BFS discovery order, which depends only on the
    // generators and not on the backend
    let key = |h: &FiniteSubgroup| {
        let mut idx: Vec<usize> = h.elements.iter().map(|e| ball.index_of(e).unwrap_or(usize::MAX)).collect();
        idx.sort_unstable();
        (h.total_length, idx)
    };
    let mut sorted: Vec<&FiniteSubgroup> = subgroups.iter().collect();
    sorted.sort_by_cached_key(|h| key(h));
    let mut reps: Vec<FiniteSubgroup> = Vec::new();
    for h in sorted {
        if !reps.iter().any(|k| find_conjugator(ball, &k.elements, &h.elements).is_some()) {
            reps.push(h.clone());
        }
    }
    reps.sort_by_cached_key(|h| (h.order(), key(h)));
    reps
}
