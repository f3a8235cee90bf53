//! Incidence and bag-size parameters, periodicity and characterization
//! checks, and the nerve of the bag covering.

use std::collections::{BTreeSet, HashMap};

use num_integer::Integer;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{set_stabilizer, translate, GlobalDecomposition, StabilizerRecord};
use crate::error::{Error, Result};
use crate::group::Element;

/// `M = max_v (number of bags containing v) - 1` over interior vertices.
pub fn edge_incidence_bound(d: &GlobalDecomposition) -> usize {
    (0..d.ball().len())
        .filter(|&v| d.is_interior(v))
        .map(|v| d.vertex_bags[v].len().saturating_sub(1))
        .max()
        .unwrap_or(0)
}

/// `M (ceil(K) - 1) + sum of component sizes`.
pub fn bag_size_bound(m: u64, k: Rational64, components: &[u64]) -> Result<u64> {
    if k < Rational64::from(1) {
        return Err(Error::Precondition(format!("K = {k} < 1")));
    }
    let ceil = k.numer().div_ceil(k.denom()) as u64;
    Ok(m * (ceil - 1) + components.iter().sum::<u64>())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub samples: usize,
    pub skipped_samples: usize,
    pub bags_checked: usize,
    pub mismatches: usize,
    pub witnesses: Vec<String>,
}

impl PeriodicityReport {
    pub fn pass(&self) -> bool {
        self.mismatches == 0 && self.bags_checked > 0
    }
}

/// For each sample `g` with `B_g(r)` inside the ball, checks that `g` maps the interior bags near the
/// identity onto bags near `g`, and back.
pub fn check_periodicity(d: &GlobalDecomposition, samples: &[Element]) -> PeriodicityReport {
    let ball = d.ball();
    let g = d.group();
    let r = d.config.r;
    let outer = ball.radius().saturating_sub(r.div_ceil(2));
    let lookup: HashMap<&[Element], usize> = d.bags.iter().enumerate().map(|(i, b)| (b.elements.as_slice(), i)).collect();
    let near = |center: usize| -> Vec<usize> {
        let dist = ball.bfs_from(center);
        let mut out: BTreeSet<usize> = BTreeSet::new();
        for v in 0..ball.len() {
            if dist[v].is_some_and(|x| x <= r) {
                out.extend(d.vertex_bags[v].iter().copied());
            }
        }
        out.into_iter().filter(|&b| !d.bags[b].boundary).collect()
    };
    let inside = |set: &[Element]| set.iter().all(|e| ball.index_of(e).is_some_and(|v| ball.distance(v) <= outer));
    let mut report = PeriodicityReport { samples: 0, skipped_samples: 0, bags_checked: 0, mismatches: 0, witnesses: Vec::new() };
    for s in samples {
        let Some(sv) = ball.index_of(s) else {
            report.skipped_samples += 1;
            continue;
        };
        if ball.distance(sv) + r > ball.radius() {
            report.skipped_samples += 1;
            continue;
        }
        report.samples += 1;
        let si = g.inverse(s);
        for (x, from) in [(s, near(0)), (&si, near(sv))] {
            for b in from {
                let image = translate(g, x, &d.bags[b].elements);
                if !inside(&image) {
                    continue;
                }
                report.bags_checked += 1;
                if !lookup.contains_key(image.as_slice()) {
                    report.mismatches += 1;
                    if report.witnesses.len() < 10 {
                        report.witnesses.push(format!("{} * bag {b} is not a bag", g.render(x)));
                    }
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VtfReport {
    /// (i): finite model graph with bounded adhesion.
    pub finite_model: bool,
    pub max_adhesion: usize,
    /// (ii): every sampled torsion element stabilizes a bag.
    pub torsion_in_bags: bool,
    pub torsion_checked: usize,
    pub torsion_failures: Vec<String>,
    /// (iii): vertex stabilizers are finite.
    pub finite_stabilizers: bool,
    pub max_stabilizer_order: usize,
}

impl VtfReport {
    pub fn pass(&self) -> bool {
        self.finite_model && self.torsion_in_bags && self.finite_stabilizers
    }
}

/// Torsion element `t` passes (ii) if `t V = V` for some complete bag `V`;
/// then `<t> v` lies in `V` for every `v` in `V`.
pub fn check_vtf_conditions(d: &GlobalDecomposition, stabilizers: &[StabilizerRecord], torsion: &[Element]) -> VtfReport {
    let g = d.group();
    let mut failures = Vec::new();
    for t in torsion {
        let ok = d.bags.iter().filter(|b| b.complete).any(|b| translate(g, t, &b.elements) == b.elements);
        if !ok {
            failures.push(g.render(t));
        }
    }
    let max_order = d
        .model_vertices
        .iter()
        .map(|v| set_stabilizer(g, &v.representative).len())
        .chain(stabilizers.iter().map(|s| s.order))
        .max()
        .unwrap_or(0);
    VtfReport {
        finite_model: !d.model_vertices.is_empty(),
        max_adhesion: d.checks.max_adhesion,
        torsion_in_bags: failures.is_empty(),
        torsion_checked: torsion.len(),
        torsion_failures: failures,
        finite_stabilizers: stabilizers.iter().all(|s| s.closed && !s.truncated),
        max_stabilizer_order: max_order,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NerveComplex {
    /// Bags taking part (those through interior vertices).
    pub vertices: Vec<usize>,
    pub maximal_simplices: Vec<Vec<usize>>,
    pub dimension: usize,
    pub components: usize,
}

impl NerveComplex {
    pub fn connected(&self) -> bool {
        self.components == 1
    }
}

/// Nerve of the covering by the bags that meet the interior: one simplex
/// per family of such bags through a common ball vertex.
pub fn build_nerve_complex(d: &GlobalDecomposition) -> NerveComplex {
    let meets: Vec<bool> = d.bags.iter().map(|b| b.vertices.iter().any(|&v| d.is_interior(v))).collect();
    let mut simplices: BTreeSet<Vec<usize>> = BTreeSet::new();
    for v in 0..d.ball().len() {
        let mut s: Vec<usize> = d.vertex_bags[v].iter().copied().filter(|&b| meets[b]).collect();
        s.sort_unstable();
        s.dedup();
        if !s.is_empty() {
            simplices.insert(s);
        }
    }
    let maximal: Vec<Vec<usize>> = simplices
        .iter()
        .filter(|s| {
            !simplices.iter().any(|t| t.len() > s.len() && s.iter().all(|x| t.binary_search(x).is_ok()))
        })
        .cloned()
        .collect();
    let vertices: Vec<usize> = simplices.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let pos: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for s in &maximal {
        for w in s.windows(2) {
            let (a, b) = (find(&mut parent, pos[&w[0]]), find(&mut parent, pos[&w[1]]));
            parent[a] = b;
        }
    }
    let components = (0..vertices.len()).filter(|&i| find(&mut parent, i) == i).count();
    NerveComplex {
        dimension: maximal.iter().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0),
        vertices,
        maximal_simplices: maximal,
        components,
    }
}
