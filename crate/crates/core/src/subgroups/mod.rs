//! Finite quotients of graphs of finite groups, their kernels, and
//! certified free bases of those kernels.

mod cosets;
mod rewrite;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_rational::Rational64;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::cayley::{CayleyBall, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::finite::FiniteGroupTable;
use crate::gog::GraphOfGroups;
use crate::group::{Element, Group, Letter};
use crate::matrix::Matrix;

pub use cosets::{enumerate_cosets, CosetTable, DEFAULT_COSET_CAP};
pub use rewrite::{reidemeister_schreier, tietze_reduce, TietzeResult};

/// Largest target group tried by the quotient search.
/// Largest symmetric group tried as a quotient target.
pub const SYMMETRIC_DEGREE_CAP: usize = 6;

pub const TARGET_ORDER_CAP: usize = 2048;

pub fn inverse_word(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|l| l.inverse()).collect()
}

pub fn free_reduce(w: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Free and cyclic reduction.
pub fn cyclic_reduce(w: &[Letter]) -> Vec<Letter> {
    let w = free_reduce(w);
    let mut i = 0;
    let mut j = w.len();
    while j - i >= 2 && w[i] == w[j - 1].inverse() {
        i += 1;
        j -= 1;
    }
    w[i..j].to_vec()
}

/// Source of a presentation generator of a graph of groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Atom {
    /// Element `g` of vertex group `v`.
    Vertex(usize, usize),
    /// Stable letter of a non-tree edge.
    Edge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<Vec<Letter>>,
}

impl Presentation {
    pub fn render_word(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            return "1".into();
        }
        w.iter()
            .map(|l| if l.inv { format!("{}^-1", self.generators[l.gen]) } else { self.generators[l.gen].clone() })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Standard presentation of the fundamental group: generating sets of
    /// the vertex groups plus stable letters, with the Schreier relators
    /// of each vertex group and `alpha(h) t omega(h)^-1 t^-1` for
    /// generators `h` of each edge group (`t` empty on tree edges).
    pub fn of_gog(gog: &GraphOfGroups) -> (Presentation, Vec<Atom>) {
        let mut generators = Vec::new();
        let mut atoms = Vec::new();
        let mut relators: Vec<Vec<Letter>> = Vec::new();
        let mut element_words: Vec<Vec<Vec<Letter>>> = Vec::new();
        for v in 0..gog.vertex_count() {
            let t = gog.vertex_group(v);
            let gens = t.generating_set();
            let base = generators.len();
            for &s in &gens {
                generators.push(format!("v{v}.{s}"));
                atoms.push(Atom::Vertex(v, s));
            }
            let words: Vec<Vec<Letter>> = t
                .words_over(&gens)
                .into_iter()
                .map(|w| w.expect("generating set").into_iter().map(|k| Letter { gen: base + k, inv: false }).collect())
                .collect();
            for x in 0..t.order() {
                for (k, &s) in gens.iter().enumerate() {
                    let mut r = words[x].clone();
                    r.push(Letter { gen: base + k, inv: false });
                    r.extend(inverse_word(&words[t.mul(x, s)]));
                    relators.push(r);
                }
            }
            element_words.push(words);
        }
        let mut stable = vec![None; gog.edge_count()];
        for (e, edge) in gog.edges().iter().enumerate() {
            if !edge.tree {
                stable[e] = Some(generators.len());
                generators.push(format!("e{e}"));
                atoms.push(Atom::Edge(e));
            }
        }
        for (e, edge) in gog.edges().iter().enumerate() {
            for h in edge.group.generating_set() {
                let mut r = element_words[edge.from][edge.into_from[h]].clone();
                if let Some(t) = stable[e] {
                    r.push(Letter { gen: t, inv: false });
                }
                r.extend(inverse_word(&element_words[edge.to][edge.into_to[h]]));
                if let Some(t) = stable[e] {
                    r.push(Letter { gen: t, inv: true });
                }
                relators.push(r);
            }
        }
        let mut seen = HashSet::new();
        let relators = relators
            .into_iter()
            .map(|r| cyclic_reduce(&r))
            .filter(|r| !r.is_empty() && seen.insert(r.clone()))
            .collect();
        (Presentation { generators, relators }, atoms)
    }
}

/// A homomorphism from a presented group to a finite group, given by
/// images of the presentation generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteQuotientHom {
    pub target: FiniteGroupTable,
    pub target_name: String,
    pub presentation: Presentation,
    pub images: Vec<usize>,
    /// Maps of the vertex groups into the target, when built from a graph
    /// of groups.
    pub vertex_maps: Vec<Vec<usize>>,
    /// Order of the image; the index of the kernel.
    pub image_order: usize,
    pub transcript: Vec<String>,
}

fn eval_in(table: &FiniteGroupTable, images: &[usize], w: &[Letter]) -> usize {
    w.iter().fold(0, |x, l| {
        let g = images[l.gen];
        table.mul(x, if l.inv { table.inv(g) } else { g })
    })
}

impl FiniteQuotientHom {
    /// Checks every relator and computes the image order.
    pub fn new(presentation: Presentation, target: FiniteGroupTable, images: Vec<usize>, target_name: &str) -> Result<Self> {
        if images.len() != presentation.generators.len() || images.iter().any(|&x| x >= target.order()) {
            return Err(Error::Precondition("one image per generator is required".into()));
        }
        if let Some(r) = presentation.relators.iter().find(|r| eval_in(&target, &images, r) != 0) {
            return Err(Error::Precondition(format!(
                "relator {} does not map to the identity",
                presentation.render_word(r)
            )));
        }
        let image_order = target.closure(&images).len();
        Ok(FiniteQuotientHom {
            target,
            target_name: target_name.into(),
            presentation,
            images,
            vertex_maps: Vec::new(),
            image_order,
            transcript: Vec::new(),
        })
    }

    pub fn image(&self, w: &[Letter]) -> usize {
        eval_in(&self.target, &self.images, w)
    }

    pub fn is_onto(&self) -> bool {
        self.image_order == self.target.order()
    }

    /// Reduction of integer matrices mod `m`. `images` are the matrices of
    /// the presentation generators; the target is the group they generate
    /// mod `m`.
    pub fn from_matrices(presentation: Presentation, images: &[Matrix], m: u64, cap: usize) -> Result<Self> {
        let modulus = BigInt::from(m);
        let gens: Vec<Matrix> = images.iter().map(|x| x.reduce_mod(&modulus)).collect();
        let id = Matrix::identity(gens.first().map(|g| g.dim()).unwrap_or(1));
        let mut all = gens.clone();
        for g in &gens {
            all.push(g.inverse(Some(&modulus)).ok_or_else(|| Error::InvalidMatrix("not invertible mod m".into()))?);
        }
        let mut index: BTreeMap<Matrix, usize> = BTreeMap::from([(id.clone(), 0)]);
        let mut elems = vec![id];
        let mut i = 0;
        while i < elems.len() {
            for g in &all {
                let y = elems[i].mul(g).reduce_mod(&modulus);
                if !index.contains_key(&y) {
                    if elems.len() >= cap {
                        return Err(Error::CapExceeded { what: format!("matrix group mod {m}"), cap });
                    }
                    index.insert(y.clone(), elems.len());
                    elems.push(y);
                }
            }
            i += 1;
        }
        let mul: Vec<Vec<usize>> = elems
            .iter()
            .map(|a| elems.iter().map(|b| index[&a.mul(b).reduce_mod(&modulus)]).collect())
            .collect();
        let labels = elems.iter().map(|e| e.to_string()).collect();
        let target = FiniteGroupTable::from_table(mul, Some(labels))?;
        let imgs = gens.iter().map(|g| index[g]).collect();
        let mut hom = FiniteQuotientHom::new(presentation, target, imgs, &format!("matrices mod {m}"))?;
        hom.transcript.push(format!("reduction mod {m}: image of order {}", hom.image_order));
        Ok(hom)
    }
}

/// All injective homomorphisms `source -> target`, up to `limit`.
fn injective_homs(source: &FiniteGroupTable, target: &FiniteGroupTable, limit: usize) -> Vec<Vec<usize>> {
    let gens = source.generating_set();
    let words = source.words_over(&gens);
    let orders: Vec<usize> = gens.iter().map(|&s| source.element_order(s)).collect();
    let pools: Vec<Vec<usize>> = orders
        .iter()
        .map(|&o| (0..target.order()).filter(|&x| target.element_order(x) == o).collect())
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; gens.len()];
    if pools.iter().any(|p| p.is_empty()) {
        return out;
    }
    loop {
        let imgs: Vec<usize> = (0..gens.len()).map(|k| pools[k][choice[k]]).collect();
        let map: Vec<usize> = words
            .iter()
            .map(|w| w.as_ref().expect("generating set").iter().fold(0, |x, &k| target.mul(x, imgs[k])))
            .collect();
        if source.is_injective_hom(&map, target) {
            out.push(map);
            if out.len() >= limit {
                return out;
            }
        }
        let mut k = 0;
        loop {
            if k == gens.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < pools[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn conjugator(t: &FiniteGroupTable, pairs: &[(usize, usize)]) -> Option<usize> {
    (0..t.order()).find(|&c| pairs.iter().all(|&(a, b)| t.mul(t.mul(t.inv(c), a), c) == b))
}

fn assign(
    gog: &GraphOfGroups,
    target: &FiniteGroupTable,
    candidates: &[Vec<Vec<usize>>],
    maps: &mut Vec<Vec<usize>>,
) -> bool {
    let v = maps.len();
    if v == gog.vertex_count() {
        return true;
    }
    for m in &candidates[v] {
        maps.push(m.clone());
        let ok = gog.edges().iter().all(|e| {
            if e.from > v || e.to > v {
                return true;
            }
            let pairs: Vec<(usize, usize)> =
                (0..e.group.order()).map(|h| (maps[e.from][e.into_from[h]], maps[e.to][e.into_to[h]])).collect();
            if e.tree {
                pairs.iter().all(|(a, b)| a == b)
            } else {
                conjugator(target, &pairs).is_some()
            }
        });
        if ok && assign(gog, target, candidates, maps) {
            return true;
        }
        maps.pop();
    }
    false
}

/// Finite quotient injective on every vertex group. Targets are tried in
/// order: the vertex groups (largest first), direct products of two vertex
/// groups, then the product of all of them. The first target admitting
/// injective vertex maps that agree on tree edges and are conjugate across
/// non-tree edges is used.
pub fn construct_finite_quotient(gog: &GraphOfGroups) -> Result<FiniteQuotientHom> {
    let n = gog.vertex_count();
    let mut targets: Vec<(String, FiniteGroupTable)> = Vec::new();
    let mut by_order: Vec<usize> = (0..n).collect();
    by_order.sort_by_key(|&v| (std::cmp::Reverse(gog.vertex_group(v).order()), v));
    for &v in &by_order {
        targets.push((gog.vertex_name(v).to_string(), gog.vertex_group(v).clone()));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i..n {
            let (a, b) = (gog.vertex_group(i), gog.vertex_group(j));
            if a.order() * b.order() <= TARGET_ORDER_CAP {
                pairs.push((
                    a.order() * b.order(),
                    format!("{} x {}", gog.vertex_name(i), gog.vertex_name(j)),
                    FiniteGroupTable::direct_product(a, b),
                ));
            }
        }
    }
    pairs.sort_by_key(|p| p.0);
    targets.extend(pairs.into_iter().map(|(_, name, t)| (name, t)));
    if n > 2 {
        let total: usize = (0..n).map(|v| gog.vertex_group(v).order()).product();
        if total <= TARGET_ORDER_CAP {
            let t = (1..n).fold(gog.vertex_group(0).clone(), |acc, v| FiniteGroupTable::direct_product(&acc, gog.vertex_group(v)));
            let name = (0..n).map(|v| gog.vertex_name(v)).collect::<Vec<_>>().join(" x ");
            targets.push((name, t));
        }
    }
    // symmetric groups catch amalgams whose edge groups must be identified
    for k in 3..=SYMMETRIC_DEGREE_CAP {
        let mut cycle: Vec<usize> = (1..k).collect();
        cycle.push(0);
        let mut swap: Vec<usize> = (0..k).collect();
        swap.swap(0, 1);
        let (t, _) = FiniteGroupTable::from_permutations(&[swap, cycle], TARGET_ORDER_CAP)?;
        targets.push((format!("S{k}"), t));
    }
    let (presentation, atoms) = Presentation::of_gog(gog);
    let mut transcript = Vec::new();
    for (name, target) in targets {
        let candidates: Vec<Vec<Vec<usize>>> =
            (0..n).map(|v| injective_homs(gog.vertex_group(v), &target, 4096)).collect();
        if candidates.iter().any(|c| c.is_empty()) {
            transcript.push(format!("target {name} (order {}): some vertex group does not embed", target.order()));
            continue;
        }
        let mut maps = Vec::new();
        if !assign(gog, &target, &candidates, &mut maps) {
            transcript.push(format!("target {name} (order {}): no compatible embeddings", target.order()));
            continue;
        }
        let stable: Vec<usize> = gog
            .edges()
            .iter()
            .map(|e| {
                if e.tree {
                    0
                } else {
                    let pairs: Vec<(usize, usize)> =
                        (0..e.group.order()).map(|h| (maps[e.from][e.into_from[h]], maps[e.to][e.into_to[h]])).collect();
                    conjugator(&target, &pairs).expect("checked during assignment")
                }
            })
            .collect();
        let images = atoms
            .iter()
            .map(|a| match *a {
                Atom::Vertex(v, g) => maps[v][g],
                Atom::Edge(e) => stable[e],
            })
            .collect();
        let mut hom = FiniteQuotientHom::new(presentation, target, images, &name)?;
        transcript.push(format!("target {name} (order {}): image of order {}", hom.target.order(), hom.image_order));
        hom.vertex_maps = maps;
        hom.transcript = transcript;
        return Ok(hom);
    }
    Err(Error::NotFound(format!("no finite quotient injective on the vertex groups: {}", transcript.join("; "))))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubgroupCertificate {
    pub index: usize,
    /// Prefix-closed coset representatives; entry `c` represents coset `c`.
    pub transversal: Vec<Vec<Letter>>,
    /// `coset_table[c][2 i + inv]` is the coset of `c x_i^(+-1)`.
    pub coset_table: Vec<Vec<usize>>,
    pub schreier_generators: usize,
    /// Free basis words in the presentation generators, when certified.
    pub basis: Option<Vec<Vec<Letter>>>,
    pub rank: Option<usize>,
    /// Rewritten relators left after Tietze reduction.
    pub remaining_relators: usize,
    pub torsion_free: Option<bool>,
    pub torsion_witnesses: Vec<String>,
}

/// Kernel of `hom`: cosets are the image elements, reached by BFS over
/// the generator images so that representatives are prefix closed.
pub fn kernel_subgroup(hom: &FiniteQuotientHom) -> SubgroupCertificate {
    let t = &hom.target;
    let ng = hom.images.len();
    let letters: Vec<Letter> = (0..ng).flat_map(|i| [Letter { gen: i, inv: false }, Letter { gen: i, inv: true }]).collect();
    let mut coset_of = vec![usize::MAX; t.order()];
    coset_of[0] = 0;
    let mut elems = vec![0usize];
    let mut transversal: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        for &l in &letters {
            let y = t.mul(elems[c], if l.inv { t.inv(hom.images[l.gen]) } else { hom.images[l.gen] });
            if coset_of[y] == usize::MAX {
                coset_of[y] = elems.len();
                elems.push(y);
                let mut w = transversal[c].clone();
                w.push(l);
                transversal.push(w);
                queue.push_back(coset_of[y]);
            }
        }
    }
    let coset_table = elems
        .iter()
        .map(|&x| {
            letters
                .iter()
                .map(|l| coset_of[t.mul(x, if l.inv { t.inv(hom.images[l.gen]) } else { hom.images[l.gen] })])
                .collect()
        })
        .collect();
    SubgroupCertificate {
        index: elems.len(),
        transversal,
        coset_table,
        schreier_generators: 0,
        basis: None,
        rank: None,
        remaining_relators: 0,
        torsion_free: None,
        torsion_witnesses: Vec::new(),
    }
}

/// Nontrivial elements of every vertex group, as words in the
/// presentation of [`Presentation::of_gog`].
pub fn torsion_representatives(gog: &GraphOfGroups) -> Vec<(String, Vec<Letter>)> {
    let (_, atoms) = Presentation::of_gog(gog);
    let mut out = Vec::new();
    for v in 0..gog.vertex_count() {
        let t = gog.vertex_group(v);
        let gens = t.generating_set();
        let ids: Vec<usize> = gens
            .iter()
            .map(|&s| atoms.iter().position(|a| *a == Atom::Vertex(v, s)).expect("atom present"))
            .collect();
        for (x, w) in t.words_over(&gens).into_iter().enumerate().skip(1) {
            let w = w.expect("generating set").into_iter().map(|k| Letter { gen: ids[k], inv: false }).collect();
            out.push((format!("{}:{}", gog.vertex_name(v), t.label(x)), w));
        }
    }
    out
}

/// No conjugate `g t g^-1`, `g` a coset representative, of a torsion
/// representative lies in the kernel. Records the failures.
pub fn verify_torsion_free(
    hom: &FiniteQuotientHom,
    cert: &mut SubgroupCertificate,
    torsion: &[(String, Vec<Letter>)],
) -> bool {
    let mut witnesses = Vec::new();
    for (label, t) in torsion {
        for g in &cert.transversal {
            let mut w = g.clone();
            w.extend_from_slice(t);
            w.extend(inverse_word(g));
            if hom.image(&w) == 0 {
                witnesses.push(format!("{label} conjugated by {}", hom.presentation.render_word(g)));
                break;
            }
        }
    }
    cert.torsion_free = Some(witnesses.is_empty());
    cert.torsion_witnesses = witnesses;
    cert.torsion_witnesses.is_empty()
}

/// `sum_v 1/|G_v| - sum_e 1/|G_e|`.
pub fn euler_characteristic(gog: &GraphOfGroups) -> Rational64 {
    let v: Rational64 = (0..gog.vertex_count()).map(|v| Rational64::new(1, gog.vertex_group(v).order() as i64)).sum();
    let e: Rational64 = gog.edges().iter().map(|e| Rational64::new(1, e.group.order() as i64)).sum();
    v - e
}

/// Rank of a free subgroup of index `m`: `1 + m (-chi)`.
pub fn free_rank_from_euler(chi: Rational64, index: usize) -> Rational64 {
    Rational64::one() - chi * Rational64::from(index as i64)
}

/// `ceil(B / k_max)`.
pub fn index_lower_bound(b: u64, k_max: u64) -> Result<u64> {
    if b == 0 || k_max == 0 {
        return Err(Error::Precondition("B and k_max must be positive".into()));
    }
    Ok(b.div_ceil(k_max))
}

/// `(B!)^n`.
pub fn index_upper_bound(b: u64, n: u32) -> Result<BigUint> {
    if b == 0 || n == 0 {
        return Err(Error::Precondition("B and n must be positive".into()));
    }
    let fact: BigUint = (1..=b).map(BigUint::from).product();
    Ok(fact.pow(n))
}

/// `prod_v |G_v|`, the per-vertex alternative to `(B!)^n`.
pub fn vertex_order_product(gog: &GraphOfGroups) -> BigUint {
    (0..gog.vertex_count()).map(|v| BigUint::from(gog.vertex_group(v).order())).product()
}

/// Images of the presentation generators of `gog_group`'s graph of groups
/// in `target`, matching named generators: each atom is written as a word
/// in the named generators (BFS in the Cayley ball) and that word is
/// evaluated in `target`.
pub fn transport_atoms(gog_group: &std::sync::Arc<Group>, target: &Group, radius: usize) -> Result<Vec<Element>> {
    let gog = gog_group.gog().ok_or_else(|| Error::Precondition("source must be a graph-of-groups group".into()))?;
    let (pres, _) = Presentation::of_gog(gog);
    let ball = CayleyBall::build(gog_group.clone(), radius, DEFAULT_VERTEX_CAP)?;
    let gen_map: Vec<usize> = gog_group
        .generator_names()
        .iter()
        .map(|n| target.generator_index(n).ok_or_else(|| Error::UnknownGenerator(n.clone())))
        .collect::<Result<_>>()?;
    pres.generators
        .iter()
        .map(|atom| {
            let e = gog_group.parse_element(atom)?;
            let v = ball
                .index_of(&e)
                .ok_or_else(|| Error::NotFound(format!("atom {atom} is not within radius {radius}")))?;
            let word: Vec<Letter> = ball.word(v).into_iter().map(|l| Letter { gen: gen_map[l.gen], inv: l.inv }).collect();
            Ok(target.eval_word(&word))
        })
        .collect()
}

/// Distinct orders of the vertex groups, for reports.
pub fn vertex_orders(gog: &GraphOfGroups) -> Vec<usize> {
    let s: BTreeSet<usize> = (0..gog.vertex_count()).map(|v| gog.vertex_group(v).order()).collect();
    s.into_iter().collect()
}
