//! Reidemeister–Schreier rewriting and Tietze elimination.

use std::collections::{BTreeSet, HashMap};

use super::{cyclic_reduce, free_reduce, inverse_word, Presentation, SubgroupCertificate};
use crate::group::Letter;

/// Relators longer than this stop the elimination.
const LENGTH_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TietzeResult {
    pub generators: Vec<usize>,
    pub relators: Vec<Vec<Letter>>,
    /// Generators removed, in order, with the words they were replaced by.
    pub eliminated: Vec<(usize, Vec<Letter>)>,
}

fn substitute(w: &[Letter], g: usize, by: &[Letter], by_inv: &[Letter]) -> Vec<Letter> {
    let mut out = Vec::with_capacity(w.len());
    for &l in w {
        if l.gen == g {
            out.extend_from_slice(if l.inv { by_inv } else { by });
        } else {
            out.push(l);
        }
    }
    free_reduce(&out)
}

/// Repeatedly removes a generator occurring exactly once in some relator,
/// solving that relator for it. Relators are kept cyclically reduced and
/// duplicates are dropped.
pub fn tietze_reduce(generators: Vec<usize>, relators: Vec<Vec<Letter>>) -> TietzeResult {
    let mut gens: BTreeSet<usize> = generators.into_iter().collect();
    let mut rels: Vec<Vec<Letter>> = relators;
    let mut eliminated: Vec<(usize, Vec<Letter>)> = Vec::new();
    loop {
        let mut seen = BTreeSet::new();
        rels = rels
            .into_iter()
            .map(|r| cyclic_reduce(&r))
            .filter(|r| !r.is_empty() && seen.insert(r.clone()))
            .collect();
        rels.sort_by_key(|r| r.len());
        let mut found = None;
        'search: for (ri, r) in rels.iter().enumerate() {
            let mut count: HashMap<usize, usize> = HashMap::new();
            for l in r {
                *count.entry(l.gen).or_default() += 1;
            }
            for (pos, l) in r.iter().enumerate() {
                if count[&l.gen] == 1 {
                    found = Some((ri, pos));
                    break 'search;
                }
            }
        }
        let Some((ri, pos)) = found else { break };
        let r = rels.swap_remove(ri);
        // rotate so that the generator comes first: g^e w = 1
        let mut rot = r[pos..].to_vec();
        rot.extend_from_slice(&r[..pos]);
        let l = rot[0];
        let w = &rot[1..];
        let value = if l.inv { w.to_vec() } else { inverse_word(w) };
        let value_inv = inverse_word(&value);
        for rel in rels.iter_mut() {
            *rel = substitute(rel, l.gen, &value, &value_inv);
        }
        for (_, v) in eliminated.iter_mut() {
            *v = substitute(v, l.gen, &value, &value_inv);
        }
        gens.remove(&l.gen);
        eliminated.push((l.gen, value));
        if rels.iter().any(|r| r.len() > LENGTH_CAP) {
            break;
        }
    }
    TietzeResult { generators: gens.into_iter().collect(), relators: rels, eliminated }
}

/// Schreier generators of the certificate's subgroup, rewritten relators,
/// and a free basis when Tietze elimination consumes every relator.
/// Schreier generator `(c, i)` is `u_c x_i u_{c x_i}^-1` and has id
/// `c * n + i`.
pub fn reidemeister_schreier(cert: &SubgroupCertificate, pres: &Presentation) -> SubgroupCertificate {
    let n = pres.generators.len();
    let index = cert.index;
    let schreier_word = |c: usize, i: usize| -> Vec<Letter> {
        let mut w = cert.transversal[c].clone();
        w.push(Letter { gen: i, inv: false });
        w.extend(inverse_word(&cert.transversal[cert.coset_table[c][2 * i]]));
        free_reduce(&w)
    };
    let trivial: Vec<bool> = (0..index * n).map(|id| schreier_word(id / n, id % n).is_empty()).collect();
    let nontrivial: Vec<usize> = (0..index * n).filter(|&id| !trivial[id]).collect();
    let mut relators = Vec::with_capacity(index * pres.relators.len());
    for c in 0..index {
        for r in &pres.relators {
            let mut cur = c;
            let mut out = Vec::with_capacity(r.len());
            for &l in r {
                if l.inv {
                    let prev = cert.coset_table[cur][2 * l.gen + 1];
                    let id = prev * n + l.gen;
                    if !trivial[id] {
                        out.push(Letter { gen: id, inv: true });
                    }
                    cur = prev;
                } else {
                    let id = cur * n + l.gen;
                    if !trivial[id] {
                        out.push(Letter { gen: id, inv: false });
                    }
                    cur = cert.coset_table[cur][2 * l.gen];
                }
            }
            debug_assert_eq!(cur, c, "relator does not lie in the subgroup");
            relators.push(out);
        }
    }
    let reduced = tietze_reduce(nontrivial.clone(), relators);
    let mut out = cert.clone();
    out.schreier_generators = nontrivial.len();
    out.remaining_relators = reduced.relators.len();
    if reduced.relators.is_empty() {
        out.basis = Some(reduced.generators.iter().map(|&id| schreier_word(id / n, id % n)).collect());
        out.rank = Some(reduced.generators.len());
    } else {
        out.basis = None;
        out.rank = None;
    }
    out
}
