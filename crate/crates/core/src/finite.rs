//! Finite groups given by multiplication tables.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the order of a table passed to subgroup enumeration.
pub const SUBGROUP_ORDER_CAP: usize = 256;

/// A finite group with elements `0..order`, identity at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroupTable {
    order: usize,
    mul: Vec<u32>,
    inv: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl FiniteGroupTable {
    /// Validates a full multiplication table. Checks closure, identity at 0,
    /// inverses and associativity.
    pub fn from_table(mul: Vec<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let order = mul.len();
        if order == 0 {
            return Err(Error::InvalidTable("empty table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for (i, row) in mul.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidTable(format!("row {i} has length {}", row.len())));
            }
            for &x in row {
                if x >= order {
                    return Err(Error::InvalidTable(format!("entry {x} out of range in row {i}")));
                }
                flat.push(x as u32);
            }
        }
        for x in 0..order {
            if flat[x] as usize != x || flat[x * order] as usize != x {
                return Err(Error::InvalidTable("index 0 is not the identity".into()));
            }
        }
        let mut inv = vec![u32::MAX; order];
        for x in 0..order {
            for y in 0..order {
                if flat[x * order + y] == 0 {
                    inv[x] = y as u32;
                    break;
                }
            }
            if inv[x] == u32::MAX {
                return Err(Error::InvalidTable(format!("element {x} has no inverse")));
            }
        }
        for a in 0..order {
            for b in 0..order {
                let ab = flat[a * order + b] as usize;
                for c in 0..order {
                    let bc = flat[b * order + c] as usize;
                    if flat[ab * order + c] != flat[a * order + bc] {
                        return Err(Error::InvalidTable(format!(
                            "not associative at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        if let Some(l) = &labels {
            if l.len() != order {
                return Err(Error::InvalidTable("label count differs from order".into()));
            }
        }
        Ok(FiniteGroupTable { order, mul: flat, inv, labels })
    }

    pub fn trivial() -> Self {
        FiniteGroupTable { order: 1, mul: vec![0], inv: vec![0], labels: None }
    }

    /// Cyclic group of order `n`; element `k` is the `k`-th power of the generator.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1);
        let mut mul = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                mul.push(((a + b) % n) as u32);
            }
        }
        let inv = (0..n).map(|a| ((n - a) % n) as u32).collect();
        FiniteGroupTable { order: n, mul, inv, labels: None }
    }

    /// The group generated by permutations of `0..degree`, elements in BFS
    /// order from the identity.
    pub fn from_permutations(gens: &[Vec<usize>], cap: usize) -> Result<(Self, Vec<Vec<usize>>)> {
        let degree = gens.first().map(|g| g.len()).unwrap_or(0);
        for g in gens {
            let mut seen = vec![false; degree];
            if g.len() != degree {
                return Err(Error::InvalidTable("permutations of different degree".into()));
            }
            for &x in g {
                if x >= degree || seen[x] {
                    return Err(Error::InvalidTable("not a permutation".into()));
                }
                seen[x] = true;
            }
        }
        let id: Vec<usize> = (0..degree).collect();
        let mut elems = vec![id.clone()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        index.insert(id, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in gens {
                let p = compose(&elems[i], g);
                if !index.contains_key(&p) {
                    if elems.len() >= cap {
                        return Err(Error::CapExceeded { what: "permutation group order".into(), cap });
                    }
                    index.insert(p.clone(), elems.len());
                    queue.push_back(elems.len());
                    elems.push(p);
                }
            }
        }
        let n = elems.len();
        let mut mul = Vec::with_capacity(n * n);
        for a in &elems {
            for b in &elems {
                mul.push(index[&compose(a, b)] as u32);
            }
        }
        let mut inv = vec![0u32; n];
        for a in 0..n {
            for b in 0..n {
                if mul[a * n + b] == 0 {
                    inv[a] = b as u32;
                }
            }
        }
        Ok((FiniteGroupTable { order: n, mul, inv, labels: None }, elems))
    }

    pub fn direct_product(a: &Self, b: &Self) -> Self {
        let n = a.order * b.order;
        let mut mul = Vec::with_capacity(n * n);
        for x in 0..n {
            let (x1, x2) = (x / b.order, x % b.order);
            for y in 0..n {
                let (y1, y2) = (y / b.order, y % b.order);
                mul.push((a.mul(x1, y1) * b.order + b.mul(x2, y2)) as u32);
            }
        }
        let inv = (0..n)
            .map(|x| (a.inv(x / b.order) * b.order + b.inv(x % b.order)) as u32)
            .collect();
        FiniteGroupTable { order: n, mul, inv, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.order {
            return Err(Error::InvalidTable("label count differs from order".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b] as usize
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, a: usize) -> String {
        match &self.labels {
            Some(l) => l[a].clone(),
            None => a.to_string(),
        }
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        (0..self.order).map(|a| (0..self.order).map(|b| self.mul(a, b)).collect()).collect()
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        let mut x = 0;
        for _ in 0..k {
            x = self.mul(x, a);
        }
        x
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Subgroup generated by `gens`, as a sorted element list.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut out = vec![0];
        let mut i = 0;
        while i < out.len() {
            let x = out[i];
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    out.push(y);
                }
            }
            i += 1;
        }
        out.sort_unstable();
        out
    }

    pub fn is_subgroup(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.order];
        for &x in set {
            if x >= self.order {
                return false;
            }
            member[x] = true;
        }
        if !member[0] {
            return false;
        }
        set.iter().all(|&a| member[self.inv(a)] && set.iter().all(|&b| member[self.mul(a, b)]))
    }

    /// A small generating set, chosen greedily by element index.
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![0usize];
        for x in 1..self.order {
            if span.binary_search(&x).is_err() {
                gens.push(x);
                span = self.closure(&gens);
            }
        }
        gens
    }

    /// Shortest word over `gens` (as indices into `gens`, positive letters
    /// only) for every element, by BFS on the right Cayley graph.
    pub fn words_over(&self, gens: &[usize]) -> Vec<Option<Vec<usize>>> {
        let mut words: Vec<Option<Vec<usize>>> = vec![None; self.order];
        words[0] = Some(Vec::new());
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (k, &g) in gens.iter().enumerate() {
                let y = self.mul(x, g);
                if words[y].is_none() {
                    let mut w = words[x].clone().unwrap();
                    w.push(k);
                    words[y] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        words
    }

    /// Checks that `map` (indexed by elements of `self`) is an injective
    /// homomorphism into `target`.
    pub fn is_injective_hom(&self, map: &[usize], target: &FiniteGroupTable) -> bool {
        if map.len() != self.order || map.iter().any(|&x| x >= target.order) {
            return false;
        }
        let distinct: BTreeSet<usize> = map.iter().copied().collect();
        if distinct.len() != self.order {
            return false;
        }
        (0..self.order).all(|a| {
            (0..self.order).all(|b| map[self.mul(a, b)] == target.mul(map[a], map[b]))
        })
    }

    /// Table of the subgroup `elems` (sorted, containing 0), relabelled
    /// `0..elems.len()` in the given order.
    pub fn subgroup_table(&self, elems: &[usize]) -> Result<Self> {
        if !self.is_subgroup(elems) {
            return Err(Error::InvalidTable("set is not a subgroup".into()));
        }
        let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let n = elems.len();
        let mut mul = Vec::with_capacity(n * n);
        for &a in elems {
            for &b in elems {
                mul.push(pos[&self.mul(a, b)] as u32);
            }
        }
        let inv = elems.iter().map(|&a| pos[&self.inv(a)] as u32).collect();
        Ok(FiniteGroupTable { order: n, mul, inv, labels: None })
    }
}

fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    // apply p then q (right action)
    p.iter().map(|&x| q[x]).collect()
}

/// All subgroups of `table`, each a sorted element list. Ordered by size,
/// then lexicographically.
pub fn enumerate_finite_subgroups(table: &FiniteGroupTable, cap: usize) -> Result<Vec<Vec<usize>>> {
    if table.order() > cap {
        return Err(Error::CapExceeded { what: "subgroup enumeration order".into(), cap });
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut frontier = vec![vec![0usize]];
    found.insert(vec![0]);
    while let Some(h) = frontier.pop() {
        let member: BTreeSet<usize> = h.iter().copied().collect();
        for g in 0..table.order() {
            if member.contains(&g) {
                continue;
            }
            let mut gens = h.clone();
            gens.push(g);
            let k = table.closure(&gens);
            if found.insert(k.clone()) {
                frontier.push(k);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = found.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}
