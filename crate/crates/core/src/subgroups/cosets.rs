//! Todd–Coxeter coset enumeration (HLT with coincidence handling).

use serde::{Deserialize, Serialize};

use super::Presentation;
use crate::error::{Error, Result};
use crate::group::Letter;

pub const DEFAULT_COSET_CAP: usize = 100_000;

/// Complete coset table; coset 0 is the subgroup. Column `2 i + inv`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetTable {
    pub table: Vec<Vec<usize>>,
    /// Cosets defined during enumeration, dead ones included.
    pub defined: usize,
}

impl CosetTable {
    pub fn index(&self) -> usize {
        self.table.len()
    }
}

fn col(l: Letter) -> usize {
    2 * l.gen + l.inv as usize
}

struct Enumerator {
    table: Vec<Vec<Option<usize>>>,
    parent: Vec<usize>,
    width: usize,
    cap: usize,
}

impl Enumerator {
    fn rep(&mut self, mut c: usize) -> usize {
        let mut root = c;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[c] != root {
            let next = self.parent[c];
            self.parent[c] = root;
            c = next;
        }
        root
    }

    fn live(&self, c: usize) -> bool {
        self.parent[c] == c
    }

    fn define(&mut self, c: usize, x: usize) -> Result<()> {
        if self.table.len() >= self.cap {
            return Err(Error::CapExceeded { what: "coset enumeration".into(), cap: self.cap });
        }
        let d = self.table.len();
        self.table.push(vec![None; self.width]);
        self.parent.push(d);
        self.table[c][x] = Some(d);
        self.table[d][x ^ 1] = Some(c);
        Ok(())
    }

    fn merge(&mut self, a: usize, b: usize, queue: &mut Vec<usize>) {
        let (a, b) = (self.rep(a), self.rep(b));
        if a == b {
            return;
        }
        let (keep, drop) = (a.min(b), a.max(b));
        self.parent[drop] = keep;
        queue.push(drop);
    }

    fn coincidence(&mut self, a: usize, b: usize) {
        let mut queue = Vec::new();
        self.merge(a, b, &mut queue);
        let mut i = 0;
        while i < queue.len() {
            let e = queue[i];
            i += 1;
            for x in 0..self.width {
                let Some(f) = self.table[e][x] else { continue };
                if self.table[f][x ^ 1] == Some(e) {
                    self.table[f][x ^ 1] = None;
                }
                let (e1, f1) = (self.rep(e), self.rep(f));
                if let Some(g) = self.table[e1][x] {
                    self.merge(f1, g, &mut queue);
                } else if let Some(g) = self.table[f1][x ^ 1] {
                    self.merge(e1, g, &mut queue);
                } else {
                    self.table[e1][x] = Some(f1);
                    self.table[f1][x ^ 1] = Some(e1);
                }
            }
        }
    }

    fn scan_and_fill(&mut self, c: usize, w: &[usize]) -> Result<()> {
        if w.is_empty() {
            return Ok(());
        }
        let (mut f, mut b) = (c, c);
        let (mut i, mut j) = (0usize, w.len() - 1);
        loop {
            while i <= j {
                match self.table[f][w[i]] {
                    Some(n) => {
                        f = n;
                        i += 1;
                    }
                    None => break,
                }
            }
            if i > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j >= i {
                match self.table[b][w[j] ^ 1] {
                    Some(n) => {
                        b = n;
                        if j == 0 {
                            // whole word scanned backwards
                            self.coincidence(f, b);
                            return Ok(());
                        }
                        j -= 1;
                    }
                    None => break,
                }
            }
            if j < i {
                self.coincidence(f, b);
                return Ok(());
            } else if i == j {
                self.table[f][w[i]] = Some(b);
                self.table[b][w[i] ^ 1] = Some(f);
                return Ok(());
            } else {
                self.define(f, w[i])?;
            }
        }
    }
}

/// Cosets of the subgroup generated by `subgroup` in the group of `pres`.
pub fn enumerate_cosets(pres: &Presentation, subgroup: &[Vec<Letter>], cap: usize) -> Result<CosetTable> {
    let width = 2 * pres.generators.len();
    let mut en = Enumerator { table: vec![vec![None; width]], parent: vec![0], width, cap };
    let rels: Vec<Vec<usize>> = pres.relators.iter().map(|r| r.iter().map(|&l| col(l)).collect()).collect();
    for w in subgroup {
        let w: Vec<usize> = w.iter().map(|&l| col(l)).collect();
        en.scan_and_fill(0, &w)?;
    }
    let mut c = 0;
    while c < en.table.len() {
        for r in &rels {
            if !en.live(c) {
                break;
            }
            en.scan_and_fill(c, r)?;
        }
        if en.live(c) {
            for x in 0..width {
                if en.table[c][x].is_none() {
                    en.define(c, x)?;
                }
            }
        }
        c += 1;
    }
    let defined = en.table.len();
    let live: Vec<usize> = (0..defined).filter(|&c| en.live(c)).collect();
    let mut number = vec![usize::MAX; defined];
    for (k, &c) in live.iter().enumerate() {
        number[c] = k;
    }
    let mut table = Vec::with_capacity(live.len());
    for &c in &live {
        let row: Vec<usize> = (0..width)
            .map(|x| {
                let t = en.table[c][x].expect("complete table");
                number[en.rep(t)]
            })
            .collect();
        table.push(row);
    }
    Ok(CosetTable { table, defined })
}
