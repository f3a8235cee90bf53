//! The two group backends behind one interface, and word parsing.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gog::{GraphOfGroups, NormalForm};
use crate::matrix::{Matrix, MatrixGroupSpec};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    NormalForm(NormalForm),
    Matrix(Matrix),
}

#[derive(Clone, Debug)]
pub enum Backend {
    GraphOfGroups(GraphOfGroups),
    Matrix(MatrixGroupSpec),
}

/// One letter of a word over the named generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// A finitely generated group with a solvable word problem.
#[derive(Clone, Debug)]
pub struct Group {
    name: String,
    backend: Backend,
    gen_names: Vec<String>,
    gens: Vec<Element>,
    gen_invs: Vec<Element>,
}

impl Group {
    pub fn from_gog(name: &str, gog: GraphOfGroups, generators: Vec<(String, String)>) -> Result<Self> {
        let mut g = Group {
            name: name.into(),
            backend: Backend::GraphOfGroups(gog),
            gen_names: Vec::new(),
            gens: Vec::new(),
            gen_invs: Vec::new(),
        };
        for (n, w) in generators {
            check_name(&n)?;
            let e = g.parse_element(&w)?;
            g.push_generator(n, e);
        }
        Ok(g)
    }

    pub fn from_matrices(name: &str, spec: MatrixGroupSpec) -> Result<Self> {
        let gens = spec.generators.clone();
        let mut g = Group {
            name: name.into(),
            backend: Backend::Matrix(spec),
            gen_names: Vec::new(),
            gens: Vec::new(),
            gen_invs: Vec::new(),
        };
        for (n, m) in gens {
            check_name(&n)?;
            g.push_generator(n, Element::Matrix(m));
        }
        Ok(g)
    }

    fn push_generator(&mut self, name: String, e: Element) {
        let inv = self.inverse(&e);
        self.gen_names.push(name);
        self.gens.push(e);
        self.gen_invs.push(inv);
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn gog(&self) -> Option<&GraphOfGroups> {
        match &self.backend {
            Backend::GraphOfGroups(g) => Some(g),
            Backend::Matrix(_) => None,
        }
    }

    pub fn matrix_spec(&self) -> Option<&MatrixGroupSpec> {
        match &self.backend {
            Backend::Matrix(m) => Some(m),
            Backend::GraphOfGroups(_) => None,
        }
    }

    pub fn generator_names(&self) -> &[String] {
        &self.gen_names
    }

    pub fn generator(&self, i: usize) -> &Element {
        &self.gens[i]
    }

    pub fn letter_element(&self, l: Letter) -> &Element {
        if l.inv {
            &self.gen_invs[l.gen]
        } else {
            &self.gens[l.gen]
        }
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.gen_names.iter().position(|n| n == name)
    }

    pub fn identity(&self) -> Element {
        match &self.backend {
            Backend::GraphOfGroups(_) => Element::NormalForm(NormalForm::identity()),
            Backend::Matrix(m) => Element::Matrix(Matrix::identity(m.dimension)),
        }
    }

    pub fn is_identity(&self, e: &Element) -> bool {
        match e {
            Element::NormalForm(nf) => nf.is_identity(),
            Element::Matrix(m) => m.is_identity(),
        }
    }

    fn owns(&self, e: &Element) -> bool {
        match (&self.backend, e) {
            (Backend::GraphOfGroups(_), Element::NormalForm(_)) => true,
            (Backend::Matrix(spec), Element::Matrix(m)) => m.dim() == spec.dimension,
            _ => false,
        }
    }

    /// Product with a backend check.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        if !self.owns(a) || !self.owns(b) {
            return Err(Error::BackendMismatch);
        }
        Ok(self.mul(a, b))
    }

    /// Product; panics on a backend mismatch.
    pub fn mul(&self, a: &Element, b: &Element) -> Element {
        match (&self.backend, a, b) {
            (Backend::GraphOfGroups(g), Element::NormalForm(x), Element::NormalForm(y)) => {
                Element::NormalForm(g.multiply(x, y))
            }
            (Backend::Matrix(s), Element::Matrix(x), Element::Matrix(y)) => Element::Matrix(s.multiply(x, y)),
            _ => panic!("backend mismatch"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match (&self.backend, a) {
            (Backend::GraphOfGroups(g), Element::NormalForm(x)) => Element::NormalForm(g.inverse(x)),
            (Backend::Matrix(s), Element::Matrix(x)) => Element::Matrix(s.inverse(x)),
            _ => panic!("backend mismatch"),
        }
    }

    pub fn pow(&self, a: &Element, k: i64) -> Element {
        let base = if k < 0 { self.inverse(a) } else { a.clone() };
        let mut out = self.identity();
        for _ in 0..k.unsigned_abs() {
            out = self.mul(&out, &base);
        }
        out
    }

    /// Smallest `k <= cap` with `g^k = 1`, or `None` when it exceeds the cap.
    pub fn element_order(&self, g: &Element, cap: usize) -> Option<usize> {
        let mut x = g.clone();
        for k in 1..=cap {
            if self.is_identity(&x) {
                return Some(k);
            }
            x = self.mul(&x, g);
        }
        None
    }

    pub fn eval_word(&self, word: &[Letter]) -> Element {
        let mut x = self.identity();
        for &l in word {
            x = self.mul(&x, self.letter_element(l));
        }
        x
    }

    /// Canonical string: normal-form atoms or matrix entries. Parses back to
    /// the same element.
    pub fn render(&self, e: &Element) -> String {
        match (&self.backend, e) {
            (Backend::GraphOfGroups(g), Element::NormalForm(nf)) => g.render(nf),
            (_, Element::Matrix(m)) => m.to_string(),
            _ => panic!("backend mismatch"),
        }
    }

    pub fn render_word(&self, word: &[Letter]) -> String {
        if word.is_empty() {
            return "1".into();
        }
        word.iter()
            .map(|l| {
                if l.inv {
                    format!("{}^-1", self.gen_names[l.gen])
                } else {
                    self.gen_names[l.gen].clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses a word over named generators (no atoms or literals).
    pub fn parse_word(&self, s: &str) -> Result<Vec<Letter>> {
        let ast = parse(s)?;
        let mut out = Vec::new();
        self.flatten(&ast, &mut out)?;
        Ok(out)
    }

    fn flatten(&self, items: &[Item], out: &mut Vec<Letter>) -> Result<()> {
        for item in items {
            let mut one = Vec::new();
            match &item.base {
                Base::Name(n) if n == "1" && self.generator_index("1").is_none() => {}
                Base::Name(n) => {
                    let gen = self.generator_index(n).ok_or_else(|| Error::UnknownGenerator(n.clone()))?;
                    one.push(Letter { gen, inv: false });
                }
                Base::Group(inner) => self.flatten(inner, &mut one)?,
                Base::Literal(_) => return Err(Error::BadWord("matrix literal in a word".into())),
            }
            let inv: Vec<Letter> = one.iter().rev().map(|l| l.inverse()).collect();
            let (piece, k) = if item.exp < 0 { (inv, -item.exp) } else { (one, item.exp) };
            for _ in 0..k {
                out.extend_from_slice(&piece);
            }
        }
        Ok(())
    }

    /// Parses an element: named generators, normal-form atoms `v1.2`,
    /// `e0`, matrix literals `[[0,-1],[1,0]]`, products, parentheses and
    /// integer exponents.
    pub fn parse_element(&self, s: &str) -> Result<Element> {
        let ast = parse(s)?;
        self.eval_items(&ast)
    }

    fn eval_items(&self, items: &[Item]) -> Result<Element> {
        let mut x = self.identity();
        for item in items {
            let base = match &item.base {
                Base::Group(inner) => self.eval_items(inner)?,
                Base::Name(n) => self.eval_name(n)?,
                Base::Literal(rows) => match &self.backend {
                    Backend::Matrix(spec) => {
                        let m = spec.canonical(Matrix::from_bigint_rows(rows.clone())?);
                        if m.dim() != spec.dimension || m.inverse(spec.modulus.as_ref()).is_none() {
                            return Err(Error::BadWord("matrix literal is not a group element".into()));
                        }
                        Element::Matrix(m)
                    }
                    Backend::GraphOfGroups(_) => {
                        return Err(Error::BadWord("matrix literal in a graph-of-groups word".into()))
                    }
                },
            };
            x = self.mul(&x, &self.pow(&base, item.exp));
        }
        Ok(x)
    }

    fn eval_name(&self, n: &str) -> Result<Element> {
        if let Some(i) = self.generator_index(n) {
            return Ok(self.gens[i].clone());
        }
        if n == "1" {
            return Ok(self.identity());
        }
        if let Backend::GraphOfGroups(g) = &self.backend {
            if let Some(rest) = n.strip_prefix('v') {
                if let Some((v, e)) = rest.split_once('.') {
                    if let (Ok(v), Ok(e)) = (v.parse::<usize>(), e.parse::<usize>()) {
                        return Ok(Element::NormalForm(g.vertex_element(v, e)?));
                    }
                }
            }
            if let Some(rest) = n.strip_prefix('e') {
                if let Ok(k) = rest.parse::<usize>() {
                    return Ok(Element::NormalForm(g.edge_element(k)?));
                }
            }
        }
        Err(Error::UnknownGenerator(n.into()))
    }

    /// Normal form of a word given as a string (see `parse_element`).
    pub fn normal_form(&self, word: &str) -> Result<Element> {
        self.parse_element(word)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}>", self.name, self.gen_names.join(", "))
    }
}

fn check_name(n: &str) -> Result<()> {
    let reserved = |p: char| {
        n.strip_prefix(p).map(|r| r.starts_with(|c: char| c.is_ascii_digit())).unwrap_or(false)
    };
    if n.is_empty() || n == "1" || reserved('v') || reserved('e') {
        return Err(Error::Spec(format!("generator name `{n}` is empty or reserved")));
    }
    if !n.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(Error::Spec(format!("generator name `{n}` has invalid characters")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Base {
    Name(String),
    Group(Vec<Item>),
    Literal(Vec<Vec<num_bigint::BigInt>>),
}

#[derive(Debug, Clone)]
struct Item {
    base: Base,
    exp: i64,
}

fn parse(s: &str) -> Result<Vec<Item>> {
    let chars: Vec<char> = s.chars().collect();
    let mut pos = 0;
    let items = parse_seq(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(Error::BadWord(format!("unexpected `{}` at {pos}", chars[pos])));
    }
    Ok(items)
}

fn skip_separators(c: &[char], pos: &mut usize) {
    while *pos < c.len() && (c[*pos].is_whitespace() || c[*pos] == '*' || c[*pos] == '·') {
        *pos += 1;
    }
}

fn parse_seq(c: &[char], pos: &mut usize) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    loop {
        skip_separators(c, pos);
        if *pos >= c.len() || c[*pos] == ')' {
            return Ok(items);
        }
        let base = if c[*pos] == '(' {
            *pos += 1;
            let inner = parse_seq(c, pos)?;
            if *pos >= c.len() || c[*pos] != ')' {
                return Err(Error::BadWord("unbalanced parenthesis".into()));
            }
            *pos += 1;
            Base::Group(inner)
        } else if c[*pos] == '[' {
            Base::Literal(parse_literal(c, pos)?)
        } else {
            let start = *pos;
            while *pos < c.len() && (c[*pos].is_alphanumeric() || c[*pos] == '_' || c[*pos] == '.') {
                *pos += 1;
            }
            if start == *pos {
                return Err(Error::BadWord(format!("unexpected `{}` at {start}", c[start])));
            }
            Base::Name(c[start..*pos].iter().collect())
        };
        let mut exp = 1i64;
        if *pos < c.len() && c[*pos] == '^' {
            *pos += 1;
            let start = *pos;
            if *pos < c.len() && (c[*pos] == '-' || c[*pos] == '+') {
                *pos += 1;
            }
            while *pos < c.len() && c[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let t: String = c[start..*pos].iter().collect();
            exp = t.parse().map_err(|_| Error::BadWord(format!("bad exponent `{t}`")))?;
        } else if *pos < c.len() && c[*pos] == '⁻' && c.get(*pos + 1) == Some(&'¹') {
            *pos += 2;
            exp = -1;
        }
        items.push(Item { base, exp });
    }
}

fn parse_literal(c: &[char], pos: &mut usize) -> Result<Vec<Vec<num_bigint::BigInt>>> {
    let start = *pos;
    let mut depth = 0;
    while *pos < c.len() {
        match c[*pos] {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    *pos += 1;
                    break;
                }
            }
            _ => {}
        }
        *pos += 1;
    }
    if depth != 0 {
        return Err(Error::BadWord("unbalanced matrix literal".into()));
    }
    let text: String = c[start + 1..*pos - 1].iter().collect();
    let mut rows = Vec::new();
    for row in text.split(']') {
        let row = row.trim().trim_start_matches(',').trim();
        if row.is_empty() {
            continue;
        }
        let row = row
            .strip_prefix('[')
            .ok_or_else(|| Error::BadWord(format!("bad matrix row `{row}`")))?;
        let entries = row
            .split(',')
            .map(|x| x.trim().parse::<num_bigint::BigInt>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::BadWord(format!("matrix literal: {e}")))?;
        rows.push(entries);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parser_handles_powers_and_groups() {
        let g = fixtures::sl2z_matrix();
        let a = g.parse_element("(S*T)^3").unwrap();
        let b = g.parse_element("S^2").unwrap();
        assert_eq!(a, b);
        assert_eq!(g.parse_word("(S T)^-1").unwrap(), g.parse_word("T^-1 S^-1").unwrap());
        assert!(matches!(g.parse_element("Q"), Err(Error::UnknownGenerator(_))));
        assert!(g.parse_element("(S").is_err());
    }

    #[test]
    fn matrix_literals_round_trip() {
        let g = fixtures::sl2z_matrix();
        let x = g.parse_element("S T T S^-1 T").unwrap();
        assert_eq!(g.parse_element(&g.render(&x)).unwrap(), x);
    }

    #[test]
    fn backend_mismatch_is_an_error() {
        let m = fixtures::sl2z_matrix();
        let a = fixtures::sl2z_amalgam();
        let x = a.parse_element("S").unwrap();
        assert_eq!(m.multiply(&x, &m.identity()), Err(Error::BackendMismatch));
    }
}
