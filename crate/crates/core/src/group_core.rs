use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Signed 1-based generator index: `3` is the third generator, `-3` its inverse.
pub type Letter = i32;

/// Integer vector in Z^m.
pub type IntVector = Vec<i64>;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("letter {letter} out of range for rank {rank}")]
    LetterOutOfRange { letter: Letter, rank: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("shape mismatch: {0} vs {1} coordinates")]
    ShapeMismatch(usize, usize),
    #[error("unknown letter name {0:?}")]
    UnknownName(String),
    #[error("bad token {0:?}")]
    BadToken(String),
    #[error("distance exceeds search radius {0}")]
    RadiusExhausted(usize),
}

/// Freely reduced word in the free group of the given rank.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeWord {
    rank: usize,
    letters: Vec<Letter>,
}

/// Push `x` onto a reduced stack, cancelling against the top.
#[inline]
pub fn push_reduced(stack: &mut Vec<Letter>, x: Letter) {
    if stack.last() == Some(&-x) {
        stack.pop();
    } else {
        stack.push(x);
    }
}

pub fn reduce(rank: usize, letters: &[Letter]) -> Result<FreeWord, GroupError> {
    let mut out = Vec::with_capacity(letters.len());
    for &x in letters {
        if x == 0 || x.unsigned_abs() as usize > rank {
            return Err(GroupError::LetterOutOfRange { letter: x, rank });
        }
        push_reduced(&mut out, x);
    }
    Ok(FreeWord { rank, letters: out })
}

impl FreeWord {
    pub fn identity(rank: usize) -> Self {
        FreeWord { rank, letters: Vec::new() }
    }

    pub fn new(rank: usize, letters: &[Letter]) -> Result<Self, GroupError> {
        reduce(rank, letters)
    }

    /// Caller guarantees indices are in range; the result is reduced.
    pub fn from_unchecked(rank: usize, letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out = Vec::new();
        for x in letters {
            push_reduced(&mut out, x);
        }
        FreeWord { rank, letters: out }
    }

    pub fn generator(rank: usize, letter: Letter) -> Self {
        FreeWord::from_unchecked(rank, [letter])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord { rank: self.rank, letters: self.letters.iter().rev().map(|x| -x).collect() }
    }

    pub fn try_mul(&self, other: &FreeWord) -> Result<FreeWord, GroupError> {
        if self.rank != other.rank {
            return Err(GroupError::RankMismatch(self.rank, other.rank));
        }
        Ok(self.mul(other))
    }

    pub fn mul(&self, other: &FreeWord) -> FreeWord {
        debug_assert_eq!(self.rank, other.rank);
        let mut out = self.letters.clone();
        for &x in &other.letters {
            push_reduced(&mut out, x);
        }
        FreeWord { rank: self.rank, letters: out }
    }

    /// In-place right multiplication by `w` (or by its inverse).
    pub fn push_word(&mut self, w: &FreeWord, inverse: bool) {
        debug_assert_eq!(self.rank, w.rank);
        if inverse {
            for &x in w.letters.iter().rev() {
                push_reduced(&mut self.letters, -x);
            }
        } else {
            for &x in &w.letters {
                push_reduced(&mut self.letters, x);
            }
        }
    }

    pub fn pow(&self, e: i64) -> FreeWord {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut out = FreeWord::identity(self.rank);
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// Conjugate-free commutation test: in a free group two elements commute
    /// iff they are powers of a common element, equivalently uv = vu.
    pub fn commutes_with(&self, other: &FreeWord) -> bool {
        self.mul(other) == other.mul(self)
    }
}

/// Names for the letters of one free factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub names: Vec<String>,
}

impl Alphabet {
    pub fn new(names: Vec<String>) -> Self {
        Alphabet { names }
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn format(&self, w: &FreeWord) -> String {
        format_letters(w.letters(), |i| self.names[i].as_str())
    }

    pub fn parse(&self, s: &str) -> Result<FreeWord, GroupError> {
        let letters = parse_tokens(s, |name| self.index_of(name))?;
        reduce(self.rank(), &letters)
    }
}

/// Format a letter sequence as `x y^-1 x^3`, collapsing runs; identity is `e`.
pub fn format_letters<'a>(letters: &[Letter], name: impl Fn(usize) -> &'a str) -> String {
    if letters.is_empty() {
        return "e".to_string();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < letters.len() {
        let x = letters[i];
        let mut j = i;
        while j < letters.len() && letters[j] == x {
            j += 1;
        }
        let run = (j - i) as i64;
        let exp = if x > 0 { run } else { -run };
        let n = name(x.unsigned_abs() as usize - 1);
        if exp == 1 {
            parts.push(n.to_string());
        } else {
            parts.push(format!("{n}^{exp}"));
        }
        i = j;
    }
    parts.join(" ")
}

/// Parse space separated tokens `name`, `name^k` into signed letters (not reduced).
pub fn parse_tokens(
    s: &str,
    lookup: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<Letter>, GroupError> {
    let mut out = Vec::new();
    let s = s.trim();
    if s.is_empty() || s == "e" {
        return Ok(out);
    }
    for tok in s.split_whitespace() {
        if tok == "e" {
            continue;
        }
        let (name, exp) = match tok.rsplit_once('^') {
            Some((n, e)) => {
                let e: i64 = e.parse().map_err(|_| GroupError::BadToken(tok.to_string()))?;
                (n, e)
            }
            None => (tok, 1),
        };
        let idx = lookup(name).ok_or_else(|| GroupError::UnknownName(name.to_string()))?;
        let letter = (idx + 1) as Letter;
        let letter = if exp < 0 { -letter } else { letter };
        for _ in 0..exp.unsigned_abs() {
            out.push(letter);
        }
    }
    Ok(out)
}

/// Element of a direct product of free groups, one word per free component.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductElement {
    pub coords: Vec<FreeWord>,
}

impl ProductElement {
    pub fn identity(ranks: &[usize]) -> Self {
        ProductElement { coords: ranks.iter().map(|&r| FreeWord::identity(r)).collect() }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c.rank()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|c| c.is_identity())
    }

    pub fn inverse(&self) -> Self {
        ProductElement { coords: self.coords.iter().map(|c| c.inverse()).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ProductElement { coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a.mul(b)).collect() }
    }

    pub fn total_len(&self) -> usize {
        self.coords.iter().map(|c| c.len()).sum()
    }
}

fn check_shape(x: &ProductElement, y: &ProductElement) -> Result<(), GroupError> {
    if x.coords.len() != y.coords.len() {
        return Err(GroupError::ShapeMismatch(x.coords.len(), y.coords.len()));
    }
    for (a, b) in x.coords.iter().zip(&y.coords) {
        if a.rank() != b.rank() {
            return Err(GroupError::RankMismatch(a.rank(), b.rank()));
        }
    }
    Ok(())
}

pub fn multiply(x: &ProductElement, y: &ProductElement) -> Result<ProductElement, GroupError> {
    check_shape(x, y)?;
    Ok(x.mul(y))
}

pub fn invert(x: &ProductElement) -> ProductElement {
    x.inverse()
}

/// Free basis of F_rank given by words in the standard letters, with the
/// inverse substitution that rewrites standard letters as basis words.
#[derive(Clone, Debug)]
pub struct FreeBasis {
    rank: usize,
    values: Vec<FreeWord>,
    // standard letter i (0-based) as a reduced word in the basis letters
    inverse: Vec<Vec<Letter>>,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("{count} words cannot form a free basis of F_{rank}")]
    WrongCount { count: usize, rank: usize },
    #[error("words do not Nielsen-reduce to a free basis of F_{0}")]
    NotABasis(usize),
}

impl FreeBasis {
    /// Verify by Nielsen reduction that `values` is a free basis of F_rank.
    pub fn new(rank: usize, values: Vec<FreeWord>) -> Result<Self, BasisError> {
        if values.len() != rank {
            return Err(BasisError::WrongCount { count: values.len(), rank });
        }
        let n = values.len();
        let mut cur: Vec<FreeWord> = values.clone();
        // expression of cur[i] as a word in the basis letters
        let mut expr: Vec<Vec<Letter>> = (0..n).map(|i| vec![(i + 1) as Letter]).collect();
        let cat = |a: &[Letter], b: &[Letter]| -> Vec<Letter> {
            let mut out = a.to_vec();
            for &x in b {
                push_reduced(&mut out, x);
            }
            out
        };
        let inv = |a: &[Letter]| -> Vec<Letter> { a.iter().rev().map(|x| -x).collect() };
        loop {
            let mut changed = false;
            'outer: for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for eps in [1i64, -1] {
                        let v = cur[j].pow(eps);
                        let ve = if eps == 1 { expr[j].clone() } else { inv(&expr[j]) };
                        let right = cur[i].mul(&v);
                        if right.len() < cur[i].len() {
                            expr[i] = cat(&expr[i], &ve);
                            cur[i] = right;
                            changed = true;
                            break 'outer;
                        }
                        let left = v.mul(&cur[i]);
                        if left.len() < cur[i].len() {
                            expr[i] = cat(&ve, &expr[i]);
                            cur[i] = left;
                            changed = true;
                            break 'outer;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut inverse: Vec<Option<Vec<Letter>>> = vec![None; rank];
        for i in 0..n {
            if cur[i].len() != 1 {
                return Err(BasisError::NotABasis(rank));
            }
            let x = cur[i].letters()[0];
            let g = x.unsigned_abs() as usize - 1;
            if inverse[g].is_some() {
                return Err(BasisError::NotABasis(rank));
            }
            inverse[g] = Some(if x > 0 { expr[i].clone() } else { inv(&expr[i]) });
        }
        let inverse = inverse.into_iter().map(|e| e.expect("all letters covered")).collect();
        Ok(FreeBasis { rank, values, inverse })
    }

    pub fn standard(rank: usize) -> Self {
        let values = (1..=rank).map(|i| FreeWord::generator(rank, i as Letter)).collect();
        FreeBasis::new(rank, values).expect("standard basis")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn values(&self) -> &[FreeWord] {
        &self.values
    }

    /// Rewrite g as the unique reduced word in the basis letters (its geodesic).
    pub fn to_basis_word(&self, g: &FreeWord) -> Vec<Letter> {
        let mut out = Vec::with_capacity(g.len());
        for &x in g.letters() {
            let w = &self.inverse[x.unsigned_abs() as usize - 1];
            if x > 0 {
                for &y in w {
                    push_reduced(&mut out, y);
                }
            } else {
                for &y in w.iter().rev() {
                    push_reduced(&mut out, -y);
                }
            }
        }
        out
    }

    /// Evaluate a word in the basis letters back into standard letters.
    pub fn eval(&self, word: &[Letter]) -> FreeWord {
        let mut out = Vec::new();
        for &x in word {
            let v = &self.values[x.unsigned_abs() as usize - 1];
            if x > 0 {
                for &y in v.letters() {
                    push_reduced(&mut out, y);
                }
            } else {
                for &y in v.letters().iter().rev() {
                    push_reduced(&mut out, -y);
                }
            }
        }
        FreeWord { rank: self.rank, letters: out }
    }

    pub fn length(&self, g: &FreeWord) -> usize {
        self.to_basis_word(g).len()
    }
}

/// How distances in a free factor are measured.
pub enum MetricMode<'a> {
    /// Exact: the generating set is a verified free basis.
    Basis(&'a FreeBasis),
    /// Breadth-first search over an arbitrary generating set up to a radius.
    Bfs { gens: &'a [FreeWord], radius: usize },
}

pub fn word_metric(g: &FreeWord, h: &FreeWord, mode: &MetricMode) -> Result<usize, GroupError> {
    if g.rank() != h.rank() {
        return Err(GroupError::RankMismatch(g.rank(), h.rank()));
    }
    let diff = g.inverse().mul(h);
    match mode {
        MetricMode::Basis(b) => Ok(b.length(&diff)),
        MetricMode::Bfs { gens, radius } => bfs_distance(&diff, gens, *radius),
    }
}

/// Exact Cayley-graph distance from the identity to `target`, or an explicit
/// error when the radius is exhausted.
pub fn bfs_distance(target: &FreeWord, gens: &[FreeWord], radius: usize) -> Result<usize, GroupError> {
    if target.is_identity() {
        return Ok(0);
    }
    let mut steps: Vec<FreeWord> = Vec::new();
    for g in gens {
        steps.push(g.clone());
        steps.push(g.inverse());
    }
    let start = FreeWord::identity(target.rank());
    let mut seen: HashMap<FreeWord, usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        let d = seen[&x];
        if d == radius {
            continue;
        }
        for s in &steps {
            let y = x.mul(s);
            if seen.contains_key(&y) {
                continue;
            }
            if &y == target {
                return Ok(d + 1);
            }
            seen.insert(y.clone(), d + 1);
            queue.push_back(y);
        }
    }
    Err(GroupError::RadiusExhausted(radius))
}

/// Sum of coordinate distances, each in its own free basis.
pub fn product_metric(
    x: &ProductElement,
    y: &ProductElement,
    bases: &[&FreeBasis],
) -> Result<usize, GroupError> {
    check_shape(x, y)?;
    if bases.len() != x.coords.len() {
        return Err(GroupError::ShapeMismatch(bases.len(), x.coords.len()));
    }
    let mut total = 0;
    for ((a, b), basis) in x.coords.iter().zip(&y.coords).zip(bases) {
        total += word_metric(a, b, &MetricMode::Basis(basis))?;
    }
    Ok(total)
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..=self.rank).map(|i| format!("x{i}")).collect();
        write!(f, "{}", format_letters(&self.letters, |i| names[i].as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(rank: usize, l: &[Letter]) -> FreeWord {
        FreeWord::new(rank, l).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert!(w(2, &[1, -1]).is_identity());
        assert_eq!(w(2, &[1, 2, -2, 1]).letters(), &[1, 1]);
        assert!(matches!(reduce(2, &[3]), Err(GroupError::LetterOutOfRange { .. })));
    }

    #[test]
    fn product_examples() {
        let ab = Alphabet::new(vec!["a".into(), "b".into()]);
        let p = |s: &[&str]| ProductElement { coords: s.iter().map(|x| ab.parse(x).unwrap()).collect() };
        assert!(multiply(&p(&["a", "e", "e"]), &p(&["a^-1", "e", "e"])).unwrap().is_identity());
        let lhs = p(&["b a", "a^-1", "e"]);
        let rhs = multiply(&p(&["b", "e", "e"]), &p(&["a", "a^-1", "e"])).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(invert(&p(&["a", "b", "e"])), p(&["a^-1", "b^-1", "e"]));
        let std2 = FreeBasis::standard(2);
        let bases = [&std2, &std2, &std2];
        assert_eq!(product_metric(&p(&["e", "e", "e"]), &p(&["a", "a^-1", "e"]), &bases).unwrap(), 2);
        assert_eq!(product_metric(&p(&["e", "e", "e"]), &lhs, &bases).unwrap(), 3);
    }

    #[test]
    fn metric_examples() {
        let std2 = FreeBasis::standard(2);
        let e = FreeWord::identity(2);
        let g = w(2, &[1, 1, 2]);
        assert_eq!(word_metric(&e, &g, &MetricMode::Basis(&std2)).unwrap(), 3);
        assert_eq!(word_metric(&g, &g, &MetricMode::Basis(&std2)).unwrap(), 0);
        // generating set {a, ab}: aba^-1 = (ab)·a^-1, so two letters suffice
        let gens = [w(2, &[1]), w(2, &[1, 2])];
        let target = w(2, &[1, 2, -1]);
        let mode = MetricMode::Bfs { gens: &gens, radius: 4 };
        assert_eq!(word_metric(&e, &target, &mode).unwrap(), 2);
        let tight = MetricMode::Bfs { gens: &gens, radius: 1 };
        assert_eq!(word_metric(&e, &target, &tight), Err(GroupError::RadiusExhausted(1)));
    }

    #[test]
    fn nielsen_basis() {
        // {ab, b} is a basis; {a^2, b} is not
        let b = FreeBasis::new(2, vec![w(2, &[1, 2]), w(2, &[2])]).unwrap();
        let g = w(2, &[1, 1, 2]);
        let xw = b.to_basis_word(&g);
        assert_eq!(b.eval(&xw), g);
        assert_eq!(xw.len(), 3);
        assert!(FreeBasis::new(2, vec![w(2, &[1, 1]), w(2, &[2])]).is_err());
        assert!(FreeBasis::new(2, vec![w(2, &[1])]).is_err());
    }

    #[test]
    fn parse_and_format() {
        let ab = Alphabet::new(vec!["a".into(), "b".into()]);
        let g = ab.parse("a^2 b^-1 a^-1").unwrap();
        assert_eq!(ab.format(&g), "a^2 b^-1 a^-1");
        assert_eq!(ab.format(&ab.parse("e").unwrap()), "e");
        assert!(ab.parse("c").is_err());
    }

    fn letters(rank: i32, max: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((1..=rank, any::<bool>()).prop_map(|(i, s)| if s { i } else { -i }), 0..max)
    }

    proptest! {
        #[test]
        fn word_times_inverse_is_identity(l in letters(3, 40)) {
            let g = FreeWord::from_unchecked(3, l.clone());
            prop_assert!(g.mul(&g.inverse()).is_identity());
            let mut raw = l.clone();
            raw.extend(l.iter().rev().map(|x| -x));
            prop_assert!(reduce(3, &raw).unwrap().is_identity());
        }

        #[test]
        fn reduce_idempotent_and_confluent(l in letters(2, 30), cuts in prop::collection::vec(0usize..30, 0..6)) {
            let r = reduce(2, &l).unwrap();
            prop_assert_eq!(reduce(2, r.letters()).unwrap(), r.clone());
            // cancel in a different order: reduce random chunks first, then the whole
            let mut bounds: Vec<usize> = cuts.into_iter().map(|c| c.min(l.len())).collect();
            bounds.push(0);
            bounds.push(l.len());
            bounds.sort();
            let mut staged = Vec::new();
            for win in bounds.windows(2) {
                staged.extend_from_slice(reduce(2, &l[win[0]..win[1]]).unwrap().letters());
            }
            prop_assert_eq!(reduce(2, &staged).unwrap(), r);
        }

        #[test]
        fn group_axioms(a in letters(2, 20), b in letters(2, 20), c in letters(2, 20)) {
            let ranks = [2, 2];
            let mk = |l: &Vec<Letter>| ProductElement { coords: vec![FreeWord::from_unchecked(2, l.clone()), FreeWord::from_unchecked(2, l.iter().rev().cloned())] };
            let (x, y, z) = (mk(&a), mk(&b), mk(&c));
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            prop_assert_eq!(x.mul(&x.inverse()), ProductElement::identity(&ranks));
            prop_assert_eq!(x.inverse().mul(&x), ProductElement::identity(&ranks));
        }

        #[test]
        fn metric_axioms(a in letters(2, 20), b in letters(2, 20), c in letters(2, 20)) {
            let basis = FreeBasis::new(2, vec![FreeWord::new(2, &[1, 2]).unwrap(), FreeWord::new(2, &[2]).unwrap()]).unwrap();
            let mode = MetricMode::Basis(&basis);
            let (x, y, z) = (FreeWord::from_unchecked(2, a), FreeWord::from_unchecked(2, b), FreeWord::from_unchecked(2, c));
            let dxy = word_metric(&x, &y, &mode).unwrap();
            prop_assert_eq!(dxy, word_metric(&y, &x, &mode).unwrap());
            prop_assert!(word_metric(&x, &z, &mode).unwrap() <= dxy + word_metric(&y, &z, &mode).unwrap());
        }
    }
}
