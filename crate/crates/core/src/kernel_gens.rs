use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use rand::Rng;

use crate::ambient::{Ambient, Role};
use crate::group_core::{format_letters, parse_tokens, FreeWord, IntVector, Letter, ProductElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "triangle")]
    Triangle,
    #[serde(rename = "square")]
    Square,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Triangle => write!(f, "triangle"),
            Method::Square => write!(f, "square"),
        }
    }
}

/// A family of kernel generators: the letters of Y_i in one slot, or the
/// section-pair generators of one part between two slots (i < j).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Kernel(usize),
    Pair { part: usize, i: usize, j: usize },
}

impl Family {
    pub fn pair(part: usize, a: usize, b: usize) -> Family {
        Family::Pair { part, i: a.min(b), j: a.max(b) }
    }
}

#[derive(Clone, Debug)]
pub struct KernelGen {
    pub name: String,
    pub family: Family,
    /// basis index for pair generators, x letter (component, index) for kernel letters
    pub basis: usize,
    pub value: ProductElement,
    // non-trivial coordinates of the value
    sparse: Vec<(usize, FreeWord)>,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("element is not in the kernel: phi = {0:?}")]
    NotInKernel(IntVector),
    #[error("element has the wrong shape for this product")]
    Shape,
    #[error("{method} method needs {needed} slots, found {found}")]
    SlotCount { method: Method, needed: usize, found: usize },
    #[error("triangle method needs the trivial factoring (B = 0), found B of rank {0}")]
    TriangleFactoring(usize),
    #[error("unknown generator {0:?}")]
    UnknownGenerator(String),
    #[error("slot {slot}: section letter of part {part} needs a compensation slot")]
    NoCompensation { slot: usize, part: usize },
    #[error("slot {slot} is not a section coset element of part {part}")]
    NotSection { slot: usize, part: usize },
    #[error("internal check failed: {0}")]
    Internal(String),
}

/// The generating set of ker(phi) by families T/U (triangle) or T/U/V (square).
#[derive(Clone, Debug)]
pub struct KernelGenSet {
    pub ambient: Ambient,
    pub method: Method,
    pub gens: Vec<KernelGen>,
    /// sign of the lower slot of each pair family
    pair_sign: HashMap<(usize, usize, usize), i64>,
    pair_gens: HashMap<(usize, usize, usize), Vec<usize>>,
    kernel_gens: HashMap<(usize, usize), usize>,
    names: HashMap<String, usize>,
    family_labels: HashMap<Family, String>,
}

/// Word in the kernel generators: signed 1-based generator indices, not reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct KernelWord {
    pub letters: Vec<Letter>,
}

impl KernelWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        KernelWord { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> KernelWord {
        KernelWord { letters: self.letters.iter().rev().map(|x| -x).collect() }
    }

    pub fn concat(&self, other: &KernelWord) -> KernelWord {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        KernelWord { letters }
    }

    /// Free reduction as a word in the generators.
    pub fn freely_reduced(&self) -> KernelWord {
        let mut out = Vec::with_capacity(self.letters.len());
        for &x in &self.letters {
            crate::group_core::push_reduced(&mut out, x);
        }
        KernelWord { letters: out }
    }
}

/// A subgroup generated by some kernel letter families and pair families.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubgroupTag {
    /// slots whose kernel letters are included (0-based)
    pub kernel: Vec<usize>,
    /// (part, i, j) pair families with i < j (0-based slots)
    pub pairs: Vec<(usize, usize, usize)>,
}

impl SubgroupTag {
    pub fn new(mut kernel: Vec<usize>, pairs: &[(usize, usize, usize)]) -> Self {
        kernel.sort();
        kernel.dedup();
        let mut pairs: Vec<(usize, usize, usize)> = pairs.iter().map(|&(p, a, b)| (p, a.min(b), a.max(b))).collect();
        pairs.sort();
        pairs.dedup();
        SubgroupTag { kernel, pairs }
    }

    pub fn families(&self) -> BTreeSet<Family> {
        let mut out: BTreeSet<Family> = self.kernel.iter().map(|&s| Family::Kernel(s)).collect();
        out.extend(self.pairs.iter().map(|&(part, i, j)| Family::Pair { part, i, j }));
        out
    }

    /// Readable name such as `U1∪U2∪T` or `T123∪U124∪V1∪V2`.
    pub fn name(&self, method: Method) -> String {
        let mut parts = Vec::new();
        match method {
            Method::Triangle => {
                for &s in &self.kernel {
                    parts.push(format!("U{}", s + 1));
                }
                let all = [(0, 0, 1), (0, 1, 2), (0, 0, 2)];
                if all.iter().all(|p| self.pairs.contains(p)) && self.pairs.len() == 3 {
                    parts.push("T".into());
                } else {
                    for &(_, i, j) in &self.pairs {
                        parts.push(triangle_pair_label(i, j).to_string());
                    }
                }
            }
            Method::Square => {
                for (part, letter) in [(0usize, "T"), (1, "U")] {
                    let ps: Vec<(usize, usize)> =
                        self.pairs.iter().filter(|p| p.0 == part).map(|p| (p.1, p.2)).collect();
                    let verts: BTreeSet<usize> = ps.iter().flat_map(|&(i, j)| [i, j]).collect();
                    let complete = verts.len() == 3 && ps.len() == 3;
                    if complete {
                        let s: String = verts.iter().map(|v| (v + 1).to_string()).collect();
                        parts.push(format!("{letter}{s}"));
                    } else {
                        for (i, j) in ps {
                            parts.push(format!("{letter}{}{}", i + 1, j + 1));
                        }
                    }
                }
                for &s in &self.kernel {
                    parts.push(format!("V{}", s + 1));
                }
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("∪")
        }
    }
}

fn triangle_pair_label(i: usize, j: usize) -> &'static str {
    match (i, j) {
        (0, 1) => "T1",
        (1, 2) => "T2",
        (0, 2) => "T3",
        _ => unreachable!(),
    }
}

/// The seven region subgroups of the triangle method.
pub fn triangle_tags() -> Vec<SubgroupTag> {
    let t = [(0, 0, 1), (0, 1, 2), (0, 0, 2)];
    let mut out = vec![SubgroupTag::new(vec![], &t)];
    for i in 0..3 {
        out.push(SubgroupTag::new(vec![i], &t));
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(SubgroupTag::new(vec![i, j], &t));
    }
    out
}

fn triple(part: usize, s: [usize; 3]) -> Vec<(usize, usize, usize)> {
    vec![(part, s[0], s[1]), (part, s[1], s[2]), (part, s[0], s[2])]
}

/// The thirteen region subgroups of the square method (1-based notation in comments).
pub fn square_tags() -> Vec<SubgroupTag> {
    let t = |s: [usize; 3]| triple(0, s.map(|x| x - 1));
    let u = |s: [usize; 3]| triple(1, s.map(|x| x - 1));
    let mk = |mut a: Vec<(usize, usize, usize)>, b: Vec<(usize, usize, usize)>, v: &[usize]| {
        a.extend(b);
        SubgroupTag::new(v.iter().map(|x| x - 1).collect(), &a)
    };
    vec![
        mk(t([1, 3, 4]), u([2, 3, 4]), &[3, 4]),
        mk(t([1, 2, 3]), u([2, 3, 4]), &[2, 3]),
        mk(t([1, 2, 3]), u([1, 2, 4]), &[1, 2]),
        mk(t([1, 2, 4]), u([2, 3, 4]), &[2, 4]),
        mk(t([1, 2, 4]), u([1, 2, 3]), &[1, 2]),
        mk(t([1, 2, 4]), u([1, 3, 4]), &[1, 4]),
        mk(t([2, 3, 4]), u([1, 3, 4]), &[3, 4]),
        mk(t([1, 2, 3]), u([1, 3, 4]), &[1, 3]),
        mk(vec![(0, 0, 1)], u([2, 3, 4]), &[2]),
        mk(t([1, 2, 4]), vec![(1, 2, 3)], &[4]),
        mk(vec![(0, 0, 1)], u([1, 3, 4]), &[1]),
        mk(t([1, 2, 3]), vec![(1, 2, 3)], &[3]),
        mk(vec![(0, 0, 1)], vec![(1, 2, 3)], &[]),
    ]
}

impl KernelGenSet {
    fn build(ambient: Ambient, method: Method) -> Result<Self, KernelError> {
        let r = ambient.num_slots();
        let needed = match method {
            Method::Triangle => 3,
            Method::Square => 4,
        };
        if r != needed {
            return Err(KernelError::SlotCount { method, needed, found: r });
        }
        if method == Method::Triangle && ambient.factoring.part_rank(1) != 0 {
            return Err(KernelError::TriangleFactoring(ambient.factoring.part_rank(1)));
        }
        let mut set = KernelGenSet {
            ambient,
            method,
            gens: Vec::new(),
            pair_sign: HashMap::new(),
            pair_gens: HashMap::new(),
            kernel_gens: HashMap::new(),
            names: HashMap::new(),
            family_labels: HashMap::new(),
        };
        let pair_families: Vec<(usize, usize, usize, i64, String)> = match method {
            Method::Triangle => vec![
                (0, 0, 1, 1, "T1".into()),
                (0, 1, 2, 1, "T2".into()),
                (0, 0, 2, -1, "T3".into()),
            ],
            Method::Square => {
                let mut v = Vec::new();
                for (part, l) in [(0, "T"), (1, "U")] {
                    for i in 0..4 {
                        for j in i + 1..4 {
                            v.push((part, i, j, 1, format!("{l}{}{}", i + 1, j + 1)));
                        }
                    }
                }
                v
            }
        };
        let basis_letter = match method {
            Method::Triangle => ["z", "z"],
            Method::Square => ["a", "b"],
        };
        for (part, i, j, sign, label) in pair_families {
            set.pair_sign.insert((part, i, j), sign);
            set.family_labels.insert(Family::Pair { part, i, j }, label.clone());
            let mut ids = Vec::new();
            for index in 0..set.ambient.factoring.part_rank(part) {
                let mut value = set.ambient.identity();
                let mut coeff = vec![0i64; set.ambient.factoring.part_rank(part)];
                coeff[index] = sign;
                set.ambient.shift_by_section(&mut value, i, part, &coeff);
                coeff[index] = -sign;
                set.ambient.shift_by_section(&mut value, j, part, &coeff);
                let name = format!("{label}[{}{}]", basis_letter[part], index + 1);
                ids.push(set.add_gen(name, Family::Pair { part, i, j }, index, value));
            }
            set.pair_gens.insert((part, i, j), ids);
        }
        let kl = match method {
            Method::Triangle => "U",
            Method::Square => "V",
        };
        for slot in 0..r {
            set.family_labels.insert(Family::Kernel(slot), format!("{kl}{}", slot + 1));
            for &c in &set.ambient.slots[slot].clone() {
                for (xi, xl) in set.ambient.components[c].x.clone().iter().enumerate() {
                    if matches!(xl.role, Role::Section { .. }) {
                        continue;
                    }
                    let mut value = set.ambient.identity();
                    value.coords[c] = xl.value.clone();
                    if xl.role == Role::Transfer {
                        // x s(v)^-1 with s(v) = s^A(v_A) s^B(v_B)
                        let [ca, cb] = set.ambient.components[c].coeffs[xi].clone();
                        let neg = |v: &IntVector| v.iter().map(|t| -t).collect::<Vec<_>>();
                        set.ambient.shift_by_section(&mut value, slot, 1, &neg(&cb));
                        set.ambient.shift_by_section(&mut value, slot, 0, &neg(&ca));
                    }
                    let name = format!("{kl}{}[{}]", slot + 1, xl.name);
                    let id = set.add_gen(name, Family::Kernel(slot), xi, value);
                    set.kernel_gens.insert((c, xi), id);
                }
            }
        }
        for g in &set.gens {
            if !set.ambient.in_kernel(&g.value) {
                return Err(KernelError::Internal(format!("generator {} not in kernel", g.name)));
            }
        }
        Ok(set)
    }

    fn add_gen(&mut self, name: String, family: Family, basis: usize, value: ProductElement) -> usize {
        let sparse =
            value.coords.iter().enumerate().filter(|(_, w)| !w.is_identity()).map(|(c, w)| (c, w.clone())).collect();
        let id = self.gens.len();
        self.names.insert(name.clone(), id);
        self.gens.push(KernelGen { name, family, basis, value, sparse });
        id
    }

    pub fn num_slots(&self) -> usize {
        self.ambient.num_slots()
    }

    pub fn family_label(&self, f: Family) -> &str {
        &self.family_labels[&f]
    }

    pub fn families(&self) -> BTreeSet<Family> {
        self.gens.iter().map(|g| g.family).collect()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    /// Sign of the section image in slot `a` of the pair family between `a` and `b`.
    pub fn pair_sign_at(&self, part: usize, a: usize, b: usize) -> i64 {
        let (i, j) = (a.min(b), a.max(b));
        let s = self.pair_sign[&(part, i, j)];
        if a == i {
            s
        } else {
            -s
        }
    }

    pub fn pair_gen(&self, part: usize, a: usize, b: usize, index: usize) -> usize {
        self.pair_gens[&(part, a.min(b), a.max(b))][index]
    }

    pub fn kernel_gen(&self, component: usize, x_index: usize) -> usize {
        self.kernel_gens[&(component, x_index)]
    }

    pub fn letter_family(&self, x: Letter) -> Family {
        self.gens[x.unsigned_abs() as usize - 1].family
    }

    pub fn format_word(&self, w: &KernelWord) -> String {
        format_letters(&w.letters, |i| self.gens[i].name.as_str())
    }

    pub fn parse_word(&self, s: &str) -> Result<KernelWord, KernelError> {
        let letters = parse_tokens(s, |n| self.gen_index(n)).map_err(|e| match e {
            crate::group_core::GroupError::UnknownName(n) => KernelError::UnknownGenerator(n),
            other => KernelError::UnknownGenerator(other.to_string()),
        })?;
        Ok(KernelWord { letters })
    }

    /// Right-multiply x in place by the generator letter x.
    pub fn apply_letter(&self, x: &mut ProductElement, letter: Letter) {
        let g = &self.gens[letter.unsigned_abs() as usize - 1];
        for (c, w) in &g.sparse {
            x.coords[*c].push_word(w, letter < 0);
        }
    }

    pub fn apply(&self, x: &mut ProductElement, w: &KernelWord) {
        for &l in &w.letters {
            self.apply_letter(x, l);
        }
    }

    pub fn eval(&self, w: &KernelWord) -> ProductElement {
        let mut x = self.ambient.identity();
        self.apply(&mut x, w);
        x
    }

    fn check_kernel(&self, x: &ProductElement) -> Result<(), KernelError> {
        if !self.ambient.shape_ok(x) {
            return Err(KernelError::Shape);
        }
        let v = self.ambient.phi(x);
        if v.iter().any(|&a| a != 0) {
            return Err(KernelError::NotInKernel(v));
        }
        Ok(())
    }

    pub fn walker(&self, start: &ProductElement) -> Walker<'_> {
        Walker { gens: self, cur: start.clone(), word: Vec::new() }
    }

    /// Rewrite x in the kernel generators: reduce slots 1..r-1 to the identity,
    /// compensating in the last slot, then clear the last slot.
    pub fn rewrite(&self, x: &ProductElement) -> Result<KernelWord, KernelError> {
        self.check_kernel(x)?;
        let r = self.num_slots();
        let e = self.ambient.identity();
        let mut w = self.walker(x);
        for p in 0..r - 1 {
            w.move_to(p, &e, [Some(r - 1), Some(r - 1)])?;
        }
        // separate compensation slots per part, so each only receives
        // commuting section letters whose exponents cancel
        w.move_to(r - 1, &e, [Some(r - 2), Some(r - 3)])?;
        if !w.cur.is_identity() {
            return Err(KernelError::Internal("rewrite did not reach the identity".into()));
        }
        Ok(KernelWord { letters: w.word }.inverse())
    }

    /// Word over the tag's generators evaluating to x, built by clearing the
    /// tag's kernel-letter slots and then balancing section shifts along pairs.
    pub fn membership_witness(&self, tag: &SubgroupTag, x: &ProductElement) -> Result<KernelWord, Membership> {
        self.check_kernel(x).map_err(Membership::Error)?;
        let r = self.num_slots();
        let e = self.ambient.identity();
        let mut w = self.walker(x);
        let has = |part: usize, a: usize, b: usize| tag.pairs.contains(&(part, a.min(b), a.max(b)));
        for &v in &tag.kernel {
            let mut comp = [None, None];
            for (part, slot) in comp.iter_mut().enumerate() {
                *slot = (0..r).find(|&q| !tag.kernel.contains(&q) && q != v && has(part, v, q));
            }
            match w.move_to(v, &e, comp) {
                Ok(()) => {}
                Err(KernelError::NoCompensation { slot, part }) => {
                    return Err(Membership::NotMember(format!(
                        "slot {} needs part {} section letters outside the tag",
                        slot + 1,
                        part + 1
                    )))
                }
                Err(err) => return Err(Membership::Error(err)),
            }
        }
        // remaining slots: pure section cosets of the single part touching them
        let others: Vec<usize> = (0..r).filter(|s| !tag.kernel.contains(s)).collect();
        let mut touched: HashMap<usize, Vec<usize>> = HashMap::new();
        for &s in &others {
            let parts: Vec<usize> =
                (0..2).filter(|&p| others.iter().any(|&q| q != s && has(p, s, q))).collect();
            if parts.len() > 1 {
                return Err(Membership::Error(KernelError::Internal(format!(
                    "slot {} is touched by both parts; unsupported tag",
                    s + 1
                ))));
            }
            if parts.is_empty() {
                if !self.ambient.restrict(&w.cur, s).is_identity() {
                    return Err(Membership::NotMember(format!("slot {} must be trivial", s + 1)));
                }
                continue;
            }
            touched.entry(parts[0]).or_default().push(s);
        }
        let mut parts: Vec<usize> = touched.keys().copied().collect();
        parts.sort();
        for part in parts {
            let slots = &touched[&part];
            let mut coeff: HashMap<usize, IntVector> = HashMap::new();
            for &s in slots {
                let g = self.ambient.restrict(&w.cur, s);
                match self.ambient.section_coeffs(s, part, &g) {
                    Some(c) => {
                        coeff.insert(s, c);
                    }
                    None => {
                        return Err(Membership::NotMember(format!(
                            "slot {} is not in the image of section {}",
                            s + 1,
                            part + 1
                        )))
                    }
                }
            }
            // spanning forest by BFS from the smallest slot of each component
            let mut seen: BTreeSet<usize> = BTreeSet::new();
            for &root in slots {
                if seen.contains(&root) {
                    continue;
                }
                let mut order = vec![root];
                let mut parent: HashMap<usize, usize> = HashMap::new();
                seen.insert(root);
                let mut k = 0;
                while k < order.len() {
                    let a = order[k];
                    for &b in slots {
                        if !seen.contains(&b) && has(part, a, b) {
                            seen.insert(b);
                            parent.insert(b, a);
                            order.push(b);
                        }
                    }
                    k += 1;
                }
                for &leaf in order.iter().skip(1).rev() {
                    let c = coeff[&leaf].clone();
                    let neg: IntVector = c.iter().map(|v| -v).collect();
                    let p = parent[&leaf];
                    w.restore(part, leaf, p, &neg);
                    let pc = coeff.get_mut(&p).unwrap();
                    for (a, b) in pc.iter_mut().zip(&c) {
                        *a += b;
                    }
                }
                if coeff[&root].iter().any(|&v| v != 0) {
                    return Err(Membership::NotMember(format!(
                        "section shifts of part {} do not balance at slot {}",
                        part + 1,
                        root + 1
                    )));
                }
            }
        }
        if !w.cur.is_identity() {
            return Err(Membership::NotMember("residual element after clearing".into()));
        }
        let word = KernelWord { letters: w.word }.inverse();
        debug_assert_eq!(&self.eval(&word), x);
        Ok(word)
    }

    /// Edge-closure helper: x · w == y.
    pub fn connects(&self, x: &ProductElement, w: &KernelWord, y: &ProductElement) -> bool {
        let mut z = x.clone();
        self.apply(&mut z, w);
        &z == y
    }

    pub fn word_families(&self, w: &KernelWord) -> BTreeSet<Family> {
        w.letters.iter().map(|&l| self.letter_family(l)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    NotMember(String),
    Error(KernelError),
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Membership::NotMember(s) => write!(f, "not a member: {s}"),
            Membership::Error(e) => write!(f, "{e}"),
        }
    }
}

pub fn build_triangle_gens(ambient: Ambient) -> Result<KernelGenSet, KernelError> {
    KernelGenSet::build(ambient, Method::Triangle)
}

pub fn build_square_gens(ambient: Ambient) -> Result<KernelGenSet, KernelError> {
    KernelGenSet::build(ambient, Method::Square)
}

pub fn build_gens(ambient: Ambient) -> Result<KernelGenSet, KernelError> {
    match ambient.num_slots() {
        3 => build_triangle_gens(ambient),
        4 => build_square_gens(ambient),
        n => Err(KernelError::SlotCount { method: Method::Triangle, needed: 3, found: n }),
    }
}

pub fn eval_kernel_word(gens: &KernelGenSet, w: &KernelWord) -> ProductElement {
    gens.eval(w)
}

pub fn rewrite_in_kernel_gens(gens: &KernelGenSet, x: &ProductElement) -> Result<KernelWord, KernelError> {
    gens.rewrite(x)
}

pub fn subgroup_membership_witness(
    gens: &KernelGenSet,
    tag: &SubgroupTag,
    x: &ProductElement,
) -> Result<KernelWord, Membership> {
    gens.membership_witness(tag, x)
}

/// Proven bound on rewrite length relative to the summed slot lengths: every
/// x letter of slots 1..r-1 is emitted once, and each of their section letters
/// reappears at most once in the last slot.
pub const REWRITE_CONSTANT: usize = 2;

/// Builds a path of kernel generators from a start vertex, tracking the current vertex.
pub struct Walker<'a> {
    pub gens: &'a KernelGenSet,
    pub cur: ProductElement,
    pub word: Vec<Letter>,
}

impl<'a> Walker<'a> {
    pub fn push(&mut self, gen: usize, e: i64) {
        let l = (gen + 1) as Letter;
        let l = if e < 0 { -l } else { l };
        for _ in 0..e.unsigned_abs() {
            self.gens.apply_letter(&mut self.cur, l);
            self.word.push(l);
        }
    }

    pub fn take_word(&mut self) -> KernelWord {
        KernelWord { letters: std::mem::take(&mut self.word) }
    }

    /// Move slot p to the target's slot p along its x-geodesic: kernel letters
    /// become kernel generators, section letters of each part become pair
    /// generators compensating in slot comp[part], and a transfer letter x with
    /// image v becomes x s(v)^-1 followed by the section steps of v.
    pub fn move_to(&mut self, p: usize, target: &ProductElement, comp: [Option<usize>; 2]) -> Result<(), KernelError> {
        self.walk_slot(p, target, |w, part, index, eps| {
            let q = comp[part].ok_or(KernelError::NoCompensation { slot: p, part })?;
            let g = w.gens.pair_gen(part, p, q, index);
            w.push(g, eps * w.gens.pair_sign_at(part, p, q));
            Ok(())
        })
    }

    /// Walk slot p along its x-geodesic to the target, emitting kernel and
    /// transfer generators directly and handing each unit section step
    /// (part, index, sign) to `step`.
    fn walk_slot(
        &mut self,
        p: usize,
        target: &ProductElement,
        mut step: impl FnMut(&mut Self, usize, usize, i64) -> Result<(), KernelError>,
    ) -> Result<(), KernelError> {
        let amb = &self.gens.ambient;
        for &c in &amb.slots[p] {
            let comp_def = &amb.components[c];
            let diff = self.cur.coords[c].inverse().mul(&target.coords[c]);
            let xw = comp_def.x_word(&diff);
            for x in xw {
                let xi = x.unsigned_abs() as usize - 1;
                let eps: i64 = if x > 0 { 1 } else { -1 };
                match comp_def.x[xi].role {
                    Role::Kernel => {
                        let g = self.gens.kernel_gen(c, xi);
                        self.push(g, eps);
                    }
                    Role::Section { part, index } => step(self, part, index, eps)?,
                    Role::Transfer => {
                        let g = self.gens.kernel_gen(c, xi);
                        let coeffs = &comp_def.coeffs[xi];
                        // x = (x s(v)^-1) s^A(v_A) s^B(v_B)
                        let order: [usize; 2] = if eps > 0 { [0, 1] } else { [1, 0] };
                        if eps > 0 {
                            self.push(g, 1);
                        }
                        for part in order {
                            for (index, &v) in coeffs[part].iter().enumerate() {
                                for _ in 0..v.unsigned_abs() {
                                    step(self, part, index, eps * v.signum())?;
                                }
                            }
                        }
                        if eps < 0 {
                            self.push(g, -1);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Like `move_to` with one part, but each section letter compensates in
    /// slot `r` when that brings slot r closer to `restore_to`'s slot r, else
    /// in slot `p`; the remaining shift of slot r is then settled along (r, p).
    pub fn move_with_restore(
        &mut self,
        q: usize,
        target: &ProductElement,
        p: usize,
        r: usize,
        restore_to: &ProductElement,
    ) -> Result<(), KernelError> {
        let amb = &self.gens.ambient;
        let part = 0;
        let need_r = amb.restrict(&self.cur, r).inverse().mul(&amb.restrict(restore_to, r));
        let mut need = amb.section_coeffs(r, part, &need_r).ok_or(KernelError::NotSection { slot: r, part })?;
        self.walk_slot(q, target, |w, pt, index, eps| {
            debug_assert_eq!(pt, part);
            // compensating in r shifts slot r by -eps in this coordinate
            let toward = need[index] != 0 && need[index].signum() == -eps;
            let other = if toward { r } else { p };
            if toward {
                need[index] += eps;
            }
            let g = w.gens.pair_gen(part, q, other, index);
            w.push(g, eps * w.gens.pair_sign_at(part, q, other));
            Ok(())
        })?;
        self.restore(part, r, p, &need);
        Ok(())
    }

    /// Shift slot a by s^part(coeffs) and slot b by the opposite, via pair (a, b).
    pub fn restore(&mut self, part: usize, a: usize, b: usize, coeffs: &[i64]) {
        let s = self.gens.pair_sign_at(part, a, b);
        for (index, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                let g = self.gens.pair_gen(part, a, b, index);
                self.push(g, c * s);
            }
        }
    }
}

/// Random kernel element: a random product element with the last slot
/// corrected by a section power so that phi vanishes.
pub fn random_kernel_element(gens: &KernelGenSet, rng: &mut impl Rng, max_len: usize) -> ProductElement {
    let amb = &gens.ambient;
    let mut x = amb.identity();
    for (c, comp) in amb.components.iter().enumerate() {
        let len = rng.gen_range(0..=max_len);
        let letters: Vec<Letter> = (0..len)
            .map(|_| {
                let i = rng.gen_range(1..=comp.rank() as i32);
                if rng.gen_bool(0.5) {
                    i
                } else {
                    -i
                }
            })
            .collect();
        x.coords[c] = FreeWord::from_unchecked(comp.rank(), letters);
    }
    let last = amb.num_slots() - 1;
    let v = amb.phi(&x);
    let (a, b) = amb.factoring.split(&v);
    amb.shift_by_section(&mut x, last, 0, &a.iter().map(|t| -t).collect::<Vec<_>>());
    amb.shift_by_section(&mut x, last, 1, &b.iter().map(|t| -t).collect::<Vec<_>>());
    assert!(amb.in_kernel(&x));
    x
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ambient::{simple_component, AmbientRepr, SlotRepr, AMBIENT_SCHEMA};
    use crate::homs::Factoring;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn sb3_ambient() -> Ambient {
        let slots = (1..=3)
            .map(|i| SlotRepr {
                components: vec![simple_component(&[&format!("a{i}"), &format!("b{i}")], vec![vec![1, 0]])],
            })
            .collect();
        Ambient::from_repr(&AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: 1, factoring: Factoring::whole(1), slots })
            .unwrap()
    }

    pub fn d4_ambient() -> Ambient {
        let slots = (1..=4)
            .map(|i| SlotRepr {
                components: vec![simple_component(&[&format!("a{i}"), &format!("b{i}")], vec![vec![1, 0], vec![0, 1]])],
            })
            .collect();
        let factoring = Factoring::new(vec![vec![1, 0]], vec![vec![0, 1]]).unwrap();
        Ambient::from_repr(&AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: 2, factoring, slots }).unwrap()
    }

    pub fn sb3() -> KernelGenSet {
        build_triangle_gens(sb3_ambient()).unwrap()
    }

    pub fn d4() -> KernelGenSet {
        build_square_gens(d4_ambient()).unwrap()
    }

    pub fn random_kernel(gens: &KernelGenSet, rng: &mut impl Rng, max_len: usize) -> ProductElement {
        random_kernel_element(gens, rng, max_len)
    }

    #[test]
    fn sb3_generators() {
        let g = sb3();
        let amb = &g.ambient;
        let show = |n: &str| amb.format(&g.gens[g.gen_index(n).unwrap()].value);
        assert_eq!(show("T1[z1]"), "a1 | a2^-1 | e");
        assert_eq!(show("T2[z1]"), "e | a2 | a3^-1");
        assert_eq!(show("T3[z1]"), "a1^-1 | e | a3");
        assert_eq!(show("U1[b1]"), "b1 | e | e");
        assert_eq!(show("U3[b3]"), "e | e | b3");
        assert_eq!(g.gens.len(), 6);
    }

    #[test]
    fn d4_generators() {
        let g = d4();
        let amb = &g.ambient;
        let show = |n: &str| amb.format(&g.gens[g.gen_index(n).unwrap()].value);
        assert_eq!(show("T12[a1]"), "a1 | a2^-1 | e | e");
        assert_eq!(show("U34[b1]"), "e | e | b3 | b4^-1");
        assert_eq!(g.gens.len(), 12);
        assert!(g.gens.iter().all(|x| amb.phi(&x.value) == vec![0, 0]));
    }

    #[test]
    fn mismatched_factoring_is_rejected() {
        // slot 4 maps b to (1,1): its section letter cannot hit the B basis vector
        let mut repr = d4_ambient().to_repr();
        repr.slots[3].components[0].phi = vec![vec![1, 1], vec![0, 1]];
        repr.slots[3].components[0].x = None;
        assert!(Ambient::from_repr(&repr).is_err());
    }

    #[test]
    fn eval_and_rewrite_examples() {
        let g = sb3();
        let amb = &g.ambient;
        let w = g.parse_word("U1[b1] T1[z1]").unwrap();
        assert_eq!(amb.format(&g.eval(&w)), "b1 a1 | a2^-1 | e");
        assert!(g.eval(&KernelWord::default()).is_identity());
        assert!(g.eval(&g.parse_word("T1[z1] T1[z1]^-1").unwrap()).is_identity());
        let x = amb.parse("b1 | e | e").unwrap();
        assert_eq!(g.format_word(&g.rewrite(&x).unwrap()), "U1[b1]");
        let x = amb.parse("b1 a1 | a2^-1 | e").unwrap();
        assert_eq!(g.eval(&g.rewrite(&x).unwrap()), x);
        let x = amb.parse("a1 | e | a3^-1").unwrap();
        assert_eq!(g.format_word(&g.rewrite(&x).unwrap()), "T3[z1]^-1");
        let bad = amb.parse("a1 | e | e").unwrap();
        assert!(matches!(g.rewrite(&bad), Err(KernelError::NotInKernel(_))));
    }

    #[test]
    fn membership_examples() {
        let g = sb3();
        let amb = &g.ambient;
        let tags = triangle_tags();
        let t = &tags[0];
        let x = amb.parse("a1 | a2^-1 | e").unwrap();
        assert_eq!(g.format_word(&g.membership_witness(t, &x).unwrap()), "T1[z1]");
        let u3 = &tags[3];
        assert_eq!(u3.name(Method::Triangle), "U3∪T");
        let x = amb.parse("b1 | e | e").unwrap();
        assert!(matches!(g.membership_witness(u3, &x), Err(Membership::NotMember(_))));
        let u12 = &tags[4];
        assert_eq!(u12.name(Method::Triangle), "U1∪U2∪T");
        let x = amb.parse("b1 | b2 | e").unwrap();
        assert_eq!(g.format_word(&g.membership_witness(u12, &x).unwrap()), "U2[b2] U1[b1]");
    }

    #[test]
    fn square_tag_names() {
        let names: Vec<String> = square_tags().iter().map(|t| t.name(Method::Square)).collect();
        assert_eq!(names[0], "T134∪U234∪V3∪V4");
        assert_eq!(names[12], "T12∪U34");
        assert_eq!(names.len(), 13);
    }

    #[test]
    fn kernel_meets_section_trivially() {
        let g = sb3();
        for k in 1..5 {
            let x = g.ambient.parse(&format!("a1^{k} | e | e")).unwrap();
            assert!(g.rewrite(&x).is_err());
        }
    }

    #[test]
    fn rewrite_round_trip_and_constant() {
        for gens in [sb3(), d4()] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut worst = 0f64;
            for _ in 0..300 {
                let x = random_kernel(&gens, &mut rng, 20);
                let w = gens.rewrite(&x).unwrap();
                assert_eq!(gens.eval(&w), x);
                let size: usize = (0..gens.num_slots()).map(|s| gens.ambient.slot_len(s, &x)).sum();
                assert!(w.len() <= REWRITE_CONSTANT * size);
                if size > 0 {
                    worst = worst.max(w.len() as f64 / size as f64);
                }
            }
            assert!(worst <= REWRITE_CONSTANT as f64);
        }
    }

    fn random_tag_word(gens: &KernelGenSet, tag: &SubgroupTag, rng: &mut impl Rng, len: usize) -> KernelWord {
        let fams = tag.families();
        let allowed: Vec<usize> = (0..gens.gens.len()).filter(|&i| fams.contains(&gens.gens[i].family)).collect();
        let letters = (0..len)
            .map(|_| {
                let l = (allowed[rng.gen_range(0..allowed.len())] + 1) as Letter;
                if rng.gen_bool(0.5) {
                    l
                } else {
                    -l
                }
            })
            .collect();
        KernelWord { letters }
    }

    #[test]
    fn witnesses_for_all_tags() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (gens, tags) in [(sb3(), triangle_tags()), (d4(), square_tags())] {
            for tag in &tags {
                for _ in 0..40 {
                    let w = random_tag_word(&gens, tag, &mut rng, 12);
                    let x = gens.eval(&w);
                    let wit = gens.membership_witness(tag, &x).unwrap();
                    assert_eq!(gens.eval(&wit), x);
                    assert!(gens.word_families(&wit).is_subset(&tag.families()));
                }
            }
        }
    }

    // Elements of a tag subgroup are determined by their kernel-slot
    // coordinates: perturbing the other slots by a kernel letter of those
    // slots must leave the subgroup.
    fn perturbed_non_members(gens: &KernelGenSet, tags: &[SubgroupTag], seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for tag in tags {
            let outside: Vec<usize> = (0..gens.num_slots()).filter(|s| !tag.kernel.contains(s)).collect();
            for _ in 0..10 {
                let x = gens.eval(&random_tag_word(gens, tag, &mut rng, 10));
                let s = outside[rng.gen_range(0..outside.len())];
                let ks: Vec<usize> =
                    (0..gens.gens.len()).filter(|&i| gens.gens[i].family == Family::Kernel(s)).collect();
                let mut y = x.clone();
                if ks.is_empty() {
                    // no kernel letters: a commutator of sections supported on slot s
                    let r = gens.num_slots();
                    let a = (gens.pair_gen(0, s, (s + 1) % r, 0) + 1) as Letter;
                    let b = (gens.pair_gen(1, s, (s + 2) % r, 0) + 1) as Letter;
                    for l in [a, b, -a, -b] {
                        gens.apply_letter(&mut y, l);
                    }
                } else {
                    let k = ks[rng.gen_range(0..ks.len())];
                    gens.apply_letter(&mut y, (k + 1) as Letter);
                }
                assert!(outside.contains(&s));
                assert!((0..gens.num_slots()).filter(|&t| t != s).all(|t| gens.ambient.restrict(&x, t) == gens.ambient.restrict(&y, t)));
                assert!(gens.membership_witness(tag, &x).is_ok());
                assert!(matches!(gens.membership_witness(tag, &y), Err(Membership::NotMember(_))));
            }
        }
    }

    #[test]
    fn projection_injectivity() {
        perturbed_non_members(&sb3(), &triangle_tags(), 5);
        perturbed_non_members(&d4(), &square_tags(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn rewrite_evaluates_back(seed in any::<u64>()) {
            let gens = d4();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_kernel(&gens, &mut rng, 12);
            let w = gens.rewrite(&x).unwrap();
            prop_assert_eq!(gens.eval(&w), x);
        }

        #[test]
        fn tag_injectivity(seed in any::<u64>()) {
            perturbed_non_members(&sb3(), &triangle_tags(), seed);
        }
    }
}

pub const GENS_SCHEMA: &str = "spf-gens/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenRepr {
    pub name: String,
    pub family: String,
    pub value: String,
}

/// Serialized generating set: the ambient data plus the derived generator
/// list. The list is informational; readers rebuild and compare it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GensRepr {
    pub schema: String,
    pub method: Method,
    pub hash: String,
    pub ambient: crate::ambient::AmbientRepr,
    pub generators: Vec<GenRepr>,
}

#[derive(thiserror::Error, Debug)]
pub enum GensReprError {
    #[error("unsupported schema {0:?}")]
    Schema(String),
    #[error(transparent)]
    Ambient(#[from] crate::ambient::SpecError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("generator list does not match the rebuilt set (at {0})")]
    Mismatch(String),
    #[error("hash mismatch: file says {file}, rebuilt set has {actual}")]
    Hash { file: String, actual: String },
}

impl KernelGenSet {
    /// Largest slot displacement of one generator step: max over generators
    /// of radius(e, g). It is 1 unless a slot groups several free factors.
    pub fn step_constant(&self) -> usize {
        let e = self.ambient.identity();
        self.gens.iter().map(|g| self.ambient.radius(&e, &g.value)).max().unwrap_or(1).max(1)
    }

    /// SHA-256 over the ambient form, the method and the generator values.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&self.ambient.to_repr()).expect("serializable").as_bytes());
        h.update(self.method.to_string().as_bytes());
        for g in &self.gens {
            h.update(format!("\n{}={}", g.name, self.ambient.format(&g.value)).as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn to_repr(&self) -> GensRepr {
        GensRepr {
            schema: GENS_SCHEMA.into(),
            method: self.method,
            hash: self.hash(),
            ambient: self.ambient.to_repr(),
            generators: self
                .gens
                .iter()
                .map(|g| GenRepr {
                    name: g.name.clone(),
                    family: self.family_label(g.family).to_string(),
                    value: self.ambient.format(&g.value),
                })
                .collect(),
        }
    }

    pub fn from_repr(repr: &GensRepr) -> Result<Self, GensReprError> {
        if repr.schema != GENS_SCHEMA {
            return Err(GensReprError::Schema(repr.schema.clone()));
        }
        let amb = Ambient::from_repr(&repr.ambient)?;
        let set = KernelGenSet::build(amb, repr.method)?;
        let rebuilt = set.to_repr();
        if rebuilt.generators.len() != repr.generators.len() {
            return Err(GensReprError::Mismatch("generator count".into()));
        }
        for (a, b) in rebuilt.generators.iter().zip(&repr.generators) {
            if a != b {
                return Err(GensReprError::Mismatch(b.name.clone()));
            }
        }
        if rebuilt.hash != repr.hash {
            return Err(GensReprError::Hash { file: repr.hash.clone(), actual: rebuilt.hash });
        }
        Ok(set)
    }
}
