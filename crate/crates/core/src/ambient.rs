//! The ambient product G_1 x ... x G_r of free groups, the homomorphism to Z^m,
//! and the chosen free bases X_i = Y_i ∪ Z_i of each free component.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::group_core::{
    format_letters, parse_tokens, push_reduced, Alphabet, BasisError, FreeBasis, FreeWord, IntVector, Letter,
    ProductElement,
};
use crate::homs::{apply_hom, AbelianHom, Factoring};

pub const AMBIENT_SCHEMA: &str = "spf-ambient/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Kernel,
    /// Image of basis vector `index` of part `part` (0 = A, 1 = B) under the section.
    Section { part: usize, index: usize },
    /// Letter x with nonzero image v that is not the slot's section; the slot's
    /// kernel generating set contains x s(v)^-1 in its place.
    Transfer,
}

#[derive(Clone, Debug)]
pub struct XLetter {
    pub name: String,
    pub value: FreeWord,
    pub role: Role,
}

#[derive(Clone, Debug)]
pub struct Component {
    pub alphabet: Alphabet,
    pub hom: AbelianHom,
    pub x: Vec<XLetter>,
    pub basis: FreeBasis,
    /// x-letter index of the section letter of each part, if present
    pub section_letter: [Option<usize>; 2],
    /// factoring coefficients (A part, B part) of each x letter's image
    pub coeffs: Vec<[IntVector; 2]>,
    /// metric weight of each x letter: 1, or 1 + |v|_1 for transfers
    pub weights: Vec<usize>,
}

impl Component {
    pub fn rank(&self) -> usize {
        self.alphabet.rank()
    }

    /// Reduced word in the x letters (1-based signed indices into `x`).
    pub fn x_word(&self, g: &FreeWord) -> Vec<Letter> {
        self.basis.to_basis_word(g)
    }

    /// Weighted length of the reduced x word of g.
    pub fn length(&self, g: &FreeWord) -> usize {
        self.x_word(g).iter().map(|&l| self.weights[l.unsigned_abs() as usize - 1]).sum()
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("schema {0:?} not supported")]
    Schema(String),
    #[error("{0}")]
    Shape(String),
    #[error("slot {slot}: letter {name:?}: {reason}")]
    Letter { slot: usize, name: String, reason: String },
    #[error("slot {slot}: x letters do not form a free basis: {err}")]
    NotGenerating { slot: usize, err: BasisError },
    #[error("slot {slot}: kernel letter {name:?} has nonzero image {image:?}")]
    KernelLetter { slot: usize, name: String, image: IntVector },
    #[error("slot {slot}: section letter {name:?} maps to {image:?}, expected {expected:?}")]
    SectionImage { slot: usize, name: String, image: IntVector, expected: IntVector },
    #[error("slot {slot}: section images {a:?} and {b:?} of the same part do not commute")]
    SectionsDoNotCommute { slot: usize, a: String, b: String },
    #[error("slot {slot}: no section letter for part {part} basis vector {index}")]
    MissingSection { slot: usize, part: usize, index: usize },
    #[error("slot {slot}: duplicate section letter for part {part} basis vector {index}")]
    DuplicateSection { slot: usize, part: usize, index: usize },
    #[error("duplicate letter name {0:?}")]
    DuplicateName(String),
    #[error("bad word: {0}")]
    Word(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XLetterRepr {
    pub name: String,
    pub value: String,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRepr {
    pub letters: Vec<String>,
    pub phi: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<XLetterRepr>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRepr {
    pub components: Vec<ComponentRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientRepr {
    pub schema: String,
    pub m: usize,
    pub factoring: Factoring,
    pub slots: Vec<SlotRepr>,
}

/// The product of free groups with its homomorphism, factoring and bases.
#[derive(Clone, Debug)]
pub struct Ambient {
    pub m: usize,
    pub factoring: Factoring,
    pub components: Vec<Component>,
    /// global component indices of each slot (contiguous)
    pub slots: Vec<Vec<usize>>,
    /// slot -> part -> basis index -> (component, x letter index)
    section_map: Vec<[Vec<(usize, usize)>; 2]>,
    slot_of_component: Vec<usize>,
    names: HashMap<String, (usize, usize)>,
}

fn role_string(r: Role) -> String {
    match r {
        Role::Kernel => "kernel".into(),
        Role::Section { part, index } => format!("s{}:{}", part + 1, index + 1),
        Role::Transfer => "transfer".into(),
    }
}

fn parse_role(s: &str) -> Option<Role> {
    if s == "kernel" {
        return Some(Role::Kernel);
    }
    if s == "transfer" {
        return Some(Role::Transfer);
    }
    let (p, i) = s.split_once(':')?;
    let part = match p {
        "s1" | "s" => 0,
        "s2" => 1,
        _ => return None,
    };
    let index: usize = i.parse().ok()?;
    if index == 0 {
        return None;
    }
    Some(Role::Section { part, index: index - 1 })
}

impl Ambient {
    pub fn from_repr(repr: &AmbientRepr) -> Result<Self, SpecError> {
        if repr.schema != AMBIENT_SCHEMA {
            return Err(SpecError::Schema(repr.schema.clone()));
        }
        let m = repr.m;
        if repr.factoring.dim() != m {
            return Err(SpecError::Shape(format!("factoring has dimension {}, m = {m}", repr.factoring.dim())));
        }
        let mut components = Vec::new();
        let mut slots = Vec::new();
        let mut section_map = Vec::new();
        let mut slot_of_component = Vec::new();
        let mut names: HashMap<String, (usize, usize)> = HashMap::new();
        let mut x_names: BTreeSet<String> = BTreeSet::new();
        for (si, slot) in repr.slots.iter().enumerate() {
            let slot_no = si + 1;
            if slot.components.is_empty() {
                return Err(SpecError::Shape(format!("slot {slot_no} has no components")));
            }
            let mut smap: [Vec<Option<(usize, usize)>>; 2] =
                [vec![None; repr.factoring.part_rank(0)], vec![None; repr.factoring.part_rank(1)]];
            let mut ids = Vec::new();
            for c in &slot.components {
                let ci = components.len();
                let rank = c.letters.len();
                let alphabet = Alphabet::new(c.letters.clone());
                for (li, n) in c.letters.iter().enumerate() {
                    if names.insert(n.clone(), (ci, li)).is_some() {
                        return Err(SpecError::DuplicateName(n.clone()));
                    }
                }
                let hom = AbelianHom::new(rank, m, c.phi.clone())
                    .map_err(|e| SpecError::Shape(format!("slot {slot_no}: phi: {e}")))?;
                let x = match &c.x {
                    Some(xs) => {
                        let mut out = Vec::new();
                        for xr in xs {
                            let value = alphabet
                                .parse(&xr.value)
                                .map_err(|e| SpecError::Word(format!("{}: {e}", xr.name)))?;
                            let role = parse_role(&xr.role).ok_or_else(|| SpecError::Letter {
                                slot: slot_no,
                                name: xr.name.clone(),
                                reason: format!("bad role {:?}", xr.role),
                            })?;
                            out.push(XLetter { name: xr.name.clone(), value, role });
                        }
                        out
                    }
                    None => auto_roles(&alphabet, &hom, &repr.factoring, &smap),
                };
                for xl in &x {
                    if !x_names.insert(xl.name.clone()) {
                        return Err(SpecError::DuplicateName(xl.name.clone()));
                    }
                }
                let basis = FreeBasis::new(rank, x.iter().map(|l| l.value.clone()).collect())
                    .map_err(|err| SpecError::NotGenerating { slot: slot_no, err })?;
                let mut section_letter = [None, None];
                let mut coeffs = Vec::new();
                let mut weights = Vec::new();
                for (xi, xl) in x.iter().enumerate() {
                    let image = apply_hom(&hom, &xl.value).expect("rank checked");
                    let (ca, cb) = repr.factoring.split(&image);
                    let norm: i64 = ca.iter().chain(&cb).map(|v| v.abs()).sum();
                    weights.push(if xl.role == Role::Transfer { 1 + norm as usize } else { 1 });
                    coeffs.push([ca, cb]);
                    match xl.role {
                        Role::Transfer => {
                            if norm == 0 {
                                return Err(SpecError::Letter {
                                    slot: slot_no,
                                    name: xl.name.clone(),
                                    reason: "transfer letter has zero image; use the kernel role".into(),
                                });
                            }
                        }
                        Role::Kernel => {
                            if image.iter().any(|&v| v != 0) {
                                return Err(SpecError::KernelLetter { slot: slot_no, name: xl.name.clone(), image });
                            }
                        }
                        Role::Section { part, index } => {
                            let expected = repr.factoring.basis(part).get(index).cloned().ok_or_else(|| {
                                SpecError::Letter {
                                    slot: slot_no,
                                    name: xl.name.clone(),
                                    reason: format!("part {} has no basis vector {}", part + 1, index + 1),
                                }
                            })?;
                            if image != expected {
                                return Err(SpecError::SectionImage {
                                    slot: slot_no,
                                    name: xl.name.clone(),
                                    image,
                                    expected,
                                });
                            }
                            if let Some(prev) = section_letter[part] {
                                let prev: &XLetter = &x[prev];
                                return Err(SpecError::SectionsDoNotCommute {
                                    slot: slot_no,
                                    a: prev.name.clone(),
                                    b: xl.name.clone(),
                                });
                            }
                            section_letter[part] = Some(xi);
                            if smap[part][index].is_some() {
                                return Err(SpecError::DuplicateSection { slot: slot_no, part: part + 1, index: index + 1 });
                            }
                            smap[part][index] = Some((ci, xi));
                        }
                    }
                }
                components.push(Component { alphabet, hom, x, basis, section_letter, coeffs, weights });
                slot_of_component.push(si);
                ids.push(ci);
            }
            let mut done: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
            for part in 0..2 {
                for (index, e) in smap[part].iter().enumerate() {
                    match e {
                        Some(v) => done[part].push(*v),
                        None => return Err(SpecError::MissingSection { slot: slot_no, part: part + 1, index: index + 1 }),
                    }
                }
            }
            slots.push(ids);
            section_map.push(done);
        }
        Ok(Ambient { m, factoring: repr.factoring.clone(), components, slots, section_map, slot_of_component, names })
    }

    pub fn to_repr(&self) -> AmbientRepr {
        let slots = self
            .slots
            .iter()
            .map(|ids| SlotRepr {
                components: ids
                    .iter()
                    .map(|&c| {
                        let comp = &self.components[c];
                        ComponentRepr {
                            letters: comp.alphabet.names.clone(),
                            phi: comp.hom.matrix.clone(),
                            x: Some(
                                comp.x
                                    .iter()
                                    .map(|l| XLetterRepr {
                                        name: l.name.clone(),
                                        value: comp.alphabet.format(&l.value),
                                        role: role_string(l.role),
                                    })
                                    .collect(),
                            ),
                        }
                    })
                    .collect(),
            })
            .collect();
        AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: self.m, factoring: self.factoring.clone(), slots }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(&self.to_repr()).expect("serializable");
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.rank()).collect()
    }

    pub fn identity(&self) -> ProductElement {
        ProductElement::identity(&self.ranks())
    }

    pub fn slot_of_component(&self, c: usize) -> usize {
        self.slot_of_component[c]
    }

    /// (component, x letter) carrying the section image of basis vector `index` of `part` in `slot`.
    pub fn section_letter(&self, slot: usize, part: usize, index: usize) -> (usize, usize) {
        self.section_map[slot][part][index]
    }

    pub fn phi(&self, x: &ProductElement) -> IntVector {
        let mut out = vec![0i64; self.m];
        for (c, w) in self.components.iter().zip(&x.coords) {
            let v = apply_hom(&c.hom, w).expect("ranks match");
            for (o, a) in out.iter_mut().zip(v) {
                *o += a;
            }
        }
        out
    }

    pub fn phi_slot(&self, slot: usize, x: &ProductElement) -> IntVector {
        let mut out = vec![0i64; self.m];
        for &c in &self.slots[slot] {
            let v = apply_hom(&self.components[c].hom, &x.coords[c]).expect("ranks match");
            for (o, a) in out.iter_mut().zip(v) {
                *o += a;
            }
        }
        out
    }

    pub fn in_kernel(&self, x: &ProductElement) -> bool {
        self.phi(x).iter().all(|&v| v == 0)
    }

    pub fn shape_ok(&self, x: &ProductElement) -> bool {
        x.coords.len() == self.components.len()
            && x.coords.iter().zip(&self.components).all(|(w, c)| w.rank() == c.rank())
    }

    /// d_i(x_i, y_i): word metric of slot i in the x letters.
    pub fn slot_dist(&self, slot: usize, x: &ProductElement, y: &ProductElement) -> usize {
        self.slots[slot]
            .iter()
            .map(|&c| {
                let d = x.coords[c].inverse().mul(&y.coords[c]);
                self.components[c].length(&d)
            })
            .sum()
    }

    pub fn slot_len(&self, slot: usize, x: &ProductElement) -> usize {
        self.slots[slot].iter().map(|&c| self.components[c].length(&x.coords[c])).sum()
    }

    /// Product metric: sum of slot distances.
    pub fn dist(&self, x: &ProductElement, y: &ProductElement) -> usize {
        (0..self.num_slots()).map(|s| self.slot_dist(s, x, y)).sum()
    }

    /// max_i d_i(x_i, y_i)
    pub fn radius(&self, x: &ProductElement, y: &ProductElement) -> usize {
        (0..self.num_slots()).map(|s| self.slot_dist(s, x, y)).max().unwrap_or(0)
    }

    /// Multiply slot `slot` of x on the right by s^part(coeffs).
    pub fn shift_by_section(&self, x: &mut ProductElement, slot: usize, part: usize, coeffs: &[i64]) {
        for (index, &e) in coeffs.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let (c, xi) = self.section_letter(slot, part, index);
            let v = self.components[c].x[xi].value.pow(e);
            x.coords[c] = x.coords[c].mul(&v);
        }
    }

    /// If g (restricted to `slot`) equals s^part(alpha), return alpha.
    pub fn section_coeffs(&self, slot: usize, part: usize, g: &ProductElement) -> Option<IntVector> {
        let mut out = vec![0i64; self.factoring.part_rank(part)];
        for &c in &self.slots[slot] {
            let comp = &self.components[c];
            let xw = comp.x_word(&g.coords[c]);
            if xw.is_empty() {
                continue;
            }
            let xi = comp.section_letter[part]?;
            let letter = (xi + 1) as Letter;
            let e = if xw.iter().all(|&l| l == letter) {
                xw.len() as i64
            } else if xw.iter().all(|&l| l == -letter) {
                -(xw.len() as i64)
            } else {
                return None;
            };
            let Role::Section { index, .. } = comp.x[xi].role else { unreachable!() };
            out[index] = e;
        }
        Some(out)
    }

    /// Restriction of x to one slot (other coordinates set to the identity).
    pub fn restrict(&self, x: &ProductElement, slot: usize) -> ProductElement {
        let mut out = self.identity();
        for &c in &self.slots[slot] {
            out.coords[c] = x.coords[c].clone();
        }
        out
    }

    pub fn format_slot(&self, slot: usize, x: &ProductElement) -> String {
        let mut parts = Vec::new();
        for &c in &self.slots[slot] {
            if !x.coords[c].is_identity() {
                let a = &self.components[c].alphabet;
                parts.push(format_letters(x.coords[c].letters(), |i| a.names[i].as_str()));
            }
        }
        if parts.is_empty() {
            "e".into()
        } else {
            parts.join(" ")
        }
    }

    /// Slots separated by ` | `, e.g. `b1 a1 | a2^-1 | e`.
    pub fn format(&self, x: &ProductElement) -> String {
        (0..self.num_slots()).map(|s| self.format_slot(s, x)).collect::<Vec<_>>().join(" | ")
    }

    pub fn parse(&self, s: &str) -> Result<ProductElement, SpecError> {
        let pieces: Vec<&str> = s.split('|').collect();
        if pieces.len() != self.num_slots() {
            return Err(SpecError::Word(format!("expected {} slots in {s:?}", self.num_slots())));
        }
        let mut raw: Vec<Vec<Letter>> = vec![Vec::new(); self.components.len()];
        for (slot, piece) in pieces.iter().enumerate() {
            let flat: Vec<(usize, usize)> = self.slots[slot]
                .iter()
                .flat_map(|&c| (0..self.components[c].rank()).map(move |li| (c, li)))
                .collect();
            let letters = parse_tokens(piece, |n| {
                let &(c, li) = self.names.get(n)?;
                flat.iter().position(|&p| p == (c, li))
            })
            .map_err(|e| SpecError::Word(e.to_string()))?;
            for x in letters {
                let (c, li) = flat[x.unsigned_abs() as usize - 1];
                let l = (li + 1) as Letter;
                raw[c].push(if x > 0 { l } else { -l });
            }
        }
        let coords = raw
            .into_iter()
            .zip(&self.components)
            .map(|(l, comp)| {
                let mut out = Vec::new();
                for x in l {
                    push_reduced(&mut out, x);
                }
                FreeWord::from_unchecked(comp.rank(), out)
            })
            .collect();
        Ok(ProductElement { coords })
    }
}

/// Default x letters: the standard letters, each a kernel letter, the section
/// image of a basis vector not yet used in this slot (at most one per part in
/// each component), or a transfer letter.
fn auto_roles(
    alphabet: &Alphabet,
    hom: &AbelianHom,
    factoring: &Factoring,
    taken: &[Vec<Option<(usize, usize)>>; 2],
) -> Vec<XLetter> {
    let mut used: [Vec<bool>; 2] =
        [taken[0].iter().map(|t| t.is_some()).collect(), taken[1].iter().map(|t| t.is_some()).collect()];
    let mut out = Vec::new();
    for (j, name) in alphabet.names.iter().enumerate() {
        let col = hom.column(j);
        let value = FreeWord::generator(alphabet.rank(), (j + 1) as Letter);
        let role = if col.iter().all(|&v| v == 0) {
            Role::Kernel
        } else {
            let mut found = None;
            'search: for part in 0..2 {
                if out.iter().any(|l: &XLetter| matches!(l.role, Role::Section { part: p, .. } if p == part)) {
                    continue;
                }
                for (index, b) in factoring.basis(part).iter().enumerate() {
                    if *b == col && !used[part][index] {
                        found = Some(Role::Section { part, index });
                        used[part][index] = true;
                        break 'search;
                    }
                }
            }
            found.unwrap_or(Role::Transfer)
        };
        out.push(XLetter { name: name.clone(), value, role });
    }
    out
}

/// Convenience: a slot made of one free component with standard letter names.
pub fn simple_component(letters: &[&str], phi: Vec<Vec<i64>>) -> ComponentRepr {
    ComponentRepr { letters: letters.iter().map(|s| s.to_string()).collect(), phi, x: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn sb3() -> Ambient {
        let slots = (1..=3)
            .map(|i| SlotRepr {
                components: vec![simple_component(&[&format!("a{i}"), &format!("b{i}")], vec![vec![1, 0]])],
            })
            .collect();
        Ambient::from_repr(&AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: 1, factoring: Factoring::whole(1), slots })
            .unwrap()
    }

    #[test]
    fn parse_format_round_trip() {
        let amb = sb3();
        let x = amb.parse("b1 a1 | a2^-1 | e").unwrap();
        assert_eq!(amb.format(&x), "b1 a1 | a2^-1 | e");
        assert!(amb.in_kernel(&x));
        assert_eq!(amb.dist(&amb.identity(), &x), 3);
        assert!(amb.parse("a2 | e | e").is_err());
    }

    #[test]
    fn generation_failure_is_reported() {
        // Y empty and a single section letter: x letters cannot generate F_2
        let comp = ComponentRepr {
            letters: vec!["a".into(), "b".into()],
            phi: vec![vec![1, 0]],
            x: Some(vec![XLetterRepr { name: "a".into(), value: "a".into(), role: "s1:1".into() }]),
        };
        let repr = AmbientRepr {
            schema: AMBIENT_SCHEMA.into(),
            m: 1,
            factoring: Factoring::whole(1),
            slots: vec![SlotRepr { components: vec![comp] }],
        };
        assert!(matches!(Ambient::from_repr(&repr), Err(SpecError::NotGenerating { .. })));
    }

    #[test]
    fn section_coefficients() {
        let amb = sb3();
        let x = amb.parse("a1^3 | e | e").unwrap();
        assert_eq!(amb.section_coeffs(0, 0, &x), Some(vec![3]));
        let y = amb.parse("b1 | e | e").unwrap();
        assert_eq!(amb.section_coeffs(0, 0, &y), None);
    }
}
