use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::group_core::{FreeWord, GroupError, IntVector};

/// Homomorphism F_n -> Z^m; column j is the image of generator j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianHom {
    pub rank: usize,
    pub dim: usize,
    /// Row-major m x n matrix.
    pub matrix: Vec<Vec<i64>>,
}

impl AbelianHom {
    pub fn new(rank: usize, dim: usize, matrix: Vec<Vec<i64>>) -> Result<Self, String> {
        if matrix.len() != dim || matrix.iter().any(|r| r.len() != rank) {
            return Err(format!("matrix must be {dim} x {rank}"));
        }
        Ok(AbelianHom { rank, dim, matrix })
    }

    pub fn column(&self, j: usize) -> IntVector {
        self.matrix.iter().map(|row| row[j]).collect()
    }

    /// Image of a signed letter.
    pub fn letter_image(&self, x: i32) -> IntVector {
        let j = x.unsigned_abs() as usize - 1;
        let s = if x > 0 { 1 } else { -1 };
        self.matrix.iter().map(|row| s * row[j]).collect()
    }

    pub fn columns(&self) -> Vec<IntVector> {
        (0..self.rank).map(|j| self.column(j)).collect()
    }
}

pub fn apply_hom(phi: &AbelianHom, w: &FreeWord) -> Result<IntVector, GroupError> {
    if w.rank() != phi.rank {
        return Err(GroupError::RankMismatch(w.rank(), phi.rank));
    }
    let mut out = vec![0i64; phi.dim];
    for &x in w.letters() {
        let j = x.unsigned_abs() as usize - 1;
        let s = if x > 0 { 1 } else { -1 };
        for (i, row) in phi.matrix.iter().enumerate() {
            out[i] += s * row[j];
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionFailure {
    /// phi(image j) is not the expected vector (1-based j).
    WrongImage { part: usize, index: usize, got: IntVector, expected: IntVector },
    /// images i and j (1-based) do not commute.
    NotCommuting { part: usize, i: usize, j: usize },
    WrongCount { part: usize, got: usize, expected: usize },
    RankMismatch,
}

impl fmt::Display for SectionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectionFailure::WrongImage { part, index, got, expected } => {
                write!(f, "part {part}: image {index} maps to {got:?}, expected {expected:?}")
            }
            SectionFailure::NotCommuting { part, i, j } => {
                write!(f, "part {part}: images {i} and {j} do not commute")
            }
            SectionFailure::WrongCount { part, got, expected } => {
                write!(f, "part {part}: {got} images given, {expected} needed")
            }
            SectionFailure::RankMismatch => write!(f, "section words have the wrong rank"),
        }
    }
}

fn check_images(
    phi: &AbelianHom,
    part: usize,
    images: &[FreeWord],
    targets: &[IntVector],
) -> Result<(), SectionFailure> {
    if images.len() != targets.len() {
        return Err(SectionFailure::WrongCount { part, got: images.len(), expected: targets.len() });
    }
    for (j, (w, t)) in images.iter().zip(targets).enumerate() {
        let got = apply_hom(phi, w).map_err(|_| SectionFailure::RankMismatch)?;
        if &got != t {
            return Err(SectionFailure::WrongImage { part, index: j + 1, got, expected: t.clone() });
        }
    }
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            if !images[i].commutes_with(&images[j]) {
                return Err(SectionFailure::NotCommuting { part, i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(())
}

pub fn standard_basis(m: usize) -> Vec<IntVector> {
    (0..m).map(|j| (0..m).map(|i| i64::from(i == j)).collect()).collect()
}

/// A section Z^m -> F_n given by the images of the standard basis vectors.
pub fn verify_section(phi: &AbelianHom, images: &[FreeWord]) -> Result<(), SectionFailure> {
    check_images(phi, 1, images, &standard_basis(phi.dim))
}

/// Decomposition Z^m = A ⊕ B given by bases; coefficients via the inverse matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factoring {
    pub a_basis: Vec<IntVector>,
    pub b_basis: Vec<IntVector>,
    // rows of the inverse of [a_basis | b_basis]
    inverse: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct FactoringRepr {
    a: Vec<IntVector>,
    b: Vec<IntVector>,
}

impl Serialize for Factoring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FactoringRepr { a: self.a_basis.clone(), b: self.b_basis.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Factoring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = FactoringRepr::deserialize(d)?;
        Factoring::new(r.a, r.b).map_err(serde::de::Error::custom)
    }
}

impl Factoring {
    pub fn new(a_basis: Vec<IntVector>, b_basis: Vec<IntVector>) -> Result<Self, String> {
        let m = a_basis.len() + b_basis.len();
        if m == 0 {
            return Err("empty factoring".into());
        }
        let cols: Vec<&IntVector> = a_basis.iter().chain(&b_basis).collect();
        if cols.iter().any(|c| c.len() != m) {
            return Err(format!("basis vectors must have {m} entries"));
        }
        let mat: Vec<Vec<i64>> = (0..m).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let inverse = integer_inverse(&mat).ok_or("basis vectors do not form a Z-basis (det != ±1)")?;
        Ok(Factoring { a_basis, b_basis, inverse })
    }

    /// The trivial factoring A = Z^m, B = 0 with the standard basis.
    pub fn whole(m: usize) -> Self {
        Factoring::new(standard_basis(m), vec![]).expect("standard basis")
    }

    pub fn dim(&self) -> usize {
        self.a_basis.len() + self.b_basis.len()
    }

    pub fn part_rank(&self, part: usize) -> usize {
        if part == 0 {
            self.a_basis.len()
        } else {
            self.b_basis.len()
        }
    }

    pub fn basis(&self, part: usize) -> &[IntVector] {
        if part == 0 {
            &self.a_basis
        } else {
            &self.b_basis
        }
    }

    /// Coefficients of v in the combined basis (A coefficients then B).
    pub fn coefficients(&self, v: &[i64]) -> IntVector {
        self.inverse.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn split(&self, v: &[i64]) -> (IntVector, IntVector) {
        let c = self.coefficients(v);
        let k = self.a_basis.len();
        (c[..k].to_vec(), c[k..].to_vec())
    }

    pub fn combine(&self, part: usize, coeffs: &[i64]) -> IntVector {
        let mut out = vec![0i64; self.dim()];
        for (b, &c) in self.basis(part).iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    pub fn project(&self, part: usize, v: &[i64]) -> IntVector {
        let (a, b) = self.split(v);
        self.combine(part, if part == 0 { &a } else { &b })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PSplitSections {
    pub s1: Vec<FreeWord>,
    pub s2: Vec<FreeWord>,
}

pub fn verify_psplit(phi: &AbelianHom, p: &Factoring, s: &PSplitSections) -> Result<(), SectionFailure> {
    check_images(phi, 1, &s.s1, &p.a_basis)?;
    check_images(phi, 2, &s.s2, &p.b_basis)
}

/// Exact inverse of a unimodular integer matrix, or None.
pub fn integer_inverse(mat: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = mat.len();
    let mut a: Vec<Vec<BigRational>> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row.iter().map(|&x| BigRational::from_integer(x.into())).collect();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    let mut det = BigRational::one();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= p.clone();
        for x in a[col].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let v = a[col][c].clone() * f.clone();
                    a[r][c] -= v;
                }
            }
        }
    }
    if det.abs() != BigRational::one() {
        return None;
    }
    let mut out = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = &a[i][n + j];
            if !v.is_integer() {
                return None;
            }
            out[i][j] = v.to_integer().to_i64()?;
        }
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeIndex {
    Finite(u64),
    Infinite,
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeIndex::Finite(n) => write!(f, "{n}"),
            LatticeIndex::Infinite => write!(f, "infinite"),
        }
    }
}

/// Column echelon basis of the lattice spanned by `columns` in Z^m
/// (column-style Hermite reduction, exact big integers).
pub fn lattice_echelon(m: usize, columns: &[IntVector]) -> Vec<Vec<BigInt>> {
    let mut cols: Vec<Vec<BigInt>> =
        columns.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut basis = Vec::new();
    for row in 0..m {
        // Euclid on the entries in this row until at most one is non-zero
        loop {
            let nz: Vec<usize> = (0..cols.len()).filter(|&i| !cols[i][row].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| cols[i][row].abs()).unwrap();
            for &i in &nz {
                if i == p {
                    continue;
                }
                let q = cols[i][row].div_floor(&cols[p][row]);
                let pc = cols[p].clone();
                for (x, y) in cols[i].iter_mut().zip(&pc) {
                    *x -= &q * y;
                }
            }
        }
        if let Some(i) = (0..cols.len()).find(|&i| !cols[i][row].is_zero()) {
            let mut c = cols.swap_remove(i);
            if c[row].is_negative() {
                c.iter_mut().for_each(|x| *x = -x.clone());
            }
            basis.push(c);
        }
        cols.retain(|c| c.iter().any(|x| !x.is_zero()));
    }
    basis
}

/// Index of the column span of an m x n matrix (row-major) in Z^m.
pub fn image_index(matrix: &[Vec<i64>]) -> LatticeIndex {
    let m = matrix.len();
    if m == 0 {
        return LatticeIndex::Finite(1);
    }
    let n = matrix[0].len();
    let cols: Vec<IntVector> = (0..n).map(|j| matrix.iter().map(|r| r[j]).collect()).collect();
    index_of_span(m, &cols)
}

pub fn index_of_span(m: usize, columns: &[IntVector]) -> LatticeIndex {
    let basis = lattice_echelon(m, columns);
    if basis.len() < m {
        return LatticeIndex::Infinite;
    }
    // echelon: pivot of the i-th basis vector sits in a distinct row, triangular
    let mut det = BigInt::one();
    for (i, b) in basis.iter().enumerate() {
        let piv = b.iter().position(|x| !x.is_zero()).unwrap();
        debug_assert_eq!(piv, i);
        det *= b[piv].abs();
    }
    LatticeIndex::Finite(det.to_u64().expect("index fits in u64"))
}

/// Does the lattice spanned by `columns` equal the lattice spanned by `target`?
pub fn spans_equal(m: usize, columns: &[IntVector], target: &[IntVector]) -> bool {
    let mut all = columns.to_vec();
    all.extend_from_slice(target);
    let joint = lattice_echelon(m, &all);
    lattice_echelon(m, columns) == joint && lattice_echelon(m, target) == joint
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(l: &[i32]) -> FreeWord {
        FreeWord::new(2, l).unwrap()
    }

    #[test]
    fn apply_examples() {
        let phi = AbelianHom::new(2, 1, vec![vec![1, 0]]).unwrap();
        assert_eq!(apply_hom(&phi, &w(&[2])).unwrap(), vec![0]);
        assert_eq!(apply_hom(&phi, &w(&[1, 1, -2, -1])).unwrap(), vec![1]);
        assert_eq!(apply_hom(&phi, &w(&[])).unwrap(), vec![0]);
    }

    #[test]
    fn section_examples() {
        let phi = AbelianHom::new(2, 1, vec![vec![1, 0]]).unwrap();
        assert!(verify_section(&phi, &[w(&[1])]).is_ok());
        assert!(verify_section(&phi, &[w(&[1, 2])]).is_ok());
        assert!(matches!(verify_section(&phi, &[w(&[2])]), Err(SectionFailure::WrongImage { index: 1, .. })));
    }

    #[test]
    fn psplit_examples() {
        let ab = AbelianHom::new(2, 2, vec![vec![1, 0], vec![0, 1]]).unwrap();
        let p = Factoring::new(vec![vec![1, 0]], vec![vec![0, 1]]).unwrap();
        assert!(verify_psplit(&ab, &p, &PSplitSections { s1: vec![w(&[1])], s2: vec![w(&[2])] }).is_ok());
        let whole = Factoring::whole(2);
        let r = verify_psplit(&ab, &whole, &PSplitSections { s1: vec![w(&[1]), w(&[2])], s2: vec![] });
        assert!(matches!(r, Err(SectionFailure::NotCommuting { .. })));
        let p2 = Factoring::new(vec![vec![1, 1]], vec![vec![0, 1]]).unwrap();
        assert!(verify_psplit(&ab, &p2, &PSplitSections { s1: vec![w(&[1, 2])], s2: vec![w(&[2])] }).is_ok());
        assert!(Factoring::new(vec![vec![2, 0]], vec![vec![0, 1]]).is_err());
    }

    #[test]
    fn index_examples() {
        assert_eq!(image_index(&[vec![1, 0], vec![0, 1]]), LatticeIndex::Finite(1));
        assert_eq!(image_index(&[vec![2, 0], vec![0, 3]]), LatticeIndex::Finite(6));
        assert_eq!(image_index(&[vec![1], vec![1]]), LatticeIndex::Infinite);
        assert_eq!(image_index(&[vec![2, 3]]), LatticeIndex::Finite(1));
        assert_eq!(image_index(&[vec![4, 6], vec![0, 0]]), LatticeIndex::Infinite);
    }

    // independent oracle: |det| of a 2x2 or 3x3 full-rank square matrix
    fn det(m: &[Vec<i64>]) -> i64 {
        match m.len() {
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!(),
        }
    }

    proptest! {
        #[test]
        fn hom_is_monoid_map(a in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..20),
                             b in prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 0..20)) {
            let phi = AbelianHom::new(2, 2, vec![vec![1, 3], vec![-2, 5]]).unwrap();
            let (u, v) = (w(&a), w(&b));
            let lhs = apply_hom(&phi, &u.mul(&v)).unwrap();
            let pu = apply_hom(&phi, &u).unwrap();
            let pv = apply_hom(&phi, &v).unwrap();
            prop_assert_eq!(lhs, vec![pu[0] + pv[0], pu[1] + pv[1]]);
        }

        #[test]
        fn factoring_round_trip(v in prop::collection::vec(-50i64..50, 3)) {
            let p = Factoring::new(vec![vec![1, 1, 0], vec![0, 1, 1]], vec![vec![0, 0, 1]]).unwrap();
            let a = p.project(0, &v);
            let b = p.project(1, &v);
            prop_assert_eq!(vec![a[0] + b[0], a[1] + b[1], a[2] + b[2]], v);
        }

        #[test]
        fn index_matches_determinant_and_column_ops(m in prop::collection::vec(-6i64..6, 9), mix in prop::collection::vec(-3i64..3, 6)) {
            let mat: Vec<Vec<i64>> = m.chunks(3).map(|r| r.to_vec()).collect();
            let d = det(&mat).abs();
            let idx = image_index(&mat);
            if d == 0 {
                prop_assert_eq!(idx.clone(), LatticeIndex::Infinite);
            } else {
                prop_assert_eq!(idx.clone(), LatticeIndex::Finite(d as u64));
            }
            // random unimodular column operations: col_j += c * col_i
            let mut mixed = mat.clone();
            for (t, c) in mix.iter().enumerate() {
                let (i, j) = (t % 3, (t + 1) % 3);
                for row in mixed.iter_mut() {
                    row[j] += c * row[i];
                }
            }
            prop_assert_eq!(image_index(&mixed), idx);
        }
    }
}
