use std::collections::{HashSet, VecDeque};
use std::io::{Read, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::group_core::{push_reduced, Alphabet, FreeWord, GroupError, Letter};

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table is defined up to {have}, needs {need}")]
    DomainTooSmall { have: usize, need: usize },
    #[error("value at n={0} is not positive")]
    NotPositive(usize),
    #[error("tables have different domains ({0} vs {1})")]
    DomainMismatch(usize, usize),
    #[error("csv: {0}")]
    Csv(String),
}

/// f(1..=N) as exact positive rationals; f(0) = 0 by convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    values: Vec<BigRational>,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).ok()?;
            let q = BigInt::from_str(q.trim()).ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRational::new(p, q))
            }
        }
        None => BigInt::from_str(s).ok().map(BigRational::from_integer),
    }
}

impl FunctionTable {
    pub fn new(values: Vec<BigRational>) -> Result<Self, TableError> {
        for (i, v) in values.iter().enumerate() {
            if !v.is_positive() {
                return Err(TableError::NotPositive(i + 1));
            }
        }
        Ok(FunctionTable { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> BigRational) -> Self {
        FunctionTable::new((1..=n).map(f).collect()).expect("positive values")
    }

    pub fn from_ints(values: &[i64]) -> Result<Self, TableError> {
        FunctionTable::new(values.iter().map(|&v| rat(v)).collect())
    }

    pub fn power(n: usize, p: u32) -> Self {
        FunctionTable::from_fn(n, |k| rat((k as i64).pow(p)))
    }

    pub fn domain(&self) -> usize {
        self.values.len()
    }

    /// The first n values (or the whole table if it is shorter).
    pub fn truncate(&self, n: usize) -> Result<Self, TableError> {
        Ok(FunctionTable { values: self.values[..n.min(self.values.len())].to_vec() })
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn get(&self, n: usize) -> Result<BigRational, TableError> {
        if n == 0 {
            return Ok(BigRational::zero());
        }
        self.values
            .get(n - 1)
            .cloned()
            .ok_or(TableError::DomainTooSmall { have: self.values.len(), need: n })
    }

    pub fn at(&self, n: usize) -> &BigRational {
        &self.values[n - 1]
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn le_pointwise(&self, other: &FunctionTable) -> bool {
        self.values.len() == other.values.len() && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    /// f'(n) = f(n)/n
    pub fn quotient(&self) -> FunctionTable {
        FunctionTable {
            values: self.values.iter().enumerate().map(|(i, v)| v / rat(i as i64 + 1)).collect(),
        }
    }

    pub fn times_n(&self) -> FunctionTable {
        FunctionTable {
            values: self.values.iter().enumerate().map(|(i, v)| v * rat(i as i64 + 1)).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TableError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "value"]).map_err(|e| TableError::Csv(e.to_string()))?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([(i + 1).to_string(), format_rational(v)]).map_err(|e| TableError::Csv(e.to_string()))?;
        }
        wr.flush().map_err(|e| TableError::Csv(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("utf8")
    }

    /// Reads an `n,value` table; rows must list n = 1, 2, ... in order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self, TableError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
            let n: usize = rec
                .get(0)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| TableError::Csv(format!("row {}: bad n", i + 1)))?;
            if n != i + 1 {
                return Err(TableError::Csv(format!("row {}: expected n={}, found {n}", i + 1, i + 1)));
            }
            let v = rec
                .get(1)
                .and_then(parse_rational)
                .ok_or_else(|| TableError::Csv(format!("row {}: bad value", i + 1)))?;
            values.push(v);
        }
        FunctionTable::new(values)
    }
}

/// f(n)/n non-decreasing implies superadditivity; checked in linear time.
fn quotient_nondecreasing(f: &FunctionTable) -> bool {
    let q = f.quotient();
    q.values.windows(2).all(|w| w[0] <= w[1])
}

/// Least superadditive majorant, by the recursion
/// f̄(n) = max(f(n), max_{i<n} f̄(i) + f̄(n-i)).
pub fn superadditive_closure(f: &FunctionTable) -> FunctionTable {
    if quotient_nondecreasing(f) {
        return f.clone();
    }
    let n = f.domain();
    let mut out: Vec<BigRational> = Vec::with_capacity(n);
    for k in 1..=n {
        let mut best = f.at(k).clone();
        for i in 1..=k / 2 {
            let s = &out[i - 1] + &out[k - i - 1];
            if s > best {
                best = s;
            }
        }
        out.push(best);
    }
    FunctionTable { values: out }
}

/// Closure by enumerating every partition of n (independent of the recursion).
pub fn closure_by_partitions(f: &FunctionTable) -> FunctionTable {
    fn best(f: &FunctionTable, rest: usize, max_part: usize) -> BigRational {
        if rest == 0 {
            return BigRational::zero();
        }
        let mut m: Option<BigRational> = None;
        for p in (1..=max_part.min(rest)).rev() {
            let v = f.at(p) + best(f, rest - p, p);
            if m.as_ref().is_none_or(|x| &v > x) {
                m = Some(v);
            }
        }
        m.unwrap()
    }
    FunctionTable::from_fn(f.domain(), |n| best(f, n, n))
}

pub fn is_superadditive(f: &FunctionTable) -> bool {
    let n = f.domain();
    if quotient_nondecreasing(f) {
        return true;
    }
    (1..=n).all(|a| (1..=(n - a).min(a)).all(|b| f.at(a + b) >= &(f.at(a) + f.at(b))))
}

pub fn is_quotient_superadditive(f: &FunctionTable) -> bool {
    is_superadditive(&f.quotient())
}

/// f̂(n) = n · closure(f(n)/n)(n).
pub fn hat_transform(f: &FunctionTable) -> FunctionTable {
    superadditive_closure(&f.quotient()).times_n()
}

/// Pointwise max(n², f_1, ..., f_k).
pub fn product_dehn(tables: &[FunctionTable]) -> Result<FunctionTable, TableError> {
    let n = tables.first().map_or(0, |t| t.domain());
    for t in tables {
        if t.domain() != n {
            return Err(TableError::DomainMismatch(n, t.domain()));
        }
    }
    Ok(FunctionTable::from_fn(n, |k| {
        let mut m = rat((k * k) as i64);
        for t in tables {
            if t.at(k) > &m {
                m = t.at(k).clone();
            }
        }
        m
    }))
}

/// Filling pair of a product: (n² + max f_i, n + max g_i).
pub fn filling_pair_product(
    pairs: &[(FunctionTable, FunctionTable)],
) -> Result<(FunctionTable, FunctionTable), TableError> {
    let n = pairs.first().map_or(0, |p| p.0.domain());
    for (f, g) in pairs {
        if f.domain() != n {
            return Err(TableError::DomainMismatch(n, f.domain()));
        }
        if g.domain() != n {
            return Err(TableError::DomainMismatch(n, g.domain()));
        }
    }
    let max_of = |_k: usize, pick: &dyn Fn(&(FunctionTable, FunctionTable)) -> BigRational| {
        pairs.iter().map(pick).max().unwrap_or_else(BigRational::zero)
    };
    let f = FunctionTable::from_fn(n, |k| rat((k * k) as i64) + max_of(k, &|p| p.0.at(k).clone()));
    let g = FunctionTable::from_fn(n, |k| rat(k as i64) + max_of(k, &|p| p.1.at(k).clone()));
    Ok((f, g))
}

/// Random monotone table f(n) = n·g(n) with g non-decreasing, integer and
/// piecewise linear with g(1) ≥ 1 (so f(n)/n is non-decreasing).
pub fn random_monotone_table(n: usize, rng: &mut impl rand::Rng) -> FunctionTable {
    let mut g = rng.gen_range(1..=3i64);
    let mut slope = rng.gen_range(0..=2i64);
    let mut values = Vec::with_capacity(n);
    let mut next_break = rng.gen_range(1..=n.max(1));
    for k in 1..=n {
        values.push(rat(k as i64 * g));
        if k == next_break {
            slope += rng.gen_range(0..=1i64);
            next_break = k + rng.gen_range(1..=n.max(1));
        }
        g += slope;
    }
    FunctionTable::new(values).expect("positive")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationRepr {
    pub schema: String,
    pub generators: Vec<String>,
    pub relators: Vec<String>,
}

pub const PRESENTATION_SCHEMA: &str = "spf-presentation/1";

#[derive(Clone, Debug)]
pub struct FinitePresentation {
    pub alphabet: Alphabet,
    pub relators: Vec<FreeWord>,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("node budget {0} exhausted (word may not be null-homotopic)")]
    BudgetExceeded(usize),
    #[error("search space exhausted after {explored} words without reaching the empty word")]
    Exhausted { explored: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("relator {0} is not cyclically reduced")]
    NotCyclicallyReduced(usize),
}

fn cyclic_reduce(mut w: Vec<Letter>) -> Vec<Letter> {
    let mut s = Vec::with_capacity(w.len());
    for x in w.drain(..) {
        push_reduced(&mut s, x);
    }
    let mut a = 0;
    let mut b = s.len();
    while b - a >= 2 && s[a] == -s[b - 1] {
        a += 1;
        b -= 1;
    }
    s[a..b].to_vec()
}

fn min_rotation(w: &[Letter]) -> Vec<Letter> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = 0;
    for i in 1..n {
        for k in 0..n {
            let (x, y) = (w[(i + k) % n], w[(best + k) % n]);
            if x != y {
                if x < y {
                    best = i;
                }
                break;
            }
        }
    }
    (0..n).map(|k| w[(best + k) % n]).collect()
}

impl FinitePresentation {
    pub fn new(alphabet: Alphabet, relators: Vec<FreeWord>) -> Result<Self, OracleError> {
        for (i, r) in relators.iter().enumerate() {
            if cyclic_reduce(r.letters().to_vec()).len() != r.len() {
                return Err(OracleError::NotCyclicallyReduced(i));
            }
        }
        Ok(FinitePresentation { alphabet, relators })
    }

    pub fn from_repr(repr: &PresentationRepr) -> Result<Self, OracleError> {
        let alphabet = Alphabet::new(repr.generators.clone());
        let relators = repr.relators.iter().map(|r| alphabet.parse(r)).collect::<Result<Vec<_>, _>>()?;
        FinitePresentation::new(alphabet, relators)
    }

    /// ⟨a, b | [a, b]⟩
    pub fn z2() -> Self {
        let alphabet = Alphabet::new(vec!["a".into(), "b".into()]);
        let r = FreeWord::new(2, &[1, 2, -1, -2]).unwrap();
        FinitePresentation::new(alphabet, vec![r]).unwrap()
    }

    /// All cyclic conjugates of relators and their inverses.
    fn relator_cycles(&self) -> Vec<Vec<Letter>> {
        let mut out: Vec<Vec<Letter>> = Vec::new();
        for r in &self.relators {
            for w in [r.letters().to_vec(), r.inverse().letters().to_vec()] {
                let n = w.len();
                for i in 0..n {
                    let c: Vec<Letter> = (0..n).map(|k| w[(i + k) % n]).collect();
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Canonical representative of a cyclic word up to rotation and inversion.
fn canonical(w: &[Letter]) -> Vec<Letter> {
    let a = min_rotation(w);
    let inv: Vec<Letter> = w.iter().rev().map(|x| -x).collect();
    let b = min_rotation(&inv);
    a.min(b)
}

/// Default cap on intermediate word length: |w| plus the longest relator.
pub fn default_length_cap(p: &FinitePresentation, w: &FreeWord) -> usize {
    w.len() + p.relators.iter().map(|r| r.len()).max().unwrap_or(0)
}

/// Minimal number of relator applications turning w into the empty word, by
/// breadth-first search over cyclic words (area is invariant under rotation
/// and inversion). A move replaces a cyclic subword s of w by t⁻¹ where st is
/// a cyclic conjugate of a relator or its inverse. Intermediate words longer
/// than the default cap are not explored.
pub fn brute_force_area(p: &FinitePresentation, w: &FreeWord, budget: usize) -> Result<usize, OracleError> {
    brute_force_area_capped(p, w, budget, default_length_cap(p, w))
}

pub fn brute_force_area_capped(
    p: &FinitePresentation,
    w: &FreeWord,
    budget: usize,
    cap: usize,
) -> Result<usize, OracleError> {
    let cycles = p.relator_cycles();
    let start = canonical(&cyclic_reduce(w.letters().to_vec()));
    if start.is_empty() {
        return Ok(0);
    }
    let mut seen: HashSet<Vec<Letter>> = HashSet::new();
    let mut queue: VecDeque<(Vec<Letter>, usize)> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back((start, 0));
    while let Some((cur, d)) = queue.pop_front() {
        let n = cur.len();
        for i in 0..n {
            for c in &cycles {
                let l = c.len();
                for k in 1..=l.min(n) {
                    if cur[(i + k - 1) % n] != c[k - 1] {
                        break;
                    }
                    if n + l - 2 * k > cap {
                        continue;
                    }
                    // cur = s·rest (rotated at i); s = c[..k] equals (c[k..])⁻¹
                    let mut next: Vec<Letter> = c[k..].iter().rev().map(|x| -x).collect();
                    next.extend((k..n).map(|j| cur[(i + j) % n]));
                    let next = canonical(&cyclic_reduce(next));
                    if next.is_empty() {
                        return Ok(d + 1);
                    }
                    if seen.insert(next.clone()) {
                        if seen.len() > budget {
                            return Err(OracleError::BudgetExceeded(budget));
                        }
                        queue.push_back((next, d + 1));
                    }
                }
            }
        }
    }
    Err(OracleError::Exhausted { explored: seen.len() })
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn is_one(q: &BigRational) -> bool {
    q.is_one()
}

/// Statistics of filling certificates for random null-homotopic loops.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStats {
    pub walk_length: usize,
    pub samples: usize,
    pub max_loop_length: usize,
    pub mean_loop_length: f64,
    /// largest measured Σ C·f(12U) over faces (the B-free part of the bound)
    pub max_bound: BigRational,
    pub mean_bound: f64,
    pub max_bigons: usize,
    pub max_regions: usize,
    pub max_edges: usize,
    pub max_diameter: usize,
}

#[derive(thiserror::Error, Debug)]
pub enum SampleError {
    #[error(transparent)]
    Tessellate(#[from] crate::tessellate::TessError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Build certificates for `samples` random loops (a random walk of `n`
/// letters closed up by rewriting its endpoint) and summarise their bounds.
pub fn sample_dehn(
    gens: &crate::kernel_gens::KernelGenSet,
    n: usize,
    samples: usize,
    f: &FunctionTable,
    rng: &mut impl rand::Rng,
) -> Result<SampleStats, SampleError> {
    use crate::tessellate::{area_bound, build_certificate, random_loop, BoundB};
    let min = match gens.method {
        crate::kernel_gens::Method::Triangle => 3,
        crate::kernel_gens::Method::Square => 4,
    };
    let mut st = SampleStats {
        walk_length: n,
        samples,
        max_loop_length: 0,
        mean_loop_length: 0.0,
        max_bound: BigRational::zero(),
        mean_bound: 0.0,
        max_bigons: 0,
        max_regions: 0,
        max_edges: 0,
        max_diameter: 0,
    };
    let (mut sum_len, mut sum_bound) = (0.0, 0.0);
    for _ in 0..samples {
        let mut w = random_loop(gens, rng, n);
        // a walk that folds back onto itself may close up too short
        while !w.is_empty() && w.len() < min {
            w = random_loop(gens, rng, n.max(min));
        }
        let cert = build_certificate(gens, &w)?;
        let report = area_bound(&cert, f, BoundB::Symbolic, None)?;
        let measured = report.certificate_sum.expect("certificate sum");
        sum_len += w.len() as f64;
        sum_bound += to_f64(&measured.constant);
        st.max_loop_length = st.max_loop_length.max(w.len());
        if measured.constant > st.max_bound {
            st.max_bound = measured.constant.clone();
        }
        st.max_bigons = st.max_bigons.max(measured.b_coeff.to_integer().to_usize().unwrap_or(0));
        st.max_regions = st.max_regions.max(cert.regions.len());
        st.max_edges = st.max_edges.max(cert.edges.len());
        st.max_diameter = st.max_diameter.max(cert.diameter);
    }
    if samples > 0 {
        st.mean_loop_length = sum_len / samples as f64;
        st.mean_bound = sum_bound / samples as f64;
    }
    Ok(st)
}

/// Least-squares slope of log y against log x (reporting only).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ints(t: &FunctionTable) -> Vec<String> {
        t.values().iter().map(format_rational).collect()
    }

    #[test]
    fn closure_examples() {
        let f = FunctionTable::from_ints(&[1, 2, 3]).unwrap();
        assert_eq!(superadditive_closure(&f), f);
        let f = FunctionTable::from_ints(&[5, 6, 7]).unwrap();
        assert_eq!(ints(&superadditive_closure(&f)), ["5", "10", "15"]);
        // n · closure(5, 3, 7/3) = n · (5, 10, 15)
        assert_eq!(ints(&hat_transform(&f)), ["5", "20", "45"]);
        let sq = FunctionTable::power(20, 2);
        assert_eq!(superadditive_closure(&sq), sq);
        assert_eq!(hat_transform(&sq), sq);
        assert!(is_superadditive(&sq) && is_quotient_superadditive(&sq));
        assert!(is_superadditive(&FunctionTable::from_ints(&[1, 2, 3]).unwrap()));
        assert!(!is_superadditive(&FunctionTable::from_ints(&[1, 1, 3]).unwrap()));
    }

    #[test]
    fn hat_of_quotient() {
        // quotient of (5,6,7) is (5,3,7/3); its closure is (5,5,5)
        let f = FunctionTable::from_ints(&[5, 6, 7]).unwrap();
        assert_eq!(ints(&f.quotient()), ["5", "3", "7/3"]);
        assert_eq!(ints(&superadditive_closure(&f.quotient())), ["5", "10", "15"]);
    }

    #[test]
    fn product_examples() {
        let sq = FunctionTable::power(10, 2);
        let cube = FunctionTable::power(10, 3);
        assert_eq!(product_dehn(&[sq.clone(), sq.clone()]).unwrap(), sq);
        assert_eq!(product_dehn(&[sq.clone(), cube.clone()]).unwrap(), cube);
        let lin = FunctionTable::power(10, 1);
        let (f, g) = filling_pair_product(&vec![(sq.clone(), lin.clone()); 3]).unwrap();
        assert_eq!(f, FunctionTable::from_fn(10, |n| rat(2 * (n * n) as i64)));
        assert_eq!(g, FunctionTable::from_fn(10, |n| rat(2 * n as i64)));
        assert!(product_dehn(&[sq, FunctionTable::power(9, 2)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = FunctionTable::new(vec![rat(1), BigRational::new(7.into(), 3.into()), rat(4)]).unwrap();
        let s = f.to_csv_string();
        assert_eq!(s, "n,value\n1,1\n2,7/3\n3,4\n");
        assert_eq!(FunctionTable::read_csv(s.as_bytes()).unwrap(), f);
        assert!(FunctionTable::read_csv("n,value\n2,1\n".as_bytes()).is_err());
        assert!(FunctionTable::read_csv("n,value\n1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn oracle_examples() {
        let p = FinitePresentation::z2();
        let w = |s: &str| p.alphabet.parse(s).unwrap();
        assert_eq!(brute_force_area(&p, &w("a b a^-1 b^-1"), 1000).unwrap(), 1);
        assert_eq!(brute_force_area(&p, &w("a^2 b^2 a^-2 b^-2"), 100_000).unwrap(), 4);
        assert_eq!(brute_force_area(&p, &w(""), 10).unwrap(), 0);
        // a b a^-1 is conjugate to b: every move leads back to b
        assert!(matches!(brute_force_area(&p, &w("a b a^-1"), 2000), Err(OracleError::Exhausted { .. })));
        assert!(matches!(
            brute_force_area_capped(&p, &w("a b a b^-1"), 2000, 40),
            Err(OracleError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn oracle_squares() {
        let p = FinitePresentation::z2();
        for n in 1..=3usize {
            let w = p.alphabet.parse(&format!("a^{n} b^{n} a^-{n} b^-{n}")).unwrap();
            assert_eq!(brute_force_area(&p, &w, 1_000_000).unwrap(), n * n);
        }
    }

    #[test]
    fn oracle_conjugation_invariant() {
        let p = FinitePresentation::z2();
        let w = p.alphabet.parse("a b a^-1 b^-1 b a b^-1 a^-1").unwrap();
        let base = brute_force_area(&p, &w, 100_000).unwrap();
        for g in [1, -1, 2, -2] {
            let x = FreeWord::generator(2, g);
            let c = x.mul(&w).mul(&x.inverse());
            assert_eq!(brute_force_area(&p, &c, 100_000).unwrap(), base);
        }
    }

    #[test]
    fn random_tables_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = random_monotone_table(30, &mut rng);
            assert!(f.is_monotone());
            assert!(is_quotient_superadditive(&f) || quotient_nondecreasing(&f));
        }
    }

    proptest! {
        #[test]
        fn closure_matches_partitions(v in proptest::collection::vec(1i64..40, 1..14)) {
            let f = FunctionTable::from_ints(&v).unwrap();
            prop_assert_eq!(superadditive_closure(&f), closure_by_partitions(&f));
        }

        #[test]
        fn closure_chain(v in proptest::collection::vec(1i64..60, 1..25)) {
            let f = FunctionTable::from_ints(&v).unwrap();
            let bar = superadditive_closure(&f);
            let hat = hat_transform(&f);
            prop_assert!(f.le_pointwise(&bar));
            prop_assert!(bar.le_pointwise(&hat));
            prop_assert!(is_superadditive(&bar));
        }
    }

    #[test]
    fn sampling_grows_quadratically() {
        use crate::kernel_gens::tests::sb3;
        use rand::SeedableRng;
        let g = sb3();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let f = FunctionTable::power(12 * 3 * 256, 2);
        let zero = sample_dehn(&g, 0, 3, &f, &mut rng).unwrap();
        assert!(zero.max_bound.is_zero() && zero.max_loop_length == 0);
        let mut pts = Vec::new();
        let mut last = BigRational::zero();
        for n in [8, 16, 32, 64] {
            let st = sample_dehn(&g, n, 10, &f, &mut rng).unwrap();
            assert!(st.max_bound >= last, "n = {n}");
            last = st.max_bound.clone();
            pts.push((st.mean_loop_length, st.mean_bound));
        }
        let slope = log_log_slope(&pts);
        assert!(slope <= 2.3, "slope {slope}");
    }
}
