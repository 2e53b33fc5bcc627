//! Builders and hypothesis checkers for kernels of maps from products of free
//! groups (Stallings-Bieri groups, Dison's K_m^r(l)) and for P-split maps out
//! of right-angled Artin groups.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::ambient::{Ambient, AmbientRepr, ComponentRepr, SlotRepr, XLetterRepr, AMBIENT_SCHEMA};
use crate::group_core::{Alphabet, FreeWord, IntVector, Letter};
use crate::homs::{image_index, index_of_span, lattice_echelon, standard_basis, Factoring, LatticeIndex};
use crate::kernel_gens::{build_square_gens, build_triangle_gens, KernelGenSet};

pub const SPF_SCHEMA: &str = "spf-spec/1";
pub const VERDICT_SCHEMA: &str = "spf-verdict/1";
pub const GRAPH_SCHEMA: &str = "spf-graph/1";

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum AppError {
    #[error("need n >= 3 factors, got {0}")]
    TooFewFactors(usize),
    #[error("need m >= l, got m = {m}, l = {l}")]
    RankBelowCorank { m: usize, l: usize },
    #[error("{0}")]
    Shape(String),
    #[error("vertex set {0:?} is not a clique")]
    NotClique(Vec<usize>),
    #[error("grouping: {0}")]
    Grouping(String),
    #[error("ambient: {0}")]
    Ambient(String),
}

/// Ranks n_i, matrices phi_i (l x n_i, row-major) and the corank l.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SPFSpec {
    pub schema: String,
    pub ranks: Vec<usize>,
    pub phis: Vec<Vec<Vec<i64>>>,
    pub corank: usize,
}

impl SPFSpec {
    pub fn new(ranks: Vec<usize>, phis: Vec<Vec<Vec<i64>>>, corank: usize) -> Result<Self, AppError> {
        if ranks.len() != phis.len() {
            return Err(AppError::Shape(format!("{} ranks but {} matrices", ranks.len(), phis.len())));
        }
        for (i, (n, phi)) in ranks.iter().zip(&phis).enumerate() {
            if phi.len() != corank {
                return Err(AppError::Shape(format!("factor {}: matrix has {} rows, corank {corank}", i + 1, phi.len())));
            }
            if phi.iter().any(|row| row.len() != *n) {
                return Err(AppError::Shape(format!("factor {}: rows must have {n} entries", i + 1)));
            }
        }
        Ok(SPFSpec { schema: SPF_SCHEMA.into(), ranks, phis, corank })
    }

    pub fn validate(&self) -> Result<(), AppError> {
        if self.schema != SPF_SCHEMA {
            return Err(AppError::Shape(format!("schema {:?} not supported", self.schema)));
        }
        SPFSpec::new(self.ranks.clone(), self.phis.clone(), self.corank).map(|_| ())
    }

    pub fn num_factors(&self) -> usize {
        self.ranks.len()
    }

    /// Image columns of factor i.
    pub fn columns(&self, i: usize) -> Vec<IntVector> {
        (0..self.ranks[i]).map(|j| self.phis[i].iter().map(|row| row[j]).collect()).collect()
    }

    pub fn factor_index(&self, i: usize) -> LatticeIndex {
        if self.corank == 0 {
            return LatticeIndex::Finite(1);
        }
        image_index(&self.phis[i])
    }

    /// Index of phi(prod_{i in block} F_i) in Z^l.
    pub fn block_index(&self, block: &[usize]) -> LatticeIndex {
        if self.corank == 0 {
            return LatticeIndex::Finite(1);
        }
        let cols: Vec<IntVector> = block.iter().flat_map(|&i| self.columns(i)).collect();
        index_of_span(self.corank, &cols)
    }

    pub fn letter_names(&self, i: usize) -> Vec<String> {
        let n = self.ranks[i];
        (0..n)
            .map(|j| {
                if n <= 26 {
                    format!("{}{}", (b'a' + j as u8) as char, i + 1)
                } else {
                    format!("x{}_{}", j + 1, i + 1)
                }
            })
            .collect()
    }
}

/// SB_n: n copies of F_2 = <a_i, b_i> with phi_i(a_i) = 1, phi_i(b_i) = 0.
#[derive(Clone, Debug)]
pub struct StallingsBieri {
    pub spec: SPFSpec,
    /// s_i(1) = a_i in factor i
    pub sections: Vec<FreeWord>,
}

pub fn build_stallings_bieri(n: usize) -> Result<StallingsBieri, AppError> {
    if n < 3 {
        return Err(AppError::TooFewFactors(n));
    }
    let spec = SPFSpec::new(vec![2; n], vec![vec![vec![1, 0]]; n], 1)?;
    let sections = (0..n).map(|_| FreeWord::generator(2, 1)).collect();
    Ok(StallingsBieri { spec, sections })
}

/// K_m^r(l): r copies of F_m, each sending its first l letters to e_1..e_l.
pub fn build_dison(m: usize, r: usize, l: usize) -> Result<SPFSpec, AppError> {
    if m < l {
        return Err(AppError::RankBelowCorank { m, l });
    }
    if r < 3 {
        return Err(AppError::TooFewFactors(r));
    }
    let phi: Vec<Vec<i64>> = (0..l).map(|row| (0..m).map(|j| i64::from(j == row)).collect()).collect();
    SPFSpec::new(vec![m; r], vec![phi; r], l)
}

/// New free basis of F_n, reached by Nielsen moves, whose images are in
/// column echelon form; with a unimodular image they are e_1..e_l and zeros.
pub fn normalize_letters(n: usize, phi: &[Vec<i64>]) -> Vec<(FreeWord, IntVector)> {
    let l = phi.len();
    let mut cols: Vec<(FreeWord, IntVector)> =
        (0..n).map(|j| (FreeWord::generator(n, (j + 1) as Letter), phi.iter().map(|r| r[j]).collect())).collect();
    // x_i <- x_i x_p^-q  acts on images as col_i -= q col_p
    fn sub(cols: &mut [(FreeWord, IntVector)], i: usize, p: usize, q: i64) {
        let (wp, vp) = cols[p].clone();
        let (wi, vi) = &mut cols[i];
        *wi = wi.mul(&wp.pow(-q));
        for (a, b) in vi.iter_mut().zip(&vp) {
            *a -= q * b;
        }
    }
    let mut pivots: Vec<Option<usize>> = vec![None; l];
    let mut free: Vec<usize> = (0..n).collect();
    for row in 0..l {
        loop {
            let nz: Vec<usize> = free.iter().copied().filter(|&i| cols[i].1[row] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| cols[i].1[row].abs()).unwrap();
            for &i in &nz {
                if i != p {
                    let q = Integer::div_floor(&cols[i].1[row], &cols[p].1[row]);
                    sub(&mut cols, i, p, q);
                }
            }
        }
        if let Some(pos) = free.iter().position(|&i| cols[i].1[row] != 0) {
            let i = free.remove(pos);
            if cols[i].1[row] < 0 {
                cols[i].0 = cols[i].0.inverse();
                cols[i].1.iter_mut().for_each(|x| *x = -*x);
            }
            pivots[row] = Some(i);
        }
    }
    // clear entries below each unit pivot using the later pivots
    for t in 0..l {
        let Some(c) = pivots[t] else { continue };
        for (u, pu) in pivots.iter().enumerate().skip(t + 1) {
            let Some(p) = *pu else { continue };
            let (piv, v) = (cols[p].1[u], cols[c].1[u]);
            if piv != 0 && v % piv == 0 && v != 0 {
                sub(&mut cols, c, p, v / piv);
            }
        }
    }
    cols
}

/// Ambient for a grouping of the factors into slots. Each factor's letters are
/// normalized by Nielsen moves; a letter becomes the section of an unused
/// factoring basis vector (at most one per part in each factor), a kernel
/// letter, or a transfer letter.
pub fn grouped_ambient(spec: &SPFSpec, groups: &[Vec<usize>], factoring: &Factoring) -> Result<AmbientRepr, AppError> {
    let r = spec.num_factors();
    let mut seen = BTreeSet::new();
    for g in groups {
        if g.is_empty() {
            return Err(AppError::Grouping("empty group".into()));
        }
        for &i in g {
            if i >= r || !seen.insert(i) {
                return Err(AppError::Grouping(format!("factor {} out of range or repeated", i + 1)));
            }
        }
    }
    if seen.len() != r {
        return Err(AppError::Grouping("groups must cover every factor".into()));
    }
    if factoring.dim() != spec.corank {
        return Err(AppError::Grouping(format!("factoring dimension {} != corank {}", factoring.dim(), spec.corank)));
    }
    let mut slots = Vec::new();
    for g in groups {
        let mut used: [Vec<bool>; 2] = [vec![false; factoring.part_rank(0)], vec![false; factoring.part_rank(1)]];
        let mut components = Vec::new();
        for &i in g {
            let names = spec.letter_names(i);
            let alphabet = Alphabet::new(names.clone());
            let mut x = Vec::new();
            let mut part_used = [false, false];
            for (j, (w, v)) in normalize_letters(spec.ranks[i], &spec.phis[i]).into_iter().enumerate() {
                let role = if v.iter().all(|&t| t == 0) {
                    "kernel".to_string()
                } else {
                    let mut role = None;
                    'search: for part in 0..2 {
                        if part_used[part] {
                            continue;
                        }
                        for (index, b) in factoring.basis(part).iter().enumerate() {
                            if *b == v && !used[part][index] {
                                used[part][index] = true;
                                part_used[part] = true;
                                role = Some(format!("s{}:{}", part + 1, index + 1));
                                break 'search;
                            }
                        }
                    }
                    role.unwrap_or_else(|| "transfer".into())
                };
                let name = if w.letters() == [(j + 1) as Letter] { names[j].clone() } else { format!("{}'", names[j]) };
                x.push(XLetterRepr { name, value: alphabet.format(&w), role });
            }
            components.push(ComponentRepr { letters: names, phi: spec.phis[i].clone(), x: Some(x) });
        }
        slots.push(SlotRepr { components });
    }
    Ok(AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: spec.corank, factoring: factoring.clone(), slots })
}

/// SB_n with its factors grouped into three slots, ready for the triangle method.
pub fn stallings_bieri_ambient(n: usize, groups: &[Vec<usize>]) -> Result<AmbientRepr, AppError> {
    let sb = build_stallings_bieri(n)?;
    if groups.len() != 3 {
        return Err(AppError::Grouping(format!("need 3 groups, got {}", groups.len())));
    }
    grouped_ambient(&sb.spec, groups, &Factoring::whole(1))
}

/// Contiguous partition of 0..r into `parts` blocks of near-equal size.
pub fn balanced_partition(r: usize, parts: usize) -> Vec<Vec<usize>> {
    let q = r / parts;
    let rem = r % parts;
    let mut out = Vec::new();
    let mut next = 0;
    for j in 0..parts {
        let size = q + usize::from(j < rem);
        out.push((next..next + size).collect());
        next += size;
    }
    out
}

/// Lattice spanned by `a` intersected with the lattice spanned by `b`, in Z^m.
pub fn lattice_intersection(m: usize, a: &[IntVector], b: &[IntVector]) -> Vec<IntVector> {
    let ea = to_i64(lattice_echelon(m, a));
    let eb = to_i64(lattice_echelon(m, b));
    // integer kernel of [A | -B] via column reduction with a tracked transform
    let n = ea.len() + eb.len();
    let mut cols: Vec<(Vec<BigInt>, Vec<BigInt>)> = (0..n)
        .map(|j| {
            let v: Vec<BigInt> = if j < ea.len() {
                ea[j].iter().map(|&x| BigInt::from(x)).collect()
            } else {
                eb[j - ea.len()].iter().map(|&x| BigInt::from(-x)).collect()
            };
            let mut t = vec![BigInt::zero(); n];
            t[j] = BigInt::from(1);
            (v, t)
        })
        .collect();
    let mut free: Vec<usize> = (0..n).collect();
    for row in 0..m {
        loop {
            let nz: Vec<usize> = free.iter().copied().filter(|&i| !cols[i].0[row].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            let p = *nz.iter().min_by_key(|&&i| cols[i].0[row].abs()).unwrap();
            for &i in &nz {
                if i == p {
                    continue;
                }
                let q = cols[i].0[row].div_floor(&cols[p].0[row]);
                let (vp, tp) = cols[p].clone();
                for (x, y) in cols[i].0.iter_mut().zip(&vp) {
                    *x -= &q * y;
                }
                for (x, y) in cols[i].1.iter_mut().zip(&tp) {
                    *x -= &q * y;
                }
            }
        }
        if let Some(pos) = free.iter().position(|&i| !cols[i].0[row].is_zero()) {
            free.remove(pos);
        }
    }
    let mut out = Vec::new();
    for &i in &free {
        let t = &cols[i].1;
        let mut v = vec![BigInt::zero(); m];
        for (j, c) in t.iter().enumerate().take(ea.len()) {
            for (o, x) in v.iter_mut().zip(&ea[j]) {
                *o += c * BigInt::from(*x);
            }
        }
        out.push(v.iter().map(|x| i64::try_from(x).expect("small lattice")).collect::<IntVector>());
    }
    to_i64(lattice_echelon(m, &out))
}

fn to_i64(v: Vec<Vec<BigInt>>) -> Vec<IntVector> {
    v.into_iter().map(|c| c.iter().map(|x| i64::try_from(x).expect("small lattice")).collect()).collect()
}

fn index_string(i: &LatticeIndex) -> String {
    match i {
        LatticeIndex::Finite(k) => k.to_string(),
        LatticeIndex::Infinite => "infinite".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Square,
    Triangle,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticParams {
    /// Minimal size of a block of factors with finite index image; computed
    /// from the matrices when absent.
    pub block_size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inequality {
    pub ceil_half_l: usize,
    pub r: usize,
    pub m: usize,
    /// rendered as "ceil(l/2) <= r/(4m)" with numbers substituted
    pub statement: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteReport {
    pub route: Route,
    pub applies: bool,
    pub failed_condition: Option<String>,
    pub detail: String,
    pub partition: Vec<Vec<usize>>,
    pub block_indices: Vec<String>,
    /// index of A = intersection of the block images
    pub common_image_index: Option<String>,
    pub grouping: Vec<Vec<usize>>,
    pub factoring: Option<Factoring>,
    pub ambient: Option<AmbientRepr>,
}

impl RouteReport {
    fn failed(route: Route, condition: &str, detail: String) -> Self {
        RouteReport {
            route,
            applies: false,
            failed_condition: Some(condition.into()),
            detail,
            partition: Vec::new(),
            block_indices: Vec::new(),
            common_image_index: None,
            grouping: Vec::new(),
            factoring: None,
            ambient: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticReport {
    pub schema: String,
    pub r: usize,
    pub l: usize,
    pub factor_indices: Vec<String>,
    pub block_size: Option<usize>,
    pub inequality: Option<Inequality>,
    pub square: RouteReport,
    pub triangle: RouteReport,
    pub verdict: String,
    pub route: Option<Route>,
    pub failed_condition: Option<String>,
    pub notes: Vec<String>,
}

impl QuadraticReport {
    pub fn applies(&self) -> bool {
        self.route.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Kernel generating set of the applicable route.
    pub fn gens(&self) -> Option<Result<KernelGenSet, AppError>> {
        let rep = match self.route? {
            Route::Square => &self.square,
            Route::Triangle => &self.triangle,
        };
        let repr = rep.ambient.as_ref()?;
        Some(gens_for(self.route?, repr))
    }
}

fn gens_for(route: Route, repr: &AmbientRepr) -> Result<KernelGenSet, AppError> {
    let amb = Ambient::from_repr(repr).map_err(|e| AppError::Ambient(e.to_string()))?;
    match route {
        Route::Square => build_square_gens(amb),
        Route::Triangle => build_triangle_gens(amb),
    }
    .map_err(|e| AppError::Ambient(e.to_string()))
}

/// Smallest m such that every m factors have finite index image (None if even
/// all factors together do not).
pub fn minimal_block_size(spec: &SPFSpec) -> Option<usize> {
    let r = spec.num_factors();
    let all: Vec<usize> = (0..r).collect();
    if r == 0 || spec.block_index(&all) == LatticeIndex::Infinite {
        return None;
    }
    (1..=r).find(|&m| subsets(r, m).all(|s| spec.block_index(&s) != LatticeIndex::Infinite))
}

fn subsets(r: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u64..1 << r).filter(move |mask| mask.count_ones() as usize == m).map(move |mask| {
        (0..r).filter(|&i| mask >> i & 1 == 1).collect()
    })
}

/// Check the block-grouping hypotheses and, when they hold, build the
/// grouped ambient and its kernel generating set.
pub fn check_quadratic_conditions(spec: &SPFSpec, params: &QuadraticParams) -> QuadraticReport {
    let r = spec.num_factors();
    let l = spec.corank;
    let factor_indices: Vec<String> = (0..r).map(|i| index_string(&spec.factor_index(i))).collect();
    let mut notes = Vec::new();
    if l == 0 {
        let msg = "corank 0: the kernel is the whole product".to_string();
        return QuadraticReport {
            schema: VERDICT_SCHEMA.into(),
            r,
            l,
            factor_indices,
            block_size: None,
            inequality: None,
            square: RouteReport::failed(Route::Square, "corank", msg.clone()),
            triangle: RouteReport::failed(Route::Triangle, "corank", msg.clone()),
            verdict: format!("does not apply: corank ({msg})"),
            route: None,
            failed_condition: Some("corank".into()),
            notes,
        };
    }
    let block_size = params.block_size.or_else(|| if r <= 20 { minimal_block_size(spec) } else { None });
    let k = l.div_ceil(2);
    let inequality = block_size.map(|m| Inequality {
        ceil_half_l: k,
        r,
        m,
        statement: format!("ceil({l}/2) = {k} <= {r}/(4*{m})"),
        holds: 4 * k * m <= r,
    });
    let square = square_route(spec, block_size, inequality.as_ref());
    let triangle = triangle_route(spec);
    if r == 3 && l == 2 && (0..r).all(|i| spec.factor_index(i) == LatticeIndex::Finite(1)) {
        notes.push("external fact: K_m^3(2) with surjective factors has a cubic lower bound on its Dehn function".into());
    }
    let (route, failed) = if square.applies {
        (Some(Route::Square), None)
    } else if triangle.applies {
        (Some(Route::Triangle), None)
    } else {
        (None, square.failed_condition.clone())
    };
    let verdict = match route {
        Some(Route::Square) => "Theorem applies: quadratic (four-factor grouping)".to_string(),
        Some(Route::Triangle) => "Theorem applies: quadratic (three-factor grouping with split sections)".to_string(),
        None => format!("does not apply: {} ({})", failed.clone().unwrap_or_default(), square.detail),
    };
    QuadraticReport {
        schema: VERDICT_SCHEMA.into(),
        r,
        l,
        factor_indices,
        block_size,
        inequality,
        square,
        triangle,
        verdict,
        route,
        failed_condition: failed,
        notes,
    }
}

fn square_route(spec: &SPFSpec, block_size: Option<usize>, ineq: Option<&Inequality>) -> RouteReport {
    let r = spec.num_factors();
    let l = spec.corank;
    let k = l.div_ceil(2);
    let Some(m) = block_size else {
        return RouteReport::failed(
            Route::Square,
            "finite_index",
            "no block of factors has finite index image in Z^l".into(),
        );
    };
    let ineq = ineq.expect("block size known");
    if !ineq.holds {
        return RouteReport::failed(Route::Square, "inequality", format!("{} is false", ineq.statement));
    }
    let partition = balanced_partition(r, 4 * k);
    debug_assert!(partition.iter().all(|b| b.len() >= m));
    let grouping: Vec<Vec<usize>> =
        (0..4).map(|i| partition[i * k..(i + 1) * k].iter().flatten().copied().collect()).collect();
    let factoring = Factoring::new(standard_basis(l)[..k].to_vec(), standard_basis(l)[k..].to_vec())
        .expect("standard basis");
    finish_route(spec, Route::Square, partition, grouping, factoring)
}

fn triangle_route(spec: &SPFSpec) -> RouteReport {
    let r = spec.num_factors();
    let l = spec.corank;
    if r < 3 {
        return RouteReport::failed(Route::Triangle, "factor_count", format!("{r} factors, need 3"));
    }
    let partition = balanced_partition(r, 3);
    finish_route(spec, Route::Triangle, partition.clone(), partition, Factoring::whole(l))
}

fn finish_route(
    spec: &SPFSpec,
    route: Route,
    partition: Vec<Vec<usize>>,
    grouping: Vec<Vec<usize>>,
    factoring: Factoring,
) -> RouteReport {
    let l = spec.corank;
    let block_idx: Vec<LatticeIndex> = partition.iter().map(|b| spec.block_index(b)).collect();
    let mut rep = RouteReport {
        route,
        applies: false,
        failed_condition: None,
        detail: String::new(),
        partition: partition.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect(),
        block_indices: block_idx.iter().map(index_string).collect(),
        common_image_index: None,
        grouping: grouping.iter().map(|b| b.iter().map(|i| i + 1).collect()).collect(),
        factoring: Some(factoring.clone()),
        ambient: None,
    };
    if let Some(j) = block_idx.iter().position(|i| *i == LatticeIndex::Infinite) {
        rep.failed_condition = Some("finite_index".into());
        rep.detail = format!("block {} has infinite index image", j + 1);
        return rep;
    }
    // A = intersection of the block images
    let mut a = standard_basis(l);
    for b in &partition {
        let cols: Vec<IntVector> = b.iter().flat_map(|&i| spec.columns(i)).collect();
        a = lattice_intersection(l, &a, &cols);
    }
    let a_index = index_of_span(l, &a);
    rep.common_image_index = Some(index_string(&a_index));
    if let Some(j) = block_idx.iter().position(|i| *i != LatticeIndex::Finite(1)) {
        rep.failed_condition = Some("virtual_surjectivity".into());
        rep.detail = format!(
            "block {} only virtually surjects (index {}); passing to finite index subgroups is not constructed",
            j + 1,
            rep.block_indices[j]
        );
        return rep;
    }
    let repr = match grouped_ambient(spec, &grouping, &factoring) {
        Ok(r) => r,
        Err(e) => {
            rep.failed_condition = Some("letter_sections".into());
            rep.detail = e.to_string();
            return rep;
        }
    };
    if let Err(e) = gens_for(route, &repr) {
        rep.failed_condition = Some("letter_sections".into());
        rep.detail = format!("no commuting single-letter sections: {e}");
        return rep;
    }
    rep.ambient = Some(repr);
    rep.applies = true;
    rep.detail = "sections found in every group".into();
    rep
}

/// Finite simple graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<(usize, usize)>) -> Result<Self, AppError> {
        let n = vertices.len();
        let mut seen = BTreeSet::new();
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(AppError::Shape(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(AppError::Shape(format!("loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(AppError::Shape(format!("repeated edge ({u}, {v})")));
            }
        }
        Ok(Graph { vertices, edges })
    }

    pub fn cycle(n: usize) -> Self {
        let vertices = (0..n).map(|i| format!("v{}", i + 1)).collect();
        Graph::new(vertices, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("cycle is simple")
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.edges.iter().any(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
    }

    pub fn is_clique(&self, s: &[usize]) -> bool {
        s.iter().enumerate().all(|(i, &u)| s[i + 1..].iter().all(|&v| u != v && self.adjacent(u, v)))
    }

    /// All cliques, including the empty one, by increasing size.
    pub fn cliques(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        let mut k = 0;
        while k < out.len() {
            let c = out[k].clone();
            let start = c.last().map_or(0, |&v| v + 1);
            for v in start..n {
                if c.iter().all(|&u| self.adjacent(u, v)) {
                    let mut d = c.clone();
                    d.push(v);
                    out.push(d);
                }
            }
            k += 1;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaagVerdict {
    pub pass: bool,
    /// "A not covered", "B not covered", "Delta1 image leaves A", ...
    pub witness: Option<String>,
    pub delta1: Vec<usize>,
    pub delta2: Vec<usize>,
}

/// How span(images) compares with span(target).
fn onto(m: usize, images: &[IntVector], target: &[IntVector]) -> Result<(), &'static str> {
    let mut all = images.to_vec();
    all.extend_from_slice(target);
    let joint = lattice_echelon(m, &all);
    if lattice_echelon(m, target) != joint {
        return Err("leaves");
    }
    if lattice_echelon(m, images) != joint {
        return Err("not covered");
    }
    Ok(())
}

/// P-splitting test for phi: A_Gamma -> Z^m from cliques Delta1, Delta2.
pub fn raag_psplit_check(
    graph: &Graph,
    phi: &[IntVector],
    p: &Factoring,
    delta1: &[usize],
    delta2: &[usize],
) -> Result<RaagVerdict, AppError> {
    let m = p.dim();
    if phi.len() != graph.vertices.len() || phi.iter().any(|v| v.len() != m) {
        return Err(AppError::Shape("phi must give one vector of length m per vertex".into()));
    }
    for d in [delta1, delta2] {
        if d.iter().any(|&v| v >= graph.vertices.len()) || !graph.is_clique(d) {
            return Err(AppError::NotClique(d.to_vec()));
        }
    }
    let img = |d: &[usize]| d.iter().map(|&v| phi[v].clone()).collect::<Vec<_>>();
    let mut verdict = RaagVerdict { pass: false, witness: None, delta1: delta1.to_vec(), delta2: delta2.to_vec() };
    for (part, d, label) in [(0, delta1, "A"), (1, delta2, "B")] {
        match onto(m, &img(d), p.basis(part)) {
            Ok(()) => {}
            Err("leaves") => {
                verdict.witness = Some(format!("Delta{} image leaves {label}", part + 1));
                return Ok(verdict);
            }
            Err(_) => {
                verdict.witness = Some(format!("{label} not covered"));
                return Ok(verdict);
            }
        }
    }
    let both: Vec<usize> = delta1.iter().chain(delta2).copied().collect();
    if index_of_span(m, &img(&both)) != LatticeIndex::Finite(1) {
        verdict.witness = Some("Delta1 and Delta2 do not surject onto Z^m".into());
        return Ok(verdict);
    }
    verdict.pass = true;
    Ok(verdict)
}

/// Split test: a clique whose vertices map to a basis of Z^m.
pub fn raag_split_check(graph: &Graph, phi: &[IntVector], delta: &[usize]) -> Result<bool, AppError> {
    if delta.iter().any(|&v| v >= graph.vertices.len()) || !graph.is_clique(delta) {
        return Err(AppError::NotClique(delta.to_vec()));
    }
    let Some(m) = phi.first().map(|v| v.len()) else { return Ok(delta.is_empty()) };
    let cols: Vec<IntVector> = delta.iter().map(|&v| phi[v].clone()).collect();
    Ok(delta.len() == m && index_of_span(m, &cols) == LatticeIndex::Finite(1))
}

/// First passing clique pair (smallest cliques first), if any.
pub fn raag_psplit_search(graph: &Graph, phi: &[IntVector], p: &Factoring) -> Result<Option<RaagVerdict>, AppError> {
    if graph.vertices.len() > 16 {
        return Err(AppError::Shape("clique search is limited to 16 vertices".into()));
    }
    if phi.len() != graph.vertices.len() {
        return Err(AppError::Shape("phi must give one vector per vertex".into()));
    }
    let m = p.dim();
    let cliques = graph.cliques();
    let img = |d: &[usize]| d.iter().map(|&v| phi[v].clone()).collect::<Vec<_>>();
    let good = |part: usize| -> Vec<&Vec<usize>> {
        cliques.iter().filter(|c| onto(m, &img(c), p.basis(part)).is_ok()).collect()
    };
    let (g1, g2) = (good(0), good(1));
    for d1 in &g1 {
        for d2 in &g2 {
            let v = raag_psplit_check(graph, phi, p, d1, d2)?;
            if v.pass {
                return Ok(Some(v));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fill_square::build_spanning_square;
    use crate::fill_triangle::build_spanning_triangle;
    use crate::kernel_gens::random_kernel_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stallings_bieri_instances() {
        assert_eq!(build_stallings_bieri(2).unwrap_err(), AppError::TooFewFactors(2));
        let sb = build_stallings_bieri(3).unwrap();
        for i in 0..3 {
            assert_eq!(sb.spec.factor_index(i), LatticeIndex::Finite(1));
        }
        let repr = stallings_bieri_ambient(3, &[vec![0], vec![1], vec![2]]).unwrap();
        let gens = build_triangle_gens(Ambient::from_repr(&repr).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_kernel_element(&gens, &mut rng, 10);
            let w = gens.rewrite(&x).unwrap();
            assert_eq!(gens.eval(&w), x);
        }
    }

    #[test]
    fn grouped_stallings_bieri_triangles() {
        for (n, groups) in [(4, vec![vec![0, 1], vec![2], vec![3]]), (5, vec![vec![0], vec![1, 2], vec![3, 4]])] {
            let repr = stallings_bieri_ambient(n, &groups).unwrap();
            let gens = build_triangle_gens(Ambient::from_repr(&repr).unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..40 {
                let x = random_kernel_element(&gens, &mut rng, 8);
                assert_eq!(gens.eval(&gens.rewrite(&x).unwrap()), x);
                let v: Vec<_> = (0..3).map(|_| random_kernel_element(&gens, &mut rng, 8)).collect();
                let t = build_spanning_triangle(&gens, &v[0], &v[1], &v[2]).unwrap();
                t.check(&gens).unwrap();
            }
        }
    }

    #[test]
    fn dison_instances() {
        assert_eq!(build_dison(1, 3, 2).unwrap_err(), AppError::RankBelowCorank { m: 1, l: 2 });
        for r in 3..=5 {
            let s = build_dison(2, r, 2).unwrap();
            assert!((0..r).all(|i| s.factor_index(i) == LatticeIndex::Finite(1)));
            assert_eq!(s.phis[0], vec![vec![1, 0], vec![0, 1]]);
        }
        let s = build_dison(2, 3, 1).unwrap();
        assert_eq!(s.phis[0], vec![vec![1, 0]]);
    }

    #[test]
    fn quadratic_verdicts() {
        let rep = check_quadratic_conditions(&build_dison(2, 4, 2).unwrap(), &QuadraticParams::default());
        assert_eq!(rep.route, Some(Route::Square), "{}", rep.to_json());
        assert_eq!(rep.square.partition, vec![vec![1], vec![2], vec![3], vec![4]]);
        let rep = check_quadratic_conditions(&build_dison(2, 3, 2).unwrap(), &QuadraticParams::default());
        assert!(!rep.applies());
        assert_eq!(rep.failed_condition.as_deref(), Some("inequality"));
        assert_eq!(rep.triangle.failed_condition.as_deref(), Some("letter_sections"));
        assert_eq!(rep.notes.len(), 1);
        let sb = build_stallings_bieri(3).unwrap();
        let rep = check_quadratic_conditions(&sb.spec, &QuadraticParams::default());
        assert_eq!(rep.route, Some(Route::Triangle));
        assert_eq!(rep.block_size, Some(1));
        let rep = check_quadratic_conditions(&build_dison(3, 8, 3).unwrap(), &QuadraticParams::default());
        assert_eq!(rep.route, Some(Route::Square));
        assert_eq!(rep.square.grouping, vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]]);
    }

    #[test]
    fn applied_squares_fill() {
        for (m, r, l) in [(2, 4, 2), (3, 8, 3), (2, 6, 2)] {
            let rep = check_quadratic_conditions(&build_dison(m, r, l).unwrap(), &QuadraticParams::default());
            let gens = rep.gens().unwrap().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(r as u64);
            for _ in 0..20 {
                let v: Vec<_> = (0..4).map(|_| random_kernel_element(&gens, &mut rng, 6)).collect();
                let sq = build_spanning_square(&gens, &v[0], &v[1], &v[2], &v[3]).unwrap();
                sq.check(&gens).unwrap();
            }
        }
    }

    #[test]
    fn virtual_surjection_is_reported() {
        let spec = SPFSpec::new(vec![2; 4], vec![vec![vec![2, 0]]; 4], 1).unwrap();
        let rep = check_quadratic_conditions(&spec, &QuadraticParams::default());
        assert!(!rep.applies());
        assert_eq!(rep.square.failed_condition.as_deref(), Some("virtual_surjectivity"));
        assert_eq!(rep.square.common_image_index.as_deref(), Some("2"));
    }

    #[test]
    fn nielsen_normalization() {
        let out = normalize_letters(3, &[vec![2, 3, 0], vec![1, 1, 1]]);
        let imgs: Vec<IntVector> = out.iter().map(|(_, v)| v.clone()).collect();
        assert!(imgs.contains(&vec![1, 0]) && imgs.contains(&vec![0, 1]) && imgs.contains(&vec![0, 0]));
        // a transformed spec still yields sections
        let spec = SPFSpec::new(vec![3; 4], vec![vec![vec![2, 3, 0], vec![1, 1, 1]]; 4], 2).unwrap();
        let rep = check_quadratic_conditions(&spec, &QuadraticParams::default());
        assert_eq!(rep.route, Some(Route::Square), "{}", rep.to_json());
    }

    #[test]
    fn lattice_intersections() {
        let a = vec![vec![2, 0], vec![0, 1]];
        let b = vec![vec![1, 0], vec![0, 3]];
        assert_eq!(index_of_span(2, &lattice_intersection(2, &a, &b)), LatticeIndex::Finite(6));
        let c = vec![vec![1, 1]];
        assert_eq!(lattice_intersection(2, &a, &c), vec![vec![2, 2]]);
    }

    #[test]
    fn raag_examples() {
        let hex = Graph::cycle(6);
        let phi: Vec<IntVector> = (0..6).map(|i| if i % 2 == 0 { vec![1, 0] } else { vec![0, 1] }).collect();
        let p = Factoring::new(vec![vec![1, 0]], vec![vec![0, 1]]).unwrap();
        assert!(raag_psplit_check(&hex, &phi, &p, &[0], &[1]).unwrap().pass);
        assert!(raag_split_check(&hex, &phi, &[0, 1]).unwrap());
        assert!(!raag_split_check(&hex, &phi, &[0]).unwrap());
        assert!(matches!(raag_psplit_check(&hex, &phi, &p, &[0, 2], &[1]), Err(AppError::NotClique(_))));
        assert!(raag_psplit_search(&hex, &phi, &p).unwrap().is_some());

        let two = Graph::new(vec!["u".into(), "v".into()], vec![]).unwrap();
        let phi2 = vec![vec![1, 0], vec![0, 1]];
        assert!(raag_psplit_check(&two, &phi2, &p, &[0], &[1]).unwrap().pass);
        let whole = Factoring::whole(2);
        let v = raag_psplit_check(&two, &phi2, &whole, &[0], &[]).unwrap();
        assert!(!v.pass);
        assert_eq!(v.witness.as_deref(), Some("A not covered"));
        assert!(raag_psplit_search(&two, &phi2, &whole).unwrap().is_none());
    }

    #[test]
    fn grouped_certificates_verify() {
        use crate::dehn_tools::FunctionTable;
        use crate::kernel_gens::Method;
        use crate::tessellate::{area_bound, build_certificate, random_loop, verify_certificate, BoundB};
        let sb4 = stallings_bieri_ambient(4, &[vec![0, 1], vec![2], vec![3]]).unwrap();
        let sb4 = build_triangle_gens(Ambient::from_repr(&sb4).unwrap()).unwrap();
        let k383 = check_quadratic_conditions(&build_dison(3, 8, 3).unwrap(), &QuadraticParams::default());
        let k383 = k383.gens().unwrap().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for gens in [sb4, k383] {
            let step = gens.step_constant();
            assert!(step > 1);
            for _ in 0..20 {
                let w = random_loop(&gens, &mut rng, 8);
                if w.len() < 4 {
                    continue;
                }
                let c = build_certificate(&gens, &w).unwrap();
                verify_certificate(&c).unwrap();
                let pow = if c.method == Method::Triangle { 1 << c.k } else { 3usize.pow(c.k as u32) };
                let f = FunctionTable::power(96 * step * pow, 2);
                let r = area_bound(&c, &f, BoundB::Symbolic, None).unwrap();
                assert_eq!(r.step, step);
                assert!(r.certificate_sum.unwrap().le_for_all_b(&r.depth_sum));
                assert!(r.holds);
            }
        }
    }
}
