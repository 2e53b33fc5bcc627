use std::collections::HashMap;

use crate::dehn_tools::{FunctionTable, TableError};
use crate::fill_triangle::{adjacent_letter, polygon_area_bound, PolygonAreaBound};
use crate::group_core::ProductElement;
use crate::kernel_gens::{KernelError, KernelGenSet, KernelWord, Method, SubgroupTag};
use crate::spanning::{PolyEdge, PolyRegion, SpanningPolygon};

pub type SpanningSquare = SpanningPolygon;

/// Outer vertex roles a, b, c, d as indices 0..4.
type Corner = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Entry {
    Fixed(Corner),
    /// coordinate in corner_i · s^part(ℤ)
    Coset(Corner, usize),
}

type Spec = [Entry; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Op {
    /// move coordinate p to the target's value, section letters of part q compensating in comp[q]
    Move { p: usize, comp: [usize; 2] },
    /// settle part-`part` section shifts of coordinate a against coordinate b
    Restore { part: usize, a: usize, b: usize },
}

/// d_slot(corner, corner) with an integer coefficient
type Term = (usize, usize, Corner, Corner);

#[derive(Clone, Debug)]
struct EdgePlan {
    from: (usize, usize),
    to: (usize, usize),
    ops: Vec<Op>,
    alphabet: SubgroupTag,
    bound: Vec<Term>,
}

#[derive(Clone, Debug)]
struct RegionPlan {
    tag: SubgroupTag,
    cycle: Vec<(usize, usize)>,
}

struct SquarePlan {
    points: Vec<(usize, usize)>,
    specs: HashMap<(usize, usize), Spec>,
    edges: Vec<EdgePlan>,
    regions: Vec<RegionPlan>,
}

// local quarter roles: X is the quarter's own corner, H its horizontal
// neighbour, W its vertical neighbour, O the opposite corner
const X: usize = 0;
const H: usize = 1;
const W: usize = 2;
const O: usize = 3;

struct Quarter {
    /// grid map on indices 0..=4
    flip_x: bool,
    flip_y: bool,
    /// roles X, H, W, O as corners
    roles: [Corner; 4],
    /// local coordinate i becomes global coordinate perm[i]
    perm: [usize; 4],
    swap: bool,
}

const A_: Corner = 0;
const B_: Corner = 1;
const C_: Corner = 2;
const D_: Corner = 3;

const QUARTERS: [Quarter; 4] = [
    Quarter { flip_x: false, flip_y: false, roles: [D_, C_, A_, B_], perm: [0, 1, 2, 3], swap: false },
    Quarter { flip_x: true, flip_y: false, roles: [C_, D_, B_, A_], perm: [2, 3, 0, 1], swap: true },
    Quarter { flip_x: false, flip_y: true, roles: [A_, B_, D_, C_], perm: [3, 2, 1, 0], swap: true },
    Quarter { flip_x: true, flip_y: true, roles: [B_, A_, C_, D_], perm: [1, 0, 3, 2], swap: false },
];

fn local_vertices() -> Vec<((usize, usize), Spec)> {
    use Entry::*;
    vec![
        ((0, 0), [Fixed(X), Fixed(X), Fixed(X), Fixed(X)]),
        ((1, 0), [Fixed(X), Fixed(H), Coset(X, 0), Coset(X, 1)]),
        ((0, 1), [Fixed(W), Fixed(X), Coset(X, 0), Coset(X, 1)]),
        ((1, 1), [Fixed(W), Fixed(H), Coset(X, 0), Coset(X, 1)]),
        ((2, 0), [Fixed(X), Coset(H, 0), Fixed(H), Coset(X, 1)]),
        ((0, 2), [Coset(W, 0), Fixed(X), Fixed(W), Coset(X, 1)]),
        ((2, 1), [Fixed(W), Coset(H, 0), Fixed(O), Coset(X, 1)]),
        ((1, 2), [Coset(W, 0), Fixed(H), Fixed(O), Coset(X, 1)]),
    ]
}

fn mv(p: usize, c0: usize, c1: usize) -> Op {
    Op::Move { p, comp: [c0, c1] }
}

fn tag(kernel: &[usize], t: &[usize], u: &[usize]) -> SubgroupTag {
    let mut pairs = Vec::new();
    for (part, s) in [(0usize, t), (1, u)] {
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                pairs.push((part, s[i], s[j]));
            }
        }
    }
    SubgroupTag::new(kernel.to_vec(), &pairs)
}

/// Fundamental-domain edges with their alphabets and length bounds (0-based coordinates).
fn local_edges() -> Vec<EdgePlan> {
    let e = |from, to, ops: Vec<Op>, alphabet, bound: Vec<Term>| EdgePlan { from, to, ops, alphabet, bound };
    vec![
        e((0, 0), (1, 0), vec![mv(1, 2, 3)], tag(&[1], &[1, 2], &[1, 3]), vec![(1, 1, X, H)]),
        e((0, 0), (0, 1), vec![mv(0, 2, 3)], tag(&[0], &[0, 2], &[0, 3]), vec![(1, 0, X, W)]),
        e((1, 0), (1, 1), vec![mv(0, 2, 3)], tag(&[0], &[0, 2], &[0, 3]), vec![(1, 0, X, W)]),
        e((0, 1), (1, 1), vec![mv(1, 2, 3)], tag(&[1], &[1, 2], &[1, 3]), vec![(1, 1, X, H)]),
        e((1, 0), (2, 0), vec![mv(2, 1, 3)], tag(&[2], &[1, 2], &[2, 3]), vec![(1, 1, X, H), (1, 2, X, H)]),
        e((0, 1), (0, 2), vec![mv(2, 0, 3)], tag(&[2], &[0, 2], &[2, 3]), vec![(1, 0, X, W), (1, 2, X, W)]),
        e(
            (2, 0),
            (2, 1),
            vec![mv(0, 1, 3), mv(2, 1, 3)],
            tag(&[0, 2], &[0, 1, 2], &[0, 2, 3]),
            vec![(1, 0, X, W), (1, 2, H, O)],
        ),
        e(
            (0, 2),
            (1, 2),
            vec![mv(1, 0, 3), mv(2, 0, 3)],
            tag(&[1, 2], &[0, 1, 2], &[1, 2, 3]),
            vec![(1, 1, X, H), (1, 2, W, O)],
        ),
        e(
            (1, 1),
            (2, 1),
            vec![mv(2, 1, 3)],
            tag(&[2], &[1, 2], &[2, 3]),
            vec![(1, 0, X, W), (1, 1, X, H), (1, 2, X, O)],
        ),
        e(
            (1, 1),
            (1, 2),
            vec![mv(2, 0, 3)],
            tag(&[2], &[0, 2], &[2, 3]),
            vec![(1, 0, X, W), (1, 1, X, H), (1, 2, X, O)],
        ),
        e(
            (1, 2),
            (2, 1),
            vec![Op::Restore { part: 0, a: 0, b: 1 }],
            tag(&[], &[0, 1], &[]),
            vec![(2, 0, X, W), (2, 1, X, H), (2, 2, X, O)],
        ),
    ]
}

fn local_regions() -> Vec<RegionPlan> {
    vec![
        RegionPlan { tag: tag(&[0, 1], &[0, 1, 2], &[0, 1, 3]), cycle: vec![(0, 0), (1, 0), (1, 1), (0, 1)] },
        RegionPlan { tag: tag(&[0, 2], &[0, 1, 2], &[0, 2, 3]), cycle: vec![(1, 0), (2, 0), (2, 1), (1, 1)] },
        RegionPlan { tag: tag(&[1, 2], &[0, 1, 2], &[1, 2, 3]), cycle: vec![(0, 1), (1, 1), (1, 2), (0, 2)] },
        RegionPlan { tag: tag(&[2], &[0, 1, 2], &[2, 3]), cycle: vec![(1, 1), (2, 1), (1, 2)] },
    ]
}

impl Quarter {
    fn point(&self, (i, j): (usize, usize)) -> (usize, usize) {
        (if self.flip_x { 4 - i } else { i }, if self.flip_y { 4 - j } else { j })
    }

    fn part(&self, p: usize) -> usize {
        if self.swap {
            1 - p
        } else {
            p
        }
    }

    fn spec(&self, local: &Spec) -> Spec {
        let mut out = [Entry::Fixed(0); 4];
        for (i, e) in local.iter().enumerate() {
            out[self.perm[i]] = match *e {
                Entry::Fixed(r) => Entry::Fixed(self.roles[r]),
                Entry::Coset(r, p) => Entry::Coset(self.roles[r], self.part(p)),
            };
        }
        out
    }

    fn op(&self, op: &Op) -> Op {
        match *op {
            Op::Move { p, comp } => {
                let mut c = [0; 2];
                for (part, &slot) in comp.iter().enumerate() {
                    c[self.part(part)] = self.perm[slot];
                }
                Op::Move { p: self.perm[p], comp: c }
            }
            Op::Restore { part, a, b } => Op::Restore { part: self.part(part), a: self.perm[a], b: self.perm[b] },
        }
    }

    fn tag(&self, t: &SubgroupTag) -> SubgroupTag {
        let kernel = t.kernel.iter().map(|&s| self.perm[s]).collect();
        let pairs: Vec<(usize, usize, usize)> =
            t.pairs.iter().map(|&(p, i, j)| (self.part(p), self.perm[i], self.perm[j])).collect();
        SubgroupTag::new(kernel, &pairs)
    }

    fn bound(&self, b: &[Term]) -> Vec<Term> {
        b.iter().map(|&(k, s, p, q)| (k, self.perm[s], self.roles[p], self.roles[q])).collect()
    }
}

fn build_plan() -> SquarePlan {
    let mut specs: HashMap<(usize, usize), Spec> = HashMap::new();
    let mut points = Vec::new();
    let mut edges: Vec<EdgePlan> = Vec::new();
    let mut regions = Vec::new();
    for q in &QUARTERS {
        for (pt, s) in local_vertices() {
            let g = q.point(pt);
            let spec = q.spec(&s);
            match specs.get(&g) {
                Some(old) => assert_eq!(*old, spec, "quarters disagree on vertex {g:?}"),
                None => {
                    specs.insert(g, spec);
                    points.push(g);
                }
            }
        }
        for e in local_edges() {
            let (from, to) = (q.point(e.from), q.point(e.to));
            let alphabet = q.tag(&e.alphabet);
            if let Some(old) = edges.iter().find(|o| (o.from == from && o.to == to) || (o.from == to && o.to == from)) {
                // shared edge: keep the first word; both quarters must accept it
                assert!(
                    old.alphabet.families().is_subset(&alphabet.families()),
                    "shared edge {from:?}-{to:?} has incompatible alphabets"
                );
                continue;
            }
            edges.push(EdgePlan {
                from,
                to,
                ops: e.ops.iter().map(|o| q.op(o)).collect(),
                alphabet,
                bound: q.bound(&e.bound),
            });
        }
        for r in local_regions() {
            let mut cycle: Vec<(usize, usize)> = r.cycle.iter().map(|&p| q.point(p)).collect();
            // a→b→c→d runs clockwise in grid coordinates; regions follow it
            if q.flip_x == q.flip_y {
                cycle.reverse();
            }
            regions.push(RegionPlan { tag: q.tag(&r.tag), cycle });
        }
    }
    regions.push(RegionPlan { tag: tag(&[], &[0, 1], &[2, 3]), cycle: vec![(1, 2), (2, 3), (3, 2), (2, 1)] });
    SquarePlan { points, specs, edges, regions }
}

fn point_name(p: (usize, usize)) -> String {
    match p {
        (0, 4) => "a".into(),
        (4, 4) => "b".into(),
        (4, 0) => "c".into(),
        (0, 0) => "d".into(),
        (i, j) => format!("g{i}{j}"),
    }
}

const CORNER_NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn bound_value(gens: &KernelGenSet, corners: &[&ProductElement; 4], b: &[Term]) -> (usize, String) {
    let mut v = 0;
    let mut parts = Vec::new();
    for &(k, s, p, q) in b {
        let (p, q) = (p.min(q), p.max(q));
        v += k * gens.ambient.slot_dist(s, corners[p], corners[q]);
        let t = format!("d{}({},{})", s + 1, CORNER_NAMES[p], CORNER_NAMES[q]);
        parts.push(if k == 1 { t } else { format!("{k}{t}") });
    }
    (v, parts.join("+"))
}

/// The unique kernel element with the given fixed coordinates and at most
/// one section coset coordinate per part.
fn solve_vertex(gens: &KernelGenSet, corners: &[&ProductElement; 4], spec: &Spec) -> Result<ProductElement, KernelError> {
    let amb = &gens.ambient;
    let mut x = amb.identity();
    let mut coset_slot: [Option<usize>; 2] = [None, None];
    for (s, e) in spec.iter().enumerate() {
        let (Entry::Fixed(c) | Entry::Coset(c, _)) = *e;
        for &comp in &amb.slots[s] {
            x.coords[comp] = corners[c].coords[comp].clone();
        }
        if let Entry::Coset(_, part) = *e {
            if coset_slot[part].replace(s).is_some() {
                return Err(KernelError::Internal("two coset coordinates of one part".into()));
            }
        }
    }
    let v = amb.phi(&x);
    let neg: Vec<i64> = v.iter().map(|t| -t).collect();
    let (ca, cb) = amb.factoring.split(&neg);
    for (part, coeffs) in [(0, ca), (1, cb)] {
        match coset_slot[part] {
            Some(s) => amb.shift_by_section(&mut x, s, part, &coeffs),
            None => {
                if coeffs.iter().any(|&t| t != 0) {
                    return Err(KernelError::Internal(format!(
                        "vertex {spec:?} has no solution: part {} residue {coeffs:?}",
                        part + 1
                    )));
                }
            }
        }
    }
    if !amb.in_kernel(&x) {
        return Err(KernelError::Internal("solved vertex is not in the kernel".into()));
    }
    Ok(x)
}

fn run_edge(gens: &KernelGenSet, plan: &EdgePlan, from: &ProductElement, to: &ProductElement) -> Result<KernelWord, KernelError> {
    let amb = &gens.ambient;
    let mut w = gens.walker(from);
    for op in &plan.ops {
        match *op {
            Op::Move { p, comp } => w.move_to(p, to, [Some(comp[0]), Some(comp[1])])?,
            Op::Restore { part, a, b } => {
                let diff = amb.restrict(&w.cur, a).inverse().mul(&amb.restrict(to, a));
                let coeffs = amb.section_coeffs(a, part, &diff).ok_or(KernelError::NotSection { slot: a, part })?;
                w.restore(part, a, b, &coeffs);
            }
        }
    }
    if w.cur != *to {
        return Err(KernelError::Internal(format!(
            "edge {:?}->{:?} does not reach the solved vertex (coordinate uniqueness failed)",
            plan.from, plan.to
        )));
    }
    Ok(w.take_word())
}

fn check_kernel(gens: &KernelGenSet, x: &ProductElement) -> Result<(), KernelError> {
    if !gens.ambient.shape_ok(x) {
        return Err(KernelError::Shape);
    }
    let v = gens.ambient.phi(x);
    if v.iter().any(|&t| t != 0) {
        return Err(KernelError::NotInKernel(v));
    }
    Ok(())
}

/// Grid points along each side, in boundary order a→b→c→d→a.
fn side_points(i: usize) -> Vec<(usize, usize)> {
    match i {
        0 => (0..=4).map(|x| (x, 4)).collect(),
        1 => (0..=4).rev().map(|y| (4, y)).collect(),
        2 => (0..=4).rev().map(|x| (x, 0)).collect(),
        _ => (0..=4).map(|y| (0, y)).collect(),
    }
}

/// Spanning square on four kernel elements a, b, c, d (boundary order a→b→c→d).
pub fn build_spanning_square(
    gens: &KernelGenSet,
    a: &ProductElement,
    b: &ProductElement,
    c: &ProductElement,
    d: &ProductElement,
) -> Result<SpanningSquare, KernelError> {
    build_square_parts(gens, [a, b, c, d], None)
}

fn build_square_parts(
    gens: &KernelGenSet,
    corners: [&ProductElement; 4],
    only_side: Option<usize>,
) -> Result<SpanningSquare, KernelError> {
    if gens.method != Method::Square {
        return Err(KernelError::SlotCount { method: Method::Square, needed: 4, found: gens.num_slots() });
    }
    for x in corners {
        check_kernel(gens, x)?;
    }
    let plan = build_plan();
    let wanted: Option<Vec<(usize, usize)>> = only_side.map(side_points);
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut names = Vec::new();
    let mut vertices = Vec::new();
    for &p in &plan.points {
        if let Some(w) = &wanted {
            if !w.contains(&p) {
                continue;
            }
        }
        let v = solve_vertex(gens, &corners, &plan.specs[&p])?;
        index.insert(p, vertices.len());
        names.push(point_name(p));
        vertices.push(v);
    }
    for (k, name) in CORNER_NAMES.iter().enumerate() {
        if let Some(&i) = index.get(&[(0, 4), (4, 4), (4, 0), (0, 0)][k]) {
            if vertices[i] != *corners[k] {
                return Err(KernelError::Internal(format!("corner {name} does not solve to itself")));
            }
        }
    }
    let mut edges = Vec::new();
    let mut edge_at: HashMap<((usize, usize), (usize, usize)), usize> = HashMap::new();
    for e in &plan.edges {
        let (Some(&f), Some(&t)) = (index.get(&e.from), index.get(&e.to)) else { continue };
        if wanted.is_some() && (e.from.0 != e.to.0 && e.from.1 != e.to.1) {
            continue;
        }
        let word = run_edge(gens, e, &vertices[f], &vertices[t])?;
        let (bound, bound_expr) = bound_value(gens, &corners, &e.bound);
        edge_at.insert((e.from, e.to), edges.len());
        edges.push(PolyEdge { from: f, to: t, alphabet: e.alphabet.clone(), word, bound, bound_expr });
    }
    let step = |p: (usize, usize), q: (usize, usize)| -> (usize, bool) {
        if let Some(&e) = edge_at.get(&(p, q)) {
            (e, true)
        } else {
            (edge_at[&(q, p)], false)
        }
    };
    let mut regions = Vec::new();
    if wanted.is_none() {
        for r in &plan.regions {
            let n = r.cycle.len();
            let cycle = (0..n).map(|k| step(r.cycle[k], r.cycle[(k + 1) % n])).collect();
            regions.push(PolyRegion { tag: r.tag.clone(), cycle });
        }
    }
    let mut sides = Vec::new();
    for i in 0..4 {
        if only_side.is_some_and(|s| s != i) {
            continue;
        }
        let pts = side_points(i);
        sides.push(pts.windows(2).map(|w| step(w[0], w[1])).collect());
    }
    let amb = &gens.ambient;
    let [a, b, c, d] = corners;
    let radius_sum_u = amb.radius(a, b) + amb.radius(b, c) + amb.radius(c, d) + amb.radius(a, d);
    let perimeter_d = amb.dist(a, b) + amb.dist(b, c) + amb.dist(c, d) + amb.dist(a, d);
    let corner_idx = [(0, 4), (4, 4), (4, 0), (0, 0)].iter().filter_map(|p| index.get(p).copied()).collect();
    Ok(SpanningPolygon {
        method: Method::Square,
        vertex_names: names,
        vertices,
        edges,
        regions,
        corners: corner_idx,
        sides,
        radius_sum_u,
        perimeter_d,
    })
}

/// Side `side` (0 = a→b, 1 = b→c, 2 = c→d, 3 = d→a) of the square on
/// endpoints x → y, computed from those two corners only.
pub fn square_side_path(
    gens: &KernelGenSet,
    side: usize,
    x: &ProductElement,
    y: &ProductElement,
) -> Result<KernelWord, KernelError> {
    // the other two corners never enter this side's vertices or edges
    let corners: [&ProductElement; 4] = match side {
        0 => [x, y, y, x],
        1 => [x, x, y, y],
        2 => [y, y, x, y],
        _ => [y, x, x, x],
    };
    let sq = build_square_parts(gens, corners, Some(side))?;
    Ok(sq.cycle_word(&sq.sides[0]))
}

/// The a→b side path between adjacent kernel elements, freely reduced.
pub fn square_bigon_path(gens: &KernelGenSet, a: &ProductElement, b: &ProductElement) -> Result<KernelWord, KernelError> {
    adjacent_letter(gens, a, b)?;
    Ok(square_side_path(gens, 0, a, b)?.freely_reduced())
}

pub fn square_area_bound(sq: &SpanningSquare, f: &FunctionTable) -> Result<PolygonAreaBound, TableError> {
    polygon_area_bound(17, sq.radius_sum_u, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dehn_tools::rat;
    use crate::kernel_gens::tests::{d4, random_kernel};
    use crate::kernel_gens::square_tags;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plan_shape() {
        let p = build_plan();
        assert_eq!(p.points.len(), 24);
        assert_eq!(p.regions.len(), 17);
        // 5x5 grid lines minus the centre cross, plus 4 diagonals
        assert_eq!(p.edges.len(), 40 - 4 + 4);
        let tags: std::collections::BTreeSet<_> = p.regions.iter().map(|r| r.tag.clone()).collect();
        let expected: std::collections::BTreeSet<_> = square_tags().into_iter().collect();
        assert_eq!(tags, expected);
    }

    #[test]
    fn grid_vertex_labels() {
        let p = build_plan();
        use Entry::*;
        // (30,0) reads (·2, ·1, c3, d4) and (20,40) reads (·1, b2, ·2, a4)
        assert_eq!(p.specs[&(3, 0)], [Coset(C_, 1), Coset(C_, 0), Fixed(C_), Fixed(D_)]);
        assert_eq!(p.specs[&(2, 4)], [Coset(A_, 0), Fixed(B_), Coset(B_, 1), Fixed(A_)]);
        assert_eq!(p.specs[&(0, 4)], [Fixed(A_); 4]);
    }

    #[test]
    fn degenerate_square() {
        let g = d4();
        let e = g.ambient.identity();
        let s = build_spanning_square(&g, &e, &e, &e, &e).unwrap();
        assert!(s.edges.iter().all(|e| e.word.is_empty()));
        s.check(&g).unwrap();
        let f = FunctionTable::power(4, 2);
        assert_eq!(square_area_bound(&s, &f).unwrap().total, rat(0));
    }

    #[test]
    fn example_square() {
        let g = d4();
        let amb = &g.ambient;
        let a = amb.identity();
        let b = amb.parse("a1 | a2^-1 | e | e").unwrap();
        let c = amb.parse("e | e | b3 | b4^-1").unwrap();
        let d = amb.parse("a1 b1 a1^-1 b1^-1 | e | e | e").unwrap();
        let s = build_spanning_square(&g, &a, &b, &c, &d).unwrap();
        assert_eq!(s.regions.len(), 17);
        s.check(&g).unwrap();
        let f = FunctionTable::power(12 * s.radius_sum_u, 2);
        let u = s.radius_sum_u as i64;
        assert_eq!(square_area_bound(&s, &f).unwrap().total, rat(17 * 144 * u * u));
        assert_eq!(polygon_area_bound(17, 1, &FunctionTable::power(12, 2)).unwrap().total, rat(2448));
    }

    #[test]
    fn random_squares() {
        let g = d4();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..60 {
            let v: Vec<ProductElement> = (0..4).map(|_| random_kernel(&g, &mut rng, 10)).collect();
            let s = build_spanning_square(&g, &v[0], &v[1], &v[2], &v[3]).unwrap();
            s.check(&g).unwrap();
        }
    }

    #[test]
    fn sides_depend_only_on_endpoints() {
        let g = d4();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let v: Vec<ProductElement> = (0..6).map(|_| random_kernel(&g, &mut rng, 8)).collect();
            let s1 = build_spanning_square(&g, &v[0], &v[1], &v[2], &v[3]).unwrap();
            let s2 = build_spanning_square(&g, &v[0], &v[1], &v[4], &v[5]).unwrap();
            assert_eq!(s1.side_word(0), s2.side_word(0));
            assert_eq!(s1.side_word(0), square_side_path(&g, 0, &v[0], &v[1]).unwrap());
            for side in 0..4 {
                let (x, y) = (&v[side], &v[(side + 1) % 4]);
                assert_eq!(s1.side_word(side), square_side_path(&g, side, x, y).unwrap());
            }
        }
    }

    #[test]
    fn bigon_paths_are_short() {
        let g = d4();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut worst = 0;
        for _ in 0..5 {
            let a = random_kernel(&g, &mut rng, 5);
            for i in 0..g.gens.len() {
                for l in [(i + 1) as i32, -((i + 1) as i32)] {
                    let mut b = a.clone();
                    g.apply_letter(&mut b, l);
                    for side in 0..4 {
                        let p = square_side_path(&g, side, &a, &b).unwrap().freely_reduced();
                        assert!(g.connects(&a, &p, &b));
                        assert!(p.len() <= 4, "side {side} gen {} len {}", g.gens[i].name, p.len());
                        worst = worst.max(p.len());
                    }
                    assert!(square_bigon_path(&g, &a, &b).unwrap().len() <= 4);
                }
            }
        }
        assert!(worst >= 2);
    }
}
