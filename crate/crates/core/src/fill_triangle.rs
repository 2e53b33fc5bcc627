use num_rational::BigRational;

use crate::dehn_tools::{rat, FunctionTable, TableError};
use crate::group_core::ProductElement;
use crate::kernel_gens::{KernelError, KernelGenSet, KernelWord, Method, SubgroupTag, Walker};
use crate::spanning::{PolyRegion, PolygonBuilder, SpanningPolygon};

pub type SpanningTriangle = SpanningPolygon;

fn u_t(slot: usize) -> SubgroupTag {
    let t = [(0, 0, 1), (0, 1, 2), (0, 0, 2)];
    SubgroupTag::new(vec![slot], &t)
}

fn t_only() -> SubgroupTag {
    SubgroupTag::new(vec![], &[(0, 0, 1), (0, 1, 2), (0, 0, 2)])
}

fn tags(kernel: &[usize]) -> SubgroupTag {
    SubgroupTag::new(kernel.to_vec(), &[(0, 0, 1), (0, 1, 2), (0, 0, 2)])
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

fn expect_slots(
    gens: &KernelGenSet,
    got: &ProductElement,
    want: &[(usize, &ProductElement)],
    what: &str,
) -> Result<(), KernelError> {
    for &(s, x) in want {
        if gens.ambient.restrict(got, s) != gens.ambient.restrict(x, s) {
            return Err(KernelError::Internal(format!("{what}: slot {} differs from the expected value", s + 1)));
        }
    }
    Ok(())
}

/// The three sub-paths of one triangle side from `from` to `to`. Slot roles:
/// `x` moves first (compensating in `y`), then `z` moves compensating in `x`
/// or `y` and restoring `y`, finally `y` moves compensating in `x`.
pub(crate) struct SidePlan {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

/// Side plans for a→b, b→c, c→a (0-based slots).
pub(crate) const SIDE_AB: SidePlan = SidePlan { x: 1, y: 0, z: 2 };
pub(crate) const SIDE_BC: SidePlan = SidePlan { x: 2, y: 1, z: 0 };
pub(crate) const SIDE_CA: SidePlan = SidePlan { x: 0, y: 2, z: 1 };

pub(crate) struct SideResult {
    pub mid1: ProductElement,
    pub mid2: ProductElement,
    pub words: [KernelWord; 3],
}

pub(crate) fn side_path(
    gens: &KernelGenSet,
    plan: &SidePlan,
    from: &ProductElement,
    to: &ProductElement,
) -> Result<SideResult, KernelError> {
    let mut w: Walker = gens.walker(from);
    w.move_to(plan.x, to, [Some(plan.y), None])?;
    let mid1 = w.cur.clone();
    let w1 = w.take_word();
    w.move_with_restore(plan.z, to, plan.x, plan.y, from)?;
    let mid2 = w.cur.clone();
    expect_slots(gens, &mid2, &[(plan.y, from), (plan.z, to)], "second side vertex")?;
    let w2 = w.take_word();
    w.move_to(plan.y, to, [Some(plan.x), None])?;
    if w.cur != *to {
        return Err(KernelError::Internal(
            "side path does not end at its target (kernel meets a section image non-trivially)".into(),
        ));
    }
    let w3 = w.take_word();
    Ok(SideResult { mid1, mid2, words: [w1, w2, w3] })
}

/// Geodesic in ⟨T⟩ between two vertices differing by section shifts only.
pub(crate) fn t_geodesic(
    gens: &KernelGenSet,
    from: &ProductElement,
    to: &ProductElement,
) -> Result<KernelWord, KernelError> {
    let amb = &gens.ambient;
    let diff = from.inverse().mul(to);
    let mut u = Vec::new();
    for s in 0..3 {
        let c = amb
            .section_coeffs(s, 0, &amb.restrict(&diff, s))
            .ok_or(KernelError::NotSection { slot: s, part: 0 })?;
        u.push(c);
    }
    let m = amb.factoring.part_rank(0);
    let mut w = gens.walker(from);
    let mut exps = vec![[0i64; 3]; m];
    for (j, e) in exps.iter_mut().enumerate() {
        let (u1, u2) = (u[0][j], u[1][j]);
        let mut cand = [-u1, -(u1 + u2), 0];
        cand.sort();
        let z = cand[1];
        *e = [u1 + z, u1 + u2 + z, z];
    }
    for (f, (a, b)) in [(0usize, 1usize), (1, 2), (0, 2)].into_iter().enumerate() {
        for (j, e) in exps.iter().enumerate() {
            let g = gens.pair_gen(0, a, b, j);
            w.push(g, e[f]);
        }
    }
    if w.cur != *to {
        return Err(KernelError::Internal("T-geodesic does not reach its target".into()));
    }
    Ok(w.take_word())
}

/// Spanning triangle on three kernel elements a, b, c.
pub fn build_spanning_triangle(
    gens: &KernelGenSet,
    a: &ProductElement,
    b: &ProductElement,
    c: &ProductElement,
) -> Result<SpanningTriangle, KernelError> {
    if gens.method != Method::Triangle {
        return Err(KernelError::SlotCount { method: Method::Triangle, needed: 3, found: gens.num_slots() });
    }
    for x in [a, b, c] {
        check_kernel(gens, x)?;
    }
    let amb = &gens.ambient;
    let d = |s: usize, x: &ProductElement, y: &ProductElement| amb.slot_dist(s, x, y);
    let mut pb = PolygonBuilder::new();
    pb.vertex("a", a.clone())?;
    pb.vertex("b", b.clone())?;
    pb.vertex("c", c.clone())?;

    let ab = side_path(gens, &SIDE_AB, a, b)?;
    let bc = side_path(gens, &SIDE_BC, b, c)?;
    let ca = side_path(gens, &SIDE_CA, c, a)?;
    pb.vertex("aab", ab.mid1.clone())?;
    pb.vertex("abb", ab.mid2.clone())?;
    pb.vertex("bbc", bc.mid1.clone())?;
    pb.vertex("bcc", bc.mid2.clone())?;
    pb.vertex("acc", ca.mid1.clone())?;
    pb.vertex("aac", ca.mid2.clone())?;

    let (d1ab, d2ab, d3ab) = (d(0, a, b), d(1, a, b), d(2, a, b));
    let (d1bc, d2bc, d3bc) = (d(0, b, c), d(1, b, c), d(2, b, c));
    let (d1ac, d2ac, d3ac) = (d(0, a, c), d(1, a, c), d(2, a, c));
    let bnd = |v: usize, s: &str| (v, s.to_string());

    let [w1, w2, w3] = ab.words;
    pb.edge("a", "aab", u_t(1), w1, bnd(d2ab, "d2(a,b)"));
    pb.edge("aab", "abb", u_t(2), w2, bnd(d2ab + d3ab, "d2(a,b)+d3(a,b)"));
    pb.edge("abb", "b", u_t(0), w3, bnd(d1ab, "d1(a,b)"));
    let [w1, w2, w3] = bc.words;
    pb.edge("b", "bbc", u_t(2), w1, bnd(d3bc, "d3(b,c)"));
    pb.edge("bbc", "bcc", u_t(0), w2, bnd(d1bc + d3bc, "d1(b,c)+d3(b,c)"));
    pb.edge("bcc", "c", u_t(1), w3, bnd(d2bc, "d2(b,c)"));
    let [w1, w2, w3] = ca.words;
    pb.edge("c", "acc", u_t(0), w1, bnd(d1ac, "d1(a,c)"));
    pb.edge("acc", "aac", u_t(1), w2, bnd(d1ac + d2ac, "d1(a,c)+d2(a,c)"));
    pb.edge("aac", "a", u_t(2), w3, bnd(d3ac, "d3(a,c)"));

    // spokes: each inner vertex is reached from two side vertices; the two
    // arrivals must agree since K meets each section image trivially
    let spoke = |pb: &mut PolygonBuilder,
                 from: &str,
                 to: &str,
                 p: usize,
                 target: &ProductElement,
                 q: usize,
                 bound: (usize, String)|
     -> Result<(), KernelError> {
        let start = pb.vertices[pb.index[from]].clone();
        let mut w = gens.walker(&start);
        w.move_to(p, target, [Some(q), None])?;
        pb.vertex(to, w.cur.clone())?;
        let word = w.take_word();
        pb.edge(from, to, u_t(p), word, bound);
        Ok(())
    };
    spoke(&mut pb, "aab", "ma", 2, c, 0, bnd(d3ac, "d3(a,c)"))?;
    spoke(&mut pb, "aac", "ma", 1, b, 0, bnd(d2ab, "d2(a,b)"))?;
    spoke(&mut pb, "abb", "mb", 2, c, 1, bnd(d3bc, "d3(b,c)"))?;
    spoke(&mut pb, "bbc", "mb", 0, a, 1, bnd(d1ab, "d1(a,b)"))?;
    spoke(&mut pb, "bcc", "mc", 0, a, 2, bnd(d1ac, "d1(a,c)"))?;
    spoke(&mut pb, "acc", "mc", 1, b, 2, bnd(d2bc, "d2(b,c)"))?;

    let ma = pb.vertices[pb.index["ma"]].clone();
    let mb = pb.vertices[pb.index["mb"]].clone();
    let mc = pb.vertices[pb.index["mc"]].clone();
    expect_slots(gens, &ma, &[(1, b), (2, c)], "inner vertex ma")?;
    expect_slots(gens, &mb, &[(0, a), (2, c)], "inner vertex mb")?;
    expect_slots(gens, &mc, &[(0, a), (1, b)], "inner vertex mc")?;
    pb.edge(
        "ma",
        "mb",
        t_only(),
        t_geodesic(gens, &ma, &mb)?,
        bnd(d2ab + d3ab + d3ac + d3bc, "d2(a,b)+d3(a,b)+d3(a,c)+d3(b,c)"),
    );
    pb.edge(
        "mb",
        "mc",
        t_only(),
        t_geodesic(gens, &mb, &mc)?,
        bnd(d1ab + d1ac + d1bc + d3bc, "d1(a,b)+d1(a,c)+d1(b,c)+d3(b,c)"),
    );
    pb.edge(
        "mc",
        "ma",
        t_only(),
        t_geodesic(gens, &mc, &ma)?,
        bnd(d1ac + d2ab + d2ac + d2bc, "d1(a,c)+d2(a,b)+d2(a,c)+d2(b,c)"),
    );

    let regions = vec![
        PolyRegion { tag: tags(&[1, 2]), cycle: pb.cycle(&["a", "aab", "ma", "aac"]) },
        PolyRegion { tag: tags(&[2]), cycle: pb.cycle(&["aab", "abb", "mb", "ma"]) },
        PolyRegion { tag: tags(&[0, 2]), cycle: pb.cycle(&["abb", "b", "bbc", "mb"]) },
        PolyRegion { tag: tags(&[0]), cycle: pb.cycle(&["bbc", "bcc", "mc", "mb"]) },
        PolyRegion { tag: tags(&[0, 1]), cycle: pb.cycle(&["bcc", "c", "acc", "mc"]) },
        PolyRegion { tag: tags(&[1]), cycle: pb.cycle(&["acc", "aac", "ma", "mc"]) },
        PolyRegion { tag: t_only(), cycle: pb.cycle(&["ma", "mb", "mc"]) },
    ];
    let sides = vec![pb.path(&["a", "aab", "abb", "b"]), pb.path(&["b", "bbc", "bcc", "c"]), pb.path(&["c", "acc", "aac", "a"])];
    let corners = vec![pb.index["a"], pb.index["b"], pb.index["c"]];
    let radius_sum_u = amb.radius(a, b) + amb.radius(b, c) + amb.radius(a, c);
    let perimeter_d = amb.dist(a, b) + amb.dist(b, c) + amb.dist(a, c);
    Ok(SpanningPolygon {
        method: Method::Triangle,
        vertex_names: pb.names,
        vertices: pb.vertices,
        edges: pb.edges,
        regions,
        corners,
        sides,
        radius_sum_u,
        perimeter_d,
    })
}

/// The side path of the triangle between a and b = a·g (freely reduced).
pub fn bigon_path(gens: &KernelGenSet, a: &ProductElement, b: &ProductElement) -> Result<KernelWord, KernelError> {
    adjacent_letter(gens, a, b)?;
    let side = side_path(gens, &SIDE_AB, a, b)?;
    let [w1, w2, w3] = side.words;
    Ok(w1.concat(&w2).concat(&w3).freely_reduced())
}

/// The generator letter l with a·l = b, if any.
pub(crate) fn adjacent_letter(
    gens: &KernelGenSet,
    a: &ProductElement,
    b: &ProductElement,
) -> Result<i32, KernelError> {
    for i in 0..gens.gens.len() {
        for l in [(i + 1) as i32, -((i + 1) as i32)] {
            let mut x = a.clone();
            gens.apply_letter(&mut x, l);
            if x == *b {
                return Ok(l);
            }
        }
    }
    Err(KernelError::Internal("endpoints are not adjacent by a single generator".into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonAreaBound {
    pub total: BigRational,
    pub per_region: Vec<BigRational>,
}

/// regions · f(12U), one term per region.
pub(crate) fn polygon_area_bound(
    regions: usize,
    u: usize,
    f: &FunctionTable,
) -> Result<PolygonAreaBound, TableError> {
    let v = f.get(12 * u)?;
    let per_region = vec![v.clone(); regions];
    Ok(PolygonAreaBound { total: v * rat(regions as i64), per_region })
}

pub fn triangle_area_bound(tri: &SpanningTriangle, f: &FunctionTable) -> Result<PolygonAreaBound, TableError> {
    polygon_area_bound(7, tri.radius_sum_u, f)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::kernel_gens::tests::{random_kernel, sb3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_triangle() {
        let g = sb3();
        let e = g.ambient.identity();
        let t = build_spanning_triangle(&g, &e, &e, &e).unwrap();
        assert!(t.edges.iter().all(|e| e.word.is_empty()));
        assert_eq!(t.perimeter_d, 0);
        assert_eq!(t.edges.len(), 18);
        assert_eq!(t.regions.len(), 7);
        assert_eq!(t.vertices.len(), 12);
        t.check(&g).unwrap();
        let f = FunctionTable::power(10, 2);
        assert_eq!(triangle_area_bound(&t, &f).unwrap().total, rat(0));
    }

    #[test]
    fn first_edge_is_exact() {
        let g = sb3();
        let amb = &g.ambient;
        let a = amb.identity();
        let b = amb.parse("a1 | a2^-1 | e").unwrap();
        let c = amb.parse("b1 | e | e").unwrap();
        let t = build_spanning_triangle(&g, &a, &b, &c).unwrap();
        t.check(&g).unwrap();
        let e1 = t.find_edge("a", "aab").unwrap();
        assert_eq!(t.edges[e1].word.len(), amb.slot_dist(1, &a, &b));
        assert_eq!(t.edges[e1].word.len(), 1);
        let f = FunctionTable::power(12 * t.radius_sum_u, 2);
        let u = t.radius_sum_u as i64;
        assert_eq!(triangle_area_bound(&t, &f).unwrap().total, rat(7 * 144 * u * u));
    }

    #[test]
    fn area_bound_formula() {
        let f = FunctionTable::power(24, 2);
        assert_eq!(polygon_area_bound(7, 2, &f).unwrap().total, rat(4032));
        assert!(polygon_area_bound(7, 3, &f).is_err());
    }

    #[test]
    fn random_triangles() {
        let g = sb3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = random_kernel(&g, &mut rng, 12);
            let b = random_kernel(&g, &mut rng, 12);
            let c = random_kernel(&g, &mut rng, 12);
            let t = build_spanning_triangle(&g, &a, &b, &c).unwrap();
            t.check(&g).unwrap();
        }
    }

    #[test]
    fn sides_depend_only_on_endpoints() {
        let g = sb3();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random_kernel(&g, &mut rng, 8);
            let b = random_kernel(&g, &mut rng, 8);
            let c1 = random_kernel(&g, &mut rng, 8);
            let c2 = random_kernel(&g, &mut rng, 8);
            let t1 = build_spanning_triangle(&g, &a, &b, &c1).unwrap();
            let t2 = build_spanning_triangle(&g, &a, &b, &c2).unwrap();
            assert_eq!(t1.side_word(0), t2.side_word(0));
        }
    }

    #[test]
    fn bigon_paths_are_short() {
        let g = sb3();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut worst = 0;
        for _ in 0..20 {
            let a = random_kernel(&g, &mut rng, 6);
            for i in 0..g.gens.len() {
                for l in [(i + 1) as i32, -((i + 1) as i32)] {
                    let mut b = a.clone();
                    g.apply_letter(&mut b, l);
                    let p = bigon_path(&g, &a, &b).unwrap();
                    assert!(g.connects(&a, &p, &b));
                    assert!(p.len() <= 2);
                    if g.gens[i].name.starts_with('U') {
                        assert_eq!(p.len(), 1);
                    }
                    worst = worst.max(p.len());
                }
            }
        }
        assert_eq!(worst, 2);
        let e = g.ambient.identity();
        assert!(bigon_path(&g, &e, &g.ambient.parse("b1^2 | e | e").unwrap()).is_err());
    }
}
