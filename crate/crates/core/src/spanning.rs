use std::collections::HashMap;

use crate::group_core::ProductElement;
use crate::kernel_gens::{KernelError, KernelGenSet, KernelWord, Method, SubgroupTag};

/// An edge of a spanning polygon, labelled by a word over a declared sub-alphabet.
#[derive(Clone, Debug)]
pub struct PolyEdge {
    pub from: usize,
    pub to: usize,
    pub alphabet: SubgroupTag,
    pub word: KernelWord,
    /// evaluated length bound from the distance formula in `bound_expr`
    pub bound: usize,
    pub bound_expr: String,
}

#[derive(Clone, Debug)]
pub struct PolyRegion {
    pub tag: SubgroupTag,
    /// boundary as (edge index, traversed forward)
    pub cycle: Vec<(usize, bool)>,
}

/// A subdivided triangle or square with labelled edges and tagged regions.
#[derive(Clone, Debug)]
pub struct SpanningPolygon {
    pub method: Method,
    pub vertex_names: Vec<String>,
    pub vertices: Vec<ProductElement>,
    pub edges: Vec<PolyEdge>,
    pub regions: Vec<PolyRegion>,
    /// outer vertices in boundary order
    pub corners: Vec<usize>,
    /// boundary sides: side i runs from corners[i] to corners[i+1]
    pub sides: Vec<Vec<(usize, bool)>>,
    pub radius_sum_u: usize,
    pub perimeter_d: usize,
}

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum PolygonViolation {
    #[error("edge {0} does not connect its endpoints")]
    EdgeClosure(String),
    #[error("edge {0} leaves its declared alphabet")]
    Alphabet(String),
    #[error("edge {name} has length {len} > bound {bound} ({expr})")]
    EdgeBound { name: String, len: usize, bound: usize, expr: String },
    #[error("edge {name} has length {len} > {factor}U = {limit}")]
    EdgeU { name: String, len: usize, factor: usize, limit: usize },
    #[error("region {0} boundary is not a closed loop")]
    RegionCycle(String),
    #[error("region {0} boundary does not evaluate to the identity")]
    RegionClosure(String),
    #[error("region {name}: {why}")]
    RegionMembership { name: String, why: String },
    #[error("region {name} has perimeter {len} > 12U = {limit}")]
    RegionU { name: String, len: usize, limit: usize },
    #[error("edge {0} is not used once in each direction by the regions and boundary")]
    Orientation(String),
    #[error("U = {u} exceeds D = {d}")]
    UExceedsD { u: usize, d: usize },
}

impl SpanningPolygon {
    pub fn vertex(&self, name: &str) -> &ProductElement {
        let i = self.vertex_names.iter().position(|n| n == name).expect("vertex name");
        &self.vertices[i]
    }

    pub fn edge_name(&self, e: usize) -> String {
        let ed = &self.edges[e];
        format!("{}->{}", self.vertex_names[ed.from], self.vertex_names[ed.to])
    }

    pub fn region_name(&self, r: usize) -> String {
        format!("#{} {}", r, self.regions[r].tag.name(self.method))
    }

    pub fn find_edge(&self, from: &str, to: &str) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| self.vertex_names[e.from] == from && self.vertex_names[e.to] == to)
    }

    pub fn cycle_word(&self, cycle: &[(usize, bool)]) -> KernelWord {
        let mut letters = Vec::new();
        for &(e, fwd) in cycle {
            let w = &self.edges[e].word;
            if fwd {
                letters.extend_from_slice(&w.letters);
            } else {
                letters.extend(w.inverse().letters);
            }
        }
        KernelWord::new(letters)
    }

    pub fn region_word(&self, r: usize) -> KernelWord {
        self.cycle_word(&self.regions[r].cycle)
    }

    pub fn region_len(&self, r: usize) -> usize {
        self.regions[r].cycle.iter().map(|&(e, _)| self.edges[e].word.len()).sum()
    }

    /// Boundary word of the whole polygon, read from corner 0.
    pub fn boundary_word(&self) -> KernelWord {
        let all: Vec<(usize, bool)> = self.sides.iter().flatten().copied().collect();
        self.cycle_word(&all)
    }

    pub fn side_word(&self, i: usize) -> KernelWord {
        self.cycle_word(&self.sides[i])
    }

    pub fn edge_limit_factor(&self) -> usize {
        match self.method {
            Method::Triangle => 3,
            Method::Square => 4,
        }
    }

    /// Check every invariant; returns the first violation.
    pub fn check(&self, gens: &KernelGenSet) -> Result<(), PolygonViolation> {
        let u = self.radius_sum_u;
        if u > self.perimeter_d {
            return Err(PolygonViolation::UExceedsD { u, d: self.perimeter_d });
        }
        let factor = self.edge_limit_factor();
        for (i, e) in self.edges.iter().enumerate() {
            let name = self.edge_name(i);
            if !gens.connects(&self.vertices[e.from], &e.word, &self.vertices[e.to]) {
                return Err(PolygonViolation::EdgeClosure(name));
            }
            if !gens.word_families(&e.word).is_subset(&e.alphabet.families()) {
                return Err(PolygonViolation::Alphabet(name));
            }
            if e.word.len() > e.bound {
                return Err(PolygonViolation::EdgeBound {
                    name,
                    len: e.word.len(),
                    bound: e.bound,
                    expr: e.bound_expr.clone(),
                });
            }
            if e.word.len() > factor * u {
                return Err(PolygonViolation::EdgeU { name, len: e.word.len(), factor, limit: factor * u });
            }
        }
        // regions keep the interior on the left of a→b→c(→d): each edge is
        // crossed once each way, counting the boundary sides reversed
        let mut uses = vec![(0usize, 0usize); self.edges.len()];
        let side_steps = self.sides.iter().flatten().map(|&(e, fwd)| (e, !fwd));
        for (e, fwd) in self.regions.iter().flat_map(|r| r.cycle.iter().copied()).chain(side_steps) {
            if fwd {
                uses[e].0 += 1;
            } else {
                uses[e].1 += 1;
            }
        }
        if let Some(e) = uses.iter().position(|&u| u != (1, 1)) {
            return Err(PolygonViolation::Orientation(self.edge_name(e)));
        }
        for r in 0..self.regions.len() {
            let name = self.region_name(r);
            let reg = &self.regions[r];
            // consecutive edges must share endpoints
            let ends: Vec<(usize, usize)> = reg
                .cycle
                .iter()
                .map(|&(e, fwd)| {
                    let ed = &self.edges[e];
                    if fwd {
                        (ed.from, ed.to)
                    } else {
                        (ed.to, ed.from)
                    }
                })
                .collect();
            for k in 0..ends.len() {
                if ends[k].1 != ends[(k + 1) % ends.len()].0 {
                    return Err(PolygonViolation::RegionCycle(name));
                }
            }
            for &(e, _) in &reg.cycle {
                if !self.edges[e].alphabet.families().is_subset(&reg.tag.families()) {
                    return Err(PolygonViolation::Alphabet(format!("{} in region {}", self.edge_name(e), name)));
                }
            }
            let w = self.region_word(r);
            if !gens.eval(&w).is_identity() {
                return Err(PolygonViolation::RegionClosure(name));
            }
            // every vertex on the region lies in a common coset of the tag subgroup
            let base = &self.vertices[ends[0].0];
            for &(_, v) in &ends {
                let rel = base.inverse().mul(&self.vertices[v]);
                if let Err(m) = gens.membership_witness(&reg.tag, &rel) {
                    return Err(PolygonViolation::RegionMembership { name, why: m.to_string() });
                }
            }
            let len = self.region_len(r);
            if len > 12 * u {
                return Err(PolygonViolation::RegionU { name, len, limit: 12 * u });
            }
        }
        Ok(())
    }

    pub fn max_edge_len(&self) -> usize {
        self.edges.iter().map(|e| e.word.len()).max().unwrap_or(0)
    }

    pub fn max_region_len(&self) -> usize {
        (0..self.regions.len()).map(|r| self.region_len(r)).max().unwrap_or(0)
    }
}

/// Incremental construction helper: named vertices and edges.
pub(crate) struct PolygonBuilder {
    pub names: Vec<String>,
    pub vertices: Vec<ProductElement>,
    pub index: HashMap<String, usize>,
    pub edges: Vec<PolyEdge>,
}

impl PolygonBuilder {
    pub fn new() -> Self {
        PolygonBuilder { names: Vec::new(), vertices: Vec::new(), index: HashMap::new(), edges: Vec::new() }
    }

    /// Register a vertex, or assert that it agrees with an earlier definition.
    pub fn vertex(&mut self, name: &str, value: ProductElement) -> Result<usize, KernelError> {
        if let Some(&i) = self.index.get(name) {
            if self.vertices[i] != value {
                return Err(KernelError::Internal(format!("vertex {name} reached with two different values")));
            }
            return Ok(i);
        }
        let i = self.vertices.len();
        self.names.push(name.to_string());
        self.vertices.push(value);
        self.index.insert(name.to_string(), i);
        Ok(i)
    }

    pub fn edge(&mut self, from: &str, to: &str, alphabet: SubgroupTag, word: KernelWord, bound: (usize, String)) {
        let (f, t) = (self.index[from], self.index[to]);
        self.edges.push(PolyEdge { from: f, to: t, alphabet, word, bound: bound.0, bound_expr: bound.1 });
    }

    pub fn cycle(&self, names: &[&str]) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for k in 0..names.len() {
            let (a, b) = (self.index[names[k]], self.index[names[(k + 1) % names.len()]]);
            out.push(self.path_edge(a, b));
        }
        out
    }

    pub fn path(&self, names: &[&str]) -> Vec<(usize, bool)> {
        names.windows(2).map(|w| self.path_edge(self.index[w[0]], self.index[w[1]])).collect()
    }

    fn path_edge(&self, a: usize, b: usize) -> (usize, bool) {
        if let Some(e) = self.edges.iter().position(|e| e.from == a && e.to == b) {
            return (e, true);
        }
        let e = self
            .edges
            .iter()
            .position(|e| e.from == b && e.to == a)
            .unwrap_or_else(|| panic!("no edge between {} and {}", self.names[a], self.names[b]));
        (e, false)
    }
}
