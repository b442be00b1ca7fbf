//! Graphs, spanning-tree combinatorics, graph matrices, Dodgson polynomials
//! and the five-invariant.
//!
//! A [`Graph`] keeps its vertices as explicit labels so that deleting a
//! vertex preserves the identity of the rest; edge order is stable and edge
//! `i` owns polynomial variable `x_i` throughout.

use crate::poly::MultiPoly;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error("vertex {0} is not in the graph")]
    InvalidVertex(u32),
    #[error("edge index {0} out of range")]
    InvalidEdgeIndex(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph with {0} edges is too large for this operation (max {1})")]
    TooLarge(usize, usize),
    #[error("row and column sets must have equal size (got {0} and {1})")]
    SizeMismatch(usize, usize),
    #[error("the five chosen edges must be distinct")]
    RepeatedEdges,
    #[error("fixture {name:?} is tagged 4-regular but vertex {vertex} has degree {degree}")]
    NotFourRegular { name: String, vertex: u32, degree: usize },
    #[error("bad fixture data: {0}")]
    BadFixture(String),
}

/// Undirected graph with stable vertex labels and ordered, oriented edges.
/// Edge `i` is `(u, v)` with the orientation `u -> v` as stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    name: Option<String>,
    labels: Vec<u32>,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    /// Graph on vertices `1..=m` with the given edge list.
    pub fn new(m: usize, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        let labels: Vec<u32> = (1..=m as u32).collect();
        Self::with_labels(None, labels, edges)
    }

    fn with_labels(
        name: Option<String>,
        labels: Vec<u32>,
        edges: Vec<(u32, u32)>,
    ) -> Result<Self, GraphError> {
        for &(u, v) in &edges {
            if !labels.contains(&u) {
                return Err(GraphError::InvalidVertex(u));
            }
            if !labels.contains(&v) {
                return Err(GraphError::InvalidVertex(v));
            }
        }
        Ok(Graph { name, labels, edges })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Live vertex labels, ascending.
    pub fn vertices(&self) -> &[u32] {
        &self.labels
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Position of the edge `{u, v}` (either orientation) in the edge list.
    pub fn edge_index_of(&self, u: u32, v: u32) -> Option<usize> {
        self.edges
            .iter()
            .position(|&(a, b)| (a, b) == (u, v) || (a, b) == (v, u))
    }

    pub fn degree(&self, v: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Remove a vertex and all incident edges; remaining labels and edge
    /// order are untouched.
    pub fn delete_vertex(&self, v: u32) -> Result<Graph, GraphError> {
        if !self.labels.contains(&v) {
            return Err(GraphError::InvalidVertex(v));
        }
        let labels = self.labels.iter().copied().filter(|&w| w != v).collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(a, b)| a != v && b != v)
            .collect();
        let name = self.name.as_ref().map(|n| format!("{n}-v{v}"));
        Ok(Graph { name, labels, edges })
    }

    fn label_pos(&self, v: u32) -> Option<usize> {
        self.labels.iter().position(|&w| w == v)
    }

    /// Number of connected components (isolated vertices count).
    pub fn component_count(&self) -> usize {
        let mut dsu = Dsu::new(self.labels.len());
        for &(u, v) in &self.edges {
            dsu.union(self.label_pos(u).unwrap(), self.label_pos(v).unwrap());
        }
        dsu.component_count()
    }

    pub fn is_connected(&self) -> bool {
        self.labels.is_empty() || self.component_count() == 1
    }

    /// First Betti number `h = |E| - |V| + #components`.
    pub fn betti_h(&self) -> i64 {
        self.edges.len() as i64 - self.labels.len() as i64 + self.component_count() as i64
    }

    /// True iff the edge count equals `2h` and every proper nonempty edge
    /// subset, with its induced vertices, has strictly more edges than `2h`
    /// of its own. Checked exhaustively, so graphs above 24 edges are
    /// rejected.
    pub fn is_phi4_eligible(&self) -> Result<bool, GraphError> {
        let n = self.edges.len();
        if n > 24 {
            return Err(GraphError::TooLarge(n, 24));
        }
        if (n as i64) != 2 * self.betti_h() {
            return Ok(false);
        }
        // iterate proper nonempty edge subsets
        let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let mut pos_of_label = vec![usize::MAX; 1 + self.labels.iter().max().copied().unwrap_or(0) as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            pos_of_label[l as usize] = i;
        }
        for mask in 1..full {
            let mut dsu = Dsu::new(self.labels.len());
            let mut seen = vec![false; self.labels.len()];
            let mut ne = 0i64;
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                let (u, v) = self.edges[i];
                let (pu, pv) = (pos_of_label[u as usize], pos_of_label[v as usize]);
                seen[pu] = true;
                seen[pv] = true;
                dsu.union(pu, pv);
                ne += 1;
            }
            let nv = seen.iter().filter(|&&s| s).count() as i64;
            let ncomp = (0..self.labels.len())
                .filter(|&i| seen[i] && dsu.find(i) == i)
                .count() as i64;
            let h = ne - nv + ncomp;
            if ne <= 2 * h {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact number of spanning trees, via an integer Laplacian minor.
    pub fn spanning_tree_count(&self) -> Result<u128, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let m = self.labels.len();
        if m <= 1 {
            return Ok(1);
        }
        // Laplacian over live vertices, drop the last row/col
        let mut lap = vec![vec![0i128; m]; m];
        for &(u, v) in &self.edges {
            let (a, b) = (self.label_pos(u).unwrap(), self.label_pos(v).unwrap());
            lap[a][a] += 1;
            lap[b][b] += 1;
            lap[a][b] -= 1;
            lap[b][a] -= 1;
        }
        let k = m - 1;
        let mut minor = vec![vec![0i128; k]; k];
        for i in 0..k {
            minor[i].copy_from_slice(&lap[i][..k]);
        }
        let d = bareiss_det(&mut minor);
        Ok(d.unsigned_abs())
    }

    /// The spanning-tree sum `sum_T prod_{e not in T} x_e`: multilinear,
    /// homogeneous of degree `h`, one term per spanning tree.
    pub fn kirchhoff_polynomial(&self) -> Result<MultiPoly, GraphError> {
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let n = self.edges.len();
        let m = self.labels.len();
        let k = m - 1; // edges in a spanning tree
        let mut pos_of_label = vec![usize::MAX; 1 + self.labels.iter().max().copied().unwrap_or(0) as usize];
        for (i, &l) in self.labels.iter().enumerate() {
            pos_of_label[l as usize] = i;
        }
        let mut terms: Vec<(Vec<u8>, BigInt)> = Vec::new();
        for_each_combination(n, k, |subset| {
            let mut dsu = Dsu::new(m);
            let mut acyclic = true;
            for &i in subset {
                let (u, v) = self.edges[i];
                if !dsu.union(pos_of_label[u as usize], pos_of_label[v as usize]) {
                    acyclic = false;
                    break;
                }
            }
            if acyclic && dsu.component_count() == 1 {
                let mut e = vec![1u8; n];
                for &i in subset {
                    e[i] = 0;
                }
                terms.push((e, BigInt::from(1)));
            }
        });
        Ok(MultiPoly::from_terms(n, terms, num_bigint::BigUint::from(1u32)).expect("valid terms"))
    }

    /// The symmetric matrix whose determinant is `+-` the spanning-tree sum:
    /// edge-variable diagonal block, signed incidence blocks, zero corner,
    /// with one vertex row/column dropped.
    pub fn graph_matrix(&self, drop: u32) -> Result<GraphMatrix, GraphError> {
        if !self.labels.contains(&drop) {
            return Err(GraphError::InvalidVertex(drop));
        }
        let n = self.edges.len();
        let kept: Vec<u32> = self.labels.iter().copied().filter(|&v| v != drop).collect();
        let size = n + kept.len();
        let mut ints = vec![vec![0i64; size]; size];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            for (sign, w) in [(1i64, u), (-1i64, v)] {
                if let Some(j) = kept.iter().position(|&x| x == w) {
                    ints[i][n + j] = sign;
                    ints[n + j][i] = sign;
                }
            }
        }
        Ok(GraphMatrix { n_edges: n, size, dropped_vertex: drop, ints })
    }

    /// Minor determinant of the graph matrix with edge rows `I` and edge
    /// columns `J` removed and the `K` variables set to zero.
    ///
    /// Index sets refer to edge positions; `|I| = |J|` is required, and the
    /// sets may overlap. The result is a polynomial in all `n` edge
    /// variables (the removed ones simply do not occur), of total degree
    /// `h - |I|` when nonzero.
    pub fn dodgson(
        &self,
        drop: u32,
        i_set: &[usize],
        j_set: &[usize],
        k_set: &[usize],
    ) -> Result<MultiPoly, GraphError> {
        let m = self.graph_matrix(drop)?;
        m.minor_determinant(i_set, j_set, k_set)
    }

    /// The 2x2 determinant of Dodgson minors attached to five distinct
    /// edges `(i, j, k, l, m)`. Free of the five chosen variables; the
    /// ordering of the five only affects a global sign.
    pub fn five_invariant(
        &self,
        picks: [usize; 5],
        drop: u32,
    ) -> Result<MultiPoly, GraphError> {
        let distinct: BTreeSet<usize> = picks.iter().copied().collect();
        if distinct.len() != 5 {
            return Err(GraphError::RepeatedEdges);
        }
        let n = self.edges.len();
        for &e in &picks {
            if e >= n {
                return Err(GraphError::InvalidEdgeIndex(e));
            }
        }
        let [i, j, k, l, mm] = picks;
        let gm = self.graph_matrix(drop)?;
        let a = gm.minor_determinant(&[i, j], &[k, l], &[mm])?;
        let b = gm.minor_determinant(&[i, k], &[j, l], &[mm])?;
        let c = gm.minor_determinant(&[i, j, mm], &[k, l, mm], &[])?;
        let d = gm.minor_determinant(&[i, k, mm], &[j, l, mm], &[])?;
        Ok(&(&a * &d) - &(&b * &c))
    }
}

/// Symbolic matrix `[[diag(x), E], [E^T, 0]]` with one vertex row/column
/// dropped. Only the integer part is stored; the first `n_edges` diagonal
/// slots implicitly hold the edge variables.
#[derive(Debug, Clone)]
pub struct GraphMatrix {
    pub n_edges: usize,
    pub size: usize,
    pub dropped_vertex: u32,
    /// integer part; `ints[r][c]` in `{-1, 0, 1}`
    pub ints: Vec<Vec<i64>>,
}

impl GraphMatrix {
    /// Full symbolic determinant.
    pub fn determinant(&self) -> MultiPoly {
        self.minor_determinant(&[], &[], &[])
            .expect("empty index sets are always valid")
    }

    /// Determinant with edge rows `I`, edge columns `J` removed and the `K`
    /// variables zeroed.
    ///
    /// Variables occur only on the diagonal, so the determinant expands as a
    /// sum over subsets `S` of surviving diagonal slots of
    /// `prod_{e in S} x_e * sign(S) * det(integer minor without S)`. The
    /// integer part vanishes on edge-edge and vertex-vertex blocks, which
    /// forces every contributing subset to have size exactly
    /// `(#edge rows) - (#vertex rows)`; only those subsets are enumerated.
    pub fn minor_determinant(
        &self,
        i_set: &[usize],
        j_set: &[usize],
        k_set: &[usize],
    ) -> Result<MultiPoly, GraphError> {
        let n = self.n_edges;
        let iset: BTreeSet<usize> = i_set.iter().copied().collect();
        let jset: BTreeSet<usize> = j_set.iter().copied().collect();
        let kset: BTreeSet<usize> = k_set.iter().copied().collect();
        if iset.len() != jset.len() {
            return Err(GraphError::SizeMismatch(iset.len(), jset.len()));
        }
        for &e in iset.iter().chain(&jset).chain(&kset) {
            if e >= n {
                return Err(GraphError::InvalidEdgeIndex(e));
            }
        }
        let nverts = self.size - n;

        // surviving edge rows / columns, in edge order
        let rows_e: Vec<usize> = (0..n).filter(|e| !iset.contains(e)).collect();
        let cols_e: Vec<usize> = (0..n).filter(|e| !jset.contains(e)).collect();

        // diagonal slots that still carry a variable
        let active: Vec<usize> = (0..n)
            .filter(|e| !iset.contains(e) && !jset.contains(e) && !kset.contains(e))
            .collect();

        // row/col position (0-based) of each active edge inside the reduced matrix
        let rowpos = |e: usize| rows_e.iter().position(|&x| x == e).unwrap();
        let colpos = |e: usize| cols_e.iter().position(|&x| x == e).unwrap();

        let take = rows_e.len() as i64 - nverts as i64;
        if take < 0 || take as usize > active.len() {
            return Ok(MultiPoly::zero(n));
        }
        let take = take as usize;

        let mut terms: Vec<(Vec<u8>, BigInt)> = Vec::new();
        for_each_combination(active.len(), take, |subset| {
            let s: Vec<usize> = subset.iter().map(|&i| active[i]).collect();
            let in_s = |e: usize| s.binary_search(&e).is_ok();
            // integer minor: remaining edge rows/cols plus all vertex rows/cols
            let mrows: Vec<usize> = rows_e
                .iter()
                .copied()
                .filter(|&e| !in_s(e))
                .chain(n..self.size)
                .collect();
            let mcols: Vec<usize> = cols_e
                .iter()
                .copied()
                .filter(|&e| !in_s(e))
                .chain(n..self.size)
                .collect();
            let k = mrows.len();
            let mut minor = vec![vec![0i128; k]; k];
            for (a, &r) in mrows.iter().enumerate() {
                for (b, &c) in mcols.iter().enumerate() {
                    minor[a][b] = self.ints[r][c] as i128;
                }
            }
            let det = bareiss_det(&mut minor);
            if det == 0 {
                return;
            }
            let mut sign_exp = 0usize;
            for &e in &s {
                sign_exp += rowpos(e) + colpos(e);
            }
            let det = if sign_exp % 2 == 0 { det } else { -det };
            let mut expv = vec![0u8; n];
            for &e in &s {
                expv[e] = 1;
            }
            terms.push((expv, BigInt::from(det)));
        });
        Ok(MultiPoly::from_terms(n, terms, num_bigint::BigUint::from(1u32)).expect("valid terms"))
    }

    /// Reference determinant by symbolic cofactor expansion with
    /// memoization on column masks. Exponential; only for small matrices in
    /// tests.
    pub fn slow_determinant(&self) -> MultiPoly {
        assert!(self.size <= 12, "slow determinant is for small matrices only");
        let n = self.n_edges;
        let full: u32 = (1u32 << self.size) - 1;
        let mut memo: std::collections::HashMap<u32, MultiPoly> =
            std::collections::HashMap::new();
        self.slow_det_rec(0, full, n, &mut memo)
    }

    fn entry_poly(&self, r: usize, c: usize) -> MultiPoly {
        let n = self.n_edges;
        let mut p = MultiPoly::constant(n, BigInt::from(self.ints[r][c]));
        if r == c && r < n {
            p = &p + &MultiPoly::var(n, r);
        }
        p
    }

    fn slow_det_rec(
        &self,
        row: usize,
        colmask: u32,
        n: usize,
        memo: &mut std::collections::HashMap<u32, MultiPoly>,
    ) -> MultiPoly {
        if row == self.size {
            return MultiPoly::constant(n, BigInt::from(1));
        }
        if let Some(p) = memo.get(&colmask) {
            return p.clone();
        }
        let mut acc = MultiPoly::zero(n);
        let mut sign = 1i64;
        for c in 0..self.size {
            if colmask & (1 << c) == 0 {
                continue;
            }
            let e = self.entry_poly(row, c);
            if !e.is_zero() {
                let sub = self.slow_det_rec(row + 1, colmask & !(1 << c), n, memo);
                let contrib = &e * &sub;
                acc = if sign > 0 { &acc + &contrib } else { &acc - &contrib };
            }
            sign = -sign;
        }
        memo.insert(colmask, acc.clone());
        acc
    }
}

/// Fraction-free Gaussian elimination; exact integer determinant.
fn bareiss_det(m: &mut [Vec<i128>]) -> i128 {
    let k = m.len();
    if k == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for i in 0..k - 1 {
        if m[i][i] == 0 {
            let swap = (i + 1..k).find(|&r| m[r][i] != 0);
            match swap {
                Some(r) => {
                    m.swap(i, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for r in i + 1..k {
            for c in i + 1..k {
                m[r][c] = (m[r][c] * m[i][i] - m[r][i] * m[i][c]) / prev;
            }
            m[r][i] = 0;
        }
        prev = m[i][i];
    }
    sign * m[k - 1][k - 1]
}

/// Visit all `k`-subsets of `0..n` in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    /// Returns false if already in the same component.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }

    fn component_count(&mut self) -> usize {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).count()
    }
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GraphDto {
    name: String,
    vertices: usize,
    edges: Vec<(u32, u32)>,
}

/// Fixture graphs whose load asserts 4-regularity.
const FOUR_REGULAR: [&str; 8] = ["4_13", "3_7", "3_8", "3_12", "4_5", "4_6", "4_7", "4_17"];

const FIXTURES: [(&str, &str); 13] = [
    ("C3", include_str!("../fixtures/graphs/c3.json")),
    ("C4", include_str!("../fixtures/graphs/c4.json")),
    ("C5", include_str!("../fixtures/graphs/c5.json")),
    ("K4", include_str!("../fixtures/graphs/k4.json")),
    ("K5", include_str!("../fixtures/graphs/k5.json")),
    ("4_13", include_str!("../fixtures/graphs/4_13.json")),
    ("3_7", include_str!("../fixtures/graphs/3_7.json")),
    ("3_8", include_str!("../fixtures/graphs/3_8.json")),
    ("3_12", include_str!("../fixtures/graphs/3_12.json")),
    ("4_5", include_str!("../fixtures/graphs/4_5.json")),
    ("4_6", include_str!("../fixtures/graphs/4_6.json")),
    ("4_7", include_str!("../fixtures/graphs/4_7.json")),
    ("4_17", include_str!("../fixtures/graphs/4_17.json")),
];

/// Names of all registered graph fixtures.
pub fn fixture_names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}

/// Load a registered fixture graph by name.
pub fn load_graph_fixture(name: &str) -> Result<Graph, GraphError> {
    let (_, src) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| GraphError::UnknownFixture(name.to_string()))?;
    let dto: GraphDto =
        serde_json::from_str(src).map_err(|e| GraphError::BadFixture(e.to_string()))?;
    let g = Graph::with_labels(Some(dto.name.clone()), (1..=dto.vertices as u32).collect(), dto.edges)?;
    if FOUR_REGULAR.contains(&name) {
        for &v in g.vertices() {
            let d = g.degree(v);
            if d != 4 {
                return Err(GraphError::NotFourRegular {
                    name: name.to_string(),
                    vertex: v,
                    degree: d,
                });
            }
        }
    }
    Ok(g)
}
