//! Friendship/star topologies, edge weights and reversible chain assembly.
//!
//! A reversible chain with equilibrium masses `pi` is parameterized by
//! symmetric edge weights `q[i][j] = pi[i] * P[i][j]`. The transition matrix
//! is `P = I - D^{-1} L(q)` with `D = diag(pi)` and `L(q)` the weighted
//! Laplacian of the graph.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for constraints that hold exactly in exact arithmetic
/// (row sums, symmetry, budgets).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for stationarity, which accumulates rounding over a row.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// Positive (not necessarily normalized) equilibrium masses indexed by vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Equilibrium(Vec<f64>);

impl Equilibrium {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("equilibrium vector is empty".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "equilibrium mass at vertex {i} must be finite and > 0, got {v}"
            )));
        }
        Ok(Self(values))
    }

    /// Masses of a single triangle given as `(pi_1, pi_2, pi_center)`, stored
    /// in canonical order `[center, pi_1, pi_2]`.
    pub fn from_triangle(p1: f64, p2: f64, center: f64) -> Result<Self> {
        Self::new(vec![center, p1, p2])
    }

    /// Canonical vector for a friendship graph with `m` blades.
    pub fn for_friendship(values: Vec<f64>, m: usize) -> Result<Self> {
        if values.len() != 2 * m + 1 {
            return Err(Error::InvalidArgument(format!(
                "friendship graph with m = {m} needs {} masses, got {}",
                2 * m + 1,
                values.len()
            )));
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * c).collect())
    }

    /// Normalized distribution `pi / sum(pi)`.
    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total();
        self.0.iter().map(|v| v / t).collect()
    }
}

impl std::ops::Index<usize> for Equilibrium {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Equilibrium {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Equilibrium> for Vec<f64> {
    fn from(e: Equilibrium) -> Self {
        e.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    Friendship,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeClass {
    /// Edge between two blade-mates, `(2i-1, 2i)`.
    Friend,
    /// Edge incident to the center vertex.
    Center,
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub class: EdgeClass,
}

impl Edge {
    pub fn key(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Friendship graph `F_m` or the star with `m` leaves.
///
/// Edges are ordered center edges first (`(0,1), (0,2), ...`), then friend
/// edges by blade.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    kind: TopologyKind,
    blades: usize,
    edges: Vec<Edge>,
}

impl Topology {
    pub fn friendship(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("friendship graph needs at least one blade".into()));
        }
        let mut edges: Vec<Edge> = (1..=2 * m).map(|j| Edge { a: 0, b: j, class: EdgeClass::Center }).collect();
        edges.extend((1..=m).map(|i| Edge { a: 2 * i - 1, b: 2 * i, class: EdgeClass::Friend }));
        Ok(Self { kind: TopologyKind::Friendship, blades: m, edges })
    }

    pub fn star(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("star needs at least one leaf".into()));
        }
        let edges = (1..=m).map(|j| Edge { a: 0, b: j, class: EdgeClass::Center }).collect();
        Ok(Self { kind: TopologyKind::Star, blades: m, edges })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    /// Blade count for a friendship graph, leaf count for a star.
    pub fn blades(&self) -> usize {
        self.blades
    }

    pub fn vertex_count(&self) -> usize {
        match self.kind {
            TopologyKind::Friendship => 2 * self.blades + 1,
            TopologyKind::Star => self.blades + 1,
        }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn friend_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.class == EdgeClass::Friend)
    }

    pub fn center_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.class == EdgeClass::Center)
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges.iter().position(|e| e.a == a && e.b == b)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_index(i, j).is_some()
    }

    /// 1-based blade owning a non-center vertex of a friendship graph.
    pub fn blade_of(&self, v: usize) -> Option<usize> {
        match self.kind {
            TopologyKind::Friendship if v >= 1 && v <= 2 * self.blades => Some(v.div_ceil(2)),
            _ => None,
        }
    }

    pub fn check_equilibrium(&self, pi: &Equilibrium) -> Result<()> {
        if pi.len() != self.vertex_count() {
            return Err(Error::InvalidArgument(format!(
                "topology has {} vertices but pi has {} entries",
                self.vertex_count(),
                pi.len()
            )));
        }
        Ok(())
    }
}

/// Build `F_m`: `2m+1` vertices, `m` friend edges and `2m` center edges.
pub fn build_friendship_graph(m: usize) -> Result<Topology> {
    Topology::friendship(m)
}

/// Edge weights keyed by ordered vertex pair.
///
/// Weights are normally symmetric (`set` writes both directions); the
/// directed setter exists so that asymmetric input can be represented and
/// reported by [`validate_chain`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Weights {
    map: BTreeMap<(usize, usize), f64>,
}

impl Weights {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.map.insert((i, j), w);
        self.map.insert((j, i), w);
    }

    pub fn set_directed(&mut self, i: usize, j: usize, w: f64) {
        self.map.insert((i, j), w);
    }

    pub fn with(mut self, i: usize, j: usize, w: f64) -> Self {
        self.set(i, j, w);
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.map.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Directed entries `((i, j), w)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }

    /// Undirected entries with `i < j`, using the `(i, j)` direction.
    pub fn undirected(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries().filter(|((i, j), _)| i < j)
    }

    pub fn load(&self, v: usize) -> f64 {
        self.map.iter().filter(|((i, j), _)| *i == v && *j != v).map(|(_, w)| w).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.entries().map(|((i, j), w)| (w - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { map: self.map.iter().map(|(k, v)| (*k, v * c)).collect() }
    }

    /// Weights from a per-edge vector aligned with `topology.edges()`.
    pub fn from_edge_vector(topology: &Topology, values: &[f64]) -> Self {
        let mut w = Self::new();
        for (e, v) in topology.edges().iter().zip(values) {
            w.set(e.a, e.b, *v);
        }
        w
    }

    /// Per-edge vector aligned with `topology.edges()`.
    pub fn to_edge_vector(&self, topology: &Topology) -> Vec<f64> {
        topology.edges().iter().map(|e| self.get(e.a, e.b)).collect()
    }

    /// Reject self loops, non-edges, negative and non-finite weights.
    pub fn check_on(&self, topology: &Topology) -> Result<()> {
        for ((i, j), w) in self.entries() {
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("weight on {i}-{j} is not finite")));
            }
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative weight {w} on {i}-{j}")));
            }
            if w != 0.0 && (i == j || !topology.has_edge(i, j)) {
                return Err(Error::InvalidArgument(format!("weight {w} on non-edge {i}-{j}")));
            }
            if i >= topology.vertex_count() || j >= topology.vertex_count() {
                return Err(Error::InvalidArgument(format!("vertex out of range in {i}-{j}")));
            }
        }
        Ok(())
    }
}

/// `L(q) = sum q_ij (e_i - e_j)(e_i - e_j)^T` over the edges of `topology`.
pub fn symmetric_laplacian(topology: &Topology, q: &Weights) -> Result<DMatrix<f64>> {
    q.check_on(topology)?;
    let asym = q.max_asymmetry();
    if asym > EXACT_TOL {
        return Err(Error::InvalidArgument(format!("weights are not symmetric (max difference {asym:.3e})")));
    }
    let n = topology.vertex_count();
    let mut l = DMatrix::zeros(n, n);
    for e in topology.edges() {
        let w = q.get(e.a, e.b);
        l[(e.a, e.a)] += w;
        l[(e.b, e.b)] += w;
        l[(e.a, e.b)] -= w;
        l[(e.b, e.a)] -= w;
    }
    Ok(l)
}

/// Row-stochastic transition matrix together with the masses it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
    pi: Equilibrium,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn pi(&self) -> &Equilibrium {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// `P = I - diag(pi)^{-1} L(q)` built without any feasibility checks.
    fn assemble(pi: &Equilibrium, q: &Weights, n: usize) -> Self {
        let mut p = DMatrix::zeros(n, n);
        for ((i, j), w) in q.entries() {
            if i != j {
                p[(i, j)] += w / pi[i];
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| p[(i, j)]).sum();
            p[(i, i)] = 1.0 - off;
        }
        Self { p, pi: pi.clone() }
    }

    /// Identity-like wrapper for tests and callers that already hold a matrix.
    pub fn from_parts(p: DMatrix<f64>, pi: Equilibrium) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() != pi.len() {
            return Err(Error::InvalidArgument("matrix and pi dimensions disagree".into()));
        }
        Ok(Self { p, pi })
    }
}

/// Assemble `P = I - D^{-1} L(q)` after checking the vertex budgets
/// `sum_k q_ik <= pi_i`.
pub fn build_transition_matrix(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Result<TransitionMatrix> {
    topology.check_equilibrium(pi)?;
    q.check_on(topology)?;
    let n = topology.vertex_count();
    for v in 0..n {
        let deficit = q.load(v) - pi[v];
        if deficit > EXACT_TOL * pi[v].max(1.0) {
            return Err(Error::InfeasibleWeights { vertex: v, deficit });
        }
    }
    Ok(TransitionMatrix::assemble(pi, q, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ViolationKind {
    NonEdge {
        a: usize,
        b: usize,
    },
    NegativeWeight {
        a: usize,
        b: usize,
    },
    /// Vertex budget exceeded, i.e. a negative holding probability.
    Budget {
        vertex: usize,
    },
    /// `q_ij != q_ji`, equivalently `pi_i P_ij != pi_j P_ji`.
    DetailedBalance {
        a: usize,
        b: usize,
    },
    RowSum {
        vertex: usize,
    },
    Stationarity {
        vertex: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub magnitude: f64,
}

/// Every violated chain constraint with its magnitude; empty iff feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn budget_violation(&self, vertex: usize) -> Option<f64> {
        self.violations.iter().find_map(|v| match v.kind {
            ViolationKind::Budget { vertex: u } if u == vertex => Some(v.magnitude),
            _ => None,
        })
    }

    pub fn has_detailed_balance_violation(&self) -> bool {
        self.violations.iter().any(|v| matches!(v.kind, ViolationKind::DetailedBalance { .. }))
    }
}

/// Check nonnegativity, row sums, stationarity and detailed balance of the
/// chain defined by `(pi, q)` and report all violations at once.
pub fn validate_chain(pi: &Equilibrium, q: &Weights, topology: &Topology) -> FeasibilityReport {
    let mut out = Vec::new();
    if topology.check_equilibrium(pi).is_err() {
        return FeasibilityReport {
            violations: vec![Violation {
                kind: ViolationKind::RowSum { vertex: 0 },
                magnitude: (pi.len() as f64 - topology.vertex_count() as f64).abs(),
            }],
        };
    }
    let n = topology.vertex_count();
    for ((i, j), w) in q.entries() {
        if i >= n || j >= n || (w != 0.0 && (i == j || !topology.has_edge(i, j))) {
            out.push(Violation { kind: ViolationKind::NonEdge { a: i, b: j }, magnitude: w.abs() });
        }
        if w < 0.0 {
            out.push(Violation { kind: ViolationKind::NegativeWeight { a: i, b: j }, magnitude: -w });
        }
    }
    // Out-of-range entries would index past the matrix; drop them here.
    let mut clean = Weights::new();
    for ((i, j), w) in q.entries() {
        if i < n && j < n && i != j {
            clean.set_directed(i, j, w);
        }
    }
    for v in 0..n {
        let deficit = clean.load(v) - pi[v];
        if deficit > EXACT_TOL * pi[v].max(1.0) {
            out.push(Violation { kind: ViolationKind::Budget { vertex: v }, magnitude: deficit });
        }
    }
    for ((i, j), w) in clean.entries() {
        if i < j {
            let d = (w - clean.get(j, i)).abs();
            if d > EXACT_TOL {
                out.push(Violation { kind: ViolationKind::DetailedBalance { a: i, b: j }, magnitude: d });
            }
        }
    }
    let tm = TransitionMatrix::assemble(pi, &clean, n);
    let p = tm.matrix();
    for i in 0..n {
        let rs: f64 = p.row(i).iter().sum();
        if (rs - 1.0).abs() > EXACT_TOL {
            out.push(Violation { kind: ViolationKind::RowSum { vertex: i }, magnitude: (rs - 1.0).abs() });
        }
    }
    let total = pi.total();
    for j in 0..n {
        let flow: f64 = (0..n).map(|i| pi[i] * p[(i, j)]).sum();
        let d = (flow - pi[j]).abs() / total;
        if d > STATIONARITY_TOL {
            out.push(Violation { kind: ViolationKind::Stationarity { vertex: j }, magnitude: d });
        }
    }
    FeasibilityReport { violations: out }
}

/// Chain description file: `{"m": 2, "pi": [...], "q": {"0-1": 0.25, ...}}`.
///
/// Vertex labels are canonical (center `0`); keys must be `"min-max"`.
/// `q_opt` is accepted for `q`, so solver output reads back as a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub m: usize,
    pub pi: Vec<f64>,
    #[serde(default, alias = "q_opt")]
    pub q: BTreeMap<String, f64>,
}

impl ChainSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ChainSpec = serde_json::from_str(text)?;
        spec.resolve()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_parts(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Self {
        let q = topology
            .edges()
            .iter()
            .filter_map(|e| {
                let w = q.get(e.a, e.b);
                (w != 0.0).then(|| (e.to_string(), w))
            })
            .collect();
        Self { m: topology.blades(), pi: pi.values().to_vec(), q }
    }

    /// Validate and convert into typed values on the friendship graph.
    pub fn resolve(&self) -> Result<(Equilibrium, Weights, Topology)> {
        let topology = Topology::friendship(self.m)?;
        let pi = Equilibrium::for_friendship(self.pi.clone(), self.m)?;
        let mut q = Weights::new();
        for (key, w) in &self.q {
            let (i, j) = parse_edge_key(key)?;
            if !topology.has_edge(i, j) {
                return Err(Error::Parse(format!("\"{key}\" is not an edge of F_{}", self.m)));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Parse(format!("weight on \"{key}\" must be >= 0, got {w}")));
            }
            q.set(i, j, *w);
        }
        Ok((pi, q, topology))
    }
}

fn parse_edge_key(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("edge key \"{key}\" is not of the form \"i-j\" with i < j"));
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i >= j {
        return Err(bad());
    }
    Ok((i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Equilibrium {
        Equilibrium::new(vec![1.0; n]).unwrap()
    }

    #[test]
    fn friendship_graph_sizes() {
        let t = build_friendship_graph(1).unwrap();
        assert_eq!(t.vertex_count(), 3);
        let f: Vec<_> = t.friend_edges().map(|e| e.key()).collect();
        let c: Vec<_> = t.center_edges().map(|e| e.key()).collect();
        assert_eq!(f, vec![(1, 2)]);
        assert_eq!(c, vec![(0, 1), (0, 2)]);

        let t = build_friendship_graph(2).unwrap();
        assert_eq!((t.vertex_count(), t.edges().len()), (5, 6));
        let t = build_friendship_graph(5).unwrap();
        assert_eq!((t.vertex_count(), t.edges().len()), (11, 15));
        assert_eq!(t.friend_edges().count(), 5);
        assert_eq!(t.center_edges().count(), 10);

        assert!(matches!(build_friendship_graph(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn blade_mates_share_only_the_center() {
        let t = build_friendship_graph(4).unwrap();
        let n = t.vertex_count();
        let adj = |i: usize, j: usize| t.has_edge(i, j);
        for i in 1..=4 {
            let (a, b) = (2 * i - 1, 2 * i);
            let common: Vec<_> = (0..n).filter(|&k| k != a && k != b && adj(a, k) && adj(b, k)).collect();
            assert_eq!(common, vec![0]);
            assert_eq!(t.blade_of(a), Some(i));
            assert_eq!(t.blade_of(b), Some(i));
        }
        assert_eq!(t.blade_of(0), None);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let t = build_friendship_graph(1).unwrap();
        let q = Weights::new().with(0, 1, 1.0).with(0, 2, 1.0);
        let l = symmetric_laplacian(&t, &q).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 2)], 0.0);
        assert_eq!(l[(0, 1)], -1.0);
        for i in 0..3 {
            assert!(l.row(i).iter().sum::<f64>().abs() < 1e-15);
        }
        let zero = symmetric_laplacian(&t, &Weights::new()).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn laplacian_rejects_non_edges() {
        let t = build_friendship_graph(2).unwrap();
        let q = Weights::new().with(1, 3, 0.1);
        assert!(matches!(symmetric_laplacian(&t, &q), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn uniform_pi_gives_symmetric_p() {
        let t = build_friendship_graph(2).unwrap();
        let q = Weights::new().with(0, 1, 0.2).with(0, 3, 0.1).with(1, 2, 0.3).with(3, 4, 0.05);
        let p = build_transition_matrix(&uniform(5), &q, &t).unwrap();
        let m = p.matrix();
        assert!((m - m.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn center_star_weights_quarter() {
        let t = build_friendship_graph(2).unwrap();
        let mut q = Weights::new();
        for j in 1..=4 {
            q.set(0, j, 0.25);
        }
        let p = build_transition_matrix(&uniform(5), &q, &t).unwrap();
        let m = p.matrix();
        assert_eq!(m[(0, 0)], 0.0);
        for j in 1..=4 {
            assert_eq!(m[(0, j)], 0.25);
            assert_eq!(m[(j, 0)], 0.25);
            assert_eq!(m[(j, j)], 0.75);
        }
    }

    #[test]
    fn regime_two_weights_saturate_center_row() {
        // Optimal weights for pi = (1,1,1,1,2) in the m = 2 second regime.
        let t = build_friendship_graph(2).unwrap();
        let pi = Equilibrium::new(vec![1.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let q =
            Weights::new().with(0, 1, 7.0 / 29.0).with(0, 2, 7.0 / 29.0).with(0, 3, 5.0 / 29.0).with(0, 4, 10.0 / 29.0);
        let p = build_transition_matrix(&pi, &q, &t).unwrap();
        let row: f64 = p.matrix().row(0).iter().sum();
        assert!((row - 1.0).abs() < 1e-15);
        assert!(p.matrix()[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn budget_violation_is_reported_with_deficit() {
        let t = build_friendship_graph(1).unwrap();
        let pi = Equilibrium::new(vec![2.0, 1.0, 1.0]).unwrap();
        let eps = 0.01;
        let q = Weights::new().with(0, 1, 1.0 + eps).with(1, 2, 0.2);
        match build_transition_matrix(&pi, &q, &t) {
            Err(Error::InfeasibleWeights { vertex, deficit }) => {
                assert_eq!(vertex, 1);
                assert!((deficit - 0.21).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let report = validate_chain(&pi, &q, &t);
        assert!((report.budget_violation(1).unwrap() - (0.2 + eps)).abs() < 1e-12);
    }

    #[test]
    fn feasible_chain_has_empty_report() {
        let t = build_friendship_graph(1).unwrap();
        let pi = Equilibrium::new(vec![2.0, 1.0, 1.0]).unwrap();
        let q = Weights::new().with(0, 1, 0.5).with(0, 2, 0.5).with(1, 2, 0.3);
        assert!(validate_chain(&pi, &q, &t).is_feasible());
    }

    #[test]
    fn asymmetric_weights_break_detailed_balance() {
        let t = build_friendship_graph(1).unwrap();
        let pi = Equilibrium::new(vec![2.0, 1.0, 1.0]).unwrap();
        let mut q = Weights::new().with(0, 1, 0.5);
        q.set_directed(0, 2, 0.4);
        q.set_directed(2, 0, 0.3);
        let r = validate_chain(&pi, &q, &t);
        assert!(r.has_detailed_balance_violation());
        assert!(r.violations.iter().any(|v| matches!(v.kind, ViolationKind::Stationarity { .. })));
    }

    #[test]
    fn chain_spec_parsing() {
        let text = r#"{"m": 1, "pi": [2, 1, 1], "q": {"0-1": 0.5, "0-2": 0.5, "1-2": 0.1}}"#;
        let spec = ChainSpec::from_json(text).unwrap();
        let (pi, q, t) = spec.resolve().unwrap();
        assert_eq!(pi.values(), &[2.0, 1.0, 1.0]);
        assert_eq!(q.get(2, 1), 0.1);
        let back = ChainSpec::from_parts(&pi, &q, &t);
        assert_eq!(ChainSpec::from_json(&back.to_json().unwrap()).unwrap(), spec);

        let non_edge = r#"{"m": 2, "pi": [1,1,1,1,1], "q": {"1-3": 0.1}}"#;
        assert!(matches!(ChainSpec::from_json(non_edge), Err(Error::Parse(_))));
        let negative = r#"{"m": 1, "pi": [1,1,1], "q": {"0-1": -0.1}}"#;
        assert!(matches!(ChainSpec::from_json(negative), Err(Error::Parse(_))));
        let reversed = r#"{"m": 1, "pi": [1,1,1], "q": {"1-0": 0.1}}"#;
        assert!(ChainSpec::from_json(reversed).is_err());
        let bad_pi = r#"{"m": 1, "pi": [1,0,1]}"#;
        assert!(ChainSpec::from_json(bad_pi).is_err());
    }
}
