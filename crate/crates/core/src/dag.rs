//! Order constraints between nodes: a generic DAG type and the covering
//! relation of coordinate-wise dominance over a set of lattice points.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{compare_unchecked, CriteriaVector, Dominance};

/// Slack allowed on an order constraint when checking isotonicity.
pub const ISOTONIC_TOL: f64 = 1e-12;

/// A directed acyclic graph on nodes `0..n`. An edge `(u, v)` encodes the
/// constraint `value(u) <= value(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    successors: Vec<Vec<usize>>,
}

impl ConstraintGraph {
    /// Builds the graph, rejecting out-of-range endpoints, self loops and cycles.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut successors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::CyclicGraph);
            }
            successors[u].push(v);
        }
        let graph = Self {
            n,
            edges,
            successors,
        };
        if graph.topological_order().is_none() {
            return Err(Error::CyclicGraph);
        }
        Ok(graph)
    }

    pub(crate) fn from_acyclic(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut successors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            successors[u].push(v);
        }
        Self {
            n,
            edges,
            successors,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        &self.successors[u]
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.n];
        for &(_, v) in &self.edges {
            indegree[v] += 1;
        }
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&u| indegree[u] == 0).collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.successors[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// `reach[u][v]` is true when `v` is reachable from `u` (including `u == v`).
    pub fn reachability(&self) -> Vec<Vec<bool>> {
        let order = self
            .topological_order()
            .expect("constraint graph is acyclic by construction");
        let mut reach = vec![vec![false; self.n]; self.n];
        for &u in order.iter().rev() {
            reach[u][u] = true;
            for &v in &self.successors[u] {
                for w in 0..self.n {
                    if reach[v][w] {
                        reach[u][w] = true;
                    }
                }
            }
        }
        reach
    }
}

/// The covering relation of dominance restricted to a set of distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderDag {
    nodes: Vec<CriteriaVector>,
    graph: ConstraintGraph,
}

impl OrderDag {
    /// Computes covering edges among `nodes`, which must be pairwise distinct
    /// and share one dimension.
    ///
    /// The covers of `v` are the maximal elements of the set of points strictly
    /// below `v`. Scanning candidates by decreasing coordinate sum means every
    /// element that could dominate a candidate has already been classified.
    pub fn covering(nodes: Vec<CriteriaVector>) -> Result<Self> {
        if let Some(first) = nodes.first() {
            if let Some(bad) = nodes.iter().find(|x| x.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        let mut by_sum: Vec<usize> = (0..nodes.len()).collect();
        by_sum.sort_by_key(|&i| (nodes[i].sum(), i));

        let mut edges = Vec::new();
        let mut below = Vec::new();
        let mut covers: Vec<usize> = Vec::new();
        for (pos, &v) in by_sum.iter().enumerate() {
            let vc = nodes[v].coords();
            below.clear();
            for &u in by_sum[..pos].iter().rev() {
                match compare_unchecked(nodes[u].coords(), vc) {
                    Dominance::Dominated => below.push(u),
                    Dominance::Equal => {
                        return Err(Error::InvalidInput(format!(
                            "duplicate node {} in order DAG",
                            nodes[u]
                        )))
                    }
                    _ => {}
                }
            }
            covers.clear();
            for &u in &below {
                let uc = nodes[u].coords();
                let shadowed = covers
                    .iter()
                    .any(|&c| compare_unchecked(nodes[c].coords(), uc) == Dominance::Dominates);
                if !shadowed {
                    covers.push(u);
                }
            }
            edges.extend(covers.iter().map(|&u| (u, v)));
        }
        edges.sort_unstable();
        let graph = ConstraintGraph::from_acyclic(nodes.len(), edges);
        Ok(Self { nodes, graph })
    }

    pub fn nodes(&self) -> &[CriteriaVector] {
        &self.nodes
    }

    pub fn graph(&self) -> &ConstraintGraph {
        &self.graph
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// One real value per node of a constraint graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicAssignment {
    values: Vec<f64>,
}

impl IsotonicAssignment {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// True iff every edge `(u, v)` satisfies `value(u) <= value(v) + 1e-12`.
pub fn is_isotonic(graph: &ConstraintGraph, assignment: &IsotonicAssignment) -> Result<bool> {
    let values = assignment.values();
    if values.len() < graph.node_count() {
        return Err(Error::MissingValue(values.len()));
    }
    if values.len() > graph.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} values for {} nodes",
            values.len(),
            graph.node_count()
        )));
    }
    Ok(graph
        .edges()
        .iter()
        .all(|&(u, v)| values[u] <= values[v] + ISOTONIC_TOL))
}
