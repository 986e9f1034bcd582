//! Brute-force isotonic regression for small instances.

use crate::dag::{ConstraintGraph, IsotonicAssignment, ISOTONIC_TOL};
use crate::error::{Error, Result};

use super::{check_sizes, WeightedTargets};

pub const ORACLE_MAX_NODES: usize = 10;
pub const ORACLE_MAX_EDGES: usize = 20;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Tries every subset of edges as the set of tight constraints, pools the
/// induced components at their weighted means and keeps the best feasible
/// candidate.
pub fn isotonic_oracle(graph: &ConstraintGraph, wt: &WeightedTargets) -> Result<IsotonicAssignment> {
    check_sizes(graph, wt)?;
    let n = graph.node_count();
    let edges = graph.edges();
    if n > ORACLE_MAX_NODES || edges.len() > ORACLE_MAX_EDGES {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {ORACLE_MAX_NODES} nodes and {ORACLE_MAX_EDGES} edges, got {n} and {}",
            edges.len()
        )));
    }
    let (t, w) = (wt.targets(), wt.weights());
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut parent = vec![0usize; n];
    let mut sum_wt = vec![0.0; n];
    let mut sum_w = vec![0.0; n];
    let mut size = vec![0usize; n];
    let mut values = vec![0.0; n];
    for mask in 0u32..(1u32 << edges.len()) {
        for (u, p) in parent.iter_mut().enumerate() {
            *p = u;
        }
        for (k, &(u, v)) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    parent[ru] = rv;
                }
            }
        }
        sum_wt.iter_mut().for_each(|s| *s = 0.0);
        sum_w.iter_mut().for_each(|s| *s = 0.0);
        size.iter_mut().for_each(|s| *s = 0);
        for u in 0..n {
            let r = find(&mut parent, u);
            sum_wt[r] += w[u] * t[u];
            sum_w[r] += w[u];
            size[r] += 1;
        }
        for u in 0..n {
            let r = find(&mut parent, u);
            values[u] = if size[r] == 1 {
                t[u]
            } else {
                sum_wt[r] / sum_w[r]
            };
        }
        if edges
            .iter()
            .any(|&(u, v)| values[u] > values[v] + ISOTONIC_TOL)
        {
            continue;
        }
        let objective = wt.objective(&values);
        if best.as_ref().is_none_or(|(b, _)| objective < *b) {
            best = Some((objective, values.clone()));
        }
    }
    let (_, values) = best.expect("the all-tight candidate is always feasible");
    Ok(IsotonicAssignment::new(values))
}
