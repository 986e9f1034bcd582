//! Exact weighted L2 isotonic regression on a DAG.
//!
//! The solver starts from a single pooled block and repeatedly splits blocks
//! along a maximum-weight upward-closed subset of their weighted residuals,
//! found with a minimum cut. A block whose best split gains nothing is at its
//! optimal level.

mod maxflow;
pub mod oracle;

use crate::dag::{ConstraintGraph, IsotonicAssignment};
use crate::dataset::refined_mean;
use crate::error::{Error, Result};

use maxflow::FlowNetwork;

pub use oracle::isotonic_oracle;

/// Relative size of a split gain treated as floating-point noise.
const SPLIT_TOL: f64 = 1e-13;

/// Per-node targets and strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTargets {
    targets: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedTargets {
    pub fn new(targets: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if targets.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} targets but {} weights",
                targets.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {} at node {i} is not strictly positive",
                weights[i]
            )));
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("target at node {i} is not finite")));
        }
        Ok(Self { targets, weights })
    }

    /// Unit weights.
    pub fn unweighted(targets: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; targets.len()];
        Self::new(targets, weights)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// `Σ w_u (f_u − t_u)²`.
    pub fn objective(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((f, t), w)| w * (f - t) * (f - t))
            .sum()
    }
}

fn check_sizes(graph: &ConstraintGraph, wt: &WeightedTargets) -> Result<()> {
    if wt.len() != graph.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} targets for {} nodes",
            wt.len(),
            graph.node_count()
        )));
    }
    Ok(())
}

/// Minimizes `Σ w_u (f_u − t_u)²` subject to `f_u <= f_v` for every edge.
pub fn isotonic_fit(graph: &ConstraintGraph, wt: &WeightedTargets) -> Result<IsotonicAssignment> {
    check_sizes(graph, wt)?;
    let n = graph.node_count();
    let t = wt.targets();
    let w = wt.weights();

    let mut values = vec![0.0; n];
    let mut block_of = vec![0usize; n];
    let mut local = vec![usize::MAX; n];
    let mut next_block = 1;
    let mut stack: Vec<(usize, Vec<usize>)> = if n > 0 {
        vec![(0, (0..n).collect())]
    } else {
        Vec::new()
    };

    while let Some((id, block)) = stack.pop() {
        if block.len() == 1 {
            values[block[0]] = t[block[0]];
            continue;
        }
        let bt: Vec<f64> = block.iter().map(|&u| t[u]).collect();
        let bw: Vec<f64> = block.iter().map(|&u| w[u]).collect();
        let mean = refined_mean(&bt, &bw);
        let residual: Vec<f64> = block.iter().map(|&u| w[u] * (t[u] - mean)).collect();
        let scale: f64 = block
            .iter()
            .map(|&u| w[u] * (t[u].abs() + mean.abs()))
            .sum();

        let upper = best_upper_set(graph, &block, id, &block_of, &mut local, &residual);
        let gain: f64 = residual
            .iter()
            .zip(&upper)
            .filter(|(_, &up)| up)
            .map(|(r, _)| r)
            .sum();
        let n_upper = upper.iter().filter(|&&up| up).count();
        if gain <= SPLIT_TOL * scale || n_upper == 0 || n_upper == block.len() {
            for &u in &block {
                values[u] = mean;
            }
            continue;
        }
        let mut hi = Vec::with_capacity(n_upper);
        let mut lo = Vec::with_capacity(block.len() - n_upper);
        for (&u, &up) in block.iter().zip(&upper) {
            if up {
                hi.push(u);
            } else {
                lo.push(u);
            }
        }
        for (part, part_id) in [(hi, next_block), (lo, next_block + 1)] {
            for &u in &part {
                block_of[u] = part_id;
            }
            stack.push((part_id, part));
        }
        next_block += 2;
    }
    Ok(IsotonicAssignment::new(values))
}

/// Maximum-weight subset of `block` closed under successors inside the block.
fn best_upper_set(
    graph: &ConstraintGraph,
    block: &[usize],
    id: usize,
    block_of: &[usize],
    local: &mut [usize],
    residual: &[f64],
) -> Vec<bool> {
    let k = block.len();
    let (source, sink) = (k, k + 1);
    for (i, &u) in block.iter().enumerate() {
        local[u] = i;
    }
    let mut net = FlowNetwork::new(k + 2);
    let mut magnitude = 0.0f64;
    for (i, &r) in residual.iter().enumerate() {
        magnitude = magnitude.max(r.abs());
        if r > 0.0 {
            net.add_edge(source, i, r);
        } else if r < 0.0 {
            net.add_edge(i, sink, -r);
        }
    }
    for &u in block {
        for &v in graph.successors(u) {
            if block_of[v] == id {
                net.add_edge(local[u], local[v], f64::INFINITY);
            }
        }
    }
    let eps = magnitude * 1e-15;
    net.max_flow(source, sink, eps);
    let mut side = net.source_side(source, eps);
    side.truncate(k);
    side
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{is_isotonic, OrderDag};
    use crate::lattice::CriteriaVector;
    use proptest::prelude::*;

    fn chain(n: usize) -> ConstraintGraph {
        ConstraintGraph::new(n, (1..n).map(|i| (i - 1, i)).collect()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn reversed_pair_pools() {
        let fit = isotonic_fit(&chain(2), &WeightedTargets::unweighted(vec![1.0, 0.0]).unwrap())
            .unwrap();
        assert_eq!(fit.values(), &[0.5, 0.5]);
    }

    #[test]
    fn feasible_targets_unchanged() {
        let wt = WeightedTargets::new(vec![0.1, 0.4, 0.4, 0.9], vec![3.0, 0.2, 1.0, 7.0]).unwrap();
        let fit = isotonic_fit(&chain(4), &wt).unwrap();
        assert!(close(fit.values(), wt.targets(), 1e-15));
    }

    #[test]
    fn three_chain_pools_everything() {
        let wt = WeightedTargets::unweighted(vec![0.9, 0.1, 0.5]).unwrap();
        let fit = isotonic_fit(&chain(3), &wt).unwrap();
        assert!(close(fit.values(), &[0.5, 0.5, 0.5], 1e-15));
    }

    #[test]
    fn two_by_two_lattice_matches_oracle() {
        let pts = [[1, 1], [1, 2], [2, 1], [2, 2]]
            .iter()
            .map(|c| CriteriaVector::new(c.to_vec()))
            .collect();
        let dag = OrderDag::covering(pts).unwrap();
        let wt = WeightedTargets::new(vec![0.9, 0.1, 0.2, 0.8], vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let fit = isotonic_fit(dag.graph(), &wt).unwrap();
        let oracle = isotonic_oracle(dag.graph(), &wt).unwrap();
        assert!(close(fit.values(), oracle.values(), 1e-8));
        // (1,1) pools with both middle points at (2*0.9+0.1+0.2)/4
        assert!(close(fit.values(), &[0.525, 0.525, 0.525, 0.8], 1e-12));
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(isotonic_fit(&chain(3), &WeightedTargets::unweighted(vec![0.0]).unwrap()).is_err());
        assert!(WeightedTargets::new(vec![0.0], vec![0.0]).is_err());
        assert!(WeightedTargets::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn long_chain_is_pava() {
        let targets: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let wt = WeightedTargets::unweighted(targets.clone()).unwrap();
        let fit = isotonic_fit(&chain(2000), &wt).unwrap();
        assert!(close(fit.values(), &pava(&targets), 1e-10));
    }

    fn pava(t: &[f64]) -> Vec<f64> {
        let mut blocks: Vec<(f64, f64)> = Vec::new();
        for &y in t {
            blocks.push((y, 1.0));
            while blocks.len() > 1 {
                let (m2, w2) = blocks[blocks.len() - 1];
                let (m1, w1) = blocks[blocks.len() - 2];
                if m1 <= m2 {
                    break;
                }
                blocks.pop();
                *blocks.last_mut().unwrap() = ((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2);
            }
        }
        blocks
            .into_iter()
            .flat_map(|(m, w)| std::iter::repeat(m).take(w as usize))
            .collect()
    }

    fn random_instance() -> impl Strategy<Value = (ConstraintGraph, WeightedTargets)> {
        (1usize..=7).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let np = pairs.len();
            (
                prop::collection::vec(prop::bool::weighted(0.35), np),
                prop::collection::vec(-1.0f64..2.0, n),
                prop::collection::vec(0.1f64..10.0, n),
            )
                .prop_map(move |(keep, t, w)| {
                    let edges: Vec<_> = pairs
                        .iter()
                        .zip(&keep)
                        .filter(|(_, &k)| k)
                        .map(|(&e, _)| e)
                        .take(14)
                        .collect();
                    let g = ConstraintGraph::new(t.len(), edges).unwrap();
                    (g, WeightedTargets::new(t, w).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn matches_oracle((g, wt) in random_instance()) {
            let fit = isotonic_fit(&g, &wt).unwrap();
            let oracle = isotonic_oracle(&g, &wt).unwrap();
            prop_assert!(close(fit.values(), oracle.values(), 1e-8));
            prop_assert!(is_isotonic(&g, &fit).unwrap());
        }

        #[test]
        fn conserves_weighted_mean((g, wt) in random_instance()) {
            let fit = isotonic_fit(&g, &wt).unwrap();
            let lhs: f64 = fit.values().iter().zip(wt.weights()).map(|(f, w)| f * w).sum();
            let rhs: f64 = wt.targets().iter().zip(wt.weights()).map(|(t, w)| t * w).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn idempotent((g, wt) in random_instance()) {
            let fit = isotonic_fit(&g, &wt).unwrap();
            let again = WeightedTargets::new(fit.values().to_vec(), wt.weights().to_vec()).unwrap();
            let refit = isotonic_fit(&g, &again).unwrap();
            prop_assert!(close(refit.values(), fit.values(), 1e-12));
        }

        #[test]
        fn monotone_in_targets((g, wt) in random_instance(), bump in 0.0f64..1.0, at in 0usize..7) {
            let at = at % wt.len();
            let mut raised = wt.targets().to_vec();
            raised[at] += bump;
            let before = isotonic_fit(&g, &wt).unwrap();
            let after = isotonic_fit(&g, &WeightedTargets::new(raised, wt.weights().to_vec()).unwrap()).unwrap();
            for (b, a) in before.values().iter().zip(after.values()) {
                prop_assert!(*a >= *b - 1e-10);
            }
        }

        #[test]
        fn relabeling_permutes_solution((g, wt) in random_instance(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = wt.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let edges = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
            let pg = ConstraintGraph::new(n, edges).unwrap();
            let mut t = vec![0.0; n];
            let mut w = vec![0.0; n];
            for u in 0..n {
                t[perm[u]] = wt.targets()[u];
                w[perm[u]] = wt.weights()[u];
            }
            let fit = isotonic_fit(&g, &wt).unwrap();
            let pfit = isotonic_fit(&pg, &WeightedTargets::new(t, w).unwrap()).unwrap();
            for u in 0..n {
                prop_assert!((fit.values()[u] - pfit.values()[perm[u]]).abs() <= 1e-12);
            }
        }
    }
}
