//! Combinatorial size measures of the strategy polytope.
//!
//! Three per-point quantities are computed by one bottom-up sweep:
//!
//! - `leaf_count[h]`: the largest number of terminal sequences a single
//!   strategy can reach inside the subtree at `h` (terminal: 1; decision
//!   point: max over actions; observation point: sum over children).
//! - `seq_count[h]`: the largest number of sequences — the subtree's own
//!   observation point included — a single strategy touches (terminal: 1;
//!   decision point: max over actions; observation point: 1 + sum).
//! - `vertex_count[h]`: the number of deterministic strategies of the
//!   subtree (terminal: 1; decision point: sum; observation point:
//!   product). Grows doubly exponentially with depth, hence big integers.
//!
//! [`enumerate_vertices`] and [`enumerate_kernels`] list the deterministic
//! members of the two polytopes exactly, in depth-first action order, for
//! use as brute-force oracles. [`normalize_observations`] removes
//! single-outcome observation points by fusing consecutive decisions into
//! composite actions, preserving the strategy polytope, the leaf count,
//! and the vertex count while strictly reducing the action count.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::numeric::kahan_sum;
use crate::tfsdp::{Kernel, PointId, Strategy, Tfsdp, TfsdpBuilder};

/// Per-point size measures; index with a [`PointId`].
#[derive(Debug, Clone)]
pub struct SubtreeMetrics {
    pub leaf_count: Vec<u64>,
    pub seq_count: Vec<u64>,
    pub vertex_count: Vec<BigUint>,
    /// Natural log of `vertex_count`, accumulated in log space so it stays
    /// finite on trees whose vertex count overflows `f64`.
    pub ln_vertex_count: Vec<f64>,
}

impl SubtreeMetrics {
    pub fn compute(t: &Tfsdp) -> Self {
        let n = t.num_points();
        let mut leaf_count = vec![0u64; n];
        let mut seq_count = vec![0u64; n];
        let mut vertex_count = vec![BigUint::zero(); n];
        let mut ln_vertex_count = vec![0.0f64; n];
        for &p in t.pre_order().iter().rev() {
            let kids = t.children(p);
            if t.is_terminal(p) {
                leaf_count[p] = 1;
                seq_count[p] = 1;
                vertex_count[p] = BigUint::one();
                ln_vertex_count[p] = 0.0;
            } else if t.is_decision(p) {
                leaf_count[p] = kids.iter().map(|&c| leaf_count[c]).max().unwrap();
                seq_count[p] = kids.iter().map(|&c| seq_count[c]).max().unwrap();
                vertex_count[p] = kids.iter().map(|&c| vertex_count[c].clone()).sum();
                ln_vertex_count[p] = log_sum_exp(kids.iter().map(|&c| ln_vertex_count[c]));
            } else {
                leaf_count[p] = kids.iter().map(|&c| leaf_count[c]).sum();
                seq_count[p] = 1 + kids.iter().map(|&c| seq_count[c]).sum::<u64>();
                vertex_count[p] = kids
                    .iter()
                    .map(|&c| vertex_count[c].clone())
                    .product::<BigUint>();
                ln_vertex_count[p] = kahan_sum(kids.iter().map(|&c| ln_vertex_count[c]));
            }
        }
        Self {
            leaf_count,
            seq_count,
            vertex_count,
            ln_vertex_count,
        }
    }

    pub fn root_leaf_count(&self) -> u64 {
        self.leaf_count[Tfsdp::root()]
    }

    pub fn root_seq_count(&self) -> u64 {
        self.seq_count[Tfsdp::root()]
    }

    pub fn root_vertex_count(&self) -> &BigUint {
        &self.vertex_count[Tfsdp::root()]
    }

    pub fn root_ln_vertex_count(&self) -> f64 {
        self.ln_vertex_count[Tfsdp::root()]
    }
}

fn log_sum_exp(vals: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = vals.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + vals.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Largest number of terminal sequences reachable by one strategy.
pub fn leaf_count(t: &Tfsdp) -> u64 {
    SubtreeMetrics::compute(t).root_leaf_count()
}

/// Largest number of sequences (the empty sequence included) reachable by
/// one strategy.
pub fn tree_size(t: &Tfsdp) -> u64 {
    SubtreeMetrics::compute(t).root_seq_count()
}

/// Number of deterministic sequence-form strategies.
pub fn vertex_count(t: &Tfsdp) -> BigUint {
    SubtreeMetrics::compute(t)
        .root_vertex_count()
        .clone()
}

/// Natural log of [`vertex_count`], stable for arbitrarily deep trees.
pub fn ln_vertex_count(t: &Tfsdp) -> f64 {
    SubtreeMetrics::compute(t).root_ln_vertex_count()
}

#[derive(Debug, Error)]
pub enum EnumerationError {
    #[error("{count} {what} exceed the enumeration cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: BigUint,
        cap: usize,
    },
}

/// Lists every deterministic strategy, in depth-first action order, as
/// dense 0/1 terminal vectors. Errors if the tree has more than `cap`
/// vertices.
pub fn enumerate_vertices(t: &Tfsdp, cap: usize) -> Result<Vec<Strategy>, EnumerationError> {
    let m = SubtreeMetrics::compute(t);
    let count = m.root_vertex_count();
    if count > &BigUint::from(cap) {
        return Err(EnumerationError::CapExceeded {
            what: "vertices",
            count: count.clone(),
            cap,
        });
    }
    let supports = vertex_supports(t, Tfsdp::root());
    debug_assert_eq!(BigUint::from(supports.len()), *count);
    Ok(supports
        .into_iter()
        .map(|s| Strategy {
            values: densify(t.num_terminals(), &s),
        })
        .collect())
}

/// Lists every deterministic kernel, in depth-first child order.
pub fn enumerate_kernels(t: &Tfsdp, cap: usize) -> Result<Vec<Kernel>, EnumerationError> {
    let count = kernel_count(t, Tfsdp::root());
    if count > BigUint::from(cap) {
        return Err(EnumerationError::CapExceeded {
            what: "kernels",
            count,
            cap,
        });
    }
    let supports = kernel_supports(t, Tfsdp::root());
    Ok(supports
        .into_iter()
        .map(|s| Kernel {
            values: densify(t.num_terminals(), &s),
        })
        .collect())
}

fn densify(len: usize, support: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; len];
    for &c in support {
        v[c] = 1.0;
    }
    v
}

/// Terminal-coordinate supports of the subtree's deterministic strategies.
/// Decision point: concatenation over actions; observation point: cross
/// product over children (later children vary fastest).
fn vertex_supports(t: &Tfsdp, p: PointId) -> Vec<Vec<usize>> {
    if let Some(coord) = t.terminal_index(p) {
        return vec![vec![coord]];
    }
    if t.is_decision(p) {
        t.children(p)
            .iter()
            .flat_map(|&c| vertex_supports(t, c))
            .collect()
    } else {
        cross_product(t.children(p).iter().map(|&c| vertex_supports(t, c)))
    }
}

fn kernel_supports(t: &Tfsdp, p: PointId) -> Vec<Vec<usize>> {
    if let Some(coord) = t.terminal_index(p) {
        return vec![vec![coord]];
    }
    if t.is_decision(p) {
        cross_product(t.children(p).iter().map(|&c| kernel_supports(t, c)))
    } else {
        t.children(p)
            .iter()
            .flat_map(|&c| kernel_supports(t, c))
            .collect()
    }
}

fn cross_product(parts: impl Iterator<Item = Vec<Vec<usize>>>) -> Vec<Vec<usize>> {
    let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
    for part in parts {
        let mut next = Vec::with_capacity(acc.len() * part.len());
        for base in &acc {
            for ext in &part {
                let mut merged = base.clone();
                merged.extend_from_slice(ext);
                next.push(merged);
            }
        }
        acc = next;
    }
    acc
}

fn kernel_count(t: &Tfsdp, p: PointId) -> BigUint {
    if t.is_terminal(p) {
        BigUint::one()
    } else if t.is_decision(p) {
        t.children(p).iter().map(|&c| kernel_count(t, c)).product()
    } else {
        t.children(p).iter().map(|&c| kernel_count(t, c)).sum()
    }
}

/// Rebuilds the tree with every non-root single-outcome observation point
/// removed: when the sequence `ja` has exactly one child decision point
/// `j'`, the two decisions fuse and `j` gains one composite action
/// `"a/a'"` per action `a'` of `j'`. Cascades are flattened in one pass.
/// Terminal sequences keep their order, so strategies carry over
/// coordinate for coordinate.
pub fn normalize_observations(t: &Tfsdp) -> Tfsdp {
    let mut b = TfsdpBuilder::new();
    let root = b.root();
    for &j in t.children(Tfsdp::root()) {
        copy_decision(t, j, &mut b, root);
    }
    b.finish().expect("normalization preserves well-formedness")
}

fn copy_decision(t: &Tfsdp, j: PointId, b: &mut TfsdpBuilder, parent: PointId) {
    let new_j = b.add_decision(parent, t.label(j)).unwrap();
    for (a, &obs) in t.children(j).iter().enumerate() {
        emit_action(t, &t.actions(j)[a], obs, b, new_j);
    }
}

/// Emits the action `label` of the (possibly fused) decision point `new_j`,
/// flattening chains of single-child observation points below it.
fn emit_action(t: &Tfsdp, label: &str, obs: PointId, b: &mut TfsdpBuilder, new_j: PointId) {
    let kids = t.children(obs);
    if kids.len() == 1 && !t.is_terminal(obs) {
        let inner = kids[0];
        for (a, &inner_obs) in t.children(inner).iter().enumerate() {
            let fused = format!("{}/{}", label, t.actions(inner)[a]);
            emit_action(t, &fused, inner_obs, b, new_j);
        }
    } else {
        let new_obs = b
            .add_action_labeled(new_j, label, t.label(obs))
            .unwrap();
        for &child in kids {
            copy_decision(t, child, b, new_obs);
        }
    }
}

/// `vertex_count` as `f64` when it fits, for callers needing a ratio.
pub fn vertex_count_f64(count: &BigUint) -> f64 {
    count.to_f64().unwrap_or(f64::INFINITY)
}
