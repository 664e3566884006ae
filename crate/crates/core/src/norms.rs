//! The dual pair of tree norms on terminal vectors.
//!
//! For a vector `u` indexed by terminal sequences,
//!
//! - the **kernel norm** `‖u‖₁ = max_y ⟨|u|, y⟩` maximizes over transition
//!   kernels, and
//! - the **vertex norm** `‖u‖∞ = max_x ⟨|u|, x⟩` maximizes over strategies.
//!
//! Both are computed by one bottom-up sweep that mirrors which side owns
//! each branching: the kernel norm sums over actions at decision points
//! (the kernel must serve all of them) and takes the max over children at
//! observation points (the kernel picks one); the vertex norm swaps the
//! two roles. On a single simplex they reduce to the classical ℓ1 and ℓ∞
//! norms, which fixes the naming.
//!
//! The two norms are dual to each other: `max_v ⟨u, v⟩ / ‖v‖₁ = ‖u‖∞` and
//! symmetrically. [`linf_certificate`] and [`l1_certificate`] construct
//! sign-decorated deterministic maximizers witnessing the attainment.

use crate::metrics::{enumerate_kernels, enumerate_vertices, EnumerationError};
use crate::numeric::kahan_dot;
use crate::tfsdp::{Tfsdp, TfsdpError};

/// Which of the two tree norms to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// Kernel norm `max_y ⟨|u|, y⟩`.
    L1,
    /// Vertex norm `max_x ⟨|u|, x⟩`.
    Linf,
}

/// Reusable scratch buffer sized for one tree, for callers evaluating many
/// norms on the same shape.
#[derive(Debug, Clone)]
pub struct NormWorkspace {
    buf: Vec<f64>,
}

impl NormWorkspace {
    pub fn new(t: &Tfsdp) -> Self {
        Self {
            buf: vec![0.0; t.num_points()],
        }
    }
}

/// Kernel norm `max_y ⟨|u|, y⟩`, allocating its own workspace.
pub fn norm_l1(t: &Tfsdp, u: &[f64]) -> f64 {
    norm_l1_with(&mut NormWorkspace::new(t), t, u)
}

/// Vertex norm `max_x ⟨|u|, x⟩`, allocating its own workspace.
pub fn norm_linf(t: &Tfsdp, u: &[f64]) -> f64 {
    norm_linf_with(&mut NormWorkspace::new(t), t, u)
}

pub fn norm_l1_with(ws: &mut NormWorkspace, t: &Tfsdp, u: &[f64]) -> f64 {
    eval(ws, t, u, NormKind::L1)
}

pub fn norm_linf_with(ws: &mut NormWorkspace, t: &Tfsdp, u: &[f64]) -> f64 {
    eval(ws, t, u, NormKind::Linf)
}

fn eval(ws: &mut NormWorkspace, t: &Tfsdp, u: &[f64], kind: NormKind) -> f64 {
    assert_eq!(
        u.len(),
        t.num_terminals(),
        "norm input must have one entry per terminal sequence"
    );
    let buf = &mut ws.buf;
    for &p in t.pre_order().iter().rev() {
        buf[p] = if let Some(coord) = t.terminal_index(p) {
            u[coord].abs()
        } else {
            let kids = t.children(p);
            let sum_here = match kind {
                // The kernel serves every action; the strategy serves
                // every observation outcome.
                NormKind::L1 => t.is_decision(p),
                NormKind::Linf => !t.is_decision(p),
            };
            if sum_here {
                kids.iter().map(|&c| buf[c]).sum()
            } else {
                kids.iter().map(|&c| buf[c]).fold(f64::NEG_INFINITY, f64::max)
            }
        };
    }
    buf[Tfsdp::root()]
}

/// Brute-force norm via exact enumeration of the maximizing polytope.
/// Inner products use compensated summation so the reference value is
/// accurate to machine precision.
pub fn norm_oracle(
    t: &Tfsdp,
    u: &[f64],
    kind: NormKind,
    cap: usize,
) -> Result<f64, EnumerationError> {
    let abs: Vec<f64> = u.iter().map(|x| x.abs()).collect();
    let best = match kind {
        NormKind::L1 => enumerate_kernels(t, cap)?
            .iter()
            .map(|y| kahan_dot(&abs, &y.values))
            .fold(f64::NEG_INFINITY, f64::max),
        NormKind::Linf => enumerate_vertices(t, cap)?
            .iter()
            .map(|x| kahan_dot(&abs, &x.values))
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(best)
}

/// Witnesses `⟨u, v⟩ = ‖u‖∞ · ‖v‖₁` with `‖v‖₁ = 1`: the deterministic
/// strategy found by following the argmax actions of the vertex-norm sweep
/// (lowest index on ties), with each reached terminal entry set to ±1
/// matching the sign of `u` (+1 where `u` is zero).
pub fn linf_certificate(t: &Tfsdp, u: &[f64]) -> Vec<f64> {
    certificate(t, u, NormKind::Linf)
}

/// Witnesses `⟨u, v⟩ = ‖u‖₁ · ‖v‖∞` with `‖v‖∞ = 1`: the sign-decorated
/// deterministic kernel following the argmax children of the kernel-norm
/// sweep.
pub fn l1_certificate(t: &Tfsdp, u: &[f64]) -> Vec<f64> {
    certificate(t, u, NormKind::L1)
}

fn certificate(t: &Tfsdp, u: &[f64], kind: NormKind) -> Vec<f64> {
    let mut ws = NormWorkspace::new(t);
    eval(&mut ws, t, u, kind);
    let buf = &ws.buf;
    let mut v = vec![0.0; t.num_terminals()];
    let mut stack = vec![Tfsdp::root()];
    while let Some(p) = stack.pop() {
        if let Some(coord) = t.terminal_index(p) {
            v[coord] = if u[coord] < 0.0 { -1.0 } else { 1.0 };
            continue;
        }
        let kids = t.children(p);
        let follow_best = match kind {
            NormKind::Linf => t.is_decision(p),
            NormKind::L1 => !t.is_decision(p),
        };
        if follow_best {
            let mut best = kids[0];
            for &c in &kids[1..] {
                if buf[c] > buf[best] {
                    best = c;
                }
            }
            stack.push(best);
        } else {
            stack.extend_from_slice(kids);
        }
    }
    v
}

/// Validates that `u` has one entry per terminal sequence.
pub fn check_dimension(t: &Tfsdp, u: &[f64]) -> Result<(), TfsdpError> {
    if u.len() != t.num_terminals() {
        return Err(TfsdpError::Dimension {
            got: u.len(),
            want: t.num_terminals(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::numeric::kahan_dot;
    use crate::tfsdp::TfsdpBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fig1_all_ones() {
        let t = builtins::fig1();
        let u = vec![1.0; 7];
        // Kernel picking C reaches {C5, C6, D7, D8, D9}.
        assert_eq!(norm_l1(&t, &u), 5.0);
        // No strategy reaches more than two terminals.
        assert_eq!(norm_linf(&t, &u), 2.0);
    }

    #[test]
    fn simplex_reduces_to_classical_norms() {
        let t = builtins::simplex(4).unwrap();
        let u = [0.5f64, -2.0, 1.0, -0.25];
        let l1: f64 = u.iter().map(|x: &f64| x.abs()).sum();
        assert!((norm_l1(&t, &u) - l1).abs() < 1e-15);
        assert_eq!(norm_linf(&t, &u), 2.0);
    }

    #[test]
    fn degenerate_tree() {
        let t = TfsdpBuilder::new().finish().unwrap();
        assert_eq!(norm_l1(&t, &[-3.0]), 3.0);
        assert_eq!(norm_linf(&t, &[-3.0]), 3.0);
    }

    #[test]
    fn matches_oracle_on_fig1() {
        let t = builtins::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let u: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let l1 = norm_l1(&t, &u);
            let linf = norm_linf(&t, &u);
            assert!((l1 - norm_oracle(&t, &u, NormKind::L1, 100).unwrap()).abs() < 1e-12);
            assert!((linf - norm_oracle(&t, &u, NormKind::Linf, 100).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_axioms_hold() {
        let t = builtins::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let w: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let sum: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = u.iter().map(|a| -2.5 * a).collect();
            for kind in [NormKind::L1, NormKind::Linf] {
                let f = |v: &[f64]| match kind {
                    NormKind::L1 => norm_l1(&t, v),
                    NormKind::Linf => norm_linf(&t, v),
                };
                assert!(f(&sum) <= f(&u) + f(&w) + 1e-12);
                assert!((f(&scaled) - 2.5 * f(&u)).abs() < 1e-12);
                assert!(f(&u) >= 0.0);
            }
        }
        assert_eq!(norm_l1(&t, &vec![0.0; 7]), 0.0);
        assert_eq!(norm_linf(&t, &vec![0.0; 7]), 0.0);
    }

    #[test]
    fn certificates_attain_the_dual_norm() {
        let t = builtins::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let u: Vec<f64> = (0..7).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let v = linf_certificate(&t, &u);
            assert!((norm_l1(&t, &v) - 1.0).abs() < 1e-12);
            assert!((kahan_dot(&u, &v) - norm_linf(&t, &u)).abs() < 1e-12);
            let k = l1_certificate(&t, &u);
            assert!((norm_linf(&t, &k) - 1.0).abs() < 1e-12);
            assert!((kahan_dot(&u, &k) - norm_l1(&t, &u)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_vector_certificate_is_well_formed() {
        let t = builtins::fig1();
        let u = vec![0.0; 7];
        let v = linf_certificate(&t, &u);
        assert!((norm_l1(&t, &v) - 1.0).abs() < 1e-15);
        assert_eq!(kahan_dot(&u, &v), 0.0);
    }
}
