//! Brute-force reference implementations that cross-check the closed-form
//! routines: a finite-difference Bregman divergence, a zooming grid search
//! for the proximal step, and certificate helpers for prox optimality and
//! non-expansiveness.
//!
//! Everything here trades speed for independence — none of it shares code
//! paths with the recursions under test — so it only runs at desk scale.

use rand::Rng;
use thiserror::Error;

use crate::dilent::{bregman, dilent_value, prox, DgfSpec, DilentError};
use crate::metrics::{enumerate_vertices, EnumerationError};
use crate::norms::{norm_l1, norm_linf};
use crate::numeric::{kahan_dot, kahan_sum, Kahan};
use crate::tfsdp::{
    behavioral_to_sequence, random_behavioral, sequence_to_behavioral, Strategy, Tfsdp,
    TfsdpError,
};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("finite-difference step must be in (0, 1e-3], got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Tree(#[from] TfsdpError),
    #[error(transparent)]
    Dilent(#[from] DilentError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

/// Bregman divergence straight from the definition,
/// `φ(x̂) − φ(x) − ⟨∇φ(x), x̂−x⟩`, with the inner product estimated as a
/// central finite difference of `φ` along `x̂ − x`.
///
/// Both points must be interior, and accuracy degrades cubically as they
/// approach the boundary: with coordinates bounded away from zero by `f`,
/// the truncation error is about `step²/f²`.
pub fn bregman_definitional(
    t: &Tfsdp,
    x_new: &[f64],
    x: &[f64],
    spec: &DgfSpec,
    step: f64,
) -> Result<f64, OracleError> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(OracleError::BadStep(step));
    }
    let forward: Vec<f64> = x
        .iter()
        .zip(x_new)
        .map(|(&a, &b)| a + step * (b - a))
        .collect();
    let backward: Vec<f64> = x
        .iter()
        .zip(x_new)
        .map(|(&a, &b)| a - step * (b - a))
        .collect();
    let phi_new = dilent_value(t, x_new, spec)?;
    let phi_x = dilent_value(t, x, spec)?;
    let derivative = (dilent_value(t, &forward, spec)? - dilent_value(t, &backward, spec)?)
        / (2.0 * step);
    Ok(phi_new - phi_x - derivative)
}

/// Proximal step by exhaustive search: every decision point's local
/// distribution is grid-searched bottom-up, then the grid zooms around the
/// best cell until its spacing drops below `target_spacing`.
///
/// The local objective at a decision point is
/// `Σ_a b[a]·(U_a + ln p[a] − ln b[a])`, where `U_a` is the already
/// maximized value below action `a` and `p` is the pivot's local
/// distribution; observation points sum their children. This evaluates the
/// same dynamic program as the closed-form step but maximizes each row by
/// brute force, so agreement validates the closed form.
pub fn grid_prox(
    t: &Tfsdp,
    g: &[f64],
    pivot: &[f64],
    target_spacing: f64,
) -> Result<Strategy, OracleError> {
    let pivot_rows = sequence_to_behavioral(t, &Strategy { values: pivot.to_vec() })?;
    let mut value = vec![0.0; t.num_points()];
    let mut rows: Vec<Vec<f64>> = pivot_rows.rows.iter().map(|r| vec![0.0; r.len()]).collect();

    for &p in t.pre_order().iter().rev() {
        if t.is_terminal(p) {
            value[p] = g[t.terminal_index(p).expect("terminal point")];
        } else if t.is_decision(p) {
            let d = t.decision_index(p).expect("decision point");
            let scores: Vec<f64> = (0..t.actions(p).len())
                .map(|a| value[t.action_child(p, a)] + pivot_rows.rows[d][a].ln())
                .collect();
            let (best_row, best_value) = zoom_simplex_max(&scores, target_spacing);
            rows[d] = best_row;
            value[p] = best_value;
        } else {
            value[p] = kahan_sum(t.children(p).iter().map(|&c| value[c]));
        }
    }

    let behavioral = crate::tfsdp::Behavioral { rows };
    Ok(behavioral_to_sequence(t, &behavioral)?)
}

/// Maximizes `f(b) = Σ_a b[a]·(scores[a] − ln b[a])` over the probability
/// simplex by repeated grid refinement around the incumbent.
fn zoom_simplex_max(scores: &[f64], target_spacing: f64) -> (Vec<f64>, f64) {
    let d = scores.len();
    if d == 1 {
        return (vec![1.0], scores[0]);
    }
    let objective = |b: &[f64]| -> f64 {
        let mut total = Kahan::new();
        for (&w, &s) in b.iter().zip(scores) {
            if w > 0.0 {
                total.add(w * (s - w.ln()));
            }
        }
        total.value()
    };

    // Coarse pass over the whole simplex.
    let divisions = match d {
        2 => 400,
        3 => 60,
        4 => 24,
        _ => 12,
    };
    let mut best_row = vec![1.0 / d as f64; d];
    let mut best_value = objective(&best_row);
    enumerate_compositions(divisions, d, &mut |parts| {
        let b: Vec<f64> = parts.iter().map(|&k| k as f64 / divisions as f64).collect();
        let v = objective(&b);
        if v > best_value {
            best_value = v;
            best_row = b;
        }
    });

    // Zoom: search a shrinking box around the incumbent until the grid
    // spacing reaches the target.
    let mut spacing = 1.0 / divisions as f64;
    while spacing > target_spacing {
        let window = 2.0 * spacing;
        let steps = 10usize;
        spacing = 2.0 * window / steps as f64;
        let incumbent = best_row.clone();
        search_box(&incumbent, window, steps, d, &mut |b| {
            let v = objective(b);
            if v > best_value {
                best_value = v;
                best_row = b.to_vec();
            }
        });
    }
    (best_row, best_value)
}

/// Calls `visit` with every composition of `total` into `parts` ordered
/// nonnegative integers.
fn enumerate_compositions(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    let mut current = vec![0usize; parts];
    fn recurse(
        remaining: usize,
        index: usize,
        current: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if index == current.len() - 1 {
            current[index] = remaining;
            visit(current);
            return;
        }
        for k in 0..=remaining {
            current[index] = k;
            recurse(remaining - k, index + 1, current, visit);
        }
    }
    recurse(total, 0, &mut current, visit);
}

/// Visits grid points of the simplex inside a box of half-width `window`
/// around `center`: the first `d−1` coordinates sweep their boxes and the
/// last takes the remainder, kept only if it lands in its own box.
fn search_box(
    center: &[f64],
    window: f64,
    steps: usize,
    d: usize,
    visit: &mut impl FnMut(&[f64]),
) {
    let mut b = vec![0.0; d];
    fn sweep(
        center: &[f64],
        window: f64,
        steps: usize,
        index: usize,
        partial: f64,
        b: &mut Vec<f64>,
        visit: &mut impl FnMut(&[f64]),
    ) {
        let d = center.len();
        if index == d - 1 {
            let rest = 1.0 - partial;
            if rest >= 0.0 && (rest - center[d - 1]).abs() <= window + 1e-12 {
                b[d - 1] = rest;
                visit(b);
            }
            return;
        }
        let lo = (center[index] - window).max(0.0);
        let hi = (center[index] + window).min(1.0);
        for k in 0..=steps {
            let v = lo + (hi - lo) * k as f64 / steps as f64;
            if partial + v > 1.0 + 1e-12 {
                break;
            }
            b[index] = v;
            sweep(center, window, steps, index + 1, partial + v, b, visit);
        }
    }
    sweep(center, window, steps, 0, 0.0, &mut b, visit);
}

/// Worst certificate gap `F(q) − F(result)` for the prox objective
/// `F(q) = ⟨g, q⟩ − D(q ∥ pivot)`, with `q` ranging over all vertices, all
/// vertex–result midpoints, and `random_trials` random strategies. `F` is
/// concave, so small gaps at these probes pin the result tightly.
pub fn prox_certificate_gap<R: Rng + ?Sized>(
    t: &Tfsdp,
    g: &[f64],
    pivot: &[f64],
    random_trials: usize,
    vertex_cap: usize,
    rng: &mut R,
) -> Result<f64, OracleError> {
    let spec = DgfSpec::dilent(t);
    let result = prox(t, g, pivot)?;
    let objective = |q: &[f64]| -> Result<f64, OracleError> {
        Ok(kahan_dot(g, q) - bregman(t, q, pivot, &spec)?)
    };
    let at_result = objective(&result.strategy.values)?;

    let mut worst = f64::NEG_INFINITY;
    for vertex in enumerate_vertices(t, vertex_cap)? {
        worst = worst.max(objective(&vertex.values)?);
        let midpoint: Vec<f64> = vertex
            .values
            .iter()
            .zip(&result.strategy.values)
            .map(|(&v, &r)| 0.5 * (v + r))
            .collect();
        worst = worst.max(objective(&midpoint)?);
    }
    for _ in 0..random_trials {
        let q = behavioral_to_sequence(t, &random_behavioral(t, rng))?;
        worst = worst.max(objective(&q.values)?);
    }
    Ok(worst - at_result)
}

/// Non-expansiveness excess `∥prox(g₁) − prox(g₂)∥₁ − ∥g₁ − g₂∥∞` for a
/// shared pivot; at most rounding noise above zero when the divergence is
/// 1-strongly convex.
pub fn prox_nonexpansive_gap(
    t: &Tfsdp,
    g1: &[f64],
    g2: &[f64],
    pivot: &[f64],
) -> Result<f64, OracleError> {
    let x1 = prox(t, g1, pivot)?;
    let x2 = prox(t, g2, pivot)?;
    let diff: Vec<f64> = x1
        .strategy
        .values
        .iter()
        .zip(&x2.strategy.values)
        .map(|(&a, &b)| a - b)
        .collect();
    let grad_diff: Vec<f64> = g1.iter().zip(g2).map(|(&a, &b)| a - b).collect();
    Ok(norm_l1(t, &diff) - norm_linf(t, &grad_diff))
}
