//! Dilated-entropy regularization on the strategy space.
//!
//! The weight-one dilated entropy of a strategy `x` is
//! `φ(x) = Σ_j Σ_a x[ja] · ln(x[ja] / x[j])` — each decision point
//! contributes its local negative entropy scaled by its reach. The value
//! lies in `[-ln|V|, 0]`: zero exactly at the pure vertices, `-ln|V|`
//! exactly at the [`dgf_minimizer`], whose behavioral distributions are
//! proportional to subtree vertex counts.
//!
//! The Bregman divergence of φ is a dilated Kullback–Leibler divergence,
//! and the proximal step `argmax_q ⟨g, q⟩ − D(q ∥ pivot)` has a closed
//! form: a bottom-up log-partition recursion that tilts each behavioral
//! distribution by the exponentiated subtree values. [`prox_log`] runs
//! that recursion entirely on logarithms of behavioral probabilities, so
//! action probabilities may shrink below the smallest positive float
//! across a long chain of updates without ever rounding to zero where it
//! matters.
//!
//! A [`DgfSpec`] carries per-decision-point weights for the generic
//! weighted dilated entropy; value and divergence accept any spec, while
//! the proximal recursion is specific to weight one.

use thiserror::Error;

use crate::metrics::SubtreeMetrics;
use crate::norms::norm_l1;
use crate::numeric::{kahan_sum, Kahan};
use crate::tfsdp::{
    behavioral_to_sequence, extend, membership_deviation, Behavioral,
    Space, Strategy, Tfsdp, TfsdpError,
};

/// How small a pivot's behavioral probability may be before the pivot is
/// rejected as non-interior.
pub const INTERIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DilentError {
    #[error(transparent)]
    Tree(#[from] TfsdpError),
    #[error("pivot is not interior: probability {value:.3e} at decision point {label:?}")]
    PivotNotInterior { label: String, value: f64 },
    #[error("gradient entry {index} is {value}, which is not finite")]
    NonFiniteGradient { index: usize, value: f64 },
    #[error("weight {value} for decision point {index} is not positive and finite")]
    BadWeight { index: usize, value: f64 },
}

/// Per-decision-point weights of a dilated entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct DgfSpec {
    weights: Vec<f64>,
}

impl DgfSpec {
    /// The weight-one spec (plain dilated entropy).
    pub fn dilent(t: &Tfsdp) -> Self {
        Self {
            weights: vec![1.0; t.num_decisions()],
        }
    }

    /// A generic weighted spec; weights follow `t.decisions()` order.
    pub fn weighted(t: &Tfsdp, weights: Vec<f64>) -> Result<Self, DilentError> {
        if weights.len() != t.num_decisions() {
            return Err(TfsdpError::Dimension {
                got: weights.len(),
                want: t.num_decisions(),
            }
            .into());
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|&(_, &w)| !(w.is_finite() && w > 0.0))
        {
            return Err(DilentError::BadWeight { index, value });
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_unit(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }
}

fn require_strategy(t: &Tfsdp, x: &[f64]) -> Result<(), DilentError> {
    let dev = membership_deviation(t, x, Space::Strategy).ok_or(TfsdpError::Dimension {
        got: x.len(),
        want: t.num_terminals(),
    })?;
    if dev > 1e-9 {
        return Err(TfsdpError::Membership {
            space: Space::Strategy,
            deviation: dev,
        }
        .into());
    }
    Ok(())
}

/// Ensures every behavioral probability of the pivot clears
/// [`INTERIOR_FLOOR`] and returns those probabilities.
fn interior_behavioral(t: &Tfsdp, pivot: &[f64]) -> Result<Behavioral, DilentError> {
    require_strategy(t, pivot)?;
    let ext = extend(t, pivot, Space::Strategy)?;
    let mut rows = Vec::with_capacity(t.num_decisions());
    for &j in t.decisions() {
        let denom = ext.values[j];
        let mut row = Vec::with_capacity(t.children(j).len());
        for &child in t.children(j) {
            let p = if denom > 0.0 { ext.values[child] / denom } else { 0.0 };
            if p < INTERIOR_FLOOR {
                return Err(DilentError::PivotNotInterior {
                    label: t.label(j).to_string(),
                    value: p,
                });
            }
            row.push(p);
        }
        rows.push(row);
    }
    Ok(Behavioral { rows })
}

/// Evaluates the weighted dilated entropy of a strategy.
pub fn dilent_value(t: &Tfsdp, x: &[f64], spec: &DgfSpec) -> Result<f64, DilentError> {
    require_strategy(t, x)?;
    debug_assert_eq!(spec.weights.len(), t.num_decisions());
    let ext = extend(t, x, Space::Strategy)?;
    let mut total = Kahan::default();
    for (&j, &alpha) in t.decisions().iter().zip(&spec.weights) {
        let xj = ext.values[j];
        if xj <= 0.0 {
            continue;
        }
        for &child in t.children(j) {
            let xa = ext.values[child];
            if xa > 0.0 {
                total.add(alpha * xa * (xa / xj).ln());
            }
        }
    }
    Ok(total.value())
}

/// Log-behavioral form of the weight-one minimizer:
/// `ln b_j[a] = ln|V_ja| − ln|V_j|`.
pub(crate) fn minimizer_log_rows(t: &Tfsdp) -> LogBehavioral {
    let metrics = SubtreeMetrics::compute(t);
    LogBehavioral {
        rows: t
            .decisions()
            .iter()
            .map(|&j| {
                let ln_vj = metrics.ln_vertex_count[j];
                t.children(j)
                    .iter()
                    .map(|&child| metrics.ln_vertex_count[child] - ln_vj)
                    .collect()
            })
            .collect(),
    }
}

/// The strategy minimizing the weight-one dilated entropy: behavioral
/// probabilities proportional to subtree vertex counts.
pub fn dgf_minimizer(t: &Tfsdp) -> Strategy {
    behavioral_to_sequence(t, &minimizer_log_rows(t).to_behavioral())
        .expect("vertex-count ratios form distributions")
}

/// Bregman divergence of the weighted dilated entropy in dilated-KL form:
/// `D(x̂ ∥ x) = Σ_j α_j · x̂[j] · KL(b̂_j ∥ b_j)`.
pub fn bregman(t: &Tfsdp, x_new: &[f64], pivot: &[f64], spec: &DgfSpec) -> Result<f64, DilentError> {
    let pivot_rows = interior_behavioral(t, pivot)?;
    require_strategy(t, x_new)?;
    debug_assert_eq!(spec.weights.len(), t.num_decisions());
    let ext = extend(t, x_new, Space::Strategy)?;
    let mut total = Kahan::default();
    for ((idx, &j), &alpha) in t.decisions().iter().enumerate().zip(&spec.weights) {
        let xj = ext.values[j];
        if xj <= 0.0 {
            continue;
        }
        for (a, &child) in t.children(j).iter().enumerate() {
            let xa = ext.values[child];
            if xa > 0.0 {
                // x̂[j] · b̂_a · ln(b̂_a / b_a) with b̂_a = x̂[ja]/x̂[j].
                total.add(alpha * xa * (xa / (xj * pivot_rows.rows[idx][a])).ln());
            }
        }
    }
    // Each decision point contributes a nonnegative KL term; clamp the
    // rounding residue so exact zero comes out exactly.
    Ok(total.value().max(0.0))
}

/// Result of a proximal step.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub strategy: Strategy,
    pub behavioral: Behavioral,
    /// Log-partition value of the recursion at the root: the optimal
    /// objective `⟨g, q⟩ − D(q ∥ pivot)` itself.
    pub root_value: f64,
}

/// Log-space behavioral state: `rows[d][a] = ln b_d[a]` in
/// `decisions()` order.
#[derive(Debug, Clone)]
pub(crate) struct LogBehavioral {
    pub rows: Vec<Vec<f64>>,
}

impl LogBehavioral {
    pub fn from_behavioral(b: &Behavioral) -> Self {
        Self {
            rows: b
                .rows
                .iter()
                .map(|row| row.iter().map(|&p| p.ln()).collect())
                .collect(),
        }
    }

    pub fn to_behavioral(&self) -> Behavioral {
        Behavioral {
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|&l| l.exp()).collect())
                .collect(),
        }
    }
}

/// Core proximal recursion on logarithms of behavioral probabilities.
///
/// Bottom-up: terminal values are the gradient, observation points sum
/// their children, and each decision point replaces its row by the
/// tilted posterior `ln b̂_a = ln b_a + V_a − V_j`, where
/// `V_j = ln Σ_a exp(ln b_a + V_a)` is evaluated with max-subtraction.
/// Returns the new rows and the root value.
pub(crate) fn prox_log(t: &Tfsdp, g: &[f64], pivot: &LogBehavioral) -> (LogBehavioral, f64) {
    debug_assert_eq!(g.len(), t.num_terminals());
    debug_assert_eq!(pivot.rows.len(), t.num_decisions());
    let mut value = vec![0.0; t.num_points()];
    let mut rows = vec![Vec::new(); t.num_decisions()];
    for &p in t.pre_order().iter().rev() {
        if t.is_terminal(p) {
            value[p] = g[t.terminal_index(p).unwrap()];
        } else if t.is_decision(p) {
            let d = t.decision_index(p).unwrap();
            let scores: Vec<f64> = t
                .children(p)
                .iter()
                .enumerate()
                .map(|(a, &child)| pivot.rows[d][a] + value[child])
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let vj = m + kahan_sum(scores.iter().map(|&s| (s - m).exp())).ln();
            rows[d] = scores.iter().map(|&s| s - vj).collect();
            value[p] = vj;
        } else {
            value[p] = kahan_sum(t.children(p).iter().map(|&c| value[c]));
        }
    }
    (LogBehavioral { rows }, value[Tfsdp::root()])
}

/// Proximal step of the weight-one dilated entropy:
/// `argmax_q ⟨g, q⟩ − D(q ∥ pivot)`. Any learning rate is folded into `g`
/// by the caller.
pub fn prox(t: &Tfsdp, g: &[f64], pivot: &[f64]) -> Result<ProxResult, DilentError> {
    if g.len() != t.num_terminals() {
        return Err(TfsdpError::Dimension {
            got: g.len(),
            want: t.num_terminals(),
        }
        .into());
    }
    if let Some((index, &value)) = g.iter().enumerate().find(|&(_, v)| !v.is_finite()) {
        return Err(DilentError::NonFiniteGradient { index, value });
    }
    let pivot_rows = interior_behavioral(t, pivot)?;
    let (log_rows, root_value) = prox_log(t, g, &LogBehavioral::from_behavioral(&pivot_rows));
    let behavioral = log_rows.to_behavioral();
    let strategy = behavioral_to_sequence(t, &behavioral)?;
    Ok(ProxResult {
        strategy,
        behavioral,
        root_value,
    })
}

/// Integrated strong-convexity margin of the weight-one dilated entropy:
/// `D(x′ ∥ x) − ½ ∥x′ − x∥₁²` under the treeplex ℓ1 norm, which is
/// nonnegative for every valid pair.
pub fn strong_convexity_margin(t: &Tfsdp, x: &[f64], x_new: &[f64]) -> Result<f64, DilentError> {
    let spec = DgfSpec::dilent(t);
    let d = bregman(t, x_new, x, &spec)?;
    let diff: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
    let n = norm_l1(t, &diff);
    Ok(d - 0.5 * n * n)
}
