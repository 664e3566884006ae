//! Tree-form sequential decision processes and sequence-form vectors.
//!
//! A TFSDP is one player's decision tree. *Decision points* carry the
//! player's actions; playing action `a` at decision point `j` reaches the
//! *sequence* `ja`, represented here as an observation point. An
//! observation point branches into the decision points that may follow it
//! (for example after different opponent or chance moves); one with no
//! children is *terminal*. The root is the empty sequence, itself an
//! observation point.
//!
//! Two vector families live on the terminal sequences `E`:
//!
//! - **Strategies** (`Q`-space): reach probabilities of the player's own
//!   play. Extended over the whole tree they satisfy `x[root] = 1`,
//!   `x[j] = x[σ]` for every child decision point `j` of `σ`, and
//!   `x[j] = Σ_a x[ja]`.
//! - **Kernels** (`Y`-space): reach probabilities of everything that is
//!   not the player — chance plus opponents. Extended they satisfy
//!   `y[root] = 1`, `y[ja] = y[j]` for every action, and
//!   `y[σ] = Σ_j y[j]` over `σ`'s child decision points.
//!
//! Every strategy/kernel pair satisfies `⟨x, y⟩ = 1`: exactly one terminal
//! sequence is realized when both sides commit.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

/// Index of a point in a [`Tfsdp`]; the root observation point is always `0`.
pub type PointId = usize;

/// Which sequence-form polytope a terminal vector is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// The player's strategy polytope `Q`.
    Strategy,
    /// The environment's kernel polytope `Y`.
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PointKind {
    Decision,
    Observation,
}

#[derive(Debug, Clone)]
struct Point {
    kind: PointKind,
    label: String,
    parent: Option<PointId>,
    /// Action labels, parallel to `children`; empty for observation points.
    actions: Vec<String>,
    /// Decision point: the observation point reached by each action.
    /// Observation point: the child decision points.
    children: Vec<PointId>,
}

/// Errors raised by tree construction and by vector-level operations.
#[derive(Debug, Error)]
pub enum TfsdpError {
    #[error("decision point {label:?} has no actions")]
    EmptyDecision { label: String },
    #[error("point {0} is not an observation point")]
    NotObservation(PointId),
    #[error("point {0} is not a decision point")]
    NotDecision(PointId),
    #[error("vector has {got} entries but the tree has {want} terminal sequences")]
    Dimension { got: usize, want: usize },
    #[error("behavioral row for decision point {label:?} is malformed: {reason}")]
    MalformedDistribution { label: String, reason: String },
    #[error("vector is not a valid {space:?}-space member (worst deviation {deviation:.3e})")]
    Membership { space: Space, deviation: f64 },
}

/// Immutable tree shared by every module; build one with [`TfsdpBuilder`].
#[derive(Debug, Clone)]
pub struct Tfsdp {
    points: Vec<Point>,
    /// Depth-first pre-order over all points (parents before children,
    /// children in action/creation order). Fixes every canonical ordering.
    pre_order: Vec<PointId>,
    /// Terminal observation points in pre-order; position = coordinate.
    terminals: Vec<PointId>,
    terminal_of: Vec<Option<usize>>,
    /// Decision points in pre-order; position = behavioral row index.
    decisions: Vec<PointId>,
    decision_of: Vec<Option<usize>>,
}

impl Tfsdp {
    pub fn root() -> PointId {
        0
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn num_decisions(&self) -> usize {
        self.decisions.len()
    }

    /// Total number of actions over all decision points.
    pub fn num_actions(&self) -> usize {
        self.decisions.iter().map(|&j| self.points[j].children.len()).sum()
    }

    pub fn is_decision(&self, p: PointId) -> bool {
        self.points[p].kind == PointKind::Decision
    }

    pub fn is_observation(&self, p: PointId) -> bool {
        self.points[p].kind == PointKind::Observation
    }

    pub fn is_terminal(&self, p: PointId) -> bool {
        self.is_observation(p) && self.points[p].children.is_empty()
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.points[p].label
    }

    pub fn parent(&self, p: PointId) -> Option<PointId> {
        self.points[p].parent
    }

    /// For a decision point: the observation point of each action, in
    /// action order. For an observation point: its child decision points.
    pub fn children(&self, p: PointId) -> &[PointId] {
        &self.points[p].children
    }

    /// Action labels of a decision point (empty slice for observations).
    pub fn actions(&self, p: PointId) -> &[String] {
        &self.points[p].actions
    }

    pub fn action_child(&self, decision: PointId, action: usize) -> PointId {
        self.points[decision].children[action]
    }

    pub fn pre_order(&self) -> &[PointId] {
        &self.pre_order
    }

    pub fn terminals(&self) -> &[PointId] {
        &self.terminals
    }

    pub fn terminal_index(&self, p: PointId) -> Option<usize> {
        self.terminal_of[p]
    }

    pub fn decisions(&self) -> &[PointId] {
        &self.decisions
    }

    pub fn decision_index(&self, p: PointId) -> Option<usize> {
        self.decision_of[p]
    }

    /// Structural equality: same shape, kinds, and action labels under the
    /// canonical pre-order. Point labels are diagnostic only and ignored.
    pub fn structurally_eq(&self, other: &Tfsdp) -> bool {
        if self.points.len() != other.points.len() {
            return false;
        }
        self.pre_order.iter().zip(&other.pre_order).all(|(&a, &b)| {
            let pa = &self.points[a];
            let pb = &other.points[b];
            pa.kind == pb.kind
                && pa.actions == pb.actions
                && pa.children.len() == pb.children.len()
        })
    }
}

/// Incremental constructor; the root observation point exists from the start.
#[derive(Debug)]
pub struct TfsdpBuilder {
    points: Vec<Point>,
}

impl TfsdpBuilder {
    pub fn new() -> Self {
        Self {
            points: vec![Point {
                kind: PointKind::Observation,
                label: "root".to_string(),
                parent: None,
                actions: Vec::new(),
                children: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> PointId {
        0
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.points[p].label
    }

    /// Adds a decision point below an observation point.
    pub fn add_decision(
        &mut self,
        parent: PointId,
        label: impl Into<String>,
    ) -> Result<PointId, TfsdpError> {
        if self.points[parent].kind != PointKind::Observation {
            return Err(TfsdpError::NotObservation(parent));
        }
        let id = self.points.len();
        self.points.push(Point {
            kind: PointKind::Decision,
            label: label.into(),
            parent: Some(parent),
            actions: Vec::new(),
            children: Vec::new(),
        });
        self.points[parent].children.push(id);
        Ok(id)
    }

    /// Adds an action to a decision point and returns the observation point
    /// for the sequence it reaches (terminal until it is given children).
    pub fn add_action(
        &mut self,
        decision: PointId,
        action: impl Into<String>,
    ) -> Result<PointId, TfsdpError> {
        let action = action.into();
        let label = format!("{}{}", self.points[decision].label, action);
        self.add_action_labeled(decision, action, label)
    }

    /// Same as [`add_action`](Self::add_action) with an explicit label for
    /// the reached observation point.
    pub fn add_action_labeled(
        &mut self,
        decision: PointId,
        action: impl Into<String>,
        sequence_label: impl Into<String>,
    ) -> Result<PointId, TfsdpError> {
        if self.points[decision].kind != PointKind::Decision {
            return Err(TfsdpError::NotDecision(decision));
        }
        let id = self.points.len();
        self.points.push(Point {
            kind: PointKind::Observation,
            label: sequence_label.into(),
            parent: Some(decision),
            actions: Vec::new(),
            children: Vec::new(),
        });
        self.points[decision].actions.push(action.into());
        self.points[decision].children.push(id);
        Ok(id)
    }

    /// Validates and freezes the tree, computing the canonical orderings.
    pub fn finish(self) -> Result<Tfsdp, TfsdpError> {
        for point in &self.points {
            if point.kind == PointKind::Decision && point.children.is_empty() {
                return Err(TfsdpError::EmptyDecision {
                    label: point.label.clone(),
                });
            }
        }
        let n = self.points.len();
        let mut pre_order = Vec::with_capacity(n);
        let mut stack = vec![0];
        while let Some(p) = stack.pop() {
            pre_order.push(p);
            stack.extend(self.points[p].children.iter().rev());
        }
        debug_assert_eq!(pre_order.len(), n);

        let mut terminals = Vec::new();
        let mut decisions = Vec::new();
        let mut terminal_of = vec![None; n];
        let mut decision_of = vec![None; n];
        for &p in &pre_order {
            match self.points[p].kind {
                PointKind::Observation if self.points[p].children.is_empty() => {
                    terminal_of[p] = Some(terminals.len());
                    terminals.push(p);
                }
                PointKind::Decision => {
                    decision_of[p] = Some(decisions.len());
                    decisions.push(p);
                }
                PointKind::Observation => {}
            }
        }
        Ok(Tfsdp {
            points: self.points,
            pre_order,
            terminals,
            terminal_of,
            decisions,
            decision_of,
        })
    }
}

impl Default for TfsdpBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Sequence-form strategy: reach probability of each terminal sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub values: Vec<f64>,
}

/// Sequence-form transition kernel: the environment's reach probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub values: Vec<f64>,
}

/// Expected payoff conditioned on the player reaching each terminal
/// sequence, weighted by the environment's reach (chance times opponents).
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    pub values: Vec<f64>,
}

/// One probability distribution over actions per decision point, in
/// [`Tfsdp::decisions`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavioral {
    pub rows: Vec<Vec<f64>>,
}

/// A terminal vector propagated to every point of the tree.
#[derive(Debug, Clone)]
pub struct Extension {
    /// Value per point, indexed by [`PointId`].
    pub values: Vec<f64>,
    /// Worst absolute disagreement among entries the space's constraints
    /// force to be equal (children of an observation point for `Q`,
    /// actions of a decision point for `Y`). Zero for exact members.
    pub violation: f64,
}

/// Propagates `v` from the terminal sequences to every point using the
/// defining recurrences of the requested space, recording how badly the
/// equality constraints are violated along the way.
pub fn extend(t: &Tfsdp, v: &[f64], space: Space) -> Result<Extension, TfsdpError> {
    if v.len() != t.num_terminals() {
        return Err(TfsdpError::Dimension {
            got: v.len(),
            want: t.num_terminals(),
        });
    }
    let mut values = vec![0.0; t.num_points()];
    let mut violation: f64 = 0.0;
    for &p in t.pre_order().iter().rev() {
        if let Some(coord) = t.terminal_index(p) {
            values[p] = v[coord];
        } else if t.is_decision(p) {
            let kids = t.children(p);
            match space {
                Space::Strategy => values[p] = kids.iter().map(|&c| values[c]).sum(),
                Space::Kernel => {
                    let (lo, hi) = spread(kids.iter().map(|&c| values[c]));
                    violation = violation.max(hi - lo);
                    values[p] = values[kids[0]];
                }
            }
        } else {
            let kids = t.children(p);
            match space {
                Space::Strategy => {
                    let (lo, hi) = spread(kids.iter().map(|&c| values[c]));
                    violation = violation.max(hi - lo);
                    values[p] = values[kids[0]];
                }
                Space::Kernel => values[p] = kids.iter().map(|&c| values[c]).sum(),
            }
        }
    }
    Ok(Extension { values, violation })
}

fn spread(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Checks membership of `v` in the requested polytope within `tol`: all
/// propagated entries in `[-tol, 1 + tol]`, equality constraints within
/// `tol`, and unit mass at the root.
pub fn validate_membership(t: &Tfsdp, v: &[f64], space: Space, tol: f64) -> bool {
    membership_deviation(t, v, space).is_some_and(|d| d <= tol)
}

/// Worst constraint deviation of `v` as a member of the requested space,
/// or `None` on dimension mismatch.
pub fn membership_deviation(t: &Tfsdp, v: &[f64], space: Space) -> Option<f64> {
    let ext = extend(t, v, space).ok()?;
    let mut dev = ext.violation;
    for &x in &ext.values {
        dev = dev.max(-x).max(x - 1.0);
    }
    dev = dev.max((ext.values[Tfsdp::root()] - 1.0).abs());
    Some(dev)
}

/// Converts behavioral action distributions into the sequence form by
/// multiplying reach probabilities from the root down.
pub fn behavioral_to_sequence(t: &Tfsdp, b: &Behavioral) -> Result<Strategy, TfsdpError> {
    if b.rows.len() != t.num_decisions() {
        return Err(TfsdpError::Dimension {
            got: b.rows.len(),
            want: t.num_decisions(),
        });
    }
    for (row, &j) in b.rows.iter().zip(t.decisions()) {
        let label = t.label(j).to_string();
        if row.len() != t.children(j).len() {
            return Err(TfsdpError::MalformedDistribution {
                label,
                reason: format!(
                    "{} entries for {} actions",
                    row.len(),
                    t.children(j).len()
                ),
            });
        }
        if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(TfsdpError::MalformedDistribution {
                label,
                reason: "negative or non-finite entry".to_string(),
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TfsdpError::MalformedDistribution {
                label,
                reason: format!("entries sum to {sum}"),
            });
        }
    }
    let mut reach = vec![0.0; t.num_points()];
    reach[Tfsdp::root()] = 1.0;
    for &p in t.pre_order() {
        if t.is_decision(p) {
            let row = &b.rows[t.decision_index(p).unwrap()];
            for (a, &child) in t.children(p).iter().enumerate() {
                reach[child] = reach[p] * row[a];
            }
        } else {
            for &child in t.children(p) {
                reach[child] = reach[p];
            }
        }
    }
    Ok(Strategy {
        values: t.terminals().iter().map(|&s| reach[s]).collect(),
    })
}

/// Recovers behavioral distributions from a sequence-form strategy.
/// Decision points with reach below `1e-12` get the uniform distribution.
pub fn sequence_to_behavioral(t: &Tfsdp, x: &Strategy) -> Result<Behavioral, TfsdpError> {
    let dev = membership_deviation(t, &x.values, Space::Strategy).ok_or(TfsdpError::Dimension {
        got: x.values.len(),
        want: t.num_terminals(),
    })?;
    if dev > 1e-9 {
        return Err(TfsdpError::Membership {
            space: Space::Strategy,
            deviation: dev,
        });
    }
    let ext = extend(t, &x.values, Space::Strategy)?;
    let rows = t
        .decisions()
        .iter()
        .map(|&j| {
            let kids = t.children(j);
            let mass = ext.values[j];
            if mass > 1e-12 {
                kids.iter().map(|&c| ext.values[c] / mass).collect()
            } else {
                vec![1.0 / kids.len() as f64; kids.len()]
            }
        })
        .collect();
    Ok(Behavioral { rows })
}

/// The uniform behavioral profile.
pub fn uniform_behavioral(t: &Tfsdp) -> Behavioral {
    Behavioral {
        rows: t
            .decisions()
            .iter()
            .map(|&j| {
                let k = t.children(j).len();
                vec![1.0 / k as f64; k]
            })
            .collect(),
    }
}

/// Samples each row uniformly from the probability simplex.
pub fn random_behavioral<R: Rng + ?Sized>(t: &Tfsdp, rng: &mut R) -> Behavioral {
    Behavioral {
        rows: t
            .decisions()
            .iter()
            .map(|&j| random_simplex(t.children(j).len(), rng))
            .collect(),
    }
}

/// Samples behavioral rows bounded away from the simplex boundary: every
/// entry is at least roughly `floor` (exactly `floor / (1 + k*floor)`).
pub fn random_interior_behavioral<R: Rng + ?Sized>(
    t: &Tfsdp,
    rng: &mut R,
    floor: f64,
) -> Behavioral {
    Behavioral {
        rows: t
            .decisions()
            .iter()
            .map(|&j| {
                let k = t.children(j).len();
                let mut row = random_simplex(k, rng);
                let z = 1.0 + k as f64 * floor;
                for p in &mut row {
                    *p = (*p + floor) / z;
                }
                row
            })
            .collect(),
    }
}

fn random_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    // Normalized exponentials are uniform on the simplex.
    let mut row: Vec<f64> = (0..k)
        .map(|_| -f64::ln(1.0 - rng.random::<f64>()))
        .collect();
    let sum: f64 = row.iter().sum();
    if sum <= 0.0 {
        return vec![1.0 / k as f64; k];
    }
    for p in &mut row {
        *p /= sum;
    }
    row
}

/// Convenience handle used by learners and harnesses that share a tree.
pub type SharedTfsdp = Arc<Tfsdp>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builder_rejects_empty_decision() {
        let mut b = TfsdpBuilder::new();
        b.add_decision(b.root(), "A").unwrap();
        assert!(matches!(
            b.finish(),
            Err(TfsdpError::EmptyDecision { .. })
        ));
    }

    #[test]
    fn builder_rejects_bad_parents() {
        let mut b = TfsdpBuilder::new();
        let a = b.add_decision(b.root(), "A").unwrap();
        assert!(b.add_decision(a, "B").is_err());
        assert!(b.add_action(b.root(), "x").is_err());
    }

    #[test]
    fn fig1_shape() {
        let t = builtins::fig1();
        // root, A, A1, A2, B, C, D, and 7 terminal sequences.
        assert_eq!(t.num_points(), 14);
        assert_eq!(t.num_decisions(), 4);
        assert_eq!(t.num_terminals(), 7);
        assert_eq!(t.num_actions(), 9);
        let labels: Vec<&str> = t.terminals().iter().map(|&s| t.label(s)).collect();
        assert_eq!(labels, ["B3", "B4", "C5", "C6", "D7", "D8", "D9"]);
    }

    #[test]
    fn uniform_fig1_reaches() {
        let t = builtins::fig1();
        let x = behavioral_to_sequence(&t, &uniform_behavioral(&t)).unwrap();
        let expect = [0.25, 0.25, 0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (got, want) in x.values.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
        assert!(validate_membership(&t, &x.values, Space::Strategy, 1e-12));
    }

    #[test]
    fn extension_detects_strategy_violation() {
        let t = builtins::fig1();
        // x[B3]+x[B4] = 0.6 but x[C5]+x[C6] = 0.5: children of the first
        // observation point disagree by 0.1.
        let v = [0.3, 0.3, 0.25, 0.25, 0.5 / 3.0, 0.5 / 3.0, 0.5 / 3.0];
        let ext = extend(&t, &v, Space::Strategy).unwrap();
        assert!((ext.violation - 0.1).abs() < 1e-12);
        assert!(!validate_membership(&t, &v, Space::Strategy, 1e-9));
        assert!(validate_membership(&t, &v, Space::Strategy, 0.2));
    }

    #[test]
    fn kernel_membership() {
        let t = builtins::fig1();
        // Environment splits evenly between B and C; D is reached surely.
        let y = [0.5, 0.5, 0.5, 0.5, 1.0, 1.0, 1.0];
        assert!(validate_membership(&t, &y, Space::Kernel, 1e-12));
        // A strategy is generally not a kernel.
        let x = [0.25, 0.25, 0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        assert!(!validate_membership(&t, &x, Space::Kernel, 1e-6));
    }

    #[test]
    fn behavioral_round_trip() {
        let t = builtins::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let b = random_behavioral(&t, &mut rng);
            let x = behavioral_to_sequence(&t, &b).unwrap();
            let b2 = sequence_to_behavioral(&t, &x).unwrap();
            for (r1, r2) in b.rows.iter().zip(&b2.rows) {
                for (p1, p2) in r1.iter().zip(r2) {
                    assert!((p1 - p2).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn unreached_rows_become_uniform() {
        let t = builtins::fig1();
        // Pure strategy: action 2 at A, then action 7 at D. B and C are
        // unreached, so their recovered rows are uniform.
        let b = Behavioral {
            rows: vec![
                vec![0.0, 1.0],
                vec![0.5, 0.5],
                vec![0.25, 0.75],
                vec![1.0, 0.0, 0.0],
            ],
        };
        let x = behavioral_to_sequence(&t, &b).unwrap();
        assert_eq!(x.values, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b2 = sequence_to_behavioral(&t, &x).unwrap();
        assert_eq!(b2.rows[1], vec![0.5, 0.5]);
        assert_eq!(b2.rows[2], vec![0.5, 0.5]);
        assert_eq!(b2.rows[3], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let t = builtins::fig1();
        let mut b = uniform_behavioral(&t);
        b.rows[0] = vec![0.7, 0.4];
        assert!(matches!(
            behavioral_to_sequence(&t, &b),
            Err(TfsdpError::MalformedDistribution { .. })
        ));
        let mut b = uniform_behavioral(&t);
        b.rows[3] = vec![1.2, -0.2, 0.0];
        assert!(behavioral_to_sequence(&t, &b).is_err());
        let mut b = uniform_behavioral(&t);
        b.rows[0] = vec![1.0];
        assert!(behavioral_to_sequence(&t, &b).is_err());
    }

    #[test]
    fn interior_sampler_respects_floor() {
        let t = builtins::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let b = random_interior_behavioral(&t, &mut rng, 1e-3);
            for row in &b.rows {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
                for &p in row {
                    assert!(p >= 1e-3 / (1.0 + 3.0 * 1e-3));
                }
            }
        }
    }

    #[test]
    fn degenerate_tree_is_legal() {
        // A tree whose root is terminal: the only strategy is the scalar 1.
        let t = TfsdpBuilder::new().finish().unwrap();
        assert_eq!(t.num_terminals(), 1);
        assert_eq!(t.num_decisions(), 0);
        assert!(validate_membership(&t, &[1.0], Space::Strategy, 0.0));
        assert!(validate_membership(&t, &[1.0], Space::Kernel, 0.0));
        let x = behavioral_to_sequence(&t, &Behavioral { rows: vec![] }).unwrap();
        assert_eq!(x.values, vec![1.0]);
    }
}
