//! Online mirror descent over a decision process, with optional
//! predictions, plus best-response and regret accounting.
//!
//! One episode is a strict predict/update pair. [`omd_predict`] commits
//! `x_t = prox(η·m_t, x̃_t)` for a prediction `m_t` of the coming reward
//! (`m_t = 0` recovers the non-predictive algorithm, where `x_t = x̃_t`);
//! [`omd_update`] then consumes the realized reward vector
//! `w_t ∈ [0, 1]^E`, moves the pivot by `x̃_{t+1} = prox(η·w_t, x̃_t)`,
//! and accrues `⟨x_t, w_t⟩`. Rewards outside `[0, 1]` are rejected
//! outright — every bound downstream leans on that range.
//!
//! [`cumulative_regret`] compares the accrued reward against the best
//! fixed strategy in hindsight, computed by [`best_response`] — a sweep
//! that maximizes over actions at decision points and sums over children
//! at observation points.
//!
//! With the learning rate `η = √(2 ln|V| / T)` from [`tuned_eta`], the
//! non-predictive learner guarantees `Regret(T) ≤ √(2 ln|V| · T)`; the
//! predictive variant satisfies
//! `Regret(T) ≤ ln|V|/η + (η/2)·Σ_t ∥w_t − m_t∥²_∞` (vertex norm).
//!
//! The pivot lives in log-behavioral space throughout, so arbitrarily
//! long update chains cannot underflow it; see the regularizer module.

use thiserror::Error;

use crate::dilent::{dgf_minimizer, minimizer_log_rows, prox_log, DgfSpec, DilentError, LogBehavioral};
use crate::efg::{EfgError, Game, JointPolicy};
use crate::metrics::SubtreeMetrics;
use crate::numeric::{kahan_dot, kahan_sum, Kahan, KahanVec};
use crate::tfsdp::{behavioral_to_sequence, Behavioral, SharedTfsdp, Strategy, Tfsdp, TfsdpError};

#[derive(Debug, Error)]
pub enum OmdError {
    #[error("learning rate {0} must be positive and finite")]
    BadEta(f64),
    #[error("proximal steps support only the weight-one regularizer")]
    UnsupportedDgf,
    #[error("expected a call to {expected}")]
    OutOfPhase { expected: &'static str },
    #[error("reward entry {index} is {value}, outside [0, 1]")]
    RewardOutOfRange { index: usize, value: f64 },
    #[error("prediction entry {index} is {value}, which is not finite")]
    NonFinitePrediction { index: usize, value: f64 },
    #[error("no episodes have been played")]
    NoEpisodes,
    #[error(transparent)]
    Dilent(#[from] DilentError),
    #[error(transparent)]
    Tree(#[from] TfsdpError),
    #[error(transparent)]
    Game(#[from] EfgError),
}

/// State of one mirror-descent learner.
#[derive(Debug, Clone)]
pub struct LearnerState {
    tfsdp: SharedTfsdp,
    dgf: DgfSpec,
    eta: f64,
    log_pivot: LogBehavioral,
    pivot: Strategy,
    last_committed: Strategy,
    awaiting_update: bool,
    episode: u64,
    cumulative_reward: Kahan,
    summed_rewards: KahanVec,
}

impl LearnerState {
    pub fn tfsdp(&self) -> &SharedTfsdp {
        &self.tfsdp
    }

    pub fn dgf(&self) -> &DgfSpec {
        &self.dgf
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// The current pivot `x̃_t` in sequence form.
    pub fn pivot(&self) -> &Strategy {
        &self.pivot
    }

    /// The most recently committed iterate `x_t`.
    pub fn last_committed(&self) -> &Strategy {
        &self.last_committed
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative_reward.value()
    }

    /// `Σ_t w_t`, kept in compensated summation.
    pub fn summed_rewards(&self) -> Vec<f64> {
        self.summed_rewards.values()
    }
}

/// The horizon-tuned learning rate `η = √(2 ln|V| / T)` that yields the
/// `√(2 ln|V| T)` regret guarantee; falls back to 1 on trees with a single
/// vertex, where the choice is immaterial.
pub fn tuned_eta(t: &Tfsdp, episodes: u64) -> f64 {
    let ln_v = SubtreeMetrics::compute(t).root_ln_vertex_count();
    let eta = (2.0 * ln_v / episodes.max(1) as f64).sqrt();
    if eta > 0.0 {
        eta
    } else {
        1.0
    }
}

/// Starts a learner at the regularizer's minimizer.
pub fn omd_init(t: &SharedTfsdp, dgf: DgfSpec, eta: f64) -> Result<LearnerState, OmdError> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(OmdError::BadEta(eta));
    }
    if !dgf.is_unit() {
        return Err(OmdError::UnsupportedDgf);
    }
    let log_pivot = minimizer_log_rows(t);
    let pivot = dgf_minimizer(t);
    Ok(LearnerState {
        tfsdp: t.clone(),
        dgf,
        eta,
        log_pivot,
        last_committed: pivot.clone(),
        pivot,
        awaiting_update: false,
        episode: 0,
        cumulative_reward: Kahan::new(),
        summed_rewards: KahanVec::zeros(t.num_terminals()),
    })
}

fn check_dimension(t: &Tfsdp, v: &[f64]) -> Result<(), OmdError> {
    if v.len() != t.num_terminals() {
        return Err(TfsdpError::Dimension {
            got: v.len(),
            want: t.num_terminals(),
        }
        .into());
    }
    Ok(())
}

fn materialize(t: &Tfsdp, log_rows: &LogBehavioral) -> Strategy {
    behavioral_to_sequence(t, &log_rows.to_behavioral())
        .expect("proximal outputs are valid behavioral distributions")
}

/// Commits the episode's iterate `x_t = prox(η·m, x̃_t)`.
pub fn omd_predict(state: &mut LearnerState, m: &[f64]) -> Result<Strategy, OmdError> {
    if state.awaiting_update {
        return Err(OmdError::OutOfPhase { expected: "update" });
    }
    check_dimension(&state.tfsdp, m)?;
    if let Some((index, &value)) = m.iter().enumerate().find(|&(_, v)| !v.is_finite()) {
        return Err(OmdError::NonFinitePrediction { index, value });
    }
    let g: Vec<f64> = m.iter().map(|&v| state.eta * v).collect();
    let (rows, _) = prox_log(&state.tfsdp, &g, &state.log_pivot);
    state.last_committed = materialize(&state.tfsdp, &rows);
    state.awaiting_update = true;
    Ok(state.last_committed.clone())
}

/// Consumes the episode's realized reward: accrues `⟨x_t, w⟩` and moves
/// the pivot to `prox(η·w, x̃_t)`.
pub fn omd_update(state: &mut LearnerState, w: &[f64]) -> Result<(), OmdError> {
    if !state.awaiting_update {
        return Err(OmdError::OutOfPhase { expected: "predict" });
    }
    check_dimension(&state.tfsdp, w)?;
    if let Some((index, &value)) = w
        .iter()
        .enumerate()
        .find(|&(_, v)| !(0.0..=1.0).contains(v))
    {
        return Err(OmdError::RewardOutOfRange { index, value });
    }
    state
        .cumulative_reward
        .add(kahan_dot(&state.last_committed.values, w));
    state.summed_rewards.add(w);
    let g: Vec<f64> = w.iter().map(|&v| state.eta * v).collect();
    let (rows, _) = prox_log(&state.tfsdp, &g, &state.log_pivot);
    state.pivot = materialize(&state.tfsdp, &rows);
    state.log_pivot = rows;
    state.episode += 1;
    state.awaiting_update = false;
    Ok(())
}

/// Maximizes `⟨x, w⟩` over strategies by a bottom-up sweep: actions are
/// maximized (ties to the lowest index) and observations summed. Returns
/// the value and an attaining pure strategy.
pub fn best_response(t: &Tfsdp, w: &[f64]) -> (f64, Strategy) {
    assert_eq!(w.len(), t.num_terminals(), "dimension mismatch");
    let mut value = vec![0.0; t.num_points()];
    let mut choice = vec![0usize; t.num_points()];
    for &p in t.pre_order().iter().rev() {
        if t.is_terminal(p) {
            value[p] = w[t.terminal_index(p).unwrap()];
        } else if t.is_decision(p) {
            let kids = t.children(p);
            let mut best = 0usize;
            for (a, &c) in kids.iter().enumerate().skip(1) {
                if value[c] > value[kids[best]] {
                    best = a;
                }
            }
            choice[p] = best;
            value[p] = value[kids[best]];
        } else {
            value[p] = kahan_sum(t.children(p).iter().map(|&c| value[c]));
        }
    }
    let rows: Vec<Vec<f64>> = t
        .decisions()
        .iter()
        .map(|&j| {
            let mut row = vec![0.0; t.children(j).len()];
            row[choice[j]] = 1.0;
            row
        })
        .collect();
    let strategy = behavioral_to_sequence(t, &Behavioral { rows })
        .expect("pure rows are valid distributions");
    (value[Tfsdp::root()], strategy)
}

/// Hindsight regret so far:
/// `max_x ⟨x, Σ_t w_t⟩ − Σ_t ⟨x_t, w_t⟩`.
pub fn cumulative_regret(state: &LearnerState) -> Result<f64, OmdError> {
    if state.episode == 0 {
        return Err(OmdError::NoEpisodes);
    }
    let summed = state.summed_rewards();
    let (best, _) = best_response(&state.tfsdp, &summed);
    Ok(best - state.cumulative_reward())
}

/// Runs `episodes` rounds of non-predictive self-play: every player is an
/// OMD learner, and each episode's rewards come from the committed joint
/// profile. Returns the final learner states.
pub fn run_self_play(
    game: &Game,
    etas: &[f64],
    episodes: u64,
) -> Result<Vec<LearnerState>, OmdError> {
    assert_eq!(etas.len(), game.n_players(), "one learning rate per player");
    let mut learners = (0..game.n_players())
        .map(|i| omd_init(game.tfsdp(i), DgfSpec::dilent(game.tfsdp(i)), etas[i]))
        .collect::<Result<Vec<_>, _>>()?;
    for _ in 0..episodes {
        let strategies = learners
            .iter_mut()
            .map(|l| omd_predict(l, &vec![0.0; l.tfsdp.num_terminals()]))
            .collect::<Result<Vec<_>, _>>()?;
        let joint = JointPolicy { strategies };
        for (i, learner) in learners.iter_mut().enumerate() {
            let w = game.reward_vector(&joint, i)?;
            omd_update(learner, &w.values)?;
        }
    }
    Ok(learners)
}
