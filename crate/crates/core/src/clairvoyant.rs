//! Clairvoyant mirror-descent self-play and coarse-correlated-equilibrium
//! reports.
//!
//! All players run predictive mirror descent in lockstep. In each episode
//! every player anchors at a shared pivot and performs `L` fixed-point
//! sweeps: evaluate the joint reward at the current iterate, then take a
//! proximal step from the pivot against that reward. The `L`-th iterate is
//! committed as the episode's profile, one further evaluation at the
//! `(L+1)`-th iterate yields the observed reward, and that iterate becomes
//! the next pivot. With `η = 1/(2n)` the sweep is a contraction, so
//! successive reward iterates approach a fixed point geometrically and the
//! committed profiles accumulate vanishing per-episode regret.
//!
//! The run is fully deterministic: there is no sampling anywhere, and
//! players are always processed in index order.

use std::sync::Arc;

use thiserror::Error;

use crate::dilent::{minimizer_log_rows, prox_log, LogBehavioral};
use crate::efg::{EfgError, Game, JointPolicy};
use crate::norms::norm_linf;
use crate::numeric::{kahan_dot, Kahan, KahanVec};
use crate::omd::best_response;
use crate::tfsdp::{behavioral_to_sequence, RewardVector, Tfsdp, TfsdpError};

#[derive(Debug, Error)]
pub enum CceError {
    #[error("the run must cover at least one episode")]
    NoEpisodes,
    #[error("inner sweep count must be at least 1, got {0}")]
    BadInnerSteps(usize),
    #[error("step size must be finite and positive, got {0}")]
    BadEta(f64),
    #[error("mixture is invalid: {reason}")]
    BadMixture { reason: &'static str },
    #[error(transparent)]
    Game(#[from] EfgError),
    #[error(transparent)]
    Tree(#[from] TfsdpError),
}

/// Parameters of a self-play run over `episodes` episodes.
///
/// `eta = None` selects `1/(2n)` for an `n`-player game, the largest step
/// size with a guaranteed fixed-point contraction. `inner_steps = None`
/// selects `max(1, ⌈log₂ episodes⌉)` sweeps, enough to drive each episode's
/// prediction error down to `O(1/episodes)`.
#[derive(Debug, Clone)]
pub struct CceConfig {
    pub episodes: usize,
    pub eta: Option<f64>,
    pub inner_steps: Option<usize>,
}

/// Complete record of a self-play run.
///
/// `residuals[t][l-1][i]` is `∥w_{t,l+1} − w_{t,l}∥∞` for player `i` — the
/// dual-norm gap between consecutive reward iterates of episode `t`'s
/// fixed-point sweep, for `l = 1..=inner_steps`. The last entry of each
/// episode is the prediction error `∥w_t − m_t∥∞`, since the episode's
/// observed reward is the sweep's one-past-the-end evaluation and its
/// prediction is the final inner one.
///
/// `summed_rewards[i]` accumulates player `i`'s reward vectors at the
/// committed profiles, and `summed_utilities[i]` the realized payoffs
/// `⟨x_t, w_t⟩`, so equilibrium gaps are recoverable without touching the
/// profile list.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub eta: f64,
    pub inner_steps: usize,
    /// Set when `n·eta ≥ 1`: the sweep is then not a guaranteed
    /// contraction and residuals may diverge.
    pub contraction_warning: bool,
    /// Committed profile of each episode.
    pub profiles: Vec<JointPolicy>,
    pub residuals: Vec<Vec<Vec<f64>>>,
    pub summed_rewards: Vec<Vec<f64>>,
    pub summed_utilities: Vec<f64>,
    /// Joint reward evaluations performed: `episodes · (inner_steps + 1)`.
    pub oracle_evaluations: u64,
}

impl RunLog {
    pub fn episodes(&self) -> usize {
        self.profiles.len()
    }

    /// Per-episode prediction errors `∥w_t − m_t∥∞` for each player.
    pub fn prediction_errors(&self) -> Vec<Vec<f64>> {
        self.residuals
            .iter()
            .map(|episode| episode.last().expect("at least one sweep").clone())
            .collect()
    }

    /// Equilibrium gap of the run's uniform profile average, computed from
    /// the cached reward and utility sums.
    pub fn gap(&self, game: &Game) -> Result<GapReport, CceError> {
        let k = self.episodes() as f64;
        let per_player: Vec<f64> = (0..game.n_players())
            .map(|i| {
                let (br, _) = best_response(game.tfsdp(i), &self.summed_rewards[i]);
                (br - self.summed_utilities[i]) / k
            })
            .collect();
        Ok(GapReport::new(per_player))
    }
}

/// A finite distribution over joint strategy profiles.
#[derive(Debug, Clone)]
pub struct CorrelatedMixture {
    pub profiles: Vec<JointPolicy>,
    pub weights: Vec<f64>,
}

/// Per-player equilibrium gaps and their maximum.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub per_player: Vec<f64>,
    pub max: f64,
}

impl GapReport {
    fn new(per_player: Vec<f64>) -> Self {
        let max = per_player.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { per_player, max }
    }
}

fn ceil_log2(k: usize) -> usize {
    let mut l = 0;
    while (1usize << l) < k {
        l += 1;
    }
    l
}

fn materialize(tfsdps: &[Arc<Tfsdp>], logs: &[LogBehavioral]) -> Result<JointPolicy, TfsdpError> {
    let strategies = tfsdps
        .iter()
        .zip(logs)
        .map(|(t, log)| behavioral_to_sequence(t, &log.to_behavioral()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(JointPolicy { strategies })
}

fn evaluate(game: &Game, joint: &JointPolicy) -> Result<Vec<RewardVector>, EfgError> {
    (0..game.n_players())
        .map(|i| game.reward_vector(joint, i))
        .collect()
}

/// Runs clairvoyant self-play and returns the full episode log.
pub fn clairvoyant_run(game: &Game, config: &CceConfig) -> Result<RunLog, CceError> {
    let n = game.n_players();
    let k = config.episodes;
    if k == 0 {
        return Err(CceError::NoEpisodes);
    }
    let inner_steps = match config.inner_steps {
        Some(0) => return Err(CceError::BadInnerSteps(0)),
        Some(l) => l,
        None => ceil_log2(k).max(1),
    };
    let eta = match config.eta {
        Some(e) if e.is_finite() && e > 0.0 => e,
        Some(e) => return Err(CceError::BadEta(e)),
        None => 1.0 / (2.0 * n as f64),
    };
    let contraction_warning = n as f64 * eta >= 1.0;

    let tfsdps: Vec<Arc<Tfsdp>> = (0..n).map(|i| Arc::clone(game.tfsdp(i))).collect();
    let mut pivot_logs: Vec<LogBehavioral> =
        tfsdps.iter().map(|t| minimizer_log_rows(t)).collect();

    let mut profiles = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut summed_rewards: Vec<KahanVec> = tfsdps
        .iter()
        .map(|t| KahanVec::zeros(t.num_terminals()))
        .collect();
    let mut summed_utilities: Vec<Kahan> = vec![Kahan::new(); n];
    let mut oracle_evaluations = 0u64;

    let mut scratch: Vec<Vec<f64>> = tfsdps
        .iter()
        .map(|t| vec![0.0; t.num_terminals()])
        .collect();

    for _ in 0..k {
        let mut iter_logs = pivot_logs.clone();
        let mut profile = materialize(&tfsdps, &iter_logs)?;
        let mut prev_rewards: Option<Vec<RewardVector>> = None;
        let mut episode_residuals = Vec::with_capacity(inner_steps);
        let mut committed: Option<(JointPolicy, Vec<RewardVector>)> = None;

        for l in 1..=inner_steps {
            let rewards = evaluate(game, &profile)?;
            oracle_evaluations += 1;
            if let Some(prev) = &prev_rewards {
                episode_residuals.push(reward_gaps(&tfsdps, &rewards, prev));
            }
            if l == inner_steps {
                committed = Some((profile.clone(), rewards.clone()));
            }
            for i in 0..n {
                for (dst, &w) in scratch[i].iter_mut().zip(&rewards[i].values) {
                    *dst = eta * w;
                }
                iter_logs[i] = prox_log(&tfsdps[i], &scratch[i], &pivot_logs[i]).0;
            }
            profile = materialize(&tfsdps, &iter_logs)?;
            prev_rewards = Some(rewards);
        }

        let observed = evaluate(game, &profile)?;
        oracle_evaluations += 1;
        let last_inner = prev_rewards.expect("inner_steps >= 1");
        episode_residuals.push(reward_gaps(&tfsdps, &observed, &last_inner));

        let (committed_profile, committed_rewards) = committed.expect("inner_steps >= 1");
        for i in 0..n {
            summed_rewards[i].add(&committed_rewards[i].values);
            summed_utilities[i].add(kahan_dot(
                &committed_profile.strategies[i].values,
                &committed_rewards[i].values,
            ));
        }
        profiles.push(committed_profile);
        residuals.push(episode_residuals);
        pivot_logs = iter_logs;
    }

    Ok(RunLog {
        eta,
        inner_steps,
        contraction_warning,
        profiles,
        residuals,
        summed_rewards: summed_rewards.iter().map(KahanVec::values).collect(),
        summed_utilities: summed_utilities.iter().map(Kahan::value).collect(),
        oracle_evaluations,
    })
}

fn reward_gaps(tfsdps: &[Arc<Tfsdp>], a: &[RewardVector], b: &[RewardVector]) -> Vec<f64> {
    tfsdps
        .iter()
        .zip(a.iter().zip(b))
        .map(|(t, (ra, rb))| {
            let diff: Vec<f64> = ra
                .values
                .iter()
                .zip(&rb.values)
                .map(|(&x, &y)| x - y)
                .collect();
            norm_linf(t, &diff)
        })
        .collect()
}

/// The uniform mixture over a run's committed profiles.
pub fn average_policy(log: &RunLog) -> CorrelatedMixture {
    let k = log.profiles.len();
    CorrelatedMixture {
        profiles: log.profiles.clone(),
        weights: vec![1.0 / k as f64; k],
    }
}

/// Equilibrium gap of a profile mixture, recomputed from scratch.
///
/// For each player `i` the mixture's rewards are averaged into
/// `w̄ᵢ = Σ_k λ_k·wᵢ(π_k)` and its realized utility into
/// `ūᵢ = Σ_k λ_k·⟨xᵢ(π_k), wᵢ(π_k)⟩`; the gap is the best-response value
/// against `w̄ᵢ` minus `ūᵢ`. Nonnegative weights must sum to one.
pub fn cce_gap(game: &Game, mixture: &CorrelatedMixture) -> Result<GapReport, CceError> {
    if mixture.profiles.is_empty() {
        return Err(CceError::BadMixture {
            reason: "no profiles",
        });
    }
    if mixture.weights.len() != mixture.profiles.len() {
        return Err(CceError::BadMixture {
            reason: "weight count does not match profile count",
        });
    }
    if mixture.weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
        return Err(CceError::BadMixture {
            reason: "weights must lie in [0, 1]",
        });
    }
    let total: f64 = crate::numeric::kahan_sum(mixture.weights.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(CceError::BadMixture {
            reason: "weights must sum to 1",
        });
    }

    let n = game.n_players();
    let mut per_player = Vec::with_capacity(n);
    for i in 0..n {
        let t = game.tfsdp(i);
        let mut averaged = KahanVec::zeros(t.num_terminals());
        let mut utility = Kahan::new();
        for (profile, &weight) in mixture.profiles.iter().zip(&mixture.weights) {
            let w = game.reward_vector(profile, i)?;
            averaged.add_scaled(&w.values, weight);
            utility.add(weight * kahan_dot(&profile.strategies[i].values, &w.values));
        }
        let (br, _) = best_response(t, &averaged.values());
        per_player.push(br - utility.value());
    }
    Ok(GapReport::new(per_player))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::efg::{Efg, EfgNode};

    fn pennies() -> Game {
        Game::new(builtins::matching_pennies()).unwrap()
    }

    fn run(game: &Game, episodes: usize) -> RunLog {
        clairvoyant_run(
            game,
            &CceConfig {
                episodes,
                eta: None,
                inner_steps: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn log_dimensions_and_evaluation_count() {
        let game = pennies();
        let log = run(&game, 16);
        assert_eq!(log.inner_steps, 4);
        assert_eq!(log.eta, 0.25);
        assert!(!log.contraction_warning);
        assert_eq!(log.profiles.len(), 16);
        assert_eq!(log.residuals.len(), 16);
        assert!(log.residuals.iter().all(|ep| ep.len() == 4));
        assert!(log
            .residuals
            .iter()
            .all(|ep| ep.iter().all(|r| r.len() == 2)));
        assert_eq!(log.oracle_evaluations, 16 * 5);
        assert_eq!(log.summed_rewards.len(), 2);
        assert_eq!(log.summed_rewards[0].len(), 2);
    }

    #[test]
    fn residuals_contract_geometrically() {
        let game = pennies();
        let log = run(&game, 64);
        for episode in &log.residuals {
            for (idx, gaps) in episode.iter().enumerate() {
                let l = idx + 1;
                let bound = 2f64.powi(2 - l as i32) + 1e-9;
                for &g in gaps {
                    assert!(g <= bound, "l={l}: residual {g} exceeds {bound}");
                }
            }
        }
    }

    #[test]
    fn residuals_never_grow_along_a_sweep() {
        let game = pennies();
        let log = run(&game, 32);
        for episode in &log.residuals {
            for pair in episode.windows(2) {
                let before: f64 = pair[0].iter().copied().fold(0.0, f64::max);
                let after: f64 = pair[1].iter().copied().fold(0.0, f64::max);
                assert!(after <= before + 1e-9);
            }
        }
    }

    #[test]
    fn prediction_error_shrinks_with_episode_count() {
        let game = pennies();
        for k in [16usize, 64] {
            let log = run(&game, k);
            let envelope = 8.0 / k as f64 + 1e-9;
            for errs in log.prediction_errors() {
                for e in errs {
                    assert!(e <= envelope, "K={k}: prediction error {e} > {envelope}");
                }
            }
        }
    }

    #[test]
    fn single_player_rewards_are_already_fixed() {
        // With one player the reward vector ignores the player's own
        // strategy, so every sweep iterate sees the identical reward and
        // all residuals vanish.
        let efg = Efg::new(
            1,
            vec![
                EfgNode::Decision {
                    player: 0,
                    infoset: "d".into(),
                    actions: vec!["l".into(), "r".into()],
                    children: vec![1, 2],
                },
                EfgNode::Terminal { payoffs: vec![0.3] },
                EfgNode::Terminal { payoffs: vec![0.7] },
            ],
        )
        .unwrap();
        let game = Game::new(efg).unwrap();
        let log = run(&game, 8);
        for episode in &log.residuals {
            for gaps in episode {
                assert!(gaps.iter().all(|&g| g <= 1e-12));
            }
        }
        // The gap still decays only like ln|V|/K here — the committed
        // profiles creep toward the better arm as the pivot accumulates
        // reward — so check the rate bound rather than collapse.
        let report = log.gap(&game).unwrap();
        let bound = 8.0 * 2f64.ln() / 8.0;
        assert!((-1e-9..=bound).contains(&report.max), "gap {}", report.max);
    }

    #[test]
    fn uniform_profile_on_pennies_has_zero_gap() {
        let game = pennies();
        let mixture = CorrelatedMixture {
            profiles: vec![game.uniform_joint()],
            weights: vec![1.0],
        };
        let report = cce_gap(&game, &mixture).unwrap();
        for g in &report.per_player {
            assert!(g.abs() <= 1e-12);
        }
        assert!(report.max.abs() <= 1e-12);
    }

    #[test]
    fn cached_and_recomputed_gaps_agree() {
        let game = pennies();
        let log = run(&game, 32);
        let cached = log.gap(&game).unwrap();
        let recomputed = cce_gap(&game, &average_policy(&log)).unwrap();
        for (a, b) in cached.per_player.iter().zip(&recomputed.per_player) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        assert!((cached.max - recomputed.max).abs() <= 1e-9);
    }

    #[test]
    fn pennies_gap_decays_like_one_over_k() {
        let game = pennies();
        let gap_at = |k: usize| run(&game, k).gap(&game).unwrap().max;
        let g64 = gap_at(64);
        let g256 = gap_at(256);
        assert!(g64 <= 0.05, "gap at K=64 is {g64}");
        // ~1/K decay: quadrupling the horizon should at least halve the gap.
        assert!(g256 <= g64 / 2.0, "gap only fell {g64} -> {g256}");
        // All gaps from self-play averages are nonnegative up to rounding.
        assert!(g64 >= -1e-9 && g256 >= -1e-9);
    }

    #[test]
    fn kuhn_run_meets_the_rate_bound() {
        let game = Game::new(builtins::kuhn()).unwrap();
        let k = 128;
        let log = run(&game, k);
        let ln_v = (0..game.n_players())
            .map(|i| crate::metrics::ln_vertex_count(game.tfsdp(i)))
            .fold(0.0, f64::max);
        let bound = 8.0 * 2.0 * ln_v / k as f64;
        let report = log.gap(&game).unwrap();
        assert!(
            report.max <= bound,
            "gap {} exceeds 8·n·ln|V|/K = {bound}",
            report.max
        );
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let game = pennies();
        let a = run(&game, 24);
        let b = run(&game, 24);
        assert_eq!(a.profiles, b.profiles);
        assert_eq!(a.summed_rewards, b.summed_rewards);
        assert_eq!(a.summed_utilities, b.summed_utilities);
        assert_eq!(a.residuals, b.residuals);
    }

    #[test]
    fn large_step_sizes_raise_the_contraction_flag() {
        let game = pennies();
        let log = clairvoyant_run(
            &game,
            &CceConfig {
                episodes: 4,
                eta: Some(1.0),
                inner_steps: Some(3),
            },
        )
        .unwrap();
        assert!(log.contraction_warning);
        assert_eq!(log.inner_steps, 3);
        assert_eq!(log.eta, 1.0);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let game = pennies();
        let base = CceConfig {
            episodes: 4,
            eta: None,
            inner_steps: None,
        };
        assert!(matches!(
            clairvoyant_run(&game, &CceConfig { episodes: 0, ..base.clone() }),
            Err(CceError::NoEpisodes)
        ));
        assert!(matches!(
            clairvoyant_run(
                &game,
                &CceConfig {
                    inner_steps: Some(0),
                    ..base.clone()
                }
            ),
            Err(CceError::BadInnerSteps(0))
        ));
        assert!(matches!(
            clairvoyant_run(&game, &CceConfig { eta: Some(0.0), ..base.clone() }),
            Err(CceError::BadEta(_))
        ));
        assert!(matches!(
            clairvoyant_run(
                &game,
                &CceConfig {
                    eta: Some(f64::NAN),
                    ..base
                }
            ),
            Err(CceError::BadEta(_))
        ));
    }

    #[test]
    fn mixture_validation_rejects_malformed_weights() {
        let game = pennies();
        let profile = game.uniform_joint();
        let bad = [
            CorrelatedMixture {
                profiles: vec![],
                weights: vec![],
            },
            CorrelatedMixture {
                profiles: vec![profile.clone()],
                weights: vec![0.5, 0.5],
            },
            CorrelatedMixture {
                profiles: vec![profile.clone(), profile.clone()],
                weights: vec![1.5, -0.5],
            },
            CorrelatedMixture {
                profiles: vec![profile.clone()],
                weights: vec![0.9],
            },
        ];
        for mixture in &bad {
            assert!(matches!(
                cce_gap(&game, mixture),
                Err(CceError::BadMixture { .. })
            ));
        }
    }

    #[test]
    fn default_inner_steps_track_the_horizon() {
        let game = pennies();
        for (k, expect) in [(1usize, 1usize), (2, 1), (3, 2), (64, 6), (65, 7)] {
            let log = clairvoyant_run(
                &game,
                &CceConfig {
                    episodes: k,
                    eta: None,
                    inner_steps: None,
                },
            )
            .unwrap();
            assert_eq!(log.inner_steps, expect, "K={k}");
        }
    }
}
