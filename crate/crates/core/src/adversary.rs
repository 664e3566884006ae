//! Adversarial reward streams and learner-vs-adversary matches.
//!
//! The centerpiece is the recursive hard instance: a reward process that
//! forces every online learner to accumulate `Ω(√T)` regret. Its plan is
//! built once per (tree, horizon, seed) triple:
//!
//! * a decision point whose actions are all terminal becomes a bandit —
//!   every arm draws an independent fair coin each episode;
//! * a decision point with a non-terminal action routes play to the widest
//!   non-terminal subtree (lowest action index on ties) and zeroes every
//!   other action, so only the routed subtree matters;
//! * an observation point concatenates its children's sub-instances in
//!   child order, splitting the episode budget proportionally to subtree
//!   leaf counts by largest-remainder rounding.
//!
//! Each episode therefore activates exactly one bandit, and the emitted
//! reward vector is supported on that bandit's terminal coordinates. Coin
//! flips come from a counter-based ChaCha8 generator keyed by
//! (seed, episode, coordinate), so any episode's rewards can be produced
//! independently and in any order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metrics::SubtreeMetrics;
use crate::numeric::{kahan_dot, kahan_sum, Kahan};
use crate::omd::{cumulative_regret, omd_init, omd_predict, omd_update, OmdError};
use crate::tfsdp::{Kernel, PointId, RewardVector, SharedTfsdp, Tfsdp};

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("horizon {horizon} is below the tree's leaf count {leaf_count}")]
    HorizonTooSmall { horizon: u64, leaf_count: u64 },
    #[error("episode {t} is outside 1..={horizon}")]
    EpisodeOutOfRange { t: u64, horizon: u64 },
    #[error("reward stream row {index} has {got} entries, expected {want}")]
    StreamShape { index: usize, got: usize, want: usize },
    #[error("rate fit needs at least {need} points in the fitted window, got {got}")]
    ShortSeries { got: usize, need: usize },
    #[error("rate fit needs positive values, got {value} at index {index}")]
    NonPositiveValue { index: usize, value: f64 },
    #[error(transparent)]
    Learner(#[from] OmdError),
}

/// One node of the hard-instance construction, kept for inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanStep {
    /// All actions terminal: an independent fair coin per arm per episode.
    Bandit {
        decision: PointId,
        arms: Vec<usize>,
    },
    /// Play is routed to `action`; every other action rewards zero.
    Route { decision: PointId, action: usize },
    /// The episode budget is split among the children in order.
    Split {
        observation: PointId,
        shares: Vec<(PointId, u64)>,
    },
}

/// A contiguous episode range during which one bandit is active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// First episode of the block, 1-based inclusive.
    pub start: u64,
    /// Last episode of the block, inclusive.
    pub end: u64,
    /// The active bandit's decision point.
    pub decision: PointId,
    /// Terminal coordinates of the bandit's arms.
    pub arms: Vec<usize>,
}

/// An immutable hard-instance plan over a fixed horizon.
#[derive(Debug, Clone)]
pub struct HardInstance {
    tfsdp: SharedTfsdp,
    horizon: u64,
    seed: u64,
    steps: Vec<PlanStep>,
    blocks: Vec<Block>,
}

const COIN_TAG: u64 = 0x6472_6168; // the byte string "hard"

fn coin(seed: u64, episode: u64, coord: u64) -> f64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&episode.to_le_bytes());
    key[16..24].copy_from_slice(&coord.to_le_bytes());
    key[24..32].copy_from_slice(&COIN_TAG.to_le_bytes());
    (ChaCha8Rng::from_seed(key).next_u32() & 1) as f64
}

/// Builds the recursive hard instance for `horizon` episodes.
///
/// Requires `horizon ≥ leaf_count(tfsdp)`, which guarantees every split
/// block stays nonempty all the way down.
pub fn build_hard_instance(
    tfsdp: &SharedTfsdp,
    horizon: u64,
    seed: u64,
) -> Result<HardInstance, AdversaryError> {
    let metrics = SubtreeMetrics::compute(tfsdp);
    let leaf_count = metrics.root_leaf_count();
    if horizon < leaf_count {
        return Err(AdversaryError::HorizonTooSmall {
            horizon,
            leaf_count,
        });
    }

    let mut steps = Vec::new();
    let mut blocks = Vec::new();
    plan_observation(
        tfsdp,
        &metrics.leaf_count,
        Tfsdp::root(),
        1,
        horizon,
        &mut steps,
        &mut blocks,
    );
    Ok(HardInstance {
        tfsdp: tfsdp.clone(),
        horizon,
        seed,
        steps,
        blocks,
    })
}

fn plan_observation(
    t: &Tfsdp,
    widths: &[u64],
    point: PointId,
    start: u64,
    len: u64,
    steps: &mut Vec<PlanStep>,
    blocks: &mut Vec<Block>,
) {
    if t.is_terminal(point) {
        blocks.push(Block {
            start,
            end: start + len - 1,
            decision: point,
            arms: vec![t.terminal_index(point).expect("terminal point")],
        });
        return;
    }
    let children: Vec<PointId> = t.children(point).to_vec();
    let shares = largest_remainder(len, &children.iter().map(|&c| widths[c]).collect::<Vec<_>>());
    steps.push(PlanStep::Split {
        observation: point,
        shares: children.iter().copied().zip(shares.iter().copied()).collect(),
    });
    let mut cursor = start;
    for (&child, &share) in children.iter().zip(&shares) {
        plan_decision(t, widths, child, cursor, share, steps, blocks);
        cursor += share;
    }
}

fn plan_decision(
    t: &Tfsdp,
    widths: &[u64],
    point: PointId,
    start: u64,
    len: u64,
    steps: &mut Vec<PlanStep>,
    blocks: &mut Vec<Block>,
) {
    let seqs: Vec<PointId> = (0..t.actions(point).len())
        .map(|a| t.action_child(point, a))
        .collect();
    if seqs.iter().all(|&s| t.is_terminal(s)) {
        let arms: Vec<usize> = seqs
            .iter()
            .map(|&s| t.terminal_index(s).expect("terminal point"))
            .collect();
        steps.push(PlanStep::Bandit {
            decision: point,
            arms: arms.clone(),
        });
        blocks.push(Block {
            start,
            end: start + len - 1,
            decision: point,
            arms,
        });
        return;
    }
    let best = seqs
        .iter()
        .filter(|&&s| !t.is_terminal(s))
        .map(|&s| widths[s])
        .max()
        .expect("at least one non-terminal action");
    let action = seqs
        .iter()
        .position(|&s| !t.is_terminal(s) && widths[s] == best)
        .expect("a non-terminal action attains the maximum");
    steps.push(PlanStep::Route {
        decision: point,
        action,
    });
    plan_observation(t, widths, seqs[action], start, len, steps, blocks);
}

/// Splits `total` into integer shares proportional to `weights`: floors of
/// the exact quotas, with the leftover distributed by descending remainder
/// (lowest index on ties). The shares always sum to `total`.
fn largest_remainder(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    let mut shares: Vec<u64> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(usize, u64)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let product = total as u128 * w as u128;
        shares.push((product / sum as u128) as u64);
        remainders.push((i, (product % sum as u128) as u64));
    }
    let assigned: u64 = shares.iter().sum();
    remainders.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for k in 0..(total - assigned) as usize {
        shares[remainders[k].0] += 1;
    }
    shares
}

impl HardInstance {
    pub fn tfsdp(&self) -> &SharedTfsdp {
        &self.tfsdp
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// The reward vector of a 1-based episode index.
    pub fn reward(&self, t: u64) -> Result<RewardVector, AdversaryError> {
        if t < 1 || t > self.horizon {
            return Err(AdversaryError::EpisodeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        let idx = self.blocks.partition_point(|b| b.start <= t) - 1;
        let block = &self.blocks[idx];
        debug_assert!(block.start <= t && t <= block.end);
        let mut values = vec![0.0; self.tfsdp.num_terminals()];
        for &arm in &block.arms {
            values[arm] = coin(self.seed, t, arm as u64);
        }
        Ok(RewardVector { values })
    }
}

/// Per spec name: the reward stream of the hard instance at episode `t`.
pub fn adversary_step(inst: &HardInstance, t: u64) -> Result<RewardVector, AdversaryError> {
    inst.reward(t)
}

/// A reward-stream opponent for [`run_match`].
#[derive(Debug, Clone)]
pub enum Adversary {
    /// The recursive lower-bound construction.
    Hard(HardInstance),
    /// A fresh random payoff vector masked by a random transition kernel
    /// each episode, so the emitted reward is always feasible.
    Random { tfsdp: SharedTfsdp, seed: u64 },
    /// Always rewards zero.
    Zero { tfsdp: SharedTfsdp },
    /// Replays a fixed per-episode reward table, cycling past its end.
    Stream {
        tfsdp: SharedTfsdp,
        rewards: Vec<Vec<f64>>,
    },
}

const RANDOM_TAG: u64 = 0x646e_6172; // the byte string "rand"

impl Adversary {
    pub fn zero(tfsdp: &SharedTfsdp) -> Self {
        Adversary::Zero {
            tfsdp: tfsdp.clone(),
        }
    }

    pub fn random(tfsdp: &SharedTfsdp, seed: u64) -> Self {
        Adversary::Random {
            tfsdp: tfsdp.clone(),
            seed,
        }
    }

    /// Wraps a fixed reward table, validating row widths up front.
    pub fn stream(tfsdp: &SharedTfsdp, rewards: Vec<Vec<f64>>) -> Result<Self, AdversaryError> {
        let want = tfsdp.num_terminals();
        for (index, row) in rewards.iter().enumerate() {
            if row.len() != want {
                return Err(AdversaryError::StreamShape {
                    index,
                    got: row.len(),
                    want,
                });
            }
        }
        Ok(Adversary::Stream {
            tfsdp: tfsdp.clone(),
            rewards,
        })
    }

    pub fn tfsdp(&self) -> &SharedTfsdp {
        match self {
            Adversary::Hard(inst) => inst.tfsdp(),
            Adversary::Random { tfsdp, .. } => tfsdp,
            Adversary::Zero { tfsdp } => tfsdp,
            Adversary::Stream { tfsdp, .. } => tfsdp,
        }
    }

    /// The reward vector of a 1-based episode index.
    pub fn reward(&self, t: u64) -> Result<RewardVector, AdversaryError> {
        match self {
            Adversary::Hard(inst) => inst.reward(t),
            Adversary::Random { tfsdp, seed } => Ok(random_feasible_reward(tfsdp, *seed, t)),
            Adversary::Zero { tfsdp } => Ok(RewardVector {
                values: vec![0.0; tfsdp.num_terminals()],
            }),
            Adversary::Stream { tfsdp, rewards } => {
                if rewards.is_empty() {
                    return Ok(RewardVector {
                        values: vec![0.0; tfsdp.num_terminals()],
                    });
                }
                let row = &rewards[((t - 1) % rewards.len() as u64) as usize];
                Ok(RewardVector { values: row.clone() })
            }
        }
    }
}

/// Draws `r ⊙ y`: independent uniform payoffs in `[0,1]` per terminal,
/// masked by a random transition kernel, which keeps the dual norm of the
/// result at most 1.
fn random_feasible_reward(t: &Tfsdp, seed: u64, episode: u64) -> RewardVector {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&episode.to_le_bytes());
    key[24..32].copy_from_slice(&RANDOM_TAG.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);

    let kernel = random_kernel(t, &mut rng);
    let mut values = vec![0.0; t.num_terminals()];
    for &term in t.terminals() {
        let coord = t.terminal_index(term).expect("terminal point");
        values[coord] = rng.random::<f64>() * kernel.values[term];
    }
    RewardVector { values }
}

/// Samples a kernel whose observation-point splits are Dirichlet(1)
/// distributed, by normalizing exponential draws.
pub fn random_kernel<R: Rng + ?Sized>(t: &Tfsdp, rng: &mut R) -> Kernel {
    let mut values = vec![0.0; t.num_points()];
    values[Tfsdp::root()] = 1.0;
    for &p in t.pre_order() {
        if t.is_decision(p) {
            for a in 0..t.actions(p).len() {
                values[t.action_child(p, a)] = values[p];
            }
        } else if !t.is_terminal(p) {
            let kids: Vec<PointId> = t.children(p).to_vec();
            let draws: Vec<f64> = kids
                .iter()
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = draws.iter().sum();
            for (&kid, &d) in kids.iter().zip(&draws) {
                values[kid] = values[p] * d / total;
            }
        }
    }
    Kernel { values }
}

/// Per-episode record of a learner-vs-adversary match.
#[derive(Debug, Clone)]
pub struct RegretCurve {
    /// `⟨x_t, w_t⟩` for each episode.
    pub episode_rewards: Vec<f64>,
    /// Cumulative regret after each episode.
    pub cumulative_regret: Vec<f64>,
}

impl RegretCurve {
    pub fn final_regret(&self) -> f64 {
        *self.cumulative_regret.last().unwrap_or(&0.0)
    }
}

/// Runs mirror descent (without predictions) against an adversary.
///
/// `eta = None` selects the horizon-tuned step size. The returned curve has
/// one row per episode; its regret column compares the learner's running
/// reward against the best fixed strategy for the rewards revealed so far.
pub fn run_match(
    adversary: &Adversary,
    episodes: u64,
    eta: Option<f64>,
) -> Result<RegretCurve, AdversaryError> {
    let tfsdp = adversary.tfsdp().clone();
    let eta = eta.unwrap_or_else(|| crate::omd::tuned_eta(&tfsdp, episodes));
    let mut state = omd_init(&tfsdp, crate::dilent::DgfSpec::dilent(&tfsdp), eta)?;
    let zeros = vec![0.0; tfsdp.num_terminals()];

    let mut episode_rewards = Vec::with_capacity(episodes as usize);
    let mut cumulative = Vec::with_capacity(episodes as usize);
    for t in 1..=episodes {
        let x = omd_predict(&mut state, &zeros)?;
        let w = adversary.reward(t)?;
        episode_rewards.push(kahan_dot(&x.values, &w.values));
        omd_update(&mut state, &w.values)?;
        cumulative.push(cumulative_regret(&state)?);
    }
    Ok(RegretCurve {
        episode_rewards,
        cumulative_regret: cumulative,
    })
}

/// A fitted power law `value ≈ c·t^slope`.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub r_squared: f64,
    /// Number of points in the fitted window.
    pub points: usize,
}

/// Least-squares slope of `ln value` against `ln t` over the second half
/// of the series (1-based positions). The fitted window must contain at
/// least 8 strictly positive values.
pub fn empirical_rate_fit(series: &[f64]) -> Result<RateFit, AdversaryError> {
    let start = series.len() / 2;
    let window = &series[start..];
    if window.len() < 8 {
        return Err(AdversaryError::ShortSeries {
            got: window.len(),
            need: 8,
        });
    }
    for (offset, &v) in window.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AdversaryError::NonPositiveValue {
                index: start + offset,
                value: v,
            });
        }
    }

    let xs: Vec<f64> = (start..series.len()).map(|i| ((i + 1) as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|&v| v.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = kahan_sum(xs.iter().copied()) / n;
    let mean_y = kahan_sum(ys.iter().copied()) / n;
    let mut sxx = Kahan::new();
    let mut sxy = Kahan::new();
    let mut syy = Kahan::new();
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx.add((x - mean_x) * (x - mean_x));
        sxy.add((x - mean_x) * (y - mean_y));
        syy.add((y - mean_y) * (y - mean_y));
    }
    let slope = sxy.value() / sxx.value();
    let r_squared = if syy.value() <= 1e-300 {
        1.0
    } else {
        (sxy.value() * sxy.value()) / (sxx.value() * syy.value())
    };
    Ok(RateFit {
        slope,
        r_squared,
        points: window.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::norms::norm_linf;
    use crate::tfsdp::SharedTfsdp;
    use std::sync::Arc;

    fn shared(t: crate::tfsdp::Tfsdp) -> SharedTfsdp {
        Arc::new(t)
    }

    fn fig1() -> SharedTfsdp {
        shared(builtins::fig1())
    }

    #[test]
    fn fig1_plan_routes_to_the_wider_subtree() {
        let t = fig1();
        let inst = build_hard_instance(&t, 4096, 7).unwrap();
        // Root split is trivial (one child), the root decision routes to
        // its first action, and the episodes divide evenly between the two
        // bandits underneath.
        assert!(inst
            .steps()
            .iter()
            .any(|s| matches!(s, PlanStep::Route { action: 0, .. })));
        let splits: Vec<_> = inst
            .steps()
            .iter()
            .filter_map(|s| match s {
                PlanStep::Split { shares, .. } => Some(shares),
                _ => None,
            })
            .collect();
        assert_eq!(splits.len(), 2);
        assert_eq!(splits[0].len(), 1);
        assert_eq!(splits[0][0].1, 4096);
        assert_eq!(splits[1].iter().map(|&(_, s)| s).collect::<Vec<_>>(), [2048, 2048]);

        assert_eq!(inst.blocks().len(), 2);
        assert_eq!(inst.blocks()[0].start, 1);
        assert_eq!(inst.blocks()[0].end, 2048);
        assert_eq!(inst.blocks()[0].arms, [0, 1]);
        assert_eq!(inst.blocks()[1].start, 2049);
        assert_eq!(inst.blocks()[1].end, 4096);
        assert_eq!(inst.blocks()[1].arms, [2, 3]);
    }

    #[test]
    fn simplex_plan_is_a_single_bandit() {
        let t = shared(builtins::simplex(3).unwrap());
        let inst = build_hard_instance(&t, 100, 1).unwrap();
        assert_eq!(inst.blocks().len(), 1);
        assert_eq!(inst.blocks()[0].arms, [0, 1, 2]);
        assert_eq!(inst.blocks()[0].start, 1);
        assert_eq!(inst.blocks()[0].end, 100);
        assert!(matches!(inst.steps().last(), Some(PlanStep::Bandit { .. })));
    }

    #[test]
    fn rewards_are_coin_flips_on_the_active_block() {
        let t = fig1();
        let inst = build_hard_instance(&t, 4096, 11).unwrap();
        let early = inst.reward(10).unwrap();
        let late = inst.reward(3000).unwrap();
        for (i, &v) in early.values.iter().enumerate() {
            assert!(v == 0.0 || v == 1.0);
            if i >= 2 {
                assert_eq!(v, 0.0, "coordinate {i} outside the first block");
            }
        }
        for (i, &v) in late.values.iter().enumerate() {
            assert!(v == 0.0 || v == 1.0);
            if !(2..=3).contains(&i) {
                assert_eq!(v, 0.0, "coordinate {i} outside the second block");
            }
        }
    }

    #[test]
    fn coin_means_concentrate_around_one_half() {
        let t = shared(builtins::simplex(2).unwrap());
        let inst = build_hard_instance(&t, 10_000, 3).unwrap();
        let mut sums = [0.0f64; 2];
        for episode in 1..=10_000u64 {
            let w = inst.reward(episode).unwrap();
            sums[0] += w.values[0];
            sums[1] += w.values[1];
        }
        for s in sums {
            let mean = s / 10_000.0;
            assert!((mean - 0.5).abs() <= 0.02, "mean {mean}");
        }
    }

    #[test]
    fn streams_are_reproducible_and_order_independent() {
        let t = fig1();
        let a = build_hard_instance(&t, 256, 9).unwrap();
        let b = build_hard_instance(&t, 256, 9).unwrap();
        let forward: Vec<_> = (1..=256).map(|t| a.reward(t).unwrap().values).collect();
        let backward: Vec<_> = (1..=256)
            .rev()
            .map(|t| b.reward(t).unwrap().values)
            .collect();
        for (i, row) in forward.iter().enumerate() {
            assert_eq!(*row, backward[255 - i]);
        }
        let c = build_hard_instance(&t, 256, 10).unwrap();
        assert_ne!(forward, (1..=256).map(|t| c.reward(t).unwrap().values).collect::<Vec<_>>());
    }

    #[test]
    fn horizon_and_episode_bounds_are_enforced() {
        let t = fig1();
        assert!(matches!(
            build_hard_instance(&t, 1, 0),
            Err(AdversaryError::HorizonTooSmall { leaf_count: 2, .. })
        ));
        let inst = build_hard_instance(&t, 16, 0).unwrap();
        assert!(matches!(
            inst.reward(0),
            Err(AdversaryError::EpisodeOutOfRange { .. })
        ));
        assert!(matches!(
            inst.reward(17),
            Err(AdversaryError::EpisodeOutOfRange { .. })
        ));
        assert!(matches!(
            adversary_step(&inst, 17),
            Err(AdversaryError::EpisodeOutOfRange { .. })
        ));
    }

    #[test]
    fn blocks_tile_the_horizon_on_random_trees() {
        for seed in [2u64, 5, 8] {
            let t = shared(builtins::random_tfsdp(3, 3, 2, seed).unwrap());
            let leaves = crate::metrics::leaf_count(&t);
            let horizon = leaves.max(1) * 13 + 5;
            let inst = build_hard_instance(&t, horizon, seed).unwrap();
            let blocks = inst.blocks();
            assert_eq!(blocks[0].start, 1);
            assert_eq!(blocks.last().unwrap().end, horizon);
            for pair in blocks.windows(2) {
                assert_eq!(pair[0].end + 1, pair[1].start);
            }
            for block in blocks {
                assert!(block.start <= block.end);
                for &arm in &block.arms {
                    assert!(arm < t.num_terminals());
                }
            }
        }
    }

    #[test]
    fn random_adversary_emits_feasible_rewards() {
        let t = shared(builtins::random_tfsdp(3, 3, 2, 4).unwrap());
        let adv = Adversary::random(&t, 5);
        for episode in 1..=50 {
            let w = adv.reward(episode).unwrap();
            assert!(w.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert!(norm_linf(&t, &w.values) <= 1.0 + 1e-9);
        }
        let again = Adversary::random(&t, 5);
        assert_eq!(
            adv.reward(33).unwrap().values,
            again.reward(33).unwrap().values
        );
    }

    #[test]
    fn zero_adversary_yields_a_flat_zero_curve() {
        let t = fig1();
        let curve = run_match(&Adversary::zero(&t), 32, None).unwrap();
        assert!(curve.cumulative_regret.iter().all(|&r| r.abs() <= 1e-12));
        assert!(curve.episode_rewards.iter().all(|&r| r == 0.0));
        assert_eq!(curve.final_regret(), 0.0);
    }

    #[test]
    fn stream_adversary_replays_and_validates_rows() {
        let t = shared(builtins::simplex(2).unwrap());
        let adv = Adversary::stream(&t, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(adv.reward(1).unwrap().values, [1.0, 0.0]);
        assert_eq!(adv.reward(2).unwrap().values, [0.0, 1.0]);
        assert_eq!(adv.reward(3).unwrap().values, [1.0, 0.0]);
        assert!(matches!(
            Adversary::stream(&t, vec![vec![1.0]]),
            Err(AdversaryError::StreamShape { got: 1, want: 2, .. })
        ));
    }

    #[test]
    fn tuned_matches_stay_under_the_regret_bound() {
        let t = shared(builtins::simplex(2).unwrap());
        let episodes = 256u64;
        let bound = (2.0 * 2f64.ln() * episodes as f64).sqrt();
        for seed in 0..4 {
            let adv = Adversary::Hard(build_hard_instance(&t, episodes, seed).unwrap());
            let curve = run_match(&adv, episodes, None).unwrap();
            assert!(curve.final_regret() <= bound * (1.0 + 1e-9));
            assert!(curve.final_regret() >= -1e-9);
        }
    }

    #[test]
    fn hard_instance_forces_root_t_regret_on_two_arms() {
        let t = shared(builtins::simplex(2).unwrap());
        let episodes = 4096u64;
        let mut total = 0.0;
        for seed in 0..32 {
            let adv = Adversary::Hard(build_hard_instance(&t, episodes, seed).unwrap());
            total += run_match(&adv, episodes, None).unwrap().final_regret();
        }
        let mean = total / 32.0;
        let floor = 0.15 * (episodes as f64 * 2f64.ln()).sqrt();
        assert!(mean >= floor, "mean regret {mean} below floor {floor}");
    }

    #[test]
    fn rate_fit_recovers_exact_power_laws() {
        let sqrt_series: Vec<f64> = (1..=64).map(|t| 3.0 * (t as f64).sqrt()).collect();
        let fit = empirical_rate_fit(&sqrt_series).unwrap();
        assert!((fit.slope - 0.5).abs() <= 1e-6);
        assert!(fit.r_squared >= 1.0 - 1e-9);
        assert_eq!(fit.points, 32);

        let inverse_series: Vec<f64> = (1..=64).map(|t| 5.0 / t as f64).collect();
        let fit = empirical_rate_fit(&inverse_series).unwrap();
        assert!((fit.slope + 1.0).abs() <= 1e-6);

        let constant = vec![2.0; 64];
        let fit = empirical_rate_fit(&constant).unwrap();
        assert!(fit.slope.abs() <= 1e-9);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn rate_fit_rejects_degenerate_series() {
        assert!(matches!(
            empirical_rate_fit(&[1.0; 10]),
            Err(AdversaryError::ShortSeries { got: 5, need: 8 })
        ));
        let mut with_zero: Vec<f64> = (1..=32).map(|t| t as f64).collect();
        with_zero[20] = 0.0;
        assert!(matches!(
            empirical_rate_fit(&with_zero),
            Err(AdversaryError::NonPositiveValue { index: 20, .. })
        ));
    }
}
