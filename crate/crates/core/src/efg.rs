//! Extensive-form games and their per-player sequence-form views.
//!
//! An [`Efg`] is a finite game tree over `n` players with chance nodes and
//! information sets. Payoffs are normalized to `[0, 1]` per player — a
//! hard input requirement, since every norm and regret bound downstream
//! relies on unit-range rewards.
//!
//! [`extract_tfsdp`] projects the game onto one player: information sets
//! become decision points, and `(information set, action)` pairs become
//! sequences. Perfect recall — all nodes of an information set share the
//! same owner-action history — is verified during the walk; it is exactly
//! the condition making the projection a tree. When a sequence both leads
//! to further information sets and carries game terminals, a synthetic
//! single-action decision point is inserted below it so every
//! payoff-carrying sequence is terminal. Synthetic points are inert: one
//! action means they contribute nothing to norms, entropy, or vertex
//! counts.
//!
//! [`Game`] bundles the game with all per-player extractions and evaluates
//! reward vectors: `w⁽ⁱ⁾[σ] = Σ_z u⁽ⁱ⁾[z] · p[z] · Π_{j≠i} x⁽ʲ⁾[σ⁽ʲ⁾_z]`,
//! summing over game terminals `z` that map to the player-`i` sequence
//! `σ`, with `p[z]` the chance reach and the product ranging over the
//! opponents' sequence-form reach. Playing `x⁽ⁱ⁾` against the rest of the
//! profile earns exactly `⟨x⁽ⁱ⁾, w⁽ⁱ⁾⟩`.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::numeric::{kahan_dot, KahanVec};
use crate::tfsdp::{
    extend, membership_deviation, uniform_behavioral, behavioral_to_sequence, Extension, PointId,
    RewardVector, Space, Strategy, Tfsdp, TfsdpBuilder, TfsdpError,
};

/// Index of a node in an [`Efg`]; the root is always `0`.
pub type NodeId = usize;

#[derive(Debug, Clone)]
pub enum EfgNode {
    Decision {
        player: usize,
        infoset: String,
        actions: Vec<String>,
        children: Vec<NodeId>,
    },
    Chance {
        probs: Vec<f64>,
        children: Vec<NodeId>,
    },
    Terminal {
        payoffs: Vec<f64>,
    },
}

#[derive(Debug, Error)]
pub enum EfgError {
    #[error("game must have at least one player")]
    NoPlayers,
    #[error("structural defect at node {node}: {reason}")]
    Structure { node: NodeId, reason: String },
    #[error("chance probabilities at node {node} sum to {sum}")]
    ChanceProbs { node: NodeId, sum: f64 },
    #[error("payoff {value} at node {node} is outside [0, 1]")]
    PayoffRange { node: NodeId, value: f64 },
    #[error("information set {infoset:?} of player {player} is inconsistent: {reason}")]
    Infoset {
        player: usize,
        infoset: String,
        reason: String,
    },
    #[error("player {player} violates perfect recall at information set {infoset:?}")]
    PerfectRecall { player: usize, infoset: String },
    #[error("player index {player} out of range (game has {n_players} players)")]
    PlayerRange { player: usize, n_players: usize },
    #[error("joint policy has {got} strategies for a {want}-player game")]
    JointSize { got: usize, want: usize },
    #[error("strategy for player {player} is invalid: {source}")]
    PlayerStrategy {
        player: usize,
        source: TfsdpError,
    },
}

/// A validated extensive-form game tree.
#[derive(Debug, Clone)]
pub struct Efg {
    n_players: usize,
    nodes: Vec<EfgNode>,
}

impl Efg {
    /// Validates and wraps a node arena whose root is node `0`.
    pub fn new(n_players: usize, nodes: Vec<EfgNode>) -> Result<Self, EfgError> {
        let game = Self { n_players, nodes };
        game.validate()?;
        Ok(game)
    }

    pub fn root() -> NodeId {
        0
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn nodes(&self) -> &[EfgNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &EfgNode {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn terminal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| matches!(self.nodes[i], EfgNode::Terminal { .. }))
    }

    fn children_of(&self, id: NodeId) -> &[NodeId] {
        match &self.nodes[id] {
            EfgNode::Decision { children, .. } | EfgNode::Chance { children, .. } => children,
            EfgNode::Terminal { .. } => &[],
        }
    }

    fn validate(&self) -> Result<(), EfgError> {
        if self.n_players == 0 {
            return Err(EfgError::NoPlayers);
        }
        if self.nodes.is_empty() {
            return Err(EfgError::Structure {
                node: 0,
                reason: "game has no nodes".to_string(),
            });
        }
        let n = self.nodes.len();
        let mut referenced = vec![false; n];
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                EfgNode::Decision {
                    player,
                    actions,
                    children,
                    ..
                } => {
                    if *player >= self.n_players {
                        return Err(EfgError::PlayerRange {
                            player: *player,
                            n_players: self.n_players,
                        });
                    }
                    if actions.is_empty() {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: "decision node has no actions".to_string(),
                        });
                    }
                    if actions.len() != children.len() {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: format!(
                                "{} actions but {} children",
                                actions.len(),
                                children.len()
                            ),
                        });
                    }
                }
                EfgNode::Chance { probs, children } => {
                    if children.is_empty() {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: "chance node has no outcomes".to_string(),
                        });
                    }
                    if probs.len() != children.len() {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: format!(
                                "{} probabilities but {} children",
                                probs.len(),
                                children.len()
                            ),
                        });
                    }
                    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: "chance probability outside [0, 1]".to_string(),
                        });
                    }
                    let sum: f64 = probs.iter().sum();
                    if (sum - 1.0).abs() > 1e-12 {
                        return Err(EfgError::ChanceProbs { node: id, sum });
                    }
                }
                EfgNode::Terminal { payoffs } => {
                    if payoffs.len() != self.n_players {
                        return Err(EfgError::Structure {
                            node: id,
                            reason: format!(
                                "{} payoffs for {} players",
                                payoffs.len(),
                                self.n_players
                            ),
                        });
                    }
                    for &u in payoffs {
                        if !(0.0..=1.0).contains(&u) || !u.is_finite() {
                            return Err(EfgError::PayoffRange { node: id, value: u });
                        }
                    }
                }
            }
            for &c in self.children_of(id) {
                if c >= n {
                    return Err(EfgError::Structure {
                        node: id,
                        reason: format!("child {c} does not exist"),
                    });
                }
                if c == Self::root() {
                    return Err(EfgError::Structure {
                        node: id,
                        reason: "root appears as a child".to_string(),
                    });
                }
                if referenced[c] {
                    return Err(EfgError::Structure {
                        node: c,
                        reason: "node is referenced more than once".to_string(),
                    });
                }
                referenced[c] = true;
            }
        }
        if let Some(orphan) = (1..n).find(|&i| !referenced[i]) {
            return Err(EfgError::Structure {
                node: orphan,
                reason: "node is unreachable from the root".to_string(),
            });
        }
        // Information sets must agree on their action lists.
        let mut infoset_actions: HashMap<(usize, &str), &Vec<String>> = HashMap::new();
        for node in &self.nodes {
            if let EfgNode::Decision {
                player,
                infoset,
                actions,
                ..
            } = node
            {
                match infoset_actions.entry((*player, infoset.as_str())) {
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(actions);
                    }
                    std::collections::hash_map::Entry::Occupied(e) => {
                        if *e.get() != actions {
                            return Err(EfgError::Infoset {
                                player: *player,
                                infoset: infoset.clone(),
                                reason: "member nodes disagree on the action list".to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// One player's sequence-form view of an [`Efg`].
#[derive(Debug, Clone)]
pub struct Extraction {
    pub player: usize,
    pub tfsdp: Arc<Tfsdp>,
    /// Decision point of each game node owned by this player.
    pub node_decision: Vec<Option<PointId>>,
    /// Terminal coordinate of each game terminal node.
    pub terminal_coord: Vec<Option<usize>>,
    /// Single-action decision points inserted to host payoffs.
    pub synthetic_decisions: Vec<PointId>,
}

struct Extractor<'a> {
    efg: &'a Efg,
    player: usize,
    builder: TfsdpBuilder,
    infoset_ids: HashMap<String, PointId>,
    infoset_obs: HashMap<String, Vec<PointId>>,
    infoset_hist: HashMap<String, Vec<(String, usize)>>,
    node_decision: Vec<Option<PointId>>,
    /// Terminal-bearing observation points in first-touch order.
    payoff_obs: Vec<(PointId, Vec<NodeId>)>,
    payoff_obs_index: HashMap<PointId, usize>,
    has_child_decision: HashMap<PointId, bool>,
}

impl<'a> Extractor<'a> {
    fn walk(
        &mut self,
        node: NodeId,
        obs: PointId,
        hist: &mut Vec<(String, usize)>,
    ) -> Result<(), EfgError> {
        match self.efg.node(node) {
            EfgNode::Terminal { .. } => {
                match self.payoff_obs_index.get(&obs) {
                    Some(&i) => self.payoff_obs[i].1.push(node),
                    None => {
                        self.payoff_obs_index.insert(obs, self.payoff_obs.len());
                        self.payoff_obs.push((obs, vec![node]));
                    }
                }
                Ok(())
            }
            EfgNode::Chance { children, .. } => {
                for &c in children {
                    self.walk(c, obs, hist)?;
                }
                Ok(())
            }
            EfgNode::Decision {
                player,
                infoset,
                actions,
                children,
            } => {
                if *player != self.player {
                    for &c in children {
                        self.walk(c, obs, hist)?;
                    }
                    return Ok(());
                }
                let dec = match self.infoset_ids.get(infoset) {
                    Some(&dec) => {
                        if self.infoset_hist[infoset] != *hist {
                            return Err(EfgError::PerfectRecall {
                                player: self.player,
                                infoset: infoset.clone(),
                            });
                        }
                        dec
                    }
                    None => {
                        let dec = self
                            .builder
                            .add_decision(obs, infoset.clone())
                            .map_err(|e| EfgError::Structure {
                                node,
                                reason: e.to_string(),
                            })?;
                        self.has_child_decision.insert(obs, true);
                        let seqs = actions
                            .iter()
                            .map(|a| {
                                self.builder
                                    .add_action_labeled(dec, a.clone(), format!("{infoset}.{a}"))
                                    .unwrap()
                            })
                            .collect();
                        self.infoset_ids.insert(infoset.clone(), dec);
                        self.infoset_obs.insert(infoset.clone(), seqs);
                        self.infoset_hist.insert(infoset.clone(), hist.clone());
                        dec
                    }
                };
                self.node_decision[node] = Some(dec);
                let seqs = self.infoset_obs[infoset].clone();
                for (a, &c) in children.iter().enumerate() {
                    hist.push((infoset.clone(), a));
                    self.walk(c, seqs[a], hist)?;
                    hist.pop();
                }
                Ok(())
            }
        }
    }
}

/// Projects the game onto `player`, checking perfect recall along the way.
pub fn extract_tfsdp(efg: &Efg, player: usize) -> Result<Extraction, EfgError> {
    if player >= efg.n_players() {
        return Err(EfgError::PlayerRange {
            player,
            n_players: efg.n_players(),
        });
    }
    let mut ex = Extractor {
        efg,
        player,
        builder: TfsdpBuilder::new(),
        infoset_ids: HashMap::new(),
        infoset_obs: HashMap::new(),
        infoset_hist: HashMap::new(),
        node_decision: vec![None; efg.num_nodes()],
        payoff_obs: Vec::new(),
        payoff_obs_index: HashMap::new(),
        has_child_decision: HashMap::new(),
    };
    let root = ex.builder.root();
    let mut hist = Vec::new();
    ex.walk(Efg::root(), root, &mut hist)?;

    // Sequences carrying both payoffs and further decision points get a
    // synthetic single-action decision so payoffs land on terminals.
    let mut synthetic = Vec::new();
    let mut coord_obs: Vec<(PointId, Vec<NodeId>)> = Vec::new();
    for (obs, zs) in std::mem::take(&mut ex.payoff_obs) {
        if ex.has_child_decision.get(&obs).copied().unwrap_or(false) {
            let label = format!("{}#", ex.builder.label(obs));
            let dec = ex.builder.add_decision(obs, label.clone()).unwrap();
            let leaf = ex
                .builder
                .add_action_labeled(dec, "pay", format!("{label}pay"))
                .unwrap();
            synthetic.push(dec);
            coord_obs.push((leaf, zs));
        } else {
            coord_obs.push((obs, zs));
        }
    }
    let tfsdp = ex.builder.finish().map_err(|e| EfgError::Structure {
        node: Efg::root(),
        reason: e.to_string(),
    })?;

    let mut terminal_coord = vec![None; efg.num_nodes()];
    for (obs, zs) in coord_obs {
        let coord = tfsdp
            .terminal_index(obs)
            .expect("payoff-bearing sequences are terminal after synthesis");
        for z in zs {
            terminal_coord[z] = Some(coord);
        }
    }
    debug_assert!(efg
        .terminal_nodes()
        .all(|z| terminal_coord[z].is_some()));

    Ok(Extraction {
        player,
        tfsdp: Arc::new(tfsdp),
        node_decision: ex.node_decision,
        terminal_coord,
        synthetic_decisions: synthetic,
    })
}

/// One sequence-form strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPolicy {
    pub strategies: Vec<Strategy>,
}

/// An [`Efg`] together with every player's extraction.
#[derive(Debug, Clone)]
pub struct Game {
    efg: Efg,
    extractions: Vec<Extraction>,
}

impl Game {
    pub fn new(efg: Efg) -> Result<Self, EfgError> {
        let extractions = (0..efg.n_players())
            .map(|i| extract_tfsdp(&efg, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { efg, extractions })
    }

    pub fn efg(&self) -> &Efg {
        &self.efg
    }

    pub fn n_players(&self) -> usize {
        self.efg.n_players()
    }

    pub fn extraction(&self, player: usize) -> &Extraction {
        &self.extractions[player]
    }

    pub fn tfsdp(&self, player: usize) -> &Arc<Tfsdp> {
        &self.extractions[player].tfsdp
    }

    /// The profile in which every player plays uniformly at every
    /// information set.
    pub fn uniform_joint(&self) -> JointPolicy {
        JointPolicy {
            strategies: self
                .extractions
                .iter()
                .map(|ex| {
                    behavioral_to_sequence(&ex.tfsdp, &uniform_behavioral(&ex.tfsdp))
                        .expect("uniform behavioral is well-formed")
                })
                .collect(),
        }
    }

    pub fn validate_joint(&self, joint: &JointPolicy) -> Result<(), EfgError> {
        if joint.strategies.len() != self.n_players() {
            return Err(EfgError::JointSize {
                got: joint.strategies.len(),
                want: self.n_players(),
            });
        }
        for (i, x) in joint.strategies.iter().enumerate() {
            let dev = membership_deviation(&self.tfsdp(i), &x.values, Space::Strategy).ok_or(
                EfgError::PlayerStrategy {
                    player: i,
                    source: TfsdpError::Dimension {
                        got: x.values.len(),
                        want: self.tfsdp(i).num_terminals(),
                    },
                },
            )?;
            if dev > 1e-9 {
                return Err(EfgError::PlayerStrategy {
                    player: i,
                    source: TfsdpError::Membership {
                        space: Space::Strategy,
                        deviation: dev,
                    },
                });
            }
        }
        Ok(())
    }

    /// Reward vector of `player` against the rest of the profile:
    /// conditional payoffs on the player's terminal sequences, weighted by
    /// chance and opponent reach. `joint.strategies[player]` is ignored.
    pub fn reward_vector(
        &self,
        joint: &JointPolicy,
        player: usize,
    ) -> Result<RewardVector, EfgError> {
        if player >= self.n_players() {
            return Err(EfgError::PlayerRange {
                player,
                n_players: self.n_players(),
            });
        }
        self.validate_joint(joint)?;
        let exts: Vec<Extension> = (0..self.n_players())
            .map(|j| {
                extend(&self.tfsdp(j), &joint.strategies[j].values, Space::Strategy)
                    .expect("validated above")
            })
            .collect();
        let mut w = KahanVec::zeros(self.tfsdp(player).num_terminals());
        let mut reaches = vec![1.0; self.n_players()];
        self.accumulate(Efg::root(), player, 1.0, &mut reaches, &exts, &mut w);
        // Each entry is a probability-weighted average of payoffs in
        // [0, 1]; only summation dust can stray outside, so clamp it off.
        Ok(RewardVector {
            values: w.values().into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    fn accumulate(
        &self,
        node: NodeId,
        player: usize,
        chance: f64,
        reaches: &mut [f64],
        exts: &[Extension],
        w: &mut KahanVec,
    ) {
        match self.efg.node(node) {
            EfgNode::Terminal { payoffs } => {
                let mut weight = chance;
                for (j, &r) in reaches.iter().enumerate() {
                    if j != player {
                        weight *= r;
                    }
                }
                let coord = self.extractions[player].terminal_coord[node]
                    .expect("terminal map covers every terminal");
                w.add_at(coord, payoffs[player] * weight);
            }
            EfgNode::Chance { probs, children } => {
                for (&p, &c) in probs.iter().zip(children) {
                    self.accumulate(c, player, chance * p, reaches, exts, w);
                }
            }
            EfgNode::Decision {
                player: q,
                children,
                ..
            } => {
                let dec = self.extractions[*q].node_decision[node]
                    .expect("extraction visits every owned node");
                let saved = reaches[*q];
                for (a, &c) in children.iter().enumerate() {
                    reaches[*q] = exts[*q].values[self.tfsdp(*q).action_child(dec, a)];
                    self.accumulate(c, player, chance, reaches, exts, w);
                }
                reaches[*q] = saved;
            }
        }
    }

    /// Expected payoff of `player` under the profile: `⟨x⁽ⁱ⁾, w⁽ⁱ⁾⟩`.
    pub fn expected_utility(&self, joint: &JointPolicy, player: usize) -> Result<f64, EfgError> {
        let w = self.reward_vector(joint, player)?;
        Ok(kahan_dot(&joint.strategies[player].values, &w.values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::tfsdp::validate_membership;

    #[test]
    fn matching_pennies_extractions() {
        let game = Game::new(builtins::matching_pennies()).unwrap();
        for i in 0..2 {
            let t = game.tfsdp(i);
            assert_eq!(t.num_decisions(), 1);
            assert_eq!(t.num_terminals(), 2);
            assert!(game.extraction(i).synthetic_decisions.is_empty());
        }
    }

    #[test]
    fn matching_pennies_rewards() {
        let game = Game::new(builtins::matching_pennies()).unwrap();
        let joint = game.uniform_joint();
        let w = game.reward_vector(&joint, 0).unwrap();
        assert_eq!(w.values, vec![0.5, 0.5]);
        let u = game.expected_utility(&joint, 0).unwrap();
        assert!((u - 0.5).abs() < 1e-15);
        let u1 = game.expected_utility(&joint, 1).unwrap();
        assert!((u1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kuhn_shapes() {
        let efg = builtins::kuhn();
        assert_eq!(efg.n_players(), 2);
        // Six ordered two-card deals.
        match efg.node(Efg::root()) {
            EfgNode::Chance { children, .. } => assert_eq!(children.len(), 6),
            _ => panic!("kuhn root is a chance node"),
        }
        assert_eq!(efg.terminal_nodes().count(), 30);

        let game = Game::new(efg).unwrap();
        let t0 = game.tfsdp(0);
        // Three cards x two stages of real information sets, plus one
        // synthetic payoff point per card under the check sequence.
        assert_eq!(game.extraction(0).synthetic_decisions.len(), 3);
        assert_eq!(t0.num_decisions(), 9);
        assert_eq!(
            t0.num_decisions() - game.extraction(0).synthetic_decisions.len(),
            6
        );
        assert_eq!(t0.num_terminals(), 12);

        let t1 = game.tfsdp(1);
        assert_eq!(t1.num_decisions(), 6);
        assert_eq!(t1.num_terminals(), 12);
        assert!(game.extraction(1).synthetic_decisions.is_empty());

        // Constant-sum after rescaling: payoffs add to 1 at every terminal.
        for z in game.efg().terminal_nodes() {
            if let EfgNode::Terminal { payoffs } = game.efg().node(z) {
                assert!((payoffs[0] + payoffs[1] - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn kuhn_uniform_utilities_are_consistent() {
        let game = Game::new(builtins::kuhn()).unwrap();
        let joint = game.uniform_joint();
        let u0 = game.expected_utility(&joint, 0).unwrap();
        let u1 = game.expected_utility(&joint, 1).unwrap();
        assert!((u0 + u1 - 1.0).abs() < 1e-12);
        // Hand calculation: against uniform play the first player earns
        // 0.125 + s chips per deal, where s = ±1 is the showdown sign, so
        // the deal average is +0.125 chips = (0.125 + 2) / 4 rescaled.
        assert!((u0 - 0.53125).abs() < 1e-12);
        assert!(u0 > u1);
    }

    #[test]
    fn reward_vectors_are_feasible() {
        let game = Game::new(builtins::kuhn()).unwrap();
        let joint = game.uniform_joint();
        for i in 0..2 {
            let w = game.reward_vector(&joint, i).unwrap();
            for &v in &w.values {
                assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn player_without_moves_collapses_to_a_point() {
        let nodes = vec![
            EfgNode::Decision {
                player: 0,
                infoset: "a".to_string(),
                actions: vec!["x".to_string(), "y".to_string()],
                children: vec![1, 2],
            },
            EfgNode::Terminal {
                payoffs: vec![1.0, 0.25],
            },
            EfgNode::Terminal {
                payoffs: vec![0.0, 0.75],
            },
        ];
        let game = Game::new(Efg::new(2, nodes).unwrap()).unwrap();
        let t1 = game.tfsdp(1);
        assert_eq!(t1.num_terminals(), 1);
        assert_eq!(t1.num_decisions(), 0);
        let joint = game.uniform_joint();
        assert_eq!(joint.strategies[1].values, vec![1.0]);
        let w = game.reward_vector(&joint, 1).unwrap();
        assert!((w.values[0] - 0.5).abs() < 1e-15);
        assert!(validate_membership(&t1, &joint.strategies[1].values, Space::Strategy, 0.0));
    }

    #[test]
    fn imperfect_recall_is_rejected() {
        // Player 0 acts twice but forgets its own first move: both second
        // -stage nodes share one information set with different histories.
        let nodes = vec![
            EfgNode::Decision {
                player: 0,
                infoset: "first".to_string(),
                actions: vec!["l".to_string(), "r".to_string()],
                children: vec![1, 2],
            },
            EfgNode::Decision {
                player: 0,
                infoset: "second".to_string(),
                actions: vec!["l".to_string(), "r".to_string()],
                children: vec![3, 4],
            },
            EfgNode::Decision {
                player: 0,
                infoset: "second".to_string(),
                actions: vec!["l".to_string(), "r".to_string()],
                children: vec![5, 6],
            },
            EfgNode::Terminal { payoffs: vec![0.0] },
            EfgNode::Terminal { payoffs: vec![1.0] },
            EfgNode::Terminal { payoffs: vec![1.0] },
            EfgNode::Terminal { payoffs: vec![0.0] },
        ];
        let efg = Efg::new(1, nodes).unwrap();
        assert!(matches!(
            extract_tfsdp(&efg, 0),
            Err(EfgError::PerfectRecall { .. })
        ));
    }

    #[test]
    fn payoff_range_is_enforced() {
        let nodes = vec![
            EfgNode::Decision {
                player: 0,
                infoset: "a".to_string(),
                actions: vec!["x".to_string(), "y".to_string()],
                children: vec![1, 2],
            },
            EfgNode::Terminal { payoffs: vec![1.5] },
            EfgNode::Terminal { payoffs: vec![0.0] },
        ];
        assert!(matches!(
            Efg::new(1, nodes),
            Err(EfgError::PayoffRange { .. })
        ));
    }

    #[test]
    fn structural_defects_are_rejected() {
        // Child referenced twice.
        let nodes = vec![
            EfgNode::Decision {
                player: 0,
                infoset: "a".to_string(),
                actions: vec!["x".to_string(), "y".to_string()],
                children: vec![1, 1],
            },
            EfgNode::Terminal { payoffs: vec![0.0] },
        ];
        assert!(Efg::new(1, nodes).is_err());
        // Bad chance mass.
        let nodes = vec![
            EfgNode::Chance {
                probs: vec![0.6, 0.6],
                children: vec![1, 2],
            },
            EfgNode::Terminal { payoffs: vec![0.0] },
            EfgNode::Terminal { payoffs: vec![1.0] },
        ];
        assert!(matches!(
            Efg::new(1, nodes),
            Err(EfgError::ChanceProbs { .. })
        ));
    }

    #[test]
    fn joint_validation() {
        let game = Game::new(builtins::matching_pennies()).unwrap();
        let bad = JointPolicy {
            strategies: vec![
                Strategy {
                    values: vec![0.9, 0.4],
                },
                Strategy {
                    values: vec![0.5, 0.5],
                },
            ],
        };
        assert!(matches!(
            game.reward_vector(&bad, 0),
            Err(EfgError::PlayerStrategy { player: 0, .. })
        ));
        let short = JointPolicy {
            strategies: vec![Strategy {
                values: vec![1.0, 0.0],
            }],
        };
        assert!(matches!(
            game.validate_joint(&short),
            Err(EfgError::JointSize { .. })
        ));
    }
}
