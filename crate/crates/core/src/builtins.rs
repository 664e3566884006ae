//! Catalog of ready-made decision processes and games.
//!
//! Everything here is reachable by name through [`builtin_game`] (and the
//! CLI's `--builtin` flag via [`parse_builtin`]): the four-decision worked
//! example [`fig1`] and its normalized form, the one-decision
//! [`simplex`], [`kuhn`] poker, [`matching_pennies`], and a seeded
//! [`random_tfsdp`] generator.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::efg::{Efg, EfgNode, NodeId};
use crate::metrics::normalize_observations;
use crate::tfsdp::{Tfsdp, TfsdpBuilder};

#[derive(Debug, Error)]
pub enum BuiltinError {
    #[error("unknown builtin {0:?}")]
    UnknownName(String),
    #[error("builtin {builtin:?} does not take a parameter {name:?}")]
    UnexpectedParam { builtin: String, name: String },
    #[error("builtin {builtin:?} is missing the parameter {name:?}")]
    MissingParam { builtin: String, name: String },
    #[error("invalid {name}={value} for builtin {builtin:?}: {reason}")]
    InvalidParam {
        builtin: String,
        name: String,
        value: String,
        reason: String,
    },
}

/// Outcome of a catalog lookup: either a bare decision process or a full
/// game.
#[derive(Debug, Clone)]
pub enum Builtin {
    Tree(Tfsdp),
    Game(Efg),
}

/// The four-decision example tree: decision point A at the root chooses
/// between a branch observing {B, C} and a branch with the single
/// three-action decision point D.
pub fn fig1() -> Tfsdp {
    let mut b = TfsdpBuilder::new();
    let a = b.add_decision(b.root(), "A").unwrap();
    let a1 = b.add_action(a, "1").unwrap();
    let a2 = b.add_action(a, "2").unwrap();
    let pb = b.add_decision(a1, "B").unwrap();
    b.add_action(pb, "3").unwrap();
    b.add_action(pb, "4").unwrap();
    let pc = b.add_decision(a1, "C").unwrap();
    b.add_action(pc, "5").unwrap();
    b.add_action(pc, "6").unwrap();
    let pd = b.add_decision(a2, "D").unwrap();
    b.add_action(pd, "7").unwrap();
    b.add_action(pd, "8").unwrap();
    b.add_action(pd, "9").unwrap();
    b.finish().unwrap()
}

/// [`fig1`] with its single-outcome observation points fused away.
pub fn fig2_normalized() -> Tfsdp {
    normalize_observations(&fig1())
}

/// A single decision point with `k` actions, all terminal.
pub fn simplex(k: usize) -> Result<Tfsdp, BuiltinError> {
    if k < 1 {
        return Err(BuiltinError::InvalidParam {
            builtin: "simplex".to_string(),
            name: "k".to_string(),
            value: k.to_string(),
            reason: "need at least one action".to_string(),
        });
    }
    let mut b = TfsdpBuilder::new();
    let d = b.add_decision(b.root(), "d").unwrap();
    for a in 0..k {
        b.add_action(d, a.to_string()).unwrap();
    }
    Ok(b.finish().unwrap())
}

const KUHN_CARDS: [&str; 3] = ["J", "Q", "K"];

/// Rescales net chips in `[-2, 2]` onto `[0, 1]`.
fn kuhn_payoff(chips: i32) -> f64 {
    (chips as f64 + 2.0) / 4.0
}

/// Kuhn poker: three cards, one ante each, one bet size. Payoffs are net
/// chips rescaled onto `[0, 1]`, which keeps every terminal constant-sum.
pub fn kuhn() -> Efg {
    let mut nodes: Vec<EfgNode> = vec![EfgNode::Terminal { payoffs: vec![] }];
    let mut deals = Vec::new();
    for (i0, c0) in KUHN_CARDS.iter().enumerate() {
        for (i1, c1) in KUHN_CARDS.iter().enumerate() {
            if i0 == i1 {
                continue;
            }
            // Showdown sign for the first player.
            let s: i32 = if i0 > i1 { 1 } else { -1 };
            let term = |nodes: &mut Vec<EfgNode>, chips0: i32| -> NodeId {
                nodes.push(EfgNode::Terminal {
                    payoffs: vec![kuhn_payoff(chips0), kuhn_payoff(-chips0)],
                });
                nodes.len() - 1
            };
            // First player checked, second bet: fold or call.
            let cb_fold = term(&mut nodes, -1);
            let cb_call = term(&mut nodes, 2 * s);
            nodes.push(EfgNode::Decision {
                player: 0,
                infoset: format!("{c0}cb"),
                actions: vec!["fold".to_string(), "call".to_string()],
                children: vec![cb_fold, cb_call],
            });
            let after_cb = nodes.len() - 1;
            // Second player facing a check.
            let cc = term(&mut nodes, s);
            nodes.push(EfgNode::Decision {
                player: 1,
                infoset: format!("{c1}c"),
                actions: vec!["check".to_string(), "bet".to_string()],
                children: vec![cc, after_cb],
            });
            let after_c = nodes.len() - 1;
            // Second player facing a bet.
            let b_fold = term(&mut nodes, 1);
            let b_call = term(&mut nodes, 2 * s);
            nodes.push(EfgNode::Decision {
                player: 1,
                infoset: format!("{c1}b"),
                actions: vec!["fold".to_string(), "call".to_string()],
                children: vec![b_fold, b_call],
            });
            let after_b = nodes.len() - 1;
            // First player's opening move.
            nodes.push(EfgNode::Decision {
                player: 0,
                infoset: c0.to_string(),
                actions: vec!["check".to_string(), "bet".to_string()],
                children: vec![after_c, after_b],
            });
            deals.push(nodes.len() - 1);
        }
    }
    let n = deals.len();
    nodes[0] = EfgNode::Chance {
        probs: vec![1.0 / n as f64; n],
        children: deals,
    };
    Efg::new(2, nodes).expect("kuhn construction is valid")
}

/// Simultaneous matching pennies: the second player's two nodes share one
/// information set. The matcher scores 1 on equal picks, 0 otherwise.
pub fn matching_pennies() -> Efg {
    let pick = ["heads".to_string(), "tails".to_string()];
    let nodes = vec![
        EfgNode::Decision {
            player: 0,
            infoset: "pick".to_string(),
            actions: pick.to_vec(),
            children: vec![1, 2],
        },
        EfgNode::Decision {
            player: 1,
            infoset: "pick".to_string(),
            actions: pick.to_vec(),
            children: vec![3, 4],
        },
        EfgNode::Decision {
            player: 1,
            infoset: "pick".to_string(),
            actions: pick.to_vec(),
            children: vec![5, 6],
        },
        EfgNode::Terminal {
            payoffs: vec![1.0, 0.0],
        },
        EfgNode::Terminal {
            payoffs: vec![0.0, 1.0],
        },
        EfgNode::Terminal {
            payoffs: vec![0.0, 1.0],
        },
        EfgNode::Terminal {
            payoffs: vec![1.0, 0.0],
        },
    ];
    Efg::new(2, nodes).expect("matching pennies construction is valid")
}

/// Three-player cyclic bit matching: the players pick a bit in sequence
/// without seeing the earlier picks, and player `i` scores only by matching
/// player `i+1 (mod 3)` — 0.9 for a match on 0, 0.3 for a match on 1. The
/// asymmetric weights push the unique symmetric equilibrium off uniform, to
/// each player picking 0 with probability 1/4.
pub fn cycle3() -> Efg {
    let bits = ["0".to_string(), "1".to_string()];
    let weight = |b: usize| if b == 0 { 0.9 } else { 0.3 };
    let score = |mine: usize, next: usize| if mine == next { weight(mine) } else { 0.0 };

    let mut nodes = vec![
        EfgNode::Decision {
            player: 0,
            infoset: "bit".to_string(),
            actions: bits.to_vec(),
            children: vec![1, 2],
        },
        EfgNode::Decision {
            player: 1,
            infoset: "bit".to_string(),
            actions: bits.to_vec(),
            children: vec![3, 4],
        },
        EfgNode::Decision {
            player: 1,
            infoset: "bit".to_string(),
            actions: bits.to_vec(),
            children: vec![5, 6],
        },
    ];
    for pair in 0..4 {
        nodes.push(EfgNode::Decision {
            player: 2,
            infoset: "bit".to_string(),
            actions: bits.to_vec(),
            children: vec![7 + 2 * pair, 8 + 2 * pair],
        });
    }
    for triple in 0..8 {
        let (b0, b1, b2) = (triple >> 2, (triple >> 1) & 1, triple & 1);
        nodes.push(EfgNode::Terminal {
            payoffs: vec![score(b0, b1), score(b1, b2), score(b2, b0)],
        });
    }
    Efg::new(3, nodes).expect("cycle3 construction is valid")
}

/// Grows a random decision process, deterministic in `seed`.
///
/// `depth` bounds the number of decision points on any root-to-terminal
/// path; each observation point sprouts `1..=obs_branch` decision points
/// (below the root, only with probability 0.7), and each decision point
/// gets `1..=dec_branch` actions.
pub fn random_tfsdp(
    depth: usize,
    dec_branch: usize,
    obs_branch: usize,
    seed: u64,
) -> Result<Tfsdp, BuiltinError> {
    let check = |name: &str, v: usize| -> Result<(), BuiltinError> {
        if v < 1 {
            Err(BuiltinError::InvalidParam {
                builtin: "random_tfsdp".to_string(),
                name: name.to_string(),
                value: v.to_string(),
                reason: "must be at least 1".to_string(),
            })
        } else {
            Ok(())
        }
    };
    check("depth", depth)?;
    check("dec_branch", dec_branch)?;
    check("obs_branch", obs_branch)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TfsdpBuilder::new();
    let root = b.root();
    let mut next_id = 0usize;
    grow(
        &mut b,
        root,
        depth,
        true,
        dec_branch,
        obs_branch,
        &mut rng,
        &mut next_id,
    );
    Ok(b.finish().unwrap())
}

#[allow(clippy::too_many_arguments)]
fn grow(
    b: &mut TfsdpBuilder,
    obs: usize,
    depth: usize,
    is_root: bool,
    dec_branch: usize,
    obs_branch: usize,
    rng: &mut ChaCha8Rng,
    next_id: &mut usize,
) {
    if depth == 0 || (!is_root && rng.random::<f64>() >= 0.7) {
        return;
    }
    let k = rng.random_range(1..=obs_branch);
    for _ in 0..k {
        let dec = b.add_decision(obs, format!("j{next_id}")).unwrap();
        *next_id += 1;
        let m = rng.random_range(1..=dec_branch);
        for a in 0..m {
            let child = b.add_action(dec, a.to_string()).unwrap();
            grow(b, child, depth - 1, false, dec_branch, obs_branch, rng, next_id);
        }
    }
}

fn parse_u64(builtin: &str, name: &str, value: &str) -> Result<u64, BuiltinError> {
    value.parse().map_err(|_| BuiltinError::InvalidParam {
        builtin: builtin.to_string(),
        name: name.to_string(),
        value: value.to_string(),
        reason: "not a nonnegative integer".to_string(),
    })
}

/// Looks up a catalog entry by name with keyword parameters.
pub fn builtin_game(name: &str, params: &BTreeMap<String, String>) -> Result<Builtin, BuiltinError> {
    let expected: &[&str] = match name {
        "fig1" | "fig2_normalized" | "kuhn" | "matching_pennies" | "cycle3" => &[],
        "simplex" => &["k"],
        "random_tfsdp" => &["depth", "dec_branch", "obs_branch", "seed"],
        _ => return Err(BuiltinError::UnknownName(name.to_string())),
    };
    for key in params.keys() {
        if !expected.contains(&key.as_str()) {
            return Err(BuiltinError::UnexpectedParam {
                builtin: name.to_string(),
                name: key.clone(),
            });
        }
    }
    let get = |key: &str| -> Result<u64, BuiltinError> {
        let raw = params.get(key).ok_or_else(|| BuiltinError::MissingParam {
            builtin: name.to_string(),
            name: key.to_string(),
        })?;
        parse_u64(name, key, raw)
    };
    match name {
        "fig1" => Ok(Builtin::Tree(fig1())),
        "fig2_normalized" => Ok(Builtin::Tree(fig2_normalized())),
        "kuhn" => Ok(Builtin::Game(kuhn())),
        "matching_pennies" => Ok(Builtin::Game(matching_pennies())),
        "cycle3" => Ok(Builtin::Game(cycle3())),
        "simplex" => Ok(Builtin::Tree(simplex(get("k")? as usize)?)),
        "random_tfsdp" => Ok(Builtin::Tree(random_tfsdp(
            get("depth")? as usize,
            get("dec_branch")? as usize,
            get("obs_branch")? as usize,
            get("seed")?,
        )?)),
        _ => unreachable!(),
    }
}

/// Parses a compact builtin spec such as `fig1`, `simplex:3`,
/// `simplex:k=3`, or `random_tfsdp:3,2,2,7`. Positional values follow the
/// parameter order documented on each constructor.
pub fn parse_builtin(spec: &str) -> Result<Builtin, BuiltinError> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, a),
        None => (spec, ""),
    };
    let order: &[&str] = match name {
        "simplex" => &["k"],
        "random_tfsdp" => &["depth", "dec_branch", "obs_branch", "seed"],
        _ => &[],
    };
    let mut params = BTreeMap::new();
    if !args.is_empty() {
        for (i, piece) in args.split(',').enumerate() {
            let (key, value) = match piece.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => match order.get(i) {
                    Some(&k) => (k.to_string(), piece.to_string()),
                    None => {
                        return Err(BuiltinError::UnexpectedParam {
                            builtin: name.to_string(),
                            name: format!("#{}", i + 1),
                        })
                    }
                },
            };
            params.insert(key, value);
        }
    }
    builtin_game(name, &params)
}
