//! Sequence-form decision making in extensive-form games.
//!
//! The crate is organized around the *tree-form sequential decision process*
//! (TFSDP): one player's view of an extensive-form game, in which decision
//! points (the player picks an action) alternate with observation points
//! (the environment reveals an outcome). Strategies live in the compressed
//! sequence-form polytope indexed by terminal sequences; the environment's
//! side of the same tree yields transition kernels.
//!
//! On top of that representation the crate provides:
//!
//! - combinatorial size measures of the strategy polytope and exact
//!   vertex/kernel enumeration ([`metrics`]);
//! - the dual pair of tree norms induced by kernels and vertices, computed
//!   by a single bottom-up sweep ([`norms`]);
//! - the dilated entropy regularizer, its Bregman divergence, and a
//!   closed-form proximal step ([`dilent`]);
//! - (predictive) online mirror descent over the sequence-form polytope
//!   ([`omd`]) and a lockstep multi-iterate variant whose empirical average
//!   converges to a coarse correlated equilibrium ([`clairvoyant`]);
//! - a deterministic adversary that forces square-root regret growth, plus
//!   match harnesses and rate fitting ([`adversary`]);
//! - extensive-form game parsing, per-player sequence-form extraction, and
//!   reward-vector evaluation ([`efg`], [`format`], [`builtins`]);
//! - brute-force reference routes used to validate the fast paths
//!   ([`oracle`]).

pub mod adversary;
pub mod builtins;
pub mod clairvoyant;
pub mod dilent;
pub mod efg;
pub mod format;
pub mod metrics;
pub mod norms;
pub mod numeric;
pub mod omd;
pub mod oracle;
pub mod tfsdp;

pub use efg::{Efg, Extraction, Game, JointPolicy};
pub use tfsdp::{Behavioral, Kernel, PointId, RewardVector, Space, Strategy, Tfsdp, TfsdpBuilder};
