//! Event-driven strategies for both players.
//!
//! A strategy is a stateful responder: on its turn it receives the current
//! position and returns one batch move. Mathematician strategies also expose
//! a standing victory claim, a leaf whose path sum they guarantee.

mod adversary;
mod math;
mod solver;

pub use adversary::{
    greedy_all, proportional_online, random_adversary, scripted, threshold_dodger, uniform_once,
    AdvStrategy,
};
pub(crate) use math::drive_child;
pub use math::{
    build_strategy, layered_driver, recursive_strategy, scaled, toy_strategy, trivial_strategy,
    LayeredDriver, RecursiveStrategy, ScaledStrategy, ToyStrategy, TrivialStrategy,
};
pub use solver::{
    grid_solver, toy_grid_guarantee, toy_wins_all_grid, GridOutcome, GridSolverConfig, Winner,
};

use crate::game::{GameError, GameState, Height, MoveDelta};
use crate::tree::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    /// The recursive strategy was asked to advance past its last subgame.
    /// Unreachable against a legal adversary: it would need total quota flow
    /// `S > 1` under vertex 0.
    #[error("internal exhaustion: {0}")]
    InternalExhaustion(String),
    #[error("strategy misconfigured: {0}")]
    Misconfigured(String),
    #[error("search resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// A Mathematician strategy: produces one legal batch move per turn and
/// maintains a standing claim.
pub trait MathStrategy {
    fn name(&self) -> String;

    /// Called on M's turn with the current position; returns M's move.
    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError>;

    /// The currently claimed leaf (global coordinates of the state this
    /// strategy plays on), if any.
    fn claim(&self) -> Option<NodeId>;
}

pub(crate) fn pad_claim(node: NodeId, height: Height) -> NodeId {
    match height {
        Height::Bounded(n) => node.pad_zeros(n as usize),
        Height::Unbounded => node,
    }
}

/// `z_i = 0 1^(i-1) 0`, the root of the i-th sequential subgame.
pub(crate) fn z_node(i: u64) -> crate::tree::NodeId {
    let mut bits = vec![0u8];
    bits.extend(std::iter::repeat(1).take(i as usize - 1));
    bits.push(0);
    crate::tree::NodeId::from_bits(bits)
}

/// The spine node `0 1^(t-1)`, whose children are `z_t` and the next spine
/// node.
pub(crate) fn spine_node(t: u64) -> crate::tree::NodeId {
    let mut bits = vec![0u8];
    bits.extend(std::iter::repeat(1).take(t as usize - 1));
    crate::tree::NodeId::from_bits(bits)
}

/// Total m-weight in the subtree under `z` (inclusive).
pub(crate) fn m_subtree_mass(state: &GameState, z: &crate::tree::NodeId) -> crate::rat::Rat {
    let mut sum = crate::rat::Rat::zero();
    for (n, w) in state.m_entries() {
        if z.is_prefix_of(n) {
            sum += w;
        }
    }
    sum
}
