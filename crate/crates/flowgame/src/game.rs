//! The referee: game configuration, state, move legality, path sums and the
//! winning predicate for the weight/flow game, plus the scaling view used to
//! run a strategy inside a subtree.
//!
//! Weights are sparse: absent means zero. The adversary's root flow is fixed
//! for the lifetime of a match and is never stored in the sparse map.

use crate::rat::{ExtRat, Rat};
use crate::tree::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    M,
    A,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::M => write!(f, "M"),
            Player::A => write!(f, "A"),
        }
    }
}

/// Tree height. Finite games declare a bound; the layered infinite-game
/// driver grows the tree on demand and uses `Unbounded`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Height {
    Bounded(u64),
    Unbounded,
}

impl Height {
    pub fn contains_depth(&self, depth: usize) -> bool {
        match self {
            Height::Bounded(n) => depth as u64 <= *n,
            Height::Unbounded => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub height: Height,
    pub root_flow: Rat,
    pub budget: Rat,
    pub target: Rat,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GameError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("weight decrease rejected at node {node:?}")]
    DecreaseRejected { node: NodeId },
    #[error("total m-weight exceeds budget after move (sum {sum:?})")]
    BudgetExceeded { sum: Rat },
    #[error("flow constraint violated at node {node:?}")]
    FlowViolation { node: NodeId },
    #[error("root flow may not change")]
    RootFlowChanged,
    #[error("node {node:?} is outside the declared tree")]
    OutOfTree { node: NodeId },
    #[error("player {player} may not touch the other player's weights")]
    WrongSide { player: Player },
}

/// One player's batch of monotone weight increases. Each update sets the
/// node's weight to `new_value`, which must not be below the stored value.
/// An empty batch is a pass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveDelta {
    pub player: Player,
    pub updates: Vec<(NodeId, Rat)>,
}

impl MoveDelta {
    pub fn pass(player: Player) -> Self {
        MoveDelta { player, updates: Vec::new() }
    }

    pub fn is_pass(&self) -> bool {
        self.updates.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    MWins { leaf: NodeId },
    AWins { reason: String },
    Undecided { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameState {
    pub config: GameConfig,
    m: BTreeMap<NodeId, Rat>,
    a: BTreeMap<NodeId, Rat>,
    pub m_moves: u64,
    pub a_moves: u64,
}

impl GameState {
    /// Fresh state: `a(root) = root_flow`, everything else zero.
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        if !config.root_flow.is_positive() {
            return Err(GameError::InvalidConfig("root flow must be positive".into()));
        }
        if !config.budget.is_positive() {
            return Err(GameError::InvalidConfig("budget must be positive".into()));
        }
        if config.target < Rat::zero() {
            return Err(GameError::InvalidConfig("target must be non-negative".into()));
        }
        Ok(GameState {
            config,
            m: BTreeMap::new(),
            a: BTreeMap::new(),
            m_moves: 0,
            a_moves: 0,
        })
    }

    pub fn m_weight(&self, node: &NodeId) -> Rat {
        self.m.get(node).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn a_weight(&self, node: &NodeId) -> Rat {
        if node.is_root() {
            self.config.root_flow.clone()
        } else {
            self.a.get(node).cloned().unwrap_or_else(Rat::zero)
        }
    }

    pub fn m_entries(&self) -> impl Iterator<Item = (&NodeId, &Rat)> {
        self.m.iter()
    }

    pub fn a_entries(&self) -> impl Iterator<Item = (&NodeId, &Rat)> {
        self.a.iter()
    }

    pub fn m_total(&self) -> Rat {
        let mut sum = Rat::zero();
        for v in self.m.values() {
            sum += v;
        }
        sum
    }

    /// Remaining m-budget.
    pub fn m_reserve(&self) -> Rat {
        self.config.budget.sat_sub(&self.m_total())
    }

    /// Applies a batch move and re-validates the whole resulting state.
    /// The caller treats an error as an immediate loss for the mover.
    pub fn apply_move(&self, delta: &MoveDelta) -> Result<GameState, GameError> {
        let mut next = self.clone();
        for (node, value) in &delta.updates {
            if !next.config.height.contains_depth(node.depth()) {
                return Err(GameError::OutOfTree { node: node.clone() });
            }
            match delta.player {
                Player::M => {
                    if *value < next.m_weight(node) {
                        return Err(GameError::DecreaseRejected { node: node.clone() });
                    }
                    if value.is_positive() {
                        next.m.insert(node.clone(), value.clone());
                    }
                }
                Player::A => {
                    if node.is_root() {
                        if *value != next.config.root_flow {
                            return Err(GameError::RootFlowChanged);
                        }
                        continue;
                    }
                    if *value < next.a_weight(node) {
                        return Err(GameError::DecreaseRejected { node: node.clone() });
                    }
                    if value.is_positive() {
                        next.a.insert(node.clone(), value.clone());
                    }
                }
            }
        }
        next.validate()?;
        match delta.player {
            Player::M => next.m_moves += 1,
            Player::A => next.a_moves += 1,
        }
        Ok(next)
    }

    /// Global post-state validation: budget and every flow constraint that
    /// touches a stored a-weight.
    fn validate(&self) -> Result<(), GameError> {
        let sum = self.m_total();
        if sum > self.config.budget {
            return Err(GameError::BudgetExceeded { sum });
        }
        let mut parents: BTreeSet<NodeId> = BTreeSet::new();
        for node in self.a.keys() {
            if let Some(p) = node.parent() {
                parents.insert(p);
            }
        }
        for p in parents {
            let inflow = self.a_weight(&p);
            let outflow = self.a_weight(&p.child(0)) + self.a_weight(&p.child(1));
            if outflow > inflow {
                return Err(GameError::FlowViolation { node: p });
            }
        }
        Ok(())
    }

    /// Exact sum of `m(x)/a(x)` over all prefixes of `node`, root and the
    /// node itself included.
    pub fn path_sum(&self, node: &NodeId) -> Result<ExtRat, GameError> {
        if !self.config.height.contains_depth(node.depth()) {
            return Err(GameError::OutOfTree { node: node.clone() });
        }
        let mut sum = ExtRat::zero();
        for x in node.ancestors() {
            sum += ExtRat::ratio(&self.m_weight(&x), &self.a_weight(&x));
        }
        Ok(sum)
    }

    /// The unsent part of the flow arriving at `x`.
    pub fn flow_slack(&self, x: &NodeId) -> Result<Rat, GameError> {
        if let Height::Bounded(n) = self.config.height {
            if x.depth() as u64 >= n {
                return Err(GameError::OutOfTree { node: x.clone() });
            }
        }
        let inflow = self.a_weight(x);
        let outflow = self.a_weight(&x.child(0)) + self.a_weight(&x.child(1));
        Ok(inflow.sat_sub(&outflow))
    }

    /// The leaf maximizing the path sum, leftmost on ties.
    ///
    /// Path ratios vanish wherever `m` is zero, so the search only has to
    /// branch inside the closure of the m-support; every other subtree is
    /// represented by its leftmost leaf. In an unbounded game the returned
    /// node is the deepest useful node rather than a leaf.
    pub fn best_leaf(&self) -> (NodeId, ExtRat) {
        let mut skeleton: BTreeSet<NodeId> = BTreeSet::new();
        for node in self.m.keys() {
            for anc in node.ancestors() {
                skeleton.insert(anc);
            }
        }
        let (sum, leaf) = self.best_from(&NodeId::root(), &skeleton);
        (leaf, sum)
    }

    fn best_from(&self, x: &NodeId, skeleton: &BTreeSet<NodeId>) -> (ExtRat, NodeId) {
        let ratio = ExtRat::ratio(&self.m_weight(x), &self.a_weight(x));
        let at_bottom = match self.config.height {
            Height::Bounded(n) => x.depth() as u64 == n,
            Height::Unbounded => false,
        };
        if at_bottom {
            return (ratio, x.clone());
        }
        let branch = |child: NodeId| -> (ExtRat, NodeId) {
            if skeleton.contains(&child) {
                self.best_from(&child, skeleton)
            } else {
                let rep = match self.config.height {
                    Height::Bounded(n) => child.pad_zeros(n as usize),
                    Height::Unbounded => child,
                };
                (ExtRat::zero(), rep)
            }
        };
        let left = branch(x.child(0));
        let right = branch(x.child(1));
        let (sub, leaf) = if left.0 >= right.0 { left } else { right };
        (ratio + sub, leaf)
    }

    /// True iff some leaf reaches the target sum (`+inf` counts).
    pub fn is_winning_for_m(&self) -> bool {
        self.best_leaf().1 >= self.config.target
    }
}

/// Read/write view of a subtree, used to run a strategy built for the unit
/// game (`budget 1`, `root flow 1`) inside a larger game.
///
/// The child's weight recommendations are multiplied by `budget_share`;
/// adversary flows it observes are divided by `assumed_flow`, and the flow at
/// the subtree root is presented as exactly 1. While the real flow at the
/// root stays at or below `assumed_flow`, a child guarantee of sum `k`
/// translates to a global in-subtree sum of at least
/// `k * budget_share / assumed_flow`.
#[derive(Clone, Debug)]
pub struct ScaleView {
    pub root: NodeId,
    pub assumed_flow: Rat,
    pub budget_share: Rat,
    pub child_height: Height,
    pub child_target: Rat,
}

impl ScaleView {
    pub fn new(
        root: NodeId,
        assumed_flow: Rat,
        budget_share: Rat,
        child_height: Height,
        child_target: Rat,
    ) -> Result<Self, GameError> {
        if !assumed_flow.is_positive() {
            return Err(GameError::InvalidConfig("assumed flow must be positive".into()));
        }
        if !budget_share.is_positive() {
            return Err(GameError::InvalidConfig("budget share must be positive".into()));
        }
        Ok(ScaleView { root, assumed_flow, budget_share, child_height, child_target })
    }

    /// Identity view: whole tree, no scaling.
    pub fn identity(height: Height, target: Rat) -> Self {
        ScaleView {
            root: NodeId::root(),
            assumed_flow: Rat::one(),
            budget_share: Rat::one(),
            child_height: height,
            child_target: target,
        }
    }

    pub fn globalize_node(&self, local: &NodeId) -> NodeId {
        self.root.join(local)
    }

    /// The subtree game as the child sees it.
    pub fn local_state(&self, global: &GameState) -> Result<GameState, GameError> {
        if !global.config.height.contains_depth(self.root.depth()) {
            return Err(GameError::OutOfTree { node: self.root.clone() });
        }
        let config = GameConfig {
            height: self.child_height,
            root_flow: Rat::one(),
            budget: Rat::one(),
            target: self.child_target.clone(),
        };
        let mut local = GameState::new(config)?;
        for (node, w) in global.m_entries() {
            if let Some(rest) = self.root.strip_prefix(node) {
                if w.is_positive() {
                    local.m.insert(rest, w.div_exact(&self.budget_share));
                }
            }
        }
        for (node, w) in global.a_entries() {
            if let Some(rest) = self.root.strip_prefix(node) {
                if !rest.is_root() && w.is_positive() {
                    local.a.insert(rest, w.div_exact(&self.assumed_flow));
                }
            }
        }
        Ok(local)
    }

    /// Translate a child's recommended move into global coordinates.
    pub fn globalize_delta(&self, local: &MoveDelta) -> MoveDelta {
        let updates = local
            .updates
            .iter()
            .map(|(node, value)| {
                let scale = match local.player {
                    Player::M => &self.budget_share,
                    Player::A => &self.assumed_flow,
                };
                (self.globalize_node(node), value * scale)
            })
            .collect();
        MoveDelta { player: local.player, updates }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::node;

    fn unit_config(height: u64, target: Rat) -> GameConfig {
        GameConfig {
            height: Height::Bounded(height),
            root_flow: Rat::one(),
            budget: Rat::one(),
            target,
        }
    }

    fn m_move(updates: &[(&str, Rat)]) -> MoveDelta {
        MoveDelta {
            player: Player::M,
            updates: updates.iter().map(|(n, v)| (node(n), v.clone())).collect(),
        }
    }

    fn a_move(updates: &[(&str, Rat)]) -> MoveDelta {
        MoveDelta {
            player: Player::A,
            updates: updates.iter().map(|(n, v)| (node(n), v.clone())).collect(),
        }
    }

    #[test]
    fn fresh_states() {
        let s = GameState::new(unit_config(0, Rat::one())).unwrap();
        assert_eq!(s.a_weight(&NodeId::root()), Rat::one());
        assert_eq!(s.m_weight(&NodeId::root()), Rat::zero());

        let s = GameState::new(unit_config(2, Rat::new(9, 8))).unwrap();
        assert_eq!(s.best_leaf(), (node("00"), ExtRat::zero()));

        let scaled = GameState::new(GameConfig {
            height: Height::Bounded(3),
            root_flow: Rat::new(1, 2),
            budget: Rat::new(1, 4),
            target: Rat::from_int(2),
        })
        .unwrap();
        assert_eq!(scaled.a_weight(&NodeId::root()), Rat::new(1, 2));

        assert!(GameState::new(GameConfig {
            height: Height::Bounded(1),
            root_flow: Rat::zero(),
            budget: Rat::one(),
            target: Rat::one(),
        })
        .is_err());
    }

    #[test]
    fn legal_and_illegal_moves() {
        let s = GameState::new(unit_config(2, Rat::new(9, 8))).unwrap();
        let s = s
            .apply_move(&m_move(&[("0", Rat::new(1, 4)), ("00", Rat::new(1, 4))]))
            .unwrap();
        assert_eq!(s.m_total(), Rat::new(1, 2));

        let err = s
            .apply_move(&a_move(&[("0", Rat::new(3, 4)), ("1", Rat::new(3, 4))]))
            .unwrap_err();
        assert_eq!(err, GameError::FlowViolation { node: NodeId::root() });

        let s = s.apply_move(&a_move(&[("0", Rat::new(1, 2))])).unwrap();
        let err = s.apply_move(&a_move(&[("0", Rat::new(1, 4))])).unwrap_err();
        assert_eq!(err, GameError::DecreaseRejected { node: node("0") });

        let err = s.apply_move(&m_move(&[("000", Rat::one())])).unwrap_err();
        assert_eq!(err, GameError::OutOfTree { node: node("000") });

        let err = s.apply_move(&m_move(&[("1", Rat::one())])).unwrap_err();
        assert!(matches!(err, GameError::BudgetExceeded { .. }));
    }

    #[test]
    fn path_sum_examples() {
        // The 5/4 position: m(0)=1/4, m(01)=1/2 against a(0)=1, a(00)=a(01)=1/2.
        let s = GameState::new(unit_config(2, Rat::new(9, 8))).unwrap();
        let s = s
            .apply_move(&m_move(&[("0", Rat::new(1, 4)), ("01", Rat::new(1, 2))]))
            .unwrap();
        let s = s
            .apply_move(&a_move(&[
                ("0", Rat::one()),
                ("00", Rat::new(1, 2)),
                ("01", Rat::new(1, 2)),
            ]))
            .unwrap();
        assert_eq!(
            s.path_sum(&node("01")).unwrap(),
            ExtRat::Finite(Rat::new(5, 4))
        );
        assert_eq!(s.best_leaf(), (node("01"), ExtRat::Finite(Rat::new(5, 4))));
        assert!(s.is_winning_for_m()); // 5/4 >= 9/8

        // All m zero: every path sum is 0 under the 0/0 = 0 convention.
        let fresh = GameState::new(unit_config(2, Rat::one())).unwrap();
        assert_eq!(fresh.path_sum(&node("11")).unwrap(), ExtRat::zero());

        // Weight over zero flow: +inf.
        let s = fresh.apply_move(&m_move(&[("0", Rat::new(1, 4))])).unwrap();
        assert_eq!(s.path_sum(&node("00")).unwrap(), ExtRat::Infinity);
        assert!(s.is_winning_for_m());
    }

    #[test]
    fn best_leaf_tie_breaks_leftmost() {
        let s = GameState::new(unit_config(1, Rat::one())).unwrap();
        let s = s.apply_move(&m_move(&[("", Rat::one())])).unwrap();
        // Sum 1 at both leaves; leftmost wins.
        assert_eq!(s.best_leaf(), (node("0"), ExtRat::Finite(Rat::one())));
        assert!(s.is_winning_for_m());
    }

    #[test]
    fn flow_slack_examples() {
        let s = GameState::new(unit_config(2, Rat::one())).unwrap();
        assert_eq!(s.flow_slack(&NodeId::root()).unwrap(), Rat::one());
        let s = s
            .apply_move(&a_move(&[("0", Rat::new(1, 2))]))
            .unwrap();
        assert_eq!(s.flow_slack(&NodeId::root()).unwrap(), Rat::new(1, 2));
        let s = s.apply_move(&a_move(&[("1", Rat::new(1, 2))])).unwrap();
        assert_eq!(s.flow_slack(&NodeId::root()).unwrap(), Rat::zero());
        assert!(s.flow_slack(&node("00")).is_err()); // leaf
    }

    #[test]
    fn root_flow_is_fixed() {
        let s = GameState::new(unit_config(1, Rat::one())).unwrap();
        let err = s.apply_move(&a_move(&[("", Rat::new(1, 2))])).unwrap_err();
        assert_eq!(err, GameError::RootFlowChanged);
        // Restating the exact root flow is a no-op, not a violation.
        assert!(s.apply_move(&a_move(&[("", Rat::one())])).is_ok());
    }

    #[test]
    fn scale_view_translates_moves() {
        let view = ScaleView::new(
            node("0"),
            Rat::new(1, 2),
            Rat::new(1, 4),
            Height::Bounded(0),
            Rat::one(),
        )
        .unwrap();
        let local = MoveDelta {
            player: Player::M,
            updates: vec![(NodeId::root(), Rat::one())],
        };
        let global = view.globalize_delta(&local);
        assert_eq!(global.updates, vec![(node("0"), Rat::new(1, 4))]);
    }

    #[test]
    fn identity_view_is_transparent() {
        let s = GameState::new(unit_config(2, Rat::one())).unwrap();
        let s = s.apply_move(&m_move(&[("0", Rat::new(1, 4))])).unwrap();
        let s = s.apply_move(&a_move(&[("0", Rat::new(1, 2))])).unwrap();
        let view = ScaleView::identity(Height::Bounded(2), Rat::one());
        let local = view.local_state(&s).unwrap();
        assert_eq!(local.m_weight(&node("0")), Rat::new(1, 4));
        assert_eq!(local.a_weight(&node("0")), Rat::new(1, 2));
        assert_eq!(
            local.path_sum(&node("00")).unwrap(),
            s.path_sum(&node("00")).unwrap()
        );
    }
}
