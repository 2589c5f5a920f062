//! Proportional-split measures for a fixed discrete semimeasure, and the
//! exact path-sum bound they guarantee.
//!
//! Given any fixed discrete semimeasure on a height-N tree, splitting the
//! unit flow at every node in proportion to the subtree masses yields a
//! measure whose maximum path ratio sum is at most 1, exactly.

use crate::game::{GameError, GameState};
use crate::rat::{ExtRat, Rat};
use crate::tree::NodeId;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A sparse non-negative weight function with total mass at most 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscreteSemimeasure {
    weights: BTreeMap<NodeId, Rat>,
    height: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("total mass {0:?} exceeds 1")]
    MassExceedsOne(Rat),
    #[error("node {0:?} deeper than declared height {1}")]
    TooDeep(NodeId, u64),
    #[error("bad JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    node: NodeId,
    weight: Rat,
}

impl DiscreteSemimeasure {
    pub fn new(weights: BTreeMap<NodeId, Rat>, height: u64) -> Result<Self, MeasureError> {
        let mut total = Rat::zero();
        for (node, w) in &weights {
            if node.depth() as u64 > height {
                return Err(MeasureError::TooDeep(node.clone(), height));
            }
            total += w;
        }
        if total > Rat::one() {
            return Err(MeasureError::MassExceedsOne(total));
        }
        Ok(DiscreteSemimeasure { weights, height })
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn weight(&self, node: &NodeId) -> Rat {
        self.weights.get(node).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&NodeId, &Rat)> {
        self.weights.iter()
    }

    pub fn total_mass(&self) -> Rat {
        let mut total = Rat::zero();
        for w in self.weights.values() {
            total += w;
        }
        total
    }

    /// `M_z`: the sum of weights over `z` and everything below it.
    pub fn subtree_mass(&self, z: &NodeId) -> Rat {
        let mut sum = Rat::zero();
        for (node, w) in &self.weights {
            if z.is_prefix_of(node) {
                sum += w;
            }
        }
        sum
    }

    pub fn to_json(&self) -> String {
        let entries: Vec<WeightEntry> = self
            .weights
            .iter()
            .map(|(node, weight)| WeightEntry { node: node.clone(), weight: weight.clone() })
            .collect();
        serde_json::to_string_pretty(&entries).expect("serializable")
    }

    pub fn from_json(s: &str, height: u64) -> Result<Self, MeasureError> {
        let entries: Vec<WeightEntry> = serde_json::from_str(s)?;
        let mut weights: BTreeMap<NodeId, Rat> = BTreeMap::new();
        for e in entries {
            let w = weights.get(&e.node).cloned().unwrap_or_else(Rat::zero) + e.weight;
            weights.insert(e.node, w);
        }
        Self::new(weights, height)
    }

    /// Random sparse semimeasure for the property suite: random nodes,
    /// random weights, total mass a random value at most 1.
    pub fn random<R: Rng>(rng: &mut R, height: u64) -> Self {
        let count = rng.gen_range(1..=(2 * height.max(1) as usize));
        let mut raw: BTreeMap<NodeId, u64> = BTreeMap::new();
        for _ in 0..count {
            let depth = rng.gen_range(0..=height) as usize;
            let bits: Vec<u8> = (0..depth).map(|_| rng.gen_range(0..2u8)).collect();
            *raw.entry(NodeId::from_bits(bits)).or_insert(0) += rng.gen_range(1..=64u64);
        }
        let total: u64 = raw.values().sum();
        // Scale so the total mass is scale_num/scale_den <= 1.
        let scale_num = rng.gen_range(1..=16u64);
        let weights = raw
            .into_iter()
            .map(|(node, r)| {
                (node, Rat::new((r * scale_num) as i64, (total * 16) as i64))
            })
            .collect();
        Self::new(weights, height).expect("construction is mass-bounded")
    }
}

/// An exact measure on the height-N tree: `value(root) = 1` and
/// `value(x) = value(x0) + value(x1)` at every internal node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeMeasure {
    values: BTreeMap<NodeId, Rat>,
    height: u64,
}

impl TreeMeasure {
    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn value(&self, node: &NodeId) -> Rat {
        self.values.get(node).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&NodeId, &Rat)> {
        self.values.iter()
    }

    /// The limit adversary position this measure describes, as a move batch
    /// on a fresh unit game of the same height.
    pub fn as_adversary_updates(&self) -> Vec<(NodeId, Rat)> {
        self.values
            .iter()
            .filter(|(node, v)| !node.is_root() && v.is_positive())
            .map(|(node, v)| (node.clone(), v.clone()))
            .collect()
    }
}

/// Splits the unit flow at every node in proportion to the subtree masses of
/// `m`, recursively from the root. Subtrees with zero mass are split equally,
/// which keeps the result a measure and cannot break the path-sum bound.
pub fn proportional_split(m: &DiscreteSemimeasure, height: u64) -> TreeMeasure {
    let mut values = BTreeMap::new();
    split_node(m, &NodeId::root(), Rat::one(), height, &mut values);
    TreeMeasure { values, height }
}

fn split_node(
    m: &DiscreteSemimeasure,
    x: &NodeId,
    value: Rat,
    height: u64,
    out: &mut BTreeMap<NodeId, Rat>,
) {
    out.insert(x.clone(), value.clone());
    if x.depth() as u64 >= height {
        return;
    }
    let (c0, c1) = (x.child(0), x.child(1));
    let (m0, m1) = (m.subtree_mass(&c0), m.subtree_mass(&c1));
    let total = &m0 + &m1;
    let (v0, v1) = if total.is_zero() {
        let half = value.div_exact(&Rat::from_int(2));
        (half.clone(), half)
    } else {
        (
            &value * &m0.div_exact(&total),
            &value * &m1.div_exact(&total),
        )
    };
    split_node(m, &c0, v0, height, out);
    split_node(m, &c1, v1, height, out);
}

/// Maximum over leaves of the exact path ratio sum `sum m(x)/a(x)`.
pub fn max_path_ratio_sum(m: &DiscreteSemimeasure, a: &TreeMeasure) -> ExtRat {
    assert_eq!(m.height(), a.height(), "height mismatch");
    max_from(m, a, &NodeId::root())
}

fn max_from(m: &DiscreteSemimeasure, a: &TreeMeasure, x: &NodeId) -> ExtRat {
    let ratio = ExtRat::ratio(&m.weight(x), &a.value(x));
    if x.depth() as u64 >= a.height() {
        return ratio;
    }
    let left = max_from(m, a, &x.child(0));
    let right = max_from(m, a, &x.child(1));
    ratio + left.max(right)
}

/// Replays the measure as an adversary limit position in the referee and
/// checks it is accepted (flow constraints hold, with equality).
pub fn check_legal_adversary_position(a: &TreeMeasure) -> Result<GameState, GameError> {
    use crate::game::{GameConfig, Height, MoveDelta, Player};
    let state = GameState::new(GameConfig {
        height: Height::Bounded(a.height),
        root_flow: Rat::one(),
        budget: Rat::one(),
        target: Rat::one(),
    })?;
    state.apply_move(&MoveDelta {
        player: Player::A,
        updates: a.as_adversary_updates(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::node;

    fn semimeasure(height: u64, entries: &[(&str, Rat)]) -> DiscreteSemimeasure {
        let weights = entries
            .iter()
            .map(|(n, w)| (node(n), w.clone()))
            .collect();
        DiscreteSemimeasure::new(weights, height).unwrap()
    }

    #[test]
    fn subtree_mass_examples() {
        let m = semimeasure(2, &[("0", Rat::new(1, 2))]);
        assert_eq!(m.subtree_mass(&node("0")), Rat::new(1, 2));
        assert_eq!(m.subtree_mass(&node("1")), Rat::zero());

        let m = semimeasure(
            2,
            &[
                ("", Rat::new(1, 4)),
                ("00", Rat::new(1, 4)),
                ("01", Rat::new(1, 8)),
            ],
        );
        // Direct summation: 1/4 + 1/8 below vertex 0.
        assert_eq!(m.subtree_mass(&node("0")), Rat::new(3, 8));
        assert_eq!(m.subtree_mass(&NodeId::root()), Rat::new(5, 8));
    }

    #[test]
    fn proportional_split_examples() {
        // All mass on the left: the whole flow follows it.
        let m = semimeasure(2, &[("0", Rat::new(1, 2))]);
        let a = proportional_split(&m, 2);
        assert_eq!(a.value(&node("0")), Rat::one());
        assert_eq!(a.value(&node("1")), Rat::zero());

        // Symmetric mass: equal split.
        let m = semimeasure(1, &[("0", Rat::new(1, 4)), ("1", Rat::new(1, 4))]);
        let a = proportional_split(&m, 1);
        assert_eq!(a.value(&node("0")), Rat::new(1, 2));
        assert_eq!(a.value(&node("1")), Rat::new(1, 2));

        // Root-only mass: the zero-mass rule splits equally everywhere.
        let m = semimeasure(2, &[("", Rat::one())]);
        let a = proportional_split(&m, 2);
        assert_eq!(a.value(&node("0")), Rat::new(1, 2));
        assert_eq!(a.value(&node("00")), Rat::new(1, 4));
    }

    #[test]
    fn path_ratio_examples() {
        let m = semimeasure(2, &[("0", Rat::new(1, 2))]);
        let a = proportional_split(&m, 2);
        assert_eq!(
            max_path_ratio_sum(&m, &a),
            ExtRat::Finite(Rat::new(1, 2))
        );

        let empty = semimeasure(2, &[]);
        let a = proportional_split(&empty, 2);
        assert_eq!(max_path_ratio_sum(&empty, &a), ExtRat::zero());
    }

    #[test]
    fn split_is_a_measure_and_legal_position() {
        let m = semimeasure(
            3,
            &[
                ("0", Rat::new(1, 4)),
                ("010", Rat::new(1, 8)),
                ("11", Rat::new(1, 3)),
            ],
        );
        let a = proportional_split(&m, 3);
        // Exact additivity at every internal node.
        for (x, v) in a.entries() {
            if (x.depth() as u64) < a.height() {
                assert_eq!(*v, a.value(&x.child(0)) + a.value(&x.child(1)));
            }
        }
        assert!(check_legal_adversary_position(&a).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let m = semimeasure(2, &[("0", Rat::new(1, 2)), ("01", Rat::new(1, 8))]);
        let back = DiscreteSemimeasure::from_json(&m.to_json(), 2).unwrap();
        assert_eq!(m, back);
    }
}
