//! The monotone (marked-leaf) variant of the recursive strategy, and the
//! enumeration builder on top of it.
//!
//! The ordinary recursive strategy jumps between fixed subgame roots, so its
//! claimed leaf can move left as well as right. Here every new subgame root
//! is placed *below a spine of 1s covering everything claimed so far*, so the
//! claimed node's 1-positions only ever grow. The set of 1-positions emitted
//! over time is therefore enumerated monotonically: once a position is
//! announced it is never retracted, which is exactly what makes the limit
//! branch the characteristic sequence of a computably enumerable set.

use crate::cert::StrategyCert;
use crate::game::{GameState, Height, MoveDelta, Player, ScaleView};
use crate::rat::{ExtRat, Rat};
use crate::strategy::{
    drive_child, trivial_strategy, AdvStrategy, MathStrategy, StrategyError,
};
use crate::tree::{node, NodeId};
use std::cell::Cell;
use std::collections::BTreeSet;
use std::rc::Rc;

/// A branch of the infinite tree given by its finitely many 1-positions
/// (positions are 0-based depths; all other positions are 0).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkedBranch {
    ones: BTreeSet<u64>,
}

impl MarkedBranch {
    pub fn empty() -> Self {
        MarkedBranch::default()
    }

    pub fn from_positions(ones: impl IntoIterator<Item = u64>) -> Self {
        MarkedBranch { ones: ones.into_iter().collect() }
    }

    /// The branch through a node (1-positions of its path).
    pub fn from_node(n: &NodeId) -> Self {
        MarkedBranch {
            ones: n
                .bits()
                .iter()
                .enumerate()
                .filter(|(_, &b)| b == 1)
                .map(|(p, _)| p as u64)
                .collect(),
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.ones.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.ones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ones.is_empty()
    }
}

/// `b1` is coordinate-wise below `b2`; with 0/1 branches this is exactly
/// "every 1-position of `b1` is a 1-position of `b2`".
pub fn dominates(b1: &MarkedBranch, b2: &MarkedBranch) -> bool {
    b1.ones.is_subset(&b2.ones)
}

/// The deepest 1-position, or -1 for the all-zero branch.
pub fn watermark(b: &MarkedBranch) -> i64 {
    b.ones.iter().next_back().map_or(-1, |&p| p as i64)
}

/// History of one game instance's marked leaf.
#[derive(Clone, Debug, Default)]
pub struct MarkRecord {
    history: Vec<NodeId>,
}

impl MarkRecord {
    pub fn record(&mut self, leaf: NodeId) {
        if self.history.last() != Some(&leaf) {
            self.history.push(leaf);
        }
    }

    pub fn history(&self) -> &[NodeId] {
        &self.history
    }

    /// Number of times the marked leaf moved after being first set.
    pub fn changes(&self) -> usize {
        self.history.len().saturating_sub(1)
    }

    /// Every successive marked leaf dominates its predecessor.
    pub fn is_dominance_chain(&self) -> bool {
        self.history.windows(2).all(|w| {
            dominates(&MarkedBranch::from_node(&w[0]), &MarkedBranch::from_node(&w[1]))
        })
    }
}

/// Where a new subgame is being opened relative to the current branch.
#[derive(Clone, Debug)]
pub enum Placement {
    /// The next sequential subgame under vertex 0.
    Left,
    /// The permanent threat instance under vertex 1.
    Threat,
    /// A layer restarted above a lower layer's new marked leaf.
    LayerRestart { leaf: NodeId },
}

/// Root for a new subgame, placed deep enough that its spine of 1s covers
/// every 1-position at or below `max(watermark(current), floor)`.
///
/// `floor` is extra depth already consumed by earlier placements, so new
/// roots land strictly below anything ever marked; pass -1 when there is none.
pub fn place_subgame_root(kind: &Placement, current: &MarkedBranch, floor: i64) -> NodeId {
    let w = watermark(current).max(floor);
    match kind {
        Placement::Left => {
            // 0 · 1^W · 0: under vertex 0 (the a(0) thresholds keep working)
            // and past every earlier 1.
            let mut bits = vec![0u8];
            bits.extend(std::iter::repeat(1).take(w.max(0) as usize));
            bits.push(0);
            NodeId::from_bits(bits)
        }
        Placement::Threat => {
            // 1^(W+2): under vertex 1 and dominating everything.
            NodeId::root().extend_ones((w + 2) as usize)
        }
        Placement::LayerRestart { leaf } => {
            // The path to the new marked leaf, padded with 1s to depth W+1 so
            // the restarted layer sits below every earlier 1.
            let pad = ((w + 1) - leaf.depth() as i64).max(1) as usize;
            leaf.extend_ones(pad)
        }
    }
}

/// Shared high-water mark of absolute depths touched anywhere in the match,
/// so that nested instances place their subgames past each other's claims.
pub type DepthFloor = Rc<Cell<i64>>;

pub fn depth_floor() -> DepthFloor {
    Rc::new(Cell::new(-1))
}

/// The recursive `(k+eps)`-strategy with dynamically placed subgame roots.
///
/// Plays the same quota race as the plain recursive strategy — thresholds
/// `d_i` on the flow into vertex 0, quotas `a_i` at the subgame roots — but
/// each subgame root is chosen by [`place_subgame_root`] at call time, so the
/// marked leaf history forms a dominance chain. Requires an unbounded tree:
/// the placements consume depth proportional to the adversary's activity.
pub struct MonotoneRecursiveStrategy {
    cert: StrategyCert,
    /// Absolute depth of this instance's root in the outermost tree.
    abs_depth: u64,
    floor: DepthFloor,
    /// Deepest local depth used by this instance's own placements and claims.
    frontier: i64,
    phase: MonoPhase,
    record: MarkRecord,
    claimed: Option<NodeId>,
}

enum MonoPhase {
    Fresh,
    Subgame { i: u64, root: NodeId, view: ScaleView, child: Box<dyn MathStrategy> },
    Threat { view: ScaleView, child: Box<dyn MathStrategy> },
}

pub fn monotone_recursive_strategy(
    cert: &StrategyCert,
) -> Result<MonotoneRecursiveStrategy, StrategyError> {
    cert.validate()
        .map_err(|e| StrategyError::Misconfigured(format!("bad certificate: {e}")))?;
    if cert.is_base() {
        return Err(StrategyError::Misconfigured(
            "base certificate: use the trivial strategy".into(),
        ));
    }
    Ok(MonotoneRecursiveStrategy::new(cert.clone(), 0, depth_floor()))
}

/// Child dispatch mirroring `build_strategy`: the base rung needs no
/// placements, so the plain trivial strategy already behaves monotonically.
fn monotone_child(cert: &StrategyCert, abs_depth: u64, floor: DepthFloor) -> Box<dyn MathStrategy> {
    if cert.is_base() {
        Box::new(trivial_strategy())
    } else {
        Box::new(MonotoneRecursiveStrategy::new(cert.clone(), abs_depth, floor))
    }
}

impl MonotoneRecursiveStrategy {
    pub(crate) fn new(cert: StrategyCert, abs_depth: u64, floor: DepthFloor) -> Self {
        assert!(!cert.is_base(), "use the trivial strategy for the base rung");
        MonotoneRecursiveStrategy {
            cert,
            abs_depth,
            floor,
            frontier: -1,
            phase: MonoPhase::Fresh,
            record: MarkRecord::default(),
            claimed: None,
        }
    }

    pub fn mark_record(&self) -> &MarkRecord {
        &self.record
    }

    pub fn branch(&self) -> MarkedBranch {
        self.claimed.as_ref().map(MarkedBranch::from_node).unwrap_or_default()
    }

    fn child_cert(&self) -> &StrategyCert {
        self.cert.child.as_deref().expect("non-base rung has a child")
    }

    /// Placement depth covering both this instance's own frontier and
    /// everything other instances have touched below our root.
    fn placement_floor(&self) -> i64 {
        self.frontier.max(self.floor.get() - self.abs_depth as i64)
    }

    fn raise_floors(&mut self, local_depth: i64) {
        self.frontier = self.frontier.max(local_depth);
        let abs = self.abs_depth as i64 + local_depth;
        self.floor.set(self.floor.get().max(abs));
    }

    fn make_subgame(&mut self, i: u64) -> Result<MonoPhase, StrategyError> {
        let root = place_subgame_root(&Placement::Left, &self.branch(), self.placement_floor());
        self.raise_floors(root.depth() as i64);
        let child = self.child_cert();
        let share =
            (Rat::one() - self.cert.eps.clone()).div_exact(&Rat::from_int(self.cert.n));
        let view = ScaleView::new(
            root.clone(),
            self.cert.aq[i as usize - 1].clone(),
            share,
            Height::Unbounded,
            child.achieved_k(),
        )?;
        let child = monotone_child(
            child,
            self.abs_depth + root.depth() as u64,
            self.floor.clone(),
        );
        Ok(MonoPhase::Subgame { i, root, view, child })
    }

    fn make_threat(&mut self, i: u64) -> Result<MonoPhase, StrategyError> {
        let root = place_subgame_root(&Placement::Threat, &self.branch(), self.placement_floor());
        self.raise_floors(root.depth() as i64);
        let child = self.child_cert();
        let flow = Rat::one() - self.cert.d[i as usize - 1].clone();
        let share = &(Rat::one() - self.cert.eps.clone())
            * &(Rat::one() - Rat::new(i as i64, self.cert.n as i64));
        let view = ScaleView::new(
            root.clone(),
            flow,
            share,
            Height::Unbounded,
            child.achieved_k(),
        )?;
        let child = monotone_child(
            child,
            self.abs_depth + root.depth() as u64,
            self.floor.clone(),
        );
        Ok(MonoPhase::Threat { view, child })
    }
}

impl MathStrategy for MonotoneRecursiveStrategy {
    fn name(&self) -> String {
        format!("monotone(k={})", self.cert.achieved_k())
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        if state.config.height != Height::Unbounded
            || state.config.budget != Rat::one()
            || state.config.root_flow != Rat::one()
        {
            return Err(StrategyError::Misconfigured(
                "monotone strategy plays the unbounded unit game".into(),
            ));
        }
        let goal = self.cert.achieved_k();
        let n = self.cert.n;
        let v0 = node("0");
        let mut scratch = state.clone();

        if matches!(self.phase, MonoPhase::Fresh) {
            let eps = self.cert.eps.clone();
            if scratch.m_weight(&v0) < eps {
                scratch = scratch.apply_move(&MoveDelta {
                    player: Player::M,
                    updates: vec![(v0.clone(), eps)],
                })?;
            }
            self.phase = self.make_subgame(1)?;
        }

        let mut switches = 0u64;
        loop {
            if switches > n + 2 {
                return Err(StrategyError::InternalExhaustion(
                    "phase switches exceeded the certificate bound".into(),
                ));
            }
            if let MonoPhase::Subgame { i, root, .. } = &self.phase {
                let (i, root) = (*i, root.clone());
                if i < n && scratch.a_weight(&v0) >= self.cert.d[i as usize - 1] {
                    self.phase = self.make_threat(i)?;
                    switches += 1;
                    continue;
                }
                if scratch.a_weight(&root) >= self.cert.aq[i as usize - 1] {
                    if i == n {
                        // The placed roots are pairwise incomparable under
                        // vertex 0, so funding all n quotas needs S > 1 flow.
                        return Err(StrategyError::InternalExhaustion(
                            "adversary funded all n quotas, contradicting S > 1".into(),
                        ));
                    }
                    self.phase = self.make_subgame(i + 1)?;
                    switches += 1;
                    continue;
                }
            }
            // Fast path: no trigger fired and the standing claim still meets
            // the goal, so there is nothing to restore. Skipping the child
            // keeps steady-state turns cheap on deep certificate chains.
            if switches == 0 {
                if let Some(c) = &self.claimed {
                    if scratch.path_sum(c)? >= goal {
                        break;
                    }
                }
            }
            let claim = match &mut self.phase {
                MonoPhase::Subgame { view, child, .. } | MonoPhase::Threat { view, child } => {
                    let (claim, _) = drive_child(child.as_mut(), view, &mut scratch)?;
                    claim
                }
                MonoPhase::Fresh => unreachable!("phase initialized above"),
            };
            if let Some(c) = &claim {
                self.raise_floors(c.depth() as i64);
                self.record.record(c.clone());
            }
            self.claimed = claim;
            if let Some(c) = &self.claimed {
                if scratch.path_sum(c)? >= goal {
                    break;
                }
            }
            switches += 1;
        }

        let mut updates = Vec::new();
        for (node, w) in scratch.m_entries() {
            if *w != state.m_weight(node) {
                updates.push((node.clone(), w.clone()));
            }
        }
        Ok(MoveDelta { player: Player::M, updates })
    }

    fn claim(&self) -> Option<NodeId> {
        self.claimed.clone()
    }
}

/// One enumeration event: at round `round`, position `position` of the limit
/// branch was announced to be 1.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CeEvent {
    pub round: u64,
    #[serde(rename = "set")]
    pub position: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CeVerdict {
    /// Both players passed; nothing will change any more.
    Settled { rounds: u64 },
    /// The round cap ran out first; partial results reported.
    Undecided { rounds: u64 },
}

#[derive(Debug)]
pub struct CeReport {
    pub verdict: CeVerdict,
    /// The current branch as a node path (prefix of the limit branch).
    pub branch_prefix: NodeId,
    /// Claimed local sum of each settled layer.
    pub layer_sums: Vec<ExtRat>,
    /// Path sum along the branch prefix with the adversary's actual flows.
    pub branch_sum: ExtRat,
    pub events: Vec<CeEvent>,
    /// True iff no emitted position was ever retracted (checked every round).
    pub monotone_ok: bool,
}

struct CeLayer {
    view: ScaleView,
    strat: Box<dyn MathStrategy>,
    claim: Option<NodeId>,
    spent: Rat,
}

/// Plays the layered composition with monotone layers against an adversary,
/// emitting the 1-positions of the current branch as they appear.
///
/// Layer `j` (1-based) plays for target `2^j` with budget pool `2^-j`; when a
/// lower layer's marked leaf moves, the layers above are discarded (their
/// spend stays charged to their pools) and restarted above the new leaf.
pub fn ce_builder(
    tops: Vec<StrategyCert>,
    adversary: &mut dyn AdvStrategy,
    round_cap: u64,
) -> Result<CeReport, StrategyError> {
    if tops.is_empty() {
        return Err(StrategyError::Misconfigured("need at least one layer".into()));
    }
    let mut pools = Vec::with_capacity(tops.len());
    for (idx, cert) in tops.iter().enumerate() {
        cert.validate()
            .map_err(|e| StrategyError::Misconfigured(format!("layer {}: {e}", idx + 1)))?;
        let goal = Rat::from_int(1u64 << (idx as u32 + 1));
        if cert.achieved_k() < goal {
            return Err(StrategyError::Misconfigured(format!(
                "layer {} certificate reaches {} < required {goal}",
                idx + 1,
                cert.achieved_k()
            )));
        }
        pools.push(Rat::new(1, 1i64 << (idx as u32 + 1)));
    }

    let floor = depth_floor();
    let mut state = GameState::new(crate::game::GameConfig {
        height: Height::Unbounded,
        root_flow: Rat::one(),
        budget: Rat::one(),
        target: Rat::from_int(1u64 << tops.len() as u32),
    })?;
    let mut layers: Vec<CeLayer> = Vec::new();
    let mut emitted: BTreeSet<u64> = BTreeSet::new();
    let mut events: Vec<CeEvent> = Vec::new();
    let mut monotone_ok = true;
    let mut quiet_rounds = 0u64;
    let mut rounds = 0u64;

    let make_layer = |tops: &[StrategyCert],
                      pools: &[Rat],
                      floor: &DepthFloor,
                      idx: usize,
                      root: NodeId|
     -> Result<CeLayer, StrategyError> {
        let cert = &tops[idx];
        let view = ScaleView::new(
            root.clone(),
            Rat::one(),
            pools[idx].clone(),
            Height::Unbounded,
            cert.achieved_k(),
        )?;
        let strat = monotone_child(cert, root.depth() as u64, floor.clone());
        Ok(CeLayer { view, strat, claim: None, spent: Rat::zero() })
    };

    while rounds < round_cap {
        rounds += 1;
        // --- M's turn: drive the layer stack.
        let before = state.clone();
        if layers.is_empty() {
            layers.push(make_layer(&tops, &pools, &floor, 0, NodeId::root())?);
        }
        let mut j = 0;
        while j < layers.len() {
            let layer = &mut layers[j];
            let (claim, spent) = drive_child(layer.strat.as_mut(), &layer.view, &mut state)?;
            layer.spent += &spent;
            let moved = claim != layer.claim;
            layer.claim = claim;
            if moved {
                let dropped: Vec<CeLayer> = layers.drain(j + 1..).collect();
                for (off, d) in dropped.into_iter().enumerate() {
                    let idx = j + 1 + off;
                    pools[idx] = pools[idx].sat_sub(&d.spent);
                }
            }
            j += 1;
        }
        let next = layers.len();
        if next < tops.len() && pools[next].is_positive() {
            if let Some(base) = layers.last().and_then(|l| l.claim.clone()) {
                let current = MarkedBranch::from_node(&base);
                let root = place_subgame_root(
                    &Placement::LayerRestart { leaf: base },
                    &current,
                    floor.get(),
                );
                floor.set(floor.get().max(root.depth() as i64));
                layers.push(make_layer(&tops, &pools, &floor, next, root)?);
            }
        }
        let m_passed = state.m_entries().count() == before.m_entries().count()
            && state
                .m_entries()
                .all(|(n, w)| before.m_weight(n) == *w);

        // --- Emit the 1-positions of the current branch.
        if let Some(branch) = layers.iter().rev().find_map(|l| l.claim.clone()) {
            let ones = MarkedBranch::from_node(&branch);
            if !emitted.iter().all(|p| ones.ones.contains(p)) {
                monotone_ok = false;
            }
            for p in ones.ones() {
                if emitted.insert(p) {
                    events.push(CeEvent { round: rounds, position: p });
                }
            }
        }

        // --- A's turn.
        let delta = adversary.next_move(&state)?;
        let a_passed = delta.is_pass();
        if !a_passed {
            state = state.apply_move(&delta)?;
        }

        if m_passed && a_passed {
            quiet_rounds += 1;
            if quiet_rounds >= 2 {
                break;
            }
        } else {
            quiet_rounds = 0;
        }
    }

    let settled = quiet_rounds >= 2;
    let branch_prefix = layers
        .iter()
        .rev()
        .find_map(|l| l.claim.clone())
        .unwrap_or_else(NodeId::root);
    let mut layer_sums = Vec::new();
    for layer in &layers {
        match &layer.claim {
            Some(c) => {
                let local = layer.view.local_state(&state)?;
                let local_claim = layer
                    .view
                    .root
                    .strip_prefix(c)
                    .expect("layer claim lies under its root");
                layer_sums.push(local.path_sum(&local_claim)?);
            }
            None => layer_sums.push(ExtRat::Finite(Rat::zero())),
        }
    }
    let branch_sum = state.path_sum(&branch_prefix)?;
    Ok(CeReport {
        verdict: if settled {
            CeVerdict::Settled { rounds }
        } else {
            CeVerdict::Undecided { rounds }
        },
        branch_prefix,
        layer_sums,
        branch_sum,
        events,
        monotone_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::{build_cert, ladder};
    use crate::game::GameConfig;
    use crate::strategy::{proportional_online, threshold_dodger};

    fn unbounded_unit(target: Rat) -> GameState {
        GameState::new(GameConfig {
            height: Height::Unbounded,
            root_flow: Rat::one(),
            budget: Rat::one(),
            target,
        })
        .unwrap()
    }

    #[test]
    fn dominance_and_watermark() {
        let empty = MarkedBranch::empty();
        let b25 = MarkedBranch::from_positions([2, 5]);
        let b2 = MarkedBranch::from_positions([2]);
        let b5 = MarkedBranch::from_positions([5]);
        assert!(dominates(&empty, &b5));
        assert!(dominates(&b2, &b25));
        assert!(!dominates(&b2, &b5));
        assert_eq!(watermark(&empty), -1);
        assert_eq!(watermark(&MarkedBranch::from_positions([0, 7])), 7);
    }

    #[test]
    fn placement_rules() {
        let empty = MarkedBranch::empty();
        assert_eq!(place_subgame_root(&Placement::Left, &empty, -1), node("00"));
        let b = MarkedBranch::from_positions([4]);
        let left = place_subgame_root(&Placement::Left, &b, -1);
        assert_eq!(left, node("011110"));
        // The new root's spine dominates any old branch with ones <= 4.
        assert!(dominates(&b, &MarkedBranch::from_node(&left)));
        assert_eq!(place_subgame_root(&Placement::Threat, &b, -1), node("111111"));
        // Restart above a marked leaf: padded with 1s to depth W+1.
        let restart = place_subgame_root(
            &Placement::LayerRestart { leaf: node("010") },
            &b,
            -1,
        );
        assert_eq!(restart, node("01011"));
    }

    #[test]
    fn marked_leaf_set_once_vs_silent_adversary() {
        let rung = build_cert(StrategyCert::base()).unwrap();
        let mut m = monotone_recursive_strategy(&rung).unwrap();
        let mut s = unbounded_unit(rung.achieved_k());
        for _ in 0..3 {
            s = s.apply_move(&m.next_move(&s).unwrap()).unwrap();
        }
        assert_eq!(m.mark_record().history().len(), 1);
        assert!(s.path_sum(&m.claim().unwrap()).unwrap() >= rung.achieved_k());
    }

    #[test]
    fn dominance_chain_vs_dodger() {
        let two = ladder(&Rat::from_int(2)).unwrap().top;
        let mut m = monotone_recursive_strategy(&two).unwrap();
        let mut a = threshold_dodger(&two, None).unwrap();
        let mut s = unbounded_unit(two.achieved_k());
        for _ in 0..6 {
            s = s.apply_move(&m.next_move(&s).unwrap()).unwrap();
            assert!(s.path_sum(&m.claim().unwrap()).unwrap() >= two.achieved_k());
            let d = a.next_move(&s).unwrap();
            s = s.apply_move(&d).unwrap();
        }
        let record = m.mark_record();
        assert!(record.is_dominance_chain());
        assert!(record.changes() as u64 <= two.n + 1);
        assert!(s.m_total() <= Rat::one());
    }

    #[test]
    fn quota_race_advances_monotonically() {
        let rung = build_cert(StrategyCert::base()).unwrap();
        let mut m = monotone_recursive_strategy(&rung).unwrap();
        let mut s = unbounded_unit(rung.achieved_k());
        s = s.apply_move(&m.next_move(&s).unwrap()).unwrap();
        let first = m.claim().unwrap();
        // Fund the quota at the first placed root "00" with a legal flow.
        let q = rung.aq[0].clone();
        s = s
            .apply_move(&MoveDelta {
                player: Player::A,
                updates: vec![(node("0"), q.clone()), (node("00"), q)],
            })
            .unwrap();
        s = s.apply_move(&m.next_move(&s).unwrap()).unwrap();
        let second = m.claim().unwrap();
        assert_ne!(first, second);
        assert!(dominates(
            &MarkedBranch::from_node(&first),
            &MarkedBranch::from_node(&second)
        ));
        // The second subgame sits strictly below the first one's region.
        assert!(second.depth() > first.depth());
        assert!(s.path_sum(&second).unwrap() >= rung.achieved_k());
        assert!(m.mark_record().is_dominance_chain());
    }

    #[test]
    fn ce_builder_silent_adversary() {
        let report = crate::harness::with_big_stack(|| {
            let l2 = ladder(&Rat::from_int(2)).unwrap().top;
            let l4 = ladder(&Rat::from_int(4)).unwrap().top;
            let mut silent = crate::strategy::scripted(Vec::new());
            ce_builder(vec![l2, l4], &mut silent, 50).unwrap()
        });
        assert!(matches!(report.verdict, CeVerdict::Settled { .. }));
        assert!(report.monotone_ok);
        assert_eq!(report.branch_sum, ExtRat::Infinity);
        // Emissions are exactly the ones on the final branch.
        let final_ones = MarkedBranch::from_node(&report.branch_prefix);
        for ev in &report.events {
            assert!(final_ones.ones.contains(&ev.position));
        }
    }

    #[test]
    fn ce_builder_vs_proportional() {
        let report = crate::harness::with_big_stack(|| {
            let l2 = ladder(&Rat::from_int(2)).unwrap().top;
            let l4 = ladder(&Rat::from_int(4)).unwrap().top;
            let mut a = proportional_online();
            ce_builder(vec![l2, l4], &mut a, 200).unwrap()
        });
        assert!(report.monotone_ok);
        // Emission rounds are nondecreasing and never retracted by replay.
        assert!(report.events.windows(2).all(|w| w[0].round <= w[1].round));
        match &report.branch_sum {
            ExtRat::Infinity => {}
            ExtRat::Finite(v) => assert!(*v >= Rat::from_int(2)),
        }
    }
}
