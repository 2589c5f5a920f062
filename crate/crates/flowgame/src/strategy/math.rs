//! Mathematician strategies: the trivial one-move strategy, the height-2 toy
//! strategy, the certificate-driven recursive strategy, a scaling wrapper,
//! and the layered driver for the unbounded game.

use super::{pad_claim, z_node, MathStrategy, StrategyError};
use crate::cert::StrategyCert;
use crate::game::{GameState, Height, MoveDelta, Player, ScaleView};
use crate::rat::Rat;
use crate::tree::{node, NodeId};

/// Plays `m(root) = budget` on the first move and passes forever after.
/// Wins target `budget / root_flow` immediately.
pub struct TrivialStrategy {
    claimed: Option<NodeId>,
}

pub fn trivial_strategy() -> TrivialStrategy {
    TrivialStrategy { claimed: None }
}

impl MathStrategy for TrivialStrategy {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let root = NodeId::root();
        let mut updates = Vec::new();
        if state.m_weight(&root) < state.config.budget {
            updates.push((root.clone(), state.config.budget.clone()));
        }
        self.claimed = Some(pad_claim(root, state.config.height));
        Ok(MoveDelta { player: Player::M, updates })
    }

    fn claim(&self) -> Option<NodeId> {
        self.claimed.clone()
    }
}

/// The height-2 warm-up strategy: spend 1/4 on vertex 0 and 1/4 on 00, then
/// hold the remaining 1/2 to punish whichever threat the adversary concedes.
#[derive(Clone)]
pub struct ToyStrategy {
    phase: ToyPhase,
    claimed: Option<NodeId>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ToyPhase {
    Fresh,
    Watching,
    Committed,
}

pub fn toy_strategy() -> ToyStrategy {
    ToyStrategy { phase: ToyPhase::Fresh, claimed: None }
}

/// Flow at vertex 0 beyond which committing `m(1) = 1/2` suffices: the path
/// through vertex 1 earns `(1/2) / a(1)` with `a(1) <= 1 - a(0)`.
fn toy_threat_trigger(target: &Rat) -> Rat {
    Rat::one() - Rat::one().div_exact(&(&Rat::from_int(2) * target))
}

/// Flow at vertex 00 beyond which committing `m(01) = 1/2` suffices; the path
/// through 01 keeps the `1/4 / a(0)` term, hence the shifted target.
fn toy_commit_trigger(target: &Rat) -> Rat {
    let shifted = target.clone() - Rat::new(1, 4);
    Rat::one() - Rat::one().div_exact(&(&Rat::from_int(2) * &shifted))
}

impl MathStrategy for ToyStrategy {
    fn name(&self) -> String {
        "toy".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let cfg = &state.config;
        let tall_enough = match cfg.height {
            Height::Bounded(n) => n >= 2,
            Height::Unbounded => true,
        };
        if !tall_enough
            || cfg.budget != Rat::one()
            || cfg.root_flow != Rat::one()
            || cfg.target < Rat::one()
        {
            return Err(StrategyError::Misconfigured(
                "toy strategy needs the unit game of height >= 2 and target >= 1".into(),
            ));
        }
        let updates: Vec<(NodeId, Rat)> = match self.phase {
            ToyPhase::Fresh => {
                self.phase = ToyPhase::Watching;
                vec![(node("0"), Rat::new(1, 4)), (node("00"), Rat::new(1, 4))]
            }
            ToyPhase::Watching => {
                if state.a_weight(&node("0")) >= toy_threat_trigger(&cfg.target) {
                    self.phase = ToyPhase::Committed;
                    vec![(node("1"), Rat::new(1, 2))]
                } else if state.a_weight(&node("00")) >= toy_commit_trigger(&cfg.target) {
                    self.phase = ToyPhase::Committed;
                    vec![(node("01"), Rat::new(1, 2))]
                } else {
                    Vec::new()
                }
            }
            ToyPhase::Committed => Vec::new(),
        };
        let delta = MoveDelta { player: Player::M, updates };
        let after = state.apply_move(&delta)?;
        self.claimed = Some(after.best_leaf().0);
        Ok(delta)
    }

    fn claim(&self) -> Option<NodeId> {
        self.claimed.clone()
    }
}

/// Dispatch on the certificate: base rung is the trivial strategy, everything
/// above is recursive.
pub fn build_strategy(cert: &StrategyCert) -> Box<dyn MathStrategy> {
    if cert.is_base() {
        Box::new(trivial_strategy())
    } else {
        Box::new(RecursiveStrategy::new(cert.clone()))
    }
}

/// The certificate-driven strategy for target `k + eps` on the unit game.
///
/// First move: `eps` on vertex 0. Then it runs the child strategy in the
/// scaled subgame at `z_i = 0 1^(i-1) 0`, advancing to subgame `i+1` whenever
/// the adversary funds the quota `a_i` at `z_i`, and switching permanently to
/// a child instance under vertex 1 if the flow into vertex 0 ever reaches the
/// threshold `d_i`.
///
/// Each call batches internal phase switches until the standing claim is
/// restored; the adversary's weights do not change inside a batch, so the
/// batch ends after at most `n` switches.
pub struct RecursiveStrategy {
    cert: StrategyCert,
    phase: Phase,
    claimed: Option<NodeId>,
}

enum Phase {
    Fresh,
    Subgame { i: u64, view: ScaleView, child: Box<dyn MathStrategy> },
    Threat { view: ScaleView, child: Box<dyn MathStrategy> },
}

/// Runs one turn of a child strategy through its view against `scratch`,
/// applying the recommended move. Returns the child's claim in outer
/// coordinates and the amount of m-budget the move spent.
pub(crate) fn drive_child(
    child: &mut dyn MathStrategy,
    view: &ScaleView,
    scratch: &mut GameState,
) -> Result<(Option<NodeId>, Rat), StrategyError> {
    let local = view.local_state(scratch)?;
    let delta = child.next_move(&local)?;
    let mut spent = Rat::zero();
    if !delta.is_pass() {
        let global = view.globalize_delta(&delta);
        for (n, v) in &global.updates {
            spent += &v.sat_sub(&scratch.m_weight(n));
        }
        *scratch = scratch.apply_move(&global)?;
    }
    Ok((child.claim().map(|c| view.globalize_node(&c)), spent))
}

impl RecursiveStrategy {
    pub fn new(cert: StrategyCert) -> Self {
        assert!(!cert.is_base(), "use the trivial strategy for the base rung");
        RecursiveStrategy { cert, phase: Phase::Fresh, claimed: None }
    }

    pub fn cert(&self) -> &StrategyCert {
        &self.cert
    }

    fn child_cert(&self) -> &StrategyCert {
        self.cert.child.as_deref().expect("non-base rung has a child")
    }

    fn make_subgame(&self, i: u64) -> Result<Phase, StrategyError> {
        let child = self.child_cert();
        // Every subgame gets the same budget share (1 - eps)/n, which is
        // exactly the last quota a_n.
        let share =
            (Rat::one() - self.cert.eps.clone()).div_exact(&Rat::from_int(self.cert.n));
        let view = ScaleView::new(
            z_node(i),
            self.cert.aq[i as usize - 1].clone(),
            share,
            Height::Bounded(child.height),
            child.achieved_k(),
        )?;
        Ok(Phase::Subgame { i, view, child: build_strategy(child) })
    }

    fn make_threat(&self, i: u64) -> Result<Phase, StrategyError> {
        let child = self.child_cert();
        // Reserve budget of the unplayed subgames; assumed flow 1 - d_i. By
        // Eq. (*) their ratio is exactly (k + eps)/k, so the child's
        // guarantee of k under vertex 1 restores the full target.
        let flow = Rat::one() - self.cert.d[i as usize - 1].clone();
        let share = &(Rat::one() - self.cert.eps.clone())
            * &(Rat::one() - Rat::new(i as i64, self.cert.n as i64));
        let view = ScaleView::new(
            node("1"),
            flow,
            share,
            Height::Bounded(child.height),
            child.achieved_k(),
        )?;
        Ok(Phase::Threat { view, child: build_strategy(child) })
    }
}

pub fn recursive_strategy(cert: &StrategyCert) -> Result<RecursiveStrategy, StrategyError> {
    cert.validate()
        .map_err(|e| StrategyError::Misconfigured(format!("bad certificate: {e}")))?;
    if cert.is_base() {
        return Err(StrategyError::Misconfigured(
            "base certificate: use the trivial strategy".into(),
        ));
    }
    Ok(RecursiveStrategy::new(cert.clone()))
}

impl MathStrategy for RecursiveStrategy {
    fn name(&self) -> String {
        format!("recursive(k={})", self.cert.achieved_k())
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        if state.config.budget != Rat::one() || state.config.root_flow != Rat::one() {
            return Err(StrategyError::Misconfigured(
                "recursive strategy plays the unit game (budget 1, root flow 1)".into(),
            ));
        }
        let goal = self.cert.achieved_k();
        let n = self.cert.n;
        let v0 = node("0");
        let mut scratch = state.clone();

        if matches!(self.phase, Phase::Fresh) {
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
            if let Phase::Subgame { i, .. } = &self.phase {
                let i = *i;
                // Threat switch. Skipped at i = n, where d_n = 1 leaves no
                // flow for vertex 1; there the eps term alone already pays
                // eps/a(0) >= eps on top of the funded quotas.
                if i < n && scratch.a_weight(&v0) >= self.cert.d[i as usize - 1] {
                    self.phase = self.make_threat(i)?;
                    switches += 1;
                    continue;
                }
                if scratch.a_weight(&z_node(i)) >= self.cert.aq[i as usize - 1] {
                    if i == n {
                        // Funding every quota needs S > 1 flow into vertex 0.
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
                Phase::Subgame { view, child, .. } | Phase::Threat { view, child } => {
                    let (claim, _) = drive_child(child.as_mut(), view, &mut scratch)?;
                    claim
                }
                Phase::Fresh => unreachable!("phase initialized above"),
            };
            self.claimed = claim.map(|c| pad_claim(c, state.config.height));
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

/// Runs an inner strategy inside a subtree through a scaling view.
pub struct ScaledStrategy {
    inner: Box<dyn MathStrategy>,
    view: ScaleView,
    claimed: Option<NodeId>,
}

pub fn scaled(inner: Box<dyn MathStrategy>, view: ScaleView) -> ScaledStrategy {
    ScaledStrategy { inner, view, claimed: None }
}

impl MathStrategy for ScaledStrategy {
    fn name(&self) -> String {
        format!("scaled({})", self.inner.name())
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let local = self.view.local_state(state)?;
        let delta = self.inner.next_move(&local)?;
        self.claimed = self
            .inner
            .claim()
            .map(|c| pad_claim(self.view.globalize_node(&c), state.config.height));
        Ok(self.view.globalize_delta(&delta))
    }

    fn claim(&self) -> Option<NodeId> {
        self.claimed.clone()
    }
}

/// Stacks scaled recursive strategies along one growing branch of the
/// unbounded unit game: layer `j` (1-based) plays for target `2^j` with
/// budget pool `2^-j`, rooted at the previous layer's claimed node.
///
/// If a lower layer's claim moves, the layers above it are discarded and
/// later rebuilt above the new claim, spending only what is left of their
/// budget pools. Every settled layer contributes at least
/// `2^j * 2^-j = 1` to the path sum along the current branch.
pub struct LayeredDriver {
    tops: Vec<StrategyCert>,
    pools: Vec<Rat>,
    layers: Vec<Layer>,
    claimed: Option<NodeId>,
}

struct Layer {
    view: ScaleView,
    strat: Box<dyn MathStrategy>,
    claim: Option<NodeId>,
    spent: Rat,
}

pub fn layered_driver(tops: Vec<StrategyCert>) -> Result<LayeredDriver, StrategyError> {
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
    Ok(LayeredDriver { tops, pools, layers: Vec::new(), claimed: None })
}

impl LayeredDriver {
    fn make_layer(&self, idx: usize, root: NodeId) -> Result<Layer, StrategyError> {
        let cert = &self.tops[idx];
        // Assumed flow 1: any real flow at the layer root is at most 1, so
        // the layer's guarantee only improves as the flow thins out.
        let view = ScaleView::new(
            root,
            Rat::one(),
            self.pools[idx].clone(),
            Height::Bounded(cert.height),
            cert.achieved_k(),
        )?;
        Ok(Layer { view, strat: build_strategy(cert), claim: None, spent: Rat::zero() })
    }

    /// The deepest claimed node, i.e. the branch the driver is following.
    pub fn current_branch(&self) -> Option<NodeId> {
        self.claimed.clone()
    }

    pub fn settled_layers(&self) -> usize {
        self.layers.iter().filter(|l| l.claim.is_some()).count()
    }
}

impl MathStrategy for LayeredDriver {
    fn name(&self) -> String {
        "layered".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        if state.config.height != Height::Unbounded
            || state.config.budget != Rat::one()
            || state.config.root_flow != Rat::one()
        {
            return Err(StrategyError::Misconfigured(
                "layered driver plays the unbounded unit game".into(),
            ));
        }
        let mut scratch = state.clone();
        if self.layers.is_empty() {
            let layer = self.make_layer(0, NodeId::root())?;
            self.layers.push(layer);
        }
        let mut j = 0;
        while j < self.layers.len() {
            let layer = &mut self.layers[j];
            let (claim, spent) =
                drive_child(layer.strat.as_mut(), &layer.view, &mut scratch)?;
            layer.spent += &spent;
            let moved = claim != layer.claim;
            layer.claim = claim;
            if moved {
                // Layers above were rooted on the old claim; discard them and
                // charge what they spent against their pools.
                let dropped: Vec<Layer> = self.layers.drain(j + 1..).collect();
                for (off, d) in dropped.into_iter().enumerate() {
                    let idx = j + 1 + off;
                    self.pools[idx] = self.pools[idx].sat_sub(&d.spent);
                }
            }
            j += 1;
        }
        // Grow at most one layer per turn, above the last settled claim.
        let next = self.layers.len();
        if next < self.tops.len() && self.pools[next].is_positive() {
            if let Some(base) = self.layers.last().and_then(|l| l.claim.clone()) {
                let layer = self.make_layer(next, base)?;
                self.layers.push(layer);
            }
        }
        self.claimed = self.layers.iter().rev().find_map(|l| l.claim.clone());

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
