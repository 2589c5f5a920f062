//! The adversary suite: flow-routing opponents used to falsify the
//! Mathematician strategies. Every adversary emits only legal moves; one that
//! cannot restore its winning condition passes, which the harness reads as
//! concession.

use super::{m_subtree_mass, spine_node, z_node, StrategyError};
use crate::cert::StrategyCert;
use crate::game::{GameState, Height, MoveDelta, Player};
use crate::rat::Rat;
use crate::tree::{node, NodeId};
use num_traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::{BTreeMap, BTreeSet};

/// An Adversary strategy: produces one legal batch of flow increases per
/// turn; an empty batch is a pass (concession if M's claim stands).
pub trait AdvStrategy {
    fn name(&self) -> String;
    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError>;
}

/// Pending flow values being built up during one adversary turn, overlaid on
/// the real state.
struct FlowDraft<'a> {
    state: &'a GameState,
    new_a: BTreeMap<NodeId, Rat>,
}

impl<'a> FlowDraft<'a> {
    fn new(state: &'a GameState) -> Self {
        FlowDraft { state, new_a: BTreeMap::new() }
    }

    fn get(&self, x: &NodeId) -> Rat {
        self.new_a.get(x).cloned().unwrap_or_else(|| self.state.a_weight(x))
    }

    fn slack(&self, x: &NodeId) -> Rat {
        self.get(x).sat_sub(&(self.get(&x.child(0)) + self.get(&x.child(1))))
    }

    fn set(&mut self, x: NodeId, v: Rat) {
        self.new_a.insert(x, v);
    }

    fn into_delta(self) -> MoveDelta {
        let FlowDraft { state, new_a } = self;
        let updates = new_a
            .into_iter()
            .filter(|(x, v)| *v > state.a_weight(x))
            .collect();
        MoveDelta { player: Player::A, updates }
    }
}

/// Subtree m-mass at every ancestor-closed node of the m-support.
fn mass_map(state: &GameState) -> BTreeMap<NodeId, Rat> {
    let mut masses: BTreeMap<NodeId, Rat> = BTreeMap::new();
    for (n, w) in state.m_entries() {
        for anc in n.ancestors() {
            let e = masses.entry(anc).or_insert_with(Rat::zero);
            *e += w;
        }
    }
    masses
}

fn mass_at(masses: &BTreeMap<NodeId, Rat>, x: &NodeId) -> Rat {
    masses.get(x).cloned().unwrap_or_else(Rat::zero)
}

/// Pushes every drop of unsent flow toward the heavier m-subtree, all the
/// way down, every turn.
pub struct GreedyAll;

pub fn greedy_all() -> GreedyAll {
    GreedyAll
}

impl AdvStrategy for GreedyAll {
    fn name(&self) -> String {
        "greedy_all".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let masses = mass_map(state);
        let mut draft = FlowDraft::new(state);
        greedy_walk(state, &masses, &NodeId::root(), &mut draft);
        Ok(draft.into_delta())
    }
}

fn greedy_walk(
    state: &GameState,
    masses: &BTreeMap<NodeId, Rat>,
    x: &NodeId,
    draft: &mut FlowDraft,
) {
    if !state.config.height.contains_depth(x.depth() + 1) {
        return;
    }
    let (c0, c1) = (x.child(0), x.child(1));
    let (m0, m1) = (mass_at(masses, &c0), mass_at(masses, &c1));
    if m0.is_zero() && m1.is_zero() {
        return;
    }
    let slack = draft.slack(x);
    if slack.is_positive() {
        let heavy = if m0 >= m1 { &c0 } else { &c1 };
        let v = draft.get(heavy) + slack;
        draft.set(heavy.clone(), v);
    }
    if m0.is_positive() {
        greedy_walk(state, masses, &c0, draft);
    }
    if m1.is_positive() {
        greedy_walk(state, masses, &c1, draft);
    }
}

/// Splits flow in proportion to the current m-snapshot's subtree masses
/// (the Proposition-1 measure applied online), monotonized by pointwise max
/// with the already-committed values and clipped to the available slack.
pub struct ProportionalOnline;

pub fn proportional_online() -> ProportionalOnline {
    ProportionalOnline
}

impl AdvStrategy for ProportionalOnline {
    fn name(&self) -> String {
        "proportional_online".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let masses = mass_map(state);
        let mut draft = FlowDraft::new(state);
        proportional_walk(state, &masses, &NodeId::root(), &mut draft);
        Ok(draft.into_delta())
    }
}

fn proportional_walk(
    state: &GameState,
    masses: &BTreeMap<NodeId, Rat>,
    x: &NodeId,
    draft: &mut FlowDraft,
) {
    if !state.config.height.contains_depth(x.depth() + 1) {
        return;
    }
    let (c0, c1) = (x.child(0), x.child(1));
    let (m0, m1) = (mass_at(masses, &c0), mass_at(masses, &c1));
    let total = &m0 + &m1;
    if total.is_zero() {
        return;
    }
    let v = draft.get(x);
    let ideal0 = &v * &m0.div_exact(&total);
    let ideal1 = &v * &m1.div_exact(&total);
    let want0 = ideal0.sat_sub(&draft.get(&c0));
    let want1 = ideal1.sat_sub(&draft.get(&c1));
    let wanted = &want0 + &want1;
    if wanted.is_positive() {
        let avail = draft.slack(x);
        let f = if avail >= wanted { Rat::one() } else { avail.div_exact(&wanted) };
        if want0.is_positive() {
            let nv = draft.get(&c0) + &want0 * &f;
            draft.set(c0.clone(), nv);
        }
        if want1.is_positive() {
            let nv = draft.get(&c1) + &want1 * &f;
            draft.set(c1.clone(), nv);
        }
    }
    if m0.is_positive() {
        proportional_walk(state, masses, &c0, draft);
    }
    if m1.is_positive() {
        proportional_walk(state, masses, &c1, draft);
    }
}

/// Knows the Mathematician's certificate and rides every threshold from
/// below: `a(0) = d_i - delta`, `a(z_i) = a_i - delta` for the deepest opened
/// subgame `i`, recursively inside each subgame. The strongest
/// certificate-informed adversary; it never fires the threat itself.
pub struct ThresholdDodger {
    cert: StrategyCert,
    delta: Rat,
}

/// `delta` defaults to 1/1000 of the smallest threshold gap of the top rung.
pub fn threshold_dodger(
    cert: &StrategyCert,
    delta: Option<Rat>,
) -> Result<ThresholdDodger, StrategyError> {
    cert.validate()
        .map_err(|e| StrategyError::Misconfigured(format!("bad certificate: {e}")))?;
    let delta = match delta {
        Some(d) => {
            if !d.is_positive() {
                return Err(StrategyError::Misconfigured("delta must be positive".into()));
            }
            d
        }
        None => {
            let mut gap: Option<Rat> = None;
            let mut prev = Rat::zero();
            for d_i in &cert.d {
                let g = d_i.sat_sub(&prev);
                gap = Some(match gap {
                    Some(cur) => cur.min(g.clone()),
                    None => g.clone(),
                });
                prev = d_i.clone();
            }
            let gap = gap.ok_or_else(|| {
                StrategyError::Misconfigured("base certificate has nothing to dodge".into())
            })?;
            gap.div_exact(&Rat::from_int(1000))
        }
    };
    Ok(ThresholdDodger { cert: cert.clone(), delta })
}

impl AdvStrategy for ThresholdDodger {
    fn name(&self) -> String {
        format!("threshold_dodger(delta={})", self.delta)
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let mut desired: BTreeMap<NodeId, Rat> = BTreeMap::new();
        dodger_desires(&self.cert, &NodeId::root(), &Rat::one(), &self.delta, state, &mut desired);
        let mut draft = FlowDraft::new(state);
        if !desired.is_empty() {
            allocate_desired(state, &desired, &NodeId::root(), &mut draft);
        }
        Ok(draft.into_delta())
    }
}

fn upsert_max(out: &mut BTreeMap<NodeId, Rat>, x: NodeId, v: Rat) {
    if !v.is_positive() {
        return;
    }
    match out.get(&x) {
        Some(cur) if *cur >= v => {}
        _ => {
            out.insert(x, v);
        }
    }
}

/// Desired flow values for dodging `cert` played at `root`, where local
/// thresholds scale by `scale` (the flow the strategy assumes at `root`).
fn dodger_desires(
    cert: &StrategyCert,
    root: &NodeId,
    scale: &Rat,
    delta: &Rat,
    state: &GameState,
    out: &mut BTreeMap<NodeId, Rat>,
) {
    if cert.is_base() {
        return;
    }
    let mut imax = 0u64;
    for j in 1..=cert.n {
        if m_subtree_mass(state, &root.join(&z_node(j))).is_positive() {
            imax = j;
        }
    }
    if imax == 0 {
        return;
    }
    let v0 = root.child(0);
    // Stay just under the live threat threshold at vertex 0.
    upsert_max(out, v0.clone(), scale * &cert.d[imax as usize - 1].sat_sub(delta));
    let child = cert.child.as_deref().expect("non-base rung has a child");
    let mut acc = Rat::zero();
    for j in (1..=imax).rev() {
        let zj = root.join(&z_node(j));
        let q = scale * &cert.aq[j as usize - 1].sat_sub(delta);
        upsert_max(out, zj.clone(), q.clone());
        // The child strategy inside z_j reads its thresholds against the
        // assumed flow a_j, so its scale is a_j times ours.
        dodger_desires(child, &zj, &(scale * &cert.aq[j as usize - 1]), delta, state, out);
        acc += &q;
        let sp = root.join(&spine_node(j));
        if sp != v0 {
            // Spine flow feeding the quotas of subgames j..imax.
            upsert_max(out, sp, acc.clone());
        }
    }
}

/// Top-down allocation of desired flows: grants are scaled down by the
/// available slack at each node, so the result is always legal and never
/// overshoots a desired value (in particular never reaches a threshold).
fn allocate_desired(
    state: &GameState,
    desired: &BTreeMap<NodeId, Rat>,
    x: &NodeId,
    draft: &mut FlowDraft,
) {
    if !state.config.height.contains_depth(x.depth() + 1) {
        return;
    }
    let (c0, c1) = (x.child(0), x.child(1));
    let (d0, d1) = (desired.get(&c0), desired.get(&c1));
    if d0.is_none() && d1.is_none() {
        return;
    }
    let want = |d: Option<&Rat>, c: &NodeId| -> Rat {
        d.map(|v| v.sat_sub(&draft.get(c))).unwrap_or_else(Rat::zero)
    };
    let (want0, want1) = (want(d0, &c0), want(d1, &c1));
    let wanted = &want0 + &want1;
    if wanted.is_positive() {
        let avail = draft.slack(x);
        let f = if avail >= wanted { Rat::one() } else { avail.div_exact(&wanted) };
        if want0.is_positive() {
            let nv = draft.get(&c0) + &want0 * &f;
            draft.set(c0.clone(), nv);
        }
        if want1.is_positive() {
            let nv = draft.get(&c1) + &want1 * &f;
            draft.set(c1.clone(), nv);
        }
    }
    if d0.is_some() {
        allocate_desired(state, desired, &c0, draft);
    }
    if d1.is_some() {
        allocate_desired(state, desired, &c1, draft);
    }
}

/// Random legal flow increases in multiples of `1/grain`, at nodes near the
/// m-support. Deterministic for a given seed.
pub struct RandomAdversary {
    rng: ChaCha20Rng,
    grain: u64,
}

pub fn random_adversary(seed: u64, grain: u64) -> RandomAdversary {
    assert!(grain > 0, "grain must be positive");
    RandomAdversary { rng: ChaCha20Rng::seed_from_u64(seed), grain }
}

impl AdvStrategy for RandomAdversary {
    fn name(&self) -> String {
        format!("random(grain={})", self.grain)
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        let mut cands: BTreeSet<NodeId> = BTreeSet::new();
        let mut consider = |n: NodeId| {
            if !n.is_root() && state.config.height.contains_depth(n.depth()) {
                cands.insert(n);
            }
        };
        for (n, _) in state.m_entries() {
            for anc in n.ancestors() {
                consider(anc.child(0));
                consider(anc.child(1));
                consider(anc);
            }
        }
        consider(node("0"));
        consider(node("1"));
        let cands: Vec<NodeId> = cands.into_iter().collect();
        if cands.is_empty() {
            return Ok(MoveDelta::pass(Player::A));
        }
        let mut draft = FlowDraft::new(state);
        let count = self.rng.gen_range(1..=3usize);
        for _ in 0..count {
            let x = cands[self.rng.gen_range(0..cands.len())].clone();
            let parent = x.parent().expect("candidates are non-root");
            let slack = draft.slack(&parent);
            let steps = (&slack * &Rat::from_int(self.grain))
                .as_big()
                .to_integer()
                .to_u64()
                .unwrap_or(0)
                .min(4 * self.grain);
            if steps == 0 {
                continue;
            }
            let t = self.rng.gen_range(0..=steps);
            if t == 0 {
                continue;
            }
            let nv = draft.get(&x) + Rat::new(t as i64, self.grain as i64);
            draft.set(x, nv);
        }
        Ok(draft.into_delta())
    }
}

/// Pours the dyadic flow `a(x) = root_flow * 2^-|x|` over the whole tree
/// (down to depth 10 in deep or unbounded games) in one move, then passes.
pub struct UniformOnce {
    fired: bool,
}

pub fn uniform_once() -> UniformOnce {
    UniformOnce { fired: false }
}

const UNIFORM_DEPTH_CAP: u64 = 10;

impl AdvStrategy for UniformOnce {
    fn name(&self) -> String {
        "uniform_once".into()
    }

    fn next_move(&mut self, state: &GameState) -> Result<MoveDelta, StrategyError> {
        if self.fired {
            return Ok(MoveDelta::pass(Player::A));
        }
        self.fired = true;
        let depth = match state.config.height {
            Height::Bounded(n) => n.min(UNIFORM_DEPTH_CAP),
            Height::Unbounded => UNIFORM_DEPTH_CAP,
        };
        let mut updates = Vec::new();
        for d in 1..=depth {
            let level = &state.config.root_flow * &Rat::new(1, 1i64 << d);
            for idx in 0..(1u64 << d) {
                let bits: Vec<u8> =
                    (0..d).rev().map(|b| ((idx >> b) & 1) as u8).collect();
                updates.push((NodeId::from_bits(bits), level.clone()));
            }
        }
        Ok(MoveDelta { player: Player::A, updates })
    }
}

/// Replays a fixed list of adversary moves, then passes.
pub struct Scripted {
    moves: Vec<MoveDelta>,
    cursor: usize,
}

pub fn scripted(moves: Vec<MoveDelta>) -> Scripted {
    Scripted { moves, cursor: 0 }
}

impl AdvStrategy for Scripted {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn next_move(&mut self, _state: &GameState) -> Result<MoveDelta, StrategyError> {
        if self.cursor < self.moves.len() {
            let mut mv = self.moves[self.cursor].clone();
            mv.player = Player::A;
            self.cursor += 1;
            Ok(mv)
        } else {
            Ok(MoveDelta::pass(Player::A))
        }
    }
}
