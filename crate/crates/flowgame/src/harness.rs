//! Match runner, trace persistence, and replay verification.
//!
//! A match alternates M and A moves, M first. Each mover must leave the
//! position winning for her side: M loses immediately if her move does not
//! restore a winning leaf; A is allowed to stand pat, but once she passes or
//! fails to restore for `grace` consecutive turns while M's claim holds, the
//! match is scored for M. The positional rule is operationalized this way
//! because "A can never restore again" is not decidable from a finite
//! position; a stalling adversary therefore yields `Undecided`, never a false
//! M win.

use crate::game::{GameConfig, GameError, GameState, MoveDelta, Player, Verdict};
use crate::rat::ExtRat;
use crate::strategy::{AdvStrategy, MathStrategy};
use crate::tree::NodeId;
use serde::{Deserialize, Serialize};

/// Runs `f` on a thread with a large stack. Certificate chains nest one
/// strategy frame per rung — several hundred for the higher ladders — which
/// overflows default stacks in unoptimized builds.
pub fn with_big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(512 << 20)
        .spawn(f)
        .expect("spawn big-stack worker")
        .join()
        .expect("big-stack worker panicked")
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("trace schema error: {0}")]
    Schema(String),
    #[error("replay divergence at event {index}: {detail}")]
    Divergence { index: u64, detail: String },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug)]
pub struct MatchCaps {
    /// Maximum number of full rounds (one M move plus one A move each).
    pub rounds: u64,
    /// Consecutive non-restoring A turns after which M's standing claim wins.
    pub grace: u64,
}

impl Default for MatchCaps {
    fn default() -> Self {
        MatchCaps { rounds: 1000, grace: 3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceHeader {
    pub format: u32,
    pub config: GameConfig,
    pub m_name: String,
    pub a_name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cert_hash: Option<String>,
    pub rounds_cap: u64,
    pub grace: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceEvent {
    pub index: u64,
    pub player: Player,
    pub delta: MoveDelta,
    /// Whether the position is winning for M after this move.
    pub winning_for_m: bool,
    /// M's standing claimed leaf after this move, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub claim: Option<NodeId>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TraceFooter {
    pub verdict: Verdict,
    pub rounds: u64,
    pub best_leaf: NodeId,
    pub best_sum: ExtRat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
    pub footer: TraceFooter,
}

/// Extra identification recorded in the trace header.
#[derive(Clone, Debug, Default)]
pub struct MatchMeta {
    pub seed: Option<u64>,
    pub cert_hash: Option<String>,
}

/// Runs a full match and records it. Strategy errors count as resignation by
/// the erring side; illegal moves lose immediately for the mover.
pub fn run_match(
    m: &mut dyn MathStrategy,
    a: &mut dyn AdvStrategy,
    config: GameConfig,
    caps: MatchCaps,
    meta: MatchMeta,
) -> Result<MatchTrace, HarnessError> {
    let header = TraceHeader {
        format: 1,
        config: config.clone(),
        m_name: m.name(),
        a_name: a.name(),
        seed: meta.seed,
        cert_hash: meta.cert_hash,
        rounds_cap: caps.rounds,
        grace: caps.grace,
    };
    let mut state = GameState::new(config)?;
    let mut events = Vec::new();
    let mut index = 0u64;
    let mut stale_a_turns = 0u64;
    let mut rounds = 0u64;

    let verdict = 'game: loop {
        if rounds == caps.rounds {
            break Verdict::Undecided { reason: "round cap reached".into() };
        }
        rounds += 1;

        // --- M's turn.
        let delta = match m.next_move(&state) {
            Ok(d) => d,
            Err(e) => break Verdict::AWins { reason: format!("M resigned: {e}") },
        };
        state = match state.apply_move(&delta) {
            Ok(s) => s,
            Err(e) => break Verdict::AWins { reason: format!("illegal M move: {e}") },
        };
        let claim = m.claim();
        let winning = state.is_winning_for_m();
        events.push(TraceEvent {
            index,
            player: Player::M,
            delta,
            winning_for_m: winning,
            claim: claim.clone(),
        });
        index += 1;
        if !winning {
            break Verdict::AWins { reason: "M failed to restore a winning position".into() };
        }

        // --- A's turn.
        let delta = match a.next_move(&state) {
            Ok(d) => d,
            Err(e) => {
                break win_for_m(&state, &claim, format!("A resigned: {e}"));
            }
        };
        state = match state.apply_move(&delta) {
            Ok(s) => s,
            Err(e) => break win_for_m(&state, &claim, format!("illegal A move: {e}")),
        };
        let winning = state.is_winning_for_m();
        events.push(TraceEvent {
            index,
            player: Player::A,
            delta,
            winning_for_m: winning,
            claim: claim.clone(),
        });
        index += 1;
        if winning {
            stale_a_turns += 1;
            if stale_a_turns >= caps.grace {
                if let Some(c) = &claim {
                    if state.path_sum(c)? >= state.config.target {
                        break 'game Verdict::MWins { leaf: c.clone() };
                    }
                }
                // No standing claim to score: fall back to the best leaf.
                break Verdict::MWins { leaf: state.best_leaf().0 };
            }
        } else {
            stale_a_turns = 0;
        }
    };

    let (best_leaf, best_sum) = state.best_leaf();
    Ok(MatchTrace {
        header,
        events,
        footer: TraceFooter { verdict, rounds, best_leaf, best_sum },
    })
}

fn win_for_m(state: &GameState, claim: &Option<NodeId>, _reason: String) -> Verdict {
    let leaf = claim.clone().unwrap_or_else(|| state.best_leaf().0);
    Verdict::MWins { leaf }
}

/// Replays a trace through a fresh referee and checks every recorded fact.
///
/// Every move is re-applied (legality re-checked), every winning flag
/// recomputed, and the footer's leaf, sum, and — when it is decidable from
/// the events alone (grace wins, round-cap draws) — the verdict are compared
/// against the recording. Resignations and illegal-move endings leave no
/// replayable move, so for those only the final position facts are checked.
pub fn verify_trace(trace: &MatchTrace) -> Result<(), HarnessError> {
    if trace.header.format != 1 {
        return Err(HarnessError::Schema(format!(
            "unsupported trace format {}",
            trace.header.format
        )));
    }
    let mut state = GameState::new(trace.header.config.clone())?;
    let mut expected_player = Player::M;
    let mut stale_a_turns = 0u64;
    let mut replay_verdict: Option<Verdict> = None;
    for ev in &trace.events {
        let fail = |detail: String| HarnessError::Divergence { index: ev.index, detail };
        if replay_verdict.is_some() {
            return Err(fail("event after the match was already decided".into()));
        }
        if ev.player != expected_player {
            return Err(fail(format!("expected {expected_player:?} to move")));
        }
        if ev.delta.player != ev.player {
            return Err(fail("delta attributed to the wrong player".into()));
        }
        state = state
            .apply_move(&ev.delta)
            .map_err(|e| fail(format!("illegal move in trace: {e}")))?;
        let winning = state.is_winning_for_m();
        if winning != ev.winning_for_m {
            return Err(fail(format!(
                "winning-for-M flag recorded as {} but replays as {winning}",
                ev.winning_for_m
            )));
        }
        match ev.player {
            Player::M => {
                if !winning {
                    replay_verdict = Some(Verdict::AWins {
                        reason: "M failed to restore a winning position".into(),
                    });
                }
            }
            Player::A => {
                if winning {
                    stale_a_turns += 1;
                    if stale_a_turns >= trace.header.grace {
                        let leaf = match &ev.claim {
                            Some(c) if state.path_sum(c)? >= state.config.target => c.clone(),
                            _ => state.best_leaf().0,
                        };
                        replay_verdict = Some(Verdict::MWins { leaf });
                    }
                } else {
                    stale_a_turns = 0;
                }
            }
        }
        expected_player = match ev.player {
            Player::M => Player::A,
            Player::A => Player::M,
        };
    }

    let last_index = trace.events.len() as u64;
    let fail = |detail: String| HarnessError::Divergence { index: last_index, detail };
    let (best_leaf, best_sum) = state.best_leaf();
    if best_leaf != trace.footer.best_leaf || best_sum != trace.footer.best_sum {
        return Err(fail(format!(
            "footer best leaf/sum {}/{} replays as {}/{}",
            trace.footer.best_leaf, trace.footer.best_sum, best_leaf, best_sum
        )));
    }
    match (&replay_verdict, &trace.footer.verdict) {
        (Some(v), recorded) if v != recorded => {
            return Err(fail(format!("verdict recorded as {recorded:?}, replays as {v:?}")));
        }
        (None, Verdict::Undecided { .. }) => {}
        (None, Verdict::MWins { leaf }) => {
            // Resignation or illegal A move: the claimed leaf must hold or be
            // the best leaf of the final position.
            let holds = state.path_sum(leaf)? >= state.config.target || *leaf == best_leaf;
            if !holds {
                return Err(fail(format!("M-win leaf {leaf} does not hold on replay")));
            }
        }
        (None, Verdict::AWins { .. }) => {
            // M resignation or illegal M move: nothing replayable to check.
        }
        _ => {}
    }
    Ok(())
}

impl MatchTrace {
    /// One JSON object per line: header, then events in order, then footer.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&Line::Header(self.header.clone())).unwrap());
        out.push('\n');
        for ev in &self.events {
            out.push_str(&serde_json::to_string(&Line::Event(ev.clone())).unwrap());
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Line::Footer(self.footer.clone())).unwrap());
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, HarnessError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut footer = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(line)
                .map_err(|e| HarnessError::Schema(format!("line {}: {e}", lineno + 1)))?;
            match parsed {
                Line::Header(h) => {
                    if header.replace(h).is_some() {
                        return Err(HarnessError::Schema("duplicate header".into()));
                    }
                }
                Line::Event(ev) => events.push(ev),
                Line::Footer(f) => {
                    if footer.replace(f).is_some() {
                        return Err(HarnessError::Schema("duplicate footer".into()));
                    }
                }
            }
        }
        Ok(MatchTrace {
            header: header.ok_or_else(|| HarnessError::Schema("missing header".into()))?,
            events,
            footer: footer.ok_or_else(|| HarnessError::Schema("missing footer".into()))?,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(TraceHeader),
    Event(TraceEvent),
    Footer(TraceFooter),
}
