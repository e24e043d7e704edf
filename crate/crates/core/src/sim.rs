//! CORDA execution with instantaneous moves.
//!
//! A robot's cycle is split into two scheduler actions: `Activate` (Look and
//! Compute, storing the decision) and `Fire` (Move). Anything that happens
//! between the two makes the stored decision outdated, which is exactly the
//! hazard of the asynchronous model.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ProtocolError, SimError, TraceError};
use crate::protocol::{
    local_decide_cached, summary_cached, LocalDecision, Phase, Tag, ViewDirection,
};
use crate::ring::{RingConfig, SymmetryClass};

pub type RobotId = usize;

/// A stored decision, already mapped to ring nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Intent {
    Stay,
    To(usize),
    /// Either neighbor; the scheduler picks at Fire time.
    Either(usize, usize),
}

impl Intent {
    pub fn is_move(self) -> bool {
        !matches!(self, Intent::Stay)
    }

    pub fn targets(self) -> Vec<usize> {
        match self {
            Intent::Stay => Vec::new(),
            Intent::To(t) => vec![t],
            Intent::Either(a, b) => vec![a, b],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PendingIntent {
    pub robot: RobotId,
    pub snapshot_step: u64,
    /// Number of moves executed before the snapshot.
    pub snapshot_moves: u64,
    pub target: Intent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchedulerAction {
    Activate(RobotId),
    /// Fire a pending intent; the node is required for two-way intents and
    /// ignored otherwise.
    Fire(RobotId, Option<usize>),
}

impl SchedulerAction {
    pub fn robot(self) -> RobotId {
        match self {
            SchedulerAction::Activate(r) | SchedulerAction::Fire(r, _) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    pub cfg: RingConfig,
    pub positions: Vec<usize>,
    pub pending: Vec<Option<PendingIntent>>,
    pub step: u64,
    pub round: u64,
    /// Robots that completed a Move phase in the current round.
    pub cycle_progress: Vec<bool>,
    pub moves: u64,
    /// Step of each robot's last Fire (0 before the first).
    pub last_fire: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Activate,
    Fire,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: EventKind,
    pub robot: RobotId,
    pub from: usize,
    pub to: Option<usize>,
    pub occ: String,
    pub tag: Tag,
    pub round: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Gathered,
    StepLimit,
    Stuck,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub n: usize,
    pub k: usize,
    pub scheduler: String,
    pub seed: Option<u64>,
    pub fairness_bound: u64,
    pub initial: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub outcome: Outcome,
    pub rounds: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub initial: RingConfig,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
    pub rounds: u64,
}

impl SimState {
    /// Robots get ids in increasing node order.
    pub fn new(cfg: RingConfig) -> SimState {
        let positions: Vec<usize> = cfg
            .occ()
            .iter()
            .enumerate()
            .flat_map(|(v, &c)| std::iter::repeat_n(v, c as usize))
            .collect();
        let k = positions.len();
        SimState {
            cfg,
            positions,
            pending: vec![None; k],
            step: 0,
            round: 0,
            cycle_progress: vec![false; k],
            moves: 0,
            last_fire: vec![0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.positions.len()
    }

    /// The decision `robot` would store if activated now.
    pub fn decide(&self, robot: RobotId) -> Intent {
        intent_at(&self.cfg, self.positions[robot]).unwrap_or(Intent::Stay)
    }

    /// Pending intents whose snapshot predates a later move.
    pub fn is_outdated(&self, p: &PendingIntent) -> bool {
        self.moves > p.snapshot_moves
    }

    pub fn has_pending_move(&self) -> bool {
        self.pending.iter().flatten().any(|p| p.target.is_move())
    }

    pub fn is_gathered(&self) -> bool {
        self.cfg.occupied_count() == 1 && !self.has_pending_move()
    }

    /// Applies one action in place and returns the resulting event.
    pub fn apply(&mut self, action: SchedulerAction) -> Result<TraceEvent, SimError> {
        let step = self.step;
        let r = action.robot();
        let from = self.positions.get(r).copied().unwrap_or(0);
        let to = self.apply_quiet(action)?;
        Ok(TraceEvent {
            step,
            kind: match action {
                SchedulerAction::Activate(_) => EventKind::Activate,
                SchedulerAction::Fire(..) => EventKind::Fire,
            },
            robot: r,
            from,
            to,
            occ: self.cfg.to_string(),
            tag: summary_cached(&self.cfg).0,
            round: self.round,
        })
    }

    /// [`SimState::apply`] without building the event; returns the node
    /// moved to, if any.
    pub fn apply_quiet(&mut self, action: SchedulerAction) -> Result<Option<usize>, SimError> {
        let k = self.k();
        let r = action.robot();
        if r >= k {
            return Err(SimError::ContractViolation(format!("no robot {r}")));
        }
        let from = self.positions[r];
        let step = self.step;
        let to = match action {
            SchedulerAction::Activate(_) => {
                if self.pending[r].is_some() {
                    return Err(SimError::ContractViolation(format!(
                        "activate of robot {r} with a pending intent"
                    )));
                }
                self.pending[r] = Some(PendingIntent {
                    robot: r,
                    snapshot_step: step,
                    snapshot_moves: self.moves,
                    target: self.decide(r),
                });
                None
            }
            SchedulerAction::Fire(_, choice) => {
                let Some(p) = self.pending[r].take() else {
                    return Err(SimError::ContractViolation(format!(
                        "fire of robot {r} without a pending intent"
                    )));
                };
                let to = match p.target {
                    Intent::Stay => None,
                    Intent::To(t) => Some(t),
                    Intent::Either(a, b) => match choice {
                        Some(c) if c == a || c == b => Some(c),
                        _ => {
                            self.pending[r] = Some(p);
                            return Err(SimError::ContractViolation(format!(
                                "robot {r} needs a direction among {a} and {b}"
                            )));
                        }
                    },
                };
                if let Some(t) = to {
                    self.cfg.remove_robot(from)?;
                    self.cfg.add_robot(t);
                    self.positions[r] = t;
                    self.moves += 1;
                }
                self.last_fire[r] = step + 1;
                self.cycle_progress[r] = true;
                if self.cycle_progress.iter().all(|&d| d) {
                    self.round += 1;
                    self.cycle_progress.iter_mut().for_each(|d| *d = false);
                }
                to
            }
        };
        self.step += 1;
        Ok(to)
    }

    /// Every valid action, with both directions for two-way intents.
    pub fn valid_actions(&self) -> Vec<SchedulerAction> {
        let mut out = Vec::new();
        for (r, p) in self.pending.iter().enumerate() {
            match p {
                None => out.push(SchedulerAction::Activate(r)),
                Some(p) => match p.target {
                    Intent::Either(a, b) => {
                        out.push(SchedulerAction::Fire(r, Some(a)));
                        out.push(SchedulerAction::Fire(r, Some(b)));
                    }
                    _ => out.push(SchedulerAction::Fire(r, None)),
                },
            }
        }
        out
    }

    /// True when nothing can ever move again short of gathering.
    pub fn is_stuck(&self) -> bool {
        !self.is_gathered() && !self.has_pending_move() && !summary_cached(&self.cfg).1
    }
}

/// The local decision of a robot on node `v`, mapped to ring nodes. A
/// one-way decision read from a symmetric view cannot be told apart from its
/// mirror, so it becomes two-way.
pub fn intent_at(cfg: &RingConfig, v: usize) -> Result<Intent, ProtocolError> {
    let n = cfg.n();
    let view = cfg.compute_view(v)?;
    let (fwd, back) = ((v + 1) % n, (v + n - 1) % n);
    Ok(match local_decide_cached(&view)? {
        LocalDecision::Stay => Intent::Stay,
        LocalDecision::MoveEither => Intent::Either(back, fwd),
        LocalDecision::Move(dir) => match (cfg.view_orientation(v)?, dir) {
            (Ordering::Equal, _) => Intent::Either(back, fwd),
            (Ordering::Greater, ViewDirection::Forward)
            | (Ordering::Less, ViewDirection::Backward) => Intent::To(fwd),
            _ => Intent::To(back),
        },
    })
}

/// Functional form of [`SimState::apply`].
pub fn step(state: &SimState, action: SchedulerAction) -> Result<SimState, SimError> {
    let mut s = state.clone();
    s.apply(action)?;
    Ok(s)
}

/// Parameters shared by all runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunLimits {
    pub max_steps: u64,
    /// Every robot completes a cycle at least once every this many steps.
    pub fairness_bound: u64,
    /// Skip the k/n size constraints (tests on small rings).
    pub relaxed: bool,
}

impl RunLimits {
    pub fn for_k(k: usize) -> RunLimits {
        RunLimits {
            max_steps: 5_000_000,
            fairness_bound: 4 * k as u64,
            relaxed: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerKind {
    Synchronous,
    RandomFair { seed: u64 },
    Lazy { seed: u64 },
    Exhaustive { depth: usize },
}

impl SchedulerKind {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Synchronous => "synchronous",
            SchedulerKind::RandomFair { .. } => "random",
            SchedulerKind::Lazy { .. } => "lazy",
            SchedulerKind::Exhaustive { .. } => "exhaustive",
        }
    }

    pub fn seed(self) -> Option<u64> {
        match self {
            SchedulerKind::RandomFair { seed } | SchedulerKind::Lazy { seed } => Some(seed),
            _ => None,
        }
    }
}

/// Resolves a scheduler name. `depth` is only used by `exhaustive`.
pub fn builtin_scheduler(name: &str, seed: u64, depth: usize) -> Result<SchedulerKind, SimError> {
    match name {
        "synchronous" | "sync" => Ok(SchedulerKind::Synchronous),
        "random" | "random_fair" => Ok(SchedulerKind::RandomFair { seed }),
        "lazy" => Ok(SchedulerKind::Lazy { seed }),
        "exhaustive" => Ok(SchedulerKind::Exhaustive { depth }),
        other => Err(SimError::UnknownScheduler(other.to_string())),
    }
}

/// A scheduling policy driving one run.
pub trait Scheduler {
    fn propose(&mut self, state: &SimState) -> SchedulerAction;
    /// Direction for a two-way intent fired on the policy's behalf.
    fn choose(&mut self, state: &SimState, robot: RobotId, a: usize, b: usize) -> usize;
}

fn fire_action(sched: &mut dyn Scheduler, state: &SimState, r: RobotId) -> SchedulerAction {
    let choice = match state.pending[r].map(|p| p.target) {
        Some(Intent::Either(a, b)) => Some(sched.choose(state, r, a, b)),
        _ => None,
    };
    SchedulerAction::Fire(r, choice)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Look,
    Move,
}

/// All robots look, then all robots move.
pub struct Synchronous {
    mode: Mode,
}

impl Synchronous {
    pub fn new() -> Synchronous {
        Synchronous { mode: Mode::Look }
    }
}

impl Default for Synchronous {
    fn default() -> Self {
        Synchronous::new()
    }
}

impl Scheduler for Synchronous {
    fn propose(&mut self, state: &SimState) -> SchedulerAction {
        if self.mode == Mode::Look {
            if let Some(r) = state.pending.iter().position(Option::is_none) {
                return SchedulerAction::Activate(r);
            }
            self.mode = Mode::Move;
        }
        match state.pending.iter().position(Option::is_some) {
            Some(r) => fire_action(self, state, r),
            None => {
                self.mode = Mode::Look;
                SchedulerAction::Activate(0)
            }
        }
    }

    fn choose(&mut self, _: &SimState, _: RobotId, a: usize, _: usize) -> usize {
        a
    }
}

/// Uniformly random valid action.
pub struct RandomFair {
    rng: ChaCha8Rng,
}

impl RandomFair {
    pub fn new(seed: u64) -> RandomFair {
        RandomFair {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Scheduler for RandomFair {
    fn propose(&mut self, state: &SimState) -> SchedulerAction {
        let r = self.rng.gen_range(0..state.k());
        if state.pending[r].is_none() {
            SchedulerAction::Activate(r)
        } else {
            fire_action(self, state, r)
        }
    }

    fn choose(&mut self, _: &SimState, _: RobotId, a: usize, b: usize) -> usize {
        if self.rng.gen_bool(0.5) {
            a
        } else {
            b
        }
    }
}

/// Synchronous-like rounds, except that one robot with a pending move is
/// held back until fairness forces it, so it fires on a stale snapshot.
pub struct Lazy {
    rng: ChaCha8Rng,
    mode: Mode,
    victim: Option<RobotId>,
}

impl Lazy {
    pub fn new(seed: u64) -> Lazy {
        Lazy {
            rng: ChaCha8Rng::seed_from_u64(seed),
            mode: Mode::Look,
            victim: None,
        }
    }
}

impl Scheduler for Lazy {
    fn propose(&mut self, state: &SimState) -> SchedulerAction {
        if let Some(v) = self.victim {
            if state.pending[v].is_none() {
                self.victim = None;
            }
        }
        if self.mode == Mode::Look {
            if let Some(r) = state.pending.iter().position(Option::is_none) {
                return SchedulerAction::Activate(r);
            }
            self.mode = Mode::Move;
            if self.victim.is_none() {
                let movers: Vec<RobotId> = (0..state.k())
                    .filter(|&r| state.pending[r].is_some_and(|p| p.target.is_move()))
                    .collect();
                if !movers.is_empty() {
                    self.victim = Some(movers[self.rng.gen_range(0..movers.len())]);
                }
            }
        }
        let next = (0..state.k()).find(|&r| state.pending[r].is_some() && Some(r) != self.victim);
        match next {
            Some(r) => fire_action(self, state, r),
            None => {
                self.mode = Mode::Look;
                match state.pending.iter().position(Option::is_none) {
                    Some(r) => SchedulerAction::Activate(r),
                    // Only the victim is left and everyone else is waiting.
                    None => {
                        let v = self.victim.expect("victim pending");
                        fire_action(self, state, v)
                    }
                }
            }
        }
    }

    fn choose(&mut self, _: &SimState, _: RobotId, a: usize, b: usize) -> usize {
        if self.rng.gen_bool(0.5) {
            a
        } else {
            b
        }
    }
}

/// Checks the protocol's preconditions on a starting configuration.
pub fn validate_initial(cfg: &RingConfig, relaxed: bool) -> Result<(), ConfigError> {
    let (n, k) = (cfg.n(), cfg.k());
    if k == 0 {
        return Err(ConfigError::NoRobots);
    }
    if !relaxed {
        validate_sizes(n, k)?;
    }
    let tag = summary_cached(cfg).0;
    if matches!(tag.phase(), Some(Phase::Phase3 | Phase::Done)) {
        return Ok(());
    }
    if !cfg.is_towerless() {
        return Err(ConfigError::Tower);
    }
    if cfg.classify_symmetry().cfg_class == SymmetryClass::Periodic {
        return Err(ConfigError::Periodic);
    }
    Ok(())
}

/// The size and parity constraints on `(n, k)`.
pub fn validate_sizes(n: usize, k: usize) -> Result<(), ConfigError> {
    if k % 2 == 1 {
        return Err(ConfigError::OddRobots(k));
    }
    if k <= 8 {
        return Err(ConfigError::TooFewRobots(k));
    }
    if n.is_multiple_of(2) {
        return Err(ConfigError::EvenRing(n));
    }
    if n <= k + 3 {
        return Err(ConfigError::RingTooSmall { n, k });
    }
    Ok(())
}

/// Runs to completion, recording every event.
pub fn run(
    initial: &RingConfig,
    kind: SchedulerKind,
    limits: RunLimits,
) -> Result<Trace, SimError> {
    let mut events = Vec::new();
    let (outcome, rounds) = run_with(initial, kind, limits, |e| events.push(e))?;
    Ok(Trace {
        header: header_for(initial, kind, limits),
        initial: initial.clone(),
        events,
        outcome,
        rounds,
    })
}

fn header_for(initial: &RingConfig, kind: SchedulerKind, limits: RunLimits) -> TraceHeader {
    TraceHeader {
        n: initial.n(),
        k: initial.k(),
        scheduler: kind.name().to_string(),
        seed: kind.seed(),
        fairness_bound: limits.fairness_bound,
        initial: initial.to_string(),
    }
}

/// Runs to completion, streaming events to `sink`.
pub fn run_with(
    initial: &RingConfig,
    kind: SchedulerKind,
    limits: RunLimits,
    mut sink: impl FnMut(TraceEvent),
) -> Result<(Outcome, u64), SimError> {
    validate_initial(initial, limits.relaxed)?;
    let mut sched: Box<dyn Scheduler> = match kind {
        SchedulerKind::Synchronous => Box::new(Synchronous::new()),
        SchedulerKind::RandomFair { seed } => Box::new(RandomFair::new(seed)),
        SchedulerKind::Lazy { seed } => Box::new(Lazy::new(seed)),
        SchedulerKind::Exhaustive { .. } => return Err(SimError::ExhaustiveRun),
    };
    let mut state = SimState::new(initial.clone());
    // Starved robots need up to two actions each, so force them early enough.
    let threshold = limits
        .fairness_bound
        .saturating_sub(2 * state.k() as u64)
        .max(1);
    loop {
        if state.is_gathered() {
            return Ok((Outcome::Gathered, state.round));
        }
        if state.is_stuck() {
            return Ok((Outcome::Stuck, state.round));
        }
        if state.step >= limits.max_steps {
            return Ok((Outcome::StepLimit, state.round));
        }
        let starved = (0..state.k())
            .filter(|&r| state.step - state.last_fire[r] > threshold)
            .min_by_key(|&r| state.last_fire[r]);
        let action = match starved {
            Some(r) if state.pending[r].is_some() => fire_action(sched.as_mut(), &state, r),
            Some(r) => SchedulerAction::Activate(r),
            None => sched.propose(&state),
        };
        sink(state.apply(action)?);
    }
}

impl Trace {
    /// Writes the trace as JSON lines: header, events, footer.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", serde_json::to_string(&self.header)?)?;
        for e in &self.events {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        let footer = TraceFooter {
            outcome: self.outcome,
            rounds: self.rounds,
        };
        writeln!(w, "{}", serde_json::to_string(&footer)?)?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace, TraceError> {
        let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let lines: Vec<(usize, &String)> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        if lines.len() < 2 {
            return Err(TraceError::Parse {
                line: lines.len(),
                msg: "missing header or footer".to_string(),
            });
        }
        let parse_err = |line, source| TraceError::Json { line, source };
        let (hl, h) = lines[0];
        let header: TraceHeader = serde_json::from_str(h).map_err(|e| parse_err(hl, e))?;
        let (fl, f) = lines[lines.len() - 1];
        let footer: TraceFooter = serde_json::from_str(f).map_err(|e| parse_err(fl, e))?;
        let events = lines[1..lines.len() - 1]
            .iter()
            .map(|&(l, s)| serde_json::from_str(s).map_err(|e| parse_err(l, e)))
            .collect::<Result<Vec<TraceEvent>, _>>()?;
        let initial: RingConfig =
            header
                .initial
                .parse()
                .map_err(|e: crate::error::RingError| TraceError::Parse {
                    line: hl,
                    msg: e.to_string(),
                })?;
        Ok(Trace {
            header,
            initial,
            events,
            outcome: footer.outcome,
            rounds: footer.rounds,
        })
    }

    pub fn from_jsonl(s: &str) -> Result<Trace, TraceError> {
        Trace::read_jsonl(s.as_bytes())
    }

    /// The configuration before the first event and after each event.
    pub fn configs(&self) -> Result<Vec<RingConfig>, TraceError> {
        std::iter::once(Ok(self.initial.clone()))
            .chain(self.events.iter().enumerate().map(|(i, e)| {
                e.occ
                    .parse()
                    .map_err(|err: crate::error::RingError| TraceError::Parse {
                        line: i + 2,
                        msg: err.to_string(),
                    })
            }))
            .collect()
    }
}

/// Re-executes a trace through [`SimState::apply`], checking every recorded
/// field. Calls `visit` with the state after each event.
pub fn replay_with(
    trace: &Trace,
    mut visit: impl FnMut(&SimState, &TraceEvent),
) -> Result<SimState, TraceError> {
    let mut state = SimState::new(trace.initial.clone());
    for (i, e) in trace.events.iter().enumerate() {
        let line = i + 2;
        let mismatch = |msg: String| TraceError::Parse { line, msg };
        if e.robot >= state.k() {
            return Err(mismatch(format!("unknown robot {}", e.robot)));
        }
        let action = match e.kind {
            EventKind::Activate => SchedulerAction::Activate(e.robot),
            EventKind::Fire => SchedulerAction::Fire(e.robot, e.to),
        };
        let got = state.apply(action)?;
        if &got != e {
            return Err(mismatch(format!(
                "replay diverged at step {}: expected {:?}, got {:?}",
                e.step, e, got
            )));
        }
        visit(&state, e);
    }
    Ok(state)
}

pub fn replay(trace: &Trace) -> Result<SimState, TraceError> {
    replay_with(trace, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> RingConfig {
        s.parse().unwrap()
    }

    #[test]
    fn fire_on_stay_clears_intent() {
        let mut s = SimState::new(cfg("1111111111....."));
        // Robot 5 sits inside the block.
        s.apply(SchedulerAction::Activate(5)).unwrap();
        assert_eq!(s.pending[5].unwrap().target, Intent::Stay);
        let e = s.apply(SchedulerAction::Fire(5, None)).unwrap();
        assert_eq!(e.to, None);
        assert!(s.pending[5].is_none());
        assert_eq!(s.cfg, cfg("1111111111....."));
    }

    #[test]
    fn block_border_moves() {
        let mut s = SimState::new(cfg("1111111111....."));
        s.apply(SchedulerAction::Activate(0)).unwrap();
        let e = s.apply(SchedulerAction::Fire(0, None)).unwrap();
        assert_eq!((e.from, e.to), (0, Some(14)));
        assert_eq!(s.cfg.count(14), 1);
        assert_eq!(s.cfg.count(0), 0);
    }

    #[test]
    fn outdated_intent_fires_old_target() {
        let mut s = SimState::new(cfg("1111111111....."));
        s.apply(SchedulerAction::Activate(0)).unwrap();
        s.apply(SchedulerAction::Activate(9)).unwrap();
        s.apply(SchedulerAction::Fire(9, None)).unwrap();
        let p = s.pending[0].unwrap();
        assert!(s.is_outdated(&p));
        let e = s.apply(SchedulerAction::Fire(0, None)).unwrap();
        assert_eq!(e.to, Some(14));
    }

    #[test]
    fn contract_violations() {
        let mut s = SimState::new(cfg("1111111111....."));
        assert!(matches!(
            s.apply(SchedulerAction::Fire(0, None)),
            Err(SimError::ContractViolation(_))
        ));
        s.apply(SchedulerAction::Activate(0)).unwrap();
        assert!(matches!(
            s.apply(SchedulerAction::Activate(0)),
            Err(SimError::ContractViolation(_))
        ));
    }

    #[test]
    fn terminal_synchronous_gathers() {
        let mut limits = RunLimits::for_k(10);
        limits.relaxed = true;
        let t = run(&cfg("11111.11111...."), SchedulerKind::Synchronous, limits).unwrap();
        assert_eq!(t.outcome, Outcome::Gathered);
    }

    #[test]
    fn gathered_start_is_immediate() {
        let t = run(
            &cfg("a.............."),
            SchedulerKind::RandomFair { seed: 1 },
            RunLimits::for_k(10),
        )
        .unwrap();
        assert_eq!(t.outcome, Outcome::Gathered);
        assert!(t.events.is_empty());
        assert_eq!(t.rounds, 0);
    }

    #[test]
    fn jsonl_roundtrip_and_replay() {
        let t = run(
            &cfg("11111.11111...."),
            SchedulerKind::Lazy { seed: 3 },
            RunLimits::for_k(10),
        )
        .unwrap();
        let back = Trace::from_jsonl(&t.to_jsonl()).unwrap();
        assert_eq!(back, t);
        replay(&back).unwrap();
    }

    #[test]
    fn rejects_bad_starts() {
        assert!(matches!(
            run(
                &cfg("11.11.11.11.11."),
                SchedulerKind::Synchronous,
                RunLimits::for_k(10)
            ),
            Err(SimError::InvalidInitial(ConfigError::Periodic))
        ));
        assert!(matches!(
            run(
                &cfg("11111111.11...."),
                SchedulerKind::Exhaustive { depth: 3 },
                RunLimits::for_k(10)
            ),
            Err(SimError::ExhaustiveRun)
        ));
        assert!(builtin_scheduler("nope", 0, 0).is_err());
    }
}
