//! Executable versions of the correctness lemmas: trace invariants,
//! enumeration of initial configurations and bounded exhaustive exploration
//! of Phase-2 transitions.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TraceError};
use crate::protocol::{analyze_cached, summary_cached, Phase, Tag};
use crate::ring::{RingConfig, SymmetryClass};
use crate::sim::{
    intent_at, replay_with, validate_sizes, Intent, Outcome, RobotId, SchedulerAction, SimState,
    Trace,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub step: u64,
    pub description: String,
    pub occ: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub violation: Option<Violation>,
}

impl Verdict {
    pub fn pass() -> Verdict {
        Verdict {
            passed: true,
            violation: None,
        }
    }

    pub fn fail(step: u64, description: impl Into<String>, occ: impl Into<String>) -> Verdict {
        Verdict {
            passed: false,
            violation: Some(Violation {
                step,
                description: description.into(),
                occ: occ.into(),
            }),
        }
    }
}

/// One representative per dihedral class of towerless `k`-subsets of the
/// `n`-ring, periodic classes excluded, in increasing string order.
pub fn enumerate_initial_configs(
    n: usize,
    k: usize,
    relaxed: bool,
) -> Result<Vec<RingConfig>, ConfigError> {
    if k == 0 {
        return Err(ConfigError::NoRobots);
    }
    if !relaxed {
        validate_sizes(n, k)?;
    }
    if k > n {
        return Err(ConfigError::RingTooSmall { n, k });
    }
    let mut out = Vec::new();
    let mut pos: Vec<usize> = (0..k).collect();
    loop {
        let cfg = RingConfig::from_positions(n, &pos).expect("positions in range");
        // Keep only the representative that is its own canonical form.
        if cfg.to_string() == cfg.canonical_form()
            && cfg.classify_symmetry().cfg_class != SymmetryClass::Periodic
        {
            out.push(cfg);
        }
        // Next k-combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| pos[i] < n - k + i) else {
            break;
        };
        pos[i] += 1;
        for j in i + 1..k {
            pos[j] = pos[j - 1] + 1;
        }
    }
    out.sort_by_key(|c| c.to_string());
    Ok(out)
}

/// The configuration before the first event and after each one, paired with
/// the step that produced it and its tag.
fn frames(trace: &Trace) -> Result<Vec<(u64, RingConfig, Tag)>, TraceError> {
    let cfgs = trace.configs()?;
    let mut out = Vec::with_capacity(cfgs.len());
    let mut iter = cfgs.into_iter();
    let first = iter.next().expect("initial configuration");
    let tag = analyze_cached(&first).tag();
    out.push((0, first, tag));
    for (cfg, e) in iter.zip(&trace.events) {
        out.push((e.step, cfg, e.tag));
    }
    Ok(out)
}

fn trace_error(e: TraceError) -> Verdict {
    Verdict::fail(0, format!("unreadable trace: {e}"), "")
}

/// No configuration holds a tower before Phase 3 starts.
pub fn check_no_tower_before_target(trace: &Trace) -> Verdict {
    let frames = match frames(trace) {
        Ok(f) => f,
        Err(e) => return trace_error(e),
    };
    for (step, cfg, tag) in frames {
        if matches!(tag, Tag::TerminalSkew | Tag::Target) {
            break;
        }
        if cfg.max_count() >= 2 {
            return Verdict::fail(
                step,
                format!("tower in a {tag} configuration"),
                cfg.to_string(),
            );
        }
    }
    Verdict::pass()
}

/// No towerless configuration in the trace is periodic.
pub fn check_never_periodic(trace: &Trace) -> Verdict {
    let frames = match frames(trace) {
        Ok(f) => f,
        Err(e) => return trace_error(e),
    };
    for (step, cfg, _) in frames {
        if cfg.is_towerless()
            && cfg.occupied_count() > 1
            && cfg.classify_symmetry().cfg_class == SymmetryClass::Periodic
        {
            return Verdict::fail(step, "periodic configuration", cfg.to_string());
        }
    }
    Verdict::pass()
}

/// Pending moves that are outdated and would now be decided differently.
/// A pending `Stay` never counts: such a robot does not move.
pub fn outdated_incorrect_count(state: &SimState) -> usize {
    state
        .pending
        .iter()
        .flatten()
        .filter(|p| p.target.is_move() && state.is_outdated(p) && state.decide(p.robot) != p.target)
        .count()
}

/// At most one outdated robot with an incorrect target during Phases 1–2.
pub fn check_outdated_bound(trace: &Trace) -> Verdict {
    let mut verdict = Verdict::pass();
    let res = replay_with(trace, |state, e| {
        if !verdict.passed || !matches!(e.tag.phase(), Some(Phase::Phase1 | Phase::Phase2)) {
            return;
        }
        let c = outdated_incorrect_count(state);
        if c > 1 {
            verdict = Verdict::fail(
                e.step,
                format!("{c} outdated robots with incorrect targets in {}", e.tag),
                e.occ.clone(),
            );
        }
    });
    match res {
        Ok(_) => verdict,
        Err(e) => trace_error(e),
    }
}

/// When Phase 1 hands over to Phase 2, no stale intent has an incorrect
/// target.
pub fn check_clean_phase2_entry(trace: &Trace) -> Verdict {
    let mut verdict = Verdict::pass();
    let mut prev = summary_cached(&trace.initial).0.phase();
    let res = replay_with(trace, |state, e| {
        let cur = e.tag.phase();
        if verdict.passed && prev == Some(Phase::Phase1) && cur == Some(Phase::Phase2) {
            let c = outdated_incorrect_count(state);
            if c > 0 {
                verdict = Verdict::fail(
                    e.step,
                    format!(
                        "{} entered with {c} outdated robots with incorrect targets",
                        e.tag
                    ),
                    e.occ.clone(),
                );
            }
        }
        prev = cur;
    });
    match res {
        Ok(_) => verdict,
        Err(e) => trace_error(e),
    }
}

/// Replaying the trace reproduces every recorded event.
pub fn check_replay(trace: &Trace) -> Verdict {
    match replay_with(trace, |_, _| {}) {
        Ok(state) if state.round == trace.rounds => Verdict::pass(),
        Ok(state) => Verdict::fail(
            state.step,
            format!(
                "footer says {} rounds, replay gives {}",
                trace.rounds, state.round
            ),
            state.cfg.to_string(),
        ),
        Err(e) => Verdict::fail(0, e.to_string(), ""),
    }
}

/// Gathered within `c * n^2` rounds.
pub fn check_round_bound(trace: &Trace, c: u64) -> Verdict {
    let n = trace.initial.n() as u64;
    let last = trace.events.last().map(|e| e.step).unwrap_or(0);
    let occ = trace
        .events
        .last()
        .map(|e| e.occ.clone())
        .unwrap_or_else(|| trace.initial.to_string());
    if trace.outcome != Outcome::Gathered {
        return Verdict::fail(last, format!("run ended {:?}", trace.outcome), occ);
    }
    if trace.rounds > c * n * n {
        return Verdict::fail(
            last,
            format!("{} rounds exceeds {}", trace.rounds, c * n * n),
            occ,
        );
    }
    Verdict::pass()
}

/// Once Phase 3 is reached the trace never returns to Phases 1–2, and no
/// configuration is outside the protocol's states.
pub fn check_phase_monotone(trace: &Trace) -> Verdict {
    let frames = match frames(trace) {
        Ok(f) => f,
        Err(e) => return trace_error(e),
    };
    let mut late = false;
    for (step, cfg, tag) in frames {
        match tag.phase() {
            None => {
                return Verdict::fail(step, "configuration outside the protocol", cfg.to_string())
            }
            Some(Phase::Phase3 | Phase::Done) => late = true,
            Some(_) if late => {
                return Verdict::fail(
                    step,
                    format!("back to {tag} after Phase 3"),
                    cfg.to_string(),
                )
            }
            Some(_) => {}
        }
    }
    Verdict::pass()
}

/// Distinct-views sweep over every towerless configuration with `n <= n_max`:
/// rigid means distinct views; symmetric means one axis and no view shared
/// by more than two robots.
pub fn check_lemma1_views(n_max: usize) -> Verdict {
    for n in 1..=n_max {
        for mask in 1u64..(1u64 << n) {
            let occ: Vec<u32> = (0..n).map(|i| ((mask >> i) & 1) as u32).collect();
            let cfg = RingConfig::new(occ).expect("non-empty ring");
            let class = cfg.classify_symmetry().cfg_class;
            if class == SymmetryClass::Periodic {
                continue;
            }
            let mut seen: HashMap<_, usize> = HashMap::new();
            for v in cfg.occupied() {
                *seen
                    .entry(cfg.compute_view(v).expect("occupied"))
                    .or_default() += 1;
            }
            let max_share = seen.values().copied().max().unwrap_or(0);
            let bad = match class {
                SymmetryClass::Rigid => {
                    (max_share > 1).then_some("rigid configuration with equal views")
                }
                _ => {
                    let axes = (0..n).filter(|&c| cfg.reflected(c) == cfg).count();
                    if axes != 1 {
                        Some("symmetric configuration without exactly one axis")
                    } else if max_share > 2 {
                        Some("view shared by more than two robots")
                    } else {
                        None
                    }
                }
            };
            if let Some(msg) = bad {
                return Verdict::fail(0, msg, cfg.to_string());
            }
        }
    }
    Verdict::pass()
}

/// Allowed successors and round bound of each Phase-2 state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSpec {
    pub from: Tag,
    /// Tags allowed on the way, besides `from`.
    pub via: Vec<Tag>,
    pub to: Vec<Tag>,
    /// The target must be reached before this many rounds complete.
    pub rounds: u64,
}

pub fn transition_spec(tag: Tag, k: usize) -> Option<TransitionSpec> {
    let k = k as u64;
    let spec = |via: &[Tag], to: &[Tag], rounds| {
        Some(TransitionSpec {
            from: tag,
            via: via.to_vec(),
            to: to.to_vec(),
            rounds,
        })
    };
    match tag {
        Tag::EvenT => spec(&[], &[Tag::SplitS], 1),
        Tag::OddT => spec(&[], &[Tag::Start, Tag::Terminal], 1),
        Tag::SplitA => spec(&[], &[Tag::SplitS], 1),
        Tag::Biblock => spec(&[], &[Tag::TriBlockS], 1),
        Tag::Block => spec(&[Tag::Biblock], &[Tag::TriBlockS], 2),
        Tag::TriBlockA => spec(&[], &[Tag::Start, Tag::TriBlockS], 1),
        // The last middle robot is both Odd-T and TriBlock-A, same move.
        Tag::TriBlockS => spec(&[Tag::TriBlockA, Tag::OddT], &[Tag::Start], k),
        // Odd-T appears when one slave block empties before its mirror.
        Tag::SplitS => spec(&[Tag::SplitA, Tag::OddT], &[Tag::Terminal, Tag::Start], k),
        Tag::Start => spec(&[Tag::EvenT], &[Tag::SplitS], 2),
        Tag::Terminal => spec(&[Tag::TerminalSkew], &[Tag::Target], 2),
        _ => None,
    }
}

/// Size of the hole crossed by the axis at an edge, or of the leader hole.
fn axis_hole_sizes(cfg: &RingConfig) -> (Option<usize>, Option<usize>) {
    let s = cfg.classify_symmetry();
    (s.leader_hole.map(|h| h.size), s.slave_hole.map(|h| h.size))
}

/// Hashable exploration state. Robots are anonymous, so the per-robot part
/// is a sorted multiset of (node, intent, cycle done) codes; the occupancy
/// follows from the nodes.
type Key = (Vec<u32>, u64);

fn key_of(s: &SimState) -> Key {
    let n = s.cfg.n();
    let mut robots: Vec<u32> = (0..s.k())
        .map(|r| {
            let v = s.positions[r];
            let intent = match s.pending[r].map(|p| p.target) {
                None => 0,
                Some(Intent::Stay) => 1,
                Some(Intent::To(t)) if t == (v + 1) % n => 2,
                Some(Intent::To(_)) => 3,
                Some(Intent::Either(..)) => 4,
            };
            ((v as u32) << 4) | (intent << 1) | u32::from(s.cycle_progress[r])
        })
        .collect();
    robots.sort_unstable();
    (robots, s.round)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreStats {
    pub states: usize,
    pub reached_target: usize,
    pub depth: usize,
    pub frontier_at_depth_limit: usize,
}

/// All distinct states reachable in at most `depth` scheduler actions.
pub fn explore(initial: &RingConfig, depth: usize) -> Vec<SimState> {
    let start = SimState::new(initial.clone());
    let mut seen = HashSet::from([key_of(&start)]);
    let mut out = vec![start.clone()];
    let mut frontier = vec![start];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for a in s.valid_actions() {
                let mut t = s.clone();
                t.apply_quiet(a).expect("valid action");
                if seen.insert(key_of(&t)) {
                    out.push(t.clone());
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Moves of the reduced exploration model: a robot whose current decision is
/// `Stay` and that holds no stale intent only matters for round accounting,
/// so its Look and Move are fused into one null cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Step {
    Action(SchedulerAction),
    NullCycle(RobotId),
}

/// Pending `Stay` intents of robots that would decide `Stay` anyway behave
/// like idle robots: drop them.
fn normalize(s: &mut SimState) {
    for r in 0..s.k() {
        if s.pending[r].is_some_and(|p| p.target == Intent::Stay) && s.decide(r) == Intent::Stay {
            s.pending[r] = None;
        }
    }
}

fn reduced_steps(s: &SimState) -> Vec<Step> {
    let mut out = Vec::new();
    for r in 0..s.k() {
        match s.pending[r].map(|p| p.target) {
            None if s.decide(r) == Intent::Stay => out.push(Step::NullCycle(r)),
            None => out.push(Step::Action(SchedulerAction::Activate(r))),
            Some(Intent::Either(a, b)) => {
                out.push(Step::Action(SchedulerAction::Fire(r, Some(a))));
                out.push(Step::Action(SchedulerAction::Fire(r, Some(b))));
            }
            Some(_) => out.push(Step::Action(SchedulerAction::Fire(r, None))),
        }
    }
    out
}

fn take_step(s: &SimState, step: Step) -> SimState {
    let mut t = s.clone();
    match step {
        Step::Action(a) => {
            t.apply_quiet(a).expect("valid action");
        }
        Step::NullCycle(r) => {
            t.apply_quiet(SchedulerAction::Activate(r))
                .expect("idle robot");
            t.apply_quiet(SchedulerAction::Fire(r, None))
                .expect("pending stay");
        }
    }
    normalize(&mut t);
    t
}

/// All distinct states of the reduced model reachable in at most `depth`
/// steps.
pub fn explore_reduced(initial: &RingConfig, depth: usize) -> Vec<SimState> {
    let start = SimState::new(initial.clone());
    let mut seen = HashSet::from([key_of(&start)]);
    let mut out = vec![start.clone()];
    let mut frontier = vec![start];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for step in reduced_steps(s) {
                let t = take_step(s, step);
                if seen.insert(key_of(&t)) {
                    out.push(t.clone());
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Compares every robot's local decision with the global rule on `cfg`.
/// Returns a description of the first mismatch.
pub fn local_global_mismatch(cfg: &RingConfig) -> Option<String> {
    let a = analyze_cached(cfg);
    for v in cfg.occupied() {
        let mut expected: Vec<usize> = a.targets_of(v).map(<[usize]>::to_vec).unwrap_or_default();
        expected.sort_unstable();
        let got = match intent_at(cfg, v) {
            Ok(i) => i,
            Err(_) if a.tag() == Tag::Unknown => continue,
            Err(e) => return Some(format!("node {v}: {e}")),
        };
        let mut targets = got.targets();
        targets.sort_unstable();
        if targets != expected {
            return Some(format!(
                "node {v}: local {got:?}, global {expected:?} ({})",
                a.tag()
            ));
        }
    }
    None
}

/// Exploration of every scheduler choice from `instance`, checking the
/// successor set and round bound of its tag. Runs to a fixpoint (the round
/// bound makes the state space finite) unless `depth` caps the number of
/// reduced steps.
pub fn check_transitions_from(
    instance: &RingConfig,
    depth: Option<usize>,
) -> (Verdict, ExploreStats) {
    let mut stats = ExploreStats::default();
    let tag = summary_cached(instance).0;
    let Some(spec) = transition_spec(tag, instance.k()) else {
        return (Verdict::pass(), stats);
    };
    let (leader0, slave0) = axis_hole_sizes(instance);
    let start = SimState::new(instance.clone());
    let mut seen = HashSet::from([key_of(&start)]);
    let mut frontier = vec![start];
    let mut d = 0;
    while !frontier.is_empty() && depth.is_none_or(|cap| d < cap) {
        d += 1;
        let mut next = Vec::new();
        for s in &frontier {
            for step in reduced_steps(s) {
                let t = take_step(s, step);
                if !seen.insert(key_of(&t)) {
                    continue;
                }
                stats.states += 1;
                let now = summary_cached(&t.cfg).0;
                let fail = |msg: String| {
                    Verdict::fail(
                        d as u64,
                        format!("from {tag} {instance}: {msg}"),
                        t.cfg.to_string(),
                    )
                };
                if spec.to.contains(&now) {
                    // Hole bookkeeping of the Start/Split-S cycle.
                    let (leader, slave) = axis_hole_sizes(&t.cfg);
                    if tag == Tag::Start && leader.zip(leader0).is_some_and(|(l, l0)| l + 2 != l0) {
                        return (fail("leader hole did not shrink by 2".into()), stats);
                    }
                    if tag == Tag::SplitS
                        && now == Tag::Start
                        && slave.zip(slave0).is_some_and(|(s1, s0)| s1 != s0 + 2)
                    {
                        return (fail("slave hole did not grow by 2".into()), stats);
                    }
                    stats.reached_target += 1;
                    continue;
                }
                if now != tag && !spec.via.contains(&now) {
                    return (fail(format!("unexpected successor {now}")), stats);
                }
                if t.round >= spec.rounds {
                    return (
                        fail(format!("no {:?} within {} rounds", spec.to, spec.rounds)),
                        stats,
                    );
                }
                next.push(t);
            }
        }
        frontier = next;
    }
    stats.depth = d;
    stats.frontier_at_depth_limit = frontier.len();
    (Verdict::pass(), stats)
}

/// Runs [`check_transitions_from`] on every instance, stopping at the first
/// failure.
pub fn check_phase2_transitions(instances: &[RingConfig], depth: Option<usize>) -> Verdict {
    for inst in instances {
        let (v, _) = check_transitions_from(inst, depth);
        if !v.passed {
            return v;
        }
    }
    Verdict::pass()
}

/// Hand-built instances of the nine special classes and Terminal on an
/// `n`-ring with `k` robots (`k >= 8` even, `n > k + 3` odd).
pub fn phase2_instances(n: usize, k: usize) -> Vec<(Tag, RingConfig)> {
    let h = k / 2;
    let free = n - k;
    let ones = |c: usize| "1".repeat(c);
    let dots = |c: usize| ".".repeat(c);
    let (a, b) = (h / 2, h - h / 2);
    let strings = [
        (
            Tag::Start,
            format!("{}{}{}{}", ones(h), dots(free - 2), ones(h), dots(2)),
        ),
        (
            Tag::EvenT,
            format!("{}.1{}{}{}", ones(h - 1), dots(free - 3), ones(h), dots(2)),
        ),
        (
            Tag::SplitS,
            format!(
                "{}.{}{}{}.{}{}",
                ones(a),
                ones(b),
                dots(2),
                ones(b),
                ones(a),
                dots(free - 4)
            ),
        ),
        (
            Tag::SplitA,
            format!(
                "{}.{}{}{}.{}{}",
                ones(a),
                ones(b),
                dots(2),
                ones(b - 1),
                ones(a + 1),
                dots(free - 4)
            ),
        ),
        (
            Tag::OddT,
            format!("{}.1.{}{}", ones(h), ones(h - 1), dots(free - 2)),
        ),
        (Tag::Block, format!("{}{}", ones(k), dots(free))),
        (Tag::Biblock, format!("{}.1{}", ones(k - 1), dots(free - 1))),
        (
            Tag::TriBlockS,
            format!("1.{}.1{}", ones(k - 2), dots(free - 2)),
        ),
        (
            Tag::TriBlockA,
            format!("11.{}.1{}", ones(k - 3), dots(free - 2)),
        ),
        (
            Tag::Terminal,
            format!("{}.{}{}", ones(h), ones(h), dots(free - 1)),
        ),
    ];
    strings
        .into_iter()
        .map(|(t, s)| (t, s.parse().expect("instance string")))
        .collect()
}

/// All trace-level checks, by name.
pub fn check_trace_all(trace: &Trace, c: u64) -> Vec<(&'static str, Verdict)> {
    vec![
        ("round_bound", check_round_bound(trace, c)),
        (
            "no_tower_before_target",
            check_no_tower_before_target(trace),
        ),
        ("never_periodic", check_never_periodic(trace)),
        ("outdated_bound", check_outdated_bound(trace)),
        ("phase_monotone", check_phase_monotone(trace)),
        ("replay", check_replay(trace)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, RunLimits, SchedulerKind, TraceEvent, TraceHeader};

    fn cfg(s: &str) -> RingConfig {
        s.parse().unwrap()
    }

    #[test]
    fn enumeration_small_cases() {
        let c = enumerate_initial_configs(5, 2, true).unwrap();
        assert_eq!(c.len(), 2);
        let c = enumerate_initial_configs(9, 3, true).unwrap();
        assert!(c
            .iter()
            .all(|x| x.canonical_form() != cfg("1..1..1..").canonical_form()));
        assert!(matches!(
            enumerate_initial_configs(15, 9, false),
            Err(ConfigError::OddRobots(9))
        ));
    }

    #[test]
    fn instances_have_their_tags() {
        for n in [15, 17, 21] {
            for (tag, c) in phase2_instances(n, 10) {
                assert_eq!(analyze_cached(&c).tag(), tag, "n={n} {c}");
            }
        }
    }

    #[test]
    fn gathered_instance_vacuous() {
        let (v, _) = check_transitions_from(&cfg("a.............."), Some(4));
        assert!(v.passed);
    }

    #[test]
    fn reduction_covers_raw_search() {
        // Every configuration the raw search reaches, the reduced model
        // reaches too.
        for inst in ["11111.11111....", "1111111111.....", "11111...11111.."] {
            let c = cfg(inst);
            let raw: HashSet<Vec<u32>> = explore(&c, 9)
                .into_iter()
                .map(|s| s.cfg.occ().to_vec())
                .collect();
            let reduced: HashSet<Vec<u32>> = explore_reduced(&c, 40)
                .into_iter()
                .map(|s| s.cfg.occ().to_vec())
                .collect();
            assert!(raw.is_subset(&reduced), "{inst}");
        }
    }

    #[test]
    fn local_matches_global_on_instances() {
        for (_, c) in phase2_instances(17, 10) {
            assert_eq!(local_global_mismatch(&c), None, "{c}");
        }
    }

    #[test]
    fn depth_one_successors() {
        // From a fresh state every robot can only be activated.
        let states = explore(&cfg("11111.11111...."), 1);
        assert_eq!(states.len(), 11);
    }

    fn fake_trace(initial: &str, occs: &[(&str, Tag)]) -> Trace {
        let initial: RingConfig = initial.parse().unwrap();
        Trace {
            header: TraceHeader {
                n: initial.n(),
                k: initial.k(),
                scheduler: "test".into(),
                seed: None,
                fairness_bound: 0,
                initial: initial.to_string(),
            },
            events: occs
                .iter()
                .enumerate()
                .map(|(i, (o, t))| TraceEvent {
                    step: i as u64,
                    kind: crate::sim::EventKind::Fire,
                    robot: 0,
                    from: 0,
                    to: None,
                    occ: o.to_string(),
                    tag: *t,
                    round: 0,
                })
                .collect(),
            initial,
            outcome: Outcome::StepLimit,
            rounds: 0,
        }
    }

    #[test]
    fn tower_in_phase1_fails() {
        let t = fake_trace("11.1111.111....", &[("2..1111.111....", Tag::BigBlock2)]);
        let v = check_no_tower_before_target(&t);
        assert!(!v.passed);
        assert_eq!(v.violation.unwrap().step, 0);
    }

    #[test]
    fn periodic_frame_fails() {
        let t = fake_trace("11.......", &[("1..1..1..", Tag::Unknown)]);
        assert!(!check_never_periodic(&t).passed);
    }

    #[test]
    fn truncated_run_fails_round_bound() {
        let t = fake_trace("11111.11111....", &[]);
        assert!(!check_round_bound(&t, 1_000).passed);
        let mut g = fake_trace("a..............", &[]);
        g.outcome = Outcome::Gathered;
        assert!(check_round_bound(&g, 1).passed);
    }

    #[test]
    fn two_stale_intents_counted() {
        // Both Block borders look, then the configuration changes twice
        // under them via a third robot's stale move.
        let mut s = SimState::new(cfg("1111111111....."));
        s.apply(SchedulerAction::Activate(0)).unwrap();
        s.apply(SchedulerAction::Activate(9)).unwrap();
        // Move robot 5 by hand, as a corrupted run would.
        s.cfg.remove_robot(5).unwrap();
        s.cfg.add_robot(12);
        s.positions[5] = 12;
        s.moves += 1;
        assert_eq!(outdated_incorrect_count(&s), 2);
    }

    #[test]
    fn synchronous_run_has_no_outdated() {
        let t = run(
            &cfg("11.1111.1111..."),
            SchedulerKind::Synchronous,
            RunLimits::for_k(10),
        )
        .unwrap();
        for (name, v) in check_trace_all(&t, 20) {
            assert!(v.passed, "{name}: {v:?}");
        }
    }
}
