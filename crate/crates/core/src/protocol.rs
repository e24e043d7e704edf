//! The gathering rule engine.
//!
//! Rules are evaluated on the *support* of a configuration (which nodes are
//! occupied), because that is all a robot can perceive beyond its own tower
//! flag. [`classify_protocol_state`] adds the global knowledge of where towers
//! are, validates it against the support pattern and removes tower robots
//! from the movers. [`local_decide`] rebuilds the support from a view and
//! runs the same rules.
//!
//! Even support counts belong to Phases 1 and 2 (no tower can exist with an
//! even robot count and an even number of occupied nodes, except in the
//! transient skew states of Phase 3, which share their rule with
//! `TerminalSkew`). Odd support counts can only arise once a tower exists.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::ring::{RingConfig, SymmetryClass, SymmetryInfo, View};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    BlockDistance,
    BlockMirror1,
    BlockMirror2,
    BigBlock1_1,
    BigBlock1_2,
    BigBlock2,
    Start,
    EvenT,
    SplitS,
    SplitA,
    OddT,
    Block,
    Biblock,
    TriBlockS,
    TriBlockA,
    Terminal,
    TerminalSkew,
    Target,
    P3Absorb,
    P3SingleBlock,
    P3Skew,
    Gathered,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Phase1,
    Phase2,
    Phase3,
    Done,
}

impl Tag {
    pub const ALL: [Tag; 23] = [
        Tag::BlockDistance,
        Tag::BlockMirror1,
        Tag::BlockMirror2,
        Tag::BigBlock1_1,
        Tag::BigBlock1_2,
        Tag::BigBlock2,
        Tag::Start,
        Tag::EvenT,
        Tag::SplitS,
        Tag::SplitA,
        Tag::OddT,
        Tag::Block,
        Tag::Biblock,
        Tag::TriBlockS,
        Tag::TriBlockA,
        Tag::Terminal,
        Tag::TerminalSkew,
        Tag::Target,
        Tag::P3Absorb,
        Tag::P3SingleBlock,
        Tag::P3Skew,
        Tag::Gathered,
        Tag::Unknown,
    ];

    /// The nine special Phase-2 classes.
    pub const SPECIAL: [Tag; 9] = [
        Tag::Start,
        Tag::EvenT,
        Tag::SplitS,
        Tag::SplitA,
        Tag::OddT,
        Tag::Block,
        Tag::Biblock,
        Tag::TriBlockS,
        Tag::TriBlockA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tag::BlockDistance => "BlockDistance",
            Tag::BlockMirror1 => "BlockMirror1",
            Tag::BlockMirror2 => "BlockMirror2",
            Tag::BigBlock1_1 => "BigBlock1_1",
            Tag::BigBlock1_2 => "BigBlock1_2",
            Tag::BigBlock2 => "BigBlock2",
            Tag::Start => "Start",
            Tag::EvenT => "EvenT",
            Tag::SplitS => "SplitS",
            Tag::SplitA => "SplitA",
            Tag::OddT => "OddT",
            Tag::Block => "Block",
            Tag::Biblock => "Biblock",
            Tag::TriBlockS => "TriBlockS",
            Tag::TriBlockA => "TriBlockA",
            Tag::Terminal => "Terminal",
            Tag::TerminalSkew => "TerminalSkew",
            Tag::Target => "Target",
            Tag::P3Absorb => "P3Absorb",
            Tag::P3SingleBlock => "P3SingleBlock",
            Tag::P3Skew => "P3Skew",
            Tag::Gathered => "Gathered",
            Tag::Unknown => "Unknown",
        }
    }

    pub fn from_name(s: &str) -> Option<Tag> {
        Tag::ALL.iter().copied().find(|t| t.name() == s)
    }

    pub fn phase(self) -> Option<Phase> {
        match self {
            Tag::BlockDistance
            | Tag::BlockMirror1
            | Tag::BlockMirror2
            | Tag::BigBlock1_1
            | Tag::BigBlock1_2
            | Tag::BigBlock2 => Some(Phase::Phase1),
            Tag::Start
            | Tag::EvenT
            | Tag::SplitS
            | Tag::SplitA
            | Tag::OddT
            | Tag::Block
            | Tag::Biblock
            | Tag::TriBlockS
            | Tag::TriBlockA => Some(Phase::Phase2),
            Tag::Terminal
            | Tag::TerminalSkew
            | Tag::Target
            | Tag::P3Absorb
            | Tag::P3SingleBlock
            | Tag::P3Skew => Some(Phase::Phase3),
            Tag::Gathered => Some(Phase::Done),
            Tag::Unknown => None,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A classified configuration with the nodes playing each named role.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolState {
    pub tag: Tag,
    pub roles: BTreeMap<String, Vec<usize>>,
}

/// A robot node allowed to move and the neighbor(s) it may move to. Two
/// targets mean the scheduler picks the direction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoveIntent {
    pub robot_node: usize,
    pub targets: Vec<usize>,
}

/// Direction relative to the order in which a view's distances are read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewDirection {
    /// Toward the node at distance `dists[0]`.
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalDecision {
    Stay,
    Move(ViewDirection),
    MoveEither,
}

/// Classification plus the moves it enables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Analysis {
    pub state: ProtocolState,
    pub moves: Vec<MoveIntent>,
}

impl Analysis {
    fn unknown() -> Analysis {
        Analysis {
            state: ProtocolState {
                tag: Tag::Unknown,
                roles: BTreeMap::new(),
            },
            moves: Vec::new(),
        }
    }

    pub fn tag(&self) -> Tag {
        self.state.tag
    }

    pub fn targets_of(&self, node: usize) -> Option<&[usize]> {
        self.moves
            .iter()
            .find(|m| m.robot_node == node)
            .map(|m| m.targets.as_slice())
    }
}

pub fn classify_protocol_state(cfg: &RingConfig) -> ProtocolState {
    analyze(cfg).state
}

const CACHE_LIMIT: usize = 1 << 20;

thread_local! {
    static ANALYSIS_CACHE: RefCell<HashMap<Vec<u32>, Analysis>> = RefCell::new(HashMap::new());
    static SUMMARY_CACHE: RefCell<HashMap<Vec<u32>, (Tag, bool)>> = RefCell::new(HashMap::new());
    static DECISION_CACHE: RefCell<HashMap<View, Result<LocalDecision, ProtocolError>>> =
        RefCell::new(HashMap::new());
}

/// Memoized [`analyze`]; simulations revisit the same configurations often.
pub fn analyze_cached(cfg: &RingConfig) -> Analysis {
    ANALYSIS_CACHE.with(|c| {
        if let Some(a) = c.borrow().get(cfg.occ()) {
            return a.clone();
        }
        let a = analyze(cfg);
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(cfg.occ().to_vec(), a.clone());
        a
    })
}

/// Memoized tag and whether any robot is enabled.
pub fn summary_cached(cfg: &RingConfig) -> (Tag, bool) {
    SUMMARY_CACHE.with(|c| {
        if let Some(&v) = c.borrow().get(cfg.occ()) {
            return v;
        }
        let a = analyze(cfg);
        let v = (a.tag(), !a.moves.is_empty());
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(cfg.occ().to_vec(), v);
        v
    })
}

/// Memoized [`local_decide`].
pub fn local_decide_cached(view: &View) -> Result<LocalDecision, ProtocolError> {
    DECISION_CACHE.with(|c| {
        if let Some(d) = c.borrow().get(view) {
            return d.clone();
        }
        let d = local_decide(view);
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(view.clone(), d.clone());
        d
    })
}

pub fn enabled_moves(cfg: &RingConfig) -> Result<Vec<MoveIntent>, ProtocolError> {
    let a = analyze_cached(cfg);
    if a.tag() == Tag::Unknown {
        return Err(ProtocolError::NoRule(cfg.to_string()));
    }
    Ok(a.moves)
}

pub fn phase_of(state: &ProtocolState) -> Option<Phase> {
    state.tag.phase()
}

/// Global classification with tower knowledge.
pub fn analyze(cfg: &RingConfig) -> Analysis {
    let occupied = cfg.occupied_count();
    if occupied == 0 {
        return Analysis::unknown();
    }
    if occupied == 1 {
        return Analysis {
            state: ProtocolState {
                tag: Tag::Gathered,
                roles: BTreeMap::from([("tower".to_string(), cfg.occupied())]),
            },
            moves: Vec::new(),
        };
    }
    let support = support_of(cfg);
    let mut a = analyze_support(&support);
    let towers = cfg.towers();
    if towers.is_empty() {
        // An odd number of lone robots is outside the protocol.
        if occupied % 2 == 1 || a.tag() == Tag::P3Skew {
            return Analysis::unknown();
        }
        return a;
    }
    if towers.len() != 1 {
        return Analysis::unknown();
    }
    let tower = towers[0];
    let tower_ok = match a.tag() {
        Tag::Target | Tag::P3Absorb | Tag::P3SingleBlock => {
            a.state.roles.get("axis").is_some_and(|v| v == &[tower])
        }
        Tag::P3Skew => a
            .state
            .roles
            .get("tower_run")
            .is_some_and(|v| v.contains(&tower)),
        Tag::TerminalSkew => a.state.roles.get("r1").is_some_and(|v| v.contains(&tower)),
        _ => false,
    };
    if !tower_ok {
        return Analysis::unknown();
    }
    if a.tag() == Tag::TerminalSkew {
        a.state.tag = Tag::P3Skew;
    }
    a.state.roles.insert("tower".to_string(), vec![tower]);
    a.moves.retain(|m| m.robot_node != tower);
    a
}

/// The decision of a robot from its view alone.
pub fn local_decide(view: &View) -> Result<LocalDecision, ProtocolError> {
    if view.tower_here {
        return Ok(LocalDecision::Stay);
    }
    let n = view.ring_size();
    if view.dists.len() == 1 {
        return Ok(LocalDecision::Stay);
    }
    let mut occ = vec![0u32; n];
    let mut pos = 0;
    occ[0] = 1;
    for &d in &view.dists[..view.dists.len() - 1] {
        pos += d;
        occ[pos % n] = 1;
    }
    let support = RingConfig::new(occ)?;
    let a = analyze_support(&support);
    if a.tag() == Tag::Unknown {
        return Err(ProtocolError::NoRule(support.to_string()));
    }
    let Some(targets) = a.targets_of(0) else {
        return Ok(LocalDecision::Stay);
    };
    let fwd = targets.contains(&(1 % n));
    let back = targets.contains(&(n - 1));
    Ok(match (fwd, back) {
        (true, true) => LocalDecision::MoveEither,
        (true, false) => LocalDecision::Move(ViewDirection::Forward),
        (false, true) => LocalDecision::Move(ViewDirection::Backward),
        (false, false) => LocalDecision::Stay,
    })
}

fn support_of(cfg: &RingConfig) -> RingConfig {
    RingConfig::new(cfg.occ().iter().map(|&c| u32::from(c > 0)).collect()).expect("non-empty ring")
}

/// Maximal run of consecutive occupied nodes, clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Run {
    start: usize,
    end: usize,
    len: usize,
}

/// Runs of the support in clockwise order, with the hole after each run.
struct Layout<'a> {
    cfg: &'a RingConfig,
    n: usize,
    runs: Vec<Run>,
    /// `holes[i]` is the number of empty nodes between run `i` and run `i+1`.
    holes: Vec<usize>,
}

impl<'a> Layout<'a> {
    fn new(cfg: &'a RingConfig) -> Layout<'a> {
        let n = cfg.n();
        let segs = cfg.segments();
        let m = segs.len();
        let mut runs = Vec::new();
        let mut holes = Vec::new();
        if let Some(b) = segs.iter().position(|s| s.distance > 1) {
            let mut start = None;
            let mut len = 0;
            for off in 1..=m {
                let s = segs[(b + off) % m];
                if start.is_none() {
                    start = Some(s.from);
                    len = 0;
                }
                len += 1;
                if s.distance > 1 {
                    runs.push(Run {
                        start: start.take().expect("open run"),
                        end: s.from,
                        len,
                    });
                    holes.push(s.distance - 1);
                }
            }
        }
        Layout {
            cfg,
            n,
            runs,
            holes,
        }
    }

    fn r(&self) -> usize {
        self.runs.len()
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.r()
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.r() - 1) % self.r()
    }

    fn hole_before(&self, i: usize) -> usize {
        self.holes[self.prev(i)]
    }

    fn fwd(&self, v: usize) -> usize {
        (v + 1) % self.n
    }

    fn back(&self, v: usize) -> usize {
        (v + self.n - 1) % self.n
    }

    /// Border of run `i` facing run `i+1`, stepping into the hole after it.
    fn exit_fwd(&self, i: usize) -> (usize, usize) {
        let e = self.runs[i].end;
        (e, self.fwd(e))
    }

    /// Border of run `i` facing run `i-1`, stepping into the hole before it.
    fn exit_back(&self, i: usize) -> (usize, usize) {
        let s = self.runs[i].start;
        (s, self.back(s))
    }

    fn run_nodes(&self, i: usize) -> Vec<usize> {
        let run = self.runs[i];
        (0..run.len).map(|j| (run.start + j) % self.n).collect()
    }
}

struct Builder {
    tag: Tag,
    roles: BTreeMap<String, Vec<usize>>,
    moves: BTreeMap<usize, Vec<usize>>,
}

impl Builder {
    fn new(tag: Tag) -> Builder {
        Builder {
            tag,
            roles: BTreeMap::new(),
            moves: BTreeMap::new(),
        }
    }

    fn role(mut self, name: &str, nodes: Vec<usize>) -> Builder {
        self.roles.insert(name.to_string(), nodes);
        self
    }

    fn mv(mut self, (node, target): (usize, usize)) -> Builder {
        let t = self.moves.entry(node).or_default();
        if !t.contains(&target) {
            t.push(target);
            t.sort_unstable();
        }
        self
    }

    fn build(self) -> Analysis {
        Analysis {
            state: ProtocolState {
                tag: self.tag,
                roles: self.roles,
            },
            moves: self
                .moves
                .into_iter()
                .map(|(robot_node, targets)| MoveIntent {
                    robot_node,
                    targets,
                })
                .collect(),
        }
    }
}

fn hole_nodes(h: &crate::ring::Hole, n: usize) -> Vec<usize> {
    h.nodes(n).collect()
}

/// Rules on a support pattern (all counts 0 or 1).
pub fn analyze_support(support: &RingConfig) -> Analysis {
    let m = support.occupied_count();
    if m <= 1 {
        return Builder::new(Tag::Gathered).build();
    }
    let lay = Layout::new(support);
    if lay.runs.is_empty() {
        // Every node occupied.
        return Analysis::unknown();
    }
    let sym = support.classify_symmetry();
    if m % 2 == 1 {
        phase3_odd(&lay, &sym)
    } else {
        analyze_even(&lay, &sym, m)
    }
}

fn phase3_odd(lay: &Layout, sym: &SymmetryInfo) -> Analysis {
    let n = lay.n;
    match sym.cfg_class {
        SymmetryClass::Periodic => Analysis::unknown(),
        SymmetryClass::Symmetric => {
            let Some(axis) = sym.axis_node else {
                return Analysis::unknown();
            };
            if lay.cfg.count(axis) == 0 {
                return Analysis::unknown();
            }
            let center = lay
                .runs
                .iter()
                .position(|r| (axis + n - r.start) % n < r.len)
                .expect("axis node is occupied");
            match lay.r() {
                1 => Builder::new(Tag::P3SingleBlock)
                    .role("axis", vec![axis])
                    .mv((lay.back(axis), axis))
                    .mv((lay.fwd(axis), axis))
                    .build(),
                3 => {
                    if lay.holes[center] != 1 || lay.hole_before(center) != 1 {
                        return Analysis::unknown();
                    }
                    let tag = if lay.runs[center].len == 1 {
                        Tag::Target
                    } else {
                        Tag::P3Absorb
                    };
                    let right = lay.next(center);
                    let left = lay.prev(center);
                    Builder::new(tag)
                        .role("axis", vec![axis])
                        .role("center", lay.run_nodes(center))
                        .mv(lay.exit_back(right))
                        .mv(lay.exit_fwd(left))
                        .build()
                }
                _ => Analysis::unknown(),
            }
        }
        SymmetryClass::Rigid => match lay.r() {
            3 => {
                // One symmetric partner has joined the central run already.
                let Some(a) = (0..3).find(|&i| lay.holes[i] == 1 && lay.hole_before(i) == 1) else {
                    return Analysis::unknown();
                };
                let after = lay.next(a);
                let before = lay.prev(a);
                let (la, lb) = (lay.runs[after].len, lay.runs[before].len);
                let mover = if la == lb + 1 {
                    lay.exit_back(after)
                } else if lb == la + 1 {
                    lay.exit_fwd(before)
                } else {
                    return Analysis::unknown();
                };
                Builder::new(Tag::P3Skew)
                    .role("tower_run", lay.run_nodes(a))
                    .mv(mover)
                    .build()
            }
            2 => {
                // A lone outer robot lags behind its partner.
                let single = (0..2).find(|&i| lay.runs[i].len == 1);
                let Some(s) = single else {
                    return Analysis::unknown();
                };
                let other = 1 - s;
                let mover = if lay.holes[s] == 1 {
                    lay.exit_fwd(s)
                } else if lay.hole_before(s) == 1 {
                    lay.exit_back(s)
                } else {
                    return Analysis::unknown();
                };
                Builder::new(Tag::P3Skew)
                    .role("tower_run", lay.run_nodes(other))
                    .mv(mover)
                    .build()
            }
            _ => Analysis::unknown(),
        },
    }
}

fn analyze_even(lay: &Layout, sym: &SymmetryInfo, k: usize) -> Analysis {
    if sym.cfg_class == SymmetryClass::Periodic {
        return Analysis::unknown();
    }
    let symmetric = sym.cfg_class == SymmetryClass::Symmetric;
    let n = lay.n;
    let runs = &lay.runs;
    match lay.r() {
        1 => {
            if k == 2 {
                // Last robot next to the tower.
                let r = runs[0];
                return Builder::new(Tag::TerminalSkew)
                    .role("r1", vec![r.start, r.end])
                    .mv((r.start, r.end))
                    .mv((r.end, r.start))
                    .build();
            }
            return Builder::new(Tag::Block)
                .role("block", lay.run_nodes(0))
                .mv(lay.exit_back(0))
                .mv(lay.exit_fwd(0))
                .build();
        }
        2 => {
            let (a, b) = (runs[0].len, runs[1].len);
            let one_hole = (0..2).find(|&i| lay.holes[i] == 1);
            if a == b {
                let Some(h) = sym.leader_hole else {
                    return Analysis::unknown();
                };
                let tag = if one_hole.is_some() {
                    Tag::Terminal
                } else {
                    Tag::Start
                };
                let left = lay.back(h.start);
                let right = (h.start + h.size) % n;
                return Builder::new(tag)
                    .role("H", hole_nodes(&h, n))
                    .mv((left, h.start))
                    .mv((right, lay.back(right)))
                    .build();
            }
            if let Some(h) = one_hole {
                // Runs h and h+1 face each other across a single empty node.
                let after = 1 - h;
                if a.abs_diff(b) == 2 {
                    // The bigger run's border r1 is the robot that just crossed.
                    let (r1, mover) = if runs[h].len > runs[after].len {
                        let r1 = runs[h].end;
                        (r1, (lay.back(r1), r1))
                    } else {
                        let r1 = runs[after].start;
                        (r1, (lay.fwd(r1), r1))
                    };
                    return Builder::new(Tag::TerminalSkew)
                        .role("r1", vec![r1])
                        .mv(mover)
                        .build();
                }
                if (a == 1 || b == 1) && a.max(b) == k - 1 && !symmetric {
                    let big = if runs[0].len == k - 1 { 0 } else { 1 };
                    // The border of the big run that does not face the single
                    // robot across the one-node hole.
                    let mover = if lay.holes[big] == 1 {
                        lay.exit_back(big)
                    } else {
                        lay.exit_fwd(big)
                    };
                    return Builder::new(Tag::Biblock)
                        .role("B1", lay.run_nodes(big))
                        .role("B2", lay.run_nodes(1 - big))
                        .mv(mover)
                        .build();
                }
            }
        }
        3 => {
            if let Some(a) = three_runs(lay, symmetric, k) {
                return a;
            }
        }
        4 => {
            if let Some(a) = four_runs(lay, sym, k) {
                return a;
            }
        }
        _ => {}
    }
    phase1(lay, sym, k)
}

fn three_runs(lay: &Layout, symmetric: bool, k: usize) -> Option<Analysis> {
    let runs = &lay.runs;
    let half = k / 2;
    // Even-T / Odd-T: sizes k/2, k/2-1 and 1, the single robot at distance 2
    // from the (k/2 - 1)-run.
    if !symmetric && half >= 3 {
        let find = |len: usize| (0..3).find(|&i| runs[i].len == len);
        if let (Some(big), Some(mid), Some(s)) = (find(half), find(half - 1), find(1)) {
            let s_to_mid_fwd = lay.next(s) == mid;
            let hole_s_mid = if s_to_mid_fwd {
                lay.holes[s]
            } else {
                lay.hole_before(s)
            };
            if hole_s_mid == 1 {
                let hole_s_big = if s_to_mid_fwd {
                    lay.hole_before(s)
                } else {
                    lay.holes[s]
                };
                let roles = |b: Builder| {
                    b.role("Bk2", lay.run_nodes(big))
                        .role("Bk2m1", lay.run_nodes(mid))
                        .role("B1", lay.run_nodes(s))
                };
                if hole_s_big % 2 == 0 {
                    // The big run's border facing the single robot steps out.
                    let mover = if lay.next(big) == s {
                        lay.exit_fwd(big)
                    } else {
                        lay.exit_back(big)
                    };
                    return Some(roles(Builder::new(Tag::EvenT)).mv(mover).build());
                }
                let mover = if s_to_mid_fwd {
                    lay.exit_fwd(s)
                } else {
                    lay.exit_back(s)
                };
                return Some(roles(Builder::new(Tag::OddT)).mv(mover).build());
            }
        }
    }
    // TriBlock: a run with single-node holes on both sides.
    let middle = (0..3).find(|&i| lay.holes[i] == 1 && lay.hole_before(i) == 1)?;
    let after = lay.next(middle);
    let before = lay.prev(middle);
    if symmetric {
        if runs[after].len != runs[before].len || runs[middle].len < 2 {
            return None;
        }
        return Some(
            Builder::new(Tag::TriBlockS)
                .role("B1", lay.run_nodes(middle))
                .mv(lay.exit_back(middle))
                .mv(lay.exit_fwd(middle))
                .build(),
        );
    }
    let (la, lb) = (runs[after].len, runs[before].len);
    // The middle run sheds a robot toward the smaller side run.
    let (b2, b3, mover) = if la == lb + 1 {
        (after, before, lay.exit_back(middle))
    } else if lb == la + 1 {
        (before, after, lay.exit_fwd(middle))
    } else {
        return None;
    };
    Some(
        Builder::new(Tag::TriBlockA)
            .role("B1", lay.run_nodes(middle))
            .role("B2", lay.run_nodes(b2))
            .role("B3", lay.run_nodes(b3))
            .mv(mover)
            .build(),
    )
}

fn four_runs(lay: &Layout, sym: &SymmetryInfo, k: usize) -> Option<Analysis> {
    let n = lay.n;
    let runs = &lay.runs;
    if sym.cfg_class == SymmetryClass::Symmetric {
        let h = sym.leader_hole?;
        let slave = sym.slave_hole?;
        // Index of the run right after the leader hole.
        let l2 = (0..4).find(|&i| (runs[i].start + n - 1) % n == (h.start + h.size - 1) % n)?;
        let l1 = lay.prev(l2);
        let s2 = lay.next(l2);
        let s1 = lay.prev(l1);
        if lay.holes[l2] != 1 || lay.holes[s1] != 1 {
            return None;
        }
        if lay.holes[s2] != slave.size {
            return None;
        }
        return Some(
            Builder::new(Tag::SplitS)
                .role("H", hole_nodes(&h, n))
                .role("slave_hole", hole_nodes(&slave, n))
                .role("L1", lay.run_nodes(l1))
                .role("L2", lay.run_nodes(l2))
                .role("S1", lay.run_nodes(s1))
                .role("S2", lay.run_nodes(s2))
                .mv(lay.exit_fwd(s1))
                .mv(lay.exit_back(s2))
                .build(),
        );
    }
    let even: Vec<usize> = (0..4).filter(|&i| lay.holes[i].is_multiple_of(2)).collect();
    if even.len() != 1 {
        return None;
    }
    let e = even[0];
    // Runs e and e+1 flank the even hole.
    let (x, y) = (e, lay.next(e));
    let (s1, s2) = if runs[x].len == runs[y].len + 1 {
        (x, y)
    } else if runs[y].len == runs[x].len + 1 {
        (y, x)
    } else {
        return None;
    };
    let l1 = if s1 == x { lay.prev(s1) } else { lay.next(s1) };
    let l2 = if s2 == x { lay.prev(s2) } else { lay.next(s2) };
    let hole_between = |a: usize, b: usize| {
        if lay.next(a) == b {
            lay.holes[a]
        } else {
            lay.holes[b]
        }
    };
    let ok = hole_between(s1, l1) == 1
        && hole_between(s2, l2) == 1
        && hole_between(l1, l2) % 2 == 1
        && runs[l2].len == runs[l1].len + 1
        && runs[s1].len + runs[l1].len == k / 2
        && runs[s2].len + runs[l2].len == k / 2;
    if !ok {
        return None;
    }
    let mover = if lay.next(s1) == l1 {
        lay.exit_fwd(s1)
    } else {
        lay.exit_back(s1)
    };
    Some(
        Builder::new(Tag::SplitA)
            .role("S1", lay.run_nodes(s1))
            .role("S2", lay.run_nodes(s2))
            .role("L1", lay.run_nodes(l1))
            .role("L2", lay.run_nodes(l2))
            .mv(mover)
            .build(),
    )
}

/// Robot-level view of a towerless configuration for the Phase-1 rules.
struct Robots {
    n: usize,
    nodes: Vec<usize>,
    /// `gaps[i]`: distance from robot `i` to robot `i+1`.
    gaps: Vec<usize>,
    /// Block index per robot, `None` when isolated.
    block_of: Vec<Option<usize>>,
    block_sizes: Vec<usize>,
}

impl Robots {
    fn m(&self) -> usize {
        self.nodes.len()
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.m()
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.m() - 1) % self.m()
    }

    fn gap_after(&self, i: usize) -> usize {
        self.gaps[i]
    }

    fn gap_before(&self, i: usize) -> usize {
        self.gaps[self.prev(i)]
    }

    fn step_toward_next(&self, i: usize) -> (usize, usize) {
        (self.nodes[i], (self.nodes[i] + 1) % self.n)
    }

    fn step_toward_prev(&self, i: usize) -> (usize, usize) {
        (self.nodes[i], (self.nodes[i] + self.n - 1) % self.n)
    }
}

fn robots_of(cfg: &RingConfig, d: usize) -> Robots {
    let segs = cfg.segments();
    let m = segs.len();
    let nodes: Vec<usize> = segs.iter().map(|s| s.from).collect();
    let gaps: Vec<usize> = segs.iter().map(|s| s.distance).collect();
    let mut block_of = vec![None; m];
    let mut block_sizes = Vec::new();
    if let Some(b) = gaps.iter().position(|&g| g != d) {
        let mut members: Vec<usize> = Vec::new();
        for off in 1..=m {
            let i = (b + off) % m;
            members.push(i);
            if gaps[i] != d {
                if members.len() >= 2 {
                    for &r in &members {
                        block_of[r] = Some(block_sizes.len());
                    }
                    block_sizes.push(members.len());
                }
                members.clear();
            }
        }
    } else {
        block_sizes.push(m);
        block_of.iter_mut().for_each(|b| *b = Some(0));
    }
    Robots {
        n: cfg.n(),
        nodes,
        gaps,
        block_of,
        block_sizes,
    }
}

/// Keeps the candidates whose view is maximal.
fn max_view(cfg: &RingConfig, cands: Vec<(usize, Vec<(usize, usize)>)>) -> Vec<(usize, usize)> {
    let views: Vec<View> = cands
        .iter()
        .map(|(node, _)| cfg.compute_view(*node).expect("occupied"))
        .collect();
    let best = views.iter().max().cloned();
    cands
        .into_iter()
        .zip(views)
        .filter(|(_, v)| Some(v) == best.as_ref())
        .flat_map(|((_, mv), _)| mv)
        .collect()
}

fn phase1(lay: &Layout, sym: &SymmetryInfo, k: usize) -> Analysis {
    let cfg = lay.cfg;
    let n = lay.n;
    let symmetric = sym.cfg_class == SymmetryClass::Symmetric;
    let Ok(d) = cfg.inter_distance() else {
        return Analysis::unknown();
    };
    let rb = robots_of(cfg, d);
    let m = rb.m();
    let nblocks = rb.block_sizes.len();
    let isolated: Vec<usize> = (0..m).filter(|&i| rb.block_of[i].is_none()).collect();
    let biggest = rb.block_sizes.iter().copied().max().unwrap_or(0);

    if d > 1
        && isolated.is_empty()
        && ((nblocks == 1 && rb.block_sizes[0] == k)
            || (nblocks == 2 && rb.block_sizes.iter().all(|&s| s * 2 == k)))
    {
        let Some(h) = sym.leader_hole else {
            return Analysis::unknown();
        };
        // The robots flanking H step away from it.
        let left = (h.start + n - 1) % n;
        let right = (h.start + h.size) % n;
        return Builder::new(Tag::BlockDistance)
            .role("H", hole_nodes(&h, n))
            .mv((left, (left + n - 1) % n))
            .mv((right, (right + 1) % n))
            .build();
    }

    if isolated.is_empty() && nblocks > 2 && rb.block_sizes.iter().all(|&s| s == biggest) {
        return block_mirror(cfg, sym, &rb, symmetric);
    }

    let in_big = |i: usize| rb.block_of[i].is_some_and(|b| rb.block_sizes[b] == biggest);
    // For a robot outside the biggest blocks: distance and step toward each
    // neighboring biggest block it shares a hole with.
    let toward_big = |i: usize| -> Vec<(usize, (usize, usize))> {
        let mut out = Vec::new();
        if in_big(rb.next(i)) && rb.block_of[rb.next(i)] != rb.block_of[i] {
            out.push((rb.gap_after(i), rb.step_toward_next(i)));
        }
        if in_big(rb.prev(i)) && rb.block_of[rb.prev(i)] != rb.block_of[i] {
            out.push((rb.gap_before(i), rb.step_toward_prev(i)));
        }
        out
    };
    let nearest = |opts: Vec<(usize, (usize, usize))>| -> Option<(usize, Vec<(usize, usize)>)> {
        let best = opts.iter().map(|o| o.0).min()?;
        Some((
            best,
            opts.into_iter()
                .filter(|o| o.0 == best)
                .map(|o| o.1)
                .collect(),
        ))
    };

    let iso_near_big: Vec<usize> = isolated
        .iter()
        .copied()
        .filter(|&i| !toward_big(i).is_empty())
        .collect();

    if !iso_near_big.is_empty() {
        let k_minus = k.saturating_sub(2);
        let pair_shares_hole = isolated.len() == 2
            && (rb.next(isolated[0]) == isolated[1] || rb.next(isolated[1]) == isolated[0]);
        let shape_ok = (nblocks == 2 && rb.block_sizes.iter().all(|&s| s * 2 == k_minus))
            || (nblocks == 1 && rb.block_sizes[0] == k_minus);
        if d == 1 && !symmetric && pair_shares_hole && shape_ok {
            // Each isolated robot faces one block across its other side.
            let dist_and_step = |i: usize| {
                let other = if isolated[0] == i {
                    isolated[1]
                } else {
                    isolated[0]
                };
                if rb.next(i) == other {
                    (rb.gap_before(i), rb.step_toward_prev(i))
                } else {
                    (rb.gap_after(i), rb.step_toward_next(i))
                }
            };
            let a = dist_and_step(isolated[0]);
            let b = dist_and_step(isolated[1]);
            let far = a.0.max(b.0);
            let mut bld = Builder::new(Tag::BigBlock1_1)
                .role("isolated", isolated.iter().map(|&i| rb.nodes[i]).collect());
            for x in [a, b] {
                if x.0 == far {
                    bld = bld.mv(x.1);
                }
            }
            return bld.build();
        }
        let cands: Vec<Candidate> = iso_near_big
            .iter()
            .filter_map(|&i| nearest(toward_big(i)).map(|(dist, mv)| (i, dist, mv)))
            .collect();
        return closest_then_view(cfg, Tag::BigBlock1_2, &rb, cands);
    }

    let cands: Vec<Candidate> = (0..m)
        .filter(|&i| !in_big(i))
        .filter_map(|i| nearest(toward_big(i)).map(|(dist, mv)| (i, dist, mv)))
        .collect();
    if cands.is_empty() {
        return Analysis::unknown();
    }
    closest_then_view(cfg, Tag::BigBlock2, &rb, cands)
}

/// Robot index, distance to its target block and its possible moves.
type Candidate = (usize, usize, Vec<(usize, usize)>);

fn closest_then_view(cfg: &RingConfig, tag: Tag, rb: &Robots, cands: Vec<Candidate>) -> Analysis {
    let Some(best) = cands.iter().map(|c| c.1).min() else {
        return Analysis::unknown();
    };
    let closest: Vec<(usize, Vec<(usize, usize)>)> = cands
        .into_iter()
        .filter(|c| c.1 == best)
        .map(|c| (rb.nodes[c.0], c.2))
        .collect();
    let mut bld = Builder::new(tag).role("candidates", closest.iter().map(|c| c.0).collect());
    for mv in max_view(cfg, closest) {
        bld = bld.mv(mv);
    }
    bld.build()
}

fn block_mirror(cfg: &RingConfig, sym: &SymmetryInfo, rb: &Robots, symmetric: bool) -> Analysis {
    let n = rb.n;
    let m = rb.m();
    // Inter-block gaps: robot i is a block's last robot and i+1 the next
    // block's first robot.
    let borders: Vec<usize> = (0..m)
        .filter(|&i| rb.block_of[i] != rb.block_of[rb.next(i)])
        .collect();
    if !symmetric {
        let Some(g) = borders.iter().map(|&i| rb.gap_after(i)).min() else {
            return Analysis::unknown();
        };
        let cands: Vec<(usize, Vec<(usize, usize)>)> = borders
            .iter()
            .filter(|&&i| rb.gap_after(i) == g)
            .flat_map(|&i| {
                let j = rb.next(i);
                [
                    (rb.nodes[i], vec![rb.step_toward_next(i)]),
                    (rb.nodes[j], vec![rb.step_toward_prev(j)]),
                ]
            })
            .collect();
        let mut bld =
            Builder::new(Tag::BlockMirror1).role("S", cands.iter().map(|c| c.0).collect());
        for mv in max_view(cfg, cands) {
            bld = bld.mv(mv);
        }
        return bld.build();
    }
    let Some(h) = sym.leader_hole else {
        return Analysis::unknown();
    };
    // Robot right before H.
    let Some(before_h) = (0..m).find(|&i| (rb.nodes[i] + 1) % n == h.start) else {
        return Analysis::unknown();
    };
    let after_h = rb.next(before_h);
    let guide: Vec<usize> = if rb.block_of[before_h] == rb.block_of[after_h] {
        vec![rb.block_of[before_h].expect("no isolated robots")]
    } else {
        vec![
            rb.block_of[before_h].expect("no isolated robots"),
            rb.block_of[after_h].expect("no isolated robots"),
        ]
    };
    let mut bld = Builder::new(Tag::BlockMirror2).role("H", hole_nodes(&h, n));
    for &i in &borders {
        let j = rb.next(i);
        if i == before_h {
            continue;
        }
        let (bi, bj) = (
            rb.block_of[i].expect("block"),
            rb.block_of[j].expect("block"),
        );
        if guide.contains(&bi) && !guide.contains(&bj) {
            bld = bld.mv(rb.step_toward_prev(j));
        } else if guide.contains(&bj) && !guide.contains(&bi) {
            bld = bld.mv(rb.step_toward_next(i));
        }
    }
    bld.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> RingConfig {
        s.parse().unwrap()
    }

    fn moves(s: &str) -> Vec<(usize, Vec<usize>)> {
        enabled_moves(&cfg(s))
            .unwrap()
            .into_iter()
            .map(|m| (m.robot_node, m.targets))
            .collect()
    }

    #[test]
    fn terminal_and_block_examples() {
        let t = classify_protocol_state(&cfg("11111.11111...."));
        assert_eq!(t.tag, Tag::Terminal);
        assert_eq!(t.roles["H"], vec![5]);
        assert_eq!(moves("11111.11111...."), vec![(4, vec![5]), (6, vec![5])]);

        assert_eq!(
            classify_protocol_state(&cfg("1111111111.....")).tag,
            Tag::Block
        );
        assert_eq!(moves("1111111111....."), vec![(0, vec![14]), (9, vec![10])]);
    }

    #[test]
    fn target_example() {
        let c = cfg("1111.2.1111....");
        let s = classify_protocol_state(&c);
        assert_eq!(s.tag, Tag::Target);
        assert_eq!(s.roles["tower"], vec![5]);
        assert_eq!(moves("1111.2.1111...."), vec![(3, vec![4]), (7, vec![6])]);
    }

    #[test]
    fn gathered_has_no_moves() {
        assert_eq!(
            classify_protocol_state(&cfg("a..............")).tag,
            Tag::Gathered
        );
        assert!(moves("a..............").is_empty());
    }

    #[test]
    fn unknown_fallbacks() {
        // Two towers.
        assert_eq!(
            classify_protocol_state(&cfg("2.2.1111.......")).tag,
            Tag::Unknown
        );
        // Odd robot count without towers.
        assert_eq!(
            classify_protocol_state(&cfg("111............")).tag,
            Tag::Unknown
        );
        // Periodic.
        assert_eq!(
            classify_protocol_state(&cfg("11.11.11.11.11.")).tag,
            Tag::Unknown
        );
        assert!(matches!(
            enabled_moves(&cfg("11.11.11.11.11.")),
            Err(ProtocolError::NoRule(_))
        ));
    }

    #[test]
    fn phases() {
        assert_eq!(Tag::Block.phase(), Some(Phase::Phase2));
        assert_eq!(Tag::BigBlock2.phase(), Some(Phase::Phase1));
        assert_eq!(Tag::Gathered.phase(), Some(Phase::Done));
        assert_eq!(Tag::Terminal.phase(), Some(Phase::Phase3));
        assert_eq!(Tag::Unknown.phase(), None);
    }

    #[test]
    fn local_decisions_on_block() {
        let c = cfg("1111111111.....");
        let v0 = c.compute_view(0).unwrap();
        // Robot 0 reads counter-clockwise first (5-gap side is larger).
        assert_eq!(
            local_decide(&v0).unwrap(),
            LocalDecision::Move(ViewDirection::Forward)
        );
        let v5 = c.compute_view(5).unwrap();
        assert_eq!(local_decide(&v5).unwrap(), LocalDecision::Stay);
    }

    #[test]
    fn tower_robot_stays() {
        let c = cfg("1111.2.1111....");
        assert_eq!(
            local_decide(&c.compute_view(5).unwrap()).unwrap(),
            LocalDecision::Stay
        );
    }

    #[test]
    fn phase2_shapes() {
        // n = 15, k = 10.
        let cases = [
            ("11111...11111..", Tag::Start),
            ("11111.1111.1...", Tag::OddT),
            ("1111.1.1.1111..", Tag::SplitS),
            ("111111111.1....", Tag::Biblock),
            ("1.11111111.1...", Tag::TriBlockS),
            ("11.1111111.1...", Tag::TriBlockA),
            ("111111.1111....", Tag::TerminalSkew),
        ];
        for (s, tag) in cases {
            assert_eq!(classify_protocol_state(&cfg(s)).tag, tag, "{s}");
        }
    }
}
