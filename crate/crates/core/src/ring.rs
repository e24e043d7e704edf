//! Geometry of robot configurations on an anonymous ring.
//!
//! Everything here is a pure function of a [`RingConfig`]. Node indices are
//! positional labels used by the simulator; robots never see them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::RingError;

/// Highest per-node count the occupancy string can carry (`'z'`).
pub const MAX_ENCODED_COUNT: u32 = 35;

/// Robot count per node of an `n`-node ring.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingConfig {
    occ: Vec<u32>,
}

/// A run of empty nodes between two segment endpoints, walking clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub from: usize,
    pub to: usize,
    pub distance: usize,
}

/// Maximal run of consecutive empty nodes, starting at `start` clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hole {
    pub start: usize,
    pub size: usize,
}

impl Hole {
    pub fn contains(&self, node: usize, n: usize) -> bool {
        (node + n - self.start) % n < self.size
    }

    pub fn nodes(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).map(move |i| (self.start + i) % n)
    }
}

/// What a robot perceives: the larger of its two distance readings plus
/// whether its own node holds a tower.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct View {
    pub dists: Vec<usize>,
    pub tower_here: bool,
}

impl View {
    pub fn ring_size(&self) -> usize {
        self.dists.iter().sum()
    }

    /// Both directions read the same sequence.
    pub fn is_symmetric(&self) -> bool {
        is_palindromic_reading(&self.dists)
    }
}

/// A cyclic distance reading `(D1..Dw)` equals its reverse `(Dw..D1)`.
fn is_palindromic_reading(dists: &[usize]) -> bool {
    dists.iter().eq(dists.iter().rev())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    Rigid,
    Symmetric,
    Periodic,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryClass::Rigid => "Rigid",
            SymmetryClass::Symmetric => "Symmetric",
            SymmetryClass::Periodic => "Periodic",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryInfo {
    pub cfg_class: SymmetryClass,
    /// Node fixed by the reflection (`c - i ≡ i`), when one exists.
    pub axis_node: Option<usize>,
    /// Edge `{a, a+1}` fixed by the reflection, when one exists.
    pub axis_edge: Option<(usize, usize)>,
    pub leader_hole: Option<Hole>,
    pub slave_hole: Option<Hole>,
    /// Reflection constant `c` of the map `i ↦ c - i (mod n)`.
    pub reflection: Option<usize>,
}

/// Maximal run of robots spaced exactly `d` apart (at least two robots).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    /// First robot, walking clockwise.
    pub start: usize,
    /// Last robot, walking clockwise.
    pub end: usize,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    pub d: usize,
    pub blocks: Vec<Block>,
    pub isolated: Vec<usize>,
    pub holes: Vec<Hole>,
}

impl RingConfig {
    pub fn new(occ: Vec<u32>) -> Result<Self, RingError> {
        if occ.is_empty() {
            return Err(RingError::EmptyRing);
        }
        Ok(RingConfig { occ })
    }

    pub fn empty(n: usize) -> Result<Self, RingError> {
        RingConfig::new(vec![0; n])
    }

    /// One robot on each listed node.
    pub fn from_positions(n: usize, nodes: &[usize]) -> Result<Self, RingError> {
        let mut cfg = RingConfig::empty(n)?;
        for &v in nodes {
            if v >= n {
                return Err(RingError::NodeOutOfRange { node: v, n });
            }
            cfg.occ[v] += 1;
        }
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.occ.len()
    }

    /// Total robot count.
    pub fn k(&self) -> usize {
        self.occ.iter().map(|&c| c as usize).sum()
    }

    pub fn occ(&self) -> &[u32] {
        &self.occ
    }

    pub fn count(&self, node: usize) -> u32 {
        self.occ[node % self.n()]
    }

    pub fn add_robot(&mut self, node: usize) {
        let n = self.n();
        self.occ[node % n] += 1;
    }

    pub fn remove_robot(&mut self, node: usize) -> Result<(), RingError> {
        let n = self.n();
        let slot = &mut self.occ[node % n];
        if *slot == 0 {
            return Err(RingError::NoRobot(node));
        }
        *slot -= 1;
        Ok(())
    }

    /// Occupied nodes in increasing index order.
    pub fn occupied(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.occ[i] > 0).collect()
    }

    pub fn occupied_count(&self) -> usize {
        self.occ.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_towerless(&self) -> bool {
        self.occ.iter().all(|&c| c <= 1)
    }

    pub fn max_count(&self) -> u32 {
        self.occ.iter().copied().max().unwrap_or(0)
    }

    pub fn towers(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.occ[i] >= 2).collect()
    }

    /// Clockwise distance from `a` to `b`.
    pub fn cw_dist(&self, a: usize, b: usize) -> usize {
        let n = self.n();
        (b + n - a % n) % n
    }

    pub fn step(&self, node: usize, forward: bool) -> usize {
        let n = self.n();
        if forward {
            (node + 1) % n
        } else {
            (node + n - 1) % n
        }
    }

    /// Segments between consecutive occupied nodes, clockwise from the
    /// lowest occupied index. A single occupied node yields one segment of
    /// length `n` back to itself.
    pub fn segments(&self) -> Vec<Segment> {
        let occ = self.occupied();
        let n = self.n();
        let m = occ.len();
        (0..m)
            .map(|i| {
                let from = occ[i];
                let to = occ[(i + 1) % m];
                let distance = if m == 1 { n } else { (to + n - from) % n };
                Segment { from, to, distance }
            })
            .collect()
    }

    pub fn holes(&self) -> Vec<Hole> {
        let n = self.n();
        self.segments()
            .into_iter()
            .filter(|s| s.distance >= 2)
            .map(|s| Hole {
                start: (s.from + 1) % n,
                size: s.distance - 1,
            })
            .collect()
    }

    /// The hole containing an empty node.
    pub fn hole_at(&self, node: usize) -> Option<Hole> {
        let n = self.n();
        if self.occ[node % n] > 0 || self.occupied_count() == 0 {
            return None;
        }
        self.holes().into_iter().find(|h| h.contains(node, n))
    }

    /// Distance readings from `node` walking clockwise and counter-clockwise.
    pub fn readings(&self, node: usize) -> Result<(Vec<usize>, Vec<usize>), RingError> {
        let n = self.n();
        let node = node % n;
        if self.occ[node] == 0 {
            return Err(RingError::NoRobot(node));
        }
        let mut cw = Vec::new();
        let mut last = 0;
        for step in 1..=n {
            if self.occ[(node + step) % n] > 0 {
                cw.push(step - last);
                last = step;
            }
        }
        let ccw: Vec<usize> = cw.iter().rev().copied().collect();
        Ok((cw, ccw))
    }

    pub fn compute_view(&self, node: usize) -> Result<View, RingError> {
        let (cw, ccw) = self.readings(node)?;
        let dists = if cw >= ccw { cw } else { ccw };
        Ok(View {
            dists,
            tower_here: self.occ[node % self.n()] >= 2,
        })
    }

    /// `Greater` when the view reads clockwise, `Less` when counter-clockwise,
    /// `Equal` when both directions read the same.
    pub fn view_orientation(&self, node: usize) -> Result<Ordering, RingError> {
        let (cw, ccw) = self.readings(node)?;
        Ok(cw.cmp(&ccw))
    }

    pub fn rotated(&self, shift: usize) -> RingConfig {
        let n = self.n();
        let occ = (0..n).map(|i| self.occ[(i + n - shift % n) % n]).collect();
        RingConfig { occ }
    }

    /// Image under `i ↦ c - i (mod n)`.
    pub fn reflected(&self, c: usize) -> RingConfig {
        let n = self.n();
        let occ = (0..n).map(|i| self.occ[(c % n + n - i) % n]).collect();
        RingConfig { occ }
    }

    pub fn classify_symmetry(&self) -> SymmetryInfo {
        let n = self.n();
        let period = minimal_period(&self.occ);
        let none = SymmetryInfo {
            cfg_class: SymmetryClass::Rigid,
            axis_node: None,
            axis_edge: None,
            leader_hole: None,
            slave_hole: None,
            reflection: None,
        };
        if period < n && self.k() > 0 {
            return SymmetryInfo {
                cfg_class: SymmetryClass::Periodic,
                ..none
            };
        }
        let Some(c) = reflection_constant(&self.occ) else {
            return none;
        };
        // Fixed nodes solve 2i ≡ c, fixed edges {j, j+1} solve 2j+1 ≡ c.
        let (axis_node, axis_edge) = if n % 2 == 1 {
            let half = n.div_ceil(2);
            let node = (c * half) % n;
            let j = ((c + n - 1) * half) % n;
            (Some(node), Some((j, (j + 1) % n)))
        } else if c % 2 == 0 {
            (Some(c / 2), None)
        } else {
            let j = (c - 1) / 2;
            (None, Some((j, (j + 1) % n)))
        };
        let leader_hole = axis_node.and_then(|v| self.hole_at(v));
        let slave_hole = axis_edge.and_then(|(a, b)| {
            if self.occ[a] == 0 && self.occ[b] == 0 {
                self.hole_at(a)
            } else {
                None
            }
        });
        SymmetryInfo {
            cfg_class: SymmetryClass::Symmetric,
            axis_node,
            axis_edge,
            leader_hole,
            slave_hole,
            reflection: Some(c),
        }
    }

    pub fn inter_distance(&self) -> Result<usize, RingError> {
        if self.occupied_count() < 2 {
            return Err(RingError::InterDistanceUndefined);
        }
        Ok(self
            .segments()
            .iter()
            .map(|s| s.distance)
            .min()
            .expect("at least two segments"))
    }

    pub fn decompose_blocks(&self) -> Result<BlockDecomposition, RingError> {
        if !self.is_towerless() {
            return Err(RingError::TowerDecomposition);
        }
        let d = self.inter_distance()?;
        let segs = self.segments();
        let m = segs.len();
        let mut blocks = Vec::new();
        let mut isolated = Vec::new();
        match segs.iter().position(|s| s.distance != d) {
            None => {
                // Every gap equals d: the whole ring is one closed run.
                blocks.push(Block {
                    start: segs[0].from,
                    end: segs[m - 1].from,
                    size: m,
                });
            }
            Some(breaker) => {
                // Walk robots starting just after a gap that is not d.
                let mut run_start: Option<usize> = None;
                let mut run_len = 0;
                for off in 1..=m {
                    let i = (breaker + off) % m;
                    let robot = segs[i].from;
                    if run_start.is_none() {
                        run_start = Some(robot);
                        run_len = 1;
                    } else {
                        run_len += 1;
                    }
                    if segs[i].distance != d {
                        let start = run_start.take().expect("open run");
                        if run_len >= 2 {
                            blocks.push(Block {
                                start,
                                end: robot,
                                size: run_len,
                            });
                        } else {
                            isolated.push(robot);
                        }
                    }
                }
            }
        }
        blocks.sort_by_key(|b| b.start);
        isolated.sort_unstable();
        Ok(BlockDecomposition {
            d,
            blocks,
            isolated,
            holes: self.holes(),
        })
    }

    /// Smallest encoding over all rotations and reflections.
    pub fn canonical_form(&self) -> String {
        let fwd = encode_counts(&self.occ);
        let rev: Vec<u8> = fwd.iter().rev().copied().collect();
        let a = least_rotation(&fwd);
        let b = least_rotation(&rev);
        let best = a.min(b);
        String::from_utf8(best).expect("ascii encoding")
    }

    pub fn canonical(&self) -> RingConfig {
        self.canonical_form()
            .parse()
            .expect("canonical form round-trips")
    }
}

/// Smallest `p` dividing `n` with `s[i] == s[(i + p) % n]`, via the prefix
/// function of `s`.
fn minimal_period<T: PartialEq>(s: &[T]) -> usize {
    let n = s.len();
    let fail = prefix_function(s);
    let p = n - fail[n - 1];
    if n.is_multiple_of(p) {
        p
    } else {
        n
    }
}

fn prefix_function<T: PartialEq>(s: &[T]) -> Vec<usize> {
    let mut pi = vec![0; s.len()];
    for i in 1..s.len() {
        let mut j = pi[i - 1];
        while j > 0 && s[i] != s[j] {
            j = pi[j - 1];
        }
        if s[i] == s[j] {
            j += 1;
        }
        pi[i] = j;
    }
    pi
}

/// Finds `c` with `occ[i] == occ[(c - i) mod n]` for all `i` by searching the
/// reversed sequence inside the doubled one.
fn reflection_constant(occ: &[u32]) -> Option<usize> {
    let n = occ.len();
    let rev: Vec<u32> = occ.iter().rev().copied().collect();
    let pi = prefix_function(&rev);
    let mut j = 0;
    for i in 0..(2 * n - 1) {
        let x = occ[i % n];
        while j > 0 && x != rev[j] {
            j = pi[j - 1];
        }
        if x == rev[j] {
            j += 1;
        }
        if j == n {
            // rev[t] == occ[s + t] with s = i + 1 - n, so c = n - 1 + s.
            let s = i + 1 - n;
            return Some((n - 1 + s) % n);
        }
    }
    None
}

/// Booth's least-rotation algorithm; returns the rotated sequence.
fn least_rotation(s: &[u8]) -> Vec<u8> {
    let n = s.len();
    let doubled: Vec<u8> = s.iter().chain(s.iter()).copied().collect();
    let mut fail: Vec<isize> = vec![-1; doubled.len()];
    let mut k: usize = 0;
    for j in 1..doubled.len() {
        let sj = doubled[j];
        let mut i = fail[j - k - 1];
        while i != -1 && sj != doubled[k + (i + 1) as usize] {
            if sj < doubled[k + (i + 1) as usize] {
                k = j - (i + 1) as usize;
            }
            i = fail[i as usize];
        }
        if sj != doubled[k + (i + 1) as usize] {
            // i == -1
            if sj < doubled[k] {
                k = j;
            }
            fail[j - k] = -1;
        } else {
            fail[j - k] = i + 1;
        }
    }
    doubled[k..k + n].to_vec()
}

fn encode_count(c: u32) -> u8 {
    match c {
        0 => b'.',
        1..=9 => b'0' + c as u8,
        10..=MAX_ENCODED_COUNT => b'a' + (c - 10) as u8,
        _ => b'?',
    }
}

fn encode_counts(occ: &[u32]) -> Vec<u8> {
    occ.iter().map(|&c| encode_count(c)).collect()
}

impl fmt::Display for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bytes = encode_counts(&self.occ);
        f.write_str(std::str::from_utf8(&bytes).expect("ascii"))
    }
}

impl fmt::Debug for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingConfig(\"{self}\")")
    }
}

impl RingConfig {
    /// Encoding check used by trace writers: every count must fit one
    /// character.
    pub fn encodable(&self) -> Result<(), RingError> {
        match self.occ.iter().position(|&c| c > MAX_ENCODED_COUNT) {
            Some(i) => Err(RingError::CountTooLarge {
                node: i,
                count: self.occ[i],
            }),
            None => Ok(()),
        }
    }
}

impl FromStr for RingConfig {
    type Err = RingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let occ = s
            .chars()
            .enumerate()
            .map(|(i, ch)| match ch {
                '.' => Ok(0),
                '1'..='9' => Ok(ch as u32 - '0' as u32),
                'a'..='z' => Ok(ch as u32 - 'a' as u32 + 10),
                _ => Err(RingError::BadOccupancyChar { ch, pos: i }),
            })
            .collect::<Result<Vec<u32>, _>>()?;
        RingConfig::new(occ)
    }
}

impl Serialize for RingConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RingConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, nodes: &[usize]) -> RingConfig {
        RingConfig::from_positions(n, nodes).unwrap()
    }

    #[test]
    fn view_takes_larger_reading() {
        let v = cfg(7, &[0, 1, 3]).compute_view(0).unwrap();
        assert_eq!(v.dists, vec![4, 2, 1]);
        assert!(!v.tower_here);
    }

    #[test]
    fn single_robot_view() {
        let v = cfg(5, &[0]).compute_view(0).unwrap();
        assert_eq!(v.dists, vec![5]);
        assert!(v.is_symmetric());
    }

    #[test]
    fn tower_flag_is_local() {
        let c: RingConfig = "2..1...".parse().unwrap();
        assert!(c.compute_view(0).unwrap().tower_here);
        assert!(!c.compute_view(3).unwrap().tower_here);
    }

    #[test]
    fn view_of_empty_node_errors() {
        let err = cfg(7, &[0]).compute_view(2).unwrap_err();
        assert_eq!(err.to_string(), "no robot at node 2");
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(
            cfg(9, &[0, 3, 6]).classify_symmetry().cfg_class,
            SymmetryClass::Periodic
        );
        let s = cfg(7, &[1, 6]).classify_symmetry();
        assert_eq!(s.cfg_class, SymmetryClass::Symmetric);
        assert_eq!(s.axis_node, Some(0));
        assert_eq!(s.axis_edge, Some((3, 4)));
        assert_eq!(
            cfg(7, &[0, 1, 3]).classify_symmetry().cfg_class,
            SymmetryClass::Rigid
        );
    }

    #[test]
    fn terminal_holes() {
        let c: RingConfig = "11111.11111....".parse().unwrap();
        let s = c.classify_symmetry();
        assert_eq!(s.axis_node, Some(5));
        assert_eq!(s.leader_hole, Some(Hole { start: 5, size: 1 }));
        assert_eq!(s.slave_hole, Some(Hole { start: 11, size: 4 }));
    }

    #[test]
    fn inter_distance_examples() {
        assert_eq!(cfg(7, &[0, 1, 2, 4]).inter_distance().unwrap(), 1);
        assert_eq!(cfg(15, &[0, 3, 6, 9]).inter_distance().unwrap(), 3);
        assert_eq!(cfg(5, &[0, 2]).inter_distance().unwrap(), 2);
        assert!(matches!(
            cfg(5, &[3]).inter_distance(),
            Err(RingError::InterDistanceUndefined)
        ));
    }

    #[test]
    fn decomposition_examples() {
        let b = cfg(7, &[0, 1, 2, 4]).decompose_blocks().unwrap();
        assert_eq!(b.d, 1);
        assert_eq!(
            b.blocks,
            vec![Block {
                start: 0,
                end: 2,
                size: 3
            }]
        );
        assert_eq!(b.isolated, vec![4]);
        assert_eq!(
            b.holes,
            vec![Hole { start: 3, size: 1 }, Hole { start: 5, size: 2 }]
        );

        let all: Vec<usize> = (0..10).collect();
        let b = cfg(15, &all).decompose_blocks().unwrap();
        assert_eq!(b.blocks.len(), 1);
        assert_eq!(b.blocks[0].size, 10);
        assert!(b.isolated.is_empty());
        assert_eq!(b.holes, vec![Hole { start: 10, size: 5 }]);

        let b = cfg(15, &[0, 2, 4, 8, 10]).decompose_blocks().unwrap();
        assert_eq!(b.d, 2);
        let sizes: Vec<usize> = b.blocks.iter().map(|x| x.size).collect();
        assert_eq!(sizes, vec![3, 2]);
        assert_eq!(b.blocks[0].start, 0);
        assert_eq!(b.blocks[1].start, 8);
        assert!(b.isolated.is_empty());
    }

    #[test]
    fn decomposition_rejects_towers() {
        let c: RingConfig = "2.1....".parse().unwrap();
        assert!(matches!(
            c.decompose_blocks(),
            Err(RingError::TowerDecomposition)
        ));
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(
            cfg(5, &[1, 2]).canonical_form(),
            cfg(5, &[0, 4]).canonical_form()
        );
        assert_ne!(
            cfg(5, &[0, 1]).canonical_form(),
            cfg(5, &[0, 2]).canonical_form()
        );
        let c = cfg(9, &[0, 3, 6]);
        assert_eq!(c.canonical_form(), c.rotated(3).canonical_form());
        assert_eq!(cfg(5, &[0, 1]).canonical_form(), "...11");
    }

    #[test]
    fn encoding_round_trip_with_tall_towers() {
        let c: RingConfig = "a....".parse().unwrap();
        assert_eq!(c.k(), 10);
        assert_eq!(c.to_string(), "a....");
        assert!(matches!(
            "1x#".parse::<RingConfig>(),
            Err(RingError::BadOccupancyChar { ch: '#', pos: 2 })
        ));
    }
}
