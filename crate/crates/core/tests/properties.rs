use std::collections::BTreeSet;

use proptest::prelude::*;

use ring_gather::checker::check_replay;
use ring_gather::protocol::analyze;
use ring_gather::sim::{replay, run, RunLimits, SchedulerKind};
use ring_gather::{classify_protocol_state, enabled_moves, Phase, RingConfig, SymmetryClass, Tag};

/// Towerless configuration with `k` robots on an `n`-ring.
fn config(n: usize, k: usize) -> impl Strategy<Value = RingConfig> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), k)
        .prop_map(move |pos| RingConfig::from_positions(n, &pos).unwrap())
}

/// Any towerless configuration on a small ring.
fn any_config() -> impl Strategy<Value = RingConfig> {
    (3usize..=21)
        .prop_flat_map(|n| (Just(n), 1..=n))
        .prop_flat_map(|(n, k)| config(n, k))
}

/// Valid starting configuration: odd ring, even k > 8, n > k + 3, aperiodic.
fn start() -> impl Strategy<Value = RingConfig> {
    prop_oneof![
        (Just(15usize), Just(10usize)),
        (Just(17), Just(10)),
        (Just(19), Just(12)),
        (Just(21), Just(10))
    ]
    .prop_flat_map(|(n, k)| config(n, k))
    .prop_filter("aperiodic", |c| {
        c.classify_symmetry().cfg_class != SymmetryClass::Periodic
    })
}

fn scheduler() -> impl Strategy<Value = SchedulerKind> {
    prop_oneof![
        Just(SchedulerKind::Synchronous),
        any::<u64>().prop_map(|seed| SchedulerKind::RandomFair { seed }),
        any::<u64>().prop_map(|seed| SchedulerKind::Lazy { seed }),
    ]
}

/// Moves as a set of `(from, sorted targets)`.
fn move_set(cfg: &RingConfig, map: impl Fn(usize) -> usize) -> BTreeSet<(usize, Vec<usize>)> {
    analyze(cfg)
        .moves
        .into_iter()
        .map(|m| {
            let mut t: Vec<usize> = m.targets.into_iter().map(&map).collect();
            t.sort_unstable();
            (map(m.robot_node), t)
        })
        .collect()
}

proptest! {
    #[test]
    fn canonical_form_is_dihedral_invariant(cfg in any_config(), s in 0usize..64, c in 0usize..64) {
        let canon = cfg.canonical_form();
        prop_assert_eq!(cfg.rotated(s).canonical_form(), canon.clone());
        prop_assert_eq!(cfg.reflected(c).canonical_form(), canon.clone());
        prop_assert_eq!(cfg.canonical().to_string(), canon);
    }

    #[test]
    fn occupancy_string_round_trips(cfg in any_config()) {
        let back: RingConfig = cfg.to_string().parse().unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn views_move_with_the_ring(cfg in any_config(), s in 0usize..64, c in 0usize..64) {
        let n = cfg.n();
        for v in cfg.occupied() {
            let view = cfg.compute_view(v).unwrap();
            prop_assert_eq!(view.ring_size(), n);
            prop_assert_eq!(view.dists.len(), cfg.occupied_count());
            prop_assert_eq!(cfg.rotated(s).compute_view((v + s) % n).unwrap(), view.clone());
            prop_assert_eq!(cfg.reflected(c).compute_view((c % n + n - v) % n).unwrap(), view.clone());
            let (cw, ccw) = cfg.readings(v).unwrap();
            prop_assert_eq!(view.is_symmetric(), cw == ccw);
        }
    }

    #[test]
    fn symmetry_class_matches_stabilizer(cfg in any_config()) {
        let n = cfg.n();
        let info = cfg.classify_symmetry();
        let periodic = (1..n).any(|s| cfg.rotated(s) == cfg);
        let mirror = (0..n).find(|&c| cfg.reflected(c) == cfg);
        let expected = match (periodic, mirror) {
            (true, _) => SymmetryClass::Periodic,
            (false, Some(_)) => SymmetryClass::Symmetric,
            (false, None) => SymmetryClass::Rigid,
        };
        prop_assert_eq!(info.cfg_class, expected);
        if expected == SymmetryClass::Symmetric {
            prop_assert_eq!(info.reflection, mirror);
        }
    }

    #[test]
    fn classification_commutes_with_symmetries(cfg in start(), s in 0usize..64, c in 0usize..64) {
        let n = cfg.n();
        let tag = classify_protocol_state(&cfg).tag;
        prop_assert_eq!(classify_protocol_state(&cfg.rotated(s)).tag, tag);
        prop_assert_eq!(classify_protocol_state(&cfg.reflected(c)).tag, tag);
        prop_assert_eq!(move_set(&cfg.rotated(s), |v| v), move_set(&cfg, |v| (v + s) % n));
        prop_assert_eq!(move_set(&cfg.reflected(c), |v| v), move_set(&cfg, |v| (c % n + n - v) % n));
    }

    #[test]
    fn movers_are_a_single_robot_or_a_mirror_pair(cfg in start()) {
        let state = classify_protocol_state(&cfg);
        prop_assume!(matches!(state.tag.phase(), Some(Phase::Phase1 | Phase::Phase2)));
        let moves = enabled_moves(&cfg).unwrap();
        let info = cfg.classify_symmetry();
        match info.reflection {
            None => prop_assert_eq!(moves.len(), 1, "{} {}", cfg, state.tag),
            Some(c) => {
                prop_assert!(moves.len() == 2, "{} {}", cfg, state.tag);
                let n = cfg.n();
                let set = move_set(&cfg, |v| v);
                prop_assert_eq!(move_set(&cfg, |v| (c + n - v) % n), set);
            }
        }
        for m in &moves {
            prop_assert!(cfg.count(m.robot_node) == 1);
            for &t in &m.targets {
                prop_assert!(t == cfg.step(m.robot_node, true) || t == cfg.step(m.robot_node, false));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_conserve_robots_and_replay(cfg in start(), kind in scheduler()) {
        let limits = RunLimits::for_k(cfg.k());
        let trace = run(&cfg, kind, limits).unwrap();
        let k = cfg.k();
        for c in trace.configs().unwrap() {
            prop_assert_eq!(c.k(), k);
            prop_assert_eq!(c.n(), cfg.n());
        }
        let mut last = 0;
        for (i, e) in trace.events.iter().enumerate() {
            prop_assert_eq!(e.step, i as u64);
            prop_assert!(e.round >= last);
            last = e.round;
            if let Some(to) = e.to {
                prop_assert!(to == (e.from + 1) % cfg.n() || e.from == (to + 1) % cfg.n());
            }
        }
        prop_assert!(check_replay(&trace).passed);
        let end = replay(&trace).unwrap();
        prop_assert_eq!(end.round, trace.rounds);
        let again = run(&cfg, kind, limits).unwrap();
        prop_assert_eq!(again.to_jsonl(), trace.to_jsonl());
    }

    #[test]
    fn terminal_configurations_have_their_shape(cfg in start()) {
        let trace = run(&cfg, SchedulerKind::Synchronous, RunLimits::for_k(cfg.k())).unwrap();
        let k = cfg.k();
        for c in trace.configs().unwrap() {
            if classify_protocol_state(&c).tag != Tag::Terminal {
                continue;
            }
            prop_assert_eq!(c.classify_symmetry().cfg_class, SymmetryClass::Symmetric);
            let holes = c.holes();
            let h: Vec<_> = holes.iter().filter(|h| h.size == 1).collect();
            prop_assert_eq!(h.len(), 1, "{}", c);
            let blocks = c.decompose_blocks().unwrap();
            let mut sizes: Vec<usize> = blocks.blocks.iter().map(|b| b.size).collect();
            sizes.sort_unstable();
            prop_assert_eq!(sizes, vec![k / 2, k / 2]);
            let hole = h[0].start;
            let moves = enabled_moves(&c).unwrap();
            prop_assert_eq!(moves.len(), 2);
            prop_assert!(moves.iter().all(|m| m.targets == vec![hole]));
        }
    }
}
