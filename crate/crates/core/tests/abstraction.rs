use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynspatial::events::{describe_scene, detect_transitions, Predicate, Reference};
use dynspatial::geometry::{
    footprint, gen_scene, load_scene, scene_to_json, BlockSpec, Color, EntityKind, MotionScript, Rect, Scene,
    StaticSpec,
};
use dynspatial::intervals::{allen_relation, intervals_from_series, AllenRel, TickInterval};
use dynspatial::qualitative::{
    extract_fluents, orientation_at, rcc5_at, AbstractionParams, DepthRel, Family, HorizontalRel, Rcc5Rel,
    Relation,
};

const CANONICAL: &str = include_str!("../fixtures/canonical.json");

fn scene_from_seed(seed: u64, ticks: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let statics = (0..2)
        .map(|i| {
            let (x, y) = (rng.random_range(1.0..6.0), rng.random_range(1.0..6.0));
            StaticSpec {
                id: format!("reg-{i}"),
                kind: EntityKind::Region,
                color: Color::Named("red".into()),
                rect: [
                    x,
                    y,
                    x + rng.random_range(1.0..3.0),
                    y + rng.random_range(1.0..3.0),
                ],
                pose: None,
            }
        })
        .collect();
    let blocks = (0..2)
        .map(|i| {
            let legs = rng.random_range(1..4usize);
            BlockSpec {
                id: format!("obj-{i}"),
                color: Color::Named("green".into()),
                extent: [0.4, 0.4],
                waypoints: (0..=legs)
                    .map(|_| [rng.random_range(0.0..9.0), rng.random_range(0.0..9.0)])
                    .collect(),
                segment_ticks: (0..legs).map(|_| rng.random_range(5..ticks / legs)).collect(),
            }
        })
        .collect();
    let script = MotionScript {
        dt: 0.1,
        n_ticks: Some(ticks),
        statics,
        blocks,
    };
    let noise = if rng.random_bool(0.5) { 0.0 } else { 0.01 };
    gen_scene(&script, noise, seed).unwrap()
}

/// One block passing back and forth through the center of one region at
/// 0.05 m per tick, starting and ending well outside it.
fn passing_scene(seed: u64, angle: f64, passes: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = (rng.random_range(3.0..6.0), rng.random_range(3.0..6.0));
    let (w, h) = (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0));
    let reach = 3.0;
    let (dx, dy) = (reach * angle.cos(), reach * angle.sin());
    let ends = [[cx + dx, cy + dy], [cx - dx, cy - dy]];
    let waypoints: Vec<[f64; 2]> = (0..=passes).map(|i| ends[i % 2]).collect();
    let script = MotionScript {
        dt: 0.1,
        n_ticks: None,
        statics: vec![StaticSpec {
            id: "reg-0".into(),
            kind: EntityKind::Region,
            color: Color::Named("red".into()),
            rect: [cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0],
            pose: None,
        }],
        blocks: vec![BlockSpec {
            id: "obj-0".into(),
            color: Color::Named("green".into()),
            extent: [0.4, 0.4],
            waypoints,
            segment_ticks: vec![120; passes],
        }],
    };
    gen_scene(&script, 0.0, seed).unwrap()
}

fn rect() -> impl Strategy<Value = Rect> {
    (0u32..10, 1u32..6, 0u32..10, 1u32..6).prop_map(|(x, w, y, h)| {
        Rect::new(
            x as f64 * 0.5,
            y as f64 * 0.5,
            (x + w) as f64 * 0.5,
            (y + h) as f64 * 0.5,
        )
        .unwrap()
    })
}

fn interval() -> impl Strategy<Value = TickInterval> {
    (0usize..50, 0usize..20).prop_map(|(s, len)| TickInterval::new(s, s + len).unwrap())
}

proptest! {
    #[test]
    fn series_runs_are_maximal(series in prop::collection::vec(any::<bool>(), 1..80)) {
        let runs = intervals_from_series(&series);
        let mut covered = vec![false; series.len()];
        for r in &runs {
            covered[r.start()..=r.end()].fill(true);
            prop_assert!(r.start() == 0 || !series[r.start() - 1]);
            prop_assert!(r.end() + 1 == series.len() || !series[r.end() + 1]);
        }
        prop_assert_eq!(covered, series.clone());
        for w in runs.windows(2) {
            prop_assert_eq!(allen_relation(w[0], w[1]), AllenRel::Before);
        }
        // True runs and false runs tile the series, each meeting the next.
        let negated: Vec<bool> = series.iter().map(|b| !b).collect();
        let mut all = runs.clone();
        all.extend(intervals_from_series(&negated));
        all.sort_by_key(|r| r.start());
        for w in all.windows(2) {
            prop_assert_eq!(allen_relation(w[0], w[1]), AllenRel::Meets);
        }
    }

    #[test]
    fn allen_converse(i in interval(), j in interval()) {
        prop_assert_eq!(allen_relation(j, i), allen_relation(i, j).converse());
        prop_assert_eq!(allen_relation(i, j) == AllenRel::Equal, i == j);
    }

    #[test]
    fn rcc5_converse_coherence(a in rect(), b in rect()) {
        let eps = 0.01;
        let expected = match rcc5_at(&a, &b, eps) {
            Rcc5Rel::PP => Rcc5Rel::PPi,
            Rcc5Rel::PPi => Rcc5Rel::PP,
            r => r,
        };
        prop_assert_eq!(rcc5_at(&b, &a, eps), expected);
    }

    #[test]
    fn orientation_converse_coherence(a in rect(), b in rect()) {
        let (ab, ba) = (orientation_at(&a, &b, 0.01), orientation_at(&b, &a, 0.01));
        prop_assert_eq!(ab.horizontal == HorizontalRel::Left, ba.horizontal == HorizontalRel::Right);
        prop_assert_eq!(ab.depth == DepthRel::Closer, ba.depth == DepthRel::Further);
        prop_assert_eq!(ab.horizontal == HorizontalRel::HorizontallyEqual, ba.horizontal == HorizontalRel::HorizontallyEqual);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fluents_tile_each_family(seed in any::<u64>()) {
        let scene = scene_from_seed(seed, 80);
        let params = AbstractionParams::default();
        let fluents = extract_fluents(&scene, &params);
        let mut by_key: BTreeMap<(String, String, Family), Vec<_>> = BTreeMap::new();
        for f in &fluents {
            prop_assert!(f.interval.end() < scene.n_ticks());
            by_key.entry((f.args.0.clone(), f.args.1.clone(), f.relation.family())).or_default().push(f);
        }
        for ((a, b, _), group) in &by_key {
            // Exactly one relation per tick, and the same relation never in adjacent fluents.
            prop_assert_eq!(group[0].interval.start(), 0);
            prop_assert_eq!(group.last().unwrap().interval.end(), scene.n_ticks() - 1);
            for w in group.windows(2) {
                prop_assert_eq!(allen_relation(w[0].interval, w[1].interval), AllenRel::Meets);
                prop_assert_ne!(w[0].relation, w[1].relation);
            }
            for f in group {
                if let Relation::Topology(r) = f.relation {
                    for t in f.interval.start()..=f.interval.end() {
                        let (ra, rb) = (footprint(&scene, a, t).unwrap(), footprint(&scene, b, t).unwrap());
                        prop_assert_eq!(rcc5_at(&ra, &rb, params.eps_geo), r);
                    }
                }
            }
        }
        prop_assert_eq!(extract_fluents(&scene, &params), fluents);
    }

    #[test]
    fn event_atoms_are_coherent(seed in any::<u64>()) {
        let scene = scene_from_seed(seed, 120);
        let params = AbstractionParams::default();
        let atoms = describe_scene(&scene, &params);
        prop_assert_eq!(&describe_scene(&scene, &params), &atoms);
        let transitions = detect_transitions(&extract_fluents(&scene, &params));
        for a in &atoms {
            prop_assert!(a.interval.end() < scene.n_ticks());
            prop_assert!(scene.entity(&a.subject).unwrap().is_block());
            prop_assert_eq!(a.predicate == Predicate::Moves, matches!(a.reference, Reference::Direction(_)));
            if a.predicate != Predicate::MovesAcross {
                continue;
            }
            let matching = |p: Predicate, rel: AllenRel| {
                transitions.iter().any(|t| {
                    t.predicate == p
                        && t.subject == a.subject
                        && t.reference == a.reference
                        && allen_relation(t.interval, a.interval) == rel
                })
            };
            prop_assert!(matching(Predicate::MovesInto, AllenRel::Starts));
            prop_assert!(matching(Predicate::MovesOutOf, AllenRel::Finishes));
        }
    }

    #[test]
    fn entries_and_exits_alternate_on_passes(
        seed in any::<u64>(),
        angle in 0.0..std::f64::consts::TAU,
        passes in 1usize..5,
    ) {
        let scene = passing_scene(seed, angle, passes);
        let transitions = detect_transitions(&extract_fluents(&scene, &AbstractionParams::default()));
        let preds: Vec<_> = transitions.iter().map(|t| t.predicate).collect();
        let expected: Vec<_> = (0..passes).flat_map(|_| [Predicate::MovesInto, Predicate::MovesOutOf]).collect();
        prop_assert_eq!(preds, expected);
    }

    #[test]
    fn scene_documents_round_trip(seed in any::<u64>()) {
        let scene = scene_from_seed(seed, 40);
        prop_assert_eq!(load_scene(&scene_to_json(&scene)).unwrap(), scene);
    }
}

#[test]
fn canonical_fixture_round_trips_and_is_stable() {
    let scene = load_scene(CANONICAL).unwrap();
    assert_eq!(load_scene(&scene_to_json(&scene)).unwrap(), scene);
    let params = AbstractionParams::default();
    let lines: Vec<String> = describe_scene(&scene, &params)
        .iter()
        .map(|a| a.to_json_line())
        .collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(
        lines[0],
        r#"{"pred":"moves","subject":"obj-12","ref":"left","interval":[0,70]}"#
    );
    let again: Vec<String> = describe_scene(&scene, &params)
        .iter()
        .map(|a| a.to_json_line())
        .collect();
    assert_eq!(lines, again);
}

#[test]
fn entries_precede_exits_when_starting_outside() {
    let scene = load_scene(CANONICAL).unwrap();
    let transitions = detect_transitions(&extract_fluents(&scene, &AbstractionParams::default()));
    for region in ["reg-36", "reg-37", "reg-38"] {
        let first = transitions.iter().find(|t| t.reference.name() == region).unwrap();
        assert_eq!(first.predicate, Predicate::MovesInto, "{region}");
    }
}
