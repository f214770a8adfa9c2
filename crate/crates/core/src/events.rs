//! Motion events composed from fluents: `moves`, `moves_into`,
//! `moves_out_of` and `moves_across`, and the ordered description of a
//! scene built from them.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::geometry::{EntityKind, Scene};
use crate::intervals::{allen_relation, AllenRel, TickInterval};
use crate::qualitative::{extract_fluents, AbstractionParams, Fluent, MotionRel, Rcc5Rel, Relation};
use crate::semantics::{categorize, ColorPrototypes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
    Closer,
    Further,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Closer => "closer",
            Direction::Further => "further",
        }
    }

    /// Dominant axis of a displacement; ties go to the horizontal axis.
    pub fn of_displacement(dx: f64, dy: f64) -> Direction {
        if dx.abs() >= dy.abs() {
            if dx < 0.0 {
                Direction::Left
            } else {
                Direction::Right
            }
        } else if dy < 0.0 {
            Direction::Closer
        } else {
            Direction::Further
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Moves,
    MovesInto,
    MovesOutOf,
    MovesAcross,
}

impl Predicate {
    pub fn name(self) -> &'static str {
        match self {
            Predicate::Moves => "moves",
            Predicate::MovesInto => "moves_into",
            Predicate::MovesOutOf => "moves_out_of",
            Predicate::MovesAcross => "moves_across",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Reference {
    Direction(Direction),
    Region(String),
}

impl Reference {
    pub fn name(&self) -> &str {
        match self {
            Reference::Direction(d) => d.name(),
            Reference::Region(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventAtom {
    pub predicate: Predicate,
    pub subject: String,
    pub reference: Reference,
    pub interval: TickInterval,
}

#[derive(Serialize)]
struct EventLine<'a> {
    pred: &'a str,
    subject: &'a str,
    #[serde(rename = "ref")]
    reference: &'a str,
    interval: TickInterval,
}

impl EventAtom {
    /// One line of the event dump format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&EventLine {
            pred: self.predicate.name(),
            subject: &self.subject,
            reference: self.reference.name(),
            interval: self.interval,
        })
        .expect("event lines always serialize")
    }

    pub fn region(&self) -> Option<&str> {
        match &self.reference {
            Reference::Region(id) => Some(id),
            Reference::Direction(_) => None,
        }
    }

    fn sort_key(&self) -> (usize, &'static str, &str, &str, usize) {
        (
            self.interval.start(),
            self.predicate.name(),
            self.reference.name(),
            &self.subject,
            self.interval.end(),
        )
    }
}

impl fmt::Display for EventAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}, {}, {})",
            self.predicate,
            self.subject,
            self.reference.name(),
            self.interval
        )
    }
}

/// Splits every block track into `moves` atoms.
///
/// Velocity at tick `t` is the centered difference over the motion window
/// (one-sided near the scene edges). A tick is moving when the speed exceeds
/// `v_eps` per tick; consecutive moving ticks with the same dominant
/// direction form one atom.
pub fn segment_moves(scene: &Scene, params: &AbstractionParams) -> Vec<EventAtom> {
    let n = scene.n_ticks();
    let w = params.motion_window;
    let mut out = Vec::new();
    for block in scene.blocks() {
        let centers: Vec<(f64, f64)> = (0..n)
            .map(|t| {
                crate::geometry::footprint(scene, &block.id, t)
                    .expect("block ids come from the scene")
                    .center()
            })
            .collect();
        let labels: Vec<Option<Direction>> = (0..n)
            .map(|t| {
                let lo = t.saturating_sub(w);
                let hi = (t + w).min(n - 1);
                if hi == lo {
                    return None;
                }
                let span = (hi - lo) as f64;
                let dx = (centers[hi].0 - centers[lo].0) / span;
                let dy = (centers[hi].1 - centers[lo].1) / span;
                (dx.hypot(dy) > params.v_eps).then(|| Direction::of_displacement(dx, dy))
            })
            .collect();
        let mut t = 0;
        while t < n {
            let Some(dir) = labels[t] else {
                t += 1;
                continue;
            };
            let start = t;
            while t + 1 < n && labels[t + 1] == Some(dir) {
                t += 1;
            }
            out.push(EventAtom {
                predicate: Predicate::Moves,
                subject: block.id.clone(),
                reference: Reference::Direction(dir),
                interval: TickInterval::new(start, t).expect("run end follows start"),
            });
            t += 1;
        }
    }
    out
}

fn group_by_args(
    fluents: &[Fluent],
    keep: impl Fn(&Relation) -> bool,
) -> BTreeMap<(&str, &str), Vec<&Fluent>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&Fluent>> = BTreeMap::new();
    for f in fluents.iter().filter(|f| keep(&f.relation)) {
        groups
            .entry((f.args.0.as_str(), f.args.1.as_str()))
            .or_default()
            .push(f);
    }
    for list in groups.values_mut() {
        list.sort_by_key(|f| (f.interval.start(), f.interval.end()));
    }
    groups
}

fn is_topology(r: &Relation) -> bool {
    matches!(r, Relation::Topology(_))
}

fn is_motion(r: &Relation) -> bool {
    matches!(r, Relation::Motion(_))
}

/// Finds entry and exit events in topology chains.
///
/// `moves_into` needs consecutive DC, PO, PP phases that meet, plus an
/// approaching fluent covering the whole PO phase; the event interval is the
/// PO phase. `moves_out_of` mirrors this with PP, PO, DC and receding.
pub fn detect_transitions(fluents: &[Fluent]) -> Vec<EventAtom> {
    let topology = group_by_args(fluents, is_topology);
    let motion = group_by_args(fluents, is_motion);
    let mut out = Vec::new();
    for ((block, region), chain) in &topology {
        let moving = motion.get(&(*block, *region));
        let covered_by = |rel: MotionRel, phase: &TickInterval| {
            moving.is_some_and(|ms| {
                ms.iter()
                    .any(|m| m.relation == Relation::Motion(rel) && m.interval.covers(phase))
            })
        };
        for w in chain.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let chained = allen_relation(a.interval, b.interval) == AllenRel::Meets
                && allen_relation(b.interval, c.interval) == AllenRel::Meets;
            if !chained || b.relation != Relation::Topology(Rcc5Rel::PO) {
                continue;
            }
            let predicate = match (a.relation, c.relation) {
                (Relation::Topology(Rcc5Rel::DC), Relation::Topology(Rcc5Rel::PP))
                    if covered_by(MotionRel::Approaching, &b.interval) =>
                {
                    Predicate::MovesInto
                }
                (Relation::Topology(Rcc5Rel::PP), Relation::Topology(Rcc5Rel::DC))
                    if covered_by(MotionRel::Receding, &b.interval) =>
                {
                    Predicate::MovesOutOf
                }
                _ => continue,
            };
            out.push(EventAtom {
                predicate,
                subject: block.to_string(),
                reference: Reference::Region(region.to_string()),
                interval: b.interval,
            });
        }
    }
    out
}

/// Pairs each `moves_into` with the nearest later `moves_out_of` on the same
/// region and emits `moves_across` spanning both, provided the block never
/// disconnects from the region in between and the whole crossing lies
/// within a single `moves` atom of the block.
pub fn detect_across(atoms: &[EventAtom], fluents: &[Fluent]) -> Vec<EventAtom> {
    let topology = group_by_args(fluents, is_topology);
    let mut out = Vec::new();
    for entry in atoms.iter().filter(|a| a.predicate == Predicate::MovesInto) {
        let Some(region) = entry.region() else {
            continue;
        };
        let exit = atoms
            .iter()
            .filter(|a| {
                a.predicate == Predicate::MovesOutOf
                    && a.subject == entry.subject
                    && a.region() == Some(region)
                    && a.interval.start() > entry.interval.end()
            })
            .min_by_key(|a| (a.interval.start(), a.interval.end()));
        let Some(exit) = exit else {
            continue;
        };
        let span = entry.interval.hull(&exit.interval);
        let disconnected_between = topology
            .get(&(entry.subject.as_str(), region))
            .is_some_and(|chain| {
                chain.iter().any(|f| {
                    f.relation == Relation::Topology(Rcc5Rel::DC)
                        && f.interval.start() > entry.interval.end()
                        && f.interval.end() < exit.interval.start()
                })
            });
        if disconnected_between {
            continue;
        }
        let within_one_move = atoms.iter().any(|m| {
            m.predicate == Predicate::Moves && m.subject == entry.subject && m.interval.covers(&span)
        });
        if within_one_move {
            out.push(EventAtom {
                predicate: Predicate::MovesAcross,
                subject: entry.subject.clone(),
                reference: Reference::Region(region.to_string()),
                interval: span,
            });
        }
    }
    out
}

/// Full event description of a scene, sorted by start tick, predicate name
/// and reference.
pub fn describe_scene(scene: &Scene, params: &AbstractionParams) -> Vec<EventAtom> {
    let fluents: Vec<Fluent> = extract_fluents(scene, params)
        .into_iter()
        .filter(|f| {
            scene
                .entity(&f.args.1)
                .is_ok_and(|e| e.kind == EntityKind::Region)
        })
        .collect();
    let mut atoms = segment_moves(scene, params);
    atoms.extend(detect_transitions(&fluents));
    let across = detect_across(&atoms, &fluents);
    atoms.extend(across);
    atoms.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    atoms
}

/// Plain English for an atom list, one sentence per atom. Meant for
/// reading only.
pub fn narrate(scene: &Scene, atoms: &[EventAtom], prototypes: &ColorPrototypes) -> Vec<String> {
    let describe = |id: &str| match scene.entity(id) {
        Ok(e) => match categorize(&e.color, prototypes) {
            Ok((color, _)) => format!("the {color} {}", e.kind.name()),
            Err(_) => format!("the {}", e.kind.name()),
        },
        Err(_) => id.to_string(),
    };
    atoms
        .iter()
        .map(|a| {
            let mut subject = describe(&a.subject);
            subject.replace_range(..1, &subject[..1].to_uppercase());
            let rest = match (a.predicate, &a.reference) {
                (Predicate::Moves, r) => r.name().to_string(),
                (Predicate::MovesInto, r) => format!("into {}", describe(r.name())),
                (Predicate::MovesOutOf, r) => format!("out of {}", describe(r.name())),
                (Predicate::MovesAcross, r) => format!("across {}", describe(r.name())),
            };
            format!("{subject} moves {rest}.")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_scene, BlockSpec, Color, MotionScript, StaticSpec};
    use crate::qualitative::Relation;

    fn iv(s: usize, e: usize) -> TickInterval {
        TickInterval::new(s, e).unwrap()
    }

    fn fl(rel: Relation, s: usize, e: usize) -> Fluent {
        Fluent {
            relation: rel,
            args: ("b".into(), "r".into()),
            interval: iv(s, e),
        }
    }

    fn topo(r: Rcc5Rel, s: usize, e: usize) -> Fluent {
        fl(Relation::Topology(r), s, e)
    }

    fn mot(m: MotionRel, s: usize, e: usize) -> Fluent {
        fl(Relation::Motion(m), s, e)
    }

    fn atom(p: Predicate, reference: Reference, s: usize, e: usize) -> EventAtom {
        EventAtom {
            predicate: p,
            subject: "b".into(),
            reference,
            interval: iv(s, e),
        }
    }

    fn region() -> Reference {
        Reference::Region("r".into())
    }

    #[test]
    fn entry_chain_yields_moves_into() {
        let fluents = vec![
            topo(Rcc5Rel::DC, 0, 4),
            topo(Rcc5Rel::PO, 5, 7),
            topo(Rcc5Rel::PP, 8, 12),
            mot(MotionRel::Steady, 0, 2),
            mot(MotionRel::Approaching, 3, 9),
            mot(MotionRel::Steady, 10, 12),
        ];
        assert_eq!(
            detect_transitions(&fluents),
            vec![atom(Predicate::MovesInto, region(), 5, 7)]
        );
    }

    #[test]
    fn exit_chain_yields_moves_out_of() {
        let fluents = vec![
            topo(Rcc5Rel::PP, 0, 4),
            topo(Rcc5Rel::PO, 5, 7),
            topo(Rcc5Rel::DC, 8, 12),
            mot(MotionRel::Receding, 4, 9),
        ];
        assert_eq!(
            detect_transitions(&fluents),
            vec![atom(Predicate::MovesOutOf, region(), 5, 7)]
        );
    }

    #[test]
    fn grazing_pass_is_not_an_entry() {
        let fluents = vec![
            topo(Rcc5Rel::DC, 0, 4),
            topo(Rcc5Rel::PO, 5, 7),
            topo(Rcc5Rel::DC, 8, 12),
            mot(MotionRel::Approaching, 0, 12),
        ];
        assert!(detect_transitions(&fluents).is_empty());
    }

    #[test]
    fn entry_needs_approach_over_the_whole_overlap() {
        let fluents = vec![
            topo(Rcc5Rel::DC, 0, 4),
            topo(Rcc5Rel::PO, 5, 7),
            topo(Rcc5Rel::PP, 8, 12),
            mot(MotionRel::Approaching, 3, 6),
        ];
        assert!(detect_transitions(&fluents).is_empty());
    }

    #[test]
    fn across_spans_entry_and_exit() {
        let atoms = vec![
            atom(Predicate::Moves, Reference::Direction(Direction::Left), 0, 20),
            atom(Predicate::MovesInto, region(), 5, 7),
            atom(Predicate::MovesOutOf, region(), 13, 15),
        ];
        let across = detect_across(&atoms, &[]);
        assert_eq!(across, vec![atom(Predicate::MovesAcross, region(), 5, 15)]);
        let i = across[0].interval;
        assert_eq!(allen_relation(iv(5, 7), i), AllenRel::Starts);
        assert_eq!(allen_relation(iv(13, 15), i), AllenRel::Finishes);
    }

    #[test]
    fn no_exit_no_across() {
        let atoms = vec![
            atom(Predicate::Moves, Reference::Direction(Direction::Left), 0, 20),
            atom(Predicate::MovesInto, region(), 5, 7),
        ];
        assert!(detect_across(&atoms, &[]).is_empty());
    }

    #[test]
    fn across_pairs_with_nearest_exit() {
        let atoms = vec![
            atom(Predicate::Moves, Reference::Direction(Direction::Left), 0, 40),
            atom(Predicate::MovesInto, region(), 5, 7),
            atom(Predicate::MovesOutOf, region(), 13, 15),
            atom(Predicate::MovesInto, region(), 20, 22),
            atom(Predicate::MovesOutOf, region(), 30, 32),
        ];
        let spans: Vec<TickInterval> = detect_across(&atoms, &[]).iter().map(|a| a.interval).collect();
        assert_eq!(spans, vec![iv(5, 15), iv(20, 32)]);
    }

    #[test]
    fn crossing_split_across_two_directions_is_rejected() {
        let atoms = vec![
            atom(Predicate::Moves, Reference::Direction(Direction::Left), 0, 10),
            atom(Predicate::Moves, Reference::Direction(Direction::Closer), 11, 20),
            atom(Predicate::MovesInto, region(), 5, 7),
            atom(Predicate::MovesOutOf, region(), 13, 15),
        ];
        assert!(detect_across(&atoms, &[]).is_empty());
    }

    fn scene_with(waypoints: Vec<[f64; 2]>, ticks: Vec<usize>, n_ticks: Option<usize>) -> Scene {
        let script = MotionScript {
            dt: 0.1,
            n_ticks,
            statics: vec![StaticSpec {
                id: "reg".into(),
                kind: EntityKind::Region,
                color: Color::Named("red".into()),
                rect: [0.0, 0.0, 2.0, 2.0],
                pose: None,
            }],
            blocks: vec![BlockSpec {
                id: "blk".into(),
                color: Color::Named("green".into()),
                extent: [0.4, 0.4],
                waypoints,
                segment_ticks: ticks,
            }],
        };
        gen_scene(&script, 0.0, 0).unwrap()
    }

    #[test]
    fn straight_left_motion_is_one_atom() {
        let scene = scene_with(vec![[10.0, 5.0], [4.0, 5.0]], vec![60], None);
        let moves = segment_moves(&scene, &AbstractionParams::default());
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].reference, Reference::Direction(Direction::Left));
        assert_eq!(moves[0].interval, iv(0, 60));
    }

    #[test]
    fn static_block_does_not_move() {
        let scene = scene_with(vec![[10.0, 5.0]], vec![], Some(30));
        assert!(segment_moves(&scene, &AbstractionParams::default()).is_empty());
    }

    #[test]
    fn l_shaped_path_gives_two_meeting_atoms() {
        let scene = scene_with(vec![[10.0, 5.0], [6.0, 5.0], [6.0, 9.0]], vec![40, 40], None);
        let params = AbstractionParams::default();
        let moves = segment_moves(&scene, &params);
        let dirs: Vec<&Reference> = moves.iter().map(|m| &m.reference).collect();
        assert_eq!(
            dirs,
            [
                &Reference::Direction(Direction::Left),
                &Reference::Direction(Direction::Further)
            ]
        );
        let rel = allen_relation(moves[0].interval, moves[1].interval);
        assert!(matches!(rel, AllenRel::Meets | AllenRel::Before));
        // Oracle: per-tick label from the raw windowed displacement.
        let w = params.motion_window;
        let n = scene.n_ticks();
        let pos = |t: usize| crate::geometry::footprint(&scene, "blk", t).unwrap().center();
        for t in 0..n {
            let (lo, hi) = (t.saturating_sub(w), (t + w).min(n - 1));
            let (dx, dy) = (pos(hi).0 - pos(lo).0, pos(hi).1 - pos(lo).1);
            let expect = if dx.abs() >= dy.abs() { "left" } else { "further" };
            let got = moves.iter().find(|m| m.interval.contains_tick(t)).unwrap();
            assert_eq!(got.reference.name(), expect, "tick {t}");
        }
    }

    #[test]
    fn regions_only_scene_describes_nothing() {
        let scene = crate::geometry::load_scene(
            r#"{"dt": 0.1, "n_ticks": 5, "entities": [
                {"id": "r1", "kind": "region", "color": "red", "rect": [0, 0, 1, 1]},
                {"id": "r2", "kind": "region", "color": "blue", "rect": [2, 0, 3, 1]}]}"#,
        )
        .unwrap();
        assert!(describe_scene(&scene, &AbstractionParams::default()).is_empty());
    }

    #[test]
    fn event_json_line() {
        let a = EventAtom {
            predicate: Predicate::MovesInto,
            subject: "obj-12".into(),
            reference: Reference::Region("reg-38".into()),
            interval: iv(19, 21),
        };
        assert_eq!(
            a.to_json_line(),
            r#"{"pred":"moves_into","subject":"obj-12","ref":"reg-38","interval":[19,21]}"#
        );
    }
}
