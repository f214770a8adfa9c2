//! Evaluation of semantic programs against a scene pair.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;

use super::color::{categorize, ColorPrototypes};
use super::program::{profile_for_relation, CogOpNode, IrlProgram, Op, SemEntity, Var};
use super::SemanticsError;
use crate::events::{describe_scene, Direction, EventAtom, Predicate, Reference};
use crate::geometry::{SceneIndex, ScenePair};
use crate::intervals::TickInterval;
use crate::qualitative::AbstractionParams;

/// Color distance at which confidence drops to `1/e`.
pub const COLOR_TEMPERATURE: f64 = 50.0;

/// A perceived motion event and whatever has been said about it so far.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionEvent {
    pub mover: String,
    pub direction: Direction,
    pub interval: TickInterval,
    pub profile: Option<String>,
    pub landmark: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Context(SceneIndex),
    Objects(Vec<String>),
    Events(Vec<MotionEvent>),
    Entity(SemEntity),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Context(s) => write!(f, "scene {s}"),
            Value::Objects(ids) => write!(f, "{{{}}}", ids.join(", ")),
            Value::Events(evs) => {
                let parts: Vec<String> = evs
                    .iter()
                    .map(|e| {
                        let mut s = format!("{} {} {}", e.mover, e.direction.name(), e.interval);
                        if let Some(l) = &e.landmark {
                            s.push_str(&format!(" @{l}"));
                        }
                        s
                    })
                    .collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            Value::Entity(e) => write!(f, "{} {}", e.category(), e.value()),
        }
    }
}

/// One consistent set of bindings for a program.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub scene: Option<SceneIndex>,
    pub score: f64,
    pub bindings: BTreeMap<Var, Value>,
}

/// A scene pair with its abstraction settings and lazily cached event
/// descriptions.
#[derive(Debug)]
pub struct Perception<'a> {
    pair: &'a ScenePair,
    params: AbstractionParams,
    prototypes: ColorPrototypes,
    descriptions: [OnceCell<Vec<EventAtom>>; 2],
}

impl<'a> Perception<'a> {
    pub fn new(pair: &'a ScenePair, params: AbstractionParams, prototypes: ColorPrototypes) -> Self {
        Perception {
            pair,
            params,
            prototypes,
            descriptions: [OnceCell::new(), OnceCell::new()],
        }
    }

    pub fn pair(&self) -> &ScenePair {
        self.pair
    }

    pub fn description(&self, which: SceneIndex) -> &[EventAtom] {
        let slot = match which {
            SceneIndex::A => &self.descriptions[0],
            SceneIndex::B => &self.descriptions[1],
        };
        slot.get_or_init(|| describe_scene(self.pair.scene(which), &self.params))
    }
}

#[derive(Debug, Clone)]
struct State {
    scene: Option<SceneIndex>,
    score: f64,
    bindings: BTreeMap<Var, Value>,
}

struct Outcome {
    value: Value,
    confidence: f64,
    scene: Option<SceneIndex>,
}

impl Outcome {
    fn sure(value: Value) -> Outcome {
        Outcome {
            value,
            confidence: 1.0,
            scene: None,
        }
    }
}

/// All solutions of a complete program, best first. Ties keep scene `a`
/// ahead of scene `b`.
pub fn evaluate(program: &IrlProgram, perception: &Perception) -> Result<Vec<Solution>, SemanticsError> {
    program.validate()?;
    evaluate_partial(program, perception, &[SceneIndex::A, SceneIndex::B])
}

/// Evaluates whatever part of a possibly incomplete program has all its
/// inputs available, with contexts drawn from `scenes`. An empty result
/// means some evaluated operation had no consistent output.
pub fn evaluate_partial(
    program: &IrlProgram,
    perception: &Perception,
    scenes: &[SceneIndex],
) -> Result<Vec<Solution>, SemanticsError> {
    program.check_structure()?;
    let mut order: Vec<usize> = (0..program.nodes.len()).collect();
    order.sort_by_cached_key(|&i| program.nodes[i].to_string());

    let mut bindings = BTreeMap::new();
    for b in &program.binds {
        bindings.insert(b.var.clone(), Value::Entity(b.entity.clone()));
    }
    let start = State {
        scene: None,
        score: 1.0,
        bindings,
    };
    let runner = Runner {
        nodes: &program.nodes,
        perception,
        scenes,
    };
    let mut out = Vec::new();
    runner.run(start, &order, &mut out)?;
    let mut solutions: Vec<Solution> = out
        .into_iter()
        .map(|s| Solution {
            scene: s.scene,
            score: s.score,
            bindings: s.bindings,
        })
        .collect();
    solutions.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(solutions)
}

struct Runner<'p, 'a> {
    nodes: &'p [CogOpNode],
    perception: &'p Perception<'a>,
    scenes: &'p [SceneIndex],
}

impl Runner<'_, '_> {
    fn run(&self, state: State, pending: &[usize], out: &mut Vec<State>) -> Result<(), SemanticsError> {
        let ready = pending.iter().position(|&i| {
            self.nodes[i]
                .inputs()
                .iter()
                .all(|v| state.bindings.contains_key(v))
        });
        let Some(pos) = ready else {
            out.push(state);
            return Ok(());
        };
        let node = &self.nodes[pending[pos]];
        let rest: Vec<usize> = pending
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != pos)
            .map(|(_, &i)| i)
            .collect();
        for outcome in self.apply(node, &state)? {
            let mut next = state.clone();
            next.score *= outcome.confidence;
            if outcome.scene.is_some() {
                next.scene = outcome.scene;
            }
            next.bindings.insert(node.output().clone(), outcome.value);
            self.run(next, &rest, out)?;
        }
        Ok(())
    }

    fn apply(&self, node: &CogOpNode, state: &State) -> Result<Vec<Outcome>, SemanticsError> {
        let arg = |k: usize| &state.bindings[&node.args[k]];
        let entity = |k: usize| match arg(k) {
            Value::Entity(e) => Some(e.value()),
            _ => None,
        };
        let objects = |k: usize| match arg(k) {
            Value::Objects(ids) => Some(ids.as_slice()),
            _ => None,
        };
        let events = |k: usize| match arg(k) {
            Value::Events(evs) => Some(evs.as_slice()),
            _ => None,
        };
        let pair = self.perception.pair();

        let outcomes = match node.op {
            Op::GetContext => {
                let scenes: Vec<SceneIndex> = match state.scene {
                    Some(s) => vec![s],
                    None => self.scenes.to_vec(),
                };
                scenes
                    .into_iter()
                    .map(|s| Outcome {
                        value: Value::Context(s),
                        confidence: 1.0,
                        scene: Some(s),
                    })
                    .collect()
            }
            Op::ApplyClass => {
                let (Value::Context(s), Some(class)) = (arg(1), entity(2)) else {
                    return Ok(vec![]);
                };
                let mut ids: Vec<String> = pair
                    .scene(*s)
                    .entities()
                    .iter()
                    .filter(|e| e.kind.name() == class)
                    .map(|e| e.id.clone())
                    .collect();
                ids.sort();
                nonempty_objects(ids)
            }
            Op::ApplyColor => {
                let (Some(s), Some(ids), Some(color)) = (state.scene, objects(1), entity(2)) else {
                    return Ok(vec![]);
                };
                let scene = pair.scene(s);
                let mut kept = Vec::new();
                let mut worst: f64 = 0.0;
                for id in ids {
                    let Ok(e) = scene.entity(id) else { continue };
                    let (name, d) = categorize(&e.color, &self.perception.prototypes)?;
                    if name == color {
                        kept.push(id.clone());
                        worst = worst.max(d);
                    }
                }
                let confidence = (-worst / COLOR_TEMPERATURE).exp();
                nonempty_objects(kept)
                    .into_iter()
                    .map(|o| Outcome { confidence, ..o })
                    .collect()
            }
            Op::ApplyDeterminer => match (objects(1), entity(2)) {
                (Some(ids), Some("unique")) if ids.len() == 1 => {
                    vec![Outcome::sure(Value::Objects(ids.to_vec()))]
                }
                _ => vec![],
            },
            Op::ApplyEvent => {
                let Value::Context(s) = arg(1) else {
                    return Ok(vec![]);
                };
                let evs: Vec<MotionEvent> = self
                    .perception
                    .description(*s)
                    .iter()
                    .filter_map(|a| match (&a.predicate, &a.reference) {
                        (Predicate::Moves, Reference::Direction(d)) => Some(MotionEvent {
                            mover: a.subject.clone(),
                            direction: *d,
                            interval: a.interval,
                            profile: None,
                            landmark: None,
                        }),
                        _ => None,
                    })
                    .collect();
                nonempty_events(evs)
            }
            Op::ApplyRole => {
                let (Some(evs), Some(ids), Some("mover")) = (events(1), objects(2), entity(3)) else {
                    return Ok(vec![]);
                };
                // One branch per candidate participant.
                ids.iter()
                    .filter_map(|id| {
                        let own: Vec<MotionEvent> = evs.iter().filter(|e| &e.mover == id).cloned().collect();
                        (!own.is_empty()).then(|| Outcome::sure(Value::Events(own)))
                    })
                    .collect()
            }
            Op::ApplyProfile => {
                let (Some(evs), Some(profile)) = (events(1), entity(2)) else {
                    return Ok(vec![]);
                };
                let tagged = evs
                    .iter()
                    .map(|e| MotionEvent {
                        profile: Some(profile.to_string()),
                        ..e.clone()
                    })
                    .collect();
                vec![Outcome::sure(Value::Events(tagged))]
            }
            Op::ApplyDynamicSpatialRelation => {
                let (Some(s), Some(evs), Some(landmarks), Some(rel)) =
                    (state.scene, events(1), objects(2), entity(3))
                else {
                    return Ok(vec![]);
                };
                let expected = profile_for_relation(rel);
                if evs
                    .iter()
                    .any(|e| e.profile.is_some() && e.profile.as_deref() != expected)
                {
                    return Ok(vec![]);
                }
                let predicate = match rel {
                    "across" => Predicate::MovesAcross,
                    "into" => Predicate::MovesInto,
                    _ => Predicate::MovesOutOf,
                };
                let atoms = self.perception.description(s);
                let kept: Vec<MotionEvent> = evs
                    .iter()
                    .filter_map(|e| {
                        atoms
                            .iter()
                            .find(|a| {
                                a.predicate == predicate
                                    && a.subject == e.mover
                                    && a.interval.intersects(&e.interval)
                                    && a.region().is_some_and(|r| landmarks.iter().any(|l| l == r))
                            })
                            .map(|a| MotionEvent {
                                landmark: a.region().map(str::to_string),
                                ..e.clone()
                            })
                    })
                    .collect();
                nonempty_events(kept)
            }
        };
        Ok(outcomes)
    }
}

fn nonempty_objects(ids: Vec<String>) -> Vec<Outcome> {
    if ids.is_empty() {
        vec![]
    } else {
        vec![Outcome::sure(Value::Objects(ids))]
    }
}

fn nonempty_events(evs: Vec<MotionEvent>) -> Vec<Outcome> {
    if evs.is_empty() {
        vec![]
    } else {
        vec![Outcome::sure(Value::Events(evs))]
    }
}
