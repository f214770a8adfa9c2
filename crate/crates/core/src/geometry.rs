//! Scene data model, scene documents, and metric primitives.
//!
//! Coordinates are meters in the viewer frame: `x` grows to the viewer's
//! right, `y` grows away from the viewer (depth). Every entity is abstracted
//! as an axis-aligned rectangle. Only blocks move; all other kinds carry a
//! single static footprint.

use std::collections::HashMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default seconds per tick when a document or script does not say otherwise.
pub const DEFAULT_DT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("track-length mismatch for {id}: expected {expected} states, found {found}")]
    TrackLengthMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid field `{field}` on {id}: {reason}")]
    InvalidField {
        id: String,
        field: &'static str,
        reason: String,
    },
    #[error("unknown entity: {0}")]
    UnknownEntity(String),
    #[error("tick {tick} out of range (scene has {n_ticks} ticks)")]
    TickOutOfRange { tick: usize, n_ticks: usize },
    #[error("invalid motion script: {0}")]
    Script(String),
}

pub type Result<T> = std::result::Result<T, SceneError>;

/// Axis-aligned rectangle. Points are degenerate rectangles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    /// Builds a rect, returning `None` when the corners are out of order or
    /// not finite.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Option<Rect> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        (finite && x_min <= x_max && y_min <= y_max).then_some(Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn from_center(x: f64, y: f64, w: f64, h: f64) -> Rect {
        Rect {
            x_min: x - w / 2.0,
            y_min: y - h / 2.0,
            x_max: x + w / 2.0,
            y_max: y + h / 2.0,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Projection onto the horizontal axis.
    pub fn x_span(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    /// Projection onto the depth axis.
    pub fn y_span(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }
}

/// Position and extent of a perceived object at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl ObjectState {
    pub fn rect(&self) -> Rect {
        Rect::from_center(self.x, self.y, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Block,
    Box,
    Robot,
    Region,
}

impl EntityKind {
    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Block => "block",
            EntityKind::Box => "box",
            EntityKind::Robot => "robot",
            EntityKind::Region => "region",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Perceived color: either already symbolic or a raw YCbCr sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Color {
    Named(String),
    Ycbcr([u8; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Static(Rect),
    Track(Vec<ObjectState>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub color: Color,
    pub pose: Option<f64>,
    pub shape: Shape,
}

impl Entity {
    pub fn is_block(&self) -> bool {
        self.kind == EntityKind::Block
    }

    fn rect_at(&self, t: usize) -> Rect {
        match &self.shape {
            Shape::Static(r) => *r,
            Shape::Track(states) => states[t].rect(),
        }
    }
}

/// A validated, immutable scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    dt: f64,
    n_ticks: usize,
    entities: Vec<Entity>,
    index: HashMap<String, usize>,
}

impl Scene {
    /// Validates and assembles a scene.
    pub fn new(dt: f64, n_ticks: usize, entities: Vec<Entity>) -> Result<Scene> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SceneError::Schema(format!("dt must be positive, got {dt}")));
        }
        if n_ticks == 0 {
            return Err(SceneError::Schema("n_ticks must be at least 1".into()));
        }
        let mut index = HashMap::with_capacity(entities.len());
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(SceneError::DuplicateId(e.id.clone()));
            }
            validate_entity(e, n_ticks)?;
        }
        Ok(Scene {
            dt,
            n_ticks,
            entities,
            index,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_ticks(&self) -> usize {
        self.n_ticks
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn entity(&self, id: &str) -> Result<&Entity> {
        self.index
            .get(id)
            .map(|&i| &self.entities[i])
            .ok_or_else(|| SceneError::UnknownEntity(id.to_string()))
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.is_block())
    }

    fn check_tick(&self, t: usize) -> Result<()> {
        if t < self.n_ticks {
            Ok(())
        } else {
            Err(SceneError::TickOutOfRange {
                tick: t,
                n_ticks: self.n_ticks,
            })
        }
    }
}

fn validate_entity(e: &Entity, n_ticks: usize) -> Result<()> {
    let bad = |field: &'static str, reason: String| SceneError::InvalidField {
        id: e.id.clone(),
        field,
        reason,
    };
    if e.id.is_empty() {
        return Err(SceneError::Schema("entity id must be non-empty".into()));
    }
    match (&e.shape, e.kind) {
        (Shape::Track(states), EntityKind::Block) => {
            if states.len() != n_ticks {
                return Err(SceneError::TrackLengthMismatch {
                    id: e.id.clone(),
                    expected: n_ticks,
                    found: states.len(),
                });
            }
            for (i, s) in states.iter().enumerate() {
                if !(s.x.is_finite() && s.y.is_finite()) {
                    return Err(bad("track", format!("non-finite position at tick {i}")));
                }
                if !(s.w > 0.0 && s.h > 0.0 && s.w.is_finite() && s.h.is_finite()) {
                    return Err(bad("track", format!("extent must be positive at tick {i}")));
                }
            }
        }
        (Shape::Static(_), EntityKind::Block) => {
            return Err(bad("track", "blocks need a per-tick track".into()));
        }
        (Shape::Track(_), kind) => {
            return Err(bad("rect", format!("{kind} entities are static and need a rect")));
        }
        (Shape::Static(_), _) => {}
    }
    if e.pose.is_some() && e.kind != EntityKind::Robot {
        return Err(bad("pose", "only robots carry a pose".into()));
    }
    Ok(())
}

/// Axis-aligned footprint of `id` at tick `t`.
pub fn footprint(scene: &Scene, id: &str, t: usize) -> Result<Rect> {
    let e = scene.entity(id)?;
    scene.check_tick(t)?;
    Ok(e.rect_at(t))
}

/// Euclidean distance between the footprint centers of `a` and `b` at `t`.
pub fn centroid_distance(scene: &Scene, a: &str, b: &str, t: usize) -> Result<f64> {
    let (ax, ay) = footprint(scene, a, t)?.center();
    let (bx, by) = footprint(scene, b, t)?.center();
    Ok((ax - bx).hypot(ay - by))
}

// ---------------------------------------------------------------------------
// Scene documents

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneDoc {
    dt: f64,
    n_ticks: usize,
    entities: Vec<EntityDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityDoc {
    id: String,
    kind: EntityKind,
    color: Color,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pose: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rect: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track: Option<Vec<[f64; 4]>>,
}

impl EntityDoc {
    fn into_entity(self) -> Result<Entity> {
        let shape = match (self.rect, self.track) {
            (Some(_), Some(_)) => {
                return Err(SceneError::InvalidField {
                    id: self.id,
                    field: "rect",
                    reason: "entity has both rect and track".into(),
                })
            }
            (Some([x1, y1, x2, y2]), None) => {
                let r = Rect::new(x1, y1, x2, y2).ok_or_else(|| SceneError::InvalidField {
                    id: self.id.clone(),
                    field: "rect",
                    reason: "expected finite [x_min, y_min, x_max, y_max] with min <= max".into(),
                })?;
                Shape::Static(r)
            }
            (None, Some(track)) => Shape::Track(
                track
                    .into_iter()
                    .map(|[x, y, w, h]| ObjectState { x, y, w, h })
                    .collect(),
            ),
            (None, None) => {
                let field = if self.kind == EntityKind::Block {
                    "track"
                } else {
                    "rect"
                };
                return Err(SceneError::InvalidField {
                    id: self.id,
                    field,
                    reason: "missing geometry".into(),
                });
            }
        };
        Ok(Entity {
            id: self.id,
            kind: self.kind,
            color: self.color,
            pose: self.pose,
            shape,
        })
    }

    fn from_entity(e: &Entity) -> EntityDoc {
        let (rect, track) = match &e.shape {
            Shape::Static(r) => (Some([r.x_min, r.y_min, r.x_max, r.y_max]), None),
            Shape::Track(states) => (None, Some(states.iter().map(|s| [s.x, s.y, s.w, s.h]).collect())),
        };
        EntityDoc {
            id: e.id.clone(),
            kind: e.kind,
            color: e.color.clone(),
            pose: e.pose,
            rect,
            track,
        }
    }
}

impl SceneDoc {
    fn into_scene(self) -> Result<Scene> {
        let entities = self
            .entities
            .into_iter()
            .map(EntityDoc::into_entity)
            .collect::<Result<Vec<_>>>()?;
        Scene::new(self.dt, self.n_ticks, entities)
    }

    fn from_scene(scene: &Scene) -> SceneDoc {
        SceneDoc {
            dt: scene.dt,
            n_ticks: scene.n_ticks,
            entities: scene.entities.iter().map(EntityDoc::from_entity).collect(),
        }
    }
}

/// Parses and validates a JSON scene document.
pub fn load_scene(text: &str) -> Result<Scene> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;
    doc.into_scene()
}

/// Serializes a scene back into the document format.
pub fn scene_to_json(scene: &Scene) -> String {
    serde_json::to_string(&SceneDoc::from_scene(scene)).expect("scene documents always serialize")
}

/// Which of the two scenes of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneIndex {
    A,
    B,
}

impl SceneIndex {
    pub fn other(self) -> SceneIndex {
        match self {
            SceneIndex::A => SceneIndex::B,
            SceneIndex::B => SceneIndex::A,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SceneIndex::A => "a",
            SceneIndex::B => "b",
        }
    }

    pub fn parse(s: &str) -> Option<SceneIndex> {
        match s {
            "a" | "A" => Some(SceneIndex::A),
            "b" | "B" => Some(SceneIndex::B),
            _ => None,
        }
    }
}

impl fmt::Display for SceneIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The two scenes shown to both agents in one game.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub id: String,
    pub scene_a: Scene,
    pub scene_b: Scene,
}

impl ScenePair {
    pub fn new(id: impl Into<String>, scene_a: Scene, scene_b: Scene) -> Result<ScenePair> {
        for (name, s) in [("scene_a", &scene_a), ("scene_b", &scene_b)] {
            if s.entities().is_empty() {
                return Err(SceneError::Schema(format!("{name} has no entities")));
            }
        }
        Ok(ScenePair {
            id: id.into(),
            scene_a,
            scene_b,
        })
    }

    pub fn scene(&self, which: SceneIndex) -> &Scene {
        match which {
            SceneIndex::A => &self.scene_a,
            SceneIndex::B => &self.scene_b,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    #[serde(default)]
    id: Option<String>,
    scene_a: SceneDoc,
    scene_b: SceneDoc,
}

/// Parses a pair document `{"id"?: .., "scene_a": .., "scene_b": ..}`.
pub fn load_pair(text: &str) -> Result<ScenePair> {
    let doc: PairDoc = serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;
    pair_from_doc(doc)
}

/// Parses either a single pair document or a JSON array of them.
pub fn load_pairs(text: &str) -> Result<Vec<ScenePair>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;
    let docs: Vec<PairDoc> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|d| vec![d])
    }
    .map_err(|e| SceneError::Schema(e.to_string()))?;
    docs.into_iter().map(pair_from_doc).collect()
}

fn pair_from_doc(doc: PairDoc) -> Result<ScenePair> {
    ScenePair::new(
        doc.id.unwrap_or_else(|| "pair".to_string()),
        doc.scene_a.into_scene()?,
        doc.scene_b.into_scene()?,
    )
}

pub fn pair_to_json(pair: &ScenePair) -> String {
    serde_json::to_string(&PairDoc {
        id: Some(pair.id.clone()),
        scene_a: SceneDoc::from_scene(&pair.scene_a),
        scene_b: SceneDoc::from_scene(&pair.scene_b),
    })
    .expect("pair documents always serialize")
}

// ---------------------------------------------------------------------------
// Synthetic scenes

/// A static entity placed by a motion script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticSpec {
    pub id: String,
    pub kind: EntityKind,
    pub color: Color,
    pub rect: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<f64>,
}

/// A block following a piecewise-linear path.
///
/// Tick 0 sits on the first waypoint; segment `i` reaches waypoint `i + 1`
/// after `segment_ticks[i]` ticks. Blocks whose path is shorter than the
/// scene hold their final position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub id: String,
    pub color: Color,
    pub extent: [f64; 2],
    pub waypoints: Vec<[f64; 2]>,
    #[serde(default)]
    pub segment_ticks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionScript {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Minimum scene length; the scene is extended to fit the longest path.
    #[serde(default)]
    pub n_ticks: Option<usize>,
    #[serde(default)]
    pub statics: Vec<StaticSpec>,
    #[serde(default)]
    pub blocks: Vec<BlockSpec>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

impl MotionScript {
    pub fn from_json(text: &str) -> Result<MotionScript> {
        serde_json::from_str(text).map_err(|e| SceneError::Script(e.to_string()))
    }
}

fn noiseless_path(spec: &BlockSpec) -> Result<Vec<(f64, f64)>> {
    let Some(first) = spec.waypoints.first() else {
        return Err(SceneError::Script(format!("{}: empty waypoint list", spec.id)));
    };
    if spec.segment_ticks.len() + 1 != spec.waypoints.len() {
        return Err(SceneError::Script(format!(
            "{}: {} waypoints need {} segment tick counts, got {}",
            spec.id,
            spec.waypoints.len(),
            spec.waypoints.len() - 1,
            spec.segment_ticks.len()
        )));
    }
    if let Some(i) = spec.segment_ticks.iter().position(|&k| k == 0) {
        return Err(SceneError::Script(format!(
            "{}: segment {i} has a non-positive tick count",
            spec.id
        )));
    }
    let mut path = vec![(first[0], first[1])];
    for (seg, &k) in spec.waypoints.windows(2).zip(&spec.segment_ticks) {
        let (a, b) = (seg[0], seg[1]);
        for i in 1..=k {
            if i == k {
                path.push((b[0], b[1]));
            } else {
                let f = i as f64 / k as f64;
                path.push((a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f));
            }
        }
    }
    Ok(path)
}

/// Renders a motion script into a scene, adding Gaussian positional noise of
/// standard deviation `noise_sigma` (meters) to every block state.
pub fn gen_scene(script: &MotionScript, noise_sigma: f64, seed: u64) -> Result<Scene> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(SceneError::Script(format!("invalid noise sigma {noise_sigma}")));
    }
    let paths = script
        .blocks
        .iter()
        .map(noiseless_path)
        .collect::<Result<Vec<_>>>()?;
    let longest = paths.iter().map(Vec::len).max().unwrap_or(1);
    let n_ticks = longest.max(script.n_ticks.unwrap_or(1));

    let normal = Normal::new(0.0, noise_sigma).map_err(|e| SceneError::Script(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut entities = Vec::with_capacity(script.statics.len() + script.blocks.len());
    for s in &script.statics {
        let [x1, y1, x2, y2] = s.rect;
        let rect = Rect::new(x1, y1, x2, y2).ok_or_else(|| SceneError::InvalidField {
            id: s.id.clone(),
            field: "rect",
            reason: "corners out of order".into(),
        })?;
        entities.push(Entity {
            id: s.id.clone(),
            kind: s.kind,
            color: s.color.clone(),
            pose: s.pose,
            shape: Shape::Static(rect),
        });
    }
    for (spec, path) in script.blocks.iter().zip(paths) {
        let last = *path.last().expect("paths are non-empty");
        let track = (0..n_ticks)
            .map(|t| {
                let (x, y) = path.get(t).copied().unwrap_or(last);
                let (nx, ny) = if noise_sigma > 0.0 {
                    (normal.sample(&mut rng), normal.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                ObjectState {
                    x: x + nx,
                    y: y + ny,
                    w: spec.extent[0],
                    h: spec.extent[1],
                }
            })
            .collect();
        entities.push(Entity {
            id: spec.id.clone(),
            kind: EntityKind::Block,
            color: spec.color.clone(),
            pose: None,
            shape: Shape::Track(track),
        });
    }
    Scene::new(script.dt, n_ticks, entities)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_doc(track_len: usize, n_ticks: usize) -> String {
        let track: Vec<String> = (0..track_len)
            .map(|i| format!("[{}, 0.0, 1.0, 1.0]", i))
            .collect();
        format!(
            r#"{{"dt": 0.1, "n_ticks": {n_ticks}, "entities": [
                {{"id": "reg-1", "kind": "region", "color": "red", "rect": [0, 0, 4, 4]}},
                {{"id": "obj-1", "kind": "block", "color": [150, 44, 21], "track": [{}]}}
            ]}}"#,
            track.join(",")
        )
    }

    #[test]
    fn loads_minimal_document() {
        let scene = load_scene(&minimal_doc(2, 2)).unwrap();
        assert_eq!(scene.n_ticks(), 2);
        assert_eq!(scene.entities().len(), 2);
        assert_eq!(scene.entity("obj-1").unwrap().color, Color::Ycbcr([150, 44, 21]));
    }

    #[test]
    fn rejects_track_length_mismatch() {
        let err = load_scene(&minimal_doc(3, 4)).unwrap_err();
        assert_eq!(
            err,
            SceneError::TrackLengthMismatch {
                id: "obj-1".into(),
                expected: 4,
                found: 3
            }
        );
        assert!(err.to_string().contains("track-length mismatch"));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let doc = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "r", "kind": "region", "color": "red", "rect": [0, 0, 1, 1]},
            {"id": "r", "kind": "region", "color": "blue", "rect": [0, 0, 1, 1]}]}"#;
        assert_eq!(load_scene(doc).unwrap_err(), SceneError::DuplicateId("r".into()));
    }

    #[test]
    fn rejects_schema_violations() {
        assert!(matches!(load_scene("{}"), Err(SceneError::Schema(_))));
        let static_block = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "b", "kind": "block", "color": "red", "rect": [0, 0, 1, 1]}]}"#;
        assert!(matches!(
            load_scene(static_block),
            Err(SceneError::InvalidField { field: "track", .. })
        ));
        let moving_region = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "r", "kind": "region", "color": "red", "track": [[0, 0, 1, 1]]}]}"#;
        assert!(matches!(
            load_scene(moving_region),
            Err(SceneError::InvalidField { field: "rect", .. })
        ));
        let flat = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "b", "kind": "block", "color": "red", "track": [[0, 0, 0, 1]]}]}"#;
        assert!(matches!(load_scene(flat), Err(SceneError::InvalidField { .. })));
        let bad_color = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "r", "kind": "region", "color": [300, 0, 0], "rect": [0, 0, 1, 1]}]}"#;
        assert!(matches!(load_scene(bad_color), Err(SceneError::Schema(_))));
    }

    #[test]
    fn footprint_centers_extent() {
        let scene = Scene::new(
            0.1,
            1,
            vec![Entity {
                id: "b".into(),
                kind: EntityKind::Block,
                color: Color::Named("green".into()),
                pose: None,
                shape: Shape::Track(vec![ObjectState {
                    x: 0.0,
                    y: 0.0,
                    w: 2.0,
                    h: 2.0,
                }]),
            }],
        )
        .unwrap();
        assert_eq!(
            footprint(&scene, "b", 0).unwrap(),
            Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap()
        );
        assert!(matches!(
            footprint(&scene, "b", 1),
            Err(SceneError::TickOutOfRange { tick: 1, n_ticks: 1 })
        ));
        assert!(matches!(
            footprint(&scene, "nope", 0),
            Err(SceneError::UnknownEntity(_))
        ));
    }

    #[test]
    fn static_footprint_is_constant() {
        let scene = load_scene(&minimal_doc(6, 6)).unwrap();
        assert_eq!(
            footprint(&scene, "reg-1", 0).unwrap(),
            footprint(&scene, "reg-1", 5).unwrap()
        );
    }

    #[test]
    fn distance_345() {
        let doc = r#"{"dt": 0.1, "n_ticks": 1, "entities": [
            {"id": "p", "kind": "region", "color": "red", "rect": [-1, -1, 1, 1]},
            {"id": "q", "kind": "region", "color": "red", "rect": [2, 3, 4, 5]}]}"#;
        let scene = load_scene(doc).unwrap();
        assert_eq!(centroid_distance(&scene, "p", "q", 0).unwrap(), 5.0);
        assert_eq!(centroid_distance(&scene, "p", "p", 0).unwrap(), 0.0);
    }

    fn one_block(waypoints: Vec<[f64; 2]>, segment_ticks: Vec<usize>) -> MotionScript {
        MotionScript {
            dt: 0.1,
            n_ticks: None,
            statics: vec![],
            blocks: vec![BlockSpec {
                id: "b".into(),
                color: Color::Named("green".into()),
                extent: [0.4, 0.4],
                waypoints,
                segment_ticks,
            }],
        }
    }

    #[test]
    fn gen_scene_interpolates_linearly() {
        let scene = gen_scene(&one_block(vec![[0.0, 0.0], [10.0, 0.0]], vec![10]), 0.0, 1).unwrap();
        assert_eq!(scene.n_ticks(), 11);
        let xs: Vec<f64> = (0..11)
            .map(|t| footprint(&scene, "b", t).unwrap().center().0)
            .collect();
        for (t, w) in xs.windows(2).enumerate() {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12, "step at {t}");
        }
    }

    #[test]
    fn gen_scene_is_deterministic() {
        let script = one_block(vec![[0.0, 0.0], [3.0, 2.0]], vec![7]);
        let a = scene_to_json(&gen_scene(&script, 0.05, 42).unwrap());
        let b = scene_to_json(&gen_scene(&script, 0.05, 42).unwrap());
        assert_eq!(a, b);
        let c = scene_to_json(&gen_scene(&script, 0.05, 43).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn gen_scene_rejects_bad_scripts() {
        assert!(matches!(
            gen_scene(&one_block(vec![], vec![]), 0.0, 0),
            Err(SceneError::Script(_))
        ));
        assert!(matches!(
            gen_scene(&one_block(vec![[0.0, 0.0], [1.0, 0.0]], vec![0]), 0.0, 0),
            Err(SceneError::Script(_))
        ));
        assert!(matches!(
            gen_scene(&one_block(vec![[0.0, 0.0], [1.0, 0.0]], vec![]), 0.0, 0),
            Err(SceneError::Script(_))
        ));
    }

    #[test]
    fn gen_scene_noise_has_requested_sigma() {
        let script = one_block(vec![[0.0, 0.0], [5.0, 5.0]], vec![499]);
        let clean = gen_scene(&script, 0.0, 9).unwrap();
        let noisy = gen_scene(&script, 0.05, 9).unwrap();
        let mut dev = Vec::with_capacity(1000);
        for t in 0..500 {
            let (cx, cy) = footprint(&clean, "b", t).unwrap().center();
            let (nx, ny) = footprint(&noisy, "b", t).unwrap().center();
            dev.push(nx - cx);
            dev.push(ny - cy);
        }
        let n = dev.len() as f64;
        let mean = dev.iter().sum::<f64>() / n;
        let std = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((0.03..=0.07).contains(&std), "sample std {std}");
    }

    #[test]
    fn pair_round_trip() {
        let scene = load_scene(&minimal_doc(2, 2)).unwrap();
        let pair = ScenePair::new("p1", scene.clone(), scene).unwrap();
        let back = load_pair(&pair_to_json(&pair)).unwrap();
        assert_eq!(back, pair);
        assert_eq!(load_pairs(&pair_to_json(&pair)).unwrap().len(), 1);
    }
}
