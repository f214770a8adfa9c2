//! Per-tick qualitative abstraction of a scene and its lifting to fluents.
//!
//! Three relation families are computed for every ordered (block, other)
//! pair: RCC5 topology, extrinsic orientation on each viewer axis, and
//! relative movement of the centroids.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{centroid_distance, footprint, Rect, Scene, SceneError};
use crate::intervals::TickInterval;

/// Thresholds turning continuous features into qualitative relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbstractionParams {
    /// Geometric tolerance in meters.
    pub eps_geo: f64,
    /// Half-width of the motion window in ticks.
    pub motion_window: usize,
    /// Minimum distance change (meters) that counts as motion.
    pub v_eps: f64,
}

impl Default for AbstractionParams {
    fn default() -> Self {
        AbstractionParams {
            eps_geo: 0.01,
            motion_window: 3,
            v_eps: 0.01,
        }
    }
}

impl AbstractionParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_geo >= 0.0 && self.eps_geo.is_finite()) {
            return Err(format!("eps_geo must be >= 0, got {}", self.eps_geo));
        }
        if self.motion_window < 1 {
            return Err("motion_window must be >= 1".into());
        }
        if !(self.v_eps >= 0.0 && self.v_eps.is_finite()) {
            return Err(format!("v_eps must be >= 0, got {}", self.v_eps));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rcc5Rel {
    DC,
    PO,
    PP,
    PPi,
    EQ,
}

impl Rcc5Rel {
    pub fn name(self) -> &'static str {
        match self {
            Rcc5Rel::DC => "DC",
            Rcc5Rel::PO => "PO",
            Rcc5Rel::PP => "PP",
            Rcc5Rel::PPi => "PPi",
            Rcc5Rel::EQ => "EQ",
        }
    }
}

fn near(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps
}

fn within(inner: &Rect, outer: &Rect, eps: f64) -> bool {
    inner.x_min >= outer.x_min - eps
        && inner.x_max <= outer.x_max + eps
        && inner.y_min >= outer.y_min - eps
        && inner.y_max <= outer.y_max + eps
}

/// RCC5 relation between two rectangles.
///
/// Rects whose overlap on either axis is at most `eps_geo` count as
/// disconnected, so boundary contact is DC.
pub fn rcc5_at(a: &Rect, b: &Rect, eps_geo: f64) -> Rcc5Rel {
    let eq = near(a.x_min, b.x_min, eps_geo)
        && near(a.x_max, b.x_max, eps_geo)
        && near(a.y_min, b.y_min, eps_geo)
        && near(a.y_max, b.y_max, eps_geo);
    if eq {
        return Rcc5Rel::EQ;
    }
    if within(a, b, eps_geo) {
        return Rcc5Rel::PP;
    }
    if within(b, a, eps_geo) {
        return Rcc5Rel::PPi;
    }
    let overlap_x = a.x_max.min(b.x_max) - a.x_min.max(b.x_min);
    let overlap_y = a.y_max.min(b.y_max) - a.y_min.max(b.y_min);
    if overlap_x <= eps_geo || overlap_y <= eps_geo {
        Rcc5Rel::DC
    } else {
        Rcc5Rel::PO
    }
}

/// Seven-way comparison of two projections on one axis. `Low` is the side
/// of smaller coordinates (left, or closer to the viewer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum AxisRel {
    Low,
    OverlapsLow,
    AlongLow,
    Equal,
    OverlapsHigh,
    AlongHigh,
    High,
}

fn axis_rel((alo, ahi): (f64, f64), (blo, bhi): (f64, f64), eps: f64) -> AxisRel {
    let a_in_b = alo >= blo - eps && ahi <= bhi + eps;
    let b_in_a = blo >= alo - eps && bhi <= ahi + eps;
    if a_in_b || b_in_a {
        let (ca, cb) = ((alo + ahi) / 2.0, (blo + bhi) / 2.0);
        return if ca < cb - eps {
            AxisRel::AlongLow
        } else if ca > cb + eps {
            AxisRel::AlongHigh
        } else {
            AxisRel::Equal
        };
    }
    // Touching within eps is treated as disjoint.
    if ahi <= blo + eps {
        AxisRel::Low
    } else if alo >= bhi - eps {
        AxisRel::High
    } else if alo < blo {
        AxisRel::OverlapsLow
    } else {
        AxisRel::OverlapsHigh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HorizontalRel {
    Left,
    OverlapsLeft,
    AlongLeft,
    HorizontallyEqual,
    OverlapsRight,
    AlongRight,
    Right,
}

impl HorizontalRel {
    pub fn name(self) -> &'static str {
        match self {
            HorizontalRel::Left => "left",
            HorizontalRel::OverlapsLeft => "overlaps_left",
            HorizontalRel::AlongLeft => "along_left",
            HorizontalRel::HorizontallyEqual => "horizontally_equal",
            HorizontalRel::OverlapsRight => "overlaps_right",
            HorizontalRel::AlongRight => "along_right",
            HorizontalRel::Right => "right",
        }
    }

    fn from_axis(r: AxisRel) -> Self {
        match r {
            AxisRel::Low => HorizontalRel::Left,
            AxisRel::OverlapsLow => HorizontalRel::OverlapsLeft,
            AxisRel::AlongLow => HorizontalRel::AlongLeft,
            AxisRel::Equal => HorizontalRel::HorizontallyEqual,
            AxisRel::OverlapsHigh => HorizontalRel::OverlapsRight,
            AxisRel::AlongHigh => HorizontalRel::AlongRight,
            AxisRel::High => HorizontalRel::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DepthRel {
    Closer,
    OverlapsCloser,
    AlongCloser,
    DistanceEqual,
    OverlapsFurther,
    AlongFurther,
    Further,
}

impl DepthRel {
    pub fn name(self) -> &'static str {
        match self {
            DepthRel::Closer => "closer",
            DepthRel::OverlapsCloser => "overlaps_closer",
            DepthRel::AlongCloser => "along_closer",
            DepthRel::DistanceEqual => "distance_equal",
            DepthRel::OverlapsFurther => "overlaps_further",
            DepthRel::AlongFurther => "along_further",
            DepthRel::Further => "further",
        }
    }

    fn from_axis(r: AxisRel) -> Self {
        match r {
            AxisRel::Low => DepthRel::Closer,
            AxisRel::OverlapsLow => DepthRel::OverlapsCloser,
            AxisRel::AlongLow => DepthRel::AlongCloser,
            AxisRel::Equal => DepthRel::DistanceEqual,
            AxisRel::OverlapsHigh => DepthRel::OverlapsFurther,
            AxisRel::AlongHigh => DepthRel::AlongFurther,
            AxisRel::High => DepthRel::Further,
        }
    }
}

/// Extrinsic orientation of `a` relative to `b` in the viewer frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrientRel {
    pub horizontal: HorizontalRel,
    pub depth: DepthRel,
}

/// Per-axis orientation. On each axis: disjoint projections give
/// left/right (closer/further); partial overlap gives `overlaps_*` by which
/// side `a` sticks out of; containment gives `along_*` or `*_equal` by
/// comparing centers.
pub fn orientation_at(a: &Rect, b: &Rect, eps_geo: f64) -> OrientRel {
    OrientRel {
        horizontal: HorizontalRel::from_axis(axis_rel(a.x_span(), b.x_span(), eps_geo)),
        depth: DepthRel::from_axis(axis_rel(a.y_span(), b.y_span(), eps_geo)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionRel {
    Approaching,
    Receding,
    Steady,
}

impl MotionRel {
    pub fn name(self) -> &'static str {
        match self {
            MotionRel::Approaching => "approaching",
            MotionRel::Receding => "receding",
            MotionRel::Steady => "steady",
        }
    }
}

/// Relative movement of `a` and `b` around tick `t`, judged by the
/// centroid distance at `t - W` and `t + W`. Ticks too close to either end
/// of the scene for a full window are steady.
pub fn motion_at(
    scene: &Scene,
    a: &str,
    b: &str,
    t: usize,
    params: &AbstractionParams,
) -> Result<MotionRel, SceneError> {
    scene.entity(a)?;
    scene.entity(b)?;
    let w = params.motion_window;
    if t < w || t + w >= scene.n_ticks() {
        return Ok(MotionRel::Steady);
    }
    let before = centroid_distance(scene, a, b, t - w)?;
    let after = centroid_distance(scene, a, b, t + w)?;
    Ok(classify_motion(before, after, params.v_eps))
}

fn classify_motion(before: f64, after: f64, v_eps: f64) -> MotionRel {
    if after < before - v_eps {
        MotionRel::Approaching
    } else if after > before + v_eps {
        MotionRel::Receding
    } else {
        MotionRel::Steady
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Topology,
    Horizontal,
    Depth,
    Motion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Topology(Rcc5Rel),
    Horizontal(HorizontalRel),
    Depth(DepthRel),
    Motion(MotionRel),
}

impl Relation {
    pub fn family(&self) -> Family {
        match self {
            Relation::Topology(_) => Family::Topology,
            Relation::Horizontal(_) => Family::Horizontal,
            Relation::Depth(_) => Family::Depth,
            Relation::Motion(_) => Family::Motion,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Relation::Topology(r) => r.name(),
            Relation::Horizontal(r) => r.name(),
            Relation::Depth(r) => r.name(),
            Relation::Motion(r) => r.name(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A relation holding between two entities over a maximal interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fluent {
    pub relation: Relation,
    pub args: (String, String),
    pub interval: TickInterval,
}

#[derive(Serialize)]
struct FluentLine<'a> {
    rel: &'a str,
    args: [&'a str; 2],
    interval: TickInterval,
}

impl Fluent {
    /// One line of the fluent dump format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&FluentLine {
            rel: self.relation.name(),
            args: [&self.args.0, &self.args.1],
            interval: self.interval,
        })
        .expect("fluent lines always serialize")
    }
}

/// Per-tick relations of one ordered pair, one series per family.
struct PairSeries {
    topology: Vec<Relation>,
    horizontal: Vec<Relation>,
    depth: Vec<Relation>,
    motion: Vec<Relation>,
}

fn pair_series(scene: &Scene, a: &str, b: &str, params: &AbstractionParams) -> PairSeries {
    let n = scene.n_ticks();
    let mut s = PairSeries {
        topology: Vec::with_capacity(n),
        horizontal: Vec::with_capacity(n),
        depth: Vec::with_capacity(n),
        motion: Vec::with_capacity(n),
    };
    let rects: Vec<(Rect, Rect)> = (0..n)
        .map(|t| {
            (
                footprint(scene, a, t).expect("ids come from the scene"),
                footprint(scene, b, t).expect("ids come from the scene"),
            )
        })
        .collect();
    let dist: Vec<f64> = rects
        .iter()
        .map(|(ra, rb)| {
            let ((ax, ay), (bx, by)) = (ra.center(), rb.center());
            (ax - bx).hypot(ay - by)
        })
        .collect();
    let w = params.motion_window;
    for (t, (ra, rb)) in rects.iter().enumerate() {
        s.topology
            .push(Relation::Topology(rcc5_at(ra, rb, params.eps_geo)));
        let o = orientation_at(ra, rb, params.eps_geo);
        s.horizontal.push(Relation::Horizontal(o.horizontal));
        s.depth.push(Relation::Depth(o.depth));
        let m = if t < w || t + w >= n {
            MotionRel::Steady
        } else {
            classify_motion(dist[t - w], dist[t + w], params.v_eps)
        };
        s.motion.push(Relation::Motion(m));
    }
    s
}

/// Maximal runs of identical labels.
fn runs(labels: &[Relation]) -> Vec<(Relation, TickInterval)> {
    let mut out: Vec<(Relation, TickInterval)> = Vec::new();
    for (t, &rel) in labels.iter().enumerate() {
        match out.last_mut() {
            Some((prev, iv)) if *prev == rel => {
                *iv = TickInterval::new(iv.start(), t).expect("runs grow forward");
            }
            _ => out.push((rel, TickInterval::point(t))),
        }
    }
    out
}

/// All fluents for every ordered (block, other entity) pair, sorted by
/// arguments, then relation family, then start tick.
pub fn extract_fluents(scene: &Scene, params: &AbstractionParams) -> Vec<Fluent> {
    let mut pairs: Vec<(&str, &str)> = scene
        .blocks()
        .flat_map(|b| {
            scene
                .entities()
                .iter()
                .filter(move |o| o.id != b.id)
                .map(move |o| (b.id.as_str(), o.id.as_str()))
        })
        .collect();
    pairs.sort_unstable();

    let mut out = Vec::new();
    for (a, b) in pairs {
        let series = pair_series(scene, a, b, params);
        for labels in [
            &series.topology,
            &series.horizontal,
            &series.depth,
            &series.motion,
        ] {
            out.extend(runs(labels).into_iter().map(|(relation, interval)| Fluent {
                relation,
                args: (a.to_string(), b.to_string()),
                interval,
            }));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gen_scene, BlockSpec, Color, EntityKind, MotionScript, StaticSpec};

    fn r(x1: f64, y1: f64, x2: f64, y2: f64) -> Rect {
        Rect::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn rcc5_examples() {
        let eps = 0.01;
        assert_eq!(rcc5_at(&r(0., 0., 1., 1.), &r(5., 5., 6., 6.), eps), Rcc5Rel::DC);
        assert_eq!(rcc5_at(&r(0., 0., 2., 2.), &r(0., 0., 2., 2.), eps), Rcc5Rel::EQ);
        assert_eq!(rcc5_at(&r(1., 1., 2., 2.), &r(0., 0., 5., 5.), eps), Rcc5Rel::PP);
        assert_eq!(rcc5_at(&r(0., 0., 5., 5.), &r(1., 1., 2., 2.), eps), Rcc5Rel::PPi);
        assert_eq!(rcc5_at(&r(0., 0., 2., 2.), &r(1., 1., 3., 3.), eps), Rcc5Rel::PO);
        // Edge contact is disconnected.
        assert_eq!(rcc5_at(&r(0., 0., 1., 1.), &r(1., 0., 2., 1.), eps), Rcc5Rel::DC);
    }

    #[test]
    fn orientation_examples() {
        let eps = 0.01;
        let o = orientation_at(&r(0., 0., 1., 1.), &r(3., 0., 4., 1.), eps);
        assert_eq!(o.horizontal, HorizontalRel::Left);
        let o = orientation_at(&r(1., 2., 3., 4.), &r(1., 2., 3., 4.), eps);
        assert_eq!(o.horizontal, HorizontalRel::HorizontallyEqual);
        assert_eq!(o.depth, DepthRel::DistanceEqual);
        let o = orientation_at(&r(0., 0., 2., 1.), &r(1., 5., 3., 6.), eps);
        assert_eq!(o.horizontal, HorizontalRel::OverlapsLeft);
        assert_eq!(o.depth, DepthRel::Closer);
        let o = orientation_at(&r(2., 0., 3., 1.), &r(0., 0., 10., 1.), eps);
        assert_eq!(o.horizontal, HorizontalRel::AlongLeft);
        let o = orientation_at(&r(8., 0., 9., 1.), &r(0., 0., 10., 1.), eps);
        assert_eq!(o.horizontal, HorizontalRel::AlongRight);
    }

    #[test]
    fn along_left_matches_endpoint_predicate() {
        // Evaluated directly: a = [2,3] inside b = [0,10], centers 2.5 vs 5.
        let (alo, ahi, blo, bhi, eps) = (2.0, 3.0, 0.0, 10.0, 0.01);
        let contained = alo >= blo - eps && ahi <= bhi + eps;
        let below = (alo + ahi) / 2.0 < (blo + bhi) / 2.0 - eps;
        assert!(contained && below);
        let o = orientation_at(&r(alo, 0., ahi, 1.), &r(blo, 0., bhi, 1.), eps);
        assert_eq!(o.horizontal, HorizontalRel::AlongLeft);
    }

    fn approach_scene() -> Scene {
        let script = MotionScript {
            dt: 0.1,
            n_ticks: None,
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
                waypoints: vec![[6.0, 1.0], [1.0, 1.0]],
                segment_ticks: vec![50],
            }],
        };
        gen_scene(&script, 0.0, 0).unwrap()
    }

    #[test]
    fn motion_toward_region_is_approaching() {
        let scene = approach_scene();
        let p = AbstractionParams::default();
        assert_eq!(
            motion_at(&scene, "blk", "reg", 20, &p).unwrap(),
            MotionRel::Approaching
        );
        assert_eq!(
            motion_at(&scene, "reg", "blk", 20, &p).unwrap(),
            MotionRel::Approaching
        );
        // Window does not fit at the edges.
        assert_eq!(motion_at(&scene, "blk", "reg", 0, &p).unwrap(), MotionRel::Steady);
        assert_eq!(
            motion_at(&scene, "blk", "reg", 50, &p).unwrap(),
            MotionRel::Steady
        );
        assert!(motion_at(&scene, "blk", "nope", 20, &p).is_err());
    }

    #[test]
    fn static_scene_fluents_span_everything() {
        let script = MotionScript {
            dt: 0.1,
            n_ticks: Some(12),
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
                waypoints: vec![[5.0, 1.0]],
                segment_ticks: vec![],
            }],
        };
        let scene = gen_scene(&script, 0.0, 0).unwrap();
        let fluents = extract_fluents(&scene, &AbstractionParams::default());
        assert_eq!(fluents.len(), 4);
        for f in &fluents {
            assert_eq!(f.interval, TickInterval::new(0, 11).unwrap());
            if let Relation::Motion(m) = f.relation {
                assert_eq!(m, MotionRel::Steady);
            }
        }
    }

    #[test]
    fn approach_changes_topology_while_approaching() {
        let scene = approach_scene();
        let fluents = extract_fluents(&scene, &AbstractionParams::default());
        let topo: Vec<&Fluent> = fluents
            .iter()
            .filter(|f| f.relation.family() == Family::Topology)
            .collect();
        let names: Vec<&str> = topo.iter().map(|f| f.relation.name()).collect();
        assert_eq!(names, ["DC", "PO", "PP"]);
        let first_po = topo[1].interval.start();
        assert!(fluents.iter().any(|f| {
            f.relation == Relation::Motion(MotionRel::Approaching) && f.interval.contains_tick(first_po)
        }));
    }

    #[test]
    fn fluent_json_line() {
        let f = Fluent {
            relation: Relation::Topology(Rcc5Rel::PO),
            args: ("obj-12".into(), "reg-38".into()),
            interval: TickInterval::new(3, 7).unwrap(),
        };
        assert_eq!(
            f.to_json_line(),
            r#"{"rel":"PO","args":["obj-12","reg-38"],"interval":[3,7]}"#
        );
    }

    #[test]
    fn params_validation() {
        assert!(AbstractionParams::default().validate().is_ok());
        let bad = AbstractionParams {
            motion_window: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let parsed: AbstractionParams = serde_json::from_str(r#"{"v_eps": 0.05}"#).unwrap();
        assert_eq!(parsed.v_eps, 0.05);
        assert_eq!(parsed.motion_window, 3);
    }
}
