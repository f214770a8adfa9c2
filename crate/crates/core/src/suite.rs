//! Built-in synthetic scene pairs. In every pair each scene has an event
//! the other lacks that the grammar can put into words: entering versus
//! leaving, crossing versus not crossing, different landmarks, or
//! different block colors.

use crate::geometry::{
    gen_scene, BlockSpec, Color, EntityKind, MotionScript, SceneError, ScenePair, StaticSpec,
};

const BLOCK_EXTENT: [f64; 2] = [0.4, 0.4];
const SEGMENT_TICKS: usize = 60;
const REST_TICKS: usize = 20;

const GREEN: [u8; 3] = [145, 50, 30];
const BLUE: [u8; 3] = [35, 240, 110];
const WHITE: [u8; 3] = [240, 128, 128];

/// Named straight-line paths through the suite layout.
const PATHS: [(&str, [f64; 2], [f64; 2]); 10] = [
    ("across-yellow", [9.5, 5.0], [4.5, 5.0]),
    ("into-yellow", [9.5, 5.0], [7.0, 5.0]),
    ("out-of-yellow", [7.0, 5.0], [9.5, 5.0]),
    ("across-red", [4.5, 5.0], [-0.5, 5.0]),
    ("into-red", [4.5, 5.0], [2.0, 5.0]),
    ("out-of-red", [2.0, 5.0], [4.5, 5.0]),
    ("across-white", [4.5, 3.0], [4.5, -1.0]),
    ("into-white", [4.5, 3.0], [4.5, 1.0]),
    ("out-of-white", [4.5, 1.0], [4.5, 3.0]),
    ("past-yellow", [9.5, 3.0], [6.0, 3.0]),
];

const PATH_PAIRS: [(&str, &str); 8] = [
    ("into-yellow", "out-of-yellow"),
    ("out-of-red", "into-red"),
    ("into-white", "out-of-white"),
    ("across-red", "across-yellow"),
    ("into-red", "into-yellow"),
    ("out-of-yellow", "out-of-red"),
    ("across-red", "into-yellow"),
    ("across-white", "out-of-yellow"),
];

const COLOR_PAIRS: [(&str, [u8; 3], [u8; 3]); 3] = [
    ("across-yellow", GREEN, BLUE),
    ("into-red", WHITE, GREEN),
    ("across-white", BLUE, GREEN),
];

fn statics() -> Vec<StaticSpec> {
    let s = |id: &str, kind, color: [u8; 3], rect| StaticSpec {
        id: id.to_string(),
        kind,
        color: Color::Ycbcr(color),
        rect,
        pose: None,
    };
    vec![
        s("reg-1", EntityKind::Region, [220, 10, 145], [6.0, 4.0, 8.0, 6.0]),
        s("reg-2", EntityKind::Region, [80, 90, 240], [1.0, 4.0, 3.0, 6.0]),
        s("reg-3", EntityKind::Region, [240, 128, 128], [3.5, 0.0, 5.5, 2.0]),
        s("obj-1", EntityKind::Box, BLUE, [8.5, 0.0, 9.5, 1.0]),
    ]
}

/// A single-block script over the suite layout.
pub fn suite_script(path: &str, block_color: [u8; 3]) -> Option<MotionScript> {
    let (_, from, to) = PATHS.iter().find(|(name, _, _)| *name == path)?;
    Some(MotionScript {
        dt: crate::geometry::DEFAULT_DT,
        n_ticks: Some(SEGMENT_TICKS + 1 + REST_TICKS),
        statics: statics(),
        blocks: vec![BlockSpec {
            id: "obj-2".to_string(),
            color: Color::Ycbcr(block_color),
            extent: BLOCK_EXTENT,
            waypoints: vec![*from, *to],
            segment_ticks: vec![SEGMENT_TICKS],
        }],
    })
}

/// Script pairs of the suite, with pair ids.
pub fn suite_scripts() -> Vec<(String, MotionScript, MotionScript)> {
    let mut out = Vec::new();
    for (a, b) in PATH_PAIRS {
        for (cname, color) in [("green", GREEN), ("blue", BLUE), ("white", WHITE)] {
            out.push((
                format!("{a}/{b}/{cname}"),
                suite_script(a, color).expect("known path"),
                suite_script(b, color).expect("known path"),
            ));
        }
    }
    for (path, ca, cb) in COLOR_PAIRS {
        out.push((
            format!("{path}/colors-{}-{}", ca[0], cb[0]),
            suite_script(path, ca).expect("known path"),
            suite_script(path, cb).expect("known path"),
        ));
    }
    out
}

/// Renders the suite with positional noise. Scene `k` of the flattened
/// list uses seed `seed + k`.
pub fn discriminable_pairs(noise_sigma: f64, seed: u64) -> Result<Vec<ScenePair>, SceneError> {
    suite_scripts()
        .into_iter()
        .enumerate()
        .map(|(i, (id, a, b))| {
            let k = 2 * i as u64;
            ScenePair::new(
                id,
                gen_scene(&a, noise_sigma, seed.wrapping_add(k))?,
                gen_scene(&b, noise_sigma, seed.wrapping_add(k + 1))?,
            )
        })
        .collect()
}
