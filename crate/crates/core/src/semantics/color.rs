//! Nearest-prototype color categorization in YCbCr space.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SemanticsError;
use crate::geometry::Color;

const DEFAULT_PROTOTYPES: &str = include_str!("../../fixtures/prototypes.json");

/// Color category name to prototype YCbCr sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorPrototypes(BTreeMap<String, [u8; 3]>);

impl ColorPrototypes {
    pub fn new(map: BTreeMap<String, [u8; 3]>) -> ColorPrototypes {
        ColorPrototypes(map)
    }

    pub fn from_json(text: &str) -> Result<ColorPrototypes, SemanticsError> {
        serde_json::from_str(text).map_err(|e| SemanticsError::Config(e.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, [u8; 3])> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Default for ColorPrototypes {
    fn default() -> Self {
        ColorPrototypes::from_json(DEFAULT_PROTOTYPES).expect("bundled prototypes parse")
    }
}

fn distance(a: [u8; 3], b: [u8; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Nearest prototype and its Euclidean distance. Ties resolve to the
/// lexicographically smallest category name.
pub fn nearest_prototype(
    sample: [u8; 3],
    prototypes: &ColorPrototypes,
) -> Result<(String, f64), SemanticsError> {
    let mut best: Option<(&str, f64)> = None;
    for (name, proto) in prototypes.iter() {
        let d = distance(sample, proto);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((name, d));
        }
    }
    best.map(|(n, d)| (n.to_string(), d))
        .ok_or(SemanticsError::EmptyPrototypes)
}

pub fn classify_color(sample: [u8; 3], prototypes: &ColorPrototypes) -> Result<String, SemanticsError> {
    nearest_prototype(sample, prototypes).map(|(name, _)| name)
}

/// Category of an entity color; symbolic colors match at distance zero.
pub fn categorize(color: &Color, prototypes: &ColorPrototypes) -> Result<(String, f64), SemanticsError> {
    match color {
        Color::Named(name) => Ok((name.clone(), 0.0)),
        Color::Ycbcr(sample) => nearest_prototype(*sample, prototypes),
    }
}
