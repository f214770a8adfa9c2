//! Grounding dynamic spatial language in time-stamped 2-D scenes.

pub mod events;
pub mod game;
pub mod geometry;
pub mod grammar;
pub mod intervals;
pub mod qualitative;
pub mod semantics;
pub mod suite;
