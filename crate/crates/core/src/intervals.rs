//! Allen relations over closed integer tick intervals.
//!
//! Two intervals `meets` when the first ends on the tick right before the
//! second starts (`end + 1 == start`), so consecutive maximal runs of a
//! per-tick series always meet.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed tick range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TickInterval {
    start: usize,
    end: usize,
}

impl TickInterval {
    /// Returns `None` when `start > end`.
    pub fn new(start: usize, end: usize) -> Option<TickInterval> {
        (start <= end).then_some(TickInterval { start, end })
    }

    pub fn point(t: usize) -> TickInterval {
        TickInterval { start: t, end: t }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_tick(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    /// `other` lies within `self`, shared endpoints allowed.
    pub fn covers(&self, other: &TickInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// At least one tick in common.
    pub fn intersects(&self, other: &TickInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Smallest interval spanning both.
    pub fn hull(&self, other: &TickInterval) -> TickInterval {
        TickInterval {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for TickInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

impl Serialize for TickInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.start, self.end].serialize(s)
    }
}

impl<'de> Deserialize<'de> for TickInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        TickInterval::new(start, end)
            .ok_or_else(|| serde::de::Error::custom("interval start must not exceed end"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllenRel {
    Before,
    Meets,
    Overlaps,
    Starts,
    During,
    Finishes,
    Equal,
    After,
    MetBy,
    OverlappedBy,
    StartedBy,
    Contains,
    FinishedBy,
}

impl AllenRel {
    pub const ALL: [AllenRel; 13] = [
        AllenRel::Before,
        AllenRel::Meets,
        AllenRel::Overlaps,
        AllenRel::Starts,
        AllenRel::During,
        AllenRel::Finishes,
        AllenRel::Equal,
        AllenRel::After,
        AllenRel::MetBy,
        AllenRel::OverlappedBy,
        AllenRel::StartedBy,
        AllenRel::Contains,
        AllenRel::FinishedBy,
    ];

    pub fn converse(self) -> AllenRel {
        use AllenRel::*;
        match self {
            Before => After,
            Meets => MetBy,
            Overlaps => OverlappedBy,
            Starts => StartedBy,
            During => Contains,
            Finishes => FinishedBy,
            Equal => Equal,
            After => Before,
            MetBy => Meets,
            OverlappedBy => Overlaps,
            StartedBy => Starts,
            Contains => During,
            FinishedBy => Finishes,
        }
    }

    pub fn name(self) -> &'static str {
        use AllenRel::*;
        match self {
            Before => "before",
            Meets => "meets",
            Overlaps => "overlaps",
            Starts => "starts",
            During => "during",
            Finishes => "finishes",
            Equal => "equal",
            After => "after",
            MetBy => "met_by",
            OverlappedBy => "overlapped_by",
            StartedBy => "started_by",
            Contains => "contains",
            FinishedBy => "finished_by",
        }
    }
}

impl fmt::Display for AllenRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The unique Allen relation holding from `i` to `j`.
pub fn allen_relation(i: TickInterval, j: TickInterval) -> AllenRel {
    use std::cmp::Ordering::*;
    if i.end + 1 < j.start {
        return AllenRel::Before;
    }
    if i.end + 1 == j.start {
        return AllenRel::Meets;
    }
    if j.end + 1 < i.start {
        return AllenRel::After;
    }
    if j.end + 1 == i.start {
        return AllenRel::MetBy;
    }
    // The intervals share at least one tick.
    match (i.start.cmp(&j.start), i.end.cmp(&j.end)) {
        (Less, Less) => AllenRel::Overlaps,
        (Less, Equal) => AllenRel::FinishedBy,
        (Less, Greater) => AllenRel::Contains,
        (Equal, Less) => AllenRel::Starts,
        (Equal, Equal) => AllenRel::Equal,
        (Equal, Greater) => AllenRel::StartedBy,
        (Greater, Less) => AllenRel::During,
        (Greater, Equal) => AllenRel::Finishes,
        (Greater, Greater) => AllenRel::OverlappedBy,
    }
}

/// Maximal runs of `true`, in increasing order.
pub fn intervals_from_series(series: &[bool]) -> Vec<TickInterval> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    for (t, &on) in series.iter().enumerate() {
        match (on, open) {
            (true, None) => open = Some(t),
            (false, Some(s)) => {
                out.push(TickInterval { start: s, end: t - 1 });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push(TickInterval {
            start: s,
            end: series.len() - 1,
        });
    }
    out
}
