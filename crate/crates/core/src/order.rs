//! Chronological ordering of captures.
//!
//! Captures are ordered by timestamp, ties broken by ascending capture id.
//! Every figure and the link graph's edge rule use this order.

use std::collections::HashMap;

use crate::capture::CaptureRecord;
use crate::ids::CaptureId;

fn order_key(r: &CaptureRecord) -> (i64, &str) {
    (r.timestamp, r.capture_id.as_str())
}

/// Captures in canonical order.
pub fn canonical_order<'a, I>(captures: I) -> Vec<&'a CaptureRecord>
where
    I: IntoIterator<Item = &'a CaptureRecord>,
{
    let mut out: Vec<_> = captures.into_iter().collect();
    out.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
    out
}

pub fn sort_canonical(captures: &mut [CaptureRecord]) {
    captures.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
}

/// Rank of every capture in a set under the canonical order.
#[derive(Debug, Clone, Default)]
pub struct Chronology {
    order: Vec<CaptureId>,
    rank: HashMap<CaptureId, usize>,
}

impl Chronology {
    pub fn from_captures<'a, I>(captures: I) -> Self
    where
        I: IntoIterator<Item = &'a CaptureRecord>,
    {
        let order: Vec<CaptureId> = canonical_order(captures)
            .into_iter()
            .map(|r| r.capture_id.clone())
            .collect();
        let rank = order
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Self { order, rank }
    }

    /// Zero-based position, `None` when the capture is not in the set.
    pub fn rank(&self, id: &CaptureId) -> Option<usize> {
        self.rank.get(id).copied()
    }

    pub fn contains(&self, id: &CaptureId) -> bool {
        self.rank.contains_key(id)
    }

    pub fn ids(&self) -> &[CaptureId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
