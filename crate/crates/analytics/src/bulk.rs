//! Bulk capture detection: one card swiped for many prototypes in a short
//! span, which makes automatic timestamps misleading.

use std::collections::BTreeMap;

use protobooth_core::{canonical_order, CaptureId, CaptureRecord, CardId};
use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;

pub const DEFAULT_WINDOW_SECONDS: i64 = 1800;
pub const DEFAULT_THRESHOLD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkSession {
    pub card_id: CardId,
    pub window_start: i64,
    pub window_end: i64,
    pub capture_ids: Vec<CaptureId>,
    pub count: usize,
}

/// Maximal same-card runs whose consecutive gaps are all at most
/// `window_seconds`, kept when longer than `threshold`. Oldest first.
pub fn detect_bulk(
    captures: &[CaptureRecord],
    window_seconds: i64,
    threshold: usize,
) -> Result<Vec<BulkSession>, AnalyticsError> {
    if window_seconds <= 0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "window must be positive, got {window_seconds}"
        )));
    }
    if threshold < 1 {
        return Err(AnalyticsError::InvalidParameter("threshold must be at least 1".into()));
    }
    let mut by_card: BTreeMap<&CardId, Vec<&CaptureRecord>> = BTreeMap::new();
    for c in canonical_order(captures) {
        by_card.entry(&c.card_id).or_default().push(c);
    }

    let mut out = Vec::new();
    for (card, caps) in by_card {
        let mut start = 0;
        for i in 1..=caps.len() {
            let split = i == caps.len() || caps[i].timestamp - caps[i - 1].timestamp > window_seconds;
            if !split {
                continue;
            }
            let run = &caps[start..i];
            if run.len() > threshold {
                out.push(BulkSession {
                    card_id: card.clone(),
                    window_start: run[0].timestamp,
                    window_end: run[run.len() - 1].timestamp,
                    capture_ids: run.iter().map(|c| c.capture_id.clone()).collect(),
                    count: run.len(),
                });
            }
            start = i;
        }
    }
    out.sort_by(|a, b| (a.window_start, &a.card_id).cmp(&(b.window_start, &b.card_id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::record_by;

    #[test]
    fn ten_minute_burst_flagged() {
        let caps: Vec<_> = (0..25).map(|i| record_by(&format!("b{i}"), "k", 1_000_000 + i * 24)).collect();
        let s = detect_bulk(&caps, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].count, 25);
        assert_eq!(s[0].window_end - s[0].window_start, 24 * 24);
    }

    #[test]
    fn week_spread_not_flagged() {
        let week = 7 * 86_400;
        let caps: Vec<_> = (0..25).map(|i| record_by(&format!("w{i}"), "k", 1_000_000 + i * week / 25)).collect();
        assert!(detect_bulk(&caps, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).unwrap().is_empty());
    }

    #[test]
    fn exactly_threshold_is_not_bulk() {
        let caps: Vec<_> = (0..20).map(|i| record_by(&format!("b{i}"), "k", 100 + i)).collect();
        assert!(detect_bulk(&caps, 1800, 20).unwrap().is_empty());
        assert_eq!(detect_bulk(&caps, 1800, 19).unwrap().len(), 1);
    }

    #[test]
    fn other_cards_do_not_join_a_run() {
        let mut caps: Vec<_> = (0..21).map(|i| record_by(&format!("a{i}"), "k1", 100 + i * 60)).collect();
        caps.push(record_by("x", "k2", 150));
        let s = detect_bulk(&caps, 1800, 20).unwrap();
        assert_eq!(s.len(), 1);
        assert!(!s[0].capture_ids.contains(&"x".into()));
    }

    #[test]
    fn bad_parameters() {
        assert!(detect_bulk(&[], 0, 20).is_err());
        assert!(detect_bulk(&[], 10, 0).is_err());
    }
}
