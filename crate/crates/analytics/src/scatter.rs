//! Dot plots: captures by time of day and weekday, and a single project's
//! timeline.

use chrono::{DateTime, Datelike, Timelike};
use chrono_tz::Tz;
use protobooth_core::{canonical_order, CaptureId, CaptureRecord, Project, ProjectId};
use serde::{Deserialize, Serialize};

use crate::jitter::jitter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub capture_id: CaptureId,
    /// Hours since local midnight for the weekday plot, UNIX seconds for
    /// the timeline.
    pub x: f64,
    pub lane: u32,
    pub jitter: f64,
    pub color_key: Option<ProjectId>,
}

/// Project a capture is coloured by: the smallest project id among those
/// containing it.
fn color_key(projects: &[Project], id: &CaptureId) -> Option<ProjectId> {
    projects
        .iter()
        .filter(|p| p.members.contains(id))
        .map(|p| &p.project_id)
        .min()
        .cloned()
}

/// One point per capture: local time of day against ISO weekday (Monday = 0).
/// Points come out in canonical order regardless of input order.
pub fn weekday_scatter(
    captures: &[CaptureRecord],
    projects: &[Project],
    seed: u64,
    tz: Tz,
) -> Vec<ScatterPoint> {
    canonical_order(captures)
        .into_iter()
        .map(|c| {
            let local = DateTime::from_timestamp(c.timestamp, 0)
                .expect("timestamp within chrono range")
                .with_timezone(&tz);
            ScatterPoint {
                capture_id: c.capture_id.clone(),
                x: f64::from(local.hour()) + f64::from(local.minute()) / 60.0,
                lane: local.weekday().num_days_from_monday(),
                jitter: jitter(seed, &c.capture_id),
                color_key: color_key(projects, &c.capture_id),
            }
        })
        .collect()
}

/// One lane, x = capture time. No binning, so gaps show as they are.
pub fn project_timeline(captures: &[CaptureRecord], seed: u64) -> Vec<ScatterPoint> {
    canonical_order(captures)
        .into_iter()
        .map(|c| ScatterPoint {
            capture_id: c.capture_id.clone(),
            x: c.timestamp as f64,
            lane: 0,
            jitter: jitter(seed, &c.capture_id),
            color_key: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::record;
    use std::collections::BTreeSet;

    #[test]
    fn empty_input() {
        assert!(weekday_scatter(&[], &[], 1, Tz::UTC).is_empty());
        assert!(project_timeline(&[], 1).is_empty());
    }

    #[test]
    fn monday_half_past_one() {
        // 2017-10-30T13:30:00Z
        let pts = weekday_scatter(&[record("a", 1_509_370_200)], &[], 1, Tz::UTC);
        assert_eq!(pts[0].x, 13.5);
        assert_eq!(pts[0].lane, 0);
        assert_eq!(pts[0].color_key, None);
    }

    #[test]
    fn timezone_shifts_day_and_hour() {
        // 2017-10-29T23:30Z is Monday 00:30 in Oslo (CET after the DST change).
        let pts = weekday_scatter(&[record("a", 1_509_319_800)], &[], 1, chrono_tz::Europe::Oslo);
        assert_eq!((pts[0].lane, pts[0].x), (0, 0.5));
        let utc = weekday_scatter(&[record("a", 1_509_319_800)], &[], 1, Tz::UTC);
        assert_eq!((utc[0].lane, utc[0].x), (6, 23.5));
    }

    #[test]
    fn color_is_first_project_by_id() {
        let mk = |id: &str, members: &[&str]| Project {
            project_id: id.into(),
            title: String::new(),
            description: String::new(),
            contributors: BTreeSet::new(),
            members: members.iter().map(|m| CaptureId::new(*m)).collect(),
        };
        let projects = [mk("proj-2", &["a", "b"]), mk("proj-1", &["b"])];
        let pts = weekday_scatter(&[record("a", 10), record("b", 20), record("c", 30)], &projects, 0, Tz::UTC);
        let keys: Vec<_> = pts.iter().map(|p| p.color_key.as_ref().map(|k| k.to_string())).collect();
        assert_eq!(keys, [Some("proj-2".into()), Some("proj-1".into()), None]);
    }

    #[test]
    fn shuffle_invariant() {
        let a = [record("a", 30), record("b", 10), record("c", 10)];
        let b = [record("c", 10), record("a", 30), record("b", 10)];
        assert_eq!(project_timeline(&a, 5), project_timeline(&b, 5));
        assert_eq!(weekday_scatter(&a, &[], 5, Tz::UTC), weekday_scatter(&b, &[], 5, Tz::UTC));
        let ids: Vec<_> = project_timeline(&a, 5).into_iter().map(|p| p.capture_id.to_string()).collect();
        assert_eq!(ids, ["b", "c", "a"]);
    }
}
