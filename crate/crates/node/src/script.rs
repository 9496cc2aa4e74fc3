//! Declarative swipe scripts for replaying booth usage on simulated time.
//!
//! CSV with header `offset_seconds,card_id`; offsets are relative to the
//! simulation start and may be fractional.

use std::io::Read;

use protobooth_core::{CaptureRecord, CardId};
use serde::{Deserialize, Serialize};

use crate::clock::SimClock;
use crate::node::{CaptureNode, CaptureSession, SwipeOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSwipe {
    pub offset_seconds: f64,
    pub card_id: CardId,
}

pub fn parse_script<R: Read>(reader: R) -> Result<Vec<ScriptedSwipe>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut swipes: Vec<ScriptedSwipe> = rdr.deserialize().collect::<Result<_, _>>()?;
    swipes.sort_by(|a, b| a.offset_seconds.total_cmp(&b.offset_seconds));
    Ok(swipes)
}

#[derive(Debug, Default, Serialize)]
pub struct SimulationReport {
    pub captured: Vec<CaptureRecord>,
    pub sessions: Vec<CaptureSession>,
    /// Swipes dropped because a sequence was running (or the node faulted).
    pub ignored: usize,
    pub faults: usize,
}

/// Replay `swipes` against `node`, whose clock must be `clock`.
pub fn run_script(
    node: &mut CaptureNode,
    clock: &SimClock,
    start_ms: i64,
    swipes: &[ScriptedSwipe],
) -> SimulationReport {
    let mut report = SimulationReport::default();
    for s in swipes {
        let arrived = start_ms + (s.offset_seconds * 1000.0).round() as i64;
        clock.advance_to(arrived);
        match node.swipe_at(&s.card_id, arrived) {
            SwipeOutcome::Captured { record, session } => {
                report.captured.push(record);
                report.sessions.push(session);
            }
            SwipeOutcome::Ignored(_) => report.ignored += 1,
            SwipeOutcome::Fault(e) => {
                tracing::error!(error = %e, "capture failed");
                report.faults += 1;
                node.reset();
            }
        }
    }
    report
}
