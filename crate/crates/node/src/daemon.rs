//! Long-running booth loop.
//!
//! Swipes arrive on a channel stamped with their arrival time and are
//! handled one after another. A background thread flushes the spool on an
//! interval; it takes the same lock as the swipe handler, so a flush never
//! overlaps a capture sequence.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use protobooth_core::CardId;
use serde::Serialize;

use crate::node::{CaptureNode, SwipeOutcome};
use crate::spool::SpoolError;
use crate::uplink::Uplink;

#[derive(Debug, Default, Clone, Serialize)]
pub struct DaemonSummary {
    pub captured: usize,
    pub ignored: usize,
    pub faults: usize,
    pub delivered: usize,
    /// Entries still in the spool on exit.
    pub pending: usize,
}

/// Run until `swipes` is closed, then make one last delivery attempt.
pub fn run_daemon<U>(
    node: CaptureNode,
    uplink: U,
    swipes: Receiver<(CardId, i64)>,
    flush_interval: Duration,
) -> Result<DaemonSummary, SpoolError>
where
    U: Uplink + Send + 'static,
{
    let node = Arc::new(Mutex::new(node));
    let uplink = Arc::new(Mutex::new(uplink));
    let summary = Arc::new(Mutex::new(DaemonSummary::default()));
    let (stop_tx, stop_rx) = mpsc::channel::<()>();

    let flusher = {
        let node = Arc::clone(&node);
        let uplink = Arc::clone(&uplink);
        let summary = Arc::clone(&summary);
        thread::spawn(move || {
            while let Err(RecvTimeoutError::Timeout) = stop_rx.recv_timeout(flush_interval) {
                let mut node = node.lock().expect("node lock");
                let mut up = uplink.lock().expect("uplink lock");
                match node.flush_spool(&mut *up) {
                    Ok(r) => summary.lock().expect("summary lock").delivered += r.delivered,
                    Err(e) => tracing::error!(error = %e, "spool flush failed"),
                }
            }
        })
    };

    for (card, arrived_ms) in swipes {
        let outcome = node.lock().expect("node lock").swipe_at(&card, arrived_ms);
        let mut s = summary.lock().expect("summary lock");
        match outcome {
            SwipeOutcome::Captured { record, session } => {
                tracing::info!(
                    capture = %record.capture_id,
                    seconds = session.duration_secs(),
                    "capture complete"
                );
                s.captured += 1;
            }
            SwipeOutcome::Ignored(reason) => {
                tracing::info!(card = %card, ?reason, "swipe ignored");
                s.ignored += 1;
            }
            SwipeOutcome::Fault(e) => {
                tracing::error!(error = %e, "capture failed, resetting");
                s.faults += 1;
                node.lock().expect("node lock").reset();
            }
        }
    }

    let _ = stop_tx.send(());
    flusher.join().expect("flusher thread");

    let mut node = node.lock().expect("node lock");
    let mut up = uplink.lock().expect("uplink lock");
    let report = node.flush_spool_now(&mut *up)?;
    let mut out = summary.lock().expect("summary lock").clone();
    out.delivered += report.delivered;
    out.pending = node.spool().len()?;
    Ok(out)
}
