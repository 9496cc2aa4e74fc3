use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use protobooth_core::{
    Annotation, BoothId, CaptureId, CaptureRecord, CardId, ImageRef, ViewAngle, Views,
};
use serde::Serialize;

use crate::clock::Clock;
use crate::ids::generate_capture_id;
use crate::rig::{CameraRig, FrameRequest, RigError};
use crate::spool::{DeliveryReport, Spool, SpoolError};
use crate::state::{LedPattern, NodeEvent, NodeState};
use crate::uplink::Uplink;

pub const DEFAULT_NOTIFY_INTERVAL: Duration = Duration::from_secs(5);

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Spool(#[from] SpoolError),
}

/// Timing of one completed capture sequence, in clock milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CaptureSession {
    pub swiped_at_ms: i64,
    pub spooled_at_ms: i64,
}

impl CaptureSession {
    /// Seconds from swipe to spool-complete.
    pub fn duration_secs(&self) -> f64 {
        (self.spooled_at_ms - self.swiped_at_ms) as f64 / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IgnoreReason {
    /// Swipe arrived while a capture sequence was running.
    Busy,
    /// Node is in fault state and needs a reset.
    Fault,
}

#[derive(Debug)]
pub enum SwipeOutcome {
    Captured {
        record: CaptureRecord,
        session: CaptureSession,
    },
    Ignored(IgnoreReason),
    Fault(NodeError),
}

type TransitionObserver = Box<dyn FnMut(NodeState, NodeState) + Send>;

/// One booth: a sequential state machine driving a rig into a spool.
pub struct CaptureNode {
    booth_id: BoothId,
    rig: Box<dyn CameraRig>,
    spool: Spool,
    clock: Arc<dyn Clock>,
    state: NodeState,
    counter: u32,
    busy_until_ms: i64,
    notify_until_ms: i64,
    notify_interval: Duration,
    observer: Option<TransitionObserver>,
}

impl CaptureNode {
    pub fn new(
        booth_id: BoothId,
        rig: Box<dyn CameraRig>,
        spool: Spool,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, NodeError> {
        let counter = spool.load_counter()?;
        Ok(Self {
            booth_id,
            rig,
            spool,
            clock,
            state: NodeState::Idle,
            counter,
            busy_until_ms: i64::MIN,
            notify_until_ms: i64::MIN,
            notify_interval: DEFAULT_NOTIFY_INTERVAL,
            observer: None,
        })
    }

    pub fn with_notify_interval(mut self, interval: Duration) -> Self {
        self.notify_interval = interval;
        self
    }

    /// Called with `(from, to)` on every state change.
    pub fn on_transition(&mut self, f: impl FnMut(NodeState, NodeState) + Send + 'static) {
        self.observer = Some(Box::new(f));
    }

    pub fn booth_id(&self) -> &BoothId {
        &self.booth_id
    }

    pub fn state(&self) -> NodeState {
        self.state
    }

    pub fn spool(&self) -> &Spool {
        &self.spool
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn leds(&self) -> LedPattern {
        let notifying = self.clock.now_ms() < self.notify_until_ms;
        LedPattern::for_state(self.state, notifying)
    }

    fn fire(&mut self, event: NodeEvent) {
        let next = self
            .state
            .next(event)
            .unwrap_or_else(|| panic!("undeclared transition {} on {event:?}", self.state));
        let prev = std::mem::replace(&mut self.state, next);
        if let Some(obs) = self.observer.as_mut() {
            obs(prev, next);
        }
    }

    /// A swipe arriving now.
    pub fn swipe(&mut self, card_id: &CardId) -> SwipeOutcome {
        let now = self.clock.now_ms();
        self.swipe_at(card_id, now)
    }

    /// A swipe that arrived at `arrived_ms`. Swipes are handled one at a
    /// time; one that arrived while an earlier sequence was running is
    /// dropped.
    pub fn swipe_at(&mut self, card_id: &CardId, arrived_ms: i64) -> SwipeOutcome {
        if self.state == NodeState::Fault {
            return SwipeOutcome::Ignored(IgnoreReason::Fault);
        }
        if self.state != NodeState::Idle || arrived_ms < self.busy_until_ms {
            return SwipeOutcome::Ignored(IgnoreReason::Busy);
        }
        match self.run_sequence(card_id) {
            Ok((record, session)) => SwipeOutcome::Captured { record, session },
            Err(e) => {
                self.busy_until_ms = self.clock.now_ms();
                self.fire(NodeEvent::Failure);
                SwipeOutcome::Fault(e)
            }
        }
    }

    fn run_sequence(&mut self, card_id: &CardId) -> Result<(CaptureRecord, CaptureSession), NodeError> {
        let swiped_at_ms = self.clock.now_ms();
        self.fire(NodeEvent::Swipe);

        self.counter = self.counter.wrapping_add(1);
        self.spool.store_counter(self.counter)?;
        let capture_id: CaptureId = generate_capture_id(&self.booth_id, swiped_at_ms, self.counter);

        let mut images = BTreeMap::new();
        let mut views = Views::new();
        for angle in ViewAngle::ALL {
            let frame = self.rig.acquire(FrameRequest {
                booth_id: &self.booth_id,
                capture_id: &capture_id,
                angle,
            })?;
            views.insert(angle, ImageRef::for_bytes(&frame.bytes, frame.media_type));
            images.insert(angle, frame.bytes);
        }
        self.fire(NodeEvent::FramesAcquired);

        let record = CaptureRecord {
            capture_id,
            booth_id: self.booth_id.clone(),
            card_id: card_id.clone(),
            timestamp: swiped_at_ms.div_euclid(1000),
            views,
            annotation: Annotation::default(),
        };
        self.spool.put(&record, &images)?;
        let spooled_at_ms = self.clock.now_ms();
        self.fire(NodeEvent::Spooled);

        self.busy_until_ms = spooled_at_ms;
        self.notify_until_ms = spooled_at_ms + self.notify_interval.as_millis() as i64;
        tracing::info!(capture = %record.capture_id, card = %card_id, "capture spooled");
        Ok((
            record,
            CaptureSession {
                swiped_at_ms,
                spooled_at_ms,
            },
        ))
    }

    /// Leave fault state.
    pub fn reset(&mut self) {
        if self.state == NodeState::Fault {
            self.fire(NodeEvent::Reset);
        }
    }

    /// Push spooled captures whose backoff has expired.
    pub fn flush_spool(&mut self, uplink: &mut dyn Uplink) -> Result<DeliveryReport, SpoolError> {
        self.spool.flush(uplink, self.clock.now_ms(), false)
    }

    /// Push every spooled capture, ignoring backoff.
    pub fn flush_spool_now(&mut self, uplink: &mut dyn Uplink) -> Result<DeliveryReport, SpoolError> {
        self.spool.flush(uplink, self.clock.now_ms(), true)
    }
}
