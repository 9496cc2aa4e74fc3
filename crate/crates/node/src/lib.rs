//! The capture booth.
//!
//! A [`CaptureNode`] waits for RFID swipes, runs the seven-camera sequence on
//! a [`CameraRig`], and writes the result to a durable [`Spool`] before
//! reporting success. Spooled captures are pushed to the backend through an
//! [`Uplink`] with exponential backoff; the backend deduplicates by capture
//! id, so delivery is at-least-once without duplicates.

pub mod clock;
pub mod config;
pub mod daemon;
pub mod ids;
pub mod node;
pub mod rig;
pub mod script;
pub mod spool;
pub mod state;
pub mod uplink;

pub use clock::{Clock, SimClock, SystemClock};
pub use config::NodeConfig;
pub use ids::generate_capture_id;
pub use node::{CaptureNode, CaptureSession, IgnoreReason, NodeError, SwipeOutcome};
pub use rig::{mock_frame, CameraRig, Frame, FrameRequest, MockRig, RigError};
pub use script::{ScriptedSwipe, SimulationReport};
pub use spool::{backoff_delay, DeliveryReport, Spool, SpoolEntry, SpoolError};
pub use state::{LedPattern, LedState, NodeEvent, NodeState};
pub use uplink::{Uplink, UplinkError};
