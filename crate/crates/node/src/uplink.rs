use std::collections::BTreeMap;

use protobooth_core::{CaptureRecord, IngestReceipt, ViewAngle};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UplinkError {
    /// Transport failure; the backend may or may not have stored the capture.
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend rejected capture ({status}): {message}")]
    Rejected { status: u16, message: String },
}

/// Delivery channel from a booth to the ingestion endpoint.
pub trait Uplink {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError>;
}

impl<U: Uplink + ?Sized> Uplink for &mut U {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError> {
        (**self).deliver(record, images)
    }
}
