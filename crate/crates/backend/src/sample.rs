//! Small hand-made captures for tests and examples.

use std::collections::BTreeMap;

use protobooth_core::{Annotation, BoothId, CaptureId, CaptureRecord, ImageRef, ViewAngle, Views};
use protobooth_node::mock_frame;

/// A valid capture on booth `booth-1` with mock PNG images for all seven views.
pub fn capture_with_images(
    capture_id: &str,
    card_id: &str,
    timestamp: i64,
) -> (CaptureRecord, BTreeMap<ViewAngle, Vec<u8>>) {
    let booth = BoothId::new("booth-1");
    let id = CaptureId::new(capture_id);
    let images: BTreeMap<_, _> = ViewAngle::ALL
        .iter()
        .map(|&a| (a, mock_frame(&booth, &id, a)))
        .collect();
    let views: Views = images
        .iter()
        .map(|(&a, b)| (a, ImageRef::for_bytes(b, "image/png")))
        .collect();
    let record = CaptureRecord {
        capture_id: id,
        booth_id: booth,
        card_id: card_id.into(),
        timestamp,
        views,
        annotation: Annotation::default(),
    };
    (record, images)
}
