use protobooth_core::{Annotation, CaptureRecord, ImageRef, ViewAngle};

pub fn record_by(id: &str, card: &str, timestamp: i64) -> CaptureRecord {
    CaptureRecord {
        capture_id: id.into(),
        booth_id: "booth".into(),
        card_id: card.into(),
        timestamp,
        views: ViewAngle::ALL
            .iter()
            .map(|&a| (a, ImageRef::for_bytes(a.as_str().as_bytes(), "image/png")))
            .collect(),
        annotation: Annotation::default(),
    }
}

pub fn record(id: &str, timestamp: i64) -> CaptureRecord {
    record_by(id, "card", timestamp)
}
