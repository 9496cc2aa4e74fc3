use protobooth_core::{BoothId, CaptureId};

/// `<13-digit ms>-<booth>-<8-hex counter>`.
///
/// The zero-padded millisecond prefix makes ids sort by creation time; the
/// booth id and per-booth counter keep ids from different booths, or from
/// the same booth within one millisecond, apart.
pub fn generate_capture_id(booth_id: &BoothId, now_ms: i64, counter: u32) -> CaptureId {
    CaptureId::new(format!("{:013}-{}-{:08x}", now_ms.max(0), booth_id, counter))
}
