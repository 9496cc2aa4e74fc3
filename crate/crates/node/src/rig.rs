//! Camera rig interface and the deterministic mock rig.

use std::io::Cursor;
use std::sync::Arc;
use std::time::Duration;

use protobooth_core::{BoothId, CaptureId, ViewAngle};

use crate::clock::Clock;

/// Full-HD, as fitted in the booth.
pub const DEFAULT_RESOLUTION: (u32, u32) = (1920, 1080);

/// Per-frame acquisition time of the mock rig; seven frames take 8.75 s.
pub const DEFAULT_FRAME_LATENCY: Duration = Duration::from_millis(1250);

const MOCK_WIDTH: u32 = 32;
const MOCK_HEIGHT: u32 = 18;

#[derive(Debug, Clone, Copy)]
pub struct FrameRequest<'a> {
    pub booth_id: &'a BoothId,
    pub capture_id: &'a CaptureId,
    pub angle: ViewAngle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub bytes: Vec<u8>,
    pub media_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("camera {angle} failed: {reason}")]
pub struct RigError {
    pub angle: ViewAngle,
    pub reason: String,
}

/// A set of seven cameras. Real webcam drivers plug in here.
pub trait CameraRig: Send {
    /// Declared sensor resolution (width, height).
    fn resolution(&self) -> (u32, u32);

    fn acquire(&mut self, request: FrameRequest<'_>) -> Result<Frame, RigError>;
}

impl<R: CameraRig + ?Sized> CameraRig for Box<R> {
    fn resolution(&self) -> (u32, u32) {
        (**self).resolution()
    }

    fn acquire(&mut self, request: FrameRequest<'_>) -> Result<Frame, RigError> {
        (**self).acquire(request)
    }
}

/// Tiny PNG standing in for a webcam frame.
///
/// The background colour identifies the angle and the first rows carry the
/// bytes of `"<booth>/<capture>/<angle>"`, so the output is a pure function
/// of the request.
pub fn mock_frame(booth_id: &BoothId, capture_id: &CaptureId, angle: ViewAngle) -> Vec<u8> {
    const PALETTE: [[u8; 3]; 7] = [
        [230, 80, 60],
        [240, 200, 60],
        [90, 190, 90],
        [60, 160, 220],
        [120, 90, 210],
        [210, 90, 180],
        [120, 120, 120],
    ];
    let idx = ViewAngle::ALL.iter().position(|a| *a == angle).unwrap_or(0);
    let mut buf: Vec<u8> = PALETTE[idx]
        .iter()
        .copied()
        .cycle()
        .take((MOCK_WIDTH * MOCK_HEIGHT * 3) as usize)
        .collect();
    let label = format!("{booth_id}/{capture_id}/{angle}");
    for (dst, src) in buf.iter_mut().zip(label.bytes()) {
        *dst = src;
    }
    let img = image::RgbImage::from_raw(MOCK_WIDTH, MOCK_HEIGHT, buf).expect("buffer sized to image");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory png encoding");
    out.into_inner()
}

/// Rig producing [`mock_frame`] images, spending `frame_latency` of clock
/// time per frame. Can be told to fail on a given angle.
pub struct MockRig {
    clock: Arc<dyn Clock>,
    frame_latency: Duration,
    resolution: (u32, u32),
    fail_on: Option<ViewAngle>,
}

impl MockRig {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            frame_latency: DEFAULT_FRAME_LATENCY,
            resolution: DEFAULT_RESOLUTION,
            fail_on: None,
        }
    }

    pub fn with_frame_latency(mut self, latency: Duration) -> Self {
        self.frame_latency = latency;
        self
    }

    pub fn failing_on(mut self, angle: Option<ViewAngle>) -> Self {
        self.fail_on = angle;
        self
    }

    pub fn set_failing_on(&mut self, angle: Option<ViewAngle>) {
        self.fail_on = angle;
    }
}

impl CameraRig for MockRig {
    fn resolution(&self) -> (u32, u32) {
        self.resolution
    }

    fn acquire(&mut self, request: FrameRequest<'_>) -> Result<Frame, RigError> {
        if !self.frame_latency.is_zero() {
            self.clock.sleep(self.frame_latency);
        }
        if self.fail_on == Some(request.angle) {
            return Err(RigError {
                angle: request.angle,
                reason: "device not responding".into(),
            });
        }
        Ok(Frame {
            bytes: mock_frame(request.booth_id, request.capture_id, request.angle),
            media_type: "image/png".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;

    #[test]
    fn mock_frames_are_deterministic_and_distinct() {
        let b = BoothId::new("booth-1");
        let c = CaptureId::new("cap-1");
        let a1 = mock_frame(&b, &c, ViewAngle::Front);
        assert_eq!(a1, mock_frame(&b, &c, ViewAngle::Front));
        assert_ne!(a1, mock_frame(&b, &c, ViewAngle::Top));
        assert_ne!(a1, mock_frame(&b, &CaptureId::new("cap-2"), ViewAngle::Front));
        assert_ne!(a1, mock_frame(&BoothId::new("booth-2"), &c, ViewAngle::Front));
        assert_eq!(&a1[1..4], b"PNG");
    }

    #[test]
    fn mock_frame_decodes_with_label_in_pixels() {
        let b = BoothId::new("b");
        let c = CaptureId::new("c");
        let bytes = mock_frame(&b, &c, ViewAngle::RearLeft);
        let img = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (MOCK_WIDTH, MOCK_HEIGHT));
        let raw = img.into_raw();
        assert_eq!(&raw[..13], b"b/c/rear_left");
    }

    #[test]
    fn latency_advances_clock_and_failure_is_reported() {
        let clock = Arc::new(SimClock::at_unix(1));
        let mut rig = MockRig::new(clock.clone()).failing_on(Some(ViewAngle::Top));
        assert_eq!(rig.resolution(), (1920, 1080));
        let b = BoothId::new("b");
        let c = CaptureId::new("c");
        let req = |angle| FrameRequest { booth_id: &b, capture_id: &c, angle };
        assert!(rig.acquire(req(ViewAngle::Front)).is_ok());
        let err = rig.acquire(req(ViewAngle::Top)).unwrap_err();
        assert_eq!(err.angle, ViewAngle::Top);
        assert_eq!(clock.now_ms(), 1000 + 2 * 1250);
    }
}
