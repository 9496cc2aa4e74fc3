//! Capture records: one swipe at a booth, seven views, optional annotation.

use std::fmt;
use std::str::FromStr;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::{BoothId, CaptureId, CardId};

/// Camera position inside the booth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewAngle {
    Front,
    Top,
    Right,
    Left,
    RearRight,
    RearLeft,
    Rear,
}

impl ViewAngle {
    /// All angles in acquisition order.
    pub const ALL: [ViewAngle; 7] = [
        ViewAngle::Front,
        ViewAngle::Top,
        ViewAngle::Right,
        ViewAngle::Left,
        ViewAngle::RearRight,
        ViewAngle::RearLeft,
        ViewAngle::Rear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ViewAngle::Front => "front",
            ViewAngle::Top => "top",
            ViewAngle::Right => "right",
            ViewAngle::Left => "left",
            ViewAngle::RearRight => "rear_right",
            ViewAngle::RearLeft => "rear_left",
            ViewAngle::Rear => "rear",
        }
    }
}

impl fmt::Display for ViewAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown view angle: {0}")]
pub struct UnknownAngle(pub String);

impl FromStr for ViewAngle {
    type Err = UnknownAngle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewAngle::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownAngle(s.to_owned()))
    }
}

/// Reference to an image blob by content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    /// Lowercase hex SHA-256 of the image bytes.
    pub content_hash: String,
    pub media_type: String,
    pub byte_length: u64,
}

impl ImageRef {
    /// Describe `bytes` by content.
    pub fn for_bytes(bytes: &[u8], media_type: impl Into<String>) -> Self {
        Self {
            content_hash: content_hash(bytes),
            media_type: media_type.into(),
            byte_length: bytes.len() as u64,
        }
    }

    pub fn matches(&self, bytes: &[u8]) -> bool {
        self.byte_length == bytes.len() as u64 && self.content_hash == content_hash(bytes)
    }

    /// File extension used for this image in spools and archives.
    pub fn extension(&self) -> &'static str {
        extension_for(&self.media_type)
    }
}

/// Lowercase hex SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

pub fn extension_for(media_type: &str) -> &'static str {
    match media_type {
        "image/png" => "png",
        "image/jpeg" => "jpg",
        "image/x-portable-pixmap" => "ppm",
        _ => "bin",
    }
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// Free-text metadata added after capture. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Why the prototype was made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<String>,
}

impl Annotation {
    pub fn is_empty(&self) -> bool {
        self.title.is_none() && self.description.is_none() && self.intent.is_none()
    }

    /// Fields present in the patch replace the current ones, omitted fields
    /// are kept. An empty string clears the field.
    pub fn apply(&mut self, patch: &AnnotationPatch) {
        fn merge(slot: &mut Option<String>, value: &Option<String>) {
            if let Some(v) = value {
                *slot = if v.is_empty() { None } else { Some(v.clone()) };
            }
        }
        merge(&mut self.title, &patch.title);
        merge(&mut self.description, &patch.description);
        merge(&mut self.intent, &patch.intent);
    }
}

/// Partial annotation update.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationPatch {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub intent: Option<String>,
}

/// The per-angle images of a capture.
///
/// Stored as an entry list rather than a map so that malformed input with a
/// repeated angle survives deserialisation and can be reported by
/// [`validate_capture`]. Serialises as a JSON object keyed by angle name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Views(Vec<(ViewAngle, ImageRef)>);

impl Views {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, angle: ViewAngle, image: ImageRef) {
        self.0.push((angle, image));
        self.0.sort_by_key(|(a, _)| *a);
    }

    pub fn get(&self, angle: ViewAngle) -> Option<&ImageRef> {
        self.0.iter().find(|(a, _)| *a == angle).map(|(_, r)| r)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ViewAngle, &ImageRef)> {
        self.0.iter().map(|(a, r)| (*a, r))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn remove(&mut self, angle: ViewAngle) -> Option<ImageRef> {
        let pos = self.0.iter().position(|(a, _)| *a == angle)?;
        Some(self.0.remove(pos).1)
    }
}

impl FromIterator<(ViewAngle, ImageRef)> for Views {
    fn from_iter<T: IntoIterator<Item = (ViewAngle, ImageRef)>>(iter: T) -> Self {
        let mut entries: Vec<_> = iter.into_iter().collect();
        entries.sort_by_key(|(a, _)| *a);
        Views(entries)
    }
}

impl Serialize for Views {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (angle, image) in &self.0 {
            map.serialize_entry(angle, image)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Views {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ViewsVisitor;

        impl<'de> Visitor<'de> for ViewsVisitor {
            type Value = Views;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from view angle to image reference")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Views, A::Error> {
                let mut entries = Vec::new();
                while let Some((angle, image)) = access.next_entry::<ViewAngle, ImageRef>()? {
                    entries.push((angle, image));
                }
                Ok(entries.into_iter().collect())
            }
        }

        deserializer.deserialize_map(ViewsVisitor)
    }
}

/// One prototype capture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureRecord {
    pub capture_id: CaptureId,
    pub booth_id: BoothId,
    pub card_id: CardId,
    /// UNIX seconds, UTC.
    pub timestamp: i64,
    pub views: Views,
    #[serde(default)]
    pub annotation: Annotation,
}

/// A broken [`CaptureRecord`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ViewsIncomplete(Vec<ViewAngle>),
    DuplicateView(ViewAngle),
    TimestampNonpositive,
    InvalidId { field: &'static str, value: String },
    EmptyImage(ViewAngle),
    MalformedHash(ViewAngle),
    MissingMediaType(ViewAngle),
}

impl Violation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::ViewsIncomplete(_) => "views_incomplete",
            Violation::DuplicateView(_) => "duplicate_view",
            Violation::TimestampNonpositive => "timestamp_nonpositive",
            Violation::InvalidId { .. } => "invalid_id",
            Violation::EmptyImage(_) => "empty_image",
            Violation::MalformedHash(_) => "malformed_hash",
            Violation::MissingMediaType(_) => "missing_media_type",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ViewsIncomplete(missing) => {
                let names: Vec<_> = missing.iter().map(|a| a.as_str()).collect();
                write!(f, "views incomplete: {}", names.join(", "))
            }
            Violation::DuplicateView(a) => write!(f, "duplicate view: {a}"),
            Violation::TimestampNonpositive => f.write_str("timestamp nonpositive"),
            Violation::InvalidId { field, value } => write!(f, "{field} invalid: {value:?}"),
            Violation::EmptyImage(a) => write!(f, "image empty: {a}"),
            Violation::MalformedHash(a) => write!(f, "content hash malformed: {a}"),
            Violation::MissingMediaType(a) => write!(f, "media type missing: {a}"),
        }
    }
}

impl Serialize for Violation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("code", self.code())?;
        map.serialize_entry("message", &self.to_string())?;
        map.end()
    }
}

/// Check every [`CaptureRecord`] invariant, returning all violations found.
pub fn validate_capture(record: &CaptureRecord) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    let ids = [
        ("capture_id", record.capture_id.as_str()),
        ("booth_id", record.booth_id.as_str()),
        ("card_id", record.card_id.as_str()),
    ];
    for (field, value) in ids {
        if !crate::ids::is_path_safe(value) {
            violations.push(Violation::InvalidId {
                field,
                value: value.to_owned(),
            });
        }
    }

    if record.timestamp <= 0 {
        violations.push(Violation::TimestampNonpositive);
    }

    let missing: Vec<_> = ViewAngle::ALL
        .into_iter()
        .filter(|a| record.views.get(*a).is_none())
        .collect();
    if !missing.is_empty() {
        violations.push(Violation::ViewsIncomplete(missing));
    }

    let mut seen = Vec::new();
    for (angle, image) in record.views.iter() {
        if seen.contains(&angle) {
            if !violations.contains(&Violation::DuplicateView(angle)) {
                violations.push(Violation::DuplicateView(angle));
            }
            continue;
        }
        seen.push(angle);
        if image.byte_length == 0 {
            violations.push(Violation::EmptyImage(angle));
        }
        if !is_sha256_hex(&image.content_hash) {
            violations.push(Violation::MalformedHash(angle));
        }
        if image.media_type.is_empty() {
            violations.push(Violation::MissingMediaType(angle));
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Result of handing a capture to the backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReceipt {
    pub capture_id: CaptureId,
    /// `false` when the capture id was already stored.
    pub created: bool,
    pub stored_views: usize,
}
