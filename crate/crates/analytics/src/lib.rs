//! Figures over capture metadata: usage scatter, project timeline,
//! cumulative coding usage, category matrices, link-graph layout and bulk
//! capture detection, with SVG/CSV/JSON rendering.
//!
//! Everything here is a pure function of its inputs and a seed.

pub mod bulk;
pub mod coding;
pub mod error;
pub mod fixture;
pub mod jitter;
pub mod layout;
pub mod render;
pub mod scatter;

#[cfg(test)]
mod testutil;

pub use bulk::{detect_bulk, BulkSession, DEFAULT_THRESHOLD, DEFAULT_WINDOW_SECONDS};
pub use coding::{category_matrix, cumulative_usage, CategoryMatrix, CumulativeMode, CumulativeSeries};
pub use error::AnalyticsError;
pub use fixture::{prototype_id, synthesize_case_fixture, CaseFixture};
pub use jitter::{jitter, JITTER_BOUND};
pub use layout::{layout_graph, GraphLayout, PositionedNode};
pub use render::{render, Figure, Format};
pub use scatter::{project_timeline, weekday_scatter, ScatterPoint};
pub use chrono_tz::Tz;
