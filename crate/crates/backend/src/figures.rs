//! Figure requests against a repository snapshot, shared by the HTTP API
//! and the command line.

use std::fmt;
use std::str::FromStr;

use protobooth_analytics::{
    category_matrix, cumulative_usage, detect_bulk, layout_graph, project_timeline,
    weekday_scatter, AnalyticsError, CumulativeMode, Figure, Tz, DEFAULT_THRESHOLD,
    DEFAULT_WINDOW_SECONDS,
};
use protobooth_core::{CaptureRecord, ProjectId, SchemeId};
use serde::{Deserialize, Serialize};

use crate::repo::RepoSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    /// Captures by time of day and weekday.
    Fig3,
    /// Project timeline.
    Fig4,
    /// Cumulative category usage.
    Fig5,
    Matrix,
    Graph,
    Bulk,
}

impl FigureKind {
    pub const ALL: [FigureKind; 6] = [
        FigureKind::Fig3,
        FigureKind::Fig4,
        FigureKind::Fig5,
        FigureKind::Matrix,
        FigureKind::Graph,
        FigureKind::Bulk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::Fig3 => "fig3",
            FigureKind::Fig4 => "fig4",
            FigureKind::Fig5 => "fig5",
            FigureKind::Matrix => "matrix",
            FigureKind::Graph => "graph",
            FigureKind::Bulk => "bulk",
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureKind {
    type Err = FigureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| FigureError::UnknownFigure(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FigureRequest {
    pub project: Option<ProjectId>,
    pub scheme: Option<SchemeId>,
    pub seed: u64,
    /// IANA zone name for the weekday plot.
    pub tz: String,
    pub mode: CumulativeMode,
    pub window: i64,
    pub threshold: usize,
}

impl Default for FigureRequest {
    fn default() -> Self {
        Self {
            project: None,
            scheme: None,
            seed: 0,
            tz: "UTC".into(),
            mode: CumulativeMode::Distinct,
            window: DEFAULT_WINDOW_SECONDS,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FigureError {
    #[error("unknown figure {0:?}")]
    UnknownFigure(String),
    #[error("unknown project {0}")]
    UnknownProject(ProjectId),
    #[error("unknown scheme {0}")]
    UnknownScheme(SchemeId),
    #[error("unknown time zone {0:?}")]
    UnknownTimeZone(String),
    #[error("figure {0} needs a project")]
    ProjectRequired(FigureKind),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

impl FigureError {
    pub fn code(&self) -> &'static str {
        match self {
            FigureError::UnknownFigure(_) => "unknown_figure",
            FigureError::UnknownProject(_) => "not_found",
            FigureError::UnknownScheme(_) => "unknown_scheme",
            FigureError::UnknownTimeZone(_) => "unknown_time_zone",
            FigureError::ProjectRequired(_) => "project_required",
            FigureError::Analytics(_) => "analytics",
        }
    }
}

fn scope(snap: &RepoSnapshot, project: Option<&ProjectId>) -> Result<Vec<CaptureRecord>, FigureError> {
    match project {
        Some(p) if !snap.projects.contains_key(p) => Err(FigureError::UnknownProject(p.clone())),
        Some(p) => Ok(snap.project_captures(p)),
        None => Ok(snap.query(&Default::default())),
    }
}

pub fn compute_figure(
    snap: &RepoSnapshot,
    kind: FigureKind,
    req: &FigureRequest,
) -> Result<Figure, FigureError> {
    let captures = scope(snap, req.project.as_ref())?;
    let scheme = || {
        let id = req.scheme.clone().unwrap_or_else(|| SchemeId::new("materials"));
        snap.schemes
            .get(&id)
            .cloned()
            .ok_or(FigureError::UnknownScheme(id))
    };
    Ok(match kind {
        FigureKind::Fig3 => {
            let tz: Tz = req
                .tz
                .parse()
                .map_err(|_| FigureError::UnknownTimeZone(req.tz.clone()))?;
            let projects: Vec<_> = snap.projects.values().cloned().collect();
            Figure::Weekday(weekday_scatter(&captures, &projects, req.seed, tz))
        }
        FigureKind::Fig4 => Figure::Timeline(project_timeline(&captures, req.seed)),
        FigureKind::Fig5 => {
            let s = scheme()?;
            let a = snap.assignments_for(&s.scheme_id);
            Figure::Cumulative(cumulative_usage(&captures, &a, &s, req.mode)?)
        }
        FigureKind::Matrix => {
            let s = scheme()?;
            let a = snap.assignments_for(&s.scheme_id);
            Figure::Matrix(category_matrix(&captures, &a, &s)?)
        }
        FigureKind::Graph => {
            let p = req
                .project
                .as_ref()
                .ok_or(FigureError::ProjectRequired(kind))?;
            let graph = snap
                .graphs
                .get(p)
                .cloned()
                .unwrap_or_else(|| protobooth_core::LinkGraph::new(p.clone()));
            Figure::Graph(layout_graph(&graph, &captures, req.seed)?)
        }
        FigureKind::Bulk => Figure::Bulk(detect_bulk(&captures, req.window, req.threshold)?),
    })
}
