//! Figures over coding assignments: cumulative category usage and the
//! per-prototype category matrix.

use std::collections::BTreeMap;

use protobooth_core::{canonical_order, CaptureId, CaptureRecord, CodeAssignment, CodingScheme, SchemeId};
use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;

/// What the cumulative plot counts at prototype `k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CumulativeMode {
    /// Distinct categories used by prototypes `1..=k`.
    #[default]
    Distinct,
    /// Sum of per-prototype category counts over `1..=k`.
    Summed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativeSeries {
    pub scheme_id: SchemeId,
    pub mode: CumulativeMode,
    /// `(k, value)` for k = 1..=N.
    pub points: Vec<(usize, usize)>,
}

impl CumulativeSeries {
    pub fn final_value(&self) -> usize {
        self.points.last().map_or(0, |p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMatrix {
    pub scheme_id: SchemeId,
    pub rows: Vec<CaptureId>,
    pub columns: Vec<String>,
    /// `cells[row][column]` is 1 when the category was assigned.
    pub cells: Vec<Vec<u8>>,
}

impl CategoryMatrix {
    /// Categories per prototype: the bar heights.
    pub fn row_sums(&self) -> Vec<usize> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|&c| usize::from(c)).sum())
            .collect()
    }

    /// Prototypes per category.
    pub fn column_sums(&self) -> Vec<usize> {
        (0..self.columns.len())
            .map(|j| self.cells.iter().map(|r| usize::from(r[j])).sum())
            .collect()
    }
}

/// Assignment per capture for `scheme`, rejecting ones from another scheme.
fn index<'a>(
    assignments: impl IntoIterator<Item = &'a CodeAssignment>,
    scheme: &CodingScheme,
) -> Result<BTreeMap<&'a CaptureId, &'a CodeAssignment>, AnalyticsError> {
    let mut out = BTreeMap::new();
    for a in assignments {
        if a.scheme_id != scheme.scheme_id {
            return Err(AnalyticsError::WrongScheme {
                expected: scheme.scheme_id.clone(),
                found: a.scheme_id.clone(),
            });
        }
        if let Some(c) = a.categories.iter().find(|c| scheme.index_of(c).is_none()) {
            return Err(AnalyticsError::UnknownCategory {
                scheme: scheme.scheme_id.clone(),
                category: c.clone(),
            });
        }
        out.insert(&a.capture_id, a);
    }
    Ok(out)
}

/// Rows in canonical order, whatever order `captures` arrive in.
pub fn category_matrix<'a>(
    captures: &[CaptureRecord],
    assignments: impl IntoIterator<Item = &'a CodeAssignment>,
    scheme: &CodingScheme,
) -> Result<CategoryMatrix, AnalyticsError> {
    let by_capture = index(assignments, scheme)?;
    let captures = canonical_order(captures);
    let cells = captures
        .iter()
        .map(|c| {
            let mut row = vec![0u8; scheme.categories.len()];
            if let Some(a) = by_capture.get(&c.capture_id) {
                for cat in &a.categories {
                    row[scheme.index_of(cat).expect("checked above")] = 1;
                }
            }
            row
        })
        .collect();
    Ok(CategoryMatrix {
        scheme_id: scheme.scheme_id.clone(),
        rows: captures.iter().map(|c| c.capture_id.clone()).collect(),
        columns: scheme.categories.clone(),
        cells,
    })
}

pub fn cumulative_usage<'a>(
    captures: &[CaptureRecord],
    assignments: impl IntoIterator<Item = &'a CodeAssignment>,
    scheme: &CodingScheme,
    mode: CumulativeMode,
) -> Result<CumulativeSeries, AnalyticsError> {
    let m = category_matrix(captures, assignments, scheme)?;
    let mut seen = vec![false; m.columns.len()];
    let mut total = 0;
    let points = m
        .cells
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let value = match mode {
                CumulativeMode::Distinct => {
                    for (s, &c) in seen.iter_mut().zip(row) {
                        *s |= c == 1;
                    }
                    seen.iter().filter(|s| **s).count()
                }
                CumulativeMode::Summed => {
                    total += row.iter().map(|&c| usize::from(c)).sum::<usize>();
                    total
                }
            };
            (i + 1, value)
        })
        .collect();
    Ok(CumulativeSeries {
        scheme_id: scheme.scheme_id.clone(),
        mode,
        points,
    })
}
