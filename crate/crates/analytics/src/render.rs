//! SVG, CSV and JSON output for every figure.
//!
//! CSV columns:
//!
//! | figure     | header                                              |
//! |------------|-----------------------------------------------------|
//! | weekday    | `capture_id,x,lane,jitter,color_key`                |
//! | timeline   | `capture_id,x,lane,jitter,color_key`                |
//! | cumulative | `k,distinct_count` (or `k,summed_count`)            |
//! | matrix     | `capture_id,<category>...,total`                    |
//! | graph      | `capture_id,x,y,class,targets` (targets `;`-joined) |
//! | bulk       | `card_id,window_start,window_end,count,capture_ids` |
//!
//! SVG canvases are 1000×400, except the link graph at 1200×600. Output
//! depends only on the figure data, so it can be compared byte for byte.

use std::collections::BTreeMap;
use std::fmt::{self, Write};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate};
use protobooth_core::{CaptureId, NodeClass, ProjectId};
use serde::Serialize;

use crate::bulk::BulkSession;
use crate::coding::{CategoryMatrix, CumulativeMode, CumulativeSeries};
use crate::error::AnalyticsError;
use crate::layout::GraphLayout;
use crate::scatter::ScatterPoint;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "figure", content = "data", rename_all = "snake_case")]
pub enum Figure {
    Weekday(Vec<ScatterPoint>),
    Timeline(Vec<ScatterPoint>),
    Cumulative(CumulativeSeries),
    Matrix(CategoryMatrix),
    Graph(GraphLayout),
    Bulk(Vec<BulkSession>),
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Weekday(_) => "weekday",
            Figure::Timeline(_) => "timeline",
            Figure::Cumulative(_) => "cumulative",
            Figure::Matrix(_) => "matrix",
            Figure::Graph(_) => "graph",
            Figure::Bulk(_) => "bulk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Svg,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Svg => "svg",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svg" => Ok(Format::Svg),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(AnalyticsError::UnsupportedFormat {
                figure: "any",
                format: other.to_owned(),
            }),
        }
    }
}

pub fn render(figure: &Figure, format: Format) -> Result<Vec<u8>, AnalyticsError> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(figure).expect("figure data serialises");
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => Ok(csv_bytes(figure)),
        Format::Svg => match figure {
            Figure::Weekday(p) => Ok(weekday_svg(p)),
            Figure::Timeline(p) => Ok(timeline_svg(p)),
            Figure::Cumulative(s) => Ok(cumulative_svg(s)),
            Figure::Matrix(m) => Ok(matrix_svg(m)),
            Figure::Graph(g) => Ok(graph_svg(g)),
            Figure::Bulk(_) => Err(AnalyticsError::UnsupportedFormat {
                figure: figure.name(),
                format: "svg".into(),
            }),
        },
    }
}

// ------------------------------------------------------------------- CSV

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn csv_bytes(figure: &Figure) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut row = |fields: Vec<String>| w.write_record(&fields).expect("csv to memory");
    match figure {
        Figure::Weekday(points) | Figure::Timeline(points) => {
            row(["capture_id", "x", "lane", "jitter", "color_key"].map(String::from).to_vec());
            for p in points {
                row(vec![
                    p.capture_id.to_string(),
                    num(p.x),
                    p.lane.to_string(),
                    num(p.jitter),
                    p.color_key.as_ref().map(|k| k.to_string()).unwrap_or_default(),
                ]);
            }
        }
        Figure::Cumulative(s) => {
            let col = match s.mode {
                CumulativeMode::Distinct => "distinct_count",
                CumulativeMode::Summed => "summed_count",
            };
            row(vec!["k".into(), col.into()]);
            for (k, v) in &s.points {
                row(vec![k.to_string(), v.to_string()]);
            }
        }
        Figure::Matrix(m) => {
            let mut header = vec!["capture_id".to_owned()];
            header.extend(m.columns.iter().cloned());
            header.push("total".into());
            row(header);
            for ((id, cells), total) in m.rows.iter().zip(&m.cells).zip(m.row_sums()) {
                let mut r = vec![id.to_string()];
                r.extend(cells.iter().map(|c| c.to_string()));
                r.push(total.to_string());
                row(r);
            }
        }
        Figure::Graph(g) => {
            let mut targets: BTreeMap<&CaptureId, Vec<&str>> = BTreeMap::new();
            for e in &g.edges {
                targets.entry(&e.from).or_default().push(e.to.as_str());
            }
            row(["capture_id", "x", "y", "class", "targets"].map(String::from).to_vec());
            for n in &g.nodes {
                row(vec![
                    n.capture_id.to_string(),
                    n.x.to_string(),
                    num(n.y),
                    n.class.to_string(),
                    targets.get(&n.capture_id).map(|t| t.join(";")).unwrap_or_default(),
                ]);
            }
        }
        Figure::Bulk(sessions) => {
            row(["card_id", "window_start", "window_end", "count", "capture_ids"].map(String::from).to_vec());
            for s in sessions {
                row(vec![
                    s.card_id.to_string(),
                    s.window_start.to_string(),
                    s.window_end.to_string(),
                    s.count.to_string(),
                    s.capture_ids.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(";"),
                ]);
            }
        }
    }
    w.into_inner().expect("csv to memory")
}

// ------------------------------------------------------------------- SVG

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
const NO_PROJECT: &str = "#b0b0b0";
const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

struct Plot {
    w: f64,
    h: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Plot {
    const STANDARD: Plot = Plot { w: 1000.0, h: 400.0, left: 60.0, right: 20.0, top: 20.0, bottom: 40.0 };
    const GRAPH: Plot = Plot { w: 1200.0, h: 600.0, left: 40.0, right: 40.0, top: 40.0, bottom: 40.0 };

    fn inner_w(&self) -> f64 {
        self.w - self.left - self.right
    }

    fn inner_h(&self) -> f64 {
        self.h - self.top - self.bottom
    }
}

struct Svg {
    out: String,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn f(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

impl Svg {
    fn new(p: &Plot) -> Self {
        let mut out = String::new();
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = p.w,
            h = p.h
        )
        .unwrap();
        writeln!(out, r#"<rect width="{}" height="{}" fill="white"/>"#, p.w, p.h).unwrap();
        Self { out }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(
            self.out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}"/>"#,
            f(x1), f(y1), f(x2), f(y2)
        )
        .unwrap();
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            f(x), f(y), escape(s)
        )
        .unwrap();
    }

    fn dot(&mut self, x: f64, y: f64, r: f64, fill: &str, title: &str) {
        writeln!(
            self.out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{fill}" fill-opacity="0.7"><title>{}</title></circle>"#,
            f(x), f(y), f(r), escape(title)
        )
        .unwrap();
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(
            self.out,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            f(x), f(y), f(w), f(h)
        )
        .unwrap();
    }

    fn axes(&mut self, p: &Plot) {
        let (x0, y0) = (p.left, p.h - p.bottom);
        self.line(x0, p.top, x0, y0, "#333");
        self.line(x0, y0, p.w - p.right, y0, "#333");
    }

    fn finish(mut self) -> Vec<u8> {
        self.out.push_str("</svg>\n");
        self.out.into_bytes()
    }
}

fn project_colors(points: &[ScatterPoint]) -> BTreeMap<&ProjectId, &'static str> {
    let mut keys: Vec<&ProjectId> = points.iter().filter_map(|p| p.color_key.as_ref()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .enumerate()
        .map(|(i, k)| (k, PALETTE[i % PALETTE.len()]))
        .collect()
}

fn weekday_svg(points: &[ScatterPoint]) -> Vec<u8> {
    let p = Plot::STANDARD;
    let mut s = Svg::new(&p);
    s.axes(&p);
    let band = p.inner_h() / 7.0;
    for (i, day) in WEEKDAYS.iter().enumerate() {
        let y = p.top + (i as f64 + 0.5) * band;
        s.text(p.left - 8.0, y + 4.0, "end", day);
    }
    for hour in (0..=24).step_by(3) {
        let x = p.left + f64::from(hour) / 24.0 * p.inner_w();
        s.line(x, p.h - p.bottom, x, p.h - p.bottom + 4.0, "#333");
        s.text(x, p.h - p.bottom + 16.0, "middle", &format!("{hour:02}:00"));
    }
    let colors = project_colors(points);
    for pt in points {
        let x = p.left + pt.x / 24.0 * p.inner_w();
        let y = p.top + (f64::from(pt.lane) + 0.5 + pt.jitter) * band;
        let fill = pt.color_key.as_ref().map_or(NO_PROJECT, |k| colors[k]);
        s.dot(x, y, 3.0, fill, pt.capture_id.as_str());
    }
    s.finish()
}

fn month_starts(min: i64, max: i64) -> Vec<(i64, String)> {
    let Some(first) = DateTime::from_timestamp(min, 0) else {
        return Vec::new();
    };
    let mut d = NaiveDate::from_ymd_opt(first.year(), first.month(), 1).expect("valid month start");
    let mut out = Vec::new();
    loop {
        let ts = d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
        if ts > max {
            break;
        }
        if ts >= min {
            out.push((ts, format!("{}-{:02}", d.year(), d.month())));
        }
        d = d.checked_add_months(chrono::Months::new(1)).expect("month in range");
    }
    out
}

fn timeline_svg(points: &[ScatterPoint]) -> Vec<u8> {
    let p = Plot::STANDARD;
    let mut s = Svg::new(&p);
    s.axes(&p);
    let min = points.iter().map(|pt| pt.x).fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|pt| pt.x).fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    let xpos = |x: f64| {
        if max > min {
            p.left + (x - min) / span * p.inner_w()
        } else {
            p.left + p.inner_w() / 2.0
        }
    };
    if !points.is_empty() {
        for (ts, label) in month_starts(min as i64, max as i64) {
            let x = xpos(ts as f64);
            s.line(x, p.h - p.bottom, x, p.h - p.bottom + 4.0, "#333");
            s.text(x, p.h - p.bottom + 16.0, "middle", &label);
        }
    }
    let mid = p.top + p.inner_h() / 2.0;
    for pt in points {
        s.dot(xpos(pt.x), mid + pt.jitter * p.inner_h(), 3.5, PALETTE[0], pt.capture_id.as_str());
    }
    s.finish()
}

fn cumulative_svg(series: &CumulativeSeries) -> Vec<u8> {
    let p = Plot::STANDARD;
    let mut s = Svg::new(&p);
    s.axes(&p);
    let n = series.points.len().max(1) as f64;
    let top = series.final_value().max(1) as f64;
    let xpos = |k: usize| p.left + (k as f64 - 0.5) / n * p.inner_w();
    let ypos = |v: usize| p.h - p.bottom - v as f64 / top * p.inner_h();
    for v in 0..=series.final_value().max(1) {
        let y = ypos(v);
        s.line(p.left - 4.0, y, p.left, y, "#333");
        s.text(p.left - 8.0, y + 4.0, "end", &v.to_string());
    }
    s.text(p.left + p.inner_w() / 2.0, p.h - 8.0, "middle", &format!("prototype ({})", series.scheme_id));
    let mut d = String::new();
    let mut prev = 0;
    for &(k, v) in &series.points {
        let (x0, x1) = (xpos(k) - 0.5 * p.inner_w() / n, xpos(k) + 0.5 * p.inner_w() / n);
        if d.is_empty() {
            write!(d, "M{} {}", f(x0), f(ypos(prev))).unwrap();
        }
        write!(d, " L{} {} L{} {}", f(x0), f(ypos(v)), f(x1), f(ypos(v))).unwrap();
        prev = v;
    }
    if !d.is_empty() {
        writeln!(s.out, r#"<path d="{d}" fill="none" stroke="{}" stroke-width="2"/>"#, PALETTE[0]).unwrap();
    }
    s.finish()
}

fn matrix_svg(m: &CategoryMatrix) -> Vec<u8> {
    let p = Plot::STANDARD;
    let mut s = Svg::new(&p);
    s.axes(&p);
    let n = m.rows.len().max(1) as f64;
    let tallest = m.row_sums().into_iter().max().unwrap_or(0).max(1) as f64;
    let bar_w = p.inner_w() / n;
    let unit = p.inner_h() / tallest;
    for (i, cells) in m.cells.iter().enumerate() {
        let x = p.left + i as f64 * bar_w;
        let mut y = p.h - p.bottom;
        for (j, &c) in cells.iter().enumerate() {
            if c == 1 {
                y -= unit;
                s.rect(x + 0.1 * bar_w, y, 0.8 * bar_w, unit, PALETTE[j % PALETTE.len()]);
            }
        }
        if m.rows.len() <= 100 && (i + 1) % 5 == 0 {
            s.text(x + bar_w / 2.0, p.h - p.bottom + 14.0, "middle", &(i + 1).to_string());
        }
    }
    for (j, c) in m.columns.iter().enumerate() {
        let y = p.top + 12.0 * j as f64;
        s.rect(p.w - p.right - 130.0, y, 8.0, 8.0, PALETTE[j % PALETTE.len()]);
        s.text(p.w - p.right - 118.0, y + 8.0, "start", c);
    }
    s.finish()
}

fn class_color(class: NodeClass) -> &'static str {
    match class {
        NodeClass::Internal => "#9e9e9e",
        NodeClass::ExternalTest => "#1f77b4",
        NodeClass::FinalConcept => "#2ca02c",
    }
}

fn graph_svg(g: &GraphLayout) -> Vec<u8> {
    let p = Plot::GRAPH;
    let mut s = Svg::new(&p);
    let n = g.nodes.len();
    let mid = p.top + p.inner_h() / 2.0;
    let pos: BTreeMap<&CaptureId, (f64, f64)> = g
        .nodes
        .iter()
        .map(|node| {
            let x = if n > 1 {
                p.left + (node.x - 1) as f64 / (n - 1) as f64 * p.inner_w()
            } else {
                p.left + p.inner_w() / 2.0
            };
            (&node.capture_id, (x, mid + node.y * p.inner_h()))
        })
        .collect();
    for e in &g.edges {
        let ((x1, y1), (x2, y2)) = (pos[&e.from], pos[&e.to]);
        let cx = (x1 + x2) / 2.0;
        let cy = (y1 + y2) / 2.0 - (x2 - x1) * 0.15;
        writeln!(
            s.out,
            r##"<path d="M{} {} Q{} {} {} {}" fill="none" stroke="#555" stroke-opacity="0.6"/>"##,
            f(x1), f(y1), f(cx), f(cy), f(x2), f(y2)
        )
        .unwrap();
    }
    for node in &g.nodes {
        let (x, y) = pos[&node.capture_id];
        s.dot(x, y, 6.0, class_color(node.class), node.capture_id.as_str());
        s.text(x, y - 9.0, "middle", &node.x.to_string());
    }
    s.finish()
}
