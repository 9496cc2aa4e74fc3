use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use protobooth_analytics::{render, synthesize_case_fixture, Figure, Format};
use protobooth_backend::{
    compute_figure, load_case_fixture, ApiClient, Archive, FigureKind, FigureRequest,
    ImportReport, Repository,
};
use protobooth_core::ProjectId;
use serde::Serialize;

use crate::output::{print, CliError, Report, ReportFormat};

/// Where repository commands read and write.
pub enum Source {
    Local(PathBuf),
    Remote(ApiClient),
}

impl Source {
    pub fn pick(server: Option<String>, data_dir: PathBuf) -> Self {
        match server {
            Some(url) => Source::Remote(ApiClient::new(url)),
            None => Source::Local(data_dir),
        }
    }

    fn open(dir: &Path) -> Result<Repository, CliError> {
        if !dir.is_dir() {
            return Err(CliError::new(
                "not_found",
                format!("no repository at {}", dir.display()),
            ));
        }
        Ok(Repository::open_dir(dir)?)
    }
}

#[derive(Serialize)]
struct FixtureReport {
    project_id: ProjectId,
    captures: usize,
    seconds: f64,
}

impl Report for FixtureReport {
    fn text(&self) -> String {
        format!(
            "project {} loaded with {} captures in {:.2} s",
            self.project_id, self.captures, self.seconds
        )
    }
}

pub fn fixture(data_dir: &Path, seed: u64, format: ReportFormat) -> Result<(), CliError> {
    let t = Instant::now();
    let repo = Repository::open_dir(data_dir)?;
    let fixture = synthesize_case_fixture(seed);
    let project_id = load_case_fixture(&repo, &fixture)?;
    let captures = repo.snapshot().project_captures(&project_id).len();
    print(
        format,
        &FixtureReport {
            project_id,
            captures,
            seconds: t.elapsed().as_secs_f64(),
        },
    );
    Ok(())
}

/// Rows, points or sessions in a figure.
fn item_count(fig: &Figure) -> usize {
    match fig {
        Figure::Weekday(p) | Figure::Timeline(p) => p.len(),
        Figure::Cumulative(s) => s.points.len(),
        Figure::Matrix(m) => m.rows.len(),
        Figure::Graph(g) => g.nodes.len(),
        Figure::Bulk(b) => b.len(),
    }
}

fn query_params(req: &FigureRequest, format: Format) -> Vec<(&'static str, String)> {
    let mut q = vec![
        ("seed", req.seed.to_string()),
        ("tz", req.tz.clone()),
        ("window", req.window.to_string()),
        ("threshold", req.threshold.to_string()),
        (
            "mode",
            match req.mode {
                protobooth_analytics::CumulativeMode::Distinct => "distinct".into(),
                protobooth_analytics::CumulativeMode::Summed => "summed".into(),
            },
        ),
        ("format", format.extension().into()),
    ];
    if let Some(p) = &req.project {
        q.push(("project", p.to_string()));
    }
    if let Some(s) = &req.scheme {
        q.push(("scheme", s.to_string()));
    }
    q
}

pub fn analyze(
    source: &Source,
    kind: FigureKind,
    req: &FigureRequest,
    format: Format,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (bytes, items) = match source {
        Source::Local(dir) => {
            let repo = Source::open(dir)?;
            let fig = compute_figure(&repo.snapshot(), kind, req)?;
            (render(&fig, format)?, Some(item_count(&fig)))
        }
        Source::Remote(api) => (api.figure(kind.as_str(), &query_params(req, format))?, None),
    };
    match out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
            let items = items.map(|n| format!(", {n} items")).unwrap_or_default();
            eprintln!("{kind}: wrote {} ({} bytes{items})", path.display(), bytes.len());
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::io("writing stdout", e))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ExportReport {
    path: PathBuf,
    captures: usize,
    files: usize,
}

impl Report for ExportReport {
    fn text(&self) -> String {
        format!(
            "exported {} captures ({} files) to {}",
            self.captures,
            self.files,
            self.path.display()
        )
    }
}

pub fn export(
    source: &Source,
    project: Option<ProjectId>,
    out: &Path,
    as_dir: bool,
    format: ReportFormat,
) -> Result<(), CliError> {
    let archive = match source {
        Source::Local(dir) => Source::open(dir)?.export_raw(project.as_ref())?,
        Source::Remote(api) => api.export(project.as_ref())?,
    };
    let manifest = archive.manifest()?;
    if as_dir {
        archive.write_dir(out)?;
    } else {
        let file = std::fs::File::create(out).map_err(|e| CliError::io(&format!("creating {}", out.display()), e))?;
        archive
            .write_tar(std::io::BufWriter::new(file))
            .map_err(|e| CliError::io(&format!("writing {}", out.display()), e))?;
    }
    print(
        format,
        &ExportReport {
            path: out.to_owned(),
            captures: manifest.entries.len(),
            files: manifest.files.len(),
        },
    );
    Ok(())
}

impl Report for ImportReport {
    fn text(&self) -> String {
        format!(
            "{} captures created, {} already present, {} documents written",
            self.captures_created, self.captures_existing, self.documents_written
        )
    }
}

pub fn import(source: &Source, path: &Path, format: ReportFormat) -> Result<(), CliError> {
    let archive = if path.is_dir() {
        Archive::read_dir(path)?
    } else {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(&format!("opening {}", path.display()), e))?;
        Archive::from_tar(std::io::BufReader::new(file))?
    };
    let report = match source {
        Source::Local(dir) => Repository::open_dir(dir)?.import_archive(&archive)?,
        Source::Remote(api) => api.import(&archive)?,
    };
    print(format, &report);
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    clean: bool,
    captures: usize,
    blobs: usize,
    violations: Vec<serde_json::Value>,
    #[serde(skip)]
    lines: Vec<String>,
}

impl Report for VerifyReport {
    fn text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str(&format!(
            "{} captures, {} blobs, {} violations",
            self.captures,
            self.blobs,
            self.violations.len()
        ));
        out
    }
}

/// Returns whether the repository is clean.
pub fn verify(source: &Source, format: ReportFormat) -> Result<bool, CliError> {
    let report = match source {
        Source::Local(dir) => {
            let r = Source::open(dir)?.verify()?;
            VerifyReport {
                clean: r.is_clean(),
                captures: r.captures,
                blobs: r.blobs,
                lines: r.violations.iter().map(|v| format!("{}: {v}", v.kind())).collect(),
                violations: r
                    .violations
                    .iter()
                    .map(|v| serde_json::to_value(v).expect("violations serialise"))
                    .collect(),
            }
        }
        Source::Remote(api) => {
            let r = api.verify()?;
            VerifyReport {
                clean: r.is_clean(),
                captures: r.captures,
                blobs: r.blobs,
                lines: r.violations.iter().map(|v| v.to_string()).collect(),
                violations: r.violations,
            }
        }
    };
    print(format, &report);
    Ok(report.clean)
}
