use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use protobooth_backend::Repository;
use serde::Serialize;

use crate::output::{print, CliError, Report, ReportFormat};

#[derive(Serialize)]
struct Listening {
    listening: String,
    data_dir: PathBuf,
    captures: usize,
    orphans_removed: usize,
}

impl Report for Listening {
    fn text(&self) -> String {
        format!(
            "listening on http://{} ({} captures in {}, {} orphan blobs removed)",
            self.listening,
            self.captures,
            self.data_dir.display(),
            self.orphans_removed
        )
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}

pub fn serve(data_dir: PathBuf, bind: SocketAddr, format: ReportFormat) -> Result<(), CliError> {
    let repo = Repository::open_dir(&data_dir)?;
    // Blobs left behind by an ingest that died between blob and metadata.
    let orphans_removed = repo.collect_garbage()?;
    let repo = Arc::new(repo);

    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("starting runtime", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| CliError::io(&format!("binding {bind}"), e))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::io("reading bound address", e))?;
        print(
            format,
            &Listening {
                listening: addr.to_string(),
                data_dir: data_dir.clone(),
                captures: repo.capture_count(),
                orphans_removed,
            },
        );
        protobooth_backend::serve(repo, listener, shutdown_signal())
            .await
            .map_err(|e| CliError::io("serving", e))
    })
}
