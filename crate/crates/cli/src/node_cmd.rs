use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use protobooth_backend::{ApiClient, HttpUplink};
use protobooth_core::{BoothId, CardId, IngestReceipt};
use protobooth_node::script::{parse_script, run_script, ScriptedSwipe};
use protobooth_node::{
    daemon::run_daemon, CaptureNode, Clock, DeliveryReport, MockRig, NodeConfig, SimClock, Spool,
    SystemClock,
};
use serde::Serialize;

use crate::config::FileConfig;
use crate::output::{print, CliError, Report, ReportFormat};
use crate::BoothArgs;

/// Booth settings after merging the booth file, flags and the main
/// settings file.
#[derive(Debug, Clone)]
pub struct Booth {
    pub booth_id: BoothId,
    pub server: String,
    pub spool_dir: PathBuf,
    pub frame_latency: Duration,
    pub notify_interval: Duration,
}

pub fn resolve(args: &BoothArgs, file: &FileConfig) -> Result<Booth, CliError> {
    let base = match &args.booth_config {
        Some(p) => Some(NodeConfig::load(p).map_err(|e| CliError::config(e.to_string()))?),
        None => None,
    };
    let booth_id = args
        .booth_id
        .clone()
        .map(BoothId::new)
        .or_else(|| base.as_ref().map(|b| b.booth_id.clone()))
        .ok_or_else(|| CliError::config("no booth id: pass --booth-id or --booth-config"))?;
    if !booth_id.is_path_safe() {
        return Err(CliError::config(format!("booth id {booth_id:?} is not a valid identifier")));
    }
    let server = file
        .server(args.server.clone())
        .or_else(|| base.as_ref().map(|b| b.server.clone()))
        .ok_or_else(|| CliError::config("no server: pass --server or --booth-config"))?;
    let spool_dir = args
        .spool_dir
        .clone()
        .or_else(|| base.as_ref().map(|b| b.spool_dir.clone()))
        .unwrap_or_else(|| PathBuf::from(format!("spool-{booth_id}")));
    let frame_latency = args
        .frame_latency_ms
        .map(Duration::from_millis)
        .or_else(|| base.as_ref().map(NodeConfig::frame_latency))
        .unwrap_or(protobooth_node::rig::DEFAULT_FRAME_LATENCY);
    let notify_interval = base
        .as_ref()
        .map(NodeConfig::notify_interval)
        .unwrap_or(protobooth_node::node::DEFAULT_NOTIFY_INTERVAL);
    Ok(Booth {
        booth_id,
        server,
        spool_dir,
        frame_latency,
        notify_interval,
    })
}

fn open_node(booth: &Booth, clock: Arc<dyn Clock>) -> Result<CaptureNode, CliError> {
    let spool = Spool::open(&booth.spool_dir)?;
    let rig = MockRig::new(clock.clone()).with_frame_latency(booth.frame_latency);
    Ok(CaptureNode::new(booth.booth_id.clone(), Box::new(rig), spool, clock)?
        .with_notify_interval(booth.notify_interval))
}

fn uplink(booth: &Booth) -> HttpUplink {
    HttpUplink::new(ApiClient::new(booth.server.clone()))
}

#[derive(Debug, Default, Serialize)]
pub struct NodeReport {
    pub booth_id: String,
    pub captured: usize,
    pub ignored: usize,
    pub faults: usize,
    pub delivered: usize,
    /// Still spooled, to be retried by a later run.
    pub deferred: usize,
    pub receipts: Vec<IngestReceipt>,
    pub failures: Vec<String>,
}

impl NodeReport {
    fn absorb(&mut self, d: DeliveryReport) {
        self.delivered += d.delivered;
        self.receipts.extend(d.receipts);
        self.failures
            .extend(d.failures.into_iter().map(|(id, e)| format!("{id}: {e}")));
    }
}

impl Report for NodeReport {
    fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.receipts {
            out.push_str(&format!(
                "{} created={} views={}\n",
                r.capture_id, r.created, r.stored_views
            ));
        }
        out.push_str(&format!(
            "booth {}: {} captured, {} ignored, {} faults, {} delivered, {} deferred",
            self.booth_id, self.captured, self.ignored, self.faults, self.delivered, self.deferred
        ));
        out
    }
}

fn replay(booth: &Booth, swipes: &[ScriptedSwipe], start: Option<i64>) -> Result<NodeReport, CliError> {
    let start_ms = match start {
        Some(s) => s * 1000,
        None => SystemClock.now_ms(),
    };
    let clock = Arc::new(SimClock::at_ms(start_ms));
    let mut node = open_node(booth, clock.clone())?;
    let sim = run_script(&mut node, &clock, start_ms, swipes);
    let mut report = NodeReport {
        booth_id: booth.booth_id.to_string(),
        captured: sim.captured.len(),
        ignored: sim.ignored,
        faults: sim.faults,
        ..Default::default()
    };
    // The capture has already succeeded once spooled; delivery problems
    // only leave entries behind for the next run.
    let delivery = node.flush_spool_now(&mut uplink(booth))?;
    report.absorb(delivery);
    report.deferred = node.spool().len()?;
    Ok(report)
}

pub fn simulate(booth: &Booth, script: &Path, start: Option<i64>, format: ReportFormat) -> Result<(), CliError> {
    let file = std::fs::File::open(script).map_err(|e| CliError::io(&format!("opening {}", script.display()), e))?;
    let swipes = parse_script(file)
        .map_err(|e| CliError::new("script", format!("{}: {e}", script.display())))?;
    print(format, &replay(booth, &swipes, start)?);
    Ok(())
}

/// Cards are swiped one sequence apart, starting now.
pub fn swipe(booth: &Booth, cards: &[String], format: ReportFormat) -> Result<(), CliError> {
    let gap = (booth.frame_latency * 7).as_secs_f64() + 1.0;
    let swipes: Vec<ScriptedSwipe> = cards
        .iter()
        .enumerate()
        .map(|(i, c)| ScriptedSwipe {
            offset_seconds: i as f64 * gap,
            card_id: CardId::new(c.as_str()),
        })
        .collect();
    print(format, &replay(booth, &swipes, None)?);
    Ok(())
}

pub fn flush(booth: &Booth, format: ReportFormat) -> Result<(), CliError> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let mut node = open_node(booth, clock)?;
    let mut report = NodeReport {
        booth_id: booth.booth_id.to_string(),
        ..Default::default()
    };
    let delivery = node.flush_spool_now(&mut uplink(booth))?;
    report.absorb(delivery);
    report.deferred = node.spool().len()?;
    print(format, &report);
    Ok(())
}

/// Card ids arrive one per line on stdin; end of input stops the booth.
pub fn daemon(booth: &Booth, flush_interval: u64, format: ReportFormat) -> Result<(), CliError> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let node = open_node(booth, clock.clone())?;
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            let card = line.trim();
            if card.is_empty() {
                continue;
            }
            if tx.send((CardId::new(card), clock.now_ms())).is_err() {
                break;
            }
        }
    });
    let summary = run_daemon(node, uplink(booth), rx, Duration::from_secs(flush_interval.max(1)))?;
    let report = NodeReport {
        booth_id: booth.booth_id.to_string(),
        captured: summary.captured,
        ignored: summary.ignored,
        faults: summary.faults,
        delivered: summary.delivered,
        deferred: summary.pending,
        ..Default::default()
    };
    print(format, &report);
    Ok(())
}
