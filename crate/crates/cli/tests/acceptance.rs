//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#[path = "../../analytics/tests/oracle/mod.rs"]
mod oracle;
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use protobooth_analytics::fixture::{EXTERNAL_TESTS, FINAL_CONCEPT};
use protobooth_analytics::{
    category_matrix, cumulative_usage, detect_bulk, layout_graph, project_timeline, prototype_id,
    render, synthesize_case_fixture, weekday_scatter, CumulativeMode, Figure, Format, Tz,
    DEFAULT_THRESHOLD, DEFAULT_WINDOW_SECONDS, JITTER_BOUND,
};
use protobooth_backend::{spawn_server, ApiClient, Archive, CaptureFilter, HttpUplink, Repository};
use protobooth_core::{
    builtin_schemes, validate_capture, CaptureRecord, CardId, IngestReceipt, NodeClass, ProjectId,
    ViewAngle,
};
use protobooth_node::script::{run_script, ScriptedSwipe};
use protobooth_node::{
    CameraRig, CaptureNode, Clock, Frame, FrameRequest, MockRig, NodeState, RigError, SimClock, Spool,
    SwipeOutcome, Uplink, UplinkError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("fixture fidelity", fixture_fidelity),
        ("end-to-end capture", end_to_end_capture),
        ("state machine", state_machine),
        ("idempotency", idempotency),
        ("analytics oracles", analytics_oracles),
        ("determinism", determinism),
        ("bulk detection", bulk_detection),
        ("builtin schemes", builtin_scheme_names),
        ("export/import round trip", export_import_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into());
                Err(format!("panic: {msg}"))
            });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.2} s]");
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

// 2017-10-01, 2017-11-16, 2018-01-10 and 2018-05-16 at 00:00 UTC.
const AUTUMN_START: i64 = 1_506_816_000;
const GAP_START: i64 = 1_510_790_400;
const SPRING_START: i64 = 1_515_542_400;
const SPRING_END: i64 = 1_526_428_800;

fn fixture_fidelity() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let t = Instant::now();
    let out = common::run(tmp.path(), &["fixture", "--data-dir", "repo", "--format", "json"]);
    let elapsed = t.elapsed();
    ensure(out.status.success(), || {
        format!("fixture command failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    ensure(elapsed < Duration::from_secs(1), || format!("fixture took {elapsed:?}"))?;

    let repo = Repository::open_dir(tmp.path().join("repo")).map_err(|e| e.to_string())?;
    let snap = repo.snapshot();
    let project = ProjectId::new("proj-0001");
    let caps = snap.project_captures(&project);
    ensure(caps.len() == 82 && snap.captures.len() == 82, || {
        format!("{} captures, {} in project", snap.captures.len(), caps.len())
    })?;
    let autumn = caps.iter().filter(|c| (AUTUMN_START..GAP_START).contains(&c.timestamp)).count();
    let spring = caps.iter().filter(|c| (SPRING_START..SPRING_END).contains(&c.timestamp)).count();
    ensure(autumn > 0 && spring > 0 && autumn + spring == 82, || {
        format!("autumn {autumn}, spring {spring}, others {}", 82 - autumn - spring)
    })?;
    let in_gap = caps
        .iter()
        .filter(|c| (GAP_START..SPRING_START).contains(&c.timestamp))
        .count();
    ensure(in_gap == 0, || format!("{in_gap} captures in the Nov 16 - Jan 9 gap"))?;

    let graph = snap.graphs.get(&project).ok_or("no link graph")?;
    let external: BTreeSet<_> = graph
        .node_classes
        .iter()
        .filter(|(_, c)| **c == NodeClass::ExternalTest)
        .map(|(id, _)| id.clone())
        .collect();
    let want: BTreeSet<_> = EXTERNAL_TESTS.iter().map(|n| prototype_id(*n)).collect();
    ensure(external == want, || format!("external nodes {external:?}"))?;
    let finals: Vec<_> = graph
        .node_classes
        .iter()
        .filter(|(_, c)| **c == NodeClass::FinalConcept)
        .map(|(id, _)| id.clone())
        .collect();
    ensure(finals == [prototype_id(FINAL_CONCEPT)], || format!("final nodes {finals:?}"))?;
    let report = repo.verify().map_err(|e| e.to_string())?;
    ensure(report.is_clean(), || format!("verify: {:?}", report.violations))?;
    Ok(format!(
        "82 captures ({autumn} autumn, {spring} spring), externals 5/17/29/60/63, final p82, fixture command {:.0} ms",
        elapsed.as_secs_f64() * 1000.0
    ))
}

/// Drops one delivery in ten: half before sending, half after the server
/// has stored the capture but before the receipt arrives.
struct FlakyUplink {
    inner: HttpUplink,
    rng: ChaCha8Rng,
    injected: Arc<AtomicUsize>,
}

impl Uplink for FlakyUplink {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError> {
        let roll: f64 = self.rng.random();
        if roll < 0.05 {
            self.injected.fetch_add(1, Ordering::Relaxed);
            return Err(UplinkError::Unreachable("injected: connection refused".into()));
        }
        let result = self.inner.deliver(record, images);
        if roll < 0.10 {
            self.injected.fetch_add(1, Ordering::Relaxed);
            return Err(UplinkError::Unreachable("injected: receipt lost".into()));
        }
        result
    }
}

fn run_booth(b: usize, url: String, spool_root: &std::path::Path, injected: Arc<AtomicUsize>) -> Result<usize, String> {
    let start_ms = 1_700_000_000_000 + b as i64 * 7_000;
    let clock = Arc::new(SimClock::at_ms(start_ms));
    let rig = MockRig::new(clock.clone());
    let spool = Spool::open(spool_root.join(format!("booth-{b}"))).map_err(|e| e.to_string())?;
    let mut node = CaptureNode::new(format!("booth-{b}").into(), Box::new(rig), spool, clock.clone())
        .map_err(|e| e.to_string())?;
    let mut up = FlakyUplink {
        inner: HttpUplink::new(ApiClient::new(url)),
        rng: ChaCha8Rng::seed_from_u64(b as u64),
        injected,
    };
    let mut captured = 0;
    for i in 0..25 {
        let swipe = ScriptedSwipe {
            offset_seconds: i as f64 * 15.0,
            card_id: CardId::new(format!("card-{b}-{}", i % 3)),
        };
        let r = run_script(&mut node, &clock, start_ms, std::slice::from_ref(&swipe));
        captured += r.captured.len();
        node.flush_spool(&mut up).map_err(|e| e.to_string())?;
    }
    for _ in 0..50 {
        if node.spool().is_empty().map_err(|e| e.to_string())? {
            break;
        }
        node.flush_spool_now(&mut up).map_err(|e| e.to_string())?;
    }
    let left = node.spool().len().map_err(|e| e.to_string())?;
    ensure(left == 0, || format!("booth {b} still has {left} spooled"))?;
    Ok(captured)
}

fn end_to_end_capture() -> Result<String, String> {
    let t = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let repo = Arc::new(Repository::open_dir(tmp.path().join("data")).map_err(|e| e.to_string())?);
    let server = spawn_server(repo.clone(), "127.0.0.1:0".parse().unwrap()).map_err(|e| e.to_string())?;
    let injected = Arc::new(AtomicUsize::new(0));
    let booths: Vec<_> = (0..4)
        .map(|b| {
            let url = server.base_url();
            let root = tmp.path().join("spools");
            let injected = injected.clone();
            std::thread::spawn(move || run_booth(b, url, &root, injected))
        })
        .collect();
    let mut captured = 0;
    for h in booths {
        captured += h.join().map_err(|_| "booth thread panicked".to_string())??;
    }
    ensure(captured == 100, || format!("booths captured {captured}"))?;

    let api = ApiClient::new(server.base_url());
    let all = api.captures(&CaptureFilter::default()).map_err(|e| e.to_string())?;
    let ids: BTreeSet<_> = all.iter().map(|c| c.record.capture_id.clone()).collect();
    ensure(all.len() == 100 && ids.len() == 100, || {
        format!("{} records, {} distinct", all.len(), ids.len())
    })?;
    for c in &all {
        let n = c.record.views.iter().count();
        ensure(n == 7, || format!("{} has {n} views", c.record.capture_id))?;
        let front = api
            .view_image(&c.record.capture_id, ViewAngle::Front)
            .map_err(|e| e.to_string())?;
        let want = c.record.views.get(ViewAngle::Front).ok_or("no front view")?;
        ensure(want.matches(&front), || format!("{} front image differs", c.record.capture_id))?;
    }
    let report = api.verify().map_err(|e| e.to_string())?;
    ensure(report.is_clean(), || format!("verify: {:?}", report.violations))?;
    let injected = injected.load(Ordering::Relaxed);
    ensure(injected > 0, || "no failures were injected".into())?;
    server.shutdown().map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100 records x 7 views, 0 duplicates, 0 violations, {injected} injected uplink failures"
    ))
}

/// Mock rig whose failing camera can be changed from outside.
struct SwitchRig(Arc<Mutex<MockRig>>);

impl CameraRig for SwitchRig {
    fn resolution(&self) -> (u32, u32) {
        self.0.lock().unwrap().resolution()
    }

    fn acquire(&mut self, request: FrameRequest<'_>) -> Result<Frame, RigError> {
        self.0.lock().unwrap().acquire(request)
    }
}

/// Accepts a random half of deliveries.
struct CoinUplink(ChaCha8Rng);

impl Uplink for CoinUplink {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        _images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError> {
        if self.0.random_bool(0.5) {
            Ok(IngestReceipt {
                capture_id: record.capture_id.clone(),
                created: true,
                stored_views: 7,
            })
        } else {
            Err(UplinkError::Unreachable("coin".into()))
        }
    }
}

fn spool_is_whole(spool: &Spool) -> Result<usize, String> {
    let entries = spool.entries().map_err(|e| format!("spool unreadable: {e}"))?;
    for e in &entries {
        validate_capture(&e.record).map_err(|v| format!("{}: {v:?}", e.record.capture_id))?;
        let images = spool.load_images(&e.record).map_err(|err| format!("{}: {err}", e.record.capture_id))?;
        ensure(images.len() == 7, || format!("{} has {} images", e.record.capture_id, images.len()))?;
        for (angle, image) in e.record.views.iter() {
            ensure(image.matches(&images[&angle]), || format!("{} {angle} image mismatch", e.record.capture_id))?;
        }
    }
    Ok(entries.len())
}

fn state_machine() -> Result<String, String> {
    const SEQUENCES: u64 = 10_000;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut transitions = 0usize;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in 0..SEQUENCES {
        let mut rng = ChaCha8Rng::seed_from_u64(seq);
        let dir = tmp.path().join(format!("s{seq}"));
        let clock = Arc::new(SimClock::at_unix(1_600_000_000));
        let rig = Arc::new(Mutex::new(MockRig::new(clock.clone()).with_frame_latency(Duration::from_millis(
            rng.random_range(0..=1500),
        ))));
        let spool = Spool::open(&dir).map_err(|e| e.to_string())?;
        let mut node = CaptureNode::new("booth-sm".into(), Box::new(SwitchRig(rig.clone())), spool.clone(), clock.clone())
            .map_err(|e| e.to_string())?;
        let seen = Arc::new(Mutex::new(Vec::new()));
        {
            let seen = seen.clone();
            node.on_transition(move |a, b| seen.lock().unwrap().push((a, b)));
        }
        let mut uplink = CoinUplink(ChaCha8Rng::seed_from_u64(seq ^ 0xabcdef));
        let len = rng.random_range(1..=8);
        for _ in 0..len {
            let before = spool.entries().map_err(|e| e.to_string())?.len();
            match rng.random_range(0..10) {
                0..=4 => {
                    let delta: i64 = rng.random_range(-9_000..20_000);
                    let now = clock.now_ms();
                    if delta > 0 {
                        clock.advance_to(now + delta);
                    }
                    let state_before = node.state();
                    let out = node.swipe_at(&CardId::new("card"), now + delta);
                    let after = spool.entries().map_err(|e| e.to_string())?.len();
                    match out {
                        SwipeOutcome::Captured { .. } => {
                            *counts.entry("captured").or_default() += 1;
                            ensure(after == before + 1, || format!("seq {seq}: capture did not spool"))?;
                        }
                        SwipeOutcome::Ignored(_) => {
                            *counts.entry("ignored").or_default() += 1;
                            ensure(after == before, || format!("seq {seq}: ignored swipe spooled"))?;
                        }
                        SwipeOutcome::Fault(_) => {
                            *counts.entry("fault").or_default() += 1;
                            ensure(after == before, || format!("seq {seq}: failed capture spooled"))?;
                            ensure(node.state() == NodeState::Fault, || format!("seq {seq}: fault not entered"))?;
                        }
                    }
                    ensure(state_before != NodeState::Fault || node.state() == NodeState::Fault, || {
                        format!("seq {seq}: swipe left fault state")
                    })?;
                }
                5 | 6 => {
                    let angle = if rng.random_bool(0.5) {
                        Some(ViewAngle::ALL[rng.random_range(0..7)])
                    } else {
                        None
                    };
                    rig.lock().unwrap().set_failing_on(angle);
                }
                7 => node.reset(),
                _ => {
                    node.flush_spool_now(&mut uplink).map_err(|e| e.to_string())?;
                }
            }
            ensure(matches!(node.state(), NodeState::Idle | NodeState::Fault), || {
                format!("seq {seq}: resting in {}", node.state())
            })?;
            spool_is_whole(&spool).map_err(|e| format!("seq {seq}: {e}"))?;
        }
        let seen = seen.lock().unwrap();
        for &(a, b) in seen.iter() {
            ensure(NodeState::is_declared(a, b), || format!("seq {seq}: undeclared {a} -> {b}"))?;
        }
        transitions += seen.len();
        std::fs::remove_dir_all(&dir).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{SEQUENCES} sequences, {transitions} transitions all declared, {} captures, {} ignored, {} faults, no partial spool entry",
        counts.get("captured").unwrap_or(&0),
        counts.get("ignored").unwrap_or(&0),
        counts.get("fault").unwrap_or(&0)
    ))
}

fn fixture_repo(dir: &std::path::Path) -> Result<Repository, String> {
    let repo = Repository::open_dir(dir).map_err(|e| e.to_string())?;
    protobooth_backend::load_case_fixture(&repo, &synthesize_case_fixture(1)).map_err(|e| e.to_string())?;
    Ok(repo)
}

fn idempotency() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let source = fixture_repo(&tmp.path().join("a"))?;
    let archive = Archive::from_tar(source.export_raw(None).map_err(|e| e.to_string())?.to_tar().as_slice())
        .map_err(|e| e.to_string())?;

    let once = Repository::open_dir(tmp.path().join("once")).map_err(|e| e.to_string())?;
    once.import_archive(&archive).map_err(|e| e.to_string())?;
    let twice = Repository::open_dir(tmp.path().join("twice")).map_err(|e| e.to_string())?;
    twice.import_archive(&archive).map_err(|e| e.to_string())?;
    let second = twice.import_archive(&archive).map_err(|e| e.to_string())?;
    let third = twice.import_archive(&archive).map_err(|e| e.to_string())?;

    let a = once.contents().map_err(|e| e.to_string())?;
    let b = twice.contents().map_err(|e| e.to_string())?;
    ensure(a == b, || "state after repeated import differs from single import".into())?;
    let reopened = Repository::open_dir(tmp.path().join("twice"))
        .and_then(|r| r.contents())
        .map_err(|e| e.to_string())?;
    ensure(reopened == a, || "state on disk differs after reopening".into())?;
    ensure(second.captures_created == 0 && second.documents_written == 0 && third == second, || {
        format!("repeat imports changed something: {second:?} / {third:?}")
    })?;
    Ok(format!(
        "archive imported 1x and 3x: deep-equal state ({} captures, {} blobs), repeats wrote 0 documents",
        a.snapshot.captures.len(),
        a.blobs.len()
    ))
}

fn analytics_oracles() -> Result<String, String> {
    let mut failures = Vec::new();
    let mut largest = 0;
    for seed in 0..200 {
        let inst = oracle::random_instance(seed);
        largest = largest.max(inst.captures.len());
        failures.extend(oracle::mismatches(&inst).into_iter().map(|m| format!("seed {seed}: {m}")));
    }
    ensure(largest <= 100, || format!("instance with {largest} captures"))?;
    ensure(failures.is_empty(), || format!("{} mismatches, first: {}", failures.len(), failures[0]))?;
    Ok(format!(
        "200 instances (up to {largest} captures): cumulative_usage, column sums, reachability, detect_bulk, 0 mismatches"
    ))
}

fn shuffle(caps: &[CaptureRecord], seed: u64) -> Vec<CaptureRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = caps.to_vec();
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
    v
}

/// Every figure over one fixture, rendered in every supported format.
fn all_renderings(f: &protobooth_analytics::CaseFixture, caps: &[CaptureRecord], seed: u64) -> Result<Vec<(String, Vec<u8>)>, String> {
    let tz: Tz = "Europe/Oslo".parse().map_err(|_| "tz")?;
    let mut figs = vec![
        Figure::Weekday(weekday_scatter(caps, std::slice::from_ref(&f.project), seed, tz)),
        Figure::Timeline(project_timeline(caps, seed)),
        Figure::Graph(layout_graph(&f.graph, caps, seed).map_err(|e| e.to_string())?),
        Figure::Bulk(detect_bulk(caps, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?),
    ];
    let mut schemes = builtin_schemes();
    schemes.extend(f.schemes.iter().cloned());
    for s in &schemes {
        let a: Vec<_> = f.assignments.iter().filter(|a| a.scheme_id == s.scheme_id).collect();
        for mode in [CumulativeMode::Distinct, CumulativeMode::Summed] {
            figs.push(Figure::Cumulative(cumulative_usage(caps, a.iter().copied(), s, mode).map_err(|e| e.to_string())?));
        }
        figs.push(Figure::Matrix(category_matrix(caps, a.iter().copied(), s).map_err(|e| e.to_string())?));
    }
    let mut out = Vec::new();
    for (i, fig) in figs.iter().enumerate() {
        for format in [Format::Svg, Format::Csv, Format::Json] {
            if let Ok(bytes) = render(fig, format) {
                out.push((format!("{i}:{}.{}", fig.name(), format.extension()), bytes));
            } else if !matches!((fig, format), (Figure::Bulk(_), Format::Svg)) {
                return Err(format!("{} cannot render as {}", fig.name(), format.extension()));
            }
        }
    }
    Ok(out)
}

fn determinism() -> Result<String, String> {
    let mut compared = 0;
    let mut jitters = 0;
    for fixture_seed in [1, 2] {
        let f = synthesize_case_fixture(fixture_seed);
        ensure(f == synthesize_case_fixture(fixture_seed), || "fixture not reproducible".into())?;
        for seed in [0, 7, 42] {
            let base = all_renderings(&f, &f.captures, seed)?;
            ensure(base == all_renderings(&f, &f.captures, seed)?, || "second run differs".into())?;
            for s in 0..3 {
                let other = all_renderings(&f, &shuffle(&f.captures, s), seed)?;
                for ((name, a), (_, b)) in base.iter().zip(&other) {
                    ensure(a == b, || format!("{name} changes under shuffle {s} (seed {seed})"))?;
                }
                compared += base.len();
            }
            let pts = weekday_scatter(&f.captures, &[], seed, Tz::UTC);
            let layout = layout_graph(&f.graph, &f.captures, seed).map_err(|e| e.to_string())?;
            let values = pts.iter().map(|p| p.jitter).chain(layout.nodes.iter().map(|n| n.y));
            for j in values {
                jitters += 1;
                ensure(j.abs() <= JITTER_BOUND, || format!("jitter {j} out of bounds"))?;
            }
        }
    }
    for seed in 0..200 {
        let inst = oracle::random_instance(seed);
        for p in project_timeline(&inst.captures, seed) {
            jitters += 1;
            ensure(p.jitter.abs() <= JITTER_BOUND, || format!("jitter {} out of bounds", p.jitter))?;
        }
    }
    Ok(format!(
        "{compared} renderings byte-identical across reruns and shuffles, {jitters} jitter values within +/-{JITTER_BOUND}"
    ))
}

fn bulk_detection() -> Result<String, String> {
    let burst: Vec<_> = (0..25)
        .map(|i| oracle::record(&format!("burst-{i:02}"), "card-b", 1_600_000_000 + i * 24))
        .collect();
    let week: Vec<_> = (0..25)
        .map(|i| oracle::record(&format!("week-{i:02}"), "card-w", 1_600_000_000 + i * 7 * 86_400 / 25))
        .collect();
    let s = detect_bulk(&burst, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    ensure(s.len() == 1 && s[0].count == 25, || format!("burst gave {s:?}"))?;
    let w = detect_bulk(&week, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    ensure(w.is_empty(), || format!("spread gave {} sessions", w.len()))?;

    // The same burst hidden among the fixture's own captures.
    let f = synthesize_case_fixture(1);
    let mut all = f.captures.clone();
    all.extend(week.iter().cloned());
    let injected: Vec<_> = burst
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.card_id = f.captures[0].card_id.clone();
            c.timestamp += 0;
            c
        })
        .collect();
    all.extend(injected.iter().cloned());
    let found = detect_bulk(&all, DEFAULT_WINDOW_SECONDS, DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let ids: Vec<_> = injected.iter().map(|c| c.capture_id.clone()).collect();
    ensure(found.len() == 1 && found[0].capture_ids == ids, || format!("fixture injection gave {found:?}"))?;
    Ok(format!(
        "25 in 10 min flagged (count 25), 25 over a week not flagged, window {DEFAULT_WINDOW_SECONDS} s, threshold {DEFAULT_THRESHOLD}"
    ))
}

fn builtin_scheme_names() -> Result<String, String> {
    let want: [(&str, &[&str]); 3] = [
        (
            "materials",
            &["foam", "cardboard", "MDF", "wood", "hard plastics", "soft plastics", "metal", "electronics", "other"],
        ),
        (
            "tools",
            &["hand tools", "3D-printer", "laser cutter", "machining", "vacuum former", "computer"],
        ),
        ("disciplines", &["mechanics", "software", "electronics"]),
    ];
    let got = builtin_schemes();
    ensure(got.len() == 3, || format!("{} builtin schemes", got.len()))?;
    for ((id, cats), s) in want.iter().zip(&got) {
        ensure(s.scheme_id.as_str() == *id, || format!("scheme {} where {id} expected", s.scheme_id))?;
        ensure(s.categories == *cats, || format!("{id}: {:?}", s.categories))?;
    }
    // A fresh repository serves the same lists.
    let repo = Repository::in_memory();
    for s in &got {
        ensure(repo.scheme(&s.scheme_id).ok().as_ref() == Some(s), || format!("repository scheme {} differs", s.scheme_id))?;
    }
    Ok("materials 9, tools 6, disciplines 3, exact strings".into())
}

fn export_import_round_trip() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let source = fixture_repo(&tmp.path().join("a"))?;
    let tar = source.export_raw(None).map_err(|e| e.to_string())?.to_tar();
    let archive = Archive::from_tar(tar.as_slice()).map_err(|e| e.to_string())?;
    let target = Repository::open_dir(tmp.path().join("b")).map_err(|e| e.to_string())?;
    let report = target.import_archive(&archive).map_err(|e| e.to_string())?;
    let a = source.contents().map_err(|e| e.to_string())?;
    let b = target.contents().map_err(|e| e.to_string())?;
    ensure(a == b, || "imported repository differs from the source".into())?;
    let v = target.verify().map_err(|e| e.to_string())?;
    ensure(v.is_clean(), || format!("verify: {:?}", v.violations))?;
    let again = target.export_raw(None).map_err(|e| e.to_string())?.to_tar();
    ensure(again == tar, || "re-export is not byte-identical".into())?;
    Ok(format!(
        "{} captures, {} blobs, deep-equal, 0 violations, re-export byte-identical ({} bytes)",
        report.captures_created,
        b.blobs.len(),
        tar.len()
    ))
}
