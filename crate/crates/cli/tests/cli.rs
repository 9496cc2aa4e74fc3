mod common;

use std::fs;

use common::{json, run, stdout, write_script, Server};
use protobooth_backend::sample::capture_with_images;
use protobooth_backend::{ApiClient, CaptureFilter, Repository};

#[test]
fn fixture_then_every_figure_offline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = run(d, &["fixture", "--data-dir", "repo", "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["captures"], 82);

    let fig4 = run(d, &["analyze", "fig4", "--data-dir", "repo", "--project", "proj-0001", "--format", "csv"]);
    assert!(fig4.status.success());
    assert_eq!(stdout(&fig4).lines().count(), 83);

    let fig5 = run(d, &["analyze", "fig5", "--data-dir", "repo", "--project", "proj-0001", "--scheme", "materials", "--format", "json"]);
    let points = json(&fig5)["data"]["points"].as_array().unwrap().clone();
    let last = points.last().unwrap()[1].as_u64().unwrap();
    assert!(last <= 9);

    for fig in ["fig3", "fig4", "fig5", "matrix", "graph"] {
        let out = format!("{fig}.svg");
        let o = run(d, &["analyze", fig, "--data-dir", "repo", "--project", "proj-0001", "--seed", "3", "--out", &out]);
        assert!(o.status.success(), "{fig}: {}", String::from_utf8_lossy(&o.stderr));
        let first = fs::read(d.join(&out)).unwrap();
        run(d, &["analyze", fig, "--data-dir", "repo", "--project", "proj-0001", "--seed", "3", "--out", &out]);
        assert_eq!(first, fs::read(d.join(&out)).unwrap(), "{fig} not deterministic");
    }

    let o = run(d, &["analyze", "fig5", "--data-dir", "repo", "--scheme", "colours", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "unknown_scheme");
    let o = run(d, &["analyze", "fig4", "--data-dir", "repo", "--project", "proj-4242"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_bulk_flags_injected_session() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = Repository::open_dir(tmp.path().join("repo")).unwrap();
    for i in 0..25 {
        let (rec, img) = capture_with_images(&format!("bulk-{i:02}"), "card-9", 1_600_000_000 + i * 20);
        repo.ingest(&rec, &img).unwrap();
    }
    for i in 0..25 {
        let (rec, img) = capture_with_images(&format!("week-{i:02}"), "card-8", 1_600_000_000 + i * 25_000);
        repo.ingest(&rec, &img).unwrap();
    }
    drop(repo);
    let o = run(tmp.path(), &["analyze", "bulk", "--data-dir", "repo", "--format", "json"]);
    assert!(o.status.success());
    let sessions = json(&o)["data"].as_array().unwrap().clone();
    assert_eq!(sessions.len(), 1);
    assert_eq!(sessions[0]["count"], 25);
    assert_eq!(sessions[0]["card_id"], "card-9");
}

#[test]
fn verify_reports_forced_damage() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(d, &["fixture", "--data-dir", "repo"]);
    let o = run(d, &["verify", "--data-dir", "repo", "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["violations"].as_array().unwrap().len(), 0);

    // Hand-delete one blob file.
    let shard = fs::read_dir(d.join("repo/blobs")).unwrap().next().unwrap().unwrap().path();
    let blob = fs::read_dir(&shard).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(blob).unwrap();
    let o = run(d, &["verify", "--data-dir", "repo", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o)["violations"].as_array().unwrap().clone();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0]["kind"], "missing_blob");
}

#[test]
fn verify_reports_reversed_edge() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(d, &["fixture", "--data-dir", "repo"]);
    let path = d.join("repo/docs/graphs/proj-0001.json");
    let mut graph: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let edge = graph["edges"][0].clone();
    graph["edges"][0] = serde_json::json!({ "from": edge["to"], "to": edge["from"] });
    fs::write(&path, serde_json::to_vec_pretty(&graph).unwrap()).unwrap();

    let o = run(d, &["verify", "--data-dir", "repo"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("does not point forward in time"), "{}", stdout(&o));
}

#[test]
fn serve_is_durable_across_restart() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let server = Server::start(&data);
    let api = ApiClient::new(server.url.clone());
    assert!(api.captures(&CaptureFilter::default()).unwrap().is_empty());
    for i in 0..5 {
        let (rec, img) = capture_with_images(&format!("c{i}"), "card-1", 1_000 + i);
        api.ingest(&rec, &img).unwrap();
    }
    assert!(server.stop().success());

    let server = Server::start(&data);
    let api = ApiClient::new(server.url.clone());
    assert_eq!(api.captures(&CaptureFilter::default()).unwrap().len(), 5);
}

#[test]
fn serve_rejects_unusable_data_dir() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("file"), b"x").unwrap();
    let o = run(tmp.path(), &["serve", "--data-dir", "file", "--bind", "127.0.0.1:0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "storage");

    let o = run(tmp.path(), &["serve", "--data-dir", "ok", "--bind", "not-an-address"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn node_simulation_with_server_up() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let server = Server::start(&d.join("data"));
    let script = write_script(d, "s.csv", &[(0.0, "card-1"), (30.0, "card-2"), (60.0, "card-3")]);
    let o = common::bin()
        .current_dir(d)
        .args(["node", "--simulate", "--booth-id", "booth-1", "--spool-dir", "spool", "--format", "json", "--server", &server.url, "--swipes"])
        .arg(&script)
        .output()
        .unwrap();
    assert!(o.status.success());
    let r = json(&o);
    let receipts = r["receipts"].as_array().unwrap();
    assert_eq!(receipts.len(), 3);
    assert!(receipts.iter().all(|x| x["created"] == true && x["stored_views"] == 7));
    assert_eq!(r["deferred"], 0);
}

#[test]
fn node_spools_while_server_is_down() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    // Nothing listens on this port once the listener is dropped.
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dead = format!("http://127.0.0.1:{port}");
    // The second swipe lands mid-sequence and is ignored.
    let script = write_script(d, "s.csv", &[(0.0, "card-1"), (3.0, "card-1"), (30.0, "card-2"), (60.0, "card-3")]);
    let booth = |server: &str, extra: &[&str]| {
        let mut c = common::bin();
        c.current_dir(d)
            .args(["node", "--booth-id", "booth-2", "--spool-dir", "spool", "--format", "json", "--server", server])
            .args(extra);
        c.output().unwrap()
    };
    let o = booth(&dead, &["--simulate", "--swipes", script.to_str().unwrap()]);
    assert!(o.status.success(), "capture must not fail when the server is down");
    let r = json(&o);
    assert_eq!((r["captured"].as_u64(), r["ignored"].as_u64(), r["deferred"].as_u64()), (Some(3), Some(1), Some(3)));

    let server = Server::start(&d.join("data"));
    let o = booth(&server.url, &["--flush"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["delivered"], 3);
    let api = ApiClient::new(server.url.clone());
    assert_eq!(api.captures(&CaptureFilter::default()).unwrap().len(), 3);
}

#[test]
fn settings_from_env_and_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = common::bin()
        .current_dir(d)
        .env("PROTOBOOTH_DATA_DIR", d.join("from-env"))
        .args(["fixture", "--format", "json"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(d.join("from-env/docs/captures").is_dir());

    fs::write(d.join("protobooth.toml"), "data_dir = \"from-file\"\n").unwrap();
    assert!(run(d, &["fixture"]).status.success());
    assert!(d.join("from-file/docs/captures").is_dir());

    fs::write(d.join("bad.toml"), "data_dir = 3\n").unwrap();
    let o = run(d, &["--config", "bad.toml", "verify"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_import_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(d, &["fixture", "--data-dir", "a"]);
    let o = run(d, &["export", "--data-dir", "a", "--out", "all.tar", "--format", "json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["captures"], 82);
    let o = run(d, &["import", "all.tar", "--data-dir", "b", "--format", "json"]);
    assert_eq!(json(&o)["captures_created"], 82);
    let o = run(d, &["import", "all.tar", "--data-dir", "b", "--format", "json"]);
    assert_eq!(json(&o)["documents_written"], 0);
    assert!(run(d, &["verify", "--data-dir", "b"]).status.success());

    let a = Repository::open_dir(d.join("a")).unwrap().contents().unwrap();
    let b = Repository::open_dir(d.join("b")).unwrap().contents().unwrap();
    assert!(a == b);

    assert!(run(d, &["export", "--data-dir", "b", "--dir", "--out", "tree", "--project", "proj-0001"]).status.success());
    assert!(d.join("tree/manifest.json").is_file());
    assert!(run(d, &["import", "tree", "--data-dir", "c"]).status.success());
    assert!(run(d, &["verify", "--data-dir", "c"]).status.success());
}
