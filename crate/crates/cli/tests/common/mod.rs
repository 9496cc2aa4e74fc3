#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_protobooth"));
    // Keep stray settings from the environment out of the tests.
    for var in ["PROTOBOOTH_CONFIG", "PROTOBOOTH_DATA_DIR", "PROTOBOOTH_BIND", "PROTOBOOTH_SERVER"] {
        c.env_remove(var);
    }
    c
}

pub fn run(cwd: &Path, args: &[&str]) -> Output {
    bin().current_dir(cwd).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stdout(o)))
}

/// `protobooth serve` on an ephemeral port.
pub struct Server {
    child: Option<Child>,
    pub url: String,
}

impl Server {
    pub fn start(data_dir: &Path) -> Server {
        let mut child = bin()
            .args(["serve", "--bind", "127.0.0.1:0", "--format", "json", "--data-dir"])
            .arg(data_dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("server starts");
        let mut out = BufReader::new(child.stdout.take().unwrap());
        let mut text = String::new();
        // Pretty JSON: read up to the closing brace.
        loop {
            let mut line = String::new();
            if out.read_line(&mut line).unwrap() == 0 {
                panic!("server exited before listening: {text}");
            }
            text.push_str(&line);
            if line.starts_with('}') {
                break;
            }
        }
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let url = format!("http://{}", v["listening"].as_str().unwrap());
        Server { child: Some(child), url }
    }

    /// SIGTERM and wait; the server should exit cleanly.
    pub fn stop(mut self) -> std::process::ExitStatus {
        self.terminate().expect("server was running")
    }

    fn terminate(&mut self) -> Option<std::process::ExitStatus> {
        let mut child = self.child.take()?;
        let _ = Command::new("kill").arg("-TERM").arg(child.id().to_string()).status();
        Some(child.wait().expect("server exits"))
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

pub fn write_script(dir: &Path, name: &str, rows: &[(f64, &str)]) -> std::path::PathBuf {
    let mut text = String::from("offset_seconds,card_id\n");
    for (o, c) in rows {
        text.push_str(&format!("{o},{c}\n"));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}
