use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

fn psgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psgraph")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const FAN_IN: &str = r#"{
  "psgraph_version": 1,
  "name": "fan-in",
  "graph": {
    "vertices": [
      {"id": "a", "kind": "wire", "type": "any"},
      {"id": "b", "kind": "wire", "type": "any"},
      {"id": "c", "kind": "wire", "type": "any"}
    ],
    "edges": [
      {"source": "a", "target": "c"},
      {"source": "b", "target": "c"}
    ]
  }
}"#;

#[test]
fn run_reports_goals_per_output() {
    let o = psgraph(&["run", "--strategy", "intro-v1", "--goal", "A --> B"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "other: [A ⊢ B]\n");
}

#[test]
fn run_without_enf_exits_one() {
    let o = psgraph(&["run", "--strategy", "intro-v1", "--goal", "A --> B & C"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("no ENF"));
}

#[test]
fn run_accepts_order_fuel_and_json() {
    let o = psgraph(&["run", "--strategy", "intro-v2", "--goal", "A --> B & C", "--order", "oldest", "--fuel", "50", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let goals = &v["results"][0]["outputs"][0]["goals"];
    assert_eq!(goals.as_array().unwrap().len(), 2);
    let o = psgraph(&["run", "--strategy", "intro-v2", "--goal", "A --> B & C", "--fuel", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("1 out of fuel"));
}

#[test]
fn usage_and_parse_errors_exit_two() {
    assert_eq!(psgraph(&["run", "--strategy", "intro-v1"]).status.code(), Some(2));
    assert_eq!(psgraph(&["run", "--strategy", "intro-v1", "--goal", "A &"]).status.code(), Some(2));
    assert_eq!(psgraph(&["run", "--strategy", "missing", "--goal", "A"]).status.code(), Some(2));
    assert_eq!(psgraph(&["run", "--strategy", "intro-v1", "--goal", "A", "--order", "sideways"]).status.code(), Some(2));
    assert_eq!(psgraph(&["run", "--strategy", "intro-v1", "--goal", "A", "--fuel", "lots"]).status.code(), Some(2));
}

#[test]
fn check_reports_fan_in() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fan.json");
    std::fs::write(&f, FAN_IN).unwrap();
    let o = psgraph(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("error[fan-in] at graph.vertices[2]"), "{out}");
    assert!(out.contains("fan.json:8:8:"), "{out}");
}

#[test]
fn check_distinguishes_syntax_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("broken.json");
    std::fs::write(&f, "{\"psgraph_version\": 1,").unwrap();
    let o = psgraph(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("error[parse]"));
    assert_eq!(psgraph(&["check", "/nonexistent/file.json"]).status.code(), Some(2));
}

#[test]
fn exported_files_check_clean_and_run_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let o = psgraph(&["export", "intro-v3"]);
    assert_eq!(o.status.code(), Some(0));
    // Renamed so it does not clash with the bundled copy.
    let text = stdout(&o).replace("\"name\": \"intro-v3\"", "\"name\": \"copy\"");
    let f = dir.path().join("copy.json");
    std::fs::write(&f, text).unwrap();
    let c = psgraph(&["check", f.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
    let goal = "A --> B & (!x. P x)";
    let a = psgraph(&["run", "--strategy", f.to_str().unwrap(), "--goal", goal]);
    let b = psgraph(&["run", "--strategy", "intro-v3", "--goal", goal]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), "all: [A ⊢ !x. P x]\nother: [A ⊢ B]\n");
}

#[test]
fn registry_directory_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&psgraph(&["export", "intro-v1"])).replace("\"name\": \"intro-v1\",", "");
    std::fs::write(dir.path().join("mine.json"), text).unwrap();
    let o = psgraph(&["--registry", dir.path().to_str().unwrap(), "list"]);
    assert!(stdout(&o).contains("mine: any -> [other, other, other]"), "{}", stdout(&o));
    let o = psgraph(&["run", "--registry", dir.path().to_str().unwrap(), "--strategy", "mine", "--goal", "A & B"]);
    assert_eq!(stdout(&o), "other: [⊢ A, ⊢ B]\n");
}

#[test]
fn export_dot_prints_a_digraph() {
    let o = psgraph(&["export-dot", "intro-v1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("digraph \"intro-v1\" {"));
    assert!(out.contains("\"split\" -> \"imp\" [taillabel=\"out1\"]"));
}

#[test]
fn serve_speaks_json_lines_on_stdio() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_psgraph"))
        .args(["serve", "--strategy", "intro-v1", "--goal", "A --> B", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        writeln!(stdin, r#"{{"cmd":"backtrack"}}"#).unwrap();
        for _ in 0..10 {
            writeln!(stdin, r#"{{"cmd":"step"}}"#).unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    let replies: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), 11);
    assert_eq!(replies[0]["error"], "history_empty");
    let enf = replies.iter().position(|r| r["is_enf"] == true).unwrap();
    assert!(replies[enf + 1..].iter().all(|r| r["error"] == "no_step"));
}

#[test]
fn serve_listens_on_a_tcp_port() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_psgraph"))
        .args(["serve", "--strategy", "induct", "--goal", "even(2*n)", "--port", &port.to_string(), "--once"])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut conn = None;
    for _ in 0..100 {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(c) => {
                conn = Some(c);
                break;
            }
            Err(_) => std::thread::sleep(Duration::from_millis(50)),
        }
    }
    let mut conn = conn.expect("server came up");
    let mut reader = BufReader::new(conn.try_clone().unwrap());
    writeln!(conn, r#"{{"cmd":"finish"}}"#).unwrap();
    let mut line = String::new();
    reader.read_line(&mut line).unwrap();
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["remaining_subgoals"][0]["goal"], "⊢ even(2*n)");
    drop(reader);
    drop(conn);
    assert!(child.wait().unwrap().success());
}
