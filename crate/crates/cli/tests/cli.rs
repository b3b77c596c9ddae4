use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn facplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facplan")).args(args).output().unwrap()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_writes_the_golden_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let golden = fixture("golden_16.scn");
    let run = facplan(&["plan", path_str(&golden), "--policy", "dp0", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("baseline 109285.0, total 269982.0"), "{stdout}");
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        std::fs::read_to_string(fixture("golden_16_dp0.json")).unwrap()
    );
}

#[test]
fn naive_engine_gives_the_same_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let golden = fixture("golden_16.scn");
    let run = facplan(&["plan", path_str(&golden), "--policy", "dp0", "--naive", "--out", path_str(&out)]);
    assert!(run.status.success());
    let naive: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let lazy: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("golden_16_dp0.json")).unwrap()).unwrap();
    assert_eq!(naive["rounds"], lazy["rounds"]);
    assert!(naive["evaluations"].as_u64() > lazy["evaluations"].as_u64());
}

#[test]
fn zero_budgets_return_the_baseline() {
    let golden = fixture("golden_16.scn");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let run = facplan(&["plan", path_str(&golden), "--budgets", "0,0,0,0,0", "--out", path_str(&out)]);
    assert!(run.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["total"], v["baseline"]);
}

#[test]
fn validation_errors_exit_with_one() {
    let golden = fixture("golden_16.scn");
    let run = facplan(&["plan", path_str(&golden), "--algorithm", "multistep-advice"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).starts_with("error: "));

    assert_eq!(facplan(&["plan", path_str(&golden), "--budgets", "1,2"]).status.code(), Some(1));
    assert_eq!(facplan(&["generate", "--dims", "5x5"]).status.code(), Some(1));
    assert_eq!(facplan(&["plan"]).status.code(), Some(1));
    assert_eq!(facplan(&["serve", "--data-dir", "/definitely/not/here"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let run = facplan(&["plan", "/definitely/not/here.scn"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn malformed_scenario_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    std::fs::write(&bad, "facplan-scenario 1\nname = broken\nrows = many\n").unwrap();
    let run = facplan(&["plan", path_str(&bad)]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line 3"));
}

#[test]
fn generate_defaults_match_the_golden_region() {
    let run = facplan(&["generate"]);
    assert!(run.status.success());
    assert_eq!(
        String::from_utf8(run.stdout).unwrap(),
        std::fs::read_to_string(fixture("golden_16.scn")).unwrap()
    );
}

#[test]
fn budget_sweep_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fixture("golden_16.scn");
    let run = facplan(&["budget-sweep", path_str(&golden), "--budgets", "1,2", "--out-dir", path_str(dir.path())]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    // Header plus dp0, dp1, dp2 at two budgets.
    assert_eq!(csv.lines().count(), 7, "{csv}");
    assert!(dir.path().join("sweep.json").is_file());
    assert!(std::fs::read_to_string(dir.path().join("plot_sweep.py")).unwrap().contains("sweep.csv"));
}

#[test]
fn equity_and_retrospective_print_tables() {
    let golden = fixture("golden_16.scn");
    let run = facplan(&["equity", path_str(&golden)]);
    assert!(run.status.success());
    assert!(String::from_utf8(run.stdout).unwrap().contains("dp2"));

    let retro = fixture("retrospective_district.scn");
    let run = facplan(&["retrospective", path_str(&retro), "--district", "1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8(run.stdout).unwrap().contains("refined > greedy > advice"));
}

#[test]
fn serve_on_port_zero_answers_health_checks() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_facplan"))
        .args(["serve", "--port", "0", "--data-dir", path_str(dir.path())])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /healthz HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with("ok"), "{response}");
}
