use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn addsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_addsys"))
        .args(args)
        .env_remove("ADDSYS_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn profile_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.txt", "3: 1 2 -1 -2 1 1\n2: 1 -1 1 -1 2 -2\n");
    let out = addsys(&["profile", "--system", sys.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["mu"], serde_json::json!([1]));
    assert_eq!(v["nu"], serde_json::json!([2]));
}

#[test]
fn singular_system_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sing.txt", "2: 1 1 1\n2: 2 2 1\n");
    let out = addsys(&["check", "--system", sys.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["holds"], false);

    let out = addsys(&["verify", "--system", sys.to_str().unwrap(), "--P-list", "4"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.txt", "2: 1 0 1\n");
    let out = addsys(&["profile", "--system", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero coefficient"));

    let out = addsys(&["profile", "--system", "/nonexistent/sys.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "q.txt", "2: 1 1 1 1 -1 -1\n");
    let out = addsys(&["count", "--system", sys.to_str().unwrap(), "--P-list", "100000", "--method", "brute"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn verify_csv_with_cache() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "q.txt", "2: 1 1 1 1 -1 -1\n");
    let cache = dir.path().join("cache");
    let args = [
        "verify",
        "--system",
        sys.to_str().unwrap(),
        "--P-list",
        "4,8",
        "--format",
        "csv",
        "--prime-bound",
        "5",
        "--depth",
        "3",
        "--samples",
        "100000",
        "--threads",
        "1",
        "--cache-dir",
        cache.to_str().unwrap(),
    ];
    let first = addsys(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = stdout(&first);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "P,N,ratio,wall_time");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("4,68,"));
    assert!(std::fs::read_dir(&cache).unwrap().count() > 0);

    let second = addsys(&args);
    assert_eq!(stdout(&second), text);
}

#[test]
fn bounds_for_degree_list() {
    let out = addsys(&["bounds", "--degrees", "3,3,2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["default"]["tg_star_upper"], 25);
}
