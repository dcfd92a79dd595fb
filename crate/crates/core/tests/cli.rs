use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_branchlab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("branchlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn without_seconds(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
}

#[test]
fn bad_config_exits_3() {
    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "theta = 0.7\n").unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(run(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run(&["energy", "--r", "0.25"]).status.code(), Some(3));
    assert_eq!(run(&["build", "--kind", "thm4"]).status.code(), Some(3));
}

#[test]
fn empty_eps_list_gives_header_only() {
    let cfg = scratch("empty.cfg");
    std::fs::write(&cfg, "eps_list =\n").unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "eps,kind,theta,r,r2,elastic,surface,total,cells,seconds\n");
}

#[test]
fn sweep_is_reproducible_and_fits() {
    let cfg = scratch("small.cfg");
    std::fs::write(&cfg, "eps_list = 1e-4, 3e-4, 1e-3, 3e-3, 1e-2\nkind = thm4\n").unwrap();
    let a = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    let b = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success());
    let (a, b) = (String::from_utf8(a.stdout).unwrap(), String::from_utf8(b.stdout).unwrap());
    assert_eq!(a.lines().count(), 6);
    assert_eq!(without_seconds(&a), without_seconds(&b));

    let csv = scratch("small.csv");
    std::fs::write(&csv, &a).unwrap();
    let fit = run(&["fit", csv.to_str().unwrap()]);
    assert!(fit.status.success());
    let v: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
    let slope = v["slope"].as_f64().unwrap();
    assert!(slope > 0.5 && slope < 0.8, "slope {slope}");

    // three points cannot be fitted
    let short: String = a.lines().take(4).map(|l| format!("{l}\n")).collect();
    std::fs::write(&csv, short).unwrap();
    assert_eq!(run(&["fit", csv.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn build_writes_parseable_json() {
    let path = scratch("fo.json");
    let out = run(&["build", "--kind", "first", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["kind"], "FirstOrderAux");
    assert!(!doc["cells"].as_array().unwrap().is_empty());
}

#[test]
fn energy_csv_has_header_and_row() {
    let out = run(&["energy", "--kind", "first", "--eps", "0.01", "--csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}
