use std::path::{Path, PathBuf};
use std::process::Command;

use covermine::fixtures;
use covermine::model::Value;
use covermine::session::SessionConfig;
use covermine_server::commands::{self, MineArgs};

fn write_planted(dir: &Path) -> PathBuf {
    let (data, _) = fixtures::planted(300, 0.05, 9);
    let names: Vec<String> = data.features().iter().map(|f| f.name.clone()).collect();
    let mut csv = format!("id,{},causes\n", names.join(","));
    for r in data.records() {
        let values: Vec<String> = names
            .iter()
            .map(|n| match &r.values[n] {
                Value::Nominal(s) => s.clone(),
                Value::Numeric(x) => x.to_string(),
            })
            .collect();
        let causes: Vec<&str> = r.causes.iter().map(String::as_str).collect();
        csv += &format!("{},{},{}\n", r.id, values.join(","), causes.join(";"));
    }
    let path = dir.join("planted.csv");
    std::fs::write(&path, csv).unwrap();
    path
}

fn mine_args(data: &Path, out: PathBuf) -> MineArgs {
    MineArgs {
        data: data.to_path_buf(),
        schema: None,
        seconds: 0.0,
        iterations: Some(80),
        agents: 1,
        seed: 42,
        out,
        log: None,
        config: SessionConfig::default(),
    }
}

#[test]
fn fixed_seed_mining_is_reproducible_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_planted(dir.path());
    let a = commands::mine(mine_args(&data, dir.path().join("a.json"))).unwrap();
    let b = commands::mine(mine_args(&data, dir.path().join("b.json"))).unwrap();
    assert!(!a.entries.is_empty());
    assert_eq!(a.digest, b.digest);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("a.json")).unwrap(),
        std::fs::read_to_string(dir.path().join("b.json")).unwrap()
    );
    let report = commands::replay(&dir.path().join("a.log"), &data, None).unwrap();
    assert!(report.matches(), "{report:?}");
    assert_eq!(report.replayed_digest, a.digest);
}

#[test]
fn zero_budget_exports_empty_front() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_planted(dir.path());
    let mut args = mine_args(&data, dir.path().join("e.json"));
    args.iterations = None;
    let e = commands::mine(args).unwrap();
    assert!(e.entries.is_empty());
    let report = commands::replay(&dir.path().join("e.log"), &data, None).unwrap();
    assert!(report.matches());
}

#[test]
fn four_agents_export_a_valid_front() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_planted(dir.path());
    let mut args = mine_args(&data, dir.path().join("m.json"));
    args.agents = 4;
    args.iterations = Some(30);
    let e = commands::mine(args).unwrap();
    assert!(!e.entries.is_empty());
    for x in &e.entries {
        for y in &e.entries {
            assert!(!x.evaluation.objectives.dominates(&y.evaluation.objectives));
        }
    }
    let report = commands::replay(&dir.path().join("m.log"), &data, None).unwrap();
    assert!(report.matches(), "{:?}", report.divergences);
}

#[test]
fn binary_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_planted(dir.path());
    let bin = env!("CARGO_BIN_EXE_covermine");
    let out = dir.path().join("front.json");

    let st = Command::new(bin)
        .args(["mine", "--data"])
        .arg(&data)
        .args(["--seconds", "0", "--iterations", "40", "--seed", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let front: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(front["magic"], "covermine/1");

    let replay = Command::new(bin)
        .args(["replay", "--log"])
        .arg(dir.path().join("front.log"))
        .arg("--data")
        .arg(&data)
        .output()
        .unwrap();
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    let report: serde_json::Value = serde_json::from_slice(&replay.stdout).unwrap();
    assert_eq!(report["replayedDigest"], front["digest"]);

    let eval = Command::new(bin)
        .args(["eval", "--data"])
        .arg(&data)
        .arg("(x2 >= 70)")
        .output()
        .unwrap();
    assert!(eval.status.success());
    let ev: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(ev["result"]["selectedCount"].as_u64().unwrap() > 0);
    assert_eq!(ev["objectives"].as_array().unwrap().len(), 3);

    let bad = Command::new(bin)
        .args(["eval", "--data"])
        .arg(&data)
        .arg("(x2 >=)")
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("syntax error"));
}

#[test]
fn export_from_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let session = covermine::session::Session::new(fixtures::fig1(), SessionConfig::default()).unwrap();
    session
        .apply(covermine::feedback::UserAction::SubmitRuleset {
            ruleset: "(size <= 3)".into(),
        })
        .unwrap();
    let snap = dir.path().join("snap.json");
    session.save_snapshot(&snap).unwrap();
    let e = commands::export(&snap).unwrap();
    assert_eq!(e.digest, session.export_front().digest);

    std::fs::write(&snap, r#"{"magic": "other/9"}"#).unwrap();
    let err = commands::export(&snap).unwrap_err();
    assert!(err.to_string().contains("other/9"));
}
