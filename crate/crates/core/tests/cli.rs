use std::path::PathBuf;
use std::process::{Command, Output};

fn fsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsl")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("rsrc-fsl-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bounds_reproduce_example_one() {
    let o = fsl(&["bounds", "-d", "3", "-l", "1", "--leak", "0,1/4,2/5,1/2,1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for row in [
        ["0 ", "5/3 ", "1 ", "3 "],
        ["1/4 ", "5/4 ", "3/4 ", "9/4 "],
        ["2/5 ", "1 ", "3/5 ", "9/5 "],
        ["1/2 ", "1 ", "1/2 ", "3/2 "],
    ] {
        let line = out.lines().find(|l| l.starts_with(row[0])).unwrap();
        let cells: Vec<&str> = line.split_whitespace().step_by(2).collect();
        let want: Vec<&str> = row.iter().map(|s| s.trim()).collect();
        assert_eq!(&cells[..4], &want[..]);
    }
    assert!(out.lines().any(|l| l.starts_with("1 (1.0000)") && l.ends_with("saturated")));
}

#[test]
fn bounds_at_full_leak_and_top_lambda() {
    let o = fsl(&["bounds", "-d", "5", "-l", "4", "--leak", "0,1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("1/3 (0.3333)"), "{out}");
    assert!(out.contains("5/3 (1.6667)"), "{out}");
    assert_eq!(fsl(&["bounds", "-d", "3", "-l", "3"]).status.code(), Some(4));
}

#[test]
fn examples_pass_and_unknown_names_are_config_errors() {
    for name in ["rsrc-ex1", "rsrc-ex2", "fsl-round"] {
        let o = fsl(&["example", name]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).trim_end().ends_with("PASS"));
    }
    assert_eq!(fsl(&["example", "nope"]).status.code(), Some(4));
}

#[test]
fn sample_scenarios_pass() {
    for name in ["motivating.json", "random.json", "byzantine.json"] {
        let o = fsl(&["run", "--scenario", &scenario(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
    }
}

#[test]
fn seed_override_changes_the_transcript_only() {
    let a = stdout(&fsl(&["run", "--scenario", &scenario("random.json"), "--seed", "1"]));
    let b = stdout(&fsl(&["run", "--scenario", &scenario("random.json"), "--seed", "2"]));
    let hash = |s: &str| s.lines().find(|l| l.starts_with("transcript sha256")).unwrap().to_string();
    let statuses = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.contains(": "))
            .filter_map(|l| l.split_whitespace().nth(1).map(str::to_string))
            .collect()
    };
    assert_ne!(hash(&a), hash(&b));
    assert_eq!(statuses(&a), statuses(&b));
}

#[test]
fn report_embeds_seed_and_params() {
    let report = std::env::temp_dir().join(format!("rsrc-fsl-cli-{}-report.json", std::process::id()));
    let o = fsl(&["run", "--scenario", &scenario("motivating.json"), "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    std::fs::remove_file(&report).unwrap();
    assert_eq!(v["schema"], "rsrc-fsl/round-report/v1");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["params"]["n"], 4);
    assert_eq!(v["union"], serde_json::json!([1, 3, 4]));
}

#[test]
fn invalid_configs_exit_with_four() {
    let e_above_j = temp(
        "ej.json",
        r#"{"schema":"rsrc-fsl/scenario/v1","params":{"n":5,"c":4,"k":2,"l":2,"d":3,"j":1,"e":2,"delta":"1/2"}}"#,
    );
    let o = fsl(&["run", "--scenario", &e_above_j]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("collusion bound"));

    let unknown = temp(
        "unknown.json",
        r#"{"schema":"rsrc-fsl/scenario/v1","params":{"n":4,"c":4,"k":2,"l":2,"d":3,"j":2,"e":2,"delta":"1/2","x":1}}"#,
    );
    let o = fsl(&["run", "--scenario", &unknown]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params"));

    assert_eq!(fsl(&["run", "--scenario", &scenario("motivating.json"), "--modulus", "12"]).status.code(), Some(4));
    assert_eq!(
        fsl(&["run", "--scenario", &scenario("motivating.json"), "--faults", r#"{"failed_dbs":[9]}"#]).status.code(),
        Some(4)
    );
}

#[test]
fn infeasible_scenarios_exit_with_three() {
    let tight = temp(
        "tight.json",
        r#"{"schema":"rsrc-fsl/scenario/v1","params":{"n":4,"c":4,"k":2,"l":2,"d":3,"j":2,"e":2,"delta":"1/4",
            "plan":{"kind":"single","extra_messages":1}}}"#,
    );
    assert_eq!(fsl(&["run", "--scenario", &tight]).status.code(), Some(3));
    let o = fsl(&[
        "run",
        "--scenario",
        &scenario("motivating.json"),
        "--faults",
        r#"{"failed_dbs":[1,2]}"#,
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
